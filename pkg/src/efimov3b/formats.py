"""Writers and parsers for the emitted text formats.

All files are plain text with '#'-prefixed header lines followed by
tab-separated data rows.  Numeric formatting is fixed (9 significant
digits via %.9g) so a rerun with identical inputs writes identical
bytes; every header carries the config digest that produced the file.
"""

from __future__ import annotations

import math

import numpy as np

from .observables import DensityGrid

__all__ = [
    "fmt",
    "write_calibration",
    "read_calibration",
    "write_surface",
    "write_spectrum",
    "read_spectrum",
    "write_radii",
    "read_radii",
    "write_density",
    "read_density",
]


def fmt(value: float) -> str:
    """Canonical 9-significant-digit decimal form."""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.9g}"


def _rows(path: str) -> tuple[list[str], list[list[str]]]:
    header, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                header.append(line[1:].strip())
            else:
                rows.append(line.split("\t"))
    return header, rows


def _header_fields(header: list[str]) -> dict[str, str]:
    out = {}
    for line in header:
        for token in line.split():
            if "=" in token:
                key, val = token.split("=", 1)
                out[key] = val
    return out


def write_calibration(
    path: str, depth: float, width: float, mu: float, d_e: float, tolerance: float
) -> None:
    """key = value record of a calibrated pair potential."""
    lines = [
        f"S = {depth!r}",
        f"b = {width!r}",
        f"mu = {mu!r}",
        f"d_E = {d_e!r}",
        f"tolerance = {tolerance!r}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_calibration(path: str) -> dict[str, float]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, raw = line.partition("=")
            out[key.strip()] = float(raw)
    return out


def write_surface(path: str, surface, cfg_digest: str = "") -> None:
    """Tab-separated rho, lambda_0..lambda_{Nch-1}, Q_00..Q_{Nch-1,Nch-1}."""
    m = surface.system.masses
    qd = np.einsum("rnn->rn", surface.q)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# d={fmt(surface.d)} S={surface.system.pair_potential.depth!r}"
            f" masses={fmt(m.m1)},{fmt(m.m2)},{fmt(m.m3)}"
            f" N_b={surface.n_funcs}"
            + (f" config={cfg_digest}" if cfg_digest else "")
            + "\n"
        )
        cols = (
            ["rho"]
            + [f"lambda_{n}" for n in range(surface.n_ch)]
            + [f"Q_{n}{n}" for n in range(surface.n_ch)]
        )
        fh.write("# " + "\t".join(cols) + "\n")
        for i in range(surface.rho.size):
            vals = [surface.rho[i], *surface.lam[i], *qd[i]]
            fh.write("\t".join(fmt(v) for v in vals) + "\n")


def write_spectrum(path: str, rows: list[dict], n_states: int, cfg_digest: str) -> None:
    """Tab-separated d, E2, E3[0..N-1]; unconverged entries become nan.

    Each row dict carries d, e2 and a list e3 (shorter lists are padded),
    plus an optional 'flag' string appended as a trailing column.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={cfg_digest}\n")
        cols = ["d", "E2"] + [f"E3_{k}" for k in range(n_states)] + ["flag"]
        fh.write("# " + "\t".join(cols) + "\n")
        for row in rows:
            e3 = list(row.get("e3", []))[:n_states]
            e3 += [math.nan] * (n_states - len(e3))
            vals = [row["d"], row["e2"], *e3]
            text = "\t".join(fmt(v) for v in vals)
            fh.write(text + "\t" + row.get("flag", "ok") + "\n")


def read_spectrum(path: str) -> tuple[dict[str, str], list[dict]]:
    header, rows = _rows(path)
    out = []
    for r in rows:
        out.append(
            {
                "d": float(r[0]),
                "e2": float(r[1]),
                "e3": [float(v) for v in r[2:-1]],
                "flag": r[-1],
            }
        )
    return _header_fields(header), out


def write_radii(path: str, rows: list[dict], cfg_digest: str) -> None:
    """Tab-separated d, set, ratio_jacobi, ratio_distance, x2, y2, s."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={cfg_digest}\n")
        fh.write("# d\tset\tratio_jacobi\tratio_distance\tx2\ty2\ts\n")
        for row in rows:
            fh.write(
                "\t".join(
                    [
                        fmt(row["d"]),
                        str(row["set"]),
                        fmt(row["ratio_jacobi"]),
                        fmt(row["ratio_distance"]),
                        fmt(row["x2"]),
                        fmt(row["y2"]),
                        fmt(row["s"]),
                    ]
                )
                + "\n"
            )


def read_radii(path: str) -> tuple[dict[str, str], list[dict]]:
    header, rows = _rows(path)
    out = []
    for r in rows:
        out.append(
            {
                "d": float(r[0]),
                "set": int(r[1]),
                "ratio_jacobi": float(r[2]),
                "ratio_distance": float(r[3]),
                "x2": float(r[4]),
                "y2": float(r[5]),
                "s": float(r[6]),
            }
        )
    return _header_fields(header), out


def write_density(path: str, grid: DensityGrid, cfg_digest: str = "") -> None:
    """Header with d, set, s and both axes, then row-major F values.

    One data line per r_y value, columns running over r_x, so the file
    shape mirrors values[j, i].  A clipping warning goes into the header
    when the estimated outside mass exceeds 1e-3.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# d={fmt(grid.d)} set={grid.set_index} s={fmt(grid.s)}"
            + (f" config={cfg_digest}" if cfg_digest else "")
            + "\n"
        )
        fh.write(
            f"# axis_x={fmt(grid.r_x[0])}:{fmt(grid.r_x[-1])}:{grid.r_x.size}"
            f" axis_y={fmt(grid.r_y[0])}:{fmt(grid.r_y[-1])}:{grid.r_y.size}\n"
        )
        if grid.clipped > 1e-3:
            fh.write(f"# warning: grid clips probability, outside={fmt(grid.clipped)}\n")
        for j in range(grid.r_y.size):
            fh.write("\t".join(fmt(v) for v in grid.values[j]) + "\n")


def read_density(path: str) -> DensityGrid:
    header, rows = _rows(path)
    meta = _header_fields(header)
    def axis(spec: str) -> np.ndarray:
        lo, hi, num = spec.split(":")
        return np.linspace(float(lo), float(hi), int(num))

    r_x = axis(meta["axis_x"])
    r_y = axis(meta["axis_y"])
    values = np.array([[float(v) for v in r] for r in rows])
    if values.shape != (r_y.size, r_x.size):
        raise ValueError(
            f"grid shape {values.shape} does not match axes "
            f"({r_y.size}, {r_x.size})"
        )
    clipped = float(meta.get("outside", 0.0))
    return DensityGrid(
        d=float(meta["d"]),
        set_index=int(meta["set"]),
        s=float(meta["s"]),
        r_x=r_x,
        r_y=r_y,
        values=values,
        clipped=clipped,
        meta={k: v for k, v in meta.items()},
    )

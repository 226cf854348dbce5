"""Command-line front end: calibrate, scan, radii, density, twobody, surface.

Every subcommand reads one config file, resolves the pair potential
(fixed depth or calibrated to a target dimension), runs the requested
pipeline and writes tab-separated files under the output directory.
Scans parallelize over dimension values with an ordered assembly step,
so the emitted bytes do not depend on the worker count.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import formats, observables, twobody
from .angular import ThreeBodySystem, build_surface, default_rho_grid
from .config import ConfigError, RunConfig, digest, validate_config
from .kinematics import distance_ratio_factor
from .radial import solve_radial

CALIBRATION_TOL = 1e-8


class NumericalError(RuntimeError):
    """A solver failed or a requested state does not exist."""


def _load_config(path: str, args) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(None, f"cannot read config: {exc}") from exc
    cfg = validate_config(text)
    if args.out is not None:
        cfg.out_dir = args.out
    if args.workers is not None:
        if args.workers <= 0:
            raise ConfigError("workers", "count must be positive")
        cfg.workers = args.workers
    if getattr(args, "state", None) is not None:
        cfg.state = args.state
    if getattr(args, "set", None) is not None:
        cfg.sets = (args.set,)
    return cfg


def _resolve_depth(cfg: RunConfig) -> float:
    if cfg.depth is not None:
        return cfg.depth
    mu = (cfg.mass_heavy * cfg.mass_light) / (cfg.mass_heavy + cfg.mass_light)
    return twobody.calibrate_depth(mu, cfg.calibrate_to, width=cfg.width)


def _system(cfg: RunConfig, depth: float) -> ThreeBodySystem:
    return ThreeBodySystem.heavy_light(cfg.mass_heavy, cfg.mass_light, depth, cfg.width)


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _solve_point(payload: tuple) -> dict:
    """One d value: two-body threshold, tower, radii of the tracked state.

    Runs inside worker processes; must stay importable at module level.
    Failures are folded into the row (flag != "ok") so a scan survives
    single bad points.
    """
    cfg, depth, d = payload
    row: dict = {"d": d, "e2": np.nan, "e3": [], "radii": [], "flag": "ok"}
    try:
        sys3 = _system(cfg, depth)
        e2 = sys3.pair_energy(d)
        row["e2"] = e2
        grid = default_rho_grid(cfg.rho_min, cfg.rho_max, cfg.rho_points)
        surf = build_surface(
            sys3, d, n_funcs=cfg.n_funcs, n_ch=cfg.n_channels,
            rho_grid=grid, pair_energy=e2,
        )
        sol = solve_radial(
            surf,
            n_states=cfg.state + 2,
            n_points=cfg.radial_points,
            rho_min=cfg.radial_min,
            rho_max=cfg.radial_max,
        )
        row["e3"] = [s.energy for s in sol.states]
        bound = sol.bound()
        if cfg.state < len(bound):
            st = bound[cfg.state]
            for set_index in cfg.sets:
                tab = observables.AngularMomentTables(surf, set_index)
                rj = observables.radii_ratio(surf, st, set_index, tables=tab)
                rd = rj * distance_ratio_factor(sys3.masses, set_index)
                for s in cfg.s_values:
                    r = observables.msr_jacobi(surf, st, set_index, s=s, tables=tab)
                    row["radii"].append(
                        {
                            "d": d,
                            "set": set_index,
                            "ratio_jacobi": rj,
                            "ratio_distance": rd,
                            "x2": r.x2,
                            "y2": r.y2,
                            "s": s,
                        }
                    )
        else:
            row["flag"] = "unbound"
    except Exception as exc:  # noqa: BLE001 - flagged row, scan continues
        row["flag"] = "error: " + " ".join(str(exc).split())
    return row


def _solve_many(cfg: RunConfig, depth: float, dims: list[float]) -> list[dict]:
    payloads = [(cfg, depth, d) for d in dims]
    if cfg.workers == 1 or len(payloads) == 1:
        return [_solve_point(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_solve_point, payloads, chunksize=1))


def cmd_calibrate(cfg: RunConfig) -> int:
    if cfg.calibrate_to is None:
        raise ConfigError("potential.calibrate_to", "calibrate needs a target dimension")
    depth = _resolve_depth(cfg)
    mu = (cfg.mass_heavy * cfg.mass_light) / (cfg.mass_heavy + cfg.mass_light)
    achieved = twobody.critical_dimension(
        twobody.GaussianPotential(depth, cfg.width), mu
    )
    if abs(achieved - cfg.calibrate_to) > CALIBRATION_TOL:
        raise NumericalError(
            f"calibration missed the target: {achieved} vs {cfg.calibrate_to}"
        )
    path = _out(cfg, "calibration.txt")
    formats.write_calibration(
        path, depth, cfg.width, mu, achieved, CALIBRATION_TOL
    )
    print(f"wrote {path} (S = {depth!r})")
    return 0


def cmd_twobody(cfg: RunConfig) -> int:
    depth = _resolve_depth(cfg)
    pot = twobody.GaussianPotential(depth, cfg.width)
    mu = (cfg.mass_heavy * cfg.mass_light) / (cfg.mass_heavy + cfg.mass_light)
    path = _out(cfg, "twobody.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={digest(cfg)}\n")
        fh.write("# d\tn_bound\tE2\n")
        for d in cfg.dimensions():
            energies = twobody.bound_state_energies(pot, mu, d)
            e2 = energies[-1] if energies.size else 0.0
            fh.write(
                f"{formats.fmt(d)}\t{energies.size}\t{formats.fmt(float(e2))}\n"
            )
    print(f"wrote {path}")
    return 0


def cmd_surface(cfg: RunConfig) -> int:
    depth = _resolve_depth(cfg)
    sys3 = _system(cfg, depth)
    code = 0
    for d in cfg.dimensions():
        grid = default_rho_grid(cfg.rho_min, cfg.rho_max, cfg.rho_points)
        surf = build_surface(
            sys3, d, n_funcs=cfg.n_funcs, n_ch=cfg.n_channels, rho_grid=grid
        )
        path = _out(cfg, f"surface_d{d:g}.tsv")
        formats.write_surface(path, surf, digest(cfg))
        print(f"wrote {path}")
    return code


def cmd_scan(cfg: RunConfig) -> int:
    dims = cfg.dimensions()
    if not dims:
        raise ConfigError("dimension.range", "empty scan")
    depth = _resolve_depth(cfg)
    rows = _solve_many(cfg, depth, dims)
    n_states = max((len(r["e3"]) for r in rows), default=0)
    spath = _out(cfg, "spectrum.tsv")
    formats.write_spectrum(spath, rows, n_states, digest(cfg))
    radii_rows = [rr for row in rows for rr in row["radii"]]
    rpath = _out(cfg, "radii.tsv")
    formats.write_radii(rpath, radii_rows, digest(cfg))
    bad = sum(r["flag"].startswith("error") for r in rows)
    print(f"wrote {spath} and {rpath} ({len(rows)} points, {bad} flagged)")
    return 0


def cmd_radii(cfg: RunConfig) -> int:
    depth = _resolve_depth(cfg)
    rows = _solve_many(cfg, depth, cfg.dimensions())
    radii_rows = [rr for row in rows for rr in row["radii"]]
    if not radii_rows:
        flags = {r["flag"] for r in rows}
        raise NumericalError(f"no bound state to measure (flags: {sorted(flags)})")
    path = _out(cfg, "radii.tsv")
    formats.write_radii(path, radii_rows, digest(cfg))
    print(f"wrote {path}")
    return 0


def cmd_density(cfg: RunConfig) -> int:
    depth = _resolve_depth(cfg)
    cfg_digest = digest(cfg)
    wrote = []
    for d in cfg.dimensions():
        sys3 = _system(cfg, depth)
        e2 = sys3.pair_energy(d)
        grid = default_rho_grid(cfg.rho_min, cfg.rho_max, cfg.rho_points)
        surf = build_surface(
            sys3, d, n_funcs=cfg.n_funcs, n_ch=cfg.n_channels,
            rho_grid=grid, pair_energy=e2,
        )
        sol = solve_radial(
            surf,
            n_states=cfg.state + 2,
            n_points=cfg.radial_points,
            rho_min=cfg.radial_min,
            rho_max=cfg.radial_max,
        )
        bound = sol.bound()
        if cfg.state >= len(bound):
            raise NumericalError(f"state not bound at d = {d:g}")
        st = bound[cfg.state]
        for set_index in cfg.sets:
            tab = observables.AngularMomentTables(surf, set_index)
            for s in cfg.s_values:
                radii = observables.msr_jacobi(surf, st, set_index, s=s, tables=tab)
                ax_x, ax_y = observables.default_density_axes(
                    radii, cfg.density_points, cfg.density_points, cfg.density_span
                )
                gridded = observables.density_grid(
                    surf, st, set_index, ax_x, ax_y, s=s
                )
                name = f"density_d{d:g}_set{set_index}"
                if s != 1.0:
                    name += f"_s{s:g}"
                path = _out(cfg, name + ".tsv")
                formats.write_density(path, gridded, cfg_digest)
                wrote.append(path)
    print(f"wrote {len(wrote)} grid files under {cfg.out_dir}")
    return 0


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "twobody": cmd_twobody,
    "surface": cmd_surface,
    "scan": cmd_scan,
    "radii": cmd_radii,
    "density": cmd_density,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="efimov3b",
        description="Three-body bound states at continuous dimension",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--state", type=int, default=None, help="state index override")
        p.add_argument("--set", type=int, choices=(1, 2), default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config, args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

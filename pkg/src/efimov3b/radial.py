"""Coupled hyperradial equations on the adiabatic surface.

The channel system solved here is

    -(D + P)^2 f + [(lam_n + C_d)/rho^2] f + sigma f = 2 E f,
    C_d = (2d-1)(2d-3)/4,   sigma = P' + P^2 - Q,

which is the standard symmetric regrouping of
-f'' - 2 P f' - Q f + (lam + C_d) f / rho^2 = 2 E f. The discretization
works on g = sqrt(rho) f over t = ln rho, where the whole problem becomes
a symmetric banded eigenproblem with an identity mass matrix:

    kinetic  : int e^{-2t} | g' - g/2 + e^t P g |^2 dt   (interval midpoints)
    potential: int e^{-2t} g^T [diag(lam + C_d) + rho^2 sigma] g dt  (nodes)

Energies are reported as E (the eigenvalues of the forms are 2E) and can
be Richardson-extrapolated from a grid pair (h, h/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eig_banded, solve_banded

from .angular import AdiabaticSurface, hyperradial_barrier_coeff

__all__ = [
    "RadialSolution",
    "BoundState",
    "effective_potentials",
    "solve_radial",
    "bound_states",
    "tower_ratios",
]


@dataclass
class BoundState:
    """One three-body level: energy, channel functions, bookkeeping flags."""

    energy: float
    energy_coarse: float
    rho: np.ndarray
    f: np.ndarray  # (n_rho, n_ch), unit L2 norm over d rho
    nodes: int
    tail_fraction: float
    index: int

    @property
    def converged_estimate(self) -> float:
        """Richardson value from the (h, h/2) pair (equals energy when off)."""
        return self.energy

    def grid_error(self) -> float:
        return abs(self.energy - self.energy_coarse)


@dataclass
class RadialSolution:
    surface: AdiabaticSurface
    states: list[BoundState]
    threshold: float  # two-body energy the deepest channel flows to
    meta: dict = field(default_factory=dict)

    def bound(self, margin: float = 0.0) -> list[BoundState]:
        return [s for s in self.states if s.energy < self.threshold - margin]


def effective_potentials(surface: AdiabaticSurface) -> np.ndarray:
    """Adiabatic channel potentials W_n = (lam_n + C_d)/rho^2 - Q_nn."""
    c_d = hyperradial_barrier_coeff(surface.d)
    qd = np.einsum("rnn->rn", surface.q)
    return (surface.lam + c_d) / (surface.rho**2)[:, None] - qd


def _band_assemble(tg, lam, pmat, sig, c_d, include_coupling):
    """Symmetric band (lower form) of the forms above on the grid tg."""
    n, nc = lam.shape
    h = tg[1] - tg[0]
    rho = np.exp(tg)
    hb = 2 * nc - 1
    band = np.zeros((hb + 1, n * nc))

    # nodal potential blocks
    diag_blocks = np.empty((n, nc, nc))
    for i in range(n):
        m = np.diag(lam[i] + c_d).astype(float)
        m += (rho[i] ** 2) * sig[i]
        diag_blocks[i] = h * math.exp(-2.0 * tg[i]) * m

    # midpoint kinetic blocks
    tm = 0.5 * (tg[:-1] + tg[1:])
    rhom = np.exp(tm)
    eye = np.eye(nc)
    for i in range(n - 1):
        pm = 0.5 * (pmat[i] + pmat[i + 1]) if include_coupling else np.zeros((nc, nc))
        mm = rhom[i] * pm - 0.5 * eye
        a = -eye / h + 0.5 * mm
        b = eye / h + 0.5 * mm
        wgt = h * math.exp(-2.0 * tm[i])
        diag_blocks[i] += wgt * (a.T @ a)
        diag_blocks[i + 1] += wgt * (b.T @ b)
        off = wgt * (a.T @ b)  # couples node i to node i+1
        for p in range(nc):
            for qq in range(nc):
                r_idx = i * nc + p
                c_idx = (i + 1) * nc + qq
                band[c_idx - r_idx, r_idx] += off[p, qq]

    for i in range(n):
        for p in range(nc):
            for qq in range(p, nc):
                r_idx = i * nc + p
                c_idx = i * nc + qq
                band[c_idx - r_idx, r_idx] += diag_blocks[i][p, qq]
    return band / h  # identity mass: eigenvalues are 2E


def _banded_lowest(band, n_want):
    """Lowest eigenpairs of a symmetric band (lower form) at large N.

    Asking LAPACK for eigenvectors of a banded matrix accumulates a dense
    N x N transform (O(N^3)); instead take eigenvalues only and recover
    each vector by banded inverse iteration, which is O(N b^2) per state.
    """
    hb, n = band.shape[0] - 1, band.shape[1]
    n_want = min(n_want, n)
    vals = eig_banded(
        band, lower=True, eigvals_only=True, select="i",
        select_range=(0, n_want - 1),
    )
    ab = np.zeros((2 * hb + 1, n))
    for k in range(hb + 1):
        rng = np.arange(n - k)
        ab[hb + k, rng] = band[k, : n - k]
        if k:
            ab[hb - k, rng + k] = band[k, : n - k]

    scale = np.abs(vals).max() + np.abs(band).max()
    vecs = np.empty((n, len(vals)))
    x0 = np.ones(n) / math.sqrt(n)
    for j, lam in enumerate(vals):
        gap = min(
            abs(lam - vals[i]) for i in range(len(vals)) if i != j
        ) if len(vals) > 1 else scale
        shift = lam + 1e-3 * min(gap, 1e-8 * scale + 1e-290)
        abj = ab.copy()
        abj[hb, :] -= shift
        x = x0
        for _ in range(4):
            try:
                x = solve_banded((hb, hb), abj, x)
            except np.linalg.LinAlgError:
                abj[hb, :] += 1e-10 * scale
                x = solve_banded((hb, hb), abj, x)
            # project off previously found vectors inside tight clusters
            for i in range(j):
                if abs(vals[i] - lam) < 1e-6 * scale:
                    x -= vecs[:, i] * (vecs[:, i] @ x)
            x = x / np.linalg.norm(x)
        vecs[:, j] = x
    return vals, vecs


def solve_radial(
    surface: AdiabaticSurface,
    *,
    n_states: int = 6,
    n_points: int = 3000,
    rho_min: float | None = None,
    rho_max: float | None = None,
    n_channels: int | None = None,
    include_coupling: bool = True,
    richardson: bool = True,
) -> RadialSolution:
    """Diagonalize the coupled radial system between hard walls.

    The surface quantities are interpolated with cubic splines in ln rho.
    With `richardson` the solve runs on (n_points, 2*n_points - 1) and the
    reported energies are the h^2 extrapolants; channel functions come
    from the fine grid.
    """
    nc = surface.n_ch if n_channels is None else int(n_channels)
    if not (1 <= nc <= surface.n_ch):
        raise ValueError(f"n_channels must be in [1, {surface.n_ch}]")
    rho_lo = surface.rho[0] if rho_min is None else rho_min
    rho_hi = surface.rho[-1] if rho_max is None else rho_max
    if not (surface.rho[0] <= rho_lo < rho_hi <= surface.rho[-1]):
        raise ValueError("radial window must sit inside the surface grid")

    ts = np.log(surface.rho)
    sp_lam = CubicSpline(ts, surface.lam[:, :nc], axis=0)
    sp_p = CubicSpline(ts, surface.p[:, :nc, :nc], axis=0)
    sp_sig = CubicSpline(ts, surface.sigma[:, :nc, :nc], axis=0)
    c_d = hyperradial_barrier_coeff(surface.d)

    def solve_on(npts, with_vecs):
        tg = np.linspace(math.log(rho_lo), math.log(rho_hi), npts)
        lam = sp_lam(tg)
        pmat = sp_p(tg)
        sig = sp_sig(tg)
        band = _band_assemble(tg, lam, pmat, sig, c_d, include_coupling)
        want = min(n_states + 2, band.shape[1] - 1)
        if with_vecs:
            vals, vecs = _banded_lowest(band, want)
        else:
            vals = eig_banded(
                band, lower=True, eigvals_only=True, select="i",
                select_range=(0, want - 1), overwrite_a_band=True,
            )
            vecs = None
        return tg, vals, vecs

    tg_f, vals_f, vecs_f = solve_on(
        2 * n_points - 1 if richardson else n_points, True
    )
    if richardson:
        _, vals_c, _ = solve_on(n_points, False)
        k = min(len(vals_f), len(vals_c))
        vals_r = (4.0 * vals_f[:k] - vals_c[:k]) / 3.0
    else:
        vals_c = vals_f
        vals_r = vals_f

    h_f = tg_f[1] - tg_f[0]
    rho_f = np.exp(tg_f)
    states = []
    for j in range(min(n_states, len(vals_r))):
        g = vecs_f[:, j].reshape(-1, nc)
        norm = math.sqrt(np.sum(g * g) * h_f)
        g = g / norm
        f = g * np.exp(-0.5 * tg_f)[:, None]
        # fix overall sign: dominant channel positive at its peak
        dom = int(np.argmax(np.sum(g * g, axis=0)))
        peak = int(np.argmax(np.abs(g[:, dom])))
        if g[peak, dom] < 0:
            g = -g
            f = -f
        gd = g[:, dom]
        thresh = 1e-8 * np.max(np.abs(gd))
        sign_seq = np.sign(gd[np.abs(gd) > thresh])
        nodes = int(np.count_nonzero(sign_seq[1:] * sign_seq[:-1] < 0))
        tail_n = max(4, len(rho_f) // 10)
        tail_fraction = float(np.sum(g[-tail_n:, :] ** 2) * h_f)
        states.append(
            BoundState(
                energy=0.5 * vals_r[j],
                energy_coarse=0.5 * vals_c[j] if j < len(vals_c) else math.nan,
                rho=rho_f,
                f=f,
                nodes=nodes,
                tail_fraction=tail_fraction,
                index=j,
            )
        )
    return RadialSolution(
        surface=surface,
        states=states,
        threshold=surface.pair_energy,
        meta={
            "n_points": n_points,
            "rho_window": (float(rho_lo), float(rho_hi)),
            "include_coupling": include_coupling,
            "n_channels": nc,
            "richardson": richardson,
        },
    )


def bound_states(surface: AdiabaticSurface, **kw) -> list[BoundState]:
    sol = solve_radial(surface, **kw)
    box = (math.pi / sol.meta["rho_window"][1]) ** 2  # box continuum scale (2E)
    return sol.bound(margin=1.5 * box)


def tower_ratios(states: list[BoundState], threshold: float = 0.0) -> np.ndarray:
    """Consecutive energy ratios (E_n - thr)/(E_n+1 - thr), deepest first."""
    e = np.array([s.energy - threshold for s in states if s.energy < threshold])
    if e.size < 2:
        return np.empty(0)
    return e[:-1] / e[1:]


@dataclass(frozen=True)
class ScaleFactor:
    """Measured geometric energy ratios next to the plateau prediction."""

    ratios: np.ndarray  # E_k / E_{k+1}, deepest pair first
    s0: float  # scale exponent read off the channel plateau
    predicted: float  # exp(2 pi / s0)

    def consistency(self) -> np.ndarray:
        """Relative offset of each measured ratio from the prediction."""
        return np.abs(self.ratios / self.predicted - 1.0)


def efimov_scale_factor(
    states: list[BoundState],
    surface: AdiabaticSurface,
    threshold: float = 0.0,
) -> ScaleFactor:
    """Geometric spacing of the level tower vs the plateau of the surface.

    The prediction comes solely from the lowest channel's large-rho
    constant: s0^2 = -lam_inf - C_d - 1/4, factor exp(2 pi / s0).
    """
    if len(states) < 3:
        raise ValueError("need at least 3 states for consecutive ratios")
    ratios = tower_ratios(states, threshold)
    s0sq = -surface.lam_inf - hyperradial_barrier_coeff(surface.d) - 0.25
    if s0sq <= 0.0:
        raise ValueError(f"no attractive long-range channel: s0^2 = {s0sq:.4g}")
    s0 = math.sqrt(s0sq)
    return ScaleFactor(ratios=ratios, s0=s0, predicted=math.exp(2.0 * math.pi / s0))

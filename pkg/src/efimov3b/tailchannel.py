"""Lowest adiabatic channel at large hyperradius below the pair threshold.

Once the heavy-light pair is bound, the lowest channel must turn over
from the scale-free attractive form into the dimer-plus-spectator branch
whose eigenvalue hugs 2 E2 rho^2 with a subcritical 1/rho^2 remainder.
The polynomial basis cannot follow that turnover: representing a dimer
of fixed size at hyperradius rho needs degree growing like rho, so the
spectral route silently freezes the supercritical mid-range tail and
manufactures a geometric ladder of fake states under the threshold.

This module solves the reduced one-channel problem on a uniform grid in
the hyperangle, where the cost grows only linearly with rho. Writing
the component as phi = s(a) psi with s = (sin a cos a)^((d-1)/2), the
free part collapses to Sturm-Liouville form and the eigenproblem reads

    -(s^2 psi')' + 2 rho^2 V(rho sin(a)/c_x) s^2 [psi + (R psi)]
        = lambda s^2 psi

where (R psi)(a) is the plain average of psi over the rotated
hyperangle a'(a, u) with the u-weight (1 - u^2)^((d-3)/2); the
endpoint weight ratio of the component form cancels identically
against the gathered s(a'). psi is smooth at both walls, so
cell-centered differences with the flux vanishing exactly on the walls
converge like h^2 with no special endpoint handling; the eigenvalue
convention matches the polynomial route (free values K(K+2d-2)).

The rotation term only acts where V is not negligible, so the operator
is tridiagonal plus a thin block of dense rows; a shifted inverse
iteration with a Woodbury correction then costs O(n) per hyperradius,
and a sweep over the continued rows of a surface warm-starts each
point from the last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import roots_jacobi

from .kinematics import rotated_hyperangle

__all__ = [
    "TailSolve",
    "TailSweep",
    "solve_channel",
    "sweep",
    "diagonal_coupling",
]

LAYER_CUT = 7.0  # Gaussian support in pair-distance units of the width


@dataclass
class TailSolve:
    """One converged hyperradius: eigenvalue and normalized channel.

    phi is the reduced component s(a) psi(a) at the cell centers,
    normalized to integral phi^2 d(alpha) = 1.
    """

    rho: float
    lam: float
    alpha: np.ndarray
    phi: np.ndarray
    residual: float
    iterations: int


@dataclass
class TailSweep:
    """Channel tail on a rho ladder, resampled onto a shared zeta grid.

    zeta = ln(tan(alpha)) is uniform; phi[i] holds the reduced component
    of row i at those nodes (power-law continued below each row's own
    first grid point). dalpha are the quadrature weights d(alpha)/d(zeta)
    at the shared nodes.

    Each row is normalized under the plain d-measure, while the surface
    channels are orthonormal under the exchange-symmetrized product that
    includes the rotation images.  metric[i] is the ratio between the
    two, 1 + <chi R chi>: order one where the seam hands over and both
    components still share support, exponentially close to 1 once the
    pair profile has pulled inside the images.  Consumers moving a row
    into the surface convention divide by it.
    """

    rho: np.ndarray
    lam: np.ndarray
    zeta: np.ndarray
    phi: np.ndarray
    dalpha: np.ndarray
    residual: np.ndarray
    metric: np.ndarray


def _grid(rho: float, width: float, c_x: float, points_per_width: int,
          n_cap: int, x_cut: float) -> tuple[np.ndarray, float, bool]:
    """Cell centers from the origin wall; faces land exactly on the walls.

    When the channel is exponentially dead beyond the dimer reach x_cut
    (pair coordinate x = rho sin(a)), the domain is cut there instead of
    pi/2, which keeps the point count independent of rho.
    """
    span = 0.5 * math.pi
    cut = False
    if x_cut < rho:
        trunc = math.asin(x_cut / rho)
        if trunc < span:
            span, cut = trunc, True
    h_want = width * c_x / (points_per_width * rho)
    n = min(max(int(span / h_want), 400), n_cap)
    h = span / n
    return h * (np.arange(n) + 0.5), h, cut


def _panel_integrals(lo: np.ndarray, hi: np.ndarray, f, n_nodes: int = 12
                     ) -> np.ndarray:
    """Gauss-Legendre integral of f over each [lo_i, hi_i]."""
    x0, wq = np.polynomial.legendre.leggauss(n_nodes)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return half * (f(mid[:, None] + half[:, None] * x0[None, :]) @ wq)


def _layer_indices(alpha: np.ndarray, rho: float, width: float,
                   c_x: float) -> np.ndarray:
    r = rho * np.sin(alpha) / c_x
    idx = np.nonzero(r <= LAYER_CUT * width)[0]
    if idx.size == 0:
        idx = np.array([0])
    return idx


def _rotation_rows(alpha: np.ndarray, h: float, idx: np.ndarray, d: float,
                   gamma: float, n_u: int, cut: bool) -> np.ndarray:
    """Quadrature of (R psi)(alpha_i) as dense rows over the grid.

    Row i averages psi(a'(a_i, u)) over the u-weight; psi(a') comes
    from cubic interpolation on the uniform cell grid, assembled here
    into explicit weights so the solver can apply R as a small dense
    matrix. Linear interpolation is not enough: its h^2 error rides on
    the 2 rho^2 V factor, which stays O(1) because h shrinks like 1/rho.
    """
    au = 0.5 * (d - 3.0)
    u, wu = roots_jacobi(n_u, au, au)
    wu = wu / wu.sum()
    ap = rotated_hyperangle(alpha[idx][:, None], u[None, :], gamma)
    coef = np.broadcast_to(wu[None, :], ap.shape).ravel()

    n = alpha.size
    pos = (ap / h - 0.5).ravel()  # fractional index into the cell centers
    ii = np.repeat(np.arange(idx.size), n_u)
    rows = np.zeros((idx.size, n))
    j0 = np.floor(pos).astype(np.int64)
    t = pos - j0
    # psi is even across both walls (the faces sit exactly on them), so
    # stencil nodes that fall outside fold back onto their mirror cells
    stencil = (
        (j0[None, :] + np.arange(-1, 3)[:, None],
         np.stack([
             -t * (t - 1.0) * (t - 2.0) / 6.0,
             (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
             -(t + 1.0) * t * (t - 2.0) / 2.0,
             (t + 1.0) * t * (t - 1.0) / 6.0,
         ]))
    )
    for j, w in zip(*stencil):
        j = np.where(j < 0, -1 - j, j)
        if cut:
            # truncated domain: images past the cut sit in the dead zone
            keep = j <= n - 1
            np.add.at(rows, (ii[keep], j[keep]), (coef * w)[keep])
        else:
            j = np.where(j > n - 1, 2 * n - 1 - j, j)
            np.add.at(rows, (ii, j), coef * w)
    return rows


class _RowOperator:
    """Weighted eigenproblem A psi = lambda M psi at one hyperradius.

    A is the wall-to-wall flux matrix plus the potential and its thin
    rotation block, M the cell-integrated weight s^2. The weight is a
    fractional power at both walls, so midpoint face values would drop
    the order there; instead the fluxes use the resistance integral
    h / int da / s^2 between neighbouring centers (exact for local
    s^2 psi' = const solutions) and M the exact per-cell integral.
    """

    def __init__(self, system, d: float, rho: float, *,
                 points_per_width: int, n_cap: int, n_u: int,
                 x_cut: float = math.inf):
        pot = system.pair_potential
        c_x = system.c_x
        self.rho = rho
        self.alpha, self.h, cut = _grid(rho, pot.width, c_x,
                                        points_per_width, n_cap, x_cut)
        alpha, h = self.alpha, self.h
        n = alpha.size
        face = h * np.arange(n + 1)

        def s2(a):
            return (np.sin(a) * np.cos(a)) ** (d - 1.0)

        def s2inv(a):
            return (np.sin(a) * np.cos(a)) ** (1.0 - d)

        self.s = (np.sin(alpha) * np.cos(alpha)) ** (0.5 * (d - 1.0))
        self.weight = _panel_integrals(face[:-1], face[1:], s2) / h
        self.flux = np.zeros(n + 1)
        # the resistance integral diverges into either wall for d < 3,
        # which is the natural boundary condition showing up by itself
        self.flux[1:-1] = 1.0 / (
            h * _panel_integrals(alpha[:-1], alpha[1:], s2inv)
        )
        v = 2.0 * rho * rho * np.asarray(
            pot(rho * np.sin(alpha) / c_x), dtype=float
        )
        self.idx = _layer_indices(alpha, rho, pot.width, c_x)
        rot = _rotation_rows(alpha, h, self.idx, d, system.faddeev_gamma,
                             n_u, cut)
        self.block = (v[self.idx] * self.weight[self.idx])[:, None] * rot
        self.main = self.flux[:-1] + self.flux[1:] + v * self.weight
        if cut:
            # hard wall at the cut face, one-sided resistance
            half = _panel_integrals(alpha[-1:], face[-1:], s2inv)
            self.main[-1] += 1.0 / (h * float(half[0]))

    def apply(self, x: np.ndarray) -> np.ndarray:
        y = self.main * x
        y[:-1] -= self.flux[1:-1] * x[1:]
        y[1:] -= self.flux[1:-1] * x[:-1]
        y[self.idx] += self.block @ x
        return y

    def solver(self, sigma: float):
        """Shift-invert action of (A - sigma M) through a Woodbury step."""
        n = self.alpha.size
        ab = np.zeros((3, n))
        ab[0, 1:] = -self.flux[1:-1]
        ab[1] = self.main - sigma * self.weight
        ab[2, :-1] = -self.flux[1:-1]
        k = self.idx.size
        rhs = np.zeros((n, k))
        rhs[self.idx, np.arange(k)] = 1.0
        minv_e = solve_banded((1, 1), ab, rhs)
        core = np.eye(k) + self.block @ minv_e

        def solve(b: np.ndarray) -> np.ndarray:
            y = solve_banded((1, 1), ab, b)
            return y - minv_e @ np.linalg.solve(core, self.block @ y)

        return solve


def solve_channel(system, d: float, rho: float, lam_guess: float, *,
                  pair_energy: float | None = None,
                  points_per_width: int = 10, n_cap: int = 2_000_000,
                  n_u: int = 48, tol: float = 1e-11, max_iter: int = 60,
                  seed=None) -> TailSolve:
    """Eigenvalue nearest lam_guess at one hyperradius.

    The default seed is the free ground profile; pass a callable
    alpha -> values to aim the iteration at an excited state instead.
    pair_energy (when negative) bounds the channel's reach, letting the
    grid stop where the bound-pair tail is dead instead of covering the
    whole quarter circle; the point count then stops growing with rho.
    """
    x_cut = math.inf
    if pair_energy is not None and pair_energy < 0.0:
        kappa = math.sqrt(-2.0 * system.mu_pair * pair_energy)
        x_cut = system.c_x * max(40.0 / kappa,
                                 20.0 * system.pair_potential.width)
    op = _RowOperator(system, d, rho, points_per_width=points_per_width,
                      n_cap=n_cap, n_u=n_u, x_cut=x_cut)
    h, w = op.h, op.weight
    lam = float(lam_guess)

    def normalize(vec):
        return vec / math.sqrt(h * float(vec @ (w * vec)))

    x = np.ones_like(op.alpha) if seed is None else np.asarray(seed(op.alpha))
    x = normalize(x)
    sigma = lam
    solve = op.solver(sigma)
    moved = math.inf
    for it in range(1, max_iter + 1):
        x = normalize(solve(w * x))
        lam_new = h * float(x @ op.apply(x))
        moved = abs(lam_new - lam)
        lam = lam_new
        if moved <= tol * max(1.0, abs(lam)):
            break
        if moved > 0.05 * max(1.0, abs(lam - sigma)) and it % 4 == 0:
            sigma = lam  # refresh a stale factorization
            solve = op.solver(sigma)
    if moved > 100.0 * tol * max(1.0, abs(lam)):
        raise ArithmeticError(
            f"tail channel stalled at rho = {rho:g}: "
            f"step {moved:.3e} after {it} iterations"
        )
    resid = math.sqrt(h) * float(
        np.linalg.norm(op.apply(x) - lam * w * x)
    )
    if x[np.argmax(np.abs(x))] < 0.0:
        x = -x
    phi = op.s * x  # back to the reduced component
    return TailSolve(rho=rho, lam=lam, alpha=op.alpha, phi=phi,
                     residual=float(resid), iterations=it)


def _shared_zeta(rho_max: float, width: float, c_x: float,
                 n: int) -> np.ndarray:
    lo = math.log(0.02 * width * c_x / rho_max)
    hi = math.log(math.tan(0.5 * math.pi - 3e-4))
    return np.linspace(lo, hi, n)


def _resample(row: TailSolve, zeta: np.ndarray, d: float) -> np.ndarray:
    """Row channel at the shared nodes; power-law branch below the grid."""
    a_nodes = np.arctan(np.exp(zeta))
    vals = np.interp(a_nodes, row.alpha, row.phi, left=0.0, right=0.0)
    a0 = row.alpha[0]
    inner = a_nodes < a0
    if np.any(inner):
        vals[inner] = row.phi[0] * (a_nodes[inner] / a0) ** (0.5 * (d - 1.0))
    return vals


def sweep(system, d: float, rhos: np.ndarray, lam_seed: float, *,
          pair_energy: float, points_per_width: int = 40,
          n_cap: int = 2_000_000, n_u: int = 48,
          n_zeta: int = 2048, richardson: bool = True) -> TailSweep:
    """March the channel outward, warm-starting each row from the last.

    lam_seed anchors the first row (use the last direct spectral value);
    subsequent guesses follow the bound-pair estimate 2 e2 rho^2 plus the
    running offset, which stays within the huge gap to channel 1 so the
    inverse iteration cannot lock onto the wrong state.

    The h^2 truncation error of a row rides on 2 rho^2, so it never
    becomes small compared to the O(1) part of the eigenvalue at fixed
    resolution; the step-doubled Richardson pair removes it.
    """
    rhos = np.asarray(rhos, dtype=float)
    zeta = _shared_zeta(float(rhos[-1]), system.pair_potential.width,
                        system.c_x, n_zeta)
    lam = np.empty(rhos.size)
    phi = np.empty((rhos.size, zeta.size))
    resid = np.empty(rhos.size)
    guess = lam_seed
    offset = lam_seed - 2.0 * pair_energy * rhos[0] ** 2
    for i, rho in enumerate(rhos):
        row = solve_channel(system, d, float(rho), guess,
                            pair_energy=pair_energy,
                            points_per_width=2 * points_per_width,
                            n_cap=n_cap, n_u=n_u)
        lam[i] = row.lam
        if richardson:
            coarse = solve_channel(system, d, float(rho), guess,
                                   pair_energy=pair_energy,
                                   points_per_width=points_per_width,
                                   n_cap=n_cap, n_u=n_u)
            lam[i] = (4.0 * row.lam - coarse.lam) / 3.0
        resid[i] = row.residual
        phi[i] = _resample(row, zeta, d)
        offset = lam[i] - 2.0 * pair_energy * rho * rho
        if i + 1 < rhos.size:
            guess = 2.0 * pair_energy * rhos[i + 1] ** 2 + offset
    a_nodes = np.arctan(np.exp(zeta))
    dalpha = np.sin(a_nodes) * np.cos(a_nodes) * np.gradient(zeta)
    chi, image = _exchange_image(system, d, zeta, phi, n_u)
    pw_d = (np.sin(a_nodes) * np.cos(a_nodes)) ** (d - 1.0)
    metric = ((chi + image) * chi * pw_d) @ dalpha
    return TailSweep(rho=rhos, lam=lam, zeta=zeta, phi=phi,
                     dalpha=dalpha, residual=resid, metric=metric)


def _exchange_image(system, d: float, zeta: np.ndarray, rows: np.ndarray,
                    n_u: int) -> tuple[np.ndarray, np.ndarray]:
    """Profiles chi = phi/s and their u-averaged rotation images.

    Queries land on ln(tan) of the rotated angle, where the shared grid
    is uniform; outside it the flat small-angle branch (left) and the
    dead far side (right) close the interpolation exactly.
    """
    a = np.arctan(np.exp(zeta))
    pw_h = (np.sin(a) * np.cos(a)) ** (0.5 * (d - 1.0))
    au = 0.5 * (d - 3.0)
    u, wu = roots_jacobi(n_u, au, au)
    wu = wu / wu.sum()
    ap = rotated_hyperangle(a[:, None], u[None, :], system.faddeev_gamma)
    zp = np.log(np.tan(np.clip(ap, 1e-12, 0.5 * math.pi - 1e-12)))
    chi = np.divide(rows, pw_h[None, :], out=np.zeros_like(rows),
                    where=rows != 0.0)
    image = np.empty_like(chi)
    for i in range(chi.shape[0]):
        image[i] = np.interp(zp.ravel(), zeta, chi[i]).reshape(zp.shape) @ wu
    return chi, image


def diagonal_coupling(sw: TailSweep, system, d: float, *,
                      n_u: int = 48) -> np.ndarray:
    """sigma_00 = |d Phi / d rho|^2 of the exchange-normalized channel.

    The resampled rows live on common alpha nodes, so a log-grid
    gradient across rows is the partial derivative at fixed angle.  The
    radial system expands over channels orthonormal under the
    exchange-symmetrized product; rescaling the plain-normalized rows
    into that convention adds the image cross term and the terms fed by
    the running metric m(rho):

        sigma_00 = (<dchi dchi> + <dchi R dchi>) / m - m'^2 / (4 m^2)

    Away from the seam the images die, m -> 1, and the plain squared
    gradient survives.
    """
    a = np.arctan(np.exp(sw.zeta))
    pw_d = (np.sin(a) * np.cos(a)) ** (d - 1.0)
    t = np.log(sw.rho)
    dphi = np.gradient(sw.phi, t, axis=0, edge_order=2)
    dchi, dimage = _exchange_image(system, d, sw.zeta, dphi, n_u)
    dchi /= sw.rho[:, None]
    dimage /= sw.rho[:, None]
    g_plain = ((dchi * dchi) * pw_d) @ sw.dalpha
    g_cross = ((dchi * dimage) * pw_d) @ sw.dalpha
    m = sw.metric
    mp = np.gradient(m, t, edge_order=2) / sw.rho
    return (g_plain + g_cross) / m - 0.25 * (mp / m) ** 2

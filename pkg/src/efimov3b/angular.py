"""Hyperangular Faddeev problem and the adiabatic channel surface.

Two identical heavy particles interact with one light particle through a
pair potential; the heavy pair does not interact, which kills one Faddeev
component and makes the two heavy-light components identical up to the
particle exchange. Everything here works in Jacobi set 2 (heavy-light
pair + heavy spectator) on the s-wave subspace.

The reduced hyperangular equation at fixed hyperradius rho is

    T phi + 2 rho^2 V(rho sin(alpha)/c_x) [phi + R phi] = lambda phi,

where T is the free hyperangular operator with eigenvalues K(K + 2d - 2),
K = 2n on the s-wave tower, and R maps the second heavy-light component
into the first one through the kinematic rotation between sets 2 and 3,
averaged over the angle cosine u with the dimension-d weight
(1 - u^2)^((d-3)/2).

Key structural fact used throughout: the kinematic rotation preserves the
free K-shells, so on the s-wave basis R is exactly diagonal, R_K. The
(nonsymmetric) operator above is then similar to the symmetric

    T + 2 rho^2 D V D,   D = diag(sqrt(1 + R_K)),

whose orthonormal eigenvectors z are the coefficient vectors of the
*total* hyperangular functions; the Faddeev component coefficients are
c = D^-1 z. The diagonality is asserted numerically in the tests against
a dense quadrature of R, and the symmetric route is cross-checked against
a dense nonsymmetric solve of the literal operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln, roots_jacobi
from scipy.linalg import eigh

from .tailchannel import diagonal_coupling, sweep as tail_sweep

from . import kernels, twobody
from .kinematics import MassTriple, jacobi_scaling, kinematic_angle, rotated_cos2

__all__ = [
    "ThreeBodySystem",
    "HyperangularBasis",
    "AngularOperator",
    "AdiabaticSurface",
    "build_surface",
    "rotation_coefficients",
    "rotation_matrix_dense",
    "nonsymmetric_channel_oracle",
    "default_rho_grid",
    "hyperradial_barrier_coeff",
    "scale_exponent",
    "energy_scale_factor",
]


@dataclass(frozen=True)
class ThreeBodySystem:
    """Two identical heavies plus a light, Gaussian heavy-light attraction."""

    masses: MassTriple
    pair_potential: twobody.GaussianPotential

    def __post_init__(self):
        if self.masses.m1 != self.masses.m2:
            raise ValueError("the two heavy particles must be identical")

    @classmethod
    def heavy_light(cls, m_heavy, m_light, depth, width=1.0) -> "ThreeBodySystem":
        return cls(
            MassTriple.heavy_heavy_light(m_heavy, m_light),
            twobody.GaussianPotential(depth, width),
        )

    @property
    def mu_pair(self) -> float:
        """Heavy-light reduced mass (the interacting pair, set 2)."""
        return self.masses.pair_reduced(2)

    @property
    def c_x(self) -> float:
        return jacobi_scaling(self.masses, 2).c_x

    @property
    def faddeev_gamma(self) -> float:
        """Rotation angle between the two heavy-light Jacobi sets."""
        return kinematic_angle(self.masses, 2, 3).gamma

    def pair_energy(self, d: float) -> float:
        """Shallowest two-body energy at dimension d (0 when unbound)."""
        e = twobody.bound_state_energies(
            self.pair_potential, self.mu_pair, d, refine=True
        )
        return float(e[-1]) if e.size else 0.0


def basis_norms(d: float, n_funcs: int) -> np.ndarray:
    """Normalization constants making N_n P_n^(a,a)(cos 2 alpha) orthonormal.

    Orthonormality is with respect to the s-wave volume weight
    (sin alpha cos alpha)^(d-1) d(alpha) on [0, pi/2], with a = d/2 - 1.
    Computed through log-gammas so large orders do not overflow.
    """
    a = 0.5 * d - 1.0
    n = np.arange(n_funcs)
    # L2 norm of P_n^(a,a) under (1-t^2)^a dt
    log_h = (
        (2.0 * a + 1.0) * math.log(2.0)
        - np.log(2.0 * n + 2.0 * a + 1.0)
        + 2.0 * gammaln(n + a + 1.0)
        - gammaln(n + 1.0)
        - gammaln(n + 2.0 * a + 1.0)
    )
    return np.exp(0.5 * (d * math.log(2.0) - log_h))


class HyperangularBasis:
    """Orthonormal s-wave hyperangular polynomials at dimension d.

    Functions are indexed by n = 0..n_funcs-1 (grand angular momentum
    K = 2n) and represented through Jacobi polynomials in t = cos(2 alpha)
    with exponent a = d/2 - 1 on both sides; the weight tied to that
    exponent is exactly the s-wave volume factor (sin alpha cos alpha)^(d-1).
    Quadratures: Gauss-Jacobi in t, and Gauss-Jacobi with exponent
    (d-3)/2 in the angle cosine u.
    """

    def __init__(self, d: float, n_funcs: int, n_alpha: int | None = None,
                 n_u: int = 64):
        if not (2.0 <= d <= 3.0):
            raise ValueError(f"dimension out of range [2, 3]: {d}")
        if n_funcs < 2:
            raise ValueError("need at least two basis functions")
        if n_alpha is None:
            n_alpha = max(128, 2 * n_funcs)
        if n_alpha < n_funcs + 2:
            raise ValueError("n_alpha must exceed n_funcs for exact quadrature")
        self.d = float(d)
        self.n_funcs = int(n_funcs)
        self.n_alpha = int(n_alpha)
        self.n_u = int(n_u)
        self.a = 0.5 * d - 1.0

        t, w = roots_jacobi(n_alpha, self.a, self.a)
        self.t = t
        self.alpha = 0.5 * np.arccos(np.clip(t, -1.0, 1.0))
        self.wt = w * 2.0 ** (-d)  # folds (sin cos)^(d-1) d(alpha) into dt

        self.nrm = basis_norms(d, n_funcs)
        self.jac = kernels.jacobi_table(t, n_funcs - 1, self.a, self.a)
        self.bmat = self.jac * self.nrm[None, :]  # orthonormal under wt

        au = 0.5 * (d - 3.0)
        u, wu = roots_jacobi(n_u, au, au)
        self.u = u
        self.wu = wu / wu.sum()

    def free_eigenvalue(self, n) -> np.ndarray:
        """Hyperangular eigenvalue K(K + 2d - 2) of the s-wave shell K = 2n."""
        k = 2.0 * np.asarray(n, dtype=float)
        return k * (k + 2.0 * self.d - 2.0)

    def reduced_barrier_eigenvalue(self, n) -> np.ndarray:
        """Same shell seen by the one-dimensional reduced operator."""
        return self.free_eigenvalue(n) + (self.d - 1.0) ** 2


def rotation_coefficients(basis: HyperangularBasis, gamma: float) -> np.ndarray:
    """Diagonal R_K of the kinematic-rotation operator on the s-wave basis."""
    tau = rotated_cos2(basis.t[:, None], basis.u[None, :], gamma)
    ptab = kernels.jacobi_table(
        tau.ravel(), basis.n_funcs - 1, basis.a, basis.a
    ).reshape(basis.n_alpha, basis.n_u, basis.n_funcs)
    pbar = np.einsum("qun,u->qn", ptab, basis.wu)
    return np.einsum("q,qn,qn->n", basis.wt, basis.jac, pbar) * basis.nrm**2


def rotation_matrix_dense(basis: HyperangularBasis, gamma: float) -> np.ndarray:
    """Full quadrature matrix of the rotation operator (test oracle)."""
    tau = rotated_cos2(basis.t[:, None], basis.u[None, :], gamma)
    ptab = kernels.jacobi_table(
        tau.ravel(), basis.n_funcs - 1, basis.a, basis.a
    ).reshape(basis.n_alpha, basis.n_u, basis.n_funcs)
    pbar = np.einsum("qun,u->qn", ptab, basis.wu) * basis.nrm[None, :]
    return np.einsum("q,qn,qm->nm", basis.wt, basis.bmat, pbar)


class AngularOperator:
    """Fixed-d machinery: basis, rotation diagonal, potential quadratures."""

    def __init__(
        self,
        system: ThreeBodySystem,
        d: float,
        n_funcs: int = 60,
        *,
        n_alpha: int | None = None,
        n_u: int = 64,
        n_layer: int = 96,
        layer_cut: float = 7.0,
        layer_switch: float | None = None,
    ):
        self.system = system
        self.basis = HyperangularBasis(d, n_funcs, n_alpha, n_u)
        self.c_x = system.c_x
        self.gamma = system.faddeev_gamma
        self.r_diag = rotation_coefficients(self.basis, self.gamma)
        if np.any(1.0 + self.r_diag <= 1e-12):
            raise ValueError("rotation diagonal leaves a non-positive metric")
        self.dplus = np.sqrt(1.0 + self.r_diag)
        self.t_free = self.basis.free_eigenvalue(np.arange(n_funcs))

        b = system.pair_potential.width
        # layer rule: nodes in r = rho sin(alpha)/c_x across the well support
        xg, wg = np.polynomial.legendre.leggauss(n_layer)
        self.layer_r = 0.5 * layer_cut * b * (xg + 1.0)
        self.layer_w = 0.5 * layer_cut * b * wg
        self.layer_v = np.asarray(system.pair_potential(self.layer_r))
        # fixed Gauss-Jacobi nodes stop resolving the well layer near this rho
        self.layer_switch = (
            layer_switch
            if layer_switch is not None
            else 0.25 * self.basis.n_alpha * b * self.c_x
        )

    def potential_matrix(self, rho: float, mode: str = "auto") -> np.ndarray:
        """Pair potential on the basis, integrated over the hyperangle."""
        bs = self.basis
        if mode == "auto":
            mode = "layer" if rho > self.layer_switch else "nodes"
        if mode == "nodes":
            v = self.system.pair_potential(rho * np.sin(bs.alpha) / self.c_x)
            return (bs.bmat * (bs.wt * v)[:, None]).T @ bs.bmat
        if mode != "layer":
            raise ValueError(f"unknown quadrature mode {mode!r}")
        s = self.c_x * self.layer_r / rho
        if s.max() >= 0.7:
            raise ValueError("layer quadrature used below its validity radius")
        d = bs.d
        c = np.sqrt(1.0 - s * s)
        t = 1.0 - 2.0 * s * s
        w_eff = (
            self.layer_w * (self.c_x / rho) * s ** (d - 1.0) * c ** (d - 2.0)
            * self.layer_v
        )
        jl = kernels.jacobi_table(t, bs.n_funcs - 1, bs.a, bs.a) * bs.nrm[None, :]
        return (jl * w_eff[:, None]).T @ jl

    def channels(self, rho: float, n_keep: int, mode: str = "auto"):
        """Lowest adiabatic eigenvalues and total-function coefficient vectors."""
        vm = self.potential_matrix(rho, mode)
        h = 2.0 * rho * rho * (self.dplus[:, None] * vm * self.dplus[None, :])
        h[np.diag_indices_from(h)] += self.t_free
        lam, z = eigh(h, subset_by_index=(0, n_keep - 1))
        return lam, z

    def component_coefficients(self, z: np.ndarray) -> np.ndarray:
        """Faddeev-component coefficients c = D^-1 z (columns are channels)."""
        z = np.asarray(z)
        if z.ndim == 1:
            return z / self.dplus
        return z / self.dplus[:, None]


def nonsymmetric_channel_oracle(op: AngularOperator, rho: float, n_keep: int):
    """Dense eig of the literal operator T + 2 rho^2 V (1 + R); test oracle."""
    vm = op.potential_matrix(rho, "nodes" if rho <= op.layer_switch else "layer")
    h = np.diag(op.t_free) + 2.0 * rho * rho * (
        vm * (1.0 + op.r_diag)[None, :]
    )
    w = np.linalg.eigvals(h)
    w = np.sort(w.real)
    return w[:n_keep]


def default_rho_grid(rho_min: float = 1e-3, rho_max: float = 1e5,
                     n: int = 200) -> np.ndarray:
    return np.geomspace(rho_min, rho_max, n)


def hyperradial_barrier_coeff(d: float) -> float:
    """(2d-1)(2d-3)/4, the reduced hyperradial barrier constant."""
    return (2.0 * d - 1.0) * (2.0 * d - 3.0) / 4.0


def scale_exponent(lam_inf: float, d: float) -> float:
    """Scale-free exponent s0 from the plateau value of the lowest channel.

    The radial channel potential (lam_inf + barrier)/rho^2 takes the
    supercritical form -(s0^2 + 1/4)/rho^2 when attraction wins.
    """
    s0sq = -(lam_inf + hyperradial_barrier_coeff(d)) - 0.25
    if s0sq <= 0:
        raise ValueError(f"plateau is subcritical: s0^2 = {s0sq}")
    return math.sqrt(s0sq)


def energy_scale_factor(s0: float) -> float:
    """Geometric energy ratio E_n / E_(n+1) of consecutive tower states."""
    return math.exp(2.0 * math.pi / s0)


@dataclass
class AdiabaticSurface:
    """Tracked adiabatic channels on a geometric rho grid.

    lam[i, n]: channel eigenvalues; z[i, :, n]: total-function coefficient
    vectors (orthonormal); p/q/sigma: nonadiabatic matrices with respect
    to rho (antisymmetric / second-derivative / symmetrized-square form).
    Rows with extrapolated[i] use the large-rho continuation instead of a
    direct solve.
    """

    d: float
    rho: np.ndarray
    lam: np.ndarray
    z: np.ndarray
    p: np.ndarray
    q: np.ndarray
    sigma: np.ndarray
    r_diag: np.ndarray
    dplus: np.ndarray
    extrapolated: np.ndarray
    system: ThreeBodySystem
    pair_energy: float
    n_funcs: int
    n_ch: int
    meta: dict = field(default_factory=dict)

    @property
    def lam_inf(self) -> float:
        return self.meta.get("continuation", {}).get("c0", float(self.lam[-1, 0]))

    def component_coefficients(self) -> np.ndarray:
        """c = D^-1 z on the whole grid, shape like z."""
        return self.z / self.dplus[None, :, None]


def _fit_continuation(rho, lam0, e2):
    """Fit lam0 ~ 2 e2 rho^2 + c0 + c1 rho^-p + c2 rho^-2p over the window.

    The leading finite-range correction to the plateau decays like a power
    of the well width over rho; the second term is its square. p is picked
    by residual over a small grid rather than fit nonlinearly.
    """
    best = None
    y = lam0 - 2.0 * e2 * rho * rho
    for p in (0.5, 0.625, 0.75, 0.875, 1.0, 1.25):
        x = rho ** (-p)
        a = np.stack([np.ones_like(rho), x, x * x], axis=1)
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        resid = float(np.sqrt(np.mean((a @ coef - y) ** 2)))
        if best is None or resid < best["resid"]:
            best = {
                "c0": float(coef[0]),
                "c1": float(coef[1]),
                "c2": float(coef[2]),
                "p": p,
                "resid": resid,
            }
    return best


def build_surface(
    system: ThreeBodySystem,
    d: float,
    *,
    n_funcs: int = 60,
    n_ch: int = 3,
    rho_grid: np.ndarray | None = None,
    n_alpha: int | None = None,
    n_u: int = 64,
    track_buffer: int = 6,
    continuation: bool = True,
    match_rho: float | None = None,
    pair_energy: float | None = None,
    operator: AngularOperator | None = None,
) -> AdiabaticSurface:
    """Solve the channels across the grid, track them, differentiate them.

    The grid must be geometric (uniform in ln rho); derivatives are taken
    in ln rho. Beyond `match_rho` (defaults to the basis resolvability
    estimate 0.5 * n_funcs * width * c_x) the lowest channel follows the
    fitted asymptotic model, other channels freeze, and z is held fixed,
    which zeroes the couplings there.
    """
    op = operator or AngularOperator(system, d, n_funcs, n_alpha=n_alpha, n_u=n_u)
    if op.basis.n_funcs != n_funcs or op.basis.d != float(d):
        raise ValueError("operator does not match the requested basis")
    if rho_grid is None:
        rho_grid = default_rho_grid()
    rho = np.asarray(rho_grid, dtype=float)
    if rho.ndim != 1 or rho.size < 16 or np.any(np.diff(rho) <= 0):
        raise ValueError("need an increasing rho grid with >= 16 points")
    tln = np.log(rho)
    h = np.diff(tln)
    if np.max(np.abs(h - h[0])) > 1e-8 * h[0]:
        raise ValueError("rho grid must be geometric")
    h = h[0]

    width = system.pair_potential.width
    if match_rho is None:
        # basis resolvability: the well layer needs polynomial degree
        # ~ pi rho / (2 width c_x); 0.4 keeps a comfortable margin
        match_rho = 0.4 * n_funcs * width * op.c_x
    if not continuation:
        match_rho = np.inf
    if continuation and rho[0] >= match_rho:
        raise ValueError("continuation radius below the whole grid")

    n_keep = min(n_funcs, n_ch + track_buffer)
    direct = rho <= match_rho
    if continuation and np.count_nonzero(direct) < 8:
        raise ValueError("too few direct points before the continuation radius")
    n_direct = int(np.count_nonzero(direct))

    lam_all = np.empty((n_direct, n_keep))
    z_all = np.empty((n_direct, n_funcs, n_keep))
    for i in range(n_direct):
        lam_i, z_i = op.channels(rho[i], n_keep)
        if i > 0:
            # track by overlap with the previous point and fix the sign
            m = z_all[i - 1].T @ z_i
            row, col = linear_sum_assignment(-np.abs(m))
            order = np.empty_like(col)
            order[row] = col
            lam_i = lam_i[order]
            z_i = z_i[:, order]
            sgn = np.sign(np.einsum("bn,bn->n", z_all[i - 1], z_i))
            sgn[sgn == 0] = 1.0
            z_i = z_i * sgn[None, :]
        lam_all[i] = lam_i
        z_all[i] = z_i

    lam = np.empty((rho.size, n_ch))
    z = np.empty((rho.size, n_funcs, n_ch))
    lam[:n_direct] = lam_all[:, :n_ch]
    z[:n_direct] = z_all[:, :, :n_ch]

    meta: dict = {"match_rho": float(match_rho), "n_keep": n_keep}
    if pair_energy is None:
        pair_energy = system.pair_energy(d) if continuation else 0.0
    tail = None
    if n_direct < rho.size:
        fit_mask = direct & (rho >= 0.35 * match_rho)
        if np.count_nonzero(fit_mask) < 6:
            fit_mask = direct.copy()
            fit_mask[: max(0, n_direct - 12)] = False
        fit = _fit_continuation(rho[fit_mask], lam[fit_mask, 0], pair_energy)
        meta["continuation"] = fit
        meta["fit_window"] = (float(rho[fit_mask][0]), float(rho[fit_mask][-1]))
        if pair_energy < -1e-10:
            # a bound pair turns the lowest channel into its 2 e2 rho^2
            # asymptote, which no polynomial basis can follow; solve the
            # tail rows on a grid instead of extrapolating the fit
            tail = tail_sweep(
                system, d, rho[n_direct - 1:], float(lam[n_direct - 1, 0]),
                pair_energy=pair_energy,
            )
            lam[n_direct:, 0] = tail.lam[1:]
            meta["tail_seam_gap"] = float(tail.lam[0] - lam[n_direct - 1, 0])
            meta["tail"] = tail
        else:
            rr = rho[n_direct:]
            xx = rr ** (-fit["p"])
            lam[n_direct:, 0] = (
                2.0 * pair_energy * rr * rr
                + fit["c0"] + fit["c1"] * xx + fit["c2"] * xx * xx
            )
        lam[n_direct:, 1:] = lam[n_direct - 1, 1:][None, :]
        z[n_direct:] = z[n_direct - 1][None, :, :]

    # derivatives in ln rho on the tracked vectors
    z_t = np.gradient(z, h, axis=0, edge_order=2)
    if n_direct < rho.size:
        z_t[n_direct:] = 0.0
        if n_direct >= 3:  # one-sided at the seam, avoids mixing frozen rows
            z_t[n_direct - 1] = (
                1.5 * z[n_direct - 1] - 2.0 * z[n_direct - 2] + 0.5 * z[n_direct - 3]
            ) / h
    p_t = np.einsum("rbn,rbm->rnm", z, z_t)
    p_t = 0.5 * (p_t - np.swapaxes(p_t, 1, 2))
    z_tt = np.gradient(z_t, h, axis=0, edge_order=2)
    if n_direct < rho.size:
        z_tt[n_direct:] = 0.0
    q_t = np.einsum("rbn,rbm->rnm", z, z_tt)
    gram_t = np.einsum("rbn,rbm->rnm", z_t, z_t)

    inv_rho = 1.0 / rho
    p_rho = p_t * inv_rho[:, None, None]
    q_rho = (q_t - p_t) * (inv_rho**2)[:, None, None]
    sigma = (gram_t + np.einsum("rnk,rkm->rnm", p_t, p_t)) * (inv_rho**2)[
        :, None, None
    ]
    sigma = 0.5 * (sigma + np.swapaxes(sigma, 1, 2))
    if tail is not None:
        # frozen z zeroed the couplings there; restore the diagonal of
        # the lowest channel from the grid rows, where it balances the
        # state-dependent constant in lam toward the spectator barrier
        s00 = diagonal_coupling(tail, system, d)[1:]
        sigma[n_direct:, 0, 0] = s00
        q_rho[n_direct:, 0, 0] = -s00

    return AdiabaticSurface(
        d=float(d),
        rho=rho,
        lam=lam,
        z=z,
        p=p_rho,
        q=q_rho,
        sigma=sigma,
        r_diag=op.r_diag,
        dplus=op.dplus,
        extrapolated=~direct,
        system=system,
        pair_energy=float(pair_energy),
        n_funcs=n_funcs,
        n_ch=n_ch,
        meta=meta,
    )

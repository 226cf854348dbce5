"""Structure observables of a three-body state seen as a squeezed 3D system.

A bound state solved at dimension d is reinterpreted as an ordinary 3D
state whose z extension is scaled by a parameter s (s = 1 undeformed,
s = 0 flat in the plane).  Squeezing enters every closed formula
analytically: mean square separations pick up the factor (2 + s^2)/3,
the normalization constant is proportional to s, and ratios of radii do
not depend on s at all.  The numerical content is therefore a set of
d-space quadratures over (rho, alpha, u), with u the cosine of the angle
between the two Jacobi vectors of the chosen measurement set.

Two estimators are kept side by side for the mean square radii: one
squares the full two-component wave function pointwise in (alpha, u)
before integrating ("cross", interference terms included), and one first
averages the amplitude over u so only the measurement-set s-wave content
survives ("projected").  They agree when the u dependence of the rotated
components is weak; both are reported rather than silently choosing one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline, RegularGridInterpolator
from scipy.special import roots_jacobi

from . import kernels
from .angular import AdiabaticSurface, basis_norms
from .kinematics import (
    MassTriple,
    distance_ratio_factor,
    jacobi_scaling,
    kinematic_angle,
    rotated_cos2,
)
from .radial import BoundState

__all__ = [
    "DeformedRadii",
    "DensityGrid",
    "AngularMomentTables",
    "deformation_factor",
    "normalization",
    "msr_jacobi",
    "radii_ratio",
    "distance_ratio",
    "total_wavefunction",
    "density_grid",
    "default_density_axes",
    "band_fraction",
    "slice_peaks",
    "bimodal_slices",
]


def deformation_factor(s: float) -> float:
    """Closed-form msr scale (2 + s^2)/3 of the z-squeezed reinterpretation."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"scale parameter outside [0, 1]: {s}")
    return (2.0 + s * s) / 3.0


def component_rotations(masses: MassTriple, set_index: int) -> tuple[float, float]:
    """Angles carrying measurement-set coordinates into the two component sets.

    The wave function has one Faddeev component per interacting pair; with
    the heavy-heavy force absent these live on sets 2 and 3 and share one
    channel function.  An angle of exactly 0.0 marks the identity (the
    component already lives in the measurement set).
    """
    if set_index not in (1, 2, 3):
        raise ValueError(f"not a Jacobi set index: {set_index}")
    out = []
    for comp in (2, 3):
        if comp == set_index:
            out.append(0.0)
        else:
            out.append(kinematic_angle(masses, set_index, comp).gamma)
    return tuple(out)


@dataclass(frozen=True)
class DeformedRadii:
    """Mean square Jacobi separations of one state in one measurement set."""

    set_index: int
    s: float
    x2: float  # <x^2>, mass-scaled pair coordinate, deformation applied
    y2: float  # <y^2>, mass-scaled spectator coordinate
    x2_projected: float
    y2_projected: float
    r_x2: float  # physical pair distance squared, x2 / c_x^2
    r_y2: float
    ratio_jacobi: float  # sqrt(y2 / x2), independent of s
    ratio_distance: float  # physical rms distance ratio
    norm_quadrature: float  # d-space norm integral, should be 1
    norm_3d: float  # 3D-volume norm integral, sets C(s)

    @property
    def estimator_gap(self) -> float:
        """Relative spread between the cross and projected ratio estimates."""
        r_proj = math.sqrt(self.y2_projected / self.x2_projected)
        return abs(r_proj / self.ratio_jacobi - 1.0)


@dataclass
class DensityGrid:
    """Angle-averaged pair density F(r_x, r_y) on a rectangular grid."""

    d: float
    set_index: int
    s: float
    r_x: np.ndarray
    r_y: np.ndarray
    values: np.ndarray  # shape (len(r_y), len(r_x)), normalized to 1
    clipped: float  # estimated probability outside the rectangle
    meta: dict = field(default_factory=dict)

    def cell_weights(self) -> tuple[np.ndarray, np.ndarray]:
        wx = _trapezoid_weights(self.r_x)
        wy = _trapezoid_weights(self.r_y)
        return wx, wy

    def total_mass(self) -> float:
        wx, wy = self.cell_weights()
        return float(wy @ self.values @ wx)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.zeros_like(x)
    w[:-1] += 0.5 * np.diff(x)
    w[1:] += 0.5 * np.diff(x)
    return w


class AngularMomentTables:
    """Per-rho angular moment matrices of the two-component wave function.

    Expectation values live in the reinterpreted 3D space, so the moment
    matrices of 1, sin^2(alpha) and cos^2(alpha) between total functions
    T_n(alpha, u) = chi_n(alpha_2') + chi_n(alpha_3') are taken with the
    ordinary 3D volume weight (sin alpha cos alpha)^2 d(alpha) and a flat
    weight in u, not with the d-space weight the state is normalized
    under.  Both the pointwise-squared ("cross") and u-averaged
    ("projected") estimators are tabulated.  Extrapolated surface rows
    share one frozen matrix since the channel coefficients are constant
    there.

    The d-space identity moment is kept as block 0: it must reproduce the
    channel orthonormality matrix, which makes its deviation from the
    unit matrix a direct quadrature diagnostic (`orthonormality_defect`).
    Block layout along axis 1: [A0_d; B0, Bx, By; Q0, Qx, Qy; C0, Cx, Cy]
    with B the cross and Q the projected 3D-measure moments of the summed
    components.  C holds the same moments of one component alone, taken
    in its own frame: with two identical heavy particles the pair label
    is ambiguous and the summed moments fold both partitions together,
    so separations that track one partition (a pair staying small while
    its spectator leaves) only show up in the C blocks.  Rotation into
    the measurement set happens at consumption time, since the flat-u
    average of the rotated sin^2 weight is the closed form
    sin^2 cos^2(gamma) mixing of the frame moments.
    """

    def __init__(
        self,
        surface: AdiabaticSurface,
        set_index: int,
        n_alpha: int | None = None,
        n_u: int = 64,
    ):
        d = surface.d
        self.surface = surface
        self.set_index = int(set_index)
        if n_alpha is None:
            n_alpha = max(128, surface.n_funcs + 64)
        self.n_alpha = int(n_alpha)
        self.n_u = int(n_u)
        a = 0.5 * d - 1.0
        self._a = a
        td, wd = roots_jacobi(n_alpha, a, a)
        self.t_d, self.w_d = td, wd * 2.0 ** (-d)
        ud, wud = roots_jacobi(n_u, 0.5 * (d - 3.0), 0.5 * (d - 3.0))
        self.u_d, self.wu_d = ud, wud / wud.sum()
        t3, w3 = roots_jacobi(n_alpha, 0.5, 0.5)
        self.t_3, self.w_3 = t3, w3 / 8.0
        u3, wu3 = leggauss(n_u)
        self.u_3, self.wu_3 = u3, 0.5 * wu3
        self.gammas = component_rotations(surface.system.masses, set_index)
        self.nrm = basis_norms(d, surface.n_funcs)

        coefs = surface.component_coefficients()
        n_rho, _, n_ch = coefs.shape
        self.n_ch = n_ch
        direct = ~surface.extrapolated
        tail = surface.meta.get("tail")
        seam = 0
        if tail is not None:
            seam = int(np.argmax(surface.extrapolated)) - 1
            if tail.rho.size != n_rho - seam:
                raise ValueError("tail ladder does not line up with the rho grid")
            self._tail_setup(tail)
        self.moments = np.empty((n_rho, 10, n_ch, n_ch))
        frozen = None
        for i in range(n_rho):
            if direct[i] or frozen is None:
                block = self._node_moments(coefs[i])
                if not direct[i]:
                    frozen = block
            else:
                block = frozen
            if tail is not None and not direct[i]:
                block = block.copy()
                block[:, 0, 0] = self._tail_row_moments(tail, i - seam)
            self.moments[i] = block
        self._spline = CubicSpline(np.log(surface.rho), self.moments, axis=0)

    def _totals(self, coefs: np.ndarray, t: np.ndarray, u: np.ndarray) -> np.ndarray:
        """T_n on the (alpha, u) product grid, shape (len(t), len(u), n_ch)."""
        cf = np.ascontiguousarray((coefs * self.nrm[:, None]).T)
        tot = np.zeros((t.size, u.size, cf.shape[0]))
        for gamma in self.gammas:
            if gamma == 0.0:
                vals = kernels.channel_values(t, cf, self._a, self._a)
                tot += vals.T[:, None, :]
            else:
                tp = rotated_cos2(t[:, None], u[None, :], gamma)
                vals = kernels.channel_values(tp.ravel(), cf, self._a, self._a)
                tot += vals.T.reshape(t.size, u.size, -1)
        return tot

    def _node_moments(self, coefs: np.ndarray) -> np.ndarray:
        # d-space norm matrix, the orthonormality diagnostic
        tot = self._totals(coefs, self.t_d, self.u_d)
        wtu = self.w_d[:, None] * self.wu_d[None, :]
        a0 = 0.5 * np.einsum("au,aun,aum->nm", wtu, tot, tot, optimize=True)

        # 3D-measure moments of the same channel totals
        tot = self._totals(coefs, self.t_3, self.u_3)
        sin2 = 0.5 * (1.0 - self.t_3)
        wtu = self.w_3[:, None] * self.wu_3[None, :]
        b0 = 0.5 * np.einsum("au,aun,aum->nm", wtu, tot, tot, optimize=True)
        bx = 0.5 * np.einsum("a,au,aun,aum->nm", sin2, wtu, tot, tot, optimize=True)
        by = b0 - bx
        proj = np.einsum("u,aun->an", self.wu_3, tot)
        q0 = 0.5 * np.einsum("an,a,am->nm", proj, self.w_3, proj, optimize=True)
        qx = 0.5 * np.einsum("an,a,am->nm", proj, sin2 * self.w_3, proj, optimize=True)
        qy = q0 - qx

        # tracked-partition moments: one component against itself, in its
        # own frame; the component is u-independent so 1D quadrature does
        cf = np.ascontiguousarray((coefs * self.nrm[:, None]).T)
        vals = kernels.channel_values(self.t_3, cf, self._a, self._a).T
        c0 = np.einsum("a,an,am->nm", self.w_3, vals, vals, optimize=True)
        cx = np.einsum("a,an,am->nm", sin2 * self.w_3, vals, vals, optimize=True)
        return np.stack([a0, b0, bx, by, q0, qx, qy, c0, cx, c0 - cx])

    def _tail_setup(self, tail) -> None:
        d = self.surface.d
        z = tail.zeta
        a = np.arctan(np.exp(z))
        sa, ca = np.sin(a), np.cos(a)
        self._tz = z
        self._tt = np.cos(2.0 * a)
        self._tw = tail.dalpha
        self._ts2 = sa * sa
        self._tsc2 = (sa * ca) ** 2
        self._tpow_d = (sa * ca) ** (d - 1.0)
        self._tpow_h = (sa * ca) ** (0.5 * (d - 1.0))
        sys = self.surface.system
        # finest angular feature the shared grid still resolves at mid angles
        self._t2d_cap = sys.c_x * sys.pair_potential.width / (1.5 * (z[1] - z[0]))

    def _tail_image(self, chi: np.ndarray, u: np.ndarray, gamma: float) -> np.ndarray:
        """chi seen through one rotated component on the (zeta, u) grid."""
        tp = rotated_cos2(self._tt[:, None], u[None, :], gamma)
        ap = 0.5 * np.arccos(np.clip(tp, -1.0, 1.0))
        zp = np.log(np.tan(np.clip(ap, 1e-12, None)))
        return np.interp(zp.ravel(), self._tz, chi).reshape(zp.shape)

    def _tail_projected(self, chi: np.ndarray) -> np.ndarray:
        """u-averaged two-component total on the zeta nodes.

        The flat u average of a rotated component collapses to a window
        mean over sin^2 of the rotated angle, which the cumulative
        integral evaluates without resolving the window against the
        grid.  That keeps the projected estimator alias-free out to
        hyperradii where the pair profile is far narrower than the node
        spacing at the image angles.
        """
        sig = self._ts2
        seg = 0.5 * (chi[1:] + chi[:-1]) * np.diff(sig)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        proj = np.zeros_like(chi)
        for g in self.gammas:
            if g == 0.0:
                proj += chi
                continue
            cg2 = math.cos(g) ** 2
            mid = sig * cg2 + (1.0 - sig) * (1.0 - cg2)
            half = 2.0 * np.sqrt(np.clip(sig * (1.0 - sig), 0.0, None)) * abs(
                math.cos(g) * math.sin(g)
            )
            lo = np.clip(mid - half, sig[0], sig[-1])
            hi = np.clip(mid + half, sig[0], sig[-1])
            wide = half > 1e-9
            win = np.interp(hi, sig, cum) - np.interp(lo, sig, cum)
            proj += np.where(
                wide,
                win / np.where(wide, 2.0 * half, 1.0),
                np.interp(mid, sig, chi),
            )
        return proj

    def _tail_row_moments(self, tail, j: int) -> np.ndarray:
        """The ten 00 moment entries of one resampled tail row.

        Close to the seam the two Faddeev components still overlap and
        everything is integrated on the (zeta, u) product grid.  Further
        out the pair profile sits far inside every rotated image, cross
        terms are exponentially dead, and each image integrates to the
        direct value because the kinematic rotation preserves the
        angular measures; only the sin^2 moment keeps the rotation
        angle.  The estimated switch-over error is at the per-mille
        level and sits entirely in the 3D-measure blocks.
        """
        phi = tail.phi[j]
        chi = np.divide(
            phi, self._tpow_h, out=np.zeros_like(phi), where=phi != 0.0
        )
        w = self._tw
        c2 = chi * chi
        i0 = float(np.sum(c2 * self._tsc2 * w))
        ix = float(np.sum(c2 * self._ts2 * self._tsc2 * w))
        iy = i0 - ix
        proj = self._tail_projected(chi)
        p2 = proj * proj
        q0 = 0.5 * float(np.sum(p2 * self._tsc2 * w))
        qx = 0.5 * float(np.sum(p2 * self._ts2 * self._tsc2 * w))
        if float(tail.rho[j]) <= self._t2d_cap:
            tot_d = np.zeros((chi.size, self.u_d.size))
            tot_3 = np.zeros((chi.size, self.u_3.size))
            for g in self.gammas:
                if g == 0.0:
                    tot_d += chi[:, None]
                    tot_3 += chi[:, None]
                else:
                    tot_d += self._tail_image(chi, self.u_d, g)
                    tot_3 += self._tail_image(chi, self.u_3, g)
            a0 = 0.5 * float(
                np.einsum("a,au,u->", self._tpow_d * w, tot_d * tot_d, self.wu_d)
            )
            t3sq = tot_3 * tot_3
            b0 = 0.5 * float(np.einsum("a,au,u->", self._tsc2 * w, t3sq, self.wu_3))
            bx = 0.5 * float(
                np.einsum("a,au,u->", self._ts2 * self._tsc2 * w, t3sq, self.wu_3)
            )
        else:
            a0 = float(np.sum(c2 * self._tpow_d * w))
            b0 = i0
            bx = 0.0
            for g in self.gammas:
                cg2 = math.cos(g) ** 2
                bx += 0.5 * (cg2 * ix + (1.0 - cg2) * iy)
        # grid rows carry unit plain norm; the z route is orthonormal
        # under the exchange-symmetrized product, so every quadratic
        # block picks up the inverse metric on the way over
        blocks = np.array([a0, b0, bx, b0 - bx, q0, qx, q0 - qx, i0, ix, iy])
        return blocks / float(tail.metric[j])

    def orthonormality_defect(self) -> float:
        """Worst deviation of the d-space identity moment from the unit matrix."""
        eye = np.eye(self.n_ch)
        return float(np.max(np.abs(self.moments[:, 0] - eye)))

    def at(self, rho: np.ndarray) -> np.ndarray:
        """Interpolated moment matrices, shape (len(rho), 10, n_ch, n_ch)."""
        return self._spline(np.log(np.asarray(rho, dtype=float)))


def _radial_weights(state: BoundState) -> np.ndarray:
    """Weights turning nodal sums over the state's grid into d rho integrals."""
    lr = np.log(state.rho)
    return _trapezoid_weights(lr) * state.rho


def _moment_integrals(tables: AngularMomentTables, state: BoundState) -> np.ndarray:
    """The integrals [N_d, I0, Ix, Iy, J0, Jx, Jy, K0, Kx, Ky] for one state.

    N_d is the d-space norm (must come out 1).  I* carry the 3D volume
    weight rho^(6-2d) against the d-normalized radial density, with the
    extra rho^2 of x^2 = rho^2 sin^2(alpha) folded into Ix, Iy; J* are
    the projected-estimator counterparts and K* the tracked-partition
    ones, still in the component frame.
    """
    mom = tables.at(state.rho)
    w = _radial_weights(state)
    ff = np.einsum("pn,pm->pnm", state.f, state.f)
    vol = state.rho ** (6.0 - 2.0 * tables.surface.d)
    rho2 = state.rho**2
    out = np.empty(10)
    for k in range(10):
        per_rho = np.einsum("pnm,pnm->p", mom[:, k], ff)
        if k == 0:
            out[k] = w @ per_rho
        elif k in (1, 4, 7):
            out[k] = w @ (vol * per_rho)
        else:
            out[k] = w @ (vol * rho2 * per_rho)
    return out


def _partition_xy(tables: AngularMomentTables, ints: np.ndarray) -> tuple[float, float]:
    """Rotate the component-frame K moments into the measurement set."""
    g = tables.gammas[0]
    cg2 = math.cos(g) ** 2
    kx = cg2 * ints[8] + (1.0 - cg2) * ints[9]
    return kx, ints[8] + ints[9] - kx


def msr_jacobi(
    surface: AdiabaticSurface,
    state: BoundState,
    set_index: int,
    s: float = 1.0,
    tables: AngularMomentTables | None = None,
    exchange: bool = True,
) -> DeformedRadii:
    """Deformed mean square Jacobi separations of `state` in one set.

    <x^2> = (2 + s^2)/3 * Ix / I0 with Ix, I0 the 3D-volume quadratures
    of rho^2 sin^2(alpha) and 1 against |Psi|^2; same structure for y.
    The squeeze enters only through the closed-form factor, so ratios are
    s-independent.  The projected-estimator values are carried along for
    comparison.

    With ``exchange=False`` the density of one Faddeev component replaces
    |Psi|^2: the pair coordinate then follows one partition of the two
    identical heavy particles instead of averaging both, which is what
    isolates the halo signature (pair size frozen, spectator leaving)
    near a threshold.  The projected columns duplicate the cross ones
    there, since a single component carries no u dependence.
    """
    if tables is None:
        tables = AngularMomentTables(surface, set_index)
    elif tables.set_index != set_index or tables.surface is not surface:
        raise ValueError("tables built for a different surface or set")
    fac = deformation_factor(s)
    ints = _moment_integrals(tables, state)
    nd, i0, ix, iy, j0, jx, jy = ints[:7]
    if exchange:
        x2 = fac * ix / i0
        y2 = fac * iy / i0
        xp, yp, n3 = fac * jx / j0, fac * jy / j0, i0
    else:
        kx, ky = _partition_xy(tables, ints)
        x2 = fac * kx / ints[7]
        y2 = fac * ky / ints[7]
        xp, yp, n3 = x2, y2, ints[7]
    sc = jacobi_scaling(surface.system.masses, set_index)
    return DeformedRadii(
        set_index=set_index,
        s=s,
        x2=x2,
        y2=y2,
        x2_projected=xp,
        y2_projected=yp,
        r_x2=x2 / sc.c_x**2,
        r_y2=y2 / sc.c_y**2,
        ratio_jacobi=math.sqrt(y2 / x2),
        ratio_distance=math.sqrt(y2 / x2)
        * distance_ratio_factor(surface.system.masses, set_index),
        norm_quadrature=nd,
        norm_3d=n3,
    )


def radii_ratio(
    surface: AdiabaticSurface,
    state: BoundState,
    set_index: int,
    tables: AngularMomentTables | None = None,
    estimator: str = "projected",
) -> float:
    """rms(y)/rms(x) in mass-scaled Jacobi coordinates; no scale input.

    The default "projected" estimator squares the u-averaged amplitude,
    the form the scale-free ratio is stated in.  Near a threshold it is
    also the one carrying the halo signature: the exchange image of a
    far-away pair rides a thin curve in u, so projecting first starves
    its contribution to <x^2> and lets the ratio grow without bound,
    where the pointwise "cross" estimator saturates once the image
    carries half the norm.  "partition" drops the image entirely.
    """
    if tables is None:
        tables = AngularMomentTables(surface, set_index)
    ints = _moment_integrals(tables, state)
    if estimator == "projected":
        return math.sqrt(ints[6] / ints[5])
    if estimator == "cross":
        return math.sqrt(ints[3] / ints[2])
    if estimator == "partition":
        kx, ky = _partition_xy(tables, ints)
        return math.sqrt(ky / kx)
    raise ValueError(f"unknown estimator: {estimator!r}")


def distance_ratio(
    surface: AdiabaticSurface,
    state: BoundState,
    set_index: int,
    tables: AngularMomentTables | None = None,
    estimator: str = "projected",
) -> float:
    """Physical rms distance ratio: spectator separation over pair separation."""
    r = radii_ratio(surface, state, set_index, tables, estimator)
    return r * distance_ratio_factor(surface.system.masses, set_index)


def normalization(
    surface: AdiabaticSurface,
    state: BoundState,
    s: float,
    set_index: int = 2,
    tables: AngularMomentTables | None = None,
) -> float:
    """Squeezed-space normalization constant C(s), proportional to s.

    C(s)^2 = s^2 * (3D-volume norm of the d-normalized state).  The 3D
    norm differs from 1 because the volume element changed; the exact s^2
    law is what tests pin down, the overall scale follows the angular
    convention of `AngularMomentTables`.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"scale parameter outside [0, 1]: {s}")
    if tables is None:
        tables = AngularMomentTables(surface, set_index)
    i0 = _moment_integrals(tables, state)[1]
    return s * math.sqrt(i0)


class _StateEvaluator:
    """Pointwise Psi(rho, alpha, u) in one measurement set."""

    def __init__(self, surface: AdiabaticSurface, state: BoundState, set_index: int):
        self.surface = surface
        self.state = state
        self.set_index = set_index
        self.d = surface.d
        self._a = 0.5 * surface.d - 1.0
        self.nrm = basis_norms(surface.d, surface.n_funcs)
        self.gammas = component_rotations(surface.system.masses, set_index)
        self._fsp = CubicSpline(np.log(state.rho), state.f, axis=0)
        self._csp = CubicSpline(
            np.log(surface.rho), surface.component_coefficients(), axis=0
        )
        self.rho_lo = float(state.rho[0])
        self.rho_hi = float(state.rho[-1])
        tail = surface.meta.get("tail")
        self._tail = tail
        if tail is not None:
            a_t = np.arctan(np.exp(tail.zeta))
            pw = (np.sin(a_t) * np.cos(a_t)) ** (0.5 * (surface.d - 1.0))
            chi_tab = np.divide(
                tail.phi, pw[None, :], out=np.zeros_like(tail.phi),
                where=tail.phi != 0.0,
            )
            chi_tab /= np.sqrt(tail.metric)[:, None]
            self._tail_lo = float(tail.rho[0])
            self._tz0 = float(tail.zeta[0])
            self._tsp = RegularGridInterpolator(
                (np.log(tail.rho), tail.zeta), chi_tab,
                bounds_error=False, fill_value=0.0,
            )

    def __call__(self, rho, alpha, u) -> np.ndarray:
        rho, alpha, u = np.broadcast_arrays(rho, alpha, u)
        rho = np.asarray(rho, dtype=float)
        if rho.size and (rho.min() < self.rho_lo or rho.max() > self.rho_hi):
            raise ValueError("hyperradius outside the solved grid")
        shape = rho.shape
        rho, alpha, u = rho.ravel(), np.ravel(alpha), np.ravel(u)
        lr = np.log(rho)
        f_at = self._fsp(lr)
        c_at = self._csp(lr) * self.nrm[None, :, None]
        t = np.cos(2.0 * np.asarray(alpha, dtype=float))
        tot = np.zeros((rho.size, f_at.shape[1]))
        for gamma in self.gammas:
            tp = t if gamma == 0.0 else rotated_cos2(t, u, gamma)
            tab = kernels.jacobi_table(tp, self.surface.n_funcs - 1, self._a, self._a)
            tot += np.einsum("pk,pkc->pc", tab, c_at)
        if self._tail is not None:
            # beyond the seam the deepest channel narrows past the basis
            # resolution; its finite-difference profile takes over there
            m = rho >= self._tail_lo
            if m.any():
                lr_m, t_m, u_m = lr[m], t[m], u[m]
                val = np.zeros(lr_m.size)
                for gamma in self.gammas:
                    tp = t_m if gamma == 0.0 else rotated_cos2(t_m, u_m, gamma)
                    ap = 0.5 * np.arccos(np.clip(tp, -1.0, 1.0))
                    with np.errstate(divide="ignore"):
                        zp = np.log(np.tan(np.clip(ap, 1e-12, None)))
                    zp = np.clip(zp, self._tz0, None)
                    val += self._tsp(np.stack([lr_m, zp], axis=-1))
                tot[m, 0] = val
        amp = np.einsum("pc,pc->p", f_at, tot)
        amp *= rho ** (-0.5 * (2.0 * self.d - 1.0)) / math.sqrt(2.0)
        return amp.reshape(shape)


def total_wavefunction(
    surface: AdiabaticSurface,
    state: BoundState,
    set_index: int,
    rho,
    alpha,
    u,
) -> np.ndarray:
    """Faddeev-summed amplitude at (rho, alpha, u) of the measurement set.

    Normalization convention: integrating |Psi|^2 with the measures
    rho^(2d-1) d(rho), (sin a cos a)^(d-1) d(alpha) and the normalized
    u weight (1-u^2)^((d-3)/2) du gives 1.  Broadcasts over the inputs;
    raises when any rho falls outside the state's radial grid.
    """
    return _StateEvaluator(surface, state, set_index)(rho, alpha, u)


def default_density_axes(
    radii: DeformedRadii, n_x: int = 161, n_y: int = 161, span: float = 3.5
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform axes from 0 to span times the rms physical separations."""
    return (
        np.linspace(0.0, span * math.sqrt(radii.r_x2), n_x),
        np.linspace(0.0, span * math.sqrt(radii.r_y2), n_y),
    )


def _deformed_angle_nodes(s: float, n_angle: int):
    """Quadrature for the 3D orientation average at general squeezing.

    Returns (|x| factor, |y| factor, u, weight) tuples flattened over the
    (cos th_x, cos th_y, dphi) product grid: the d-space radii pick up
    sqrt(1 - (1-s^2) cos^2 th) per vector and the inter-vector cosine mixes
    the transverse and squeezed projections.
    """
    cx, wx = leggauss(n_angle)
    phi, wphi = leggauss(n_angle)
    phi = 0.5 * math.pi * (phi + 1.0)
    wphi = 0.5 * wphi  # mean over [0, pi]
    one = 1.0 - s * s
    ctx = cx[:, None, None]
    cty = cx[None, :, None]
    cp = np.cos(phi)[None, None, :]
    gx = np.sqrt(1.0 - one * ctx**2)
    gy = np.sqrt(1.0 - one * cty**2)
    stx = np.sqrt(1.0 - ctx**2)
    sty = np.sqrt(1.0 - cty**2)
    u = (stx * sty * cp + s * s * ctx * cty) / (gx * gy)
    w = 0.25 * wx[:, None, None] * wx[None, :, None] * wphi[None, None, :]
    gx, gy, u, w = np.broadcast_arrays(gx, gy, u, w)
    return gx.ravel(), gy.ravel(), u.ravel(), w.ravel()


def density_grid(
    surface: AdiabaticSurface,
    state: BoundState,
    set_index: int,
    r_x: np.ndarray,
    r_y: np.ndarray,
    s: float = 1.0,
    n_u: int = 64,
    n_angle: int = 16,
) -> DensityGrid:
    """Angle-averaged density F(r_x, r_y) = r_x^2 r_y^2 <|Psi|^2>, normalized.

    r_x, r_y are physical separations (pair and spectator distance of the
    measurement set).  At s = 1 the orientation average collapses to a
    single flat quadrature over the inter-vector cosine; a squeezed
    reinterpretation needs the full triple average and is correspondingly
    slower.  Grid points outside the state's radial grid contribute zero;
    the estimated probability that falls outside the rectangle is recorded
    in `clipped`.
    """
    r_x = np.asarray(r_x, dtype=float)
    r_y = np.asarray(r_y, dtype=float)
    if r_x.ndim != 1 or r_y.ndim != 1 or r_x.size < 2 or r_y.size < 2:
        raise ValueError("density axes must be 1D with at least two points")
    ev = _StateEvaluator(surface, state, set_index)
    sc = jacobi_scaling(surface.system.masses, set_index)
    if s == 1.0:
        un, wn = leggauss(n_u)
        wn = 0.5 * wn
        gx = np.ones(un.size)
        gy = np.ones(un.size)
    else:
        gx, gy, un, wn = _deformed_angle_nodes(s, n_angle)

    vals = np.zeros((r_y.size, r_x.size))
    x_all = sc.c_x * r_x
    for j, ry in enumerate(r_y):
        if ry == 0.0:
            continue
        y = sc.c_y * ry
        xg = x_all[:, None] * gx[None, :]
        yg = y * gy[None, :]
        rho = np.hypot(xg, yg)
        inside = (rho >= ev.rho_lo) & (rho <= ev.rho_hi) & (x_all[:, None] > 0)
        if not inside.any():
            continue
        alpha = np.arctan2(xg, yg)
        uu = np.broadcast_to(un[None, :], rho.shape)
        amp = np.zeros(rho.shape)
        amp[inside] = ev(rho[inside], alpha[inside], uu[inside])
        dens = (amp * amp) @ wn
        vals[j] = r_x * r_x * ry * ry * dens

    wx = _trapezoid_weights(r_x)
    wy = _trapezoid_weights(r_y)
    total = float(wy @ vals @ wx)
    if total <= 0.0:
        raise ValueError("density vanished on the whole grid")
    vals /= total

    # outside-mass estimate: radial probability beyond the inscribed ball
    rho_corner = min(sc.c_x * r_x[-1], sc.c_y * r_y[-1])
    w = _radial_weights(state)
    per_rho = np.einsum("pn,pn->p", state.f, state.f)
    clipped = float(w[state.rho > rho_corner] @ per_rho[state.rho > rho_corner])
    meta = {"n_u": n_u, "n_angle": n_angle, "raw_mass": total}
    return DensityGrid(
        d=surface.d,
        set_index=set_index,
        s=s,
        r_x=r_x,
        r_y=r_y,
        values=vals,
        clipped=clipped,
        meta=meta,
    )


def band_fraction(grid: DensityGrid, slope: float = 0.5, width: float = 0.15) -> float:
    """Probability inside the band |r_y - slope*r_x| < width*r_x."""
    wx, wy = grid.cell_weights()
    xx = grid.r_x[None, :]
    yy = grid.r_y[:, None]
    mask = np.abs(yy - slope * xx) < width * xx
    weighted = grid.values * wy[:, None] * wx[None, :]
    return float(weighted[mask].sum() / weighted.sum())


def slice_peaks(
    profile: np.ndarray, rel_height: float = 0.05, dip: float = 0.6
) -> list[int]:
    """Indices of separated local maxima of a 1D profile.

    A maximum counts when it tops rel_height of the profile maximum;
    consecutive accepted peaks must be separated by a valley below `dip`
    times the lower of the two, otherwise the smaller one is dropped.
    """
    p = np.asarray(profile, dtype=float)
    floor = rel_height * p.max()
    cand = [
        i
        for i in range(1, p.size - 1)
        if p[i] >= floor and p[i] >= p[i - 1] and p[i] > p[i + 1]
    ]
    peaks: list[int] = []
    for i in cand:
        if not peaks:
            peaks.append(i)
            continue
        j = peaks[-1]
        valley = p[j : i + 1].min()
        lower = min(p[i], p[j])
        if valley <= dip * lower:
            peaks.append(i)
        elif p[i] > p[j]:
            peaks[-1] = i
    return peaks


def bimodal_slices(
    grid: DensityGrid,
    y_floor: float = 0.3,
    rel_height: float = 0.05,
    dip: float = 0.6,
) -> list[tuple[float, list[float]]]:
    """Fixed-r_y slices showing two or more separated maxima along r_x.

    Only slices in the upper part of the spectator-distance support are
    scanned: r_y above y_floor times the rms r_y of the grid's own mass,
    and carrying at least a thousandth of the peak slice mass.
    """
    wx, wy = grid.cell_weights()
    slice_mass = grid.values @ wx
    y_rms = math.sqrt(
        float((wy * slice_mass) @ grid.r_y**2) / float(wy @ slice_mass)
    )
    out = []
    for j, ry in enumerate(grid.r_y):
        if ry < y_floor * y_rms or slice_mass[j] < 1e-3 * slice_mass.max():
            continue
        peaks = slice_peaks(grid.values[j], rel_height, dip)
        if len(peaks) >= 2:
            out.append((float(ry), [float(grid.r_x[i]) for i in peaks]))
    return out

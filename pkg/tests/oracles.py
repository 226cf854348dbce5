"""Independent slow implementations the test suite checks the package against.

Everything here deliberately uses a different discretization than the
package: uniform finite differences instead of spectral bases, spline
window integrals instead of u-quadrature, dense tridiagonal matrices
instead of shooting.  Tests assert that the two routes agree; none of
this code is imported by the package itself.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from efimov3b.angular import AdiabaticSurface, hyperradial_barrier_coeff


def d3_angular_levels(system, rho: float, n_keep: int, n_grid: int = 900):
    """Lowest angular eigenvalues at d = 3 from a uniform-grid solver.

    At d = 3 the flat u weight turns the rotation term into a closed-form
    window integral: the u average of the rotated component is
    1/sin(2 gamma) times the integral of the reduced function between
    |gamma - alpha| and min(gamma + alpha, pi - gamma - alpha).  The
    reduced operator is -d^2/d(alpha)^2 with Dirichlet walls and odd
    continuation, discretized with a 5-point stencil; the window integral
    uses the antiderivative of a cubic spline, so both pieces carry h^4
    truncation error.  Eigenvalues are shifted by -(d-1)^2 = -4 to match
    the package convention (free values K(K + 4)).
    """
    gamma = abs(system.faddeev_gamma)
    pot = system.pair_potential
    c_x = system.c_x
    n = n_grid
    h = 0.5 * math.pi / (n + 1)
    alpha = h * np.arange(1, n + 1)

    # 5-point -d2/da2 with odd reflection across both walls
    lap = np.zeros((n, n))
    c0, c1, c2 = 30.0, -16.0, 1.0
    for m in range(n):
        for off, c in ((0, c0), (-1, c1), (1, c1), (-2, c2), (2, c2)):
            j = m + off
            sign = 1.0
            if j == -1 or j == n:
                continue  # wall node, value 0
            if j < -1:
                j, sign = -2 - j, -1.0
            if j > n:
                j, sign = 2 * n - j, -1.0
            lap[m, j] += sign * c / (12.0 * h * h)

    # window-integral rotation matrix from spline antiderivatives
    pad = 12
    ea = np.concatenate([-alpha[:pad][::-1], [0.0], alpha,
                         [0.5 * math.pi], math.pi - alpha[-pad:][::-1]])
    lo = np.abs(gamma - alpha)
    hi = np.minimum(gamma + alpha, math.pi - gamma - alpha)
    rot = np.empty((n, n))
    ephi = np.zeros(ea.size)
    for m in range(n):
        ephi[:] = 0.0
        ephi[pad + 1 + m] = 1.0
        if m < pad:
            ephi[pad - 1 - m] = -1.0
        if m >= n - pad:
            ephi[ea.size - (n - m)] = -1.0
        anti = CubicSpline(ea, ephi).antiderivative()
        rot[:, m] = anti(hi) - anti(lo)
    rot /= math.sin(2.0 * gamma)

    v = 2.0 * rho * rho * np.asarray(pot(rho * np.sin(alpha) / c_x))
    ham = lap + v[:, None] * (np.eye(n) + rot)
    w = np.sort(np.linalg.eigvals(ham).real)
    return w[:n_keep] - 4.0


def pair_state_d(pot, mu: float, d: float, r_max: float = 80.0,
                 n: int = 24000):
    """Shallowest two-body level from dense uniform-grid diagonalization.

    Returns (energy, r, u) with u the unit-normalized reduced radial
    function; the second derivative matrix is plain 3-point, which is
    plenty for the percent-level moments the tests take from u.
    """
    h = r_max / (n + 1)
    r = h * np.arange(1, n + 1)
    barrier = 0.25 * (d - 1.0) * (d - 3.0) / r**2
    diag = 2.0 / h**2 + barrier + 2.0 * mu * np.asarray(pot(r))
    off = np.full(n - 1, -1.0 / h**2)
    evals, evecs = eigh_tridiagonal(diag, off, select="i",
                                    select_range=(0, 0))
    e = evals[0] / (2.0 * mu)
    u = evecs[:, 0] / math.sqrt(h)
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    return e, r, u


def pair_energy_shooting(pot, mu: float, d: float, e_lo: float,
                         e_hi: float) -> float:
    """Bound pair level inside (e_lo, e_hi) by two-sided shooting.

    Independent of the package solver: DOP853 both ways, outward from a
    power-series start, inward from the exact decaying tail
    sqrt(r) K_nu(kappa r) started where the well is dead, log-derivative
    matching at a radius inside the well.
    """
    from scipy.integrate import solve_ivp
    from scipy.optimize import brentq
    from scipy.special import kv, kvp

    p = 0.5 * (d - 1.0)
    cc = 0.25 * (d - 1.0) * (d - 3.0)
    nu = 0.5 * abs(d - 2.0)
    r_match = 1.5 * pot.width

    def mismatch(e):
        kappa = math.sqrt(-2.0 * mu * e)

        def rhs(r, y):
            return (y[1], (cc / (r * r) + 2.0 * mu * (pot(r) - e)) * y[0])

        r0 = 1e-6 * pot.width
        a2 = 2.0 * mu * (-pot.depth - e) / (4.0 * p + 2.0)
        y0 = [r0**p * (1.0 + a2 * r0 * r0),
              p * r0 ** (p - 1.0) + (p + 2.0) * a2 * r0 ** (p + 1.0)]
        out = solve_ivp(rhs, (r0, r_match), y0, method="DOP853",
                        rtol=1e-12, atol=1e-280)
        r_far = max(12.0 * pot.width, 30.0 / kappa)
        x = kappa * r_far
        yf = [math.sqrt(r_far) * kv(nu, x),
              0.5 / math.sqrt(r_far) * kv(nu, x)
              + math.sqrt(r_far) * kappa * kvp(nu, x)]
        scale = abs(yf[0]) + abs(yf[1])
        inw = solve_ivp(rhs, (r_far, r_match), [v / scale for v in yf],
                        method="DOP853", rtol=1e-12, atol=1e-280)
        uo, upo = out.y[:, -1]
        ui, upi = inw.y[:, -1]
        return upo / uo - upi / ui

    return brentq(mismatch, e_lo, e_hi, xtol=1e-16, rtol=8.9e-16)


def derivative_moment(r: np.ndarray, u: np.ndarray) -> float:
    """integral of r^2 u'(r)^2 dr for a unit-normalized radial function.

    Invariant under linear rescaling of r, so it can be compared across
    the physical pair coordinate and the mass-scaled one.
    """
    du = np.gradient(u, r)
    return float(np.trapezoid(r * r * du * du, r))


def inverse_square_surface(system, d: float, s0: float, *,
                           rho_lo: float = 0.2, rho_hi: float = 3e6,
                           n: int = 500) -> AdiabaticSurface:
    """Synthetic one-channel surface with a pure supercritical tail.

    lam is constant at -(s0^2 + 1/4) - C_d so the radial channel
    potential is exactly -(s0^2 + 1/4)/rho^2; couplings vanish.  The
    bound spectrum between hard walls is then geometric with ratio
    exp(2 pi / s0) away from both ends.
    """
    rho = np.geomspace(rho_lo, rho_hi, n)
    lam_val = -(s0 * s0 + 0.25) - hyperradial_barrier_coeff(d)
    shape = (n, 1, 1)
    return AdiabaticSurface(
        d=float(d),
        rho=rho,
        lam=np.full((n, 1), lam_val),
        z=np.ones(shape),
        p=np.zeros(shape),
        q=np.zeros(shape),
        sigma=np.zeros(shape),
        r_diag=np.zeros(1),
        dplus=np.ones(1),
        extrapolated=np.zeros(n, dtype=bool),
        system=system,
        pair_energy=0.0,
        n_funcs=1,
        n_ch=1,
        meta={"continuation": {"c0": lam_val}},
    )


def rigid_triangle_ratios(m_heavy: float, m_light: float,
                          hl_over_hh: float) -> tuple[float, float]:
    """Distance ratios of a frozen isosceles configuration.

    The two heavies sit a unit apart, the light on the bisector at equal
    distance c = hl_over_hh from both.  Set 1 measures light-to-midpoint
    over heavy-heavy; set 2 measures heavy-to-pair-center-of-mass over
    heavy-light.
    """
    c = hl_over_hh
    height = math.sqrt(c * c - 0.25)
    r1 = height
    kl = m_light / (m_heavy + m_light)
    kh = 1.0 - kl
    y2 = math.hypot(0.5 * (1.0 + kh), kl * height)
    return r1, y2 / c

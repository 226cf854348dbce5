"""NumPy reference implementations of the hot kernels.

The compiled module `_kernels` mirrors these signatures one to one; this
module is the correctness reference and the fallback when no compiler is
around. Keep the two in lock step.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["jacobi_table", "channel_values", "zero_energy_sweep"]


def jacobi_table(x: np.ndarray, n_max: int, a: float, b: float) -> np.ndarray:
    """P_n^(a,b)(x) for n = 0..n_max, shape (len(x), n_max+1).

    Three-term recurrence; stable for the |x| <= 1, moderate-order use
    here (orders up to a few hundred).
    """
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty((x.size, n_max + 1))
    out[:, 0] = 1.0
    if n_max >= 1:
        out[:, 1] = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    s = a + b
    for n in range(2, n_max + 1):
        c0 = 2.0 * n * (n + s) * (2.0 * n + s - 2.0)
        c1 = (2.0 * n + s - 1.0) * (a * a - b * b)
        c2 = (2.0 * n + s - 1.0) * (2.0 * n + s) * (2.0 * n + s - 2.0)
        c3 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * (2.0 * n + s)
        out[:, n] = ((c1 + c2 * x) * out[:, n - 1] - c3 * out[:, n - 2]) / c0
    return out


def channel_values(
    x: np.ndarray, coef: np.ndarray, a: float, b: float, chunk: int = 1 << 16
) -> np.ndarray:
    """sum_n coef[c, n] P_n^(a,b)(x[j]) for many points, shape (n_ch, len(x)).

    Chunked so the per-order table never materializes for the full point
    set; the compiled version fuses the recurrence and the contraction.
    """
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    if coef.ndim == 1:
        coef = coef[None, :]
    n_ch, n_orders = coef.shape
    out = np.empty((n_ch, x.size))
    for lo in range(0, x.size, chunk):
        xs = x[lo : lo + chunk]
        tab = jacobi_table(xs, n_orders - 1, a, b)
        out[:, lo : lo + xs.size] = coef @ tab.T
    return out


def zero_energy_sweep(
    depth: float, width: float, mu: float, nu: float, z0: float, z1: float, n_steps: int
) -> tuple[float, float, int]:
    """RK4 sweep of w'' = [nu^2 + 2 mu r^2 V(r)] w from z0 to z1, z = ln r.

    Returns (w, w', node count) at z1 for the regular branch started as
    w = exp(nu (z - z0)) to first order. Shared by the threshold search.
    """
    h = (z1 - z0) / n_steps
    z = z0
    w, wp = 1.0, nu
    nodes = 0
    prev = 1.0
    two_mu_depth = 2.0 * mu * depth
    inv_w2 = 1.0 / (width * width)

    def q(zv: float) -> float:
        r2 = math.exp(2.0 * zv)
        return nu * nu - two_mu_depth * r2 * math.exp(-r2 * inv_w2)

    for _ in range(n_steps):
        q1 = q(z)
        k1w, k1p = wp, q1 * w
        qm = q(z + 0.5 * h)
        k2w, k2p = wp + 0.5 * h * k1p, qm * (w + 0.5 * h * k1w)
        k3w, k3p = wp + 0.5 * h * k2p, qm * (w + 0.5 * h * k2w)
        q4 = q(z + h)
        k4w, k4p = wp + h * k3p, q4 * (w + h * k3w)
        w += (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        wp += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        z += h
        s = math.copysign(1.0, w)
        if s != prev and w != 0.0:
            nodes += 1
            prev = s
    return w, wp, nodes

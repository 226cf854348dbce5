"""Mass-scaled Jacobi coordinates and the rotations between the three sets.

Particles are labelled 1, 2, 3 with masses (m1, m2, m3); the canonical
system here is two identical heavy particles (1, 2) plus one light (3).
Jacobi set s consists of a pair vector x and a spectator vector y:

    set 1: pair (1,2), spectator 3   (heavy-heavy pair)
    set 2: pair (3,1), spectator 2   (heavy-light pair)
    set 3: pair (2,3), spectator 1   (heavy-light pair)

Both vectors carry the usual mass scaling, x = c_x (r_j - r_i) with
c_x = sqrt(mu_pair / m_ref) and similarly for y with the pair-spectator
reduced mass, so that the kinetic energy is diagonal with a single
reference mass and the hyperradius rho^2 = x^2 + y^2 is the same in all
three sets.

Changing sets is a rotation in the (x, y) plane. With the cyclic pair
orientations above all three transforms are proper rotations, and the
angle is reduced to its representative in (-pi/2, pi/2]; for s-wave
kernels only gamma mod pi matters, and the reduction keeps the sign of
sin(gamma)cos(gamma) intact. The representative is positive when the
target set follows the source cyclically (1 -> 2 -> 3 -> 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MassTriple",
    "JacobiScaling",
    "RotationAngle",
    "JACOBI_SETS",
    "jacobi_scaling",
    "transform_matrix",
    "kinematic_angle",
    "rotated_hyperangle",
    "rotated_cos2",
    "distance_ratio_factor",
]

# set label -> (i, j, k): x ~ r_j - r_i, y points from the (i,j) centre
# of mass to particle k
JACOBI_SETS = {1: (1, 2, 3), 2: (3, 1, 2), 3: (2, 3, 1)}


@dataclass(frozen=True)
class MassTriple:
    """Masses of particles 1, 2, 3 in units of the reference mass."""

    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        for m in (self.m1, self.m2, self.m3):
            if not (m > 0 and math.isfinite(m)):
                raise ValueError(f"masses must be positive and finite, got {self}")

    @classmethod
    def heavy_heavy_light(cls, m_heavy: float, m_light: float) -> "MassTriple":
        return cls(m_heavy, m_heavy, m_light)

    @property
    def total(self) -> float:
        return self.m1 + self.m2 + self.m3

    def mass(self, particle: int) -> float:
        return (self.m1, self.m2, self.m3)[particle - 1]

    def pair_reduced(self, s: int) -> float:
        """Reduced mass of the pair of set s."""
        i, j, _ = JACOBI_SETS[s]
        mi, mj = self.mass(i), self.mass(j)
        return mi * mj / (mi + mj)

    def spectator_reduced(self, s: int) -> float:
        """Reduced mass of spectator k against the pair of set s."""
        i, j, k = JACOBI_SETS[s]
        mij = self.mass(i) + self.mass(j)
        return self.mass(k) * mij / (mij + self.mass(k))


@dataclass(frozen=True)
class JacobiScaling:
    """Forward scale factors of one Jacobi set: x = c_x r_pair, y = c_y r_spec."""

    c_x: float
    c_y: float


@dataclass(frozen=True)
class RotationAngle:
    """Kinematic rotation between two Jacobi sets.

    `gamma` is the mod-pi representative in (-pi/2, pi/2] of the rotation
    angle; `matrix` is the exact 2x2 transform acting on (x, y).
    """

    gamma: float
    matrix: np.ndarray

    @property
    def cos2(self) -> float:
        return math.cos(2.0 * self.gamma)

    @property
    def sin2(self) -> float:
        return math.sin(2.0 * self.gamma)


def jacobi_scaling(masses: MassTriple, s: int, m_ref: float = 1.0) -> JacobiScaling:
    if s not in JACOBI_SETS:
        raise ValueError(f"Jacobi set must be 1, 2 or 3, got {s}")
    return JacobiScaling(
        c_x=math.sqrt(masses.pair_reduced(s) / m_ref),
        c_y=math.sqrt(masses.spectator_reduced(s) / m_ref),
    )


def _set_matrix(masses: MassTriple, s: int, m_ref: float) -> np.ndarray:
    """Rows of (x, y) of set s over the basis (r1 - r3, r2 - r3)."""
    i, j, k = JACOBI_SETS[s]
    sc = jacobi_scaling(masses, s, m_ref)
    # displacement of particle p relative to particle 3 in that basis
    disp = {1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0]), 3: np.zeros(2)}
    mi, mj = masses.mass(i), masses.mass(j)
    x_row = sc.c_x * (disp[j] - disp[i])
    y_row = sc.c_y * (disp[k] - (mi * disp[i] + mj * disp[j]) / (mi + mj))
    return np.vstack([x_row, y_row])


def transform_matrix(
    masses: MassTriple, from_set: int, to_set: int, m_ref: float = 1.0
) -> np.ndarray:
    """Exact 2x2 matrix O with (x', y') = O (x, y) between Jacobi sets.

    O is orthogonal because the hyperradius is set independent; with the
    cyclic pair orientations it is a proper rotation (det = +1).
    """
    a_from = _set_matrix(masses, from_set, m_ref)
    a_to = _set_matrix(masses, to_set, m_ref)
    return a_to @ np.linalg.inv(a_from)


def kinematic_angle(
    masses: MassTriple, from_set: int, to_set: int, m_ref: float = 1.0
) -> RotationAngle:
    """Rotation angle between two distinct Jacobi sets, reduced mod pi."""
    if from_set == to_set:
        raise ValueError("kinematic angle requires two distinct sets")
    mat = transform_matrix(masses, from_set, to_set, m_ref)
    gamma = math.atan2(mat[0, 1], mat[0, 0])
    while gamma <= -0.5 * math.pi:
        gamma += math.pi
    while gamma > 0.5 * math.pi:
        gamma -= math.pi
    return RotationAngle(gamma=gamma, matrix=mat)


def rotated_hyperangle(alpha, u, gamma):
    """Hyperangle in the target set given (alpha, u) in the source set.

    u is the cosine of the angle between the source x and y vectors.
    Returns alpha' in [0, pi/2] with
    sin^2 a' = cos^2 g sin^2 a + sin^2 g cos^2 a + 2 sin g cos g sin a cos a u.
    """
    sa, ca = np.sin(alpha), np.cos(alpha)
    sg, cg = math.sin(gamma), math.cos(gamma)
    s2 = (cg * sa) ** 2 + (sg * ca) ** 2 + 2.0 * sg * cg * sa * ca * np.asarray(u)
    s2 = np.clip(s2, 0.0, 1.0)
    return np.arcsin(np.sqrt(s2))


def rotated_cos2(t, u, gamma):
    """cos(2 alpha') from t = cos(2 alpha) and u, same map as rotated_hyperangle.

    Polynomial in t and u apart from the sin(2 alpha) = sqrt(1 - t^2) factor,
    which is what makes fixed Gauss-Jacobi rules exact on rotated states.
    """
    c2g, s2g = math.cos(2.0 * gamma), math.sin(2.0 * gamma)
    t = np.asarray(t, dtype=float)
    return c2g * t - s2g * np.sqrt(np.clip(1.0 - t * t, 0.0, 1.0)) * np.asarray(u)


def distance_ratio_factor(masses: MassTriple, s: int, m_ref: float = 1.0) -> float:
    """Factor converting the mass-scaled ratio rms(y)/rms(x) to physical distances.

    Physical separations are r_pair = x / c_x and r_spec = y / c_y, so the
    ratio of root-mean-square physical distances is (c_x / c_y) times the
    mass-scaled one.
    """
    sc = jacobi_scaling(masses, s, m_ref)
    return sc.c_x / sc.c_y

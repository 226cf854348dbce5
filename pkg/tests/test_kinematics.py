import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from efimov3b.kinematics import (
    JACOBI_SETS,
    MassTriple,
    distance_ratio_factor,
    jacobi_scaling,
    kinematic_angle,
    rotated_cos2,
    rotated_hyperangle,
    transform_matrix,
)

HL = MassTriple.heavy_heavy_light(133.0, 6.0)

masses_st = st.builds(
    MassTriple,
    st.floats(0.05, 500.0),
    st.floats(0.05, 500.0),
    st.floats(0.05, 500.0),
)
set_st = st.sampled_from([1, 2, 3])


def test_set_layout():
    assert JACOBI_SETS == {1: (1, 2, 3), 2: (3, 1, 2), 3: (2, 3, 1)}


def test_scaling_hand_values():
    sc1 = jacobi_scaling(HL, 1)
    assert sc1.c_x == pytest.approx(math.sqrt(66.5), rel=1e-14)
    assert sc1.c_y == pytest.approx(math.sqrt(6.0 * 266.0 / 272.0), rel=1e-14)
    sc2 = jacobi_scaling(HL, 2)
    assert sc2.c_x == pytest.approx(math.sqrt(798.0 / 139.0), rel=1e-14)
    assert sc2.c_y == pytest.approx(math.sqrt(133.0 * 139.0 / 272.0), rel=1e-14)


def test_distance_ratio_factor_hand_values():
    # set 1: (mu_hh / mu_spec)^(1/2) = sqrt(34/3) for 133/133/6
    assert distance_ratio_factor(HL, 1) == pytest.approx(
        math.sqrt(34.0 / 3.0), rel=1e-14
    )
    assert distance_ratio_factor(HL, 2) == pytest.approx(
        math.sqrt(798.0 * 272.0 / (139.0**2 * 133.0)), rel=1e-14
    )
    eq = MassTriple(7.0, 7.0, 7.0)
    for s in (1, 2, 3):
        assert distance_ratio_factor(eq, s) == pytest.approx(
            math.sqrt(3.0) / 2.0, rel=1e-14
        )


def test_heavy_light_sets_equivalent():
    assert distance_ratio_factor(HL, 2) == pytest.approx(
        distance_ratio_factor(HL, 3), rel=1e-14
    )
    sc2, sc3 = jacobi_scaling(HL, 2), jacobi_scaling(HL, 3)
    assert sc2.c_x == pytest.approx(sc3.c_x, rel=1e-14)
    assert sc2.c_y == pytest.approx(sc3.c_y, rel=1e-14)


def test_validation():
    with pytest.raises(ValueError):
        jacobi_scaling(HL, 4)
    with pytest.raises(ValueError):
        kinematic_angle(HL, 2, 2)
    with pytest.raises(ValueError):
        MassTriple(1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        MassTriple(1.0, 1.0, math.inf)
    assert HL.mass(3) == 6.0
    assert HL.total == 272.0


def test_angle_hand_values():
    # between the two heavy-light sets: tan = sqrt(m3 M) / m1 for m1 = m2
    g23 = kinematic_angle(HL, 2, 3).gamma
    assert g23 == pytest.approx(math.atan(math.sqrt(6.0 * 272.0) / 133.0), rel=1e-13)
    assert g23 > 0
    assert kinematic_angle(HL, 3, 2).gamma == pytest.approx(-g23, rel=1e-13)
    eq = MassTriple(3.0, 3.0, 3.0)
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            if a != b:
                assert abs(kinematic_angle(eq, a, b).gamma) == pytest.approx(
                    math.pi / 3.0, rel=1e-13
                )


def test_angle_heavy_exchange_mirror():
    g12 = kinematic_angle(HL, 1, 2).gamma
    g13 = kinematic_angle(HL, 1, 3).gamma
    assert abs(g12) == pytest.approx(abs(g13), rel=1e-13)


def test_light_spectator_angle_shrinks_with_mass():
    angles = [
        abs(kinematic_angle(MassTriple(133.0, 133.0, m), 2, 3).gamma)
        for m in (60.0, 20.0, 6.0, 1.0, 1e-3)
    ]
    assert all(a > b for a, b in zip(angles, angles[1:]))
    assert angles[-1] < 1e-3


@given(masses_st, set_st, set_st)
@settings(deadline=None)
def test_transform_is_proper_rotation(m, a, b):
    mat = transform_matrix(m, a, b)
    assert np.allclose(mat @ mat.T, np.eye(2), atol=1e-12)
    assert np.linalg.det(mat) == pytest.approx(1.0, abs=1e-12)


@given(masses_st, set_st, set_st, st.floats(-5.0, 5.0), st.floats(-5.0, 5.0))
@settings(deadline=None)
def test_hyperradius_preserved(m, a, b, x, y):
    v = np.array([x, y])
    w = transform_matrix(m, a, b) @ v
    assert math.hypot(*w) == pytest.approx(math.hypot(*v), abs=1e-12)


@given(masses_st, set_st, set_st)
@settings(deadline=None)
def test_angle_antisymmetry(m, a, b):
    assume(a != b)
    g = kinematic_angle(m, a, b).gamma
    assume(abs(abs(g) - 0.5 * math.pi) > 1e-8)
    assert kinematic_angle(m, b, a).gamma == pytest.approx(-g, abs=1e-11)


@given(masses_st)
@settings(deadline=None)
def test_rotation_composition(m):
    full = transform_matrix(m, 2, 3) @ transform_matrix(m, 1, 2)
    assert np.allclose(full, transform_matrix(m, 1, 3), atol=1e-11)


@given(masses_st, set_st, set_st)
@settings(deadline=None)
def test_angle_matches_matrix_mod_pi(m, a, b):
    assume(a != b)
    ra = kinematic_angle(m, a, b)
    # mod-pi reduction flips both rows together, so these survive it
    assert ra.cos2 == pytest.approx(
        ra.matrix[0, 0] ** 2 - ra.matrix[0, 1] ** 2, abs=1e-12
    )
    assert math.sin(ra.gamma) * math.cos(ra.gamma) == pytest.approx(
        ra.matrix[0, 0] * ra.matrix[0, 1], abs=1e-12
    )


@given(
    st.floats(0.0, 0.5 * math.pi),
    st.floats(-1.0, 1.0),
    st.floats(-1.5, 1.5),
)
@settings(deadline=None)
def test_rotated_maps_agree(alpha, u, gamma):
    ap = rotated_hyperangle(alpha, u, gamma)
    assert 0.0 <= ap <= 0.5 * math.pi + 1e-15
    t = rotated_cos2(math.cos(2.0 * alpha), u, gamma)
    assert math.cos(2.0 * ap) == pytest.approx(float(t), abs=1e-9)


def test_rotated_endpoints():
    g = 0.3
    assert rotated_hyperangle(0.0, 0.4, g) == pytest.approx(g, abs=1e-14)
    for alpha in (0.1, 0.7, 1.3):
        assert rotated_hyperangle(alpha, 1.0, g) == pytest.approx(
            math.asin(abs(math.sin(alpha + g))), abs=1e-12
        )
        assert rotated_hyperangle(alpha, -1.0, g) == pytest.approx(
            abs(alpha - g), abs=1e-12
        )
    # clip keeps slightly out-of-range t finite
    assert np.isfinite(rotated_cos2(1.0 + 1e-12, 0.3, g))

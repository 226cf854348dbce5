import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from efimov3b.twobody import (
    GaussianPotential,
    bound_state_energies,
    calibrate_depth,
    count_bound_states,
    critical_depth,
    critical_dimension,
    shallow_energy_d2,
    shooting_refine,
    zero_energy_tail,
)

from conftest import PAIR_ENERGY, S_STAR

MU = 798.0 / 139.0
POT = GaussianPotential(S_STAR)


def test_potential_values():
    pot = GaussianPotential(2.684, width=1.0)
    assert pot(0.0) == pytest.approx(-2.684, rel=1e-15)
    assert pot(1.0) == pytest.approx(-2.684 / math.e, rel=1e-14)
    assert pot(50.0) == 0.0
    wide = GaussianPotential(1.0, width=2.0)
    assert wide(2.0) == pytest.approx(-1.0 / math.e, rel=1e-14)


def test_potential_validation():
    with pytest.raises(ValueError):
        GaussianPotential(-0.1)
    with pytest.raises(ValueError):
        GaussianPotential(1.0, width=0.0)


def test_equal_mass_critical_depth_d3():
    # textbook number for -S exp(-r^2) with 2 mu = 1
    assert critical_depth(0.5, 3.0) == pytest.approx(2.684, abs=5e-3)


def test_calibration_round_trip():
    s = calibrate_depth(MU, 2.75)
    assert s == pytest.approx(S_STAR, rel=1e-6)
    assert critical_dimension(GaussianPotential(s), MU) == pytest.approx(
        2.75, abs=1e-4
    )


def test_critical_depth_monotone_in_d():
    depths = [critical_depth(MU, d) for d in (2.2, 2.5, 2.8, 3.0)]
    assert all(a < b for a, b in zip(depths, depths[1:]))


def test_dimension_two_always_binds():
    for s in (1e-2, 1e-1, 1.0):
        assert count_bound_states(GaussianPotential(s), MU, 2.0) >= 1
    assert count_bound_states(GaussianPotential(1e-2), MU, 2.0) == 1
    assert count_bound_states(GaussianPotential(1e-1), MU, 2.0) == 1


def test_dimension_three_needs_depth():
    for s in (1e-2, 1e-1):
        assert count_bound_states(GaussianPotential(s), MU, 3.0) == 0
    assert count_bound_states(GaussianPotential(S_STAR), MU, 3.0) == 0


def test_calibrated_depth_threshold_straddle():
    assert count_bound_states(POT, MU, 2.7495) == 1
    assert count_bound_states(POT, MU, 2.7505) == 0


def test_frozen_shallow_energies():
    for d in (2.375, 2.52):
        e = bound_state_energies(POT, MU, d)
        assert e.size == 1
        assert e[-1] == pytest.approx(PAIR_ENERGY[d], rel=1e-8)
    e = bound_state_energies(POT, MU, 2.745)
    assert e[-1] == pytest.approx(PAIR_ENERGY[2.745], rel=1e-4)


def test_frozen_energies_monotone_in_d():
    ds = sorted(PAIR_ENERGY)
    es = [PAIR_ENERGY[d] for d in ds]
    assert all(e < 0 for e in es)
    assert all(a < b for a, b in zip(es, es[1:]))


def test_shooting_against_independent_oracle():
    rng = np.random.default_rng(20260822)
    for _ in range(10):
        s = float(rng.uniform(0.3, 6.0))
        d = float(rng.uniform(2.0, 2.95))
        pot = GaussianPotential(s)
        e = bound_state_energies(pot, MU, d)[-1]
        ref = oracles.pair_energy_shooting(pot, MU, d, e * 1.01, e * 0.99)
        assert e == pytest.approx(ref, rel=1e-8)


def test_matrix_route_matches_shooting():
    for d, s in ((2.05, S_STAR), (2.6, 1.3), (3.0, 2.0)):
        pot = GaussianPotential(s)
        raw = bound_state_energies(pot, MU, d, refine=False)
        polished = bound_state_energies(pot, MU, d, refine=True)
        assert raw.size == polished.size
        for a, b in zip(raw, polished):
            assert a == pytest.approx(b, rel=2e-4)


def test_shooting_refine_validation():
    with pytest.raises(ValueError):
        shooting_refine(POT, MU, 2.5, 0.1)


def test_deep_well_spectrum_ordering():
    e = bound_state_energies(GaussianPotential(12.0), MU, 2.5)
    assert e.size >= 3
    assert all(a < b < 0 for a, b in zip(e, e[1:]))
    # node-count route agrees with the resolved spectrum
    assert count_bound_states(GaussianPotential(12.0), MU, 2.5) == e.size


def test_zero_energy_tail_sign_flip_at_threshold():
    s_c = critical_depth(MU, 3.0)
    below = zero_energy_tail(GaussianPotential(s_c * 0.999), MU, 3.0)
    above = zero_energy_tail(GaussianPotential(s_c * 1.001), MU, 3.0)
    assert below.A * above.A < 0
    assert above.nodes == below.nodes + 1
    assert below.nu == pytest.approx(0.5)


def test_shallow_limit_formula_d2():
    for s in (0.01, 0.02):
        pot = GaussianPotential(s)
        approx = shallow_energy_d2(pot, MU)
        exact = bound_state_energies(pot, MU, 2.0)[-1]
        assert approx == pytest.approx(exact, rel=0.05)
    with pytest.raises(ValueError):
        shallow_energy_d2(GaussianPotential(0.0), MU)


def test_zero_energy_tail_validation():
    with pytest.raises(ValueError):
        zero_energy_tail(POT, MU, 1.9)
    with pytest.raises(ValueError):
        zero_energy_tail(POT, MU, 3.1)


def test_critical_bracket_validation():
    with pytest.raises(ValueError):
        critical_depth(MU, 2.5, bracket=(1e-4, 2e-4))
    with pytest.raises(ValueError):
        critical_dimension(GaussianPotential(30.0), MU)


@given(st.floats(2.0, 3.0), st.floats(2.0, 3.0))
@settings(deadline=None, max_examples=25)
def test_count_monotone_in_dimension(d1, d2):
    pot = GaussianPotential(2.0)
    lo, hi = sorted((d1, d2))
    assert count_bound_states(pot, MU, lo) >= count_bound_states(pot, MU, hi)


@given(st.floats(0.05, 20.0), st.floats(0.05, 20.0))
@settings(deadline=None, max_examples=25)
def test_count_monotone_in_depth(s1, s2):
    lo, hi = sorted((s1, s2))
    d = 2.6
    assert count_bound_states(GaussianPotential(lo), MU, d) <= count_bound_states(
        GaussianPotential(hi), MU, d
    )

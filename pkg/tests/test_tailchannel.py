import numpy as np
import pytest

from efimov3b import tailchannel
from efimov3b.angular import AngularOperator, ThreeBodySystem

import oracles
from conftest import D_SMALL, PAIR_ENERGY, S_STAR

E2 = PAIR_ENERGY[D_SMALL]


@pytest.fixture(scope="module")
def hl(hl_system):
    return hl_system


def _direct_lam0(system, rho):
    op = AngularOperator(system, D_SMALL, n_funcs=120)
    return float(op.channels(rho, 1)[0][0])


def test_sweep_matches_direct_route(hl):
    rhos = np.geomspace(15.0, 57.0, 20)
    seed = _direct_lam0(hl, rhos[0])
    sw = tailchannel.sweep(hl, D_SMALL, rhos, seed, pair_energy=E2)
    assert sw.lam.shape == rhos.shape
    assert np.all(sw.residual < 1e-8)
    for k in (0, 6, 13, 19):
        ref = _direct_lam0(hl, rhos[k])
        scale = 1.0 + 2.0 * abs(E2) * rhos[k] ** 2
        assert abs(sw.lam[k] - ref) / scale < 1e-5


def test_sweep_exchange_metric(hl):
    rhos = np.geomspace(15.0, 57.0, 12)
    sw = tailchannel.sweep(hl, D_SMALL, rhos, _direct_lam0(hl, rhos[0]),
                           pair_energy=E2)
    assert np.all(sw.metric > 1.0)
    assert np.all(sw.metric < 2.0)
    assert np.all(np.diff(sw.metric) < 0)


def test_solve_channel_step_doubling(hl):
    ref = -27.667296897467  # n_funcs = 120 spectral value at rho = 40
    guess = ref - 0.1
    coarse = tailchannel.solve_channel(hl, D_SMALL, 40.0, guess,
                                       pair_energy=E2, points_per_width=40)
    fine = tailchannel.solve_channel(hl, D_SMALL, 40.0, guess,
                                     pair_energy=E2, points_per_width=80)
    assert coarse.residual < 1e-9 and fine.residual < 1e-9
    assert coarse.iterations >= 1
    # h^2 truncation rides on 2 rho^2; step doubling removes it
    scale = 1.0 + 2.0 * abs(E2) * 40.0**2
    assert abs(coarse.lam - ref) / scale < 2e-3
    rich = (4.0 * fine.lam - coarse.lam) / 3.0
    assert abs(rich - ref) / scale < 2e-6


def test_free_ground_level_exact():
    free = ThreeBodySystem.heavy_light(133.0, 6.0, 0.0)
    for d in (D_SMALL, 2.75):
        st = tailchannel.solve_channel(free, d, 5.0, -0.3, pair_energy=0.0)
        assert abs(st.lam) < 1e-10


def test_free_second_level_via_seed():
    free = ThreeBodySystem.heavy_light(133.0, 6.0, 0.0)
    for d in (D_SMALL, 2.75):
        st = tailchannel.solve_channel(
            free, d, 5.0, 4.0 * d - 0.5, pair_energy=0.0,
            points_per_width=40, seed=lambda a: np.cos(2.0 * a),
        )
        assert st.lam == pytest.approx(4.0 * d, abs=1e-3)


def test_solve_channel_stall_raises(hl):
    with pytest.raises(ArithmeticError):
        tailchannel.solve_channel(hl, D_SMALL, 40.0, -500.0,
                                  pair_energy=E2, max_iter=2)


def test_sigma_tail_matches_pair_moment(hl, surface_small):
    _, r, u = oracles.pair_state_d(hl.pair_potential, hl.mu_pair, D_SMALL)
    i2 = oracles.derivative_moment(r, u)
    srow = surface_small.sigma[-1, 0, 0] * surface_small.rho[-1] ** 2
    assert srow == pytest.approx(i2 - 0.25, rel=0.03)

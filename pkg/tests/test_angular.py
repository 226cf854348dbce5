import math

import numpy as np
import pytest

import oracles
from efimov3b.angular import (
    AngularOperator,
    HyperangularBasis,
    ThreeBodySystem,
    build_surface,
    default_rho_grid,
    energy_scale_factor,
    hyperradial_barrier_coeff,
    nonsymmetric_channel_oracle,
    rotation_coefficients,
    rotation_matrix_dense,
    scale_exponent,
)
from efimov3b.twobody import GaussianPotential

from conftest import D_SMALL, PAIR_ENERGY, S_STAR

# lowest channel at d = 2.375, n_funcs = 120; n_funcs = 150 moves the
# rho = 57 value by 6e-11
DIRECT_LAM0 = {
    10.0: -8.755832404219,
    20.0: -14.744488897309,
    40.0: -27.667296897467,
    57.0: -42.868289432595,
}


def test_free_spectrum_values():
    b3 = HyperangularBasis(3.0, 6)
    assert np.allclose(b3.free_eigenvalue([0, 1, 2]), [0.0, 12.0, 32.0])
    assert np.allclose(b3.reduced_barrier_eigenvalue([0, 1, 2]), [4.0, 16.0, 36.0])
    be = HyperangularBasis(2.75, 6)
    assert np.allclose(be.free_eigenvalue([0, 1, 2]), [0.0, 11.0, 30.0])
    b = HyperangularBasis(2.2, 5)
    k = 2.0 * np.arange(4)
    assert np.allclose(b.free_eigenvalue(np.arange(4)), k * (k + 2.4))


def test_basis_validation():
    with pytest.raises(ValueError):
        HyperangularBasis(1.9, 8)
    with pytest.raises(ValueError):
        HyperangularBasis(3.1, 8)
    with pytest.raises(ValueError):
        HyperangularBasis(2.5, 1)
    with pytest.raises(ValueError):
        HyperangularBasis(2.5, 8, n_alpha=9)


@pytest.mark.parametrize("d", [2.0, 2.375, 2.75, 3.0])
def test_gram_identity(d):
    b = HyperangularBasis(d, 20)
    gram = (b.bmat * b.wt[:, None]).T @ b.bmat
    assert np.abs(gram - np.eye(20)).max() < 1e-12


def test_rotation_diagonal_against_dense(hl_system):
    b = HyperangularBasis(D_SMALL, 18)
    gamma = hl_system.faddeev_gamma
    dense = rotation_matrix_dense(b, gamma)
    diag = rotation_coefficients(b, gamma)
    off = dense - np.diag(np.diag(dense))
    assert np.abs(off).max() < 1e-10
    assert np.abs(np.diag(dense) - diag).max() < 1e-10
    # the rotation is norm preserving, and constants map to themselves
    assert np.abs(diag).max() <= 1.0 + 1e-10
    assert diag[0] == pytest.approx(1.0, abs=1e-10)


def test_rotation_zero_angle_is_identity():
    b = HyperangularBasis(2.6, 14)
    assert np.abs(rotation_matrix_dense(b, 0.0) - np.eye(14)).max() < 1e-12


def test_system_validation():
    from efimov3b.kinematics import MassTriple

    with pytest.raises(ValueError):
        ThreeBodySystem(MassTriple(133.0, 120.0, 6.0), GaussianPotential(S_STAR))


def test_system_pair_energy(hl_system):
    assert hl_system.pair_energy(D_SMALL) == pytest.approx(
        PAIR_ENERGY[D_SMALL], rel=1e-8
    )
    assert hl_system.pair_energy(3.0) == 0.0


def test_zero_depth_gives_free_channels():
    free = ThreeBodySystem.heavy_light(133.0, 6.0, 0.0)
    op = AngularOperator(free, 2.6, n_funcs=12)
    lam, z = op.channels(5.0, 3)
    assert np.allclose(lam, op.t_free[:3], atol=1e-12)
    assert np.allclose(z.T @ z, np.eye(3), atol=1e-12)


def test_small_rho_free_limit(hl_system):
    op = AngularOperator(hl_system, D_SMALL, n_funcs=30)
    lam, _ = op.channels(1e-3, 3)
    assert np.abs(lam - op.t_free[:3]).max() < 1e-4


def test_d3_reduction_against_window_oracle(hl_system):
    op = AngularOperator(hl_system, 3.0, n_funcs=80)
    for rho in (0.7, 3.0):
        prod = op.channels(rho, 4)[0]
        ref = oracles.d3_angular_levels(hl_system, rho, 4, n_grid=900)
        assert np.all(np.abs(prod - ref) <= 1e-8 * np.maximum(1.0, np.abs(prod)))


def test_symmetric_route_matches_nonsymmetric(hl_system):
    op = AngularOperator(hl_system, D_SMALL, n_funcs=40)
    for rho in (0.5, 5.0, 30.0):
        sym = op.channels(rho, 4)[0]
        non = nonsymmetric_channel_oracle(op, rho, 4)
        assert np.all(np.abs(sym - non) <= 1e-9 * np.maximum(1.0, np.abs(sym)))


def test_quadrature_modes_agree_in_overlap(hl_system):
    op = AngularOperator(hl_system, D_SMALL, n_funcs=40)
    for rho in (30.0, 50.0):
        ln = op.channels(rho, 3, mode="nodes")[0]
        ll = op.channels(rho, 3, mode="layer")[0]
        assert np.all(np.abs(ln - ll) <= 3e-7 * np.maximum(1.0, np.abs(ln)))


def test_quadrature_mode_validation(hl_system):
    op = AngularOperator(hl_system, D_SMALL, n_funcs=24)
    with pytest.raises(ValueError):
        op.potential_matrix(10.0, "layer")
    with pytest.raises(ValueError):
        op.potential_matrix(10.0, "cells")


def test_lowest_channel_regression(hl_system):
    op = AngularOperator(hl_system, D_SMALL, n_funcs=120)
    for rho, ref in DIRECT_LAM0.items():
        assert op.channels(rho, 1)[0][0] == pytest.approx(ref, rel=1e-9)


def test_basis_size_convergence(hl_system):
    l60 = AngularOperator(hl_system, D_SMALL, n_funcs=60).channels(10.0, 1)[0][0]
    l90 = AngularOperator(hl_system, D_SMALL, n_funcs=90).channels(10.0, 1)[0][0]
    assert l90 <= l60 + 1e-10 * abs(l60)
    assert abs(l90 - l60) < 1e-6 * abs(l60)


def test_channel_variational_in_depth():
    lams = []
    for scale in (0.8, 1.0, 1.2):
        sysv = ThreeBodySystem.heavy_light(133.0, 6.0, scale * S_STAR)
        lams.append(AngularOperator(sysv, D_SMALL, n_funcs=40).channels(10.0, 1)[0][0])
    assert lams[0] > lams[1] > lams[2]


def test_d3_bound_pair_limit():
    deep = ThreeBodySystem.heavy_light(133.0, 6.0, 1.0)
    e2 = deep.pair_energy(3.0)
    op = AngularOperator(deep, 3.0, n_funcs=150)
    lam0 = op.channels(100.0, 1)[0][0]
    assert lam0 / (2.0 * 100.0**2) == pytest.approx(e2, rel=0.01)


def test_barrier_coeff_values():
    assert hyperradial_barrier_coeff(3.0) == pytest.approx(15.0 / 4.0)
    assert hyperradial_barrier_coeff(2.0) == pytest.approx(3.0 / 4.0)
    assert hyperradial_barrier_coeff(2.75) == pytest.approx(2.8125)


def test_scale_exponent():
    d = 2.5
    lam_inf = -(4.0 + 0.25) - hyperradial_barrier_coeff(d)
    s0 = scale_exponent(lam_inf, d)
    assert s0 == pytest.approx(2.0, rel=1e-14)
    assert energy_scale_factor(s0) == pytest.approx(math.exp(math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        scale_exponent(-hyperradial_barrier_coeff(d), d)


def test_default_rho_grid():
    g = default_rho_grid()
    assert g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(1e5)
    steps = np.diff(np.log(g))
    assert np.abs(steps - steps[0]).max() < 1e-12


def test_grid_validation(hl_system):
    with pytest.raises(ValueError):
        build_surface(hl_system, D_SMALL, rho_grid=np.geomspace(1e-3, 10, 8))
    with pytest.raises(ValueError):
        build_surface(hl_system, D_SMALL, rho_grid=np.linspace(1e-3, 10, 40))


def test_surface_structure(surface_small, hl_system):
    s = surface_small
    n, nb, nc = s.rho.size, s.n_funcs, s.n_ch
    assert (n, nb, nc) == (160, 24, 2)
    assert s.lam.shape == (n, nc) and s.z.shape == (n, nb, nc)
    assert s.p.shape == s.q.shape == s.sigma.shape == (n, nc, nc)
    assert s.pair_energy == PAIR_ENERGY[D_SMALL]
    assert s.system is hl_system
    n_dir = int(np.sum(~s.extrapolated))
    assert 0 < n_dir < n
    assert not s.extrapolated[:n_dir].any() and s.extrapolated[n_dir:].all()
    assert s.rho[n_dir - 1] <= s.meta["match_rho"] < s.rho[n_dir]
    assert abs(s.meta["tail_seam_gap"]) < 2e-4
    # channel ordering and free small-rho limit
    assert np.all(np.diff(s.lam, axis=1) > 0)
    assert abs(s.lam[0, 0]) < 1e-4
    free2 = 2.0 * (2.0 + 2.0 * s.d - 2.0)
    assert s.lam[0, 1] == pytest.approx(free2, abs=1e-3)


def test_surface_vectors_orthonormal(surface_small):
    s = surface_small
    n_dir = int(np.sum(~s.extrapolated))
    for k in (0, n_dir // 2, n_dir - 1):
        g = s.z[k].T @ s.z[k]
        assert np.abs(g - np.eye(s.n_ch)).max() < 1e-10
    # tracking keeps a continuous phase
    dots = np.einsum("rnc,rnc->rc", s.z[: n_dir - 1], s.z[1:n_dir])
    assert np.all(dots > 0)


def test_surface_couplings(surface_small):
    s = surface_small
    n_dir = int(np.sum(~s.extrapolated))
    sl = slice(20, n_dir - 6)
    anti = np.abs(s.p[sl] + np.swapaxes(s.p[sl], 1, 2)).max()
    assert anti < 1e-6 * max(1.0, np.abs(s.p[sl]).max())
    sym = np.abs(s.sigma[sl] - np.swapaxes(s.sigma[sl], 1, 2)).max()
    assert sym == 0.0
    assert np.all(np.isfinite(s.p)) and np.all(np.isfinite(s.q))
    assert np.all(np.isfinite(s.sigma))
    # beyond the seam the vectors are frozen and only the lowest-channel
    # diagonal survives, balancing lam toward the spectator barrier
    tail = slice(n_dir, None)
    assert np.abs(s.p[tail]).max() == 0.0
    assert np.all(s.q[tail, 0, 0] == -s.sigma[tail, 0, 0])
    assert np.abs(s.q[tail, 0, 1]).max() == 0.0
    assert np.abs(s.q[tail, 1, 1]).max() == 0.0
    assert np.all(s.lam[tail, 1] == s.lam[n_dir - 1, 1])
    assert np.all(s.sigma[tail, 0, 0] > 0)


def test_surface_pq_spline_route(hl_system):
    # seam-free fine grid so both routes' grid error stays subdominant
    from scipy.interpolate import CubicSpline

    rho = np.geomspace(0.05, 12.0, 480)
    s = build_surface(hl_system, D_SMALL, rho_grid=rho, n_funcs=16, n_ch=2,
                      continuation=False, pair_energy=PAIR_ENERGY[D_SMALL])
    assert not s.extrapolated.any()
    zs = CubicSpline(np.log(rho), s.z, axis=0)
    sl = slice(12, 468)
    lr = np.log(rho[sl])
    dz = zs(lr, 1) / rho[sl, None, None]
    d2z = (zs(lr, 2) - zs(lr, 1)) / rho[sl, None, None] ** 2
    p_ref = np.einsum("rnc,rnk->rck", s.z[sl], dz)
    q_ref = np.einsum("rnc,rnk->rck", s.z[sl], d2z)
    p_scale = max(1e-30, np.abs(p_ref).max())
    q_scale = max(1e-30, np.abs(q_ref).max())
    assert np.abs(s.p[sl] - p_ref).max() < 3e-4 * p_scale
    assert np.abs(s.q[sl] - q_ref).max() < 2e-3 * q_scale

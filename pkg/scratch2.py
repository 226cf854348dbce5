"""Second measurement batch: fixture observables, couplings, ladder."""
import sys
import time

import numpy as np

sys.path.insert(0, "tests")
import oracles  # noqa: E402

from efimov3b import observables  # noqa: E402
from efimov3b.angular import (  # noqa: E402
    AngularOperator,
    ThreeBodySystem,
    build_surface,
    nonsymmetric_channel_oracle,
)
from efimov3b.radial import solve_radial, efimov_scale_factor  # noqa: E402
from efimov3b.twobody import bound_state_energies  # noqa: E402

S_STAR = 0.1642282450262154
E2_2375 = -4.636368190741e-3
sys3 = ThreeBodySystem.heavy_light(133.0, 6.0, S_STAR)
t0 = time.time()


def log(msg):
    print(f"[{time.time() - t0:7.1f}s] {msg}", flush=True)


rho = np.geomspace(1e-3, 400.0, 160)
surf = build_surface(sys3, 2.375, rho_grid=rho, n_funcs=24, n_ch=2,
                     pair_energy=E2_2375)
sol = solve_radial(surf, n_states=4, n_points=900, rho_min=2e-3,
                   rho_max=350.0)
log(f"fixture rebuilt: {len(sol.states)} states")
sf = efimov_scale_factor(sol.states, surf, threshold=sol.threshold)
log(f"scale factor: s0={float(sf.s0):.6f} predicted={float(sf.predicted):.6f}")
log(f"  ratios={np.asarray(sf.ratios)} consistency={sf.consistency()!r}")

# p/q dual route from spline derivatives of z (direct region only)
from scipy.interpolate import CubicSpline  # noqa: E402

n_dir = int(np.sum(~surf.extrapolated))
log(f"direct rows: {n_dir} of {rho.size}")
zs = CubicSpline(np.log(rho[:n_dir]), surf.z[:n_dir], axis=0)
sl = slice(20, n_dir - 6)
lr = np.log(rho[sl])
dz = zs(lr, 1) / rho[sl, None, None]
d2z = (zs(lr, 2) - zs(lr, 1)) / rho[sl, None, None] ** 2
p_ref = np.einsum("rnc,rnk->rck", surf.z[sl], dz)
q_ref = np.einsum("rnc,rnk->rck", surf.z[sl], d2z)
dp = np.abs(surf.p[sl] - p_ref).max()
dq = np.abs(surf.q[sl] - q_ref).max()
anti = np.abs(surf.p[sl] + np.swapaxes(surf.p[sl], 1, 2)).max()
log(f"p spline-route max diff={dp:.3e}  q max diff={dq:.3e}  "
    f"p antisym defect={anti:.3e}")
log(f"p scale={np.abs(surf.p[sl]).max():.3e} q scale={np.abs(surf.q[sl]).max():.3e}")

# layer-vs-nodes quadrature overlap window
op = AngularOperator(sys3, 2.375, n_funcs=40)
log(f"layer_switch={op.layer_switch:.2f}")
for r0 in (30.0, 50.0):
    ln = op.channels(r0, 3, mode="nodes")[0]
    ll = op.channels(r0, 3, mode="layer")[0]
    log(f"rho={r0}: nodes vs layer diff={np.abs(ln - ll)}")

# nonsymmetric oracle route
for r0 in (0.5, 5.0, 30.0):
    sym = op.channels(r0, 4)[0]
    non = nonsymmetric_channel_oracle(op, r0, 4)
    log(f"rho={r0}: sym vs nonsym diff={np.abs(sym - non)}")

# basis-size convergence at rho=10
l60 = AngularOperator(sys3, 2.375, n_funcs=60).channels(10.0, 1)[0][0]
l90 = AngularOperator(sys3, 2.375, n_funcs=90).channels(10.0, 1)[0][0]
log(f"lam0(10) Nb60={l60:.12f} Nb90={l90:.12f} rel={(l90 - l60) / abs(l60):.2e}")

# d = 3 deep-pair limit: lam0 / (2 rho^2) -> e2 at rho = 100
deep = ThreeBodySystem.heavy_light(133.0, 6.0, 1.0)
e2_deep = bound_state_energies(deep.pair_potential, deep.mu_pair, 3.0)[-1]
op3 = AngularOperator(deep, 3.0, n_funcs=150)
l3 = op3.channels(100.0, 1)[0][0]
log(f"d3 limit: e2={e2_deep:.8f} lam0/(2rho^2)={l3 / 2e4:.8f} "
    f"rel={(l3 / 2e4 - e2_deep) / abs(e2_deep):.2%}")

# observables on the fixture, states 1 and 3
for idx in (1, 3):
    st = sol.states[idx]
    for j in (1, 2):
        tab = observables.AngularMomentTables(surf, j)
        vals = {est: observables.radii_ratio(surf, st, j, tables=tab,
                                             estimator=est)
                for est in ("projected", "cross", "partition")}
        log(f"state{idx} set{j}: " + " ".join(
            f"{k}={v:.8f}" for k, v in vals.items()))
        if idx == 1:
            m1 = observables.msr_jacobi(surf, st, j, s=1.0, tables=tab)
            m3 = observables.msr_jacobi(surf, st, j, s=0.3, tables=tab)
            log(f"  s-law x2: s1={m1.x2:.10e} s0.3={m3.x2:.10e} "
                f"pred={(2.0 + 0.09) / 3.0 * m1.x2:.10e}")
            log(f"  ratio s-indep: {m1.ratio_jacobi:.12f} vs {m3.ratio_jacobi:.12f}")
            c1 = observables.normalization(surf, st, 1.0, set_index=j, tables=tab)
            c3 = observables.normalization(surf, st, 0.3, set_index=j, tables=tab)
            log(f"  C(s): C(1)={c1:.10e} C(0.3)={c3:.10e} ratio={c3 / c1:.12f}")

# set 2 vs set 3 equivalence
st1 = sol.states[1]
r2 = observables.radii_ratio(surf, st1, 2)
r3 = observables.radii_ratio(surf, st1, 3)
log(f"set2 vs set3 ratio: {r2:.14f} {r3:.14f} diff={abs(r2 - r3):.2e}")

# density grid marginal closure on a small grid
tab2 = observables.AngularMomentTables(surf, 2)
rad = observables.msr_jacobi(surf, st1, 2, s=1.0, tables=tab2)
rx, ry = observables.default_density_axes(rad, n_x=41, n_y=41, span=3.0)
grid = observables.density_grid(surf, st1, 2, rx, ry, s=1.0, n_u=32,
                                n_angle=12)
log(f"density: shape={grid.values.shape} clipped={grid.clipped} "
    f"mass={grid.total_mass():.6f}")
log(f"density meta={grid.meta}")
vals = grid.values
log(f"negative fraction={np.mean(vals < 0):.3f} min={vals.min():.3e}")

# pair moment oracle vs sigma tail row
e_orc, r_orc, u_orc = oracles.pair_state_d(sys3.pair_potential, sys3.mu_pair,
                                           2.375)
i2 = oracles.derivative_moment(r_orc, u_orc)
srow = surf.sigma[-1, 0, 0] * surf.rho[-1] ** 2
log(f"pair oracle e={e_orc:.9e} I2-1/4={i2 - 0.25:.6f} "
    f"sigma00 rho^2={srow:.6f} rel={(srow - (i2 - 0.25)) / srow:.3%}")

# inverse-square ladder
isurf = oracles.inverse_square_surface(sys3, 2.5, 2.0)
isol = solve_radial(isurf, n_states=10, n_points=5000, rho_min=1.0,
                    rho_max=1.0e6, include_coupling=False)
ens = np.array([s.energy for s in isol.states])
log(f"ladder energies: {ens}")
rat = ens[:-1] / ens[1:]
log(f"ladder ratios: {rat} target={np.exp(np.pi):.6f}")
log(f"ladder ratio rel err: {(rat - np.exp(np.pi)) / np.exp(np.pi)}")
sf2 = efimov_scale_factor(isol.states, isurf)
log(f"ladder s0={float(sf2.s0):.10f} predicted={float(sf2.predicted):.8f}")

log("done")

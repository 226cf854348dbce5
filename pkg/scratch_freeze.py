"""Measurement run backing the frozen constants in the test suite."""
import sys
import time

import numpy as np

sys.path.insert(0, "tests")
import oracles  # noqa: E402

from efimov3b import observables, tailchannel  # noqa: E402
from efimov3b.angular import (  # noqa: E402
    AngularOperator,
    ThreeBodySystem,
    build_surface,
)
from efimov3b.radial import solve_radial, tower_ratios, efimov_scale_factor  # noqa: E402

S_STAR = 0.1642282450262154
E2_2375 = -4.636368190741e-3
sys3 = ThreeBodySystem.heavy_light(133.0, 6.0, S_STAR)
t0 = time.time()


def log(msg):
    print(f"[{time.time() - t0:7.1f}s] {msg}", flush=True)


# 1. d = 3 production vs window-integral oracle
op3 = AngularOperator(sys3, 3.0, n_funcs=80)
for rho in (0.7, 3.0):
    prod = op3.channels(rho, 4)[0]
    orc = oracles.d3_angular_levels(sys3, rho, 4, n_grid=900)
    log(f"d3 rho={rho}: prod={np.array2string(prod, precision=14)}")
    log(f"        diff={np.abs(prod - orc)}")
    orc7 = oracles.d3_angular_levels(sys3, rho, 4, n_grid=700)
    log(f"   n700 diff={np.abs(prod - orc7)}")

# 2. direct large-basis lowest channel at d = 2.375 vs tail route
op = AngularOperator(sys3, 2.375, n_funcs=120)
direct = {}
for rho in (10.0, 20.0, 40.0, 57.0):
    direct[rho] = float(op.channels(rho, 1)[0][0])
    log(f"direct Nb=120 rho={rho}: lam0={direct[rho]:.12f}")
op150 = AngularOperator(sys3, 2.375, n_funcs=150)
log(f"direct Nb=150 rho=57: lam0={float(op150.channels(57.0, 1)[0][0]):.12f}")

rhos = np.geomspace(10.0, 57.0, 25)
sw = tailchannel.sweep(sys3, 2.375, rhos, direct[10.0],
                       pair_energy=E2_2375)
for k in (0, 8, 16, 24):
    dv = float(op.channels(rhos[k], 1)[0][0])
    scale = 2.0 * abs(E2_2375) * rhos[k] ** 2
    log(f"sweep rho={rhos[k]:.4f}: lam={sw.lam[k]:.10f} direct={dv:.10f} "
        f"diff={sw.lam[k] - dv:.3e} rel2e2rr={(sw.lam[k] - dv) / scale:.2e}")
log(f"sweep metric: {np.array2string(sw.metric[[0, 8, 16, 24]], precision=8)}")
log(f"metric monotone decreasing: {bool(np.all(np.diff(sw.metric) < 0))}, "
    f"min={sw.metric.min():.8f} max={sw.metric.max():.8f}")

st40 = tailchannel.solve_channel(sys3, 2.375, 40.0, direct[40.0] - 0.1,
                                 pair_energy=E2_2375, points_per_width=40)
log(f"solve ppw40 rho=40: lam={st40.lam:.10f} diff={st40.lam - direct[40.0]:.3e}")
st80 = tailchannel.solve_channel(sys3, 2.375, 40.0, direct[40.0] - 0.1,
                                 pair_energy=E2_2375, points_per_width=80)
rich = (4.0 * st80.lam - st40.lam) / 3.0
log(f"solve ppw80 rho=40: lam={st80.lam:.10f} richardson={rich:.10f} "
    f"diff={rich - direct[40.0]:.3e}")

# 3. free K = 2 level through the tail solver (zero-depth pair)
free_sys = ThreeBodySystem.heavy_light(133.0, 6.0, 0.0)
for d in (2.375, 2.75):
    st = tailchannel.solve_channel(free_sys, d, 5.0, 4.0 * d - 0.5,
                                   pair_energy=0.0, points_per_width=40,
                                   seed=lambda a: np.cos(2.0 * a))
    log(f"free K=2 d={d} ppw40: lam={st.lam!r} diff={st.lam - 4.0 * d:.2e}")
    st0 = tailchannel.solve_channel(free_sys, d, 5.0, -0.3, pair_energy=0.0)
    log(f"free K=0 d={d}: lam={st0.lam!r}")

# 4. small fixture surface + radial solution
rho = np.geomspace(1e-3, 400.0, 160)
surf = build_surface(sys3, 2.375, rho_grid=rho, n_funcs=24, n_ch=2,
                     pair_energy=E2_2375)
log(f"surface_small built: meta match_rho={surf.meta.get('match_rho')}, "
    f"seam_gap={surf.meta.get('tail_seam_gap')}, n_keep={surf.meta.get('n_keep')}")
log(f"lam[0]={surf.lam[0, 0]:.10f} lam[-1,0]={surf.lam[-1, 0]:.10f} "
    f"lam_inf={surf.lam_inf:.12f}")
sol = solve_radial(surf, n_states=4, n_points=900, rho_min=2e-3,
                   rho_max=350.0)
log(f"threshold={sol.threshold!r}")
for st in sol.states:
    log(f"state {st.index}: E={st.energy:.12e} nodes={st.nodes} "
        f"tail={st.tail_fraction:.2e} coarse={st.energy_coarse:.12e}")
bound = sol.bound()
log(f"bound count={len(bound)}")
log(f"tower_ratios={tower_ratios(sol.states, threshold=sol.threshold)}")
try:
    sf = efimov_scale_factor(sol.states, surf, threshold=sol.threshold)
    log(f"scale factor: s0={sf.s0:.10f} predicted={sf.predicted:.6f} "
        f"ratios={sf.ratios} consistency={sf.consistency():.4f}")
except ValueError as exc:
    log(f"scale factor raised: {exc}")

# 5. observables on the fixture (state 1)
st1 = sol.states[1]
for j in (1, 2):
    tab = observables.AngularMomentTables(surf, j)
    log(f"set {j}: orthonormality defect={tab.orthonormality_defect():.3e}")
    for est in ("projected", "cross", "partition"):
        r = observables.radii_ratio(surf, st1, j, tables=tab, estimator=est)
        log(f"set {j} state1 ratio[{est}]={r:.10f}")
    m = observables.msr_jacobi(surf, st1, j, s=1.0, tables=tab)
    log(f"set {j} msr: x2={m.x2:.10f} y2={m.y2:.10f} "
        f"xp={m.x2_projected:.10f} yp={m.y2_projected:.10f} "
        f"norm3d={m.norm_3d:.6e} gap={m.estimator_gap:.4f}")

# 6. sigma tail row vs pair-moment oracle
e_orc, r_orc, u_orc = oracles.pair_state_d(sys3.pair_potential, sys3.mu_pair,
                                           2.375)
i2 = oracles.derivative_moment(r_orc, u_orc)
log(f"pair oracle: e={e_orc:.9e} (frozen {E2_2375:.9e}) I2={i2:.6f} "
    f"I2-1/4={i2 - 0.25:.6f}")
srow = surf.sigma[-1, 0, 0] * surf.rho[-1] ** 2
log(f"sigma00*rho^2 last row={srow:.6f} rel diff={(srow - (i2 - 0.25)) / srow:.3%}")

# 7. inverse-square ladder
isurf = oracles.inverse_square_surface(sys3, 2.5, 2.0)
isol = solve_radial(isurf, n_states=10, n_points=5000, rho_min=1.0,
                    rho_max=1.0e6, include_coupling=False)
ens = [s.energy for s in isol.states]
log(f"inverse-square energies: {['%.6e' % e for e in ens]}")
rat = [ens[i] / ens[i + 1] for i in range(len(ens) - 1)]
log(f"ratios: {['%.6f' % r for r in rat]} target={np.exp(np.pi):.6f}")
sf2 = efimov_scale_factor(isol.states, isurf)
log(f"s0={sf2.s0!r} predicted={sf2.predicted:.8f}")

log("done")

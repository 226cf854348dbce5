"""Shared fixtures.

The heavy fixtures are session-scoped and sized to stay cheap: a small
angular basis at d = 2.375 whose grid still crosses the direct-to-tail
seam, and the radial solution on top of it.  Frozen reference numbers
were produced by the independent routes in oracles.py and by
high-resolution runs of the package itself; tests that consume them say
which.
"""

from __future__ import annotations

import numpy as np
import pytest

from efimov3b.angular import ThreeBodySystem, build_surface
from efimov3b.radial import solve_radial

S_STAR = 0.1642282450262154

# shallowest pair level at S_STAR, mu = 798/139, width 1 (dense-grid oracle,
# converged to the digits shown)
PAIR_ENERGY = {
    2.0: -1.719700125403e-2,
    2.05: -1.515243120230e-2,
    2.375: -4.636368190741e-3,
    2.45: -2.980910209e-3,
    2.5: -2.062187571461e-3,
    2.52: -1.738386781061e-3,
    2.55: -1.301333858e-3,
    2.6: -7.078459782646e-4,
    2.625: -4.769446050144e-4,
    2.7: -5.938950859589e-5,
    2.745: -1.874338656312e-7,
}

D_SMALL = 2.375


@pytest.fixture(scope="session")
def hl_system():
    return ThreeBodySystem.heavy_light(133.0, 6.0, S_STAR)


@pytest.fixture(scope="session")
def surface_small(hl_system):
    rho = np.geomspace(1e-3, 400.0, 160)
    return build_surface(hl_system, D_SMALL, rho_grid=rho, n_funcs=24,
                         n_ch=2, pair_energy=PAIR_ENERGY[D_SMALL])


@pytest.fixture(scope="session")
def solution_small(surface_small):
    return solve_radial(surface_small, n_states=4, n_points=900,
                        rho_min=2e-3, rho_max=350.0)

"""Locate the dimension at which a bound level meets the pair threshold.

Lowering the effective dimension pushes the weakly bound levels of the
tower through the heavy-light two-body threshold one after another.  The
search below brackets that crossing for a chosen level by bisection on
the dimension, using full surface-plus-radial solves at every probe; a
level that stays bound across the whole range is reported as surviving
rather than treated as a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angular import ThreeBodySystem, build_surface, default_rho_grid
from .radial import solve_radial


@dataclass(frozen=True)
class DimensionProbe:
    """Bound spectrum of one full solve at a single dimension."""

    d: float
    pair_energy: float
    energies: tuple  # levels below the pair threshold, deepest first
    n_bound: int  # levels resolved below threshold (margin > resolution)
    resolution: float  # absolute energy floor used for that count

    def has_state(self, state_index: int) -> bool:
        return state_index < self.n_bound

    def margin(self, state_index: int) -> float:
        """E(state) - E2; negative below threshold, nan if not found."""
        if state_index >= len(self.energies):
            return math.nan
        return self.energies[state_index] - self.pair_energy


@dataclass(frozen=True)
class EvaporationResult:
    state_index: int
    d_star: float | None  # None when the level survives the whole range
    survives: bool
    bracket: tuple  # (last unbound d, last bound d); equals range ends if survives
    probes: tuple  # every DimensionProbe evaluated, in evaluation order

    @property
    def last_bound(self) -> DimensionProbe:
        """Deepest-dimension probe where the tracked level is still bound."""
        good = [p for p in self.probes if p.has_state(self.state_index)]
        return min(good, key=lambda p: p.d)


def probe_dimension(
    system: ThreeBodySystem,
    d: float,
    *,
    n_funcs: int = 60,
    n_ch: int = 3,
    rho_min: float = 1e-3,
    rho_max: float = 1e5,
    rho_points: int = 400,
    radial_min: float = 2e-3,
    radial_max: float = 8e4,
    radial_points: int = 2400,
    n_states: int = 6,
    threshold_resolution: float = 1e-3,
) -> DimensionProbe:
    """Solve the three-body problem at one dimension, keep only energies.

    Levels are counted as bound when they sit below the pair threshold by
    more than `threshold_resolution` times the pair binding.  The floor
    matters: once the pair channel opens, its effective potential carries
    an attractive inverse-square tail whose strength runs toward the
    critical 1/4 as the dimension approaches 2, so a level pushed out of
    the short-range well can hang on as an arbitrarily shallow halo of
    the pair-plus-spectator kind.  A strict sign test on E - E2 then
    never fires; the floor declares the level dissolved into the pair
    threshold once the gap stops being resolvable on the scale of the
    binding itself.
    """
    e2 = system.pair_energy(d)
    grid = default_rho_grid(rho_min, rho_max, rho_points)
    surf = build_surface(
        system, d, n_funcs=n_funcs, n_ch=n_ch, rho_grid=grid, pair_energy=e2
    )
    sol = solve_radial(
        surf,
        n_states=n_states,
        n_points=radial_points,
        rho_min=radial_min,
        rho_max=radial_max,
    )
    floor = threshold_resolution * abs(e2)
    below = sol.bound()
    return DimensionProbe(
        d=float(d),
        pair_energy=e2,
        energies=tuple(s.energy for s in below),
        n_bound=len(sol.bound(margin=floor)),
        resolution=floor,
    )


def disappearance_dimension(
    system: ThreeBodySystem,
    state_index: int,
    d_range: tuple,
    *,
    d_tol: float = 1e-3,
    **solve_kw,
) -> EvaporationResult:
    """Bisect the dimension where level `state_index` meets the threshold.

    The level must be bound at the upper end of `d_range`; at each probed
    dimension levels are counted against the two-body energy with the
    resolution floor described in `probe_dimension`.  Terminates once the
    bracket is narrower than `d_tol`.
    """
    lo, hi = (float(min(d_range)), float(max(d_range)))
    if not 2.0 <= lo < hi <= 3.0:
        raise ValueError(f"dimension range outside [2, 3]: {d_range}")
    if state_index < 0:
        raise ValueError("state_index must be a count")
    probes = []

    def bound_at(d: float) -> bool:
        p = probe_dimension(system, d, **solve_kw)
        probes.append(p)
        return p.has_state(state_index)

    if not bound_at(hi):
        raise ValueError(f"state {state_index} not bound at d = {hi}")
    if bound_at(lo):
        return EvaporationResult(
            state_index=state_index,
            d_star=None,
            survives=True,
            bracket=(lo, hi),
            probes=tuple(probes),
        )
    while hi - lo > d_tol:
        mid = 0.5 * (lo + hi)
        if bound_at(mid):
            hi = mid
        else:
            lo = mid
    return EvaporationResult(
        state_index=state_index,
        d_star=0.5 * (lo + hi),
        survives=False,
        bracket=(lo, hi),
        probes=tuple(probes),
    )


def tower_survey(
    system: ThreeBodySystem,
    d_values,
    **solve_kw,
) -> list[DimensionProbe]:
    """Full solves over a dimension ladder, deepest-first energy tuples."""
    return [probe_dimension(system, float(d), **solve_kw) for d in np.atleast_1d(d_values)]

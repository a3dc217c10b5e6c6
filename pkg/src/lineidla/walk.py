"""Single-particle settlement: the reference engine.

A particle performs a simple random walk read off the direction stacks,
stopping on the first site outside the occupied set.  Every query of the
occupied set, every stack read, and every monitor evaluation happens inline
during the walk, so region-visit flags are exact even when paths are not
recorded.  The compiled bulk engine in _kernels.py implements the same
semantics; tests hold the two to bit-identical outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Container, Optional, Sequence

from .lattice import Region, Site, STEPS
from .stacks import StackField

DEFAULT_STEP_BUDGET = 10**9


class StepBudgetExceeded(RuntimeError):
    """A walk ran past the configured hard step cap."""


@dataclass(frozen=True)
class WalkOutcome:
    """Where a particle settled and what its walk saw on the way.

    penultimate_site is the last occupied site visited before settling; it is
    None exactly when the particle settled at its own start (path_length 0).
    """

    settled_site: Site
    penultimate_site: Optional[Site]
    path_length: int
    visited_region_flags: dict[str, bool]
    path: Optional[tuple[Site, ...]] = None


def settle_particle(
    occupied: Container[Site],
    start: Site,
    stacks: StackField,
    monitors: Sequence[Region] = (),
    record_path: bool = False,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> WalkOutcome:
    """Walk one particle from `start` until it leaves `occupied`.

    The settled site is NOT added to the occupied set; callers own that.
    A start outside the occupied set settles immediately where it stands.
    """
    start = Site(*start)
    x, y = start
    flags = {m.name: m.contains(x, y) for m in monitors}
    trail = [start] if record_path else None
    last_x = last_y = None
    steps = 0
    while (x, y) in occupied:
        dx, dy = STEPS[stacks.next_direction(Site(x, y))]
        last_x, last_y = x, y
        x += dx
        y += dy
        steps += 1
        if steps > step_budget:
            raise StepBudgetExceeded(
                f"walk from {tuple(start)} exceeded {step_budget} steps"
            )
        for m in monitors:
            if not flags[m.name] and m.contains(x, y):
                flags[m.name] = True
        if trail is not None:
            trail.append(Site(x, y))
    return WalkOutcome(
        settled_site=Site(x, y),
        penultimate_site=None if last_x is None else Site(last_x, last_y),
        path_length=steps,
        visited_region_flags=flags,
        path=None if trail is None else tuple(trail),
    )

"""Per-site direction stacks backing every random walk in the package.

Each lattice site carries an infinite stack of i.i.d. uniform directions.
Entry k of the stack at site (x, y) is a pure function of
(master seed, x, y, k), computed with a splitmix-style 64-bit mixing chain,
so any two runs handed the same seed read identical stacks.  That is what
makes settlement order provably irrelevant for the final occupied set: a
particle consumes stack entries at the sites it visits, and reordering the
emission multiset only permutes who consumes what.

A sequential mode is kept behind a flag for A/B comparison: directions come
from one global stream instead of per-site stacks.  Runs in that mode have
the same one-particle law but lose the exact order-invariance.

The plain-Python arithmetic here is mirrored by the compiled kernels; the
test suite checks bit equality between the two routes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .lattice import Direction, Site

_MASK = 0xFFFFFFFFFFFFFFFF
_TAG_WALK = 0xA0761D6478BD642F
_TAG_COUNT = 0xE7037ED1A0B428DB
_TAG_CLOCK = 0x8EBC6AF09C88C6E3
_TAG_SEQ = 0x589965CC75374CC3


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _keyed_bits(seed: int, tag: int, a: int, b: int, c: int) -> int:
    h = _mix64((seed ^ tag) & _MASK)
    h = _mix64(h ^ (a & _MASK))
    h = _mix64(h ^ (b & _MASK))
    h = _mix64(h ^ (c & _MASK))
    return h


def _uniform_from_bits(h: int) -> float:
    return ((h >> 11) + 0.5) * 2.0**-53


def direction_entry(seed: int, x: int, y: int, k: int) -> int:
    """Direction code of stack entry k at site (x, y): top 2 bits of the hash."""
    return _keyed_bits(seed, _TAG_WALK, x, y, k) >> 62


def sequential_entry(seed: int, k: int) -> int:
    """Direction code k of the global stream used by sequential mode."""
    return _keyed_bits((seed ^ _TAG_SEQ) & _MASK, _TAG_WALK, k, 0, 0) >> 62


def count_uniform(seed: int, level: int) -> float:
    """Uniform in (0,1) keyed by (seed, level); drives per-level event counts."""
    return _uniform_from_bits(_keyed_bits(seed, _TAG_COUNT, level, 0, 0))


def clock_uniform(seed: int, level: int, j: int) -> float:
    """Uniform in (0,1) keyed by (seed, level, j); drives clock event times."""
    return _uniform_from_bits(_keyed_bits(seed, _TAG_CLOCK, level, j, 0))


@dataclass
class StackField:
    """Keyed view of the direction stacks plus per-site consumption counters.

    The counters belong to exactly one running engine at a time; a fresh
    engine run starts from a fresh zero-consumption view of the same stacks
    (``fresh_view``).  ``sequential=True`` switches to the global-stream mode.
    """

    master_seed: int
    sequential: bool = False
    _counters: dict[Site, int] = field(default_factory=dict, repr=False)
    _seq_cursor: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed <= _MASK:
            raise ValueError("master seed must fit in 64 bits")

    def direction_at(self, site: Site, k: int) -> Direction:
        """Stack entry k at `site`, without consuming anything."""
        if k < 0:
            raise ValueError("stack index must be >= 0")
        return Direction(direction_entry(self.master_seed, site[0], site[1], k))

    def next_direction(self, site: Site) -> Direction:
        """Consume and return the next unread entry of the stack at `site`."""
        if self.sequential:
            code = sequential_entry(self.master_seed, self._seq_cursor)
            self._seq_cursor += 1
            return Direction(code)
        k = self._counters.get(site, 0)
        self._counters[site] = k + 1
        return Direction(direction_entry(self.master_seed, site[0], site[1], k))

    def consumed(self, site: Site) -> int:
        return self._counters.get(Site(*site), 0)

    def fresh_view(self) -> "StackField":
        """Same stacks, zero consumption: what a new engine run starts from."""
        return StackField(self.master_seed, sequential=self.sequential)


def stack_direction(stacks: StackField, site: Site, k: int) -> Direction:
    """Pure accessor for stack entry k at `site`."""
    return stacks.direction_at(Site(*site), k)


def direction_frequencies(seed: int, probes: Iterable[tuple[int, int, int]]):
    """Empirical frequency of each direction over distinct (x, y, k) probes."""
    counts = [0, 0, 0, 0]
    n = 0
    for x, y, k in probes:
        counts[direction_entry(seed, x, y, k)] += 1
        n += 1
    return [c / n for c in counts]

"""Aggregate growth engines for the line-of-sources internal DLA protocols.

Three emission protocols share one settlement engine:

* deterministic: exactly n particles per level, levels in the usual order
  0, +1, -1, +2, -2, ..., +M, -M, so the occupied set has exactly (2M+1)n
  sites;
* poisson-usual: an independent Poisson(n) particle count per level, same
  level order;
* poisson-clock: the same per-level counts, but each particle carries a
  uniform arrival time in (0, n] and particles run in global time order,
  which makes truncations at different M agree on their common levels.

Counts and clock times are pure functions of (master seed, level), so two
runs that differ only in the height truncation draw identical randomness on
the levels they share.  Together with the per-site direction stacks this
couples whole families of runs pathwise: reordering emissions never changes
the final occupied set, and enlarging the emission multiset never removes a
site.  grow_coupled_pair and grow_upward exploit exactly that.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.stats import poisson as _poisson

from . import _kernels
from .lattice import Region, Site, strip
from .stacks import StackField, clock_uniform, count_uniform
from .walk import DEFAULT_STEP_BUDGET, StepBudgetExceeded, settle_particle

VARIANTS = (
    "deterministic",
    "poisson-usual",
    "poisson-clock",
    "classical-origin",
)

_NO_SITE = int(_kernels.NO_SITE)


@dataclass(frozen=True)
class GrowthSpec:
    """Everything needed to reproduce one growth run bit for bit."""

    variant: str
    n: int
    half_height: int
    master_seed: int
    level_order: Union[str, tuple[int, ...]] = "default"
    strip_monitor: Optional[int] = None
    record_paths: bool = False
    sequential: bool = False
    step_budget: int = DEFAULT_STEP_BUDGET
    forced_counts: Optional[Mapping[int, int]] = None
    engine: str = "kernel"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.n < 1:
            raise ValueError("particle intensity n must be >= 1")
        if self.half_height < 0:
            raise ValueError("half height must be >= 0")
        if self.variant == "classical-origin" and self.half_height != 0:
            raise ValueError("classical runs use half_height 0")
        if self.engine not in ("kernel", "python"):
            raise ValueError("engine must be 'kernel' or 'python'")


@dataclass(frozen=True)
class ClockSchedule:
    """Arrival times of the clock protocol, globally sorted.

    events rows are (time, level, within_level_rank); rank re-indexes each
    level's particles by increasing time.  Exact time ties (measure zero at
    53-bit resolution) are broken by (level, rank).
    """

    n: int
    half_height: int
    master_seed: int
    counts: dict[int, int]
    events: tuple[tuple[float, int, int], ...]

    def total_events(self) -> int:
        return len(self.events)


def level_sequence_usual(half_height: int) -> np.ndarray:
    """Levels in the usual order 0, 1, -1, 2, -2, ..., M, -M."""
    out = np.empty(2 * half_height + 1, dtype=np.int64)
    out[0] = 0
    if half_height:
        rng = np.arange(1, half_height + 1, dtype=np.int64)
        out[1::2] = rng
        out[2::2] = -rng
    return out


def poisson_level_counts(
    seed: int,
    n: int,
    levels: np.ndarray,
    forced_counts: Optional[Mapping[int, int]] = None,
) -> np.ndarray:
    """Per-level event counts: Poisson(n) by inversion from the count stream."""
    u = np.array([count_uniform(seed, int(lv)) for lv in levels])
    counts = _poisson.ppf(u, n).astype(np.int64)
    if forced_counts:
        for i, lv in enumerate(levels):
            if int(lv) in forced_counts:
                counts[i] = forced_counts[int(lv)]
    return counts


def clock_schedule(
    seed: int,
    n: int,
    half_height: int,
    forced_counts: Optional[Mapping[int, int]] = None,
) -> ClockSchedule:
    """Draw the arrival-time schedule for a clock run of time horizon n."""
    levels = level_sequence_usual(half_height)
    counts = poisson_level_counts(seed, n, levels, forced_counts)
    times, lvls, ranks = _clock_event_arrays(seed, n, levels, counts)
    events = tuple(
        (float(t), int(l), int(r)) for t, l, r in zip(times, lvls, ranks)
    )
    return ClockSchedule(
        n=n,
        half_height=half_height,
        master_seed=seed,
        counts={int(lv): int(c) for lv, c in zip(levels, counts)},
        events=events,
    )


def _clock_event_arrays(seed, n, levels, counts):
    total = int(counts.sum())
    times = np.empty(total, dtype=np.float64)
    lvls = np.empty(total, dtype=np.int64)
    ranks = np.empty(total, dtype=np.int64)
    pos = 0
    for lv, c in zip(levels, counts):
        c = int(c)
        if c == 0:
            continue
        t = np.sort(
            np.array([n * clock_uniform(seed, int(lv), j) for j in range(c)])
        )
        times[pos : pos + c] = t
        lvls[pos : pos + c] = int(lv)
        ranks[pos : pos + c] = np.arange(c)
        pos += c
    order = np.lexsort((ranks, lvls, times))
    return times[order], lvls[order], ranks[order]


@dataclass(frozen=True)
class EmissionPlan:
    """Ordered emission levels for one run, with clock times when they exist."""

    levels: np.ndarray
    times: Optional[np.ndarray]


def emission_plan(spec: GrowthSpec) -> EmissionPlan:
    if isinstance(spec.level_order, tuple):
        levels = np.asarray(spec.level_order, dtype=np.int64)
        if levels.size and np.abs(levels).max() > spec.half_height:
            raise ValueError("explicit emission level outside the source segment")
        return EmissionPlan(levels, None)

    if spec.variant == "classical-origin":
        return EmissionPlan(np.zeros(spec.n, dtype=np.int64), None)

    level_seq = level_sequence_usual(spec.half_height)
    if spec.variant == "deterministic":
        counts = np.full(level_seq.shape, spec.n, dtype=np.int64)
        if spec.forced_counts:
            for i, lv in enumerate(level_seq):
                if int(lv) in spec.forced_counts:
                    counts[i] = spec.forced_counts[int(lv)]
    else:
        counts = poisson_level_counts(
            spec.master_seed, spec.n, level_seq, spec.forced_counts
        )

    order = spec.level_order
    if order == "default":
        order = "clock" if spec.variant == "poisson-clock" else "usual"
    if order == "usual":
        return EmissionPlan(np.repeat(level_seq, counts), None)
    if order == "clock":
        times, lvls, _ = _clock_event_arrays(
            spec.master_seed, spec.n, level_seq, counts
        )
        return EmissionPlan(lvls, times)
    raise ValueError(f"unknown level order {spec.level_order!r}")


@dataclass
class RawRun:
    """Per-particle settlement records straight from an engine."""

    settled_x: np.ndarray
    settled_y: np.ndarray
    pred_x: np.ndarray
    pred_y: np.ndarray
    path_length: np.ndarray
    strip_flags: Optional[np.ndarray]
    paths: Optional[list[tuple[Site, ...]]]


def run_emissions(
    seed: int,
    levels: np.ndarray,
    base_sites: Iterable[Site] = (),
    sequential: bool = False,
    strip_monitor: Optional[int] = None,
    step_budget: int = DEFAULT_STEP_BUDGET,
    engine: str = "kernel",
    record_paths: bool = False,
) -> RawRun:
    """Settle one particle per entry of `levels` on top of `base_sites`."""
    base = list(base_sites)
    if record_paths and engine == "kernel":
        engine = "python"
    if engine == "python":
        return _run_python(
            seed, levels, base, sequential, strip_monitor, step_budget, record_paths
        )
    base_x = np.array([s[0] for s in base], dtype=np.int64)
    base_y = np.array([s[1] for s in base], dtype=np.int64)
    max_lv = int(np.abs(levels).max()) if levels.size else 0
    if base:
        max_lv = max(max_lv, int(np.abs(base_y).max()), int(np.abs(base_x).max()))
    half_w0 = max(8, min(int(levels.size), 1 << 14))
    half_h0 = max(8, max_lv + 16)
    sx, sy, px, py, plen, flags, status, fail_at, _ = _kernels.grow_levels(
        np.uint64(seed),
        np.ascontiguousarray(levels, dtype=np.int64),
        base_x,
        base_y,
        sequential,
        -1 if strip_monitor is None else int(strip_monitor),
        step_budget,
        half_w0,
        half_h0,
    )
    if status == 1:
        raise StepBudgetExceeded(
            f"particle {fail_at} exceeded the {step_budget}-step budget"
        )
    return RawRun(
        settled_x=sx,
        settled_y=sy,
        pred_x=px,
        pred_y=py,
        path_length=plen,
        strip_flags=None if strip_monitor is None else flags.astype(bool),
        paths=None,
    )


def _run_python(seed, levels, base, sequential, strip_monitor, budget, record_paths):
    stacks = StackField(seed, sequential=sequential)
    occupied: set[Site] = set(Site(*s) for s in base)
    monitors = () if strip_monitor is None else (strip(strip_monitor),)
    m = len(levels)
    sx = np.empty(m, dtype=np.int64)
    sy = np.empty(m, dtype=np.int64)
    px = np.empty(m, dtype=np.int64)
    py = np.empty(m, dtype=np.int64)
    plen = np.empty(m, dtype=np.int64)
    flags = np.zeros(m, dtype=bool)
    paths: Optional[list] = [] if record_paths else None
    for j, lv in enumerate(levels):
        out = settle_particle(
            occupied,
            Site(0, int(lv)),
            stacks,
            monitors=monitors,
            record_path=record_paths,
            step_budget=budget,
        )
        occupied.add(out.settled_site)
        sx[j], sy[j] = out.settled_site
        if out.penultimate_site is None:
            px[j] = py[j] = _NO_SITE
        else:
            px[j], py[j] = out.penultimate_site
        plen[j] = out.path_length
        if monitors:
            flags[j] = out.visited_region_flags[monitors[0].name]
        if paths is not None:
            paths.append(out.path)
    return RawRun(
        settled_x=sx,
        settled_y=sy,
        pred_x=px,
        pred_y=py,
        path_length=plen,
        strip_flags=None if strip_monitor is None else flags,
        paths=paths,
    )


@dataclass
class Aggregate:
    """An occupied set with full per-particle provenance, in birth order."""

    variant: str
    n: int
    half_height: int
    master_seed: int
    sites: list[Site]
    source_level: np.ndarray
    birth_time: Optional[np.ndarray]
    path_length: np.ndarray
    _pred_x: np.ndarray
    _pred_y: np.ndarray
    strip_monitor: Optional[int] = None
    strip_flags: Optional[np.ndarray] = None
    paths: Optional[list[tuple[Site, ...]]] = None
    site_index: dict[Site, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.site_index:
            self.site_index = {s: i for i, s in enumerate(self.sites)}

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site) -> bool:
        return Site(*site) in self.site_index

    def site_set(self) -> frozenset[Site]:
        return frozenset(self.site_index)

    def predecessor(self, site: Site) -> Optional[Site]:
        """Last previously occupied site the creating particle stood on."""
        i = self.site_index[Site(*site)]
        x = int(self._pred_x[i])
        if x == _NO_SITE:
            return None
        return Site(x, int(self._pred_y[i]))

    def settled_at_start(self, site: Site) -> bool:
        return int(self.path_length[self.site_index[Site(*site)]]) == 0

    def row_count(self, y: int) -> int:
        return int(np.sum(np.fromiter((s[1] for s in self.sites), dtype=np.int64) == y))

    def row_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for _, y in self.sites:
            out[y] = out.get(y, 0) + 1
        return out

    def max_y(self) -> int:
        return max(s[1] for s in self.sites)


def build_aggregate(spec: GrowthSpec) -> Aggregate:
    plan = emission_plan(spec)
    raw = run_emissions(
        spec.master_seed,
        plan.levels,
        sequential=spec.sequential,
        strip_monitor=spec.strip_monitor,
        step_budget=spec.step_budget,
        engine=spec.engine,
        record_paths=spec.record_paths,
    )
    return _assemble(spec, plan, raw)


def _assemble(spec: GrowthSpec, plan: EmissionPlan, raw: RawRun) -> Aggregate:
    sites = [
        Site(int(x), int(y)) for x, y in zip(raw.settled_x, raw.settled_y)
    ]
    if len(set(sites)) != len(sites):
        raise AssertionError("engine settled two particles on one site")
    return Aggregate(
        variant=spec.variant,
        n=spec.n,
        half_height=spec.half_height,
        master_seed=spec.master_seed,
        sites=sites,
        source_level=plan.levels.copy(),
        birth_time=None if plan.times is None else plan.times.copy(),
        path_length=raw.path_length,
        _pred_x=raw.pred_x,
        _pred_y=raw.pred_y,
        strip_monitor=spec.strip_monitor,
        strip_flags=raw.strip_flags,
        paths=raw.paths,
    )


def build_deterministic(n: int, half_height: int, seed: int, **kw) -> Aggregate:
    return build_aggregate(GrowthSpec("deterministic", n, half_height, seed, **kw))


def build_poisson_usual(n: int, half_height: int, seed: int, **kw) -> Aggregate:
    return build_aggregate(GrowthSpec("poisson-usual", n, half_height, seed, **kw))


def build_poisson_clock(n: int, half_height: int, seed: int, **kw) -> Aggregate:
    return build_aggregate(GrowthSpec("poisson-clock", n, half_height, seed, **kw))


def build_classical(n: int, seed: int, **kw) -> Aggregate:
    return build_aggregate(GrowthSpec("classical-origin", n, 0, seed, **kw))


# ---------------------------------------------------------------------------
# coupled truncations


@dataclass(frozen=True)
class CoupleEvent:
    """One emission of the taller run, paired with its short-run twin if any."""

    index: int
    time: Optional[float]
    level: int
    large_site: Site
    small_site: Optional[Site]


@dataclass
class DiscrepancyLog:
    """Relay history of the sites where the two truncations disagree.

    Chains attribute each moving discrepancy to the extra-level emission that
    created it, greedily in time order: when a shared particle settles on a
    current discrepancy in the short run but elsewhere in the tall run, the
    chain holding that site advances.  The set difference itself is exact and
    attribution-free.
    """

    events: list[CoupleEvent]
    delta_sizes: np.ndarray
    final_delta: frozenset[Site]
    chains: list[list[Site]]
    unattributed: list[int]
    inclusion_ok: bool


@dataclass
class CoupledPair:
    small: Aggregate
    large: Aggregate
    log: DiscrepancyLog


def grow_coupled_pair(spec: GrowthSpec, m_small: int, m_large: int) -> CoupledPair:
    """Run one seed at two height truncations and track their differences.

    Both runs read the same stacks, counts, and clocks, so the short run's
    emissions are exactly the tall run's emissions restricted to levels
    |i| <= m_small, in the same order.
    """
    if not 0 <= m_small <= m_large:
        raise ValueError("need 0 <= m_small <= m_large")
    spec_l = dataclasses.replace(spec, half_height=m_large)
    plan_l = emission_plan(spec_l)
    shared = np.abs(plan_l.levels) <= m_small
    plan_s = EmissionPlan(
        plan_l.levels[shared],
        None if plan_l.times is None else plan_l.times[shared],
    )
    raw_l = run_emissions(
        spec.master_seed,
        plan_l.levels,
        sequential=spec.sequential,
        step_budget=spec.step_budget,
        engine=spec.engine,
    )
    raw_s = run_emissions(
        spec.master_seed,
        plan_s.levels,
        sequential=spec.sequential,
        step_budget=spec.step_budget,
        engine=spec.engine,
    )
    spec_s = dataclasses.replace(spec, half_height=m_small)
    large = _assemble(spec_l, plan_l, raw_l)
    small = _assemble(spec_s, plan_s, raw_s)

    events: list[CoupleEvent] = []
    delta: set[Site] = set()
    delta_sizes = np.empty(len(plan_l.levels), dtype=np.int64)
    chains: list[list[Site]] = []
    head_of: dict[Site, int] = {}
    unattributed: list[int] = []
    inclusion_ok = True
    si = 0
    for j in range(len(plan_l.levels)):
        lv = int(plan_l.levels[j])
        t = None if plan_l.times is None else float(plan_l.times[j])
        site_l = large.sites[j]
        site_s: Optional[Site] = None
        if abs(lv) <= m_small:
            site_s = small.sites[si]
            si += 1
        events.append(CoupleEvent(j, t, lv, site_l, site_s))
        if site_s is None:
            # an extra-level emission opens a new discrepancy chain
            delta.add(site_l)
            head_of[site_l] = len(chains)
            chains.append([site_l])
        elif site_s != site_l:
            if site_s in delta:
                delta.discard(site_s)
                cid = head_of.pop(site_s)
                chains[cid].append(site_l)
                head_of[site_l] = cid
            else:
                inclusion_ok = False
                unattributed.append(j)
            delta.add(site_l)
        delta_sizes[j] = len(delta)
    log = DiscrepancyLog(
        events=events,
        delta_sizes=delta_sizes,
        final_delta=frozenset(delta),
        chains=chains,
        unattributed=unattributed,
        inclusion_ok=inclusion_ok,
    )
    return CoupledPair(small=small, large=large, log=log)


# ---------------------------------------------------------------------------
# one-sided upward growth


@dataclass
class UpwardTrajectory:
    """Level-by-level growth above a base: the excess-height point of view.

    Index i of `heights` is time t = half_height + i; the recorded value is
    (highest occupied row) - t, NaN while the aggregate is still empty.
    `added[i]` lists the sites settled by the batch emitted from level t + 1
    (so `added[0]` is empty: it is the base snapshot).
    """

    n: int
    half_height: int
    t_max: int
    master_seed: int
    base_kind: str
    base_sites: frozenset[Site]
    batch_counts: np.ndarray
    added: list[list[Site]]
    heights: np.ndarray

    def occupied_at(self, t: int) -> frozenset[Site]:
        i = t - self.half_height
        if not 0 <= i < len(self.added):
            raise ValueError("time outside the recorded trajectory")
        out = set(self.base_sites)
        for batch in self.added[: i + 1]:
            out.update(batch)
        return frozenset(out)


def grow_upward(
    n: int,
    half_height: int,
    seed: int,
    t_max: int,
    base: Union[str, Iterable[Site]] = "poisson",
    forced_counts: Optional[Mapping[int, int]] = None,
    step_budget: int = DEFAULT_STEP_BUDGET,
    engine: str = "kernel",
) -> UpwardTrajectory:
    """Grow from levels half_height+1, ..., t_max, one Poisson batch per level.

    base "poisson" first grows the two-sided Poisson aggregate of horizon n
    in the same run (sharing stacks and count streams); "empty" starts bare;
    an iterable of sites is used as a fixed base.
    """
    if t_max < half_height:
        raise ValueError("t_max must be at least half_height")
    up_levels_seq = np.arange(half_height + 1, t_max + 1, dtype=np.int64)
    up_counts = poisson_level_counts(seed, n, up_levels_seq, forced_counts)

    base_sites_in: list[Site] = []
    base_levels = np.empty(0, dtype=np.int64)
    base_kind = "explicit"
    if isinstance(base, str):
        base_kind = base
        if base == "poisson":
            seq = level_sequence_usual(half_height)
            counts = poisson_level_counts(seed, n, seq, forced_counts)
            base_levels = np.repeat(seq, counts)
        elif base != "empty":
            raise ValueError("base must be 'poisson', 'empty', or sites")
    else:
        base_sites_in = [Site(*s) for s in base]

    levels = np.concatenate([base_levels, np.repeat(up_levels_seq, up_counts)])
    raw = run_emissions(
        seed,
        levels,
        base_sites=base_sites_in,
        step_budget=step_budget,
        engine=engine,
    )
    n_base = len(base_sites_in) + len(base_levels)
    base_set = frozenset(
        list(base_sites_in)
        + [
            Site(int(x), int(y))
            for x, y in zip(raw.settled_x[:n_base], raw.settled_y[:n_base])
        ]
    )

    added: list[list[Site]] = [[]]
    heights = np.empty(t_max - half_height + 1, dtype=np.float64)
    top = max((s[1] for s in base_set), default=None)
    heights[0] = np.nan if top is None else top - half_height
    pos = n_base
    for i, c in enumerate(up_counts):
        batch = [
            Site(int(raw.settled_x[pos + j]), int(raw.settled_y[pos + j]))
            for j in range(int(c))
        ]
        pos += int(c)
        added.append(batch)
        for s in batch:
            top = s[1] if top is None else max(top, s[1])
        t = half_height + i + 1
        heights[i + 1] = np.nan if top is None else top - t
    return UpwardTrajectory(
        n=n,
        half_height=half_height,
        t_max=t_max,
        master_seed=seed,
        base_kind=base_kind,
        base_sites=base_set,
        batch_counts=up_counts,
        added=added,
        heights=heights,
    )

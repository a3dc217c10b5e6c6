"""Directed forests carried by the growth provenance.

Every settled site becomes a vertex.  A particle that settles at its own
start founds a new tree there (a root, always on the source axis); any other
particle contributes the edge from the last previously occupied site it
visited to where it settled.  Edges therefore always point from older to
newer vertices, one edge per non-root vertex, and each tree is rooted on the
axis.  The classical single-source cluster yields one tree rooted at the
origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .growth import Aggregate, GrowthSpec, build_aggregate, build_classical
from .lattice import Region, Site, strip


@dataclass
class Forest:
    """Vertices in birth order plus the parent map; roots have parent None."""

    variant: str
    n: int
    half_height: int
    master_seed: int
    sites: list[Site]
    parent: dict[Site, Optional[Site]]
    source_level: np.ndarray
    birth_time: Optional[np.ndarray]
    site_index: dict[Site, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.site_index:
            self.site_index = {s: i for i, s in enumerate(self.sites)}

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site) -> bool:
        return Site(*site) in self.site_index

    @property
    def roots(self) -> list[Site]:
        return [s for s in self.sites if self.parent[s] is None]

    def edges(self) -> list[tuple[Site, Site]]:
        """(parent, child) pairs, in child birth order."""
        return [(p, s) for s in self.sites if (p := self.parent[s]) is not None]

    def check_structure(self) -> list[str]:
        """Structural invariants; returns human-readable violations, if any."""
        bad: list[str] = []
        n_roots = 0
        for s in self.sites:
            p = self.parent[s]
            if p is None:
                n_roots += 1
                if s.x != 0:
                    bad.append(f"root {tuple(s)} off the source axis")
                continue
            if p not in self.site_index:
                bad.append(f"parent {tuple(p)} of {tuple(s)} is not a vertex")
                continue
            if abs(p.x - s.x) + abs(p.y - s.y) != 1:
                bad.append(f"edge {tuple(p)} -> {tuple(s)} is not lattice-adjacent")
            if self.site_index[p] >= self.site_index[s]:
                bad.append(f"parent {tuple(p)} born after child {tuple(s)}")
        if len(self.edges()) != len(self.sites) - n_roots:
            bad.append("edge count != vertex count - root count")
        # explicit acyclicity sweep, independent of the birth-order argument
        state: dict[Site, int] = {}
        for s in self.sites:
            chain = []
            cur: Optional[Site] = s
            while cur is not None and state.get(cur, 0) == 0:
                state[cur] = 1
                chain.append(cur)
                cur = self.parent.get(cur)
            if cur is not None and state.get(cur) == 1:
                bad.append(f"cycle through {tuple(cur)}")
            for c in chain:
                state[c] = 2
        return bad

    def restriction(self, region: Region) -> frozenset[tuple[Site, Optional[Site]]]:
        """Forest data visible in `region`: each vertex there with its parent."""
        return frozenset((s, self.parent[s]) for s in self.sites if region(s))


def build_forest(agg: Aggregate) -> Forest:
    return Forest(
        variant=agg.variant,
        n=agg.n,
        half_height=agg.half_height,
        master_seed=agg.master_seed,
        sites=list(agg.sites),
        parent={s: agg.predecessor(s) for s in agg.sites},
        source_level=agg.source_level,
        birth_time=agg.birth_time,
        site_index=dict(agg.site_index),
    )


def build_radial_tree(n: int, seed: int, **kw) -> Forest:
    """The tree of the classical one-source cluster, rooted at the origin."""
    return build_forest(build_classical(n, seed, **kw))


@dataclass(frozen=True)
class ForestDiff:
    """Where two forests disagree inside a region."""

    region_name: str
    vertices_only_first: frozenset[Site]
    vertices_only_second: frozenset[Site]
    edge_mismatches: frozenset[Site]

    def is_empty(self) -> bool:
        return not (
            self.vertices_only_first
            or self.vertices_only_second
            or self.edge_mismatches
        )

    def counts(self) -> tuple[int, int, int]:
        return (
            len(self.vertices_only_first),
            len(self.vertices_only_second),
            len(self.edge_mismatches),
        )


def diff_forests(first: Forest, second: Forest, region: Region) -> ForestDiff:
    v1 = {s for s in first.sites if region(s)}
    v2 = {s for s in second.sites if region(s)}
    both = v1 & v2
    mism = frozenset(s for s in both if first.parent[s] != second.parent[s])
    return ForestDiff(
        region_name=region.name,
        vertices_only_first=frozenset(v1 - v2),
        vertices_only_second=frozenset(v2 - v1),
        edge_mismatches=mism,
    )


Branch = list[Site]


def branch_deviation(forest: Forest, target: Site) -> tuple[Branch, tuple[int, int]]:
    """Root-to-target path and its vertical excursion (highest, lowest row)."""
    target = Site(*target)
    if target not in forest.site_index:
        raise KeyError(f"{tuple(target)} is not a vertex")
    path = [target]
    cur = target
    for _ in range(len(forest.sites)):
        p = forest.parent[cur]
        if p is None:
            break
        path.append(p)
        cur = p
    else:
        raise AssertionError("parent chain did not terminate")
    path.reverse()
    ys = [s.y for s in path]
    return path, (max(ys), min(ys))


@dataclass
class StabilizationScan:
    """Coupled forest restrictions across a grid of height truncations."""

    n: int
    strip_half_height: int
    m_grid: tuple[int, ...]
    seeds: tuple[int, ...]
    stabilized_at: list[Optional[int]]

    @property
    def fraction_stabilized(self) -> float:
        hits = sum(1 for m in self.stabilized_at if m is not None)
        return hits / len(self.stabilized_at)


def stabilization_radius(
    n: int,
    strip_half_height: int,
    m_grid: Sequence[int],
    seeds: Iterable[int],
    variant: str = "poisson-clock",
    engine: str = "kernel",
    forest_source: Optional[Callable[[int, int], Forest]] = None,
) -> StabilizationScan:
    """Smallest grid truncation after which the strip restriction stays fixed.

    For each seed, forests are built at every M in the grid (all sharing the
    seed's stacks, counts, and clocks) and restricted to the strip.  The
    recorded value is the smallest grid M whose restriction equals that of
    every larger grid value; None when even the last two differ, i.e. the
    scan did not confirm stabilization.  A one-point grid can confirm nothing,
    so every seed comes back inconclusive.
    """
    m_grid = tuple(m_grid)
    if not m_grid or list(m_grid) != sorted(set(m_grid)):
        raise ValueError("m_grid values must be strictly increasing")
    region = strip(strip_half_height)
    if forest_source is None:

        def forest_source(seed: int, m: int) -> Forest:
            spec = GrowthSpec(variant, n, m, seed, engine=engine)
            return build_forest(build_aggregate(spec))

    seeds = tuple(seeds)
    stabilized_at: list[Optional[int]] = []
    for seed in seeds:
        restrictions = [
            forest_source(seed, m).restriction(region) for m in m_grid
        ]
        m_star: Optional[int] = None
        for i in range(len(m_grid) - 1):
            if all(r == restrictions[i] for r in restrictions[i + 1 :]):
                m_star = m_grid[i]
                break
        stabilized_at.append(m_star)
    return StabilizationScan(
        n=n,
        strip_half_height=strip_half_height,
        m_grid=m_grid,
        seeds=seeds,
        stabilized_at=stabilized_at,
    )

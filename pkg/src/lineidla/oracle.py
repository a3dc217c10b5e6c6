"""Exact references for walk and growth laws, independent of any sampling.

Three computations live here:

* the exit distribution of a walk from a finite occupied set, via the
  discrete Dirichlet problem (double precision with one refinement pass, or
  exact rationals for small interiors);
* the exact law of the occupied set after a handful of emissions, by dynamic
  programming over exit distributions;
* the expected number of walks, launched from every site of a vertical block
  of columns, that first meet the boundary of a wider block in a marked site.
  The infinite row sum is truncated and the computational box auto-expanded
  until the answer stops moving.

Monte Carlo tests elsewhere compare sampled frequencies against these values;
nothing here shares code with the engines being checked.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import Site, neighbors

EXACT_INTERIOR_LIMIT = 16
SMALL_DP_LIMIT = 4

Number = Union[float, Fraction]


class NumericalBudgetError(RuntimeError):
    """An oracle computation exceeded its configured expansion budget."""


@dataclass(frozen=True)
class ExitDistribution:
    """Exit law of a walk from `start` over the outer boundary of `interior`."""

    start: Site
    interior: frozenset[Site]
    probabilities: Mapping[Site, Number]
    exact: bool

    def support(self) -> set[Site]:
        return {s for s, p in self.probabilities.items() if p > 0}

    def total(self) -> Number:
        return sum(self.probabilities.values())


def _reachable_component(interior: frozenset[Site], start: Site) -> list[Site]:
    if start not in interior:
        return []
    seen = {start}
    frontier = [start]
    while frontier:
        cur = frontier.pop()
        for nb in neighbors(cur):
            if nb in interior and nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    return sorted(seen, key=lambda s: (s[1], s[0]))


def exact_exit_distribution(
    interior: Iterable[Site],
    start: Site,
    exact: bool = False,
) -> ExitDistribution:
    """Solve the Dirichlet problem for the walk killed outside `interior`.

    The support is exactly the set of outer-boundary sites reachable from
    `start` through the interior.  A start outside the interior exits
    immediately where it stands.
    """
    interior = frozenset(Site(*s) for s in interior)
    start = Site(*start)
    comp = _reachable_component(interior, start)
    if not comp:
        one: Number = Fraction(1) if exact else 1.0
        return ExitDistribution(start, interior, {start: one}, exact)
    if exact and len(comp) > EXACT_INTERIOR_LIMIT:
        raise ValueError(
            f"exact mode supports at most {EXACT_INTERIOR_LIMIT} interior sites"
        )
    index = {s: i for i, s in enumerate(comp)}
    if exact:
        hit = _adjoint_weights_exact(comp, index, index[start])
    else:
        hit = _adjoint_weights_double(comp, index, index[start])
    # push one quarter of each interior site's weight to each outside neighbor
    probs: dict[Site, Number] = defaultdict(lambda: Fraction(0) if exact else 0.0)
    quarter = Fraction(1, 4) if exact else 0.25
    for s, i in index.items():
        w = hit[i]
        if w == 0:
            continue
        for nb in neighbors(s):
            if nb not in interior:
                probs[nb] += w * quarter
    return ExitDistribution(start, interior, dict(probs), exact)


def _adjoint_weights_double(comp, index, start_idx):
    n = len(comp)
    rows, cols, vals = [], [], []
    for s, i in index.items():
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
        for nb in neighbors(s):
            j = index.get(nb)
            if j is not None:
                # adjoint of the quarter-step transition: column j feeds row i
                rows.append(j)
                cols.append(i)
                vals.append(-0.25)
    a = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    e = np.zeros(n)
    e[start_idx] = 1.0
    lu = spla.splu(a)
    w = lu.solve(e)
    # one refinement pass keeps the distribution summing to 1 at 1e-12
    w = w + lu.solve(e - a @ w)
    return w


def _adjoint_weights_exact(comp, index, start_idx):
    n = len(comp)
    a = [[Fraction(0)] * n for _ in range(n)]
    for s, i in index.items():
        a[i][i] = Fraction(1)
        for nb in neighbors(s):
            j = index.get(nb)
            if j is not None:
                a[j][i] = Fraction(-1, 4)
    rhs = [Fraction(0)] * n
    rhs[start_idx] = Fraction(1)
    return _solve_fraction(a, rhs)


def _solve_fraction(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def exact_small_aggregate_distribution(
    emission_levels: Sequence[int],
    exact: bool = True,
) -> dict[frozenset[Site], Number]:
    """Exact law of the occupied set after emitting from `emission_levels`.

    Levels are consumed in the given order, one particle each, starting from
    the empty set; a particle whose source is free settles there outright.
    Capped at four particles, which keeps the state space tiny.
    """
    if len(emission_levels) > SMALL_DP_LIMIT:
        raise ValueError(f"at most {SMALL_DP_LIMIT} emissions supported")
    one: Number = Fraction(1) if exact else 1.0
    states: dict[frozenset[Site], Number] = {frozenset(): one}
    cache: dict[tuple[frozenset[Site], Site], ExitDistribution] = {}
    for level in emission_levels:
        src = Site(0, level)
        nxt: dict[frozenset[Site], Number] = defaultdict(
            lambda: Fraction(0) if exact else 0.0
        )
        for occ, p in states.items():
            if src not in occ:
                nxt[occ | {src}] += p
                continue
            key = (occ, src)
            if key not in cache:
                cache[key] = exact_exit_distribution(occ, src, exact=exact)
            for site, q in cache[key].probabilities.items():
                nxt[occ | {site}] += p * q
        states = dict(nxt)
    return states


def total_variation(
    d1: Mapping, d2: Mapping
) -> float:
    """Total variation distance between two finitely supported laws."""
    keys = set(d1) | set(d2)
    acc = sum(abs(d1.get(k, 0) - d2.get(k, 0)) for k in keys)
    return float(acc) / 2.0


def block_exit_probabilities(
    outer_half_width: int,
    marked: Iterable[Site],
    box_half_height: int,
) -> np.ndarray:
    """P(first visit to the columns |x| = outer_half_width lands in `marked`).

    Solved on the box |x| < outer_half_width, |y| <= box_half_height, with
    walks leaving through the top or bottom scored zero.  Returns the value
    grid indexed [x + outer_half_width - 1, y + box_half_height].
    """
    rp = outer_half_width
    hh = box_half_height
    wx = 2 * rp - 1
    hy = 2 * hh + 1
    n = wx * hy
    marked = {Site(*s) for s in marked}
    for s in marked:
        if abs(s.x) != rp:
            raise ValueError("marked sites must sit on the block boundary columns")

    def idx(x, y):
        return (x + rp - 1) * hy + (y + hh)

    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    for x in range(-(rp - 1), rp):
        for y in range(-hh, hh + 1):
            i = idx(x, y)
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = x + dx, y + dy
                if abs(nx) == rp:
                    if Site(nx, ny) in marked:
                        rhs[i] += 0.25
                elif abs(ny) > hh:
                    pass  # truncation: leaving vertically scores zero
                else:
                    rows.append(i)
                    cols.append(idx(nx, ny))
                    vals.append(-0.25)
    a = sp.csc_matrix((vals, (rows, cols)), shape=(n, n))
    v = spla.spsolve(a, rhs)
    return v.reshape(wx, hy)


def expected_exit_count(
    inner_half_width: int,
    outer_half_width: int,
    marked: Iterable[Site],
    row_limit: int,
    tol: float = 1e-4,
    max_box_half_height: int = 200_000,
) -> float:
    """Expected marked-exit count for walks from the truncated inner block.

    One walk starts from every site (x, y) with |x| <= inner_half_width and
    |y| <= row_limit; each walk runs until it first meets the columns
    |x| = outer_half_width.  The computational box is expanded until the
    total changes by less than `tol`.
    """
    r = inner_half_width
    rp = outer_half_width
    marked = {Site(*s) for s in marked}
    if r > rp:
        raise ValueError("inner block must not exceed the outer block")
    # starts sitting on the stopping columns exit where they stand
    on_boundary = 0.0
    if r == rp:
        on_boundary = sum(
            1.0
            for y in range(-row_limit, row_limit + 1)
            for x in (-rp, rp)
            if Site(x, y) in marked
        )
    rin = min(r, rp - 1)

    hh = row_limit + 4 * rp + 8
    prev = None
    while True:
        if hh > max_box_half_height:
            raise NumericalBudgetError(
                f"box half-height {hh} exceeds cap {max_box_half_height}"
            )
        grid = block_exit_probabilities(rp, marked, hh)
        total = on_boundary + float(
            grid[
                (rp - 1 - rin) : (rp + rin), (hh - row_limit) : (hh + row_limit + 1)
            ].sum()
        )
        if prev is not None and abs(total - prev) < tol:
            return total
        prev = total
        hh = (3 * hh) // 2 + 8


def expected_exit_count_sweep(
    inner_half_width: int,
    outer_half_width: int,
    marked: Iterable[Site],
    row_limits: Sequence[int],
    tol: float = 1e-4,
) -> list[float]:
    """`expected_exit_count` across a sweep of row truncations."""
    return [
        expected_exit_count(inner_half_width, outer_half_width, marked, L, tol=tol)
        for L in row_limits
    ]

"""Provenance forest construction, diffs, branches, stabilization."""

import numpy as np
import pytest

from lineidla.forest import (
    ForestDiff,
    branch_deviation,
    build_forest,
    build_radial_tree,
    diff_forests,
    stabilization_radius,
)
from lineidla.growth import GrowthSpec, build_aggregate, grow_coupled_pair
from lineidla.lattice import Site, ball, rectangle, strip


def clock_forest(n, half_height, seed, **kw):
    spec = GrowthSpec("poisson-clock", n, half_height, seed, **kw)
    return build_forest(build_aggregate(spec))


def test_lone_emission_is_lone_root():
    spec = GrowthSpec("deterministic", 1, 5, 123, level_order=(5,))
    f = build_forest(build_aggregate(spec))
    assert f.sites == [Site(0, 5)]
    assert f.roots == [Site(0, 5)]
    assert f.edges() == []


def test_first_wave_settles_in_place():
    # one particle per level on an empty lattice: every start is free
    for seed in (0, 7, 99):
        f = build_forest(build_aggregate(GrowthSpec("deterministic", 1, 3, seed)))
        assert sorted(f.roots) == sorted(f.sites)
        assert f.edges() == []
        assert f.check_structure() == []


def test_two_particle_classical_tree():
    for seed in range(6):
        f = build_radial_tree(2, seed)
        assert f.roots == [Site(0, 0)]
        ((p, c),) = f.edges()
        assert p == Site(0, 0)
        assert abs(c.x) + abs(c.y) == 1


def test_structure_invariants_across_variants():
    specs = [
        GrowthSpec("poisson-clock", 3, 25, 11),
        GrowthSpec("poisson-usual", 4, 15, 5),
        GrowthSpec("deterministic", 5, 12, 2),
        GrowthSpec("classical-origin", 60, 0, 8),
    ]
    for spec in specs:
        f = build_forest(build_aggregate(spec))
        assert f.check_structure() == []
        assert len(f.edges()) == len(f) - len(f.roots)
        assert all(r.x == 0 for r in f.roots)


def test_structure_invariants_midsize_clock():
    for seed in (1, 2, 3):
        f = clock_forest(40, 200, seed)
        assert f.check_structure() == []


def test_roots_are_zero_length_walkers():
    spec = GrowthSpec("poisson-clock", 2, 20, 31)
    agg = build_aggregate(spec)
    f = build_forest(agg)
    for s in f.sites:
        assert (f.parent[s] is None) == agg.settled_at_start(s)


def test_parent_is_penultimate_path_site():
    spec = GrowthSpec(
        "poisson-usual", 3, 10, 77, record_paths=True, engine="python"
    )
    agg = build_aggregate(spec)
    f = build_forest(agg)
    for i, s in enumerate(agg.sites):
        path = agg.paths[i]
        if len(path) == 1:
            assert f.parent[s] is None
        else:
            assert f.parent[s] == path[-2]


def test_vertex_set_survives_reordering_edges_may_not():
    spec = GrowthSpec("deterministic", 3, 6, 404)
    base = build_forest(build_aggregate(spec))
    rng = np.random.default_rng(0)
    levels = np.repeat(np.arange(-6, 7), 3)
    seen_edge_change = False
    for _ in range(6):
        perm = tuple(int(v) for v in rng.permutation(levels))
        other = build_forest(
            build_aggregate(
                GrowthSpec("deterministic", 3, 6, 404, level_order=perm)
            )
        )
        assert set(other.sites) == set(base.sites)
        assert other.check_structure() == []
        if dict(other.edges()) != dict(base.edges()):
            seen_edge_change = True
    assert seen_edge_change


def test_radial_tree_spans_cluster():
    f = build_radial_tree(1500, seed=40)
    assert len(f) == 1500
    assert f.roots == [Site(0, 0)]
    assert f.check_structure() == []
    # every vertex walks up to the single root
    for s in f.sites:
        branch, _ = branch_deviation(f, s)
        assert branch[0] == Site(0, 0)
        assert branch[-1] == s


def test_diff_same_forest_empty():
    f = clock_forest(2, 10, 8)
    d = diff_forests(f, f, strip(10))
    assert isinstance(d, ForestDiff)
    assert d.is_empty()
    assert d.counts() == (0, 0, 0)


def test_diff_matches_coupling_delta():
    spec = GrowthSpec("poisson-clock", 2, 3, 21)
    pair = grow_coupled_pair(spec, 3, 9)
    f_small = build_forest(pair.small)
    f_large = build_forest(pair.large)
    wide = rectangle(10**6, 10**6)
    d = diff_forests(f_small, f_large, wide)
    assert d.vertices_only_first == frozenset()
    assert d.vertices_only_second == pair.log.final_delta


def test_diff_detects_far_particle_intrusion():
    # search for a seed where enlarging M perturbs the strip forest
    region = strip(2)
    hit = None
    for seed in range(60):
        pair = grow_coupled_pair(GrowthSpec("poisson-clock", 2, 4, seed), 4, 12)
        d = diff_forests(
            build_forest(pair.small), build_forest(pair.large), region
        )
        if not d.is_empty():
            hit = (seed, d)
            break
    assert hit is not None
    _, d = hit
    assert d.vertices_only_first == frozenset()


def test_branch_target_missing_raises():
    f = build_radial_tree(5, seed=1)
    with pytest.raises(KeyError):
        branch_deviation(f, Site(500, 500))


def test_branch_of_root_is_its_own_height():
    f = clock_forest(1, 6, 3)
    root = max(f.roots, key=lambda s: s.y)
    branch, (top, bot) = branch_deviation(f, root)
    assert branch == [root]
    assert top == bot == root.y


def test_branch_straight_fixture():
    from lineidla.forest import Forest

    sites = [Site(x, 0) for x in range(5)]
    f = Forest(
        variant="deterministic",
        n=1,
        half_height=0,
        master_seed=0,
        sites=sites,
        parent={s: (Site(s.x - 1, 0) if s.x else None) for s in sites},
        source_level=np.zeros(5, dtype=np.int64),
        birth_time=None,
    )
    branch, (top, bot) = branch_deviation(f, Site(4, 0))
    assert branch == sites
    assert (top, bot) == (0, 0)


def test_branch_structure_on_grown_forest():
    f = clock_forest(4, 20, 9)
    target = max(f.sites, key=lambda s: (abs(s.x), s.y))
    branch, (top, bot) = branch_deviation(f, target)
    assert f.parent[branch[0]] is None
    for a, b in zip(branch, branch[1:]):
        assert f.parent[b] == a
        assert abs(a.x - b.x) + abs(a.y - b.y) == 1
    ys = [s.y for s in branch]
    assert (top, bot) == (max(ys), min(ys))


def test_stabilization_smoke():
    scan = stabilization_radius(1, 0, (0, 1, 2, 4, 8, 16, 32), range(20))
    assert scan.fraction_stabilized >= 0.9
    for m in scan.stabilized_at:
        assert m is None or m in (0, 1, 2, 4, 8, 16)


def test_stabilization_single_grid_point_inconclusive():
    scan = stabilization_radius(1, 0, (8,), range(4))
    assert scan.stabilized_at == [None] * 4
    assert scan.fraction_stabilized == 0.0


def test_stabilization_median_grows_with_strip():
    grid = (0, 1, 2, 4, 8, 16, 32, 64)
    medians = []
    for k in (0, 2):
        scan = stabilization_radius(1, k, grid, range(16))
        vals = [m for m in scan.stabilized_at if m is not None]
        assert len(vals) >= 12
        medians.append(float(np.median(vals)))
    assert medians[0] <= medians[1]


@pytest.mark.slow
def test_stabilization_median_grows_with_strip_full():
    grid = (0, 1, 2, 4, 8, 16, 32, 64, 128, 256)
    medians = []
    for k in (2, 8, 32):
        scan = stabilization_radius(1, k, grid, range(60))
        vals = [m for m in scan.stabilized_at if m is not None]
        assert len(vals) >= 54
        medians.append(float(np.median(vals)))
    assert medians[0] <= medians[1] <= medians[2]


def _containment_freq(n, half_height, pattern, seeds):
    hits = 0
    for seed in seeds:
        spec = GrowthSpec("poisson-clock", n, half_height, seed)
        occ = build_aggregate(spec).site_set()
        hits += all(s in occ for s in pattern)
    return hits / len(seeds)


def test_spanning_trend_scaled():
    pattern = sorted(ball(1.5))
    seeds = range(200)
    freqs = [_containment_freq(n, 2 * n, pattern, seeds) for n in (2, 8, 24)]
    assert freqs[0] <= freqs[1] <= freqs[2]
    assert freqs[-1] >= 0.95


@pytest.mark.slow
def test_spanning_trend_full_size():
    pattern = sorted(ball(3.0))
    freq = _containment_freq(200, 400, pattern, range(60))
    assert freq > 0.99


def _median_branch_ratio(n, seeds):
    ratios = []
    for seed in seeds:
        spec = GrowthSpec("poisson-clock", 3 * n, 3 * n, seed)
        f = build_forest(build_aggregate(spec))
        target = Site(n, 0)
        if target not in f:
            continue
        _, (top, bot) = branch_deviation(f, target)
        ratios.append(max(top, -bot) / n)
    assert len(ratios) >= 0.9 * len(seeds)
    return float(np.median(ratios))


def test_branch_deviation_ratio_shrinks_scaled():
    meds = [_median_branch_ratio(n, range(80)) for n in (6, 12, 24)]
    assert meds[0] >= meds[-1]


@pytest.mark.slow
def test_branch_deviation_ratio_shrinks():
    meds = [_median_branch_ratio(n, range(120)) for n in (25, 50)]
    assert meds[0] >= meds[-1]

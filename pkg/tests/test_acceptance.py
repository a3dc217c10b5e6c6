"""Acceptance gate: one test per numbered criterion, at full stated sizes.

Every test here runs the criterion at its declared size and tolerance, so
`pytest -v tests/test_acceptance.py` prints one pass/fail line per
criterion.  The whole module is also part of the default suite.
"""

import subprocess
import sys
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from scipy.stats import chi2

import lineidla._kernels as _kernels
import lineidla.analysis as analysis
from lineidla.forest import build_forest
from lineidla.growth import GrowthSpec, build_aggregate, emission_plan
from lineidla.lattice import Site, source_segment
from lineidla.oracle import (
    exact_exit_distribution,
    exact_small_aggregate_distribution,
    expected_exit_count,
    expected_exit_count_sweep,
    total_variation,
)

pytestmark = pytest.mark.acceptance


def test_criterion_01_cardinality_identity():
    rng = np.random.default_rng(20260501)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(0, 13))
        seed = int(rng.integers(0, 2**63))
        agg = build_aggregate(GrowthSpec("deterministic", n, m, seed))
        occupied = agg.site_set()
        assert len(occupied) == (2 * m + 1) * n
        assert len(agg.sites) == (2 * m + 1) * n
        for s in source_segment(m):
            assert s in occupied


def test_criterion_02_pathwise_abelian_property():
    n, m = 3, 6
    levels = np.repeat(np.arange(-m, m + 1), n)
    for seed in range(20):
        rng = np.random.default_rng(seed + 1000)
        base = build_aggregate(GrowthSpec("deterministic", n, m, seed)).site_set()
        orders = ["clock"] + [
            tuple(int(v) for v in rng.permutation(levels)) for _ in range(5)
        ]
        for order in orders:
            other = build_aggregate(
                GrowthSpec("deterministic", n, m, seed, level_order=order)
            ).site_set()
            assert other == base


def test_criterion_03_exact_distributional_abelian():
    for a in range(4):
        for b in range(4 - a):
            if not 1 <= a + b <= 3:
                continue
            orders = sorted(set(permutations([0] * a + [1] * b)))
            laws = [
                exact_small_aggregate_distribution(list(o), exact=False)
                for o in orders
            ]
            for other in laws[1:]:
                assert total_variation(laws[0], other) <= 1e-12


def _chi_square_pvalue(observed, expected, n):
    stat = 0.0
    for site, p in expected.items():
        o = observed.get(site, 0)
        e = n * float(p)
        stat += (o - e) ** 2 / e
    assert sum(c for s, c in observed.items() if s not in expected) == 0
    return float(chi2.sf(stat, len(expected) - 1))


def _sampled_exit_counts(seed, interior, start, n_samples):
    xs = np.array([s[0] for s in interior], dtype=np.int64)
    ys = np.array([s[1] for s in interior], dtype=np.int64)
    ox, oy, status, _ = _kernels.sample_exits(
        np.uint64(seed), xs, ys, start[0], start[1], n_samples, 10**9
    )
    assert status == 0
    counts = {}
    for x, y in zip(ox.tolist(), oy.tolist()):
        counts[Site(x, y)] = counts.get(Site(x, y), 0) + 1
    return counts


def test_criterion_04_oracle_vs_monte_carlo():
    one = {Site(0, 0)}
    dist = exact_exit_distribution(one, Site(0, 0))
    counts = _sampled_exit_counts(20260504, one, Site(0, 0), 100_000)
    assert _chi_square_pvalue(counts, dist.probabilities, 100_000) > 1e-3

    domino = {Site(0, 0), Site(1, 0)}
    exact = exact_exit_distribution(domino, Site(0, 0), exact=True)
    assert exact.probabilities[Site(-1, 0)] == Fraction(4, 15)
    assert exact.probabilities[Site(2, 0)] == Fraction(1, 15)
    counts = _sampled_exit_counts(20260505, domino, Site(0, 0), 100_000)
    assert _chi_square_pvalue(counts, exact.probabilities, 100_000) > 1e-3


def test_criterion_05_expected_width():
    report = analysis.width_experiment(
        {"variant": "deterministic", "n": 30, "half_height": 200, "rows": (0,)},
        analysis.seed_list(400),
    )
    est = report.estimates["row_0_mean"]
    assert abs(est.value - 30) <= 0.05 * 30, f"mean row-0 width {est.value}"
    assert report.verdicts["row_0_within_5pct"]


def test_criterion_06_exit_count_identity():
    sweep = expected_exit_count_sweep(0, 6, [Site(6, 0)], (50, 100, 200))
    assert abs(sweep[-1] - 0.5) <= 0.02 * 0.5, f"L-sweep tail {sweep[-1]}"
    assert abs(sweep[-1] - 0.5) <= abs(sweep[0] - 0.5) + 1e-9

    marked = [Site(8, 0), Site(8, 3), Site(-8, -2)]
    val = expected_exit_count(2, 8, marked, 200)
    assert abs(val - 7.5) <= 0.02 * 7.5, f"block identity {val}"


def test_criterion_07_shape_fluctuations():
    report = analysis.shape_experiment(
        {
            "variant": "deterministic",
            "n_list": (50, 100, 200),
            "strip_half_height": 10,
        },
        analysis.seed_list(200),
    )
    for n in (50, 100, 200):
        med = report.estimates[f"median_max_dev_n_{n}"].value
        assert med <= n / 8, f"median deviation {med} at n={n}"
    assert report.estimates["slope_vs_log_n"].value > 0
    assert report.verdicts["deviation_over_n_decreasing"]


def test_criterion_08_far_particle_stabilization():
    report = analysis.far_experiment(
        {"n": 2, "alpha": 2.0, "cutoff_grid": (4, 8, 16)},
        analysis.seed_list(500),
    )
    freqs = [
        report.estimates[f"touch_freq_cutoff_{c}"].value for c in (4, 8, 16)
    ]
    assert freqs[0] > freqs[1] > freqs[2], f"touch frequencies {freqs}"
    assert freqs[-1] == 0.0, f"largest cutoff still touched: {freqs[-1]}"


def test_criterion_09_forest_structure():
    rng = np.random.default_rng(20260509)
    for _ in range(100):
        n = int(rng.integers(1, 41))
        m = int(rng.integers(10, 201))
        seed = int(rng.integers(0, 2**63))
        agg = build_aggregate(GrowthSpec("poisson-clock", n, m, seed))
        forest = build_forest(agg)
        assert set(forest.sites) == agg.site_set()
        assert forest.check_structure() == []


def test_criterion_10_forest_stabilization():
    report = analysis.stabilize_forest_experiment(
        {"n": 1, "strip_half_height": 0, "m_grid": (0, 1, 2, 4, 8, 16, 32, 48, 64)},
        analysis.seed_list(500),
    )
    frac = report.estimates["fraction_stabilized"].value
    assert frac >= 0.99, f"stabilized fraction {frac}"


def test_criterion_11_empty_axis_positivity():
    for variant in ("poisson-usual", "poisson-clock"):
        report = analysis.lines_experiment(
            {"variant": variant, "n": 1, "half_height": 50, "window": 25},
            analysis.seed_list(1000),
        )
        hits = report.estimates["axis0_empty_freq"].value * 1000
        assert hits >= 1, f"{variant}: no empty-axis seed in 1000"
    det = analysis.lines_experiment(
        {"variant": "deterministic", "n": 1, "half_height": 50, "window": 25},
        analysis.seed_list(1000),
    )
    assert det.estimates["axis0_empty_freq"].value == 0.0


def test_criterion_12_mixing_surrogate():
    report = analysis.mixing_experiment(
        {
            "variant": "poisson-clock",
            "n": 2,
            "half_height": 200,
            "k_grid": (1, 2, 4, 8, 16, 32, 64, 96),
        },
        analysis.seed_list(4000),
    )
    est = report.estimates["rho_96"]
    assert abs(est.value) <= 3 * est.stderr, (
        f"rho at k=96 is {est.value} +- {est.stderr}"
    )


def test_criterion_13_height_drift():
    # zeta grid spans the empirically reachable excess heights at n=5
    report = analysis.height_experiment(
        {"n": 5, "half_height": 8, "zeta_grid": (0, 1, 2, 3)},
        analysis.seed_list(300),
    )
    drift = report.estimates["drift_above_3"]
    assert drift.value + 3 * drift.stderr < 0, (
        f"drift {drift.value} +- {drift.stderr}"
    )
    assert report.estimates["tau_realized_3"].value >= 0.99


def _run_cli(*args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "lineidla.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def test_criterion_14_cli_reproducibility(tmp_path):
    commands = [
        ("grow", "--variant", "clock", "--n", 3, "--M", 8, "--seed", 12),
        ("forest", "--variant", "clock", "--n", 2, "--M", 6, "--seed", 4),
    ]
    for cmd in commands:
        a, b = tmp_path / "a.out", tmp_path / "b.out"
        assert _run_cli(*cmd, "-o", a, cwd=tmp_path).returncode == 0
        assert _run_cli(*cmd, "-o", b, cwd=tmp_path).returncode == 0
        assert a.read_bytes() == b.read_bytes(), f"{cmd[0]} not reproducible"
        a.unlink()
        b.unlink()
    exp = (
        "experiment", "width", "--variant", "det", "--n", 5, "--M", 30,
        "--seeds", 8, "--set", "rows=(0,)",
    )
    for out in ("r1", "r2"):
        assert _run_cli(*exp, "-o", tmp_path / out, cwd=tmp_path).returncode == 0
    for name in ("summary.txt", "records.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (
            tmp_path / "r2" / name
        ).read_bytes()

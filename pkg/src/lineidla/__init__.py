"""Internal DLA on Z^2 driven by a vertical line of sources.

Growth engines for the deterministic, Poisson-count, and Poisson-clock
emission protocols, the directed forest built from settlement provenance,
exact exit-law oracles, and the statistical experiment suite behind them.
"""

from .lattice import Direction, Region, Site, site_order_key, source_segment, strip
from .stacks import StackField, stack_direction
from .walk import StepBudgetExceeded, WalkOutcome, settle_particle
from .oracle import (
    ExitDistribution,
    NumericalBudgetError,
    exact_exit_distribution,
    exact_small_aggregate_distribution,
    expected_exit_count,
    total_variation,
)
from .growth import (
    Aggregate,
    CoupledPair,
    GrowthSpec,
    build_aggregate,
    build_classical,
    build_deterministic,
    build_poisson_clock,
    build_poisson_usual,
    grow_coupled_pair,
)
from .forest import (
    Forest,
    ForestDiff,
    build_forest,
    build_radial_tree,
    diff_forests,
    stabilization_radius,
)
from .formats import (
    FormatError,
    aggregate_text,
    forest_text,
    parse_aggregate,
    parse_forest,
    svg_document,
)
from .analysis import EXPERIMENTS, ExperimentReport, seed_list

__all__ = [
    "Direction",
    "Region",
    "Site",
    "site_order_key",
    "source_segment",
    "strip",
    "StackField",
    "stack_direction",
    "StepBudgetExceeded",
    "WalkOutcome",
    "settle_particle",
    "ExitDistribution",
    "NumericalBudgetError",
    "exact_exit_distribution",
    "exact_small_aggregate_distribution",
    "expected_exit_count",
    "total_variation",
    "Aggregate",
    "CoupledPair",
    "GrowthSpec",
    "build_aggregate",
    "build_classical",
    "build_deterministic",
    "build_poisson_clock",
    "build_poisson_usual",
    "grow_coupled_pair",
    "Forest",
    "ForestDiff",
    "build_forest",
    "build_radial_tree",
    "diff_forests",
    "stabilization_radius",
    "FormatError",
    "aggregate_text",
    "forest_text",
    "parse_aggregate",
    "parse_forest",
    "svg_document",
    "EXPERIMENTS",
    "ExperimentReport",
    "seed_list",
]

__version__ = "0.1.0"

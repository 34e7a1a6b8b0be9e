"""Participatory budgeting rules engine and analysis toolkit.

Deterministic implementations of greedy cost welfare and the Method of
Equal Shares (with completion by budget increase and by a secondary
rule), exact-rational money arithmetic end to end, PaBuLib file I/O,
outcome metrics and a corpus analysis pipeline with a CLI.
"""

__version__ = "0.1.0"

from .model import (
    Allocation,
    ApprovalBallot,
    Instance,
    Money,
    Profile,
    Project,
    approvers,
    build_district_example,
    format_money,
    is_complete,
    money,
    parse_money,
    total_cost,
)
from .pabulib import (
    IngestFilter,
    IngestResult,
    PabulibParseError,
    SkippedFile,
    ingest_directory,
    parse_pabulib,
    write_pabulib,
)
from .rules import (
    RULE_NAMES,
    SELECTION_BACKEND,
    MesLedger,
    RuleResult,
    RuleSpec,
    StarResult,
    TieBreak,
    Variant,
    complete_star,
    complete_with_secondary,
    default_epsilon,
    emit_trace,
    greed_cost,
    mes,
    mes_affordability,
    run_rule,
)
from .metrics import (
    METRIC_COLUMNS,
    CategoryReport,
    CategoryScores,
    category_proportionality,
    cost_satisfaction,
    effect_score,
    effort,
    gini,
    happiness,
    median_selected_cost,
    metric_row,
    rule_category_share,
    similarity,
    voter_category_share,
)
from .stats import (
    TTestResult,
    paired_t_test,
    regularized_incomplete_beta,
    standard_error,
    student_t_two_sided_p,
)
from .analysis import (
    ComparisonReport,
    ComparisonRow,
    ExtremesReport,
    InstanceStats,
    QuadrantPartition,
    compare_rules,
    extract_extremes,
    instance_stats,
    quadrant_partition,
)

__all__ = [
    "__version__",
    "Allocation",
    "ApprovalBallot",
    "Instance",
    "Money",
    "Profile",
    "Project",
    "approvers",
    "build_district_example",
    "format_money",
    "is_complete",
    "money",
    "parse_money",
    "total_cost",
    "IngestFilter",
    "IngestResult",
    "PabulibParseError",
    "SkippedFile",
    "ingest_directory",
    "parse_pabulib",
    "write_pabulib",
    "RULE_NAMES",
    "SELECTION_BACKEND",
    "MesLedger",
    "RuleResult",
    "RuleSpec",
    "StarResult",
    "TieBreak",
    "Variant",
    "complete_star",
    "complete_with_secondary",
    "default_epsilon",
    "emit_trace",
    "greed_cost",
    "mes",
    "mes_affordability",
    "run_rule",
    "METRIC_COLUMNS",
    "CategoryReport",
    "CategoryScores",
    "category_proportionality",
    "cost_satisfaction",
    "effect_score",
    "effort",
    "gini",
    "happiness",
    "median_selected_cost",
    "metric_row",
    "rule_category_share",
    "similarity",
    "voter_category_share",
    "TTestResult",
    "paired_t_test",
    "regularized_incomplete_beta",
    "standard_error",
    "student_t_two_sided_p",
    "ComparisonReport",
    "ComparisonRow",
    "ExtremesReport",
    "InstanceStats",
    "QuadrantPartition",
    "compare_rules",
    "extract_extremes",
    "instance_stats",
    "quadrant_partition",
]

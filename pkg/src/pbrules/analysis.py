"""Corpus-level analysis: descriptive statistics, rule comparisons,
size quadrants and the instances where the rule choice matters most.

Every function takes a dataset of (Instance, Profile) pairs (as produced
by :func:`pbrules.pabulib.ingest_directory`, already id-sorted) and
returns deterministic, serialization-ready report objects.  Aggregate
numbers are rendered with four significant digits; the underlying
arithmetic stays exact or double precision.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import stats
from .metrics import (
    METRIC_COLUMNS,
    CategoryReport,
    category_proportionality,
    cost_satisfaction,
    effect_score,
    metric_row,
)
from .model import Allocation, Instance, Money, Profile, format_money, total_cost
from .rules import RuleSpec, TieBreak, Variant, greed_cost, run_rule

Dataset = Sequence[tuple[Instance, Profile]]

SIGNIFICANCE_LEVEL = 0.05


def format_sig(value: float, digits: int = 4) -> str:
    """Four significant digits by default; plain decimal where possible."""
    text = f"%.{digits}g" % float(value)
    return text


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        return format_sig(float(value))
    if isinstance(value, float):
        return format_sig(value)
    return str(value)


@dataclass(frozen=True)
class InstanceStats:
    """Size and scarcity summary of one instance."""

    instance_id: str
    voters: int
    projects: int
    budget: Money
    mean_project_cost_share: Fraction
    scarcity: Fraction
    mean_ballot_cost_share: Fraction


STAT_COLUMNS = (
    "instance_id",
    "voters",
    "projects",
    "budget",
    "mean_project_cost_share",
    "scarcity",
    "mean_ballot_cost_share",
)


def instance_stats(instance: Instance, profile: Profile) -> InstanceStats:
    limit = instance.budget_limit
    m = len(instance.projects)
    asked = sum((p.cost for p in instance.projects), Fraction(0))
    ballot_cost = sum(
        (total_cost(b.approved, instance) for b in profile.ballots), Fraction(0)
    )
    return InstanceStats(
        instance_id=instance.instance_id,
        voters=profile.voter_count,
        projects=m,
        budget=limit,
        mean_project_cost_share=asked / m / limit,
        scarcity=asked / limit,
        mean_ballot_cost_share=ballot_cost / profile.voter_count / limit,
    )


def stats_csv(rows: Sequence[InstanceStats]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(STAT_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.instance_id,
                row.voters,
                row.projects,
                format_money(row.budget),
                _render(row.mean_project_cost_share),
                _render(row.scarcity),
                _render(row.mean_ballot_cost_share),
            ]
        )
    return out.getvalue()


AGGREGATE_METRICS = METRIC_COLUMNS[2:]  # everything after instance_id, rule


@dataclass(frozen=True)
class ComparisonRow:
    """One aggregate cell: a metric under a rule, with the paired test
    against the greedy baseline (None for the baseline itself or when
    fewer than two paired values exist)."""

    metric: str
    rule: str
    n_instances: int
    mean: float | None
    std_error: float | None
    p_vs_baseline: float | None
    significant: bool | None
    degenerate: bool = False


@dataclass(frozen=True)
class ComparisonReport:
    rules: tuple[str, ...]
    rows: tuple[ComparisonRow, ...]
    raw: tuple[dict, ...]

    def row(self, metric: str, rule: str) -> ComparisonRow:
        for r in self.rows:
            if r.metric == metric and r.rule == rule:
                return r
        raise KeyError(f"no row for metric {metric!r}, rule {rule!r}")

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["metric", "rule", "n_instances", "mean", "std_error", "p_vs_baseline", "significant"]
        )
        for r in self.rows:
            writer.writerow(
                [
                    r.metric,
                    r.rule,
                    r.n_instances,
                    _render(r.mean),
                    _render(r.std_error),
                    _render(r.p_vs_baseline),
                    _render(r.significant),
                ]
            )
        return out.getvalue()

    def raw_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for row in self.raw:
            rendered = []
            for column in METRIC_COLUMNS:
                value = row[column]
                if column == "median_cost" and value is not None:
                    rendered.append(format_money(value))
                else:
                    rendered.append(_render(value))
            writer.writerow(rendered)
        return out.getvalue()


def _instance_comparison(args) -> list[dict]:
    (instance, profile), specs = args
    baseline_spec = next(
        (s for s in specs if s.variant is Variant.GREED_COST),
        RuleSpec(Variant.GREED_COST),
    )
    baseline = greed_cost(instance, profile, baseline_spec.tiebreak)
    rows = []
    for spec in specs:
        if spec.variant is Variant.GREED_COST:
            allocation = baseline
        else:
            allocation = run_rule(spec, instance, profile).allocation
        rows.append(metric_row(instance, profile, spec.variant.value, allocation, baseline))
    return rows


def compare_rules(
    dataset: Dataset, specs: Sequence[RuleSpec], jobs: int = 1
) -> ComparisonReport:
    """Run every rule on every instance and aggregate each metric.

    The paired test compares each rule's per-instance values against the
    greedy baseline, pairing only instances where both sides are defined
    (category proportionality, for example, exists only on categorized
    instances).  The raw per-instance table is kept on the report.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if not specs:
        raise ValueError("no rules requested")
    work = [((instance, profile), tuple(specs)) for instance, profile in dataset]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_instance = list(pool.map(_instance_comparison, work))
    else:
        per_instance = [_instance_comparison(item) for item in work]

    raw: list[dict] = [row for rows in per_instance for row in rows]
    rule_names = [spec.variant.value for spec in specs]
    baseline_name = Variant.GREED_COST.value

    by_rule: dict[str, list[dict]] = {name: [] for name in rule_names}
    for rows in per_instance:
        for name, row in zip(rule_names, rows):
            by_rule[name].append(row)

    table: list[ComparisonRow] = []
    for metric in AGGREGATE_METRICS:
        for name in rule_names:
            values = [row[metric] for row in by_rule[name]]
            defined = [float(v) for v in values if v is not None]
            mean = stats.mean(defined) if defined else None
            se = stats.standard_error(defined) if len(defined) > 1 else None
            p = None
            significant = None
            degenerate = False
            if name != baseline_name and baseline_name in by_rule:
                pairs = [
                    (float(rv), float(bv))
                    for rv, bv in zip(values, (row[metric] for row in by_rule[baseline_name]))
                    if rv is not None and bv is not None
                ]
                if len(pairs) >= 2:
                    result = stats.paired_t_test(
                        [a for a, _ in pairs], [b for _, b in pairs]
                    )
                    p = result.p_value
                    significant = p < SIGNIFICANCE_LEVEL
                    degenerate = result.degenerate
            table.append(
                ComparisonRow(
                    metric=metric,
                    rule=name,
                    n_instances=len(defined),
                    mean=mean,
                    std_error=se,
                    p_vs_baseline=p,
                    significant=significant,
                    degenerate=degenerate,
                )
            )
    return ComparisonReport(tuple(rule_names), tuple(table), tuple(raw))


QUADRANT_LABELS = (
    "small_votes_small_projects",
    "small_votes_large_projects",
    "large_votes_small_projects",
    "large_votes_large_projects",
)


@dataclass(frozen=True)
class QuadrantPartition:
    median_voters: float
    median_projects: float
    quadrants: dict[str, tuple[str, ...]]


def quadrant_partition(dataset: Dataset) -> QuadrantPartition:
    """Split instances at the median voter and project counts; instances
    sitting exactly on a median count as small."""
    if not dataset:
        raise ValueError("empty dataset")
    voter_counts = [profile.voter_count for _, profile in dataset]
    project_counts = [len(instance.projects) for instance, _ in dataset]
    median_voters = statistics.median(voter_counts)
    median_projects = statistics.median(project_counts)
    quadrants: dict[str, list[str]] = {label: [] for label in QUADRANT_LABELS}
    for (instance, profile), n, m in zip(dataset, voter_counts, project_counts):
        votes = "small" if n <= median_voters else "large"
        projects = "small" if m <= median_projects else "large"
        quadrants[f"{votes}_votes_{projects}_projects"].append(instance.instance_id)
    return QuadrantPartition(
        median_voters=median_voters,
        median_projects=median_projects,
        quadrants={label: tuple(ids) for label, ids in quadrants.items()},
    )


@dataclass(frozen=True)
class ProjectDetail:
    id: str
    name: str | None
    cost: Money
    categories: tuple[str, ...]


@dataclass(frozen=True)
class BlockSummary:
    """One outcome block (common, greedy-only or equal-shares-only):
    the projects, their total cost, and cost per category label."""

    projects: tuple[ProjectDetail, ...]
    count: int
    total_cost: Money
    category_cost: dict[str, Money]

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "total_cost": format_money(self.total_cost),
            "projects": [
                {
                    "id": p.id,
                    "name": p.name,
                    "cost": format_money(p.cost),
                    "categories": list(p.categories),
                }
                for p in self.projects
            ],
            "category_cost": {
                label: format_money(cost)
                for label, cost in sorted(self.category_cost.items())
            },
        }


@dataclass(frozen=True)
class CategoryBar:
    label: str
    voter_share: float
    greed_share: float
    mes_share: float


@dataclass(frozen=True)
class InstanceEffectReport:
    """Everything needed to illustrate one instance's rule gap: the block
    decomposition, demand-vs-supply bars per category, and the sorted
    satisfaction curves under both rules."""

    instance_id: str
    effect: float
    common: BlockSummary
    greed_only: BlockSummary
    mes_only: BlockSummary
    category_bars: tuple[CategoryBar, ...]
    greed_curve: tuple[float, ...]
    mes_curve: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "effect": self.effect,
            "common": self.common.to_json_dict(),
            "greed_only": self.greed_only.to_json_dict(),
            "mes_only": self.mes_only.to_json_dict(),
            "category_bars": [
                {
                    "label": bar.label,
                    "voter_share": bar.voter_share,
                    "greed_share": bar.greed_share,
                    "mes_share": bar.mes_share,
                }
                for bar in self.category_bars
            ],
            "greed_curve": list(self.greed_curve),
            "mes_curve": list(self.mes_curve),
        }


@dataclass(frozen=True)
class ExtremesReport:
    """Instances ranked by effect score, with full reports for the
    smallest, median and largest effect."""

    ranking: tuple[tuple[str, float], ...]
    minimum: InstanceEffectReport
    median: InstanceEffectReport
    maximum: InstanceEffectReport
    uncategorized: tuple[str, ...]

    def rank_of(self, instance_id: str) -> int:
        """1-based rank in the ascending effect ordering."""
        for position, (iid, _) in enumerate(self.ranking, start=1):
            if iid == instance_id:
                return position
        raise KeyError(f"instance {instance_id!r} not in the ranking")

    def to_json_dict(self) -> dict:
        return {
            "ranking": [[iid, effect] for iid, effect in self.ranking],
            "uncategorized": list(self.uncategorized),
            "minimum": self.minimum.to_json_dict(),
            "median": self.median.to_json_dict(),
            "maximum": self.maximum.to_json_dict(),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)


def _block(ids: set[str], instance: Instance) -> BlockSummary:
    details = tuple(
        ProjectDetail(p.id, p.name, p.cost, tuple(sorted(p.categories)))
        for p in instance.projects
        if p.id in ids
    )
    category_cost: dict[str, Money] = {}
    for detail in details:
        for label in detail.categories:
            category_cost[label] = category_cost.get(label, Fraction(0)) + detail.cost
    return BlockSummary(
        projects=details,
        count=len(details),
        total_cost=sum((d.cost for d in details), Fraction(0)),
        category_cost=category_cost,
    )


def _effect_worker(args) -> tuple[str, float | None, dict | None]:
    (instance, profile), mes_spec, tiebreak = args
    greed_allocation = greed_cost(instance, profile, tiebreak)
    mes_allocation = run_rule(mes_spec, instance, profile).allocation
    effect = effect_score(instance, profile, greed_allocation, mes_allocation)
    if effect is None:
        return instance.instance_id, None, None
    greed_report = category_proportionality(profile, instance, greed_allocation)
    mes_report = category_proportionality(profile, instance, mes_allocation)
    assert greed_report is not None and mes_report is not None
    bars = tuple(
        CategoryBar(
            label=g.label,
            voter_share=float(g.voter_share),
            greed_share=float(g.rule_share),
            mes_share=float(m.rule_share),
        )
        for g, m in zip(greed_report.entries, mes_report.entries)
    )
    greed_ids = set(greed_allocation.selected)
    mes_ids = set(mes_allocation.selected)
    payload = {
        "common": _block(greed_ids & mes_ids, instance),
        "greed_only": _block(greed_ids - mes_ids, instance),
        "mes_only": _block(mes_ids - greed_ids, instance),
        "bars": bars,
        "greed_curve": tuple(
            sorted(float(v) for v in cost_satisfaction(profile, greed_allocation, instance))
        ),
        "mes_curve": tuple(
            sorted(float(v) for v in cost_satisfaction(profile, mes_allocation, instance))
        ),
    }
    return instance.instance_id, effect, payload


def extract_extremes(
    dataset: Dataset,
    mes_spec: RuleSpec | None = None,
    tiebreak: TieBreak | None = None,
    jobs: int = 1,
) -> ExtremesReport:
    """Rank categorized instances by :func:`effect_score` (greedy vs the
    star-completed equal shares by default) and report the minimum,
    median and maximum instances in full."""
    if not dataset:
        raise ValueError("empty dataset")
    mes_spec = mes_spec or RuleSpec(Variant.MES_STAR_PLUS)
    tiebreak = tiebreak or TieBreak()
    work = [((instance, profile), mes_spec, tiebreak) for instance, profile in dataset]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_effect_worker, work))
    else:
        results = [_effect_worker(item) for item in work]

    uncategorized = tuple(iid for iid, effect, _ in results if effect is None)
    scored = [(iid, effect, payload) for iid, effect, payload in results if effect is not None]
    if not scored:
        raise ValueError("no categorized instances: effect scores undefined everywhere")
    scored.sort(key=lambda item: (item[1], item[0]))

    def report(index: int) -> InstanceEffectReport:
        iid, effect, payload = scored[index]
        return InstanceEffectReport(
            instance_id=iid,
            effect=effect,
            common=payload["common"],
            greed_only=payload["greed_only"],
            mes_only=payload["mes_only"],
            category_bars=payload["bars"],
            greed_curve=payload["greed_curve"],
            mes_curve=payload["mes_curve"],
        )

    return ExtremesReport(
        ranking=tuple((iid, effect) for iid, effect, _ in scored),
        minimum=report(0),
        median=report((len(scored) - 1) // 2),
        maximum=report(len(scored) - 1),
        uncategorized=uncategorized,
    )

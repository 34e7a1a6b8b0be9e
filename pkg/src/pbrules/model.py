"""Core data model for participatory budgeting instances.

Money is represented throughout as exact non-negative rationals
(:class:`fractions.Fraction`); nothing in this package converts money to
floats implicitly.  Use :func:`money` or :func:`parse_money` at boundaries
so validation happens in one place.

All model objects are immutable after construction and safe to share
across threads or processes.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

Money = Fraction

_DECIMAL_RE = re.compile(r"(\d+)(?:\.(\d+))?")


def money(value: int | str | Fraction) -> Money:
    """Coerce ``value`` to a non-negative exact rational.

    Accepts ints, Fractions and decimal strings ("250000", "12.50").
    Raises ValueError for negatives, floats and anything unparseable;
    floats are rejected deliberately so inexact values cannot leak in.
    """
    if isinstance(value, bool):
        raise ValueError("money amount must be an int, str or Fraction, not bool")
    if isinstance(value, Fraction):
        result = value
    elif isinstance(value, int):
        result = Fraction(value)
    elif isinstance(value, str):
        return parse_money(value)
    else:
        raise ValueError(
            f"money amount must be an int, str or Fraction, not {type(value).__name__}"
        )
    if result < 0:
        raise ValueError(f"money amount must be non-negative, got {result}")
    return result


def parse_money(text: str) -> Money:
    """Parse a plain decimal money string.

    Only unsigned decimals are accepted: digits with at most one decimal
    point.  Thousands separators, signs, exponents and currency symbols are
    rejected, as are empty strings.
    """
    match = _DECIMAL_RE.fullmatch(text.strip())
    if match is None:
        raise ValueError(f"not a decimal money amount: {text!r}")
    whole, frac = match.group(1), match.group(2)
    value = Fraction(int(whole))
    if frac:
        value += Fraction(int(frac), 10 ** len(frac))
    return value


def decimal_string(value: Money) -> str | None:
    """Render ``value`` as an exact finite decimal, or None if impossible."""
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return None
    digits = max(twos, fives)
    if digits == 0:
        return str(value.numerator)
    scaled = value.numerator * 10**digits // value.denominator
    text = str(scaled).rjust(digits + 1, "0")
    whole, frac = text[:-digits], text[-digits:]
    frac = frac.rstrip("0")
    return f"{whole}.{frac}" if frac else whole


def format_money(value: Money) -> str:
    """Exact human-readable rendering: finite decimal when one exists,
    otherwise the plain fraction ``num/den``."""
    return decimal_string(value) or f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Project:
    """A candidate project: unique id, strictly positive cost, optional
    display name, category labels and passthrough metadata."""

    id: str
    cost: Money
    name: str | None = None
    categories: frozenset[str] = frozenset()
    extra: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("project id must be non-empty")
        cost = money(self.cost)
        if cost <= 0:
            raise ValueError(f"project {self.id!r}: cost must be positive, got {cost}")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "categories", frozenset(self.categories))
        object.__setattr__(self, "extra", dict(self.extra))


@dataclass(frozen=True)
class Instance:
    """A budgeting instance: the project list and the budget limit.

    Projects keep their given order (parsers preserve file order) but ids
    must be unique; ``meta`` carries source metadata such as the instance
    id and unit name.
    """

    projects: tuple[Project, ...]
    budget_limit: Money
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "projects", tuple(self.projects))
        if not self.projects:
            raise ValueError("an instance needs at least one project")
        limit = money(self.budget_limit)
        if limit <= 0:
            raise ValueError(f"budget limit must be positive, got {limit}")
        object.__setattr__(self, "budget_limit", limit)
        object.__setattr__(self, "meta", dict(self.meta))
        by_id = {}
        for project in self.projects:
            if project.id in by_id:
                raise ValueError(f"duplicate project id {project.id!r}")
            by_id[project.id] = project
        object.__setattr__(self, "_by_id", by_id)

    @property
    def instance_id(self) -> str:
        return self.meta.get("instance_id", "")

    @property
    def project_ids(self) -> frozenset[str]:
        return frozenset(self._by_id)

    def project(self, project_id: str) -> Project:
        try:
            return self._by_id[project_id]
        except KeyError:
            raise KeyError(f"unknown project id {project_id!r}") from None

    def cost_of(self, project_id: str) -> Money:
        return self.project(project_id).cost

    @property
    def category_labels(self) -> tuple[str, ...]:
        """All category labels used by any project, sorted."""
        labels: set[str] = set()
        for project in self.projects:
            labels.update(project.categories)
        return tuple(sorted(labels))


@dataclass(frozen=True)
class ApprovalBallot:
    """One voter's approval set, as project ids."""

    voter_id: str
    approved: frozenset[str]

    def __post_init__(self) -> None:
        if not self.voter_id:
            raise ValueError("voter id must be non-empty")
        object.__setattr__(self, "approved", frozenset(self.approved))


@dataclass(frozen=True)
class Profile:
    """The full ballot profile.  Voter ids must be unique and there must
    be at least one ballot; individual approval sets may be empty."""

    ballots: tuple[ApprovalBallot, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ballots", tuple(self.ballots))
        if not self.ballots:
            raise ValueError("a profile needs at least one ballot")
        seen: set[str] = set()
        for ballot in self.ballots:
            if ballot.voter_id in seen:
                raise ValueError(f"duplicate voter id {ballot.voter_id!r}")
            seen.add(ballot.voter_id)

    @property
    def voter_count(self) -> int:
        return len(self.ballots)

    def validate_against(self, instance: Instance) -> None:
        """Check every approved id exists in ``instance`` (raises KeyError)."""
        known = instance.project_ids
        for ballot in self.ballots:
            unknown = ballot.approved - known
            if unknown:
                raise KeyError(
                    f"ballot {ballot.voter_id!r} approves unknown project "
                    f"{sorted(unknown)[0]!r}"
                )

    def restricted_to(self, project_ids: Iterable[str]) -> "Profile":
        """A copy with every approval set intersected with ``project_ids``."""
        keep = frozenset(project_ids)
        return Profile(
            tuple(
                ApprovalBallot(b.voter_id, b.approved & keep) for b in self.ballots
            )
        )


@dataclass(frozen=True)
class Allocation:
    """A feasible set of funded projects with its precomputed total cost."""

    selected: frozenset[str]
    total_cost: Money

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected", frozenset(self.selected))
        object.__setattr__(self, "total_cost", money(self.total_cost))

    @classmethod
    def of(cls, selected: Iterable[str], instance: Instance) -> "Allocation":
        """Build from project ids, checking feasibility against the limit."""
        chosen = frozenset(selected)
        cost = total_cost(chosen, instance)
        if cost > instance.budget_limit:
            raise ValueError(
                f"allocation cost {format_money(cost)} exceeds budget limit "
                f"{format_money(instance.budget_limit)}"
            )
        return cls(chosen, cost)

    def __contains__(self, project_id: str) -> bool:
        return project_id in self.selected

    def __len__(self) -> int:
        return len(self.selected)


def total_cost(project_ids: Iterable[str], instance: Instance) -> Money:
    """Sum of the costs of ``project_ids``; KeyError on unknown ids."""
    return sum((instance.cost_of(pid) for pid in project_ids), Fraction(0))


def approvers(
    project_id: str, profile: Profile, instance: Instance | None = None
) -> frozenset[str]:
    """Voter ids approving ``project_id``.

    When ``instance`` is given, unknown ids raise KeyError instead of
    silently returning the empty set.
    """
    if instance is not None:
        instance.project(project_id)
    return frozenset(
        ballot.voter_id for ballot in profile.ballots if project_id in ballot.approved
    )


def is_complete(allocation: Allocation, instance: Instance) -> bool:
    """True iff no unfunded project still fits in the leftover budget."""
    leftover = instance.budget_limit - allocation.total_cost
    return all(
        project.cost > leftover
        for project in instance.projects
        if project.id not in allocation.selected
    )


DISTRICT_NAMES = ("North", "East", "South", "West")

CostModel = Callable[[random.Random, int, int], Money]


def build_district_example(
    populations: Sequence[int],
    budget: int | str | Fraction,
    projects_per_district: int = 4,
    cost_model: CostModel | None = None,
    seed: int = 0,
) -> tuple[Instance, Profile]:
    """Synthesize the four-district example: every voter approves exactly
    the projects of their own district.

    ``populations`` gives the four district sizes (North, East, South,
    West).  ``cost_model(rng, district_index, project_index)`` prices each
    project; the default prices everything at a third of the budget, which
    lets the plurality district absorb the whole budget under a greedy
    rule.  Deterministic for a fixed seed.
    """
    if len(populations) != len(DISTRICT_NAMES):
        raise ValueError(f"need {len(DISTRICT_NAMES)} district populations")
    if any(p <= 0 for p in populations):
        raise ValueError("district populations must be positive")
    if projects_per_district <= 0:
        raise ValueError("projects_per_district must be positive")
    limit = money(budget)
    if limit <= 0:
        raise ValueError("budget must be positive")
    if cost_model is None:
        cost_model = lambda rng, d, j: limit / 3

    rng = random.Random(seed)
    projects: list[Project] = []
    for d_index, district in enumerate(DISTRICT_NAMES):
        for j in range(projects_per_district):
            cost = money(cost_model(rng, d_index, j))
            projects.append(
                Project(
                    id=f"{district.lower()}-{j + 1}",
                    cost=cost,
                    name=f"{district} project {j + 1}",
                    categories=frozenset({district}),
                )
            )

    ballots: list[ApprovalBallot] = []
    for d_index, district in enumerate(DISTRICT_NAMES):
        approved = frozenset(
            f"{district.lower()}-{j + 1}" for j in range(projects_per_district)
        )
        for v in range(populations[d_index]):
            ballots.append(ApprovalBallot(f"{district.lower()}-v{v + 1}", approved))

    instance = Instance(
        projects=tuple(projects),
        budget_limit=limit,
        meta={"instance_id": "district-example", "description": "four-district example"},
    )
    return instance, Profile(tuple(ballots))

"""Seeded random instance builders shared across the test modules."""

from __future__ import annotations

import random
from fractions import Fraction

from pbrules.model import ApprovalBallot, Instance, Profile, Project

CATEGORY_POOL = ("roads", "parks", "schools", "culture")

# Denominators that stay representable as decimal strings; used when the
# instance must survive a file round trip.
DECIMAL_DENOMS = (1, 1, 1, 2, 4, 5, 10)
ANY_DENOMS = DECIMAL_DENOMS + (3, 7)


def random_instance(
    rng: random.Random,
    max_voters: int = 12,
    max_projects: int = 6,
    decimal_money: bool = False,
    with_categories: bool = False,
    approval_rate: float = 0.4,
    tag: str = "rand",
):
    """One random instance/profile pair.  Ballots may be empty; every
    project keeps at least one approver (the model requires it)."""
    denoms = DECIMAL_DENOMS if decimal_money else ANY_DENOMS
    m = rng.randint(1, max_projects)
    n = rng.randint(1, max_voters)
    projects = []
    for j in range(m):
        cost = Fraction(rng.randint(1, 40), rng.choice(denoms))
        categories = ()
        if with_categories and rng.random() < 0.7:
            categories = tuple(
                sorted(rng.sample(CATEGORY_POOL, rng.randint(1, 2)))
            )
        projects.append(Project(id=f"p{j + 1}", cost=cost, categories=categories))
    budget = Fraction(rng.randint(5, 80), rng.choice((1, 1, 2)))
    approvals = {p.id: set() for p in projects}
    ballots = []
    for i in range(n):
        approved = frozenset(
            p.id for p in projects if rng.random() < approval_rate
        )
        for pid in approved:
            approvals[pid].add(i)
        ballots.append(ApprovalBallot(voter_id=f"v{i + 1}", approved=approved))
    # Orphaned projects get one forced approver so the pair validates.
    for j, project in enumerate(projects):
        if not approvals[project.id]:
            i = rng.randrange(n)
            ballots[i] = ApprovalBallot(
                voter_id=ballots[i].voter_id,
                approved=ballots[i].approved | {project.id},
            )
    instance = Instance(
        projects=tuple(projects),
        budget_limit=budget,
        meta={"instance_id": f"{tag}", "description": f"seeded random ({tag})"},
    )
    profile = Profile(ballots=tuple(ballots))
    profile.validate_against(instance)
    return instance, profile


def random_dataset(seed: int, count: int, **kwargs):
    """List of (instance, profile) pairs with distinct instance ids."""
    rng = random.Random(seed)
    pairs = []
    for k in range(count):
        kwargs["tag"] = f"{seed}-{k + 1}"
        pairs.append(random_instance(rng, **kwargs))
    return pairs

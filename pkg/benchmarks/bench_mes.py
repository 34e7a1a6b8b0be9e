"""Timing comparison of the two equal-shares engines.

Builds seeded synthetic elections directly in array form, runs both
engines on identical inputs, checks that the outputs agree, and prints
a table.  The compiled column is skipped when the kernel is not built.

Run:  python3 benchmarks/bench_mes.py [--repeat N]
"""
from __future__ import annotations

import argparse
import random
import time
from fractions import Fraction

from pbrules import _mes_pure

try:
    from pbrules import _mes_kernel
except ImportError:
    _mes_kernel = None

SCENARIOS = (
    (200, 40, 6),
    (1000, 80, 8),
    (3000, 120, 8),
)


def synthetic(seed: int, n: int, m: int, max_approvals: int):
    """One election in engine array form plus its budget."""
    rng = random.Random(seed)
    costs = [
        Fraction(rng.randint(50, 5000), rng.choice((1, 1, 2, 4))) for _ in range(m)
    ]
    ballot_lists: list[list[int]] = []
    approver_lists: list[set[int]] = [set() for _ in range(m)]
    for voter in range(n):
        chosen = rng.sample(range(m), rng.randint(1, max_approvals))
        ballot_lists.append(sorted(chosen))
        for j in chosen:
            approver_lists[j].add(voter)
    for j in range(m):
        if not approver_lists[j]:
            voter = rng.randrange(n)
            approver_lists[j].add(voter)
            ballot_lists[voter] = sorted(set(ballot_lists[voter]) | {j})
    order = sorted(range(m), key=lambda j: (costs[j], str(j)))
    tie_rank = [0] * m
    for position, j in enumerate(order):
        tie_rank[j] = position
    budget = sum(costs) / 4
    arrays = (n, costs, [sorted(a) for a in approver_lists], tie_rank, ballot_lists)
    return arrays, budget


def run_once(module, arrays, budget, star: bool):
    engine = module.MesEngine(*arrays)
    n = arrays[0]
    if star:
        return engine.run_star(budget, Fraction(n, 100), 50)
    return engine.run(Fraction(budget, n), want_ledger=True)


def best_time(module, arrays, budget, star: bool, repeat: int):
    result = None
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        result = run_once(module, arrays, budget, star)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="timings per cell, best kept")
    args = parser.parse_args()

    if _mes_kernel is None:
        print("compiled kernel not built; timing the pure engine only")
    header = f"{'scenario':<24}{'pure':>10}"
    if _mes_kernel is not None:
        header += f"{'kernel':>10}{'speedup':>10}"
    print(header)
    for seed, (n, m, approvals) in enumerate(SCENARIOS, start=1):
        arrays, budget = synthetic(seed, n, m, approvals)
        for star in (False, True):
            label = f"{'star' if star else 'run '}  n={n} m={m}"
            pure_t, pure_result = best_time(_mes_pure, arrays, budget, star, args.repeat)
            line = f"{label:<24}{pure_t:>9.3f}s"
            if _mes_kernel is not None:
                kernel_t, kernel_result = best_time(
                    _mes_kernel, arrays, budget, star, args.repeat
                )
                if kernel_result != pure_result:
                    raise SystemExit(f"engines disagree on {label}")
                line += f"{kernel_t:>9.3f}s{pure_t / kernel_t:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()

"""Success rates, confidence intervals, specialist normalization,
permutation tests."""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

from ..worldcore.rng import Rng

_TIE_EPS = 1e-12


def success_rate(outcomes: Sequence[bool]) -> tuple[float, float]:
    """(rate, 95% CI half-width), normal approximation; the implied
    interval is clipped to [0, 1] by `rate_bounds`."""
    n = len(outcomes)
    if n < 1:
        raise ValueError("need at least one outcome")
    rate = sum(1 for o in outcomes if o) / n
    half = 1.96 * math.sqrt(rate * (1.0 - rate) / n)
    return rate, half


def rate_bounds(rate: float, half: float) -> tuple[float, float]:
    return max(0.0, rate - half), min(1.0, rate + half)


def normalize_vs_specialist(
    agent_rates: dict[str, float], specialist_rates: dict[str, float]
) -> tuple[dict[str, float], float | None, list[str]]:
    """Per-environment performance as a percentage of the specialist's,
    aggregated as an unweighted mean over environments. Environments whose
    specialist rate is zero are excluded and reported."""
    relative: dict[str, float] = {}
    excluded: list[str] = []
    for world, rate in sorted(agent_rates.items()):
        spec = specialist_rates.get(world)
        if spec is None:
            continue
        if spec == 0:
            excluded.append(world)
            continue
        relative[world] = 100.0 * rate / spec
    aggregate = (sum(relative.values()) / len(relative)) if relative else None
    return relative, aggregate, excluded


def permutation_test(
    per_task_a: Sequence[float],
    per_task_b: Sequence[float],
    n_resamples: int = 10_000,
    seed: int = 0,
    *,
    paired: bool = False,
    exhaustive_limit: int = 100_000,
) -> float:
    """Two-sided permutation test on the mean difference.

    Default is an independent-groups test over the pooled per-task scores;
    `paired=True` flips signs of per-task differences instead (requires
    equal lengths). Small instances are enumerated exhaustively, giving an
    exact p; otherwise Monte Carlo with add-one smoothing.
    """
    a = list(per_task_a)
    b = list(per_task_b)
    if not a or not b:
        raise ValueError("both groups must be non-empty")
    if paired:
        return _paired_test(a, b, n_resamples, seed, exhaustive_limit)

    observed = abs(_mean(a) - _mean(b))
    pooled = a + b
    n_a = len(a)
    total = math.comb(len(pooled), n_a)
    if total <= exhaustive_limit:
        hits = 0
        for idx in combinations(range(len(pooled)), n_a):
            group_a = [pooled[i] for i in idx]
            rest = [pooled[i] for i in range(len(pooled)) if i not in set(idx)]
            if abs(_mean(group_a) - _mean(rest)) >= observed - _TIE_EPS:
                hits += 1
        return hits / total

    rng = Rng(seed)
    hits = 0
    for _ in range(n_resamples):
        shuffled = list(pooled)
        rng.shuffle(shuffled)
        if abs(_mean(shuffled[:n_a]) - _mean(shuffled[n_a:])) >= observed - _TIE_EPS:
            hits += 1
    return (1 + hits) / (1 + n_resamples)


def _paired_test(a: list[float], b: list[float], n_resamples: int,
                 seed: int, exhaustive_limit: int) -> float:
    if len(a) != len(b):
        raise ValueError("paired test needs equal-length score lists")
    diffs = [x - y for x, y in zip(a, b)]
    observed = abs(_mean(diffs))
    n = len(diffs)
    if 2**n <= exhaustive_limit:
        hits = 0
        for bits in range(2**n):
            flipped = [d if bits >> i & 1 else -d for i, d in enumerate(diffs)]
            if abs(_mean(flipped)) >= observed - _TIE_EPS:
                hits += 1
        return hits / 2**n
    rng = Rng(seed)
    hits = 0
    for _ in range(n_resamples):
        flipped = [d if rng.random() < 0.5 else -d for d in diffs]
        if abs(_mean(flipped)) >= observed - _TIE_EPS:
            hits += 1
    return (1 + hits) / (1 + n_resamples)


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)

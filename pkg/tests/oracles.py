"""Independent brute-force recomputations used to check the library.

Everything here is written from the metric definitions directly, with
no imports from the package under test, so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Mapping, Optional, Sequence

DEFAULT_WEIGHT = 50


# -- scoring ------------------------------------------------------------------


def pass_rate(answers: Sequence[str]) -> Optional[float]:
    yes = sum(1 for a in answers if a == "YES")
    scoreable = sum(1 for a in answers if a in ("YES", "NO"))
    return yes / scoreable if scoreable else None


def weighted_score(
    answers: Sequence[str], weights: Sequence[Optional[int]]
) -> tuple[Optional[float], bool]:
    """Returns (score, fell_back_to_pass_rate)."""
    if all(w is None for w in weights):
        return pass_rate(answers), True
    total = 0.0
    yes_mass = 0.0
    for answer, weight in zip(answers, weights):
        if answer not in ("YES", "NO"):
            continue
        w = DEFAULT_WEIGHT if weight is None else weight
        total += w
        if answer == "YES":
            yes_mass += w
    if total == 0:
        return None, False
    return yes_mass / total, False


def normalized_score(
    answers: Sequence[str], probabilities: Sequence[Optional[float]]
) -> Optional[float]:
    values = []
    for answer, p in zip(answers, probabilities):
        if answer not in ("YES", "NO"):
            continue
        if p is None:
            return None
        values.append(p)
    if not values:
        return None
    return sum(values) / len(values)


def micro_pass_rate(batches: Sequence[Sequence[str]]) -> Optional[float]:
    yes = sum(1 for answers in batches for a in answers if a == "YES")
    scoreable = sum(1 for answers in batches for a in answers if a in ("YES", "NO"))
    return yes / scoreable if scoreable else None


def macro_pass_rate(batches: Sequence[Sequence[str]]) -> float:
    rates = [pass_rate(answers) for answers in batches]
    return sum(rates) / len(rates)


# -- clustering ---------------------------------------------------------------


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def transitive_clusters(
    vectors: Sequence[Sequence[float]], threshold: float
) -> list[list[int]]:
    """Reference clustering: repeated closure over the similarity relation."""
    n = len(vectors)
    adjacent = [
        [cosine(vectors[i], vectors[j]) >= threshold for j in range(n)] for i in range(n)
    ]
    assigned: dict[int, int] = {}
    clusters: list[list[int]] = []
    for start in range(n):
        if start in assigned:
            continue
        frontier = [start]
        members = []
        while frontier:
            node = frontier.pop()
            if node in assigned:
                continue
            assigned[node] = len(clusters)
            members.append(node)
            for other in range(n):
                if other not in assigned and adjacent[node][other]:
                    frontier.append(other)
        clusters.append(sorted(members))
    clusters.sort(key=lambda c: c[0])
    return clusters


def clusters_from_matrix(similar: Sequence[Sequence[bool]]) -> list[list[int]]:
    """Same closure, from a precomputed boolean relation."""
    n = len(similar)
    assigned: set[int] = set()
    clusters: list[list[int]] = []
    for start in range(n):
        if start in assigned:
            continue
        frontier = [start]
        members = []
        while frontier:
            node = frontier.pop()
            if node in assigned:
                continue
            assigned.add(node)
            members.append(node)
            for other in range(n):
                if other not in assigned and similar[node][other]:
                    frontier.append(other)
        clusters.append(sorted(members))
    clusters.sort(key=lambda c: c[0])
    return clusters


# -- subset selection ---------------------------------------------------------


def best_subset(
    ids: Sequence[str],
    objective: Callable[[frozenset], float],
    length_penalty: float,
    max_len: Optional[int] = None,
) -> tuple[frozenset, float]:
    """Exhaustive optimum of objective(S) - penalty * |S| over all subsets."""
    best: frozenset = frozenset()
    best_score = objective(best) - length_penalty * 0
    for size in range(1, len(ids) + 1):
        if max_len is not None and size > max_len:
            break
        for combo in itertools.combinations(ids, size):
            subset = frozenset(combo)
            score = objective(subset) - length_penalty * size
            if score > best_score or (
                score == best_score
                and (len(subset), tuple(sorted(subset))) < (len(best), tuple(sorted(best)))
            ):
                best = subset
                best_score = score
    return best, best_score


def best_coverage_score(
    coverage_masks: Sequence[int], n_signals: int, length_penalty: float
) -> float:
    """Exhaustive optimum of |union|/n - penalty * |S| over all index subsets.

    Same enumeration as best_subset, specialized to signal-coverage
    objectives encoded as bitmasks so 2^n subsets stay cheap.
    """
    n = len(coverage_masks)
    union = [0] * (1 << n)
    best = 0.0
    for mask in range(1, 1 << n):
        low = mask & -mask
        union[mask] = union[mask ^ low] | coverage_masks[low.bit_length() - 1]
        score = union[mask].bit_count() / n_signals - length_penalty * mask.bit_count()
        if score > best:
            best = score
    return best


# -- statistics ---------------------------------------------------------------


def average_ranks(values: Sequence[float]) -> list[float]:
    ranks = [0.0] * len(values)
    for i, v in enumerate(values):
        less = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        ranks[i] = less + (equal + 1) / 2
    return ranks


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    return pearson(average_ranks(x), average_ranks(y))


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    n = len(x)
    concordant = discordant = ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                ties_x += 1
                ties_y += 1
            elif dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif dx * dy > 0:
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) / 2
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0:
        return None
    return (concordant - discordant) / denom


def mae(x: Sequence[float], y: Sequence[float]) -> float:
    return sum(abs(a - b) for a, b in zip(x, y)) / len(x)


def auc(pos: Sequence[float], neg: Sequence[float]) -> float:
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def point_biserial(binary: Sequence[int], scores: Sequence[float]) -> Optional[float]:
    return pearson([float(b) for b in binary], list(scores))


def cohens_d(deltas: Sequence[float]) -> Optional[float]:
    n = len(deltas)
    if n < 2:
        return None
    mean = sum(deltas) / n
    var = sum((d - mean) ** 2 for d in deltas) / (n - 1)
    if var == 0:
        return None
    return mean / math.sqrt(var)

"""Independent reference computations used by the tests.

Pure Python, exact arithmetic where it matters; nothing here imports the
code under test beyond plain data types.
"""

from __future__ import annotations

import math
from fractions import Fraction


def brute_stats(xs):
    """(min, max, mean, population std) with math.fsum."""
    xs = [float(x) for x in xs]
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / n
    return min(xs), max(xs), mean, math.sqrt(var)


def brute_magnitudes(rows):
    return [math.sqrt(math.fsum(v * v for v in row)) for row in rows]


def gini_exact(labels) -> Fraction:
    n = len(labels)
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    return 1 - sum(Fraction(c, n) ** 2 for c in counts.values())


def brute_best_split(columns, labels):
    """Exhaustive search over every column and every midpoint threshold.

    Returns (column, threshold, decrease as Fraction) or None. Ties resolve to
    the lowest column, then the lowest threshold.
    """
    n = len(labels)
    parent = gini_exact(labels)
    best = None
    for j, col in enumerate(columns):
        values = sorted(set(col))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2
            left = [lab for x, lab in zip(col, labels) if x <= thr]
            right = [lab for x, lab in zip(col, labels) if x > thr]
            weighted = Fraction(len(left), n) * gini_exact(left) + Fraction(len(right), n) * gini_exact(right)
            dec = parent - weighted
            if dec > 0 and (best is None or dec > best[2]):
                best = (j, thr, dec)
    return best


def masked_column_means(rows, masks):
    """Per-column mean over unmasked entries; None for never-observed columns."""
    out = []
    for j in range(len(rows[0])):
        vals = [r[j] for r, m in zip(rows, masks) if not m[j]]
        out.append(math.fsum(vals) / len(vals) if vals else None)
    return out


def largest_share_error(before: dict, after: dict, target_total: int) -> float:
    """Max |kept_u - target * n_u / N| over users, in windows."""
    N = sum(before.values())
    return max(abs(after.get(u, 0) - Fraction(target_total * n, N)) for u, n in before.items())

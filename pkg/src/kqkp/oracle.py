"""Brute-force exact solver by exhaustive enumeration.

Ground truth for tests; deliberately free of any pruning cleverness.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .instance import Instance

MAX_N = 24


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: int | None  # None means infeasible
    argmax: np.ndarray | None
    feasible_count: int


def enumerate_exact(inst: Instance) -> OracleResult:
    """Scan every cardinality-k subset in lexicographic order."""
    if inst.n > MAX_N:
        raise TooLarge(f"oracle limited to n <= {MAX_N}, got {inst.n}")
    if inst.k < 0 or inst.k > inst.n:
        return OracleResult(None, None, 0)
    best_val = None
    best_x = None
    count = 0
    for subset in combinations(range(inst.n), inst.k):
        x = np.zeros(inst.n, dtype=np.int64)
        x[list(subset)] = 1
        if inst.weight(x) > inst.b:
            continue
        count += 1
        val = inst.objective(x)
        if best_val is None or val > best_val:
            best_val = val
            best_x = x
    return OracleResult(best_val, best_x, count)

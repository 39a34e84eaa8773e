"""Triangle inequalities over the metric polytope and the active-cut pool.

For every triple i < j < k of indices the four sign patterns of

    s1*X_ij + s2*X_ik + s3*X_jk >= -1

are valid on +/-1 rank-one matrices.  Feasibility is normalized as
T(X) <= e with T_c(X) = -(signed sum), so ``evaluate`` returns e - T(X)
(the slack; negative entries are violated cuts) which doubles as the
subgradient of the dual functional.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

SIGN_PATTERNS = ((1, 1, 1), (-1, -1, 1), (-1, 1, -1), (1, -1, -1))

DEFAULT_VIOLATION_TOL = 1e-4
DEFAULT_GAMMA_DROP = 1e-5


@dataclass(frozen=True, order=True)
class TriangleCut:
    i: int
    j: int
    k: int
    kind: int

    @property
    def signs(self) -> tuple[int, int, int]:
        return SIGN_PATTERNS[self.kind]


@lru_cache(maxsize=8)
def _triples(n: int):
    if n < 3:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    arr = np.array(list(combinations(range(n), 3)), dtype=np.int64)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def _cut_arrays(cuts):
    m = len(cuts)
    I = np.fromiter((c.i for c in cuts), dtype=np.int64, count=m)
    J = np.fromiter((c.j for c in cuts), dtype=np.int64, count=m)
    K = np.fromiter((c.k for c in cuts), dtype=np.int64, count=m)
    S = np.array([c.signs for c in cuts], dtype=float).reshape(m, 3)
    return I, J, K, S


def evaluate(cuts, X: np.ndarray) -> np.ndarray:
    """Slack e - T(X) per cut; entry < 0 means the cut is violated."""
    if len(cuts) == 0:
        return np.zeros(0)
    I, J, K, S = _cut_arrays(cuts)
    signed = S[:, 0] * X[I, J] + S[:, 1] * X[I, K] + S[:, 2] * X[J, K]
    return 1.0 + signed


def separate(X: np.ndarray, m: int, exclude=None, tol: float = DEFAULT_VIOLATION_TOL):
    """Up to m most-violated triangle cuts, full scan over all 4*C(n,3).

    Deterministic: sorted by violation descending, ties by (i, j, k, kind).
    Cuts in ``exclude`` (any iterable of TriangleCut) are skipped.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = X.shape[0]
    I, J, K = _triples(n)
    if len(I) == 0:
        return []
    xij, xik, xjk = X[I, J], X[I, K], X[J, K]
    excluded = set(exclude) if exclude is not None else set()
    candidates = []
    for kind, (s1, s2, s3) in enumerate(SIGN_PATTERNS):
        slack = 1.0 + s1 * xij + s2 * xik + s3 * xjk
        hit = np.nonzero(slack < -tol)[0]
        for idx in hit:
            candidates.append(
                (-float(slack[idx]), int(I[idx]), int(J[idx]), int(K[idx]), kind)
            )
    candidates.sort(key=lambda c: (-c[0], c[1], c[2], c[3], c[4]))
    out = []
    for viol, i, j, k, kind in candidates:
        cut = TriangleCut(i, j, k, kind)
        if cut in excluded:
            continue
        out.append(cut)
        if len(out) == m:
            break
    return out


def adjoint_apply(cuts, gamma, n: int) -> np.ndarray:
    """T'(gamma) as a symmetric zero-diagonal n x n matrix.

    Satisfies <T'(gamma), X> == gamma' T(X) for all symmetric X.
    """
    G = np.zeros((n, n))
    if len(cuts) == 0:
        return G
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape[0] != len(cuts):
        raise ValueError("gamma not conformal with cut list")
    I, J, K, S = _cut_arrays(cuts)
    # T_c has coefficient -s on each off-diagonal pair, split symmetrically
    w = -0.5 * gamma
    np.add.at(G, (I, J), w * S[:, 0])
    np.add.at(G, (J, I), w * S[:, 0])
    np.add.at(G, (I, K), w * S[:, 1])
    np.add.at(G, (K, I), w * S[:, 1])
    np.add.at(G, (J, K), w * S[:, 2])
    np.add.at(G, (K, J), w * S[:, 2])
    return G


class CutPool:
    """Active subset of triangle cuts with their multipliers gamma >= 0."""

    def __init__(self, n: int, capacity: int | None = None):
        self.n = n
        self.capacity = capacity if capacity is not None else 10 * n
        self.cuts: list[TriangleCut] = []
        self.gamma = np.zeros(0)
        self._members: set[TriangleCut] = set()

    def __len__(self) -> int:
        return len(self.cuts)

    def __contains__(self, cut: TriangleCut) -> bool:
        return cut in self._members

    def add(self, new_cuts) -> int:
        added = 0
        for c in new_cuts:
            if c in self._members:
                continue
            self.cuts.append(c)
            self._members.add(c)
            added += 1
        if added:
            self.gamma = np.concatenate([self.gamma, np.zeros(added)])
        return added

    def set_gamma(self, gamma) -> None:
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape[0] != len(self.cuts):
            raise ValueError("gamma not conformal with pool")
        if (gamma < 0).any():
            raise ValueError("multipliers must be nonnegative")
        self.gamma = gamma

    def drop_small(self, threshold: float = DEFAULT_GAMMA_DROP) -> int:
        """Remove cuts whose multiplier is below threshold (inactive)."""
        keep = self.gamma >= threshold
        return self._filter(keep)

    def enforce_capacity(self) -> int:
        if len(self.cuts) <= self.capacity:
            return 0
        order = np.argsort(self.gamma, kind="stable")  # lowest gamma first
        drop = set(order[: len(self.cuts) - self.capacity].tolist())
        keep = np.array([i not in drop for i in range(len(self.cuts))])
        return self._filter(keep)

    def _filter(self, keep: np.ndarray) -> int:
        removed = int((~keep).sum())
        if removed:
            self.cuts = [c for c, kp in zip(self.cuts, keep) if kp]
            self._members = set(self.cuts)
            self.gamma = self.gamma[keep]
        return removed

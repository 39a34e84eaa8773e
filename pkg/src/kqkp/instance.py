"""Problem data model, validation, preprocessing and subproblem reduction.

An instance asks to maximize x'Cx over binary x subject to a'x <= b and
e'x == k.  All root data are nonnegative integers with C symmetric.
Variable fixing folds the linear terms created by x_j = 1 into the diagonal
of the reduced C (valid on binaries since x_i^2 == x_i) and accumulates the
constant part in ``offset``, so subproblems never need a linear cost vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SOLVABLE = "solvable"
TRIVIAL_K1 = "trivial_k1"
INFEASIBLE = "infeasible"


class InstanceError(ValueError):
    """Base class for malformed or inconsistent problem data."""


class NonSymmetric(InstanceError):
    pass


class NegativeData(InstanceError):
    pass


class CapacityOutOfRange(InstanceError):
    """Root capacity must satisfy max_j a_j <= b < sum_j a_j."""


class InfeasibleFix(InstanceError):
    """Fixing a variable to 1 would violate capacity or cardinality."""


class ParseError(InstanceError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class Instance:
    """Immutable-by-convention problem data; do not mutate after creation."""

    k: int
    a: np.ndarray
    b: int
    C: np.ndarray
    offset: int = 0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.int64)
        self.C = np.asarray(self.C)
        if np.issubdtype(self.C.dtype, np.integer):
            self.C = self.C.astype(np.int64)
        self.k = int(self.k)
        self.b = int(self.b)

    @property
    def n(self) -> int:
        return int(self.a.shape[0])

    def objective(self, x) -> int:
        """f(x) = x'Cx + offset for a binary selection vector x."""
        x = np.asarray(x, dtype=np.int64)
        val = x @ self.C @ x + self.offset
        return int(round(float(val)))

    def weight(self, x) -> int:
        x = np.asarray(x, dtype=np.int64)
        return int(x @ self.a)

    def is_feasible(self, x) -> bool:
        x = np.asarray(x, dtype=np.int64)
        return int(x.sum()) == self.k and self.weight(x) <= self.b


@dataclass(frozen=True)
class Preprocessed:
    k_max: int
    b_prime: int
    status: str
    trivial_value: int | None = None
    trivial_index: int | None = None


def validate(inst: Instance, symmetrize: bool = False, root: bool = True) -> Instance:
    """Check instance invariants; returns the (possibly symmetrized) instance.

    Root instances additionally need max_j a_j <= b < sum_j a_j.  Subproblems
    created by variable fixing may violate that range, so they are checked
    with ``root=False`` (nonnegativity and symmetry only).
    """
    if inst.n == 0:
        raise InstanceError("instance has no items")
    if inst.C.shape != (inst.n, inst.n):
        raise InstanceError(f"C must be {inst.n}x{inst.n}, got {inst.C.shape}")
    if inst.k < 0 or inst.b < 0 or (inst.a < 0).any() or (inst.C < 0).any():
        raise NegativeData("k, b, weights and profits must be nonnegative")
    C = inst.C
    if not np.array_equal(C, C.T):
        if not symmetrize:
            raise NonSymmetric("profit matrix is not symmetric")
        S = C + C.T
        if np.issubdtype(S.dtype, np.integer) and not (S % 2).any():
            C = S // 2
        else:
            C = S / 2.0
        inst = Instance(inst.k, inst.a, inst.b, C, inst.offset)
    if root:
        total = int(inst.a.sum())
        if not (int(inst.a.max()) <= inst.b < total):
            raise CapacityOutOfRange(
                f"need max a_j <= b < sum a_j, got max={int(inst.a.max())} "
                f"b={inst.b} sum={total}"
            )
    return inst


def preprocess(inst: Instance) -> Preprocessed:
    """Compute k_max, b' and resolve trivial cases.  Pure and idempotent."""
    w = np.sort(inst.a)
    csum = np.cumsum(w)
    k_max = int(np.searchsorted(csum, inst.b, side="right"))
    if inst.k <= 0:
        b_prime = 0
    else:
        b_prime = int(csum[min(inst.k, inst.n) - 1])
    if inst.k > k_max:
        return Preprocessed(k_max, b_prime, INFEASIBLE)
    if inst.k == 1:
        # scan restricted to items fitting the capacity; at the root every
        # item fits, subproblems may carry heavy items
        mask = inst.a <= inst.b
        diag = np.diag(inst.C)
        vals = np.where(mask, diag, np.iinfo(np.int64).min)
        idx = int(np.argmax(vals))
        return Preprocessed(
            k_max,
            b_prime,
            TRIVIAL_K1,
            trivial_value=int(diag[idx]) + inst.offset,
            trivial_index=idx,
        )
    return Preprocessed(k_max, b_prime, SOLVABLE)


def fix_variable(inst: Instance, j: int, value: int) -> Instance:
    """Reduced subproblem after forcing x_j to 0 or 1."""
    if not 0 <= j < inst.n:
        raise IndexError(f"item index {j} out of range")
    if value not in (0, 1):
        raise ValueError("value must be 0 or 1")
    if value == 1 and (inst.k == 0 or int(inst.a[j]) > inst.b):
        raise InfeasibleFix(f"cannot set x_{j}=1 (k={inst.k}, a_j={int(inst.a[j])}, b={inst.b})")
    keep = np.arange(inst.n) != j
    a2 = inst.a[keep]
    C2 = inst.C[np.ix_(keep, keep)].copy()
    if value == 0:
        return Instance(inst.k, a2, inst.b, C2, inst.offset)
    C2[np.diag_indices_from(C2)] += 2 * inst.C[j, keep]
    return Instance(
        inst.k - 1,
        a2,
        inst.b - int(inst.a[j]),
        C2,
        inst.offset + int(inst.C[j, j]),
    )


# ---------------------------------------------------------------------------
# text format: line 1 "n k b", line 2 the n weights, then the n rows of C;
# '#' starts a comment line


def to_text(inst: Instance) -> str:
    lines = [f"{inst.n} {inst.k} {inst.b}"]
    lines.append(" ".join(str(int(v)) for v in inst.a))
    for row in inst.C:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> Instance:
    rows = []  # (line_no, tokens)
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append((ln, stripped.split()))

    def ints(entry, expect=None):
        ln, toks = entry
        if expect is not None and len(toks) != expect:
            raise ParseError(ln, f"expected {expect} integers, got {len(toks)}")
        try:
            return [int(t) for t in toks]
        except ValueError as exc:
            raise ParseError(ln, f"invalid integer: {exc}") from None

    if not rows:
        raise ParseError(1, "empty instance file")
    n, k, b = ints(rows[0], expect=3)
    if n <= 0:
        raise ParseError(rows[0][0], f"item count must be positive, got {n}")
    if len(rows) < n + 2:
        last = rows[-1][0]
        raise ParseError(last, f"expected {n + 2} data lines, found {len(rows)}")
    a = ints(rows[1], expect=n)
    C = [ints(rows[2 + i], expect=n) for i in range(n)]
    return Instance(k, np.array(a), b, np.array(C))


def load(path) -> Instance:
    return parse_text(Path(path).read_text())


def dump(inst: Instance, path) -> None:
    Path(path).write_text(to_text(inst))

"""Projected semidefinite relaxation of the k-item quadratic knapsack.

The binary problem is rewritten in +/-1 variables y = 2x - e, homogenized
with a leading coordinate, and projected onto the orthogonal complement of
the forced null eigenvector so that Slater's condition holds.  The result is
an order-n SDP

    max <C_bar, X>  s.t.  diag(X) = e,  <ee', X> = (2k-n)^2,
                          <a_bar a_bar', X> <= (b - b')^2,  X psd,

whose constraint matrices are all diagonal or rank one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance, Preprocessed


class DegenerateCardinality(ValueError):
    """n == 2k makes the projection scale 1/(2k-n) undefined."""


class CardinalityMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RelaxationData:
    dim: int
    C_bar: np.ndarray
    a_bar: np.ndarray
    rhs_card: float
    rhs_cap: float
    const_term: float
    proj_scale: float


def ensure_projectable(inst: Instance) -> tuple[Instance, bool]:
    """Work around n == 2k by appending a dummy item.

    The dummy has weight b+1 (never selectable) and zero profits, so the
    optimum is unchanged while 2k != n is restored.  Returns (instance,
    padded-flag); callers drop the trailing coordinate of any fractional
    point when the flag is set.
    """
    if inst.n != 2 * inst.k:
        return inst, False
    a2 = np.append(inst.a, inst.b + 1)
    C2 = np.zeros((inst.n + 1, inst.n + 1), dtype=inst.C.dtype)
    C2[: inst.n, : inst.n] = inst.C
    return Instance(inst.k, a2, inst.b, C2, inst.offset), True


def build(inst: Instance, prep: Preprocessed) -> RelaxationData:
    n, k = inst.n, inst.k
    if n == 2 * k:
        raise DegenerateCardinality(f"n == 2k == {n}; pad with ensure_projectable first")
    scale = 1.0 / (2 * k - n)
    C = inst.C.astype(float)
    e = np.ones(n)
    Ce = C @ e

    # homogenized cost: <Ctil, (1;y)(1;y)'> == f(x) for y = 2x - e
    Ctil = np.empty((n + 1, n + 1))
    Ctil[0, 0] = e @ Ce
    Ctil[0, 1:] = Ce
    Ctil[1:, 0] = Ce
    Ctil[1:, 1:] = C
    Ctil *= 0.25

    V = np.vstack([scale * e[None, :], np.eye(n)])
    C_bar = V.T @ Ctil @ V
    C_bar = 0.5 * (C_bar + C_bar.T)

    a = inst.a.astype(float)
    a_bar = ((a.sum() - (inst.b + prep.b_prime)) * scale) * e + a

    return RelaxationData(
        dim=n,
        C_bar=C_bar,
        a_bar=a_bar,
        rhs_card=float((2 * k - n) ** 2),
        rhs_cap=float((inst.b - prep.b_prime) ** 2),
        const_term=float(inst.offset),
        proj_scale=scale,
    )


def feasible_X_from_binary(x, k: int) -> np.ndarray:
    """Rank-one lift X = yy' with y = 2x - e; testing helper."""
    x = np.asarray(x, dtype=float)
    if int(round(x.sum())) != k:
        raise CardinalityMismatch(f"sum(x) = {x.sum()} != k = {k}")
    y = 2.0 * x - 1.0
    return np.outer(y, y)


def extract_fractional(X: np.ndarray, data: RelaxationData) -> np.ndarray:
    """First-row map back to [0,1]^n; exact on rank-one X."""
    y_est = data.proj_scale * (X @ np.ones(data.dim))
    return np.clip(0.5 * (y_est + 1.0), 0.0, 1.0)

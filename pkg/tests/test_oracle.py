import numpy as np
import pytest

from kqkp.instance import Instance
from kqkp.oracle import TooLarge, enumerate_exact
from conftest import make_instance


def test_picks_larger_diagonal():
    inst = Instance(1, np.array([1, 1]), 1, np.array([[1, 0], [0, 2]]))
    res = enumerate_exact(inst)
    assert res.value == 2
    assert np.array_equal(res.argmax, [0, 1])


def test_infeasible_when_weight_exceeds_capacity():
    inst = Instance(2, np.array([1, 1]), 1, np.eye(2, dtype=np.int64))
    res = enumerate_exact(inst)
    assert res.value is None
    assert res.feasible_count == 0


def test_feasible_count_binomial():
    inst = Instance(2, np.ones(4, dtype=np.int64), 2, np.zeros((4, 4), dtype=np.int64))
    assert enumerate_exact(inst).feasible_count == 6


def test_size_guard():
    inst = Instance(2, np.ones(25, dtype=np.int64), 5, np.zeros((25, 25), dtype=np.int64))
    with pytest.raises(TooLarge):
        enumerate_exact(inst)


def test_value_invariant_under_permutation(rng):
    inst = make_instance(9, seed=11)
    perm = rng.permutation(inst.n)
    permuted = Instance(inst.k, inst.a[perm], inst.b,
                        inst.C[np.ix_(perm, perm)])
    assert enumerate_exact(inst).value == enumerate_exact(permuted).value


def test_unselectable_zero_item_is_neutral():
    inst = make_instance(8, seed=4)
    a2 = np.append(inst.a, inst.b + 1)
    C2 = np.zeros((inst.n + 1, inst.n + 1), dtype=np.int64)
    C2[: inst.n, : inst.n] = inst.C
    padded = Instance(inst.k, a2, inst.b, C2)
    assert enumerate_exact(inst).value == enumerate_exact(padded).value


def test_argmax_consistent():
    inst = make_instance(10, seed=6)
    res = enumerate_exact(inst)
    assert inst.is_feasible(res.argmax)
    assert inst.objective(res.argmax) == res.value

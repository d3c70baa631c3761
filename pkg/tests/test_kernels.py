"""Backend parity: the compiled kernels must agree with the numpy/scipy
reference on every operation, including tie-breaks and zero-mass handling."""
import numpy as np
import pytest

import atpo.kernels as kernels
from atpo.kernels import prep, pyref
from atpo.mdp import TabularMDP
from atpo.pomdp import TabularPOMDP

from oracles import dense_belief_update, dense_q_value, random_pomdp

compiled = pytest.importorskip("atpo.kernels._fast", reason="compiled backend unavailable")


def build(rng, X=7, A=3, Z=5, sparse=0.0):
    T, O, R, b0 = random_pomdp(rng, X, A, Z, sparse=sparse)
    ops = prep.ModelOps(T, O, R, 0.93)
    return ops, T, O, R, b0


class TestParity:
    def test_belief_update_agrees(self):
        rng = np.random.default_rng(51)
        for sparse in (0.0, 0.6):
            ops, T, O, R, b0 = build(rng, sparse=sparse)
            for _ in range(20):
                b = rng.random(7)
                b /= b.sum()
                a = int(rng.integers(3))
                z = int(rng.integers(5))
                fast = compiled.belief_update(ops, b, a, z)
                ref = pyref.belief_update(ops, b, a, z)
                oracle = dense_belief_update(T, O, b, a, z)
                assert fast[1] == pytest.approx(ref[1], rel=1e-12)
                assert fast[1] == pytest.approx(oracle[1], rel=1e-12)
                if ref[0] is None:
                    assert fast[0] is None
                else:
                    np.testing.assert_allclose(fast[0], ref[0], atol=1e-13)
                    np.testing.assert_allclose(fast[0], oracle[0], atol=1e-13)

    def test_observation_probs_agree(self):
        rng = np.random.default_rng(52)
        ops, T, O, R, b0 = build(rng)
        for a in range(3):
            fast = compiled.observation_probs(ops, b0, a)
            ref = pyref.observation_probs(ops, b0, a)
            np.testing.assert_allclose(fast, ref, atol=1e-13)
            assert fast.sum() == pytest.approx(1.0)

    def test_q_values_agree(self):
        rng = np.random.default_rng(53)
        for sparse in (0.0, 0.7):
            ops, T, O, R, b0 = build(rng, X=9, A=4, Z=6, sparse=sparse)
            vectors = np.ascontiguousarray(rng.standard_normal((8, 9)))
            for _ in range(10):
                b = rng.random(9)
                b /= b.sum()
                fast = compiled.q_values(ops, vectors, b)
                ref = pyref.q_values(ops, vectors, b)
                np.testing.assert_allclose(fast, ref, rtol=1e-10, atol=1e-12)
                for a in range(4):
                    oracle = dense_q_value(T, O, R, 0.93, vectors, b, a)
                    assert fast[a] == pytest.approx(oracle, abs=1e-9)

    def test_backup_agrees(self):
        rng = np.random.default_rng(54)
        for sparse in (0.0, 0.7):
            ops, T, O, R, b0 = build(rng, X=8, A=3, Z=5, sparse=sparse)
            vectors = np.ascontiguousarray(rng.standard_normal((6, 8)))
            for _ in range(10):
                b = rng.random(8)
                b /= b.sum()
                fast_alpha, fast_a = compiled.backup(ops, vectors, b)
                ref_alpha, ref_a = pyref.backup(ops, vectors, b)
                assert fast_a == ref_a
                np.testing.assert_allclose(fast_alpha, ref_alpha, rtol=1e-10, atol=1e-12)

    def test_backup_zero_mass_observations_use_vector_zero(self):
        # an observation symbol that is never emitted must not disturb the backup
        rng = np.random.default_rng(55)
        T, O, R, b0 = random_pomdp(rng, 4, 2, 3)
        O[:, :, 2] = 0.0
        O /= O.sum(axis=2, keepdims=True)
        pad = np.zeros((2, 4, 1))
        O = np.concatenate([O, pad], axis=2)  # symbol 3 impossible everywhere
        ops = prep.ModelOps(T, O, R, 0.9)
        vectors = np.ascontiguousarray(rng.standard_normal((5, 4)))
        b = rng.random(4)
        b /= b.sum()
        fast_alpha, fast_a = compiled.backup(ops, vectors, b)
        ref_alpha, ref_a = pyref.backup(ops, vectors, b)
        assert fast_a == ref_a
        np.testing.assert_allclose(fast_alpha, ref_alpha, atol=1e-12)


class TestDispatch:
    def test_backend_reports_compiled(self):
        assert kernels.BACKEND in ("compiled", "python")

    def test_ops_cached_on_model(self):
        rng = np.random.default_rng(56)
        T, O, R, b0 = random_pomdp(rng, 3, 2, 2)
        base = TabularMDP(transition=T, reward=R, discount=0.9)
        pomdp = TabularPOMDP(base=base, observation=O, initial_belief=b0)
        first = kernels.for_model(pomdp)
        second = kernels.for_model(pomdp)
        assert first is second

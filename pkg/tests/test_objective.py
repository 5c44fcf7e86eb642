import numpy as np
import pytest

from oracles import loss_loop, subgradient_loop
from phasebit.errors import DimensionError
from phasebit.metrics import hamming
from phasebit.objective import LossContext, h_split, h_two_point, index_sets, loss, subgradient
from phasebit.sensing import gaussian_ensemble, quantize


def _instance(seed, m=200, n=6, tau=1.0):
    A = gaussian_ensemble(m, n, seed).rows
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    return A, x, tau


def test_loss_zero_on_consistent_signal():
    A, x, tau = _instance(0)
    ctx = LossContext(A, tau, quantize(A, x, tau))
    assert loss(ctx, x) == 0.0
    assert np.array_equal(subgradient(ctx, x), np.zeros(6))


def test_loss_hand_case():
    ctx = LossContext([[1.0, 0.0]], 1.0, [-1])
    assert loss(ctx, [2.0, 0.0]) == 1.0


def test_loss_sign_symmetric_and_loop_oracle():
    A, x, tau = _instance(1)
    rng = np.random.default_rng(5)
    ctx = LossContext(A, tau, quantize(A, x, tau))
    for _ in range(20):
        u = rng.standard_normal(6)
        assert loss(ctx, u) == loss(ctx, -u)
        assert loss(ctx, u) == pytest.approx(loss_loop(A, tau, ctx.y, u), rel=1e-12)
        np.testing.assert_allclose(subgradient(ctx, u), subgradient_loop(A, tau, ctx.y, u),
                                   rtol=1e-12, atol=1e-14)


def test_subgradient_hand_case():
    A = [[1.0, 0.0]]
    y = quantize(A, [0.5, 0.0], 1.0)
    assert y.tolist() == [-1]
    np.testing.assert_array_equal(subgradient(LossContext(A, 1.0, y), [2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_array_equal(h_two_point(A, 1.0, [2.0, 0.0], [0.5, 0.0]), [1.0, 0.0])


def test_subgradient_depends_only_on_patterns():
    A, x, tau = _instance(2)
    ctx = LossContext(A, tau, quantize(A, x, tau))
    u = 1.7 * np.random.default_rng(2).standard_normal(6)
    u2 = u * (1 + 1e-12)
    assert np.array_equal(np.sign(np.abs(A @ u) - tau), np.sign(np.abs(A @ u2) - tau))
    assert np.array_equal(subgradient(ctx, u), subgradient(ctx, u2))


def test_context_validation():
    with pytest.raises(DimensionError):
        LossContext(np.ones((3, 2)), 1.0, [1, -1])
    with pytest.raises(ValueError):
        LossContext(np.ones((2, 2)), 1.0, [1, 0])
    ctx = LossContext(np.ones((2, 2)), 1.0, [1, -1])
    with pytest.raises(DimensionError):
        loss(ctx, [1.0, 2.0, 3.0])


def test_h_two_point_identities():
    A, x, tau = _instance(3)
    rng = np.random.default_rng(3)
    for _ in range(10):
        u, v = rng.standard_normal((2, 6))
        assert np.array_equal(h_two_point(A, tau, u, u), np.zeros(6))
        ctx = LossContext(A, tau, quantize(A, v, tau))
        assert np.array_equal(h_two_point(A, tau, u, v), subgradient(ctx, u))


def test_index_sets():
    A, x, tau = _instance(4)
    R, L = index_sets(A, tau, x, x)
    assert R.size == 0 and L.size == 0
    R, L = index_sets(A, tau, x, -x)
    assert R.size == 0 and L.size == 200
    rng = np.random.default_rng(4)
    v = x + 0.3 * rng.standard_normal(6)
    R, _ = index_sets(A, tau, x, v)
    assert R.size == hamming(quantize(A, x, tau), quantize(A, v, tau))


def test_double_separation_rare_for_close_pairs():
    A = gaussian_ensemble(20_000, 6, 9).rows
    rng = np.random.default_rng(9)
    x = rng.standard_normal(6)
    x /= np.linalg.norm(x)
    v = x + 0.05 * rng.standard_normal(6) / np.sqrt(6)
    R, L = index_sets(A, 1.0, x, v)
    both = np.intersect1d(R, L).size
    assert R.size > 0 and both / 20_000 < 0.05 * R.size / 20_000


def test_decomposition_reproduces_h():
    rng = np.random.default_rng(6)
    for seed in range(20):
        A = gaussian_ensemble(500, 5, 100 + seed).rows
        p, q = rng.standard_normal((2, 5))
        h1, h2 = h_split(A, 1.0, p, q)
        np.testing.assert_allclose(h1 + h2, h_two_point(A, 1.0, p, q), rtol=0, atol=1e-12)


def test_pairwise_sum_close_to_sequential():
    A, x, tau = _instance(7, m=100_000, n=4)
    ctx = LossContext(A, tau, quantize(A, x, tau))
    u = 0.3 * x + 0.2
    g = subgradient(ctx, u)
    ref = np.zeros(4)
    z = A @ u
    for i in np.flatnonzero(np.where(np.abs(z) >= tau, 1, -1) != ctx.y):
        ref += (1 if abs(z[i]) >= tau else -1) * (1 if z[i] >= 0 else -1) * A[i]
    np.testing.assert_allclose(g, ref / ctx.m, rtol=1e-12, atol=1e-15)

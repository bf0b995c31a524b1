"""Kernel-level checks: blob normalisation, convergence to the singular
stokeslet, exact identities and symmetries."""

import numpy as np
import pytest
from scipy.integrate import quad

from regstokes import kernels
from regstokes.errors import InvalidParameterError, SingularEvaluationError

RNG = np.random.default_rng(7)


def test_blob_normalises_to_one():
    for eps in (0.05, 0.1, 0.3):
        total, _ = quad(
            lambda r: 4.0 * np.pi * r * r * kernels.blob([r, 0.0, 0.0], eps),
            0.0, np.inf,
        )
        assert abs(total - 1.0) < 1e-8


def test_blob_positive_and_decreasing():
    eps = 0.1
    values = [kernels.blob([r, 0.0, 0.0], eps) for r in (0.0, 0.05, 0.1, 0.5)]
    assert all(v > 0.0 for v in values)
    assert all(a > b for a, b in zip(values, values[1:]))


def test_reg_stokeslet_second_order_in_eps():
    x = np.array([0.3, -0.2, 0.9])
    y = np.array([-0.4, 0.5, 0.1])
    exact = kernels.singular_stokeslet(x, y)
    err = lambda eps: np.linalg.norm(kernels.reg_stokeslet(x, y, eps) - exact)
    # halving eps should reduce the error by a factor of 4 (second order)
    for eps in (0.1, 0.05):
        ratio = err(eps) / err(eps / 2.0)
        assert abs(ratio - 4.0) < 0.2


def test_reg_stokeslet_diagonal_identity():
    for eps in (0.01, 0.1, 1.0):
        for x in (np.zeros(3), np.array([1.0, 2.0, 3.0])):
            S = kernels.reg_stokeslet(x, x, eps)
            assert np.allclose(S, (2.0 / eps) * np.eye(3), rtol=1e-15, atol=0.0)
            assert np.array_equal(S, np.diag(np.diag(S)))


def test_exchange_and_index_symmetry_exact():
    for _ in range(20):
        x, y = RNG.normal(size=3), RNG.normal(size=3)
        S = kernels.reg_stokeslet(x, y, 0.2)
        assert np.array_equal(S, S.T)
        assert np.array_equal(S, kernels.reg_stokeslet(y, x, 0.2))


def test_reg_pressure_odd():
    x, y = np.array([0.2, 0.1, -0.3]), np.array([-0.5, 0.4, 0.2])
    P = kernels.reg_pressure(x, y, 0.15)
    assert np.allclose(P, -kernels.reg_pressure(y, x, 0.15), atol=0.0)


def test_blocks_match_pointwise_kernel():
    targets = RNG.normal(size=(4, 3))
    sources = RNG.normal(size=(6, 3))
    blocks = kernels.reg_stokeslet_blocks(targets, sources, 0.3)
    assert blocks.shape == (4, 6, 3, 3)
    for m in range(4):
        for n in range(6):
            S = kernels.reg_stokeslet(targets[m], sources[n], 0.3)
            assert np.allclose(blocks[m, n], S, rtol=1e-14, atol=1e-14)


def test_singular_stokeslet_coincidence_raises():
    x = np.array([1.0, 0.0, 0.0])
    with pytest.raises(SingularEvaluationError):
        kernels.singular_stokeslet(x, x)


def test_invalid_parameters_rejected():
    with pytest.raises(InvalidParameterError):
        kernels.RegParam(0.0)
    with pytest.raises(InvalidParameterError):
        kernels.RegParam(0.1, mu=-1.0)
    with pytest.raises(InvalidParameterError):
        kernels.blob([0.0, 0.0, 0.0], -0.1)
    with pytest.raises(InvalidParameterError):
        kernels.reg_stokeslet_blocks(np.zeros((1, 3)), np.zeros((1, 3)), 0.0)


def test_regparam_with_epsilon():
    p = kernels.RegParam(0.1, mu=2.0)
    q = p.with_epsilon(0.2)
    assert q.epsilon == 0.2 and q.mu == 2.0

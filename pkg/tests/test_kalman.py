import numpy as np
import pytest

from kolmotk import (
    DriftField,
    NotHypoelliptic,
    OperatorSpec,
    decompose,
    kalman_index,
)

SPEC_2D = OperatorSpec(n=2, p_tilde=1, Q0=[[1.0]], A=[[0.0, 0.0], [1.0, 1.0]],
                       F=DriftField())
A_SHIFT = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
SPEC_3D = OperatorSpec(n=3, p_tilde=1, Q0=[[1.0]], A=A_SHIFT, F=DriftField())


def test_kalman_index_examples():
    assert kalman_index(SPEC_2D) == 1
    assert kalman_index(SPEC_3D) == 2
    full = OperatorSpec(n=2, p_tilde=2, Q0=np.eye(2), A=np.zeros((2, 2)), F=DriftField())
    assert kalman_index(full) == 0


def test_not_hypoelliptic_when_rank_stalls():
    dead = OperatorSpec(n=2, p_tilde=1, Q0=[[1.0]], A=np.zeros((2, 2)), F=DriftField())
    with pytest.raises(NotHypoelliptic):
        kalman_index(dead)


def test_decomposition_structure():
    dec = decompose(SPEC_3D)
    assert dec.k == 2
    assert dec.block_dims == (1, 1, 1)
    assert [b.index_set for b in dec.blocks] == [(1,), (2,), (3,)]
    # first block is exactly the canonical noisy direction
    assert np.allclose(dec.blocks[0].basis[:, 0], [1.0, 0.0, 0.0])
    # orthonormal reference basis
    assert np.allclose(dec.basis.T @ dec.basis, np.eye(3), atol=1e-12)
    # projections resolve the identity
    total = sum(b.projection for b in dec.blocks)
    assert np.allclose(total, np.eye(3), atol=1e-12)


def test_block_of_coordinate():
    dec = decompose(SPEC_3D)
    assert [dec.block_of_coordinate(i) for i in (1, 2, 3)] == [0, 1, 2]
    with pytest.raises(IndexError):
        dec.block_of_coordinate(0)


def test_quasi_norm_scaling():
    """The anisotropic dilation delta_r scales the quasi-norm linearly."""
    dec = decompose(SPEC_3D)
    rng = np.random.default_rng(2)
    x = rng.normal(size=3)
    for r in (0.1, 0.5, 2.0):
        scales = np.array([r ** (2 * dec.block_of_coordinate(i) + 1) for i in (1, 2, 3)])
        xd = dec.basis @ (scales * (dec.basis.T @ x))
        assert np.isclose(dec.quasi_norm(xd), r * dec.quasi_norm(x), rtol=1e-12)


def test_quasi_norm_batched_and_distance():
    dec = decompose(SPEC_2D)
    X = np.random.default_rng(3).normal(size=(5, 2))
    vals = dec.quasi_norm(X)
    assert vals.shape == (5,)
    assert np.isclose(vals[0], dec.quasi_norm(X[0]))
    assert dec.distance(X[0], X[0]) == 0.0
    assert dec.distance(X[0], X[1]) == dec.quasi_norm(X[0] - X[1])


def test_metric_description():
    dec = decompose(SPEC_2D)
    s = dec.metric_description()
    assert "|E0" in s and "(1/3)" in s


def test_decomposition_cached_on_spec():
    spec = OperatorSpec(n=2, p_tilde=1, Q0=[[1.0]], A=[[0.0, 0.0], [1.0, 1.0]],
                        F=DriftField())
    assert spec.decomposition() is spec.decomposition()


def test_invariant_under_noise_block_rotation():
    """k and block dims do not depend on the basis of the noisy block."""
    theta = 0.6
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    A = np.zeros((3, 3))
    A[2, 0] = 1.0  # noise reaches e_3 through the first coordinate
    Q0 = R @ np.diag([2.0, 0.5]) @ R.T
    spec = OperatorSpec(n=3, p_tilde=2, Q0=Q0, A=A, F=DriftField())
    dec = decompose(spec)
    assert dec.k == 1
    assert dec.block_dims == (2, 1)

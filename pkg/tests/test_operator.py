import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bjlab.errors import DomainError
from bjlab.operator import (GOLDEN_MEAN, IndexMap, OperatorSpec, almost_mathieu, apply, block_index,
                            cosine_band, dirichlet_matrix, index_maps, scalar_index)
from bjlab.torus import TrigMatrixPoly

from test_torus import random_poly


def random_spec(seed, l=None, lam=None):
    rng = np.random.default_rng(seed)
    l = l or int(rng.integers(1, 4))
    W = random_poly(rng, l, 1, symmetric=False) * 0.5 + TrigMatrixPoly.constant(np.eye(l))
    return OperatorSpec(l=l, lam=lam if lam is not None else float(rng.uniform(0.5, 5)),
                        omega=float(rng.uniform()), W=W, R=random_poly(rng, l, 1) * 0.3,
                        F=random_poly(rng, l, 2))


def test_lambda_zero_rejected():
    with pytest.raises(DomainError, match="coupling must be nonzero"):
        almost_mathieu(0.0)


def test_block_size_mismatch():
    with pytest.raises(DomainError):
        OperatorSpec(2, 1.0, 0.3, TrigMatrixPoly.constant(np.eye(2)), TrigMatrixPoly.zeros(1),
                     TrigMatrixPoly.zeros(2))


def test_apply_diagonal_term():
    spec = almost_mathieu(2.0)
    assert apply(spec, 0.0, {0: [1.0]}, 0)[0] == pytest.approx(4.0)


def test_apply_hopping_term():
    spec = almost_mathieu(2.0)
    assert apply(spec, 0.0, {1: [1.0]}, 0)[0] == pytest.approx(-1.0)


def test_one_site_box():
    # block n sits at phase x + n omega, so the box {0} at x = 0 is [lambda * 2 cos 0]
    H = dirichlet_matrix(almost_mathieu(2.0), 0.0, (0, 0)).entries
    assert H.tolist() == [[4.0]]
    H1 = dirichlet_matrix(almost_mathieu(2.0), 0.0, (1, 1)).entries
    assert H1[0, 0] == pytest.approx(4 * math.cos(2 * math.pi * GOLDEN_MEAN))


def test_two_site_box_against_direct_evaluation():
    w = GOLDEN_MEAN
    H = dirichlet_matrix(almost_mathieu(2.0), 0.0, (1, 2)).entries
    expected = [[4 * math.cos(2 * math.pi * w), -1.0], [-1.0, 4 * math.cos(4 * math.pi * w)]]
    assert np.allclose(H, expected, atol=1e-14)


def test_empty_interval():
    with pytest.raises(DomainError):
        dirichlet_matrix(almost_mathieu(2.0), 0.0, (3, 2))


def test_complex_point_outside_annulus():
    with pytest.raises(DomainError):
        dirichlet_matrix(almost_mathieu(2.0), 1.7 + 0j, (1, 3))


def test_block_accessor():
    spec = cosine_band(3.0, hopping=0.2)
    D = dirichlet_matrix(spec, 0.4, (5, 8), 0.5)
    V = spec.V.real_values(0.4 + 6 * spec.omega)
    assert np.allclose(D.block(6, 6), V - 0.5 * np.eye(2))
    assert np.allclose(D.block(6, 7), -spec.W.real_values(0.4 + 7 * spec.omega))
    assert np.allclose(D.block(7, 6), -spec.W.real_values(0.4 + 7 * spec.omega).T)


def test_index_examples():
    assert [block_index(g, 1).n for g in range(1, 6)] == [1, 2, 3, 4, 5]
    assert block_index(3, 3) == block_index(3, 3, 2)
    assert (block_index(3, 3).n, block_index(3, 3).r) == (1, 0)
    assert (block_index(4, 3).n, block_index(4, 3).r) == (2, -2)


def test_index_round_trip_exhaustive():
    for l in range(1, 9):
        for N in range(1, 65):
            im = index_maps(l, N)
            for g in range(1, N * l + 1):
                b = im.to_block(g)
                assert b.gamma == l * b.n + b.r and -l < b.r <= 0
                assert im.to_scalar(b.n, b.r) == g
            with pytest.raises(DomainError):
                im.to_block(N * l + 1)


def test_index_out_of_range():
    with pytest.raises(DomainError):
        scalar_index(1, 1, 3)
    with pytest.raises(DomainError):
        IndexMap(0, 3)


def test_energy_window_contains_spectrum():
    spec = cosine_band(4.0, hopping=0.5)
    H = dirichlet_matrix(spec, 0.2, (1, 40)).entries
    assert np.abs(np.linalg.eigvalsh(H)).max() <= spec.energy_window()


@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.integers(-5, 5), st.integers(1, 6))
def test_symmetric_and_banded(seed, x, a, N):
    spec = random_spec(seed)
    H = dirichlet_matrix(spec, x, (a, a + N - 1), 0.3).entries
    assert np.abs(H - H.T).max() <= 1e-12
    l = spec.l
    blocks = np.repeat(np.arange(N), l)
    far = np.abs(blocks[:, None] - blocks[None, :]) >= 2
    assert np.all(H[far] == 0)


@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.integers(-5, 5), st.integers(1, 5), st.integers(-4, 4))
def test_covariance_and_shift(seed, x, a, N, j):
    spec = random_spec(seed)
    b = a + N - 1
    H = dirichlet_matrix(spec, x, (a + j, b + j), 0.1).entries
    assert np.allclose(H, dirichlet_matrix(spec, x + j * spec.omega, (a, b), 0.1).entries, atol=1e-12)
    H0 = dirichlet_matrix(spec, x, (a, b), 0.1).entries
    assert np.allclose(H0, dirichlet_matrix(spec, x + (a - 1) * spec.omega, (1, N), 0.1).entries, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_apply_matches_dense(seed, x):
    spec = random_spec(seed)
    l = spec.l
    rng = np.random.default_rng(seed)
    psi = {n: rng.standard_normal(l) for n in range(2, 6)}
    D = dirichlet_matrix(spec, x, (0, 7), 0.0)
    vec = np.concatenate([psi.get(n, np.zeros(l)) for n in range(0, 8)])
    dense = D.entries @ vec
    for n in range(1, 7):
        assert np.allclose(apply(spec, x, psi, n), dense[n * l:(n + 1) * l], atol=1e-10)

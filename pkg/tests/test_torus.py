import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bjlab.errors import DomainError
from bjlab.operator import GOLDEN_MEAN
from bjlab.torus import (TrigMatrixPoly, check_in_annulus, e, fourier_truncate, no_constant_eigenvalue_check,
                         sup_norm, tail_bound)


def random_poly(rng, l, d, symmetric=True):
    """Random real-on-the-torus polynomial; symmetric values if requested."""
    modes = {}
    for k in range(0, d + 1):
        c = rng.standard_normal((l, l)) + (1j * rng.standard_normal((l, l)) if k else 0)
        if symmetric:
            c = (c + c.T) / 2
        modes[k] = c
        if k:
            modes[-k] = np.conj(c)
    return TrigMatrixPoly.from_modes(modes, l)


def test_cosine_values():
    F = TrigMatrixPoly.cosine([[1.0]])
    xs = np.linspace(0, 1, 17)
    assert np.allclose(F.real_values(xs)[:, 0, 0], 2 * np.cos(2 * np.pi * xs), atol=1e-14)


def test_shifted_cosine():
    F = TrigMatrixPoly.cosine([[1.0]], 0.3)
    assert F.real_values(0.2)[0, 0] == pytest.approx(2 * math.cos(2 * math.pi * 0.5))


def test_laurent_extension():
    # 2 cos extends to z + 1/z
    F = TrigMatrixPoly.cosine([[1.0]])
    z = 1.2 * np.exp(0.7j)
    assert F.evaluate(z, 0.5)[0, 0] == pytest.approx(z + 1 / z)


def test_reality_violation_rejected():
    with pytest.raises(DomainError):
        TrigMatrixPoly.from_modes({1: [[1.0]]}, 1)


def test_outside_annulus_rejected():
    F = TrigMatrixPoly.cosine([[1.0]])
    with pytest.raises(DomainError):
        F.evaluate(1.6, 0.5)
    with pytest.raises(DomainError):
        check_in_annulus(0.5, 0.5)


def test_table_round_trip():
    rng = np.random.default_rng(3)
    P = random_poly(rng, 3, 2)
    Q = TrigMatrixPoly.from_table(P.to_table(), 3)
    assert P.allclose(Q, 0)


def test_table_errors():
    with pytest.raises(DomainError, match="duplicate"):
        TrigMatrixPoly.from_table([(0, 0, 0, 1, 0), (0, 0, 0, 2, 0)], 1)
    with pytest.raises(DomainError, match="out of range"):
        TrigMatrixPoly.from_table([(0, 1, 0, 1, 0)], 1)


def test_sup_norm_cosine():
    F = TrigMatrixPoly.cosine([[1.0]])
    assert sup_norm(F) == pytest.approx(2.0)
    assert sup_norm(F, 1.1) == pytest.approx(1.1 + 1 / 1.1)
    with pytest.raises(DomainError):
        sup_norm(F, grid_size=32)


def test_truncation_and_tail():
    rng = np.random.default_rng(0)
    P = random_poly(rng, 2, 3)
    T = fourier_truncate(P, 1)
    assert T.degree == 1
    xs = np.linspace(0, 1, 50, endpoint=False)
    gap = np.linalg.norm(P.at_phase(xs) - T.at_phase(xs), 2, axis=(-2, -1)).max()
    assert gap <= tail_bound(P, 1) + 1e-12


def test_constant_eigenvalue_detection():
    # diag(2cos, 1) has the constant eigenvalue 1
    F = TrigMatrixPoly.cosine([[1.0, 0], [0, 0]]) + TrigMatrixPoly.constant([[0, 0], [0, 1.0]])
    check = no_constant_eigenvalue_check(F)
    assert not check and check.witness == pytest.approx(1.0)
    G = TrigMatrixPoly.cosine([[1.0, 0], [0, 0]]) + TrigMatrixPoly.cosine([[0, 0], [0, 1.0]], 0.3)
    assert no_constant_eigenvalue_check(G)


def test_constant_polynomial_fails_check():
    assert not no_constant_eigenvalue_check(TrigMatrixPoly.constant([[2.0]]))


@given(st.floats(0, 1), st.floats(0.6, 1.4), st.integers(-50, 50))
def test_translation_keeps_circle(x, s, n):
    # the orbit acts on the phase only, so |z e(n omega)| = |z| exactly
    F = TrigMatrixPoly.cosine([[1.0]])
    moved = F.translate(GOLDEN_MEAN, n)
    assert np.allclose(moved.at_phase(x, s), F.at_phase(x + n * GOLDEN_MEAN, s), atol=1e-10)
    z = s * e(x)
    zn = z * e(n * GOLDEN_MEAN)
    assert abs(abs(zn) - abs(z)) <= 1e-15 * s


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 3))
def test_real_symmetric_on_torus(seed, l, d):
    P = random_poly(np.random.default_rng(seed), l, d)
    vals = P.real_values(np.linspace(0, 1, 9))
    assert np.allclose(vals, vals.swapaxes(-1, -2), atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_linearity(seed, a):
    rng = np.random.default_rng(seed)
    P, Q = random_poly(rng, 2, 2), random_poly(rng, 2, 1)
    xs = np.linspace(0, 1, 7)
    lhs = (P * a + Q).at_phase(xs, 1.1)
    assert np.allclose(lhs, a * P.at_phase(xs, 1.1) + Q.at_phase(xs, 1.1), atol=1e-10)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bjlab.errors import DomainError
from bjlab.localization import (decay_rate, distance_to_spectrum_check, eigensolve, localization_campaign,
                                lyapunov_diagnostic, poisson_identity_residual, surrogate_eigenvector, well_inside)
from bjlab.operator import GOLDEN_MEAN, OperatorSpec, almost_mathieu, cosine_band, dirichlet_matrix
from bjlab.torus import TrigMatrixPoly

from test_operator import random_spec


def poisson_probe(seed, negative=False):
    """Residual of the Poisson identity for a restricted eigenvector of a box two sites larger on each side.

    The eigenpair is drawn among those whose energy keeps a 1e-4 gap to the
    spectrum of the inner box, so the inner Green's function exists.
    """
    rng = np.random.default_rng(seed)
    spec = random_spec(seed, lam=float(rng.uniform(0.5, 3.0)))
    x = float(rng.uniform())
    a = int(rng.integers(-5, 5))
    b = a + int(rng.integers(3, 12)) - 1
    j = int(rng.integers(a, b + 1))
    pairs = eigensolve(spec, x, (a - 2, b + 2))
    inner = np.linalg.eigvalsh(dirichlet_matrix(spec, x, (a, b)).entries)
    usable = [p for p in pairs if np.abs(inner - p.E).min() >= 1e-4]
    p = usable[int(rng.integers(len(usable)))]
    psi = p.as_mapping()
    if negative:
        psi = {n: rng.standard_normal(spec.l) for n in psi}
    return poisson_identity_residual(spec, x, psi, p.E, (a, b), j)


def test_one_site_eigenvalue():
    pairs = eigensolve(almost_mathieu(2.0), 0.0, (0, 0))
    assert len(pairs) == 1 and pairs[0].E == pytest.approx(4.0)


def test_two_site_eigenvalues_closed_form():
    w = GOLDEN_MEAN
    p, q = 4 * math.cos(2 * math.pi * w), 4 * math.cos(4 * math.pi * w)
    mid, rad = (p + q) / 2, math.sqrt(((p - q) / 2) ** 2 + 1)
    Es = [e.E for e in eigensolve(almost_mathieu(2.0), 0.0, (1, 2))]
    assert Es == pytest.approx([mid - rad, mid + rad], abs=1e-14)


def test_eigenvectors_orthonormal_and_residual():
    spec = cosine_band(5.0, hopping=0.4)
    pairs = eigensolve(spec, 0.3, (1, 40))
    V = np.stack([p.psi.ravel() for p in pairs], axis=1)
    assert np.abs(V.T @ V - np.eye(80)).max() < 1e-10
    H = dirichlet_matrix(spec, 0.3, (1, 40)).entries
    assert max(p.residual for p in pairs) <= 1e-8 * np.linalg.norm(H, 2)
    assert all(a.E <= b.E for a, b in zip(pairs, pairs[1:]))


@given(st.floats(0.1, 5.0), st.integers(15, 30))
def test_decay_rate_synthetic(c, peak):
    n = np.arange(61)
    psi = np.exp(-c * np.abs(n - peak))
    psi /= np.linalg.norm(psi)
    fit = decay_rate(psi)
    assert fit.defined and fit.peak == peak
    assert fit.rate == pytest.approx(c, abs=1e-6)
    assert fit.r2 == pytest.approx(1.0, abs=1e-9)


def test_decay_rate_flat():
    fit = decay_rate(np.ones((50, 2)) / 10)
    assert abs(fit.rate) < 1e-10


def test_decay_rate_undefined():
    psi = np.zeros(20)
    psi[10] = 1.0
    fit = decay_rate(psi)
    assert not fit.defined and math.isnan(fit.rate)


def test_decay_rate_amo():
    rep = localization_campaign(almost_mathieu(10.0), 300, 0.1234)
    assert abs(rep.median_rate / math.log(10) - 1) < 0.2


def test_poisson_support_outside():
    spec = almost_mathieu(2.0)
    psi = {20: np.array([1.0])}
    assert poisson_identity_residual(spec, 0.3, psi, 0.1, (1, 5), 3) == 0.0


def test_poisson_restricted_eigenvectors():
    assert max(poisson_probe(s) for s in range(30)) <= 1e-8


def test_poisson_random_vectors():
    assert min(poisson_probe(s, negative=True) for s in range(30)) >= 1e-2


def test_poisson_j_outside():
    with pytest.raises(DomainError):
        poisson_identity_residual(almost_mathieu(2.0), 0.3, {}, 0.1, (1, 5), 7)


def test_distance_localized():
    spec = almost_mathieu(10.0)
    s = surrogate_eigenvector(spec, 0.1234, 10)
    chk = distance_to_spectrum_check(spec, 0.1234, 10, s.E, s.eta)
    assert chk.ok and s.eta < 1e-6
    assert chk.dist <= chk.bound


def test_distance_exact_eigenvalue():
    spec = almost_mathieu(10.0)
    E = np.linalg.eigvalsh(dirichlet_matrix(spec, 0.2, (-4, 4)).entries)[3]
    chk = distance_to_spectrum_check(spec, 0.2, 5, E, 1e-30)
    assert chk.ok and chk.dist < 1e-12


def test_distance_delocalized():
    spec = almost_mathieu(0.1)
    s = surrogate_eigenvector(spec, 0.1234, 10)
    chk = distance_to_spectrum_check(spec, 0.1234, 10, s.E, s.eta)
    assert chk.ok and s.eta > 1e-2


def test_lyapunov_free_case():
    free = OperatorSpec(1, 1.0, GOLDEN_MEAN, TrigMatrixPoly.constant([[1.0]]), TrigMatrixPoly.zeros(1),
                        TrigMatrixPoly.zeros(1))
    assert abs(lyapunov_diagnostic(free, 0.0, 10_000).exponents[0]) < 1e-12


def test_lyapunov_amo():
    res = lyapunov_diagnostic(almost_mathieu(10.0), 0.0, 100_000)
    assert abs(res.exponents[0] / math.log(10) - 1) < 0.1


def test_lyapunov_contract():
    spec = cosine_band(20.0, hopping=0.3)
    a = lyapunov_diagnostic(spec, 0.5, 20_000, reorth=8)
    b = lyapunov_diagnostic(spec, 0.5, 20_000, reorth=16)
    assert np.all(np.diff(a.exponents) <= 0)
    assert np.abs(a.exponents - b.exponents).max() < 1e-3
    with pytest.raises(DomainError):
        lyapunov_diagnostic(spec, 0.0, 100)


def test_well_inside_rule():
    assert well_inside(8, (1, 300)) and well_inside(150, (1, 300))
    assert not well_inside(7, (1, 300)) and not well_inside(151, (1, 300))


def test_localization_negative_control():
    rep = localization_campaign(almost_mathieu(0.1), 300, 0.1234)
    assert rep.fraction < 0.05


def test_localization_block_case():
    rep = localization_campaign(cosine_band(20.0, (0.0, 0.3)), 300, 0.1234)
    assert rep.fraction >= 0.9


def test_consistency_triangle():
    rate = localization_campaign(almost_mathieu(10.0), 300, 0.1234).median_rate
    gamma = lyapunov_diagnostic(almost_mathieu(10.0), 0.0, 100_000).exponents[0]
    ll = math.log(10)
    for a, b in ((rate, gamma), (rate, ll), (gamma, ll)):
        assert abs(a - b) <= 0.2 * max(a, b)

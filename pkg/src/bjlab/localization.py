"""Numerical localization diagnostics: eigenvector decay, the Poisson identity, distance to spectrum, Lyapunov exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import median
from typing import Mapping

import numpy as np

from .errors import DomainError, ResourceError, SpectralHitError
from .greens import greens
from .operator import OperatorSpec, dirichlet_matrix
from .reports import FAIL, PASS, BoundReport
from .torus import sup_norm


@dataclass
class DecayFit:
    rate: float
    peak: int
    intercept: float
    r2: float
    n_points: int
    defined: bool


def _block_norms(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    if psi.ndim == 1:
        return np.abs(psi)
    return np.linalg.norm(psi, axis=-1)


def decay_rate(psi, floor: float = 1e-14, min_dist: int = 2, min_points: int = 4) -> DecayFit:
    """Least-squares slope of ``log ||psi_n||`` against ``|n - n*|`` with ``n*`` the peak block.

    ``psi`` is an (N, l) array of blocks (or a length-N array for l = 1).
    Only blocks with norm above ``floor`` and ``|n - n*| >= min_dist`` enter;
    with fewer than ``min_points`` of them the fit is flagged undefined.
    """
    norms = _block_norms(psi)
    peak = int(np.argmax(norms))
    dist = np.abs(np.arange(len(norms)) - peak)
    use = (norms > floor) & (dist >= min_dist)
    n_points = int(use.sum())
    if n_points < min_points or np.ptp(dist[use]) == 0:
        return DecayFit(math.nan, peak, math.nan, math.nan, n_points, False)
    t, y = dist[use].astype(float), np.log(norms[use])
    slope, intercept = np.polyfit(t, y, 1)
    ss_res = float(np.sum((y - (slope * t + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), peak, float(intercept), r2, n_points, True)


@dataclass
class EigenPair:
    E: float
    psi: np.ndarray = field(repr=False)  # (N, l) blocks over the box
    interval: tuple[int, int]
    residual: float
    fit: DecayFit | None = None

    @property
    def peak(self) -> int:
        """Absolute block index of the largest block."""
        return self.interval[0] + int(np.argmax(_block_norms(self.psi)))

    def as_mapping(self) -> dict[int, np.ndarray]:
        a = self.interval[0]
        return {a + i: v for i, v in enumerate(self.psi)}


def eigensolve(spec: OperatorSpec, x: float, interval, fit: bool = False) -> list[EigenPair]:
    """All eigenpairs of the real symmetric ``H_[a,b](x)``, energies ascending."""
    D = dirichlet_matrix(spec, float(x), interval, 0.0)
    H = D.entries
    evals, evecs = np.linalg.eigh(H)
    resid = np.linalg.norm(H @ evecs - evecs * evals, axis=0)
    out = []
    for k in range(len(evals)):
        psi = evecs[:, k].reshape(D.N, spec.l)
        out.append(EigenPair(float(evals[k]), psi, D.interval, float(resid[k]),
                             decay_rate(psi) if fit else None))
    return out


# Poisson identity --------------------------------------------------------------------


def poisson_rhs(spec: OperatorSpec, x: float, psi: Mapping[int, np.ndarray], E: float, interval, j: int,
                G=None) -> np.ndarray:
    """``G_(j,a) W_a^T psi_(a-1) + G_(j,b) W_(b+1) psi_(b+1)``."""
    a, b = (int(v) for v in interval)
    if not a <= j <= b:
        raise DomainError(f"j = {j} outside [{a}, {b}]")
    l = spec.l
    zero = np.zeros(l)
    G = greens(spec, x, (a, b), E) if G is None else G
    W_a = spec.W.real_values(x + a * spec.omega)
    W_b1 = spec.W.real_values(x + (b + 1) * spec.omega)
    left = np.asarray(psi.get(a - 1, zero), dtype=float).reshape(l)
    right = np.asarray(psi.get(b + 1, zero), dtype=float).reshape(l)
    return G.block(j, a) @ (W_a.T @ left) + G.block(j, b) @ (W_b1 @ right)


def poisson_identity_residual(spec: OperatorSpec, x: float, psi: Mapping[int, np.ndarray], E: float,
                              interval, j: int) -> float:
    """``||psi_j - (Poisson representation of psi_j through the boundary of [a, b])||_2``."""
    lhs = np.asarray(psi.get(j, np.zeros(spec.l)), dtype=float).reshape(spec.l)
    return float(np.linalg.norm(lhs - poisson_rhs(spec, x, psi, E, interval, j)))


# distance to spectrum ------------------------------------------------------------------


@dataclass
class Surrogate:
    """Eigenvector of a larger box, rescaled so that ``||psi_0|| = 1``."""

    E: float
    psi: dict
    eta: float
    box: tuple[int, int]


def surrogate_eigenvector(spec: OperatorSpec, x: float, N0: int, E: float | None = None,
                          pad: int | None = None) -> Surrogate:
    """Restricted larger-box eigenvector standing in for a generalized eigenvector.

    Takes the eigenpair of ``H_[-L, L](x)``, ``L = N0 + pad``, with the
    largest block at 0 (or, if ``E`` is given, the one nearest ``E``), and
    scales it to ``||psi_0|| = 1``.  ``eta = max ||psi_(+-N0)||``.
    """
    if N0 < 1:
        raise DomainError("N0 must be positive")
    L = N0 + (N0 if pad is None else pad)
    pairs = eigensolve(spec, x, (-L, L))
    if E is None:
        pair = max(pairs, key=lambda p: np.linalg.norm(p.psi[L]))
    else:
        pair = min(pairs, key=lambda p: abs(p.E - E))
    psi0 = float(np.linalg.norm(pair.psi[L]))
    if psi0 < 1e-8:
        raise DomainError(f"surrogate construction failed: ||psi_0|| = {psi0:.2e} is too small to normalise")
    psi = {n: v / psi0 for n, v in pair.as_mapping().items()}
    eta = max(np.linalg.norm(psi[-N0]), np.linalg.norm(psi[N0]))
    return Surrogate(pair.E, psi, float(eta), (-L, L))


@dataclass
class DistanceCheck:
    ok: bool
    dist: float
    bound: float
    stated_bound: float
    green_norm: float


def distance_to_spectrum_check(spec: OperatorSpec, x: float, N0: int, E: float, eta: float,
                               psi0_norm: float = 1.0) -> DistanceCheck:
    """``dist(E, spec H_(-N0, N0)(x)) <= 2 ||W||_sup eta / ||psi_0||``.

    The open box ``(-N0, N0)`` is the block interval ``[-N0 + 1, N0 - 1]``.
    ``stated_bound = 2 ||W||_sup ||G|| eta`` is reported alongside.
    """
    box = (-N0 + 1, N0 - 1)
    evals = np.linalg.eigvalsh(dirichlet_matrix(spec, float(x), box, 0.0).entries)
    dist = float(np.abs(evals - E).min())
    w_sup = sup_norm(spec.W)
    bound = 2.0 * w_sup * eta / psi0_norm
    try:
        gnorm = float(np.linalg.norm(greens(spec, x, box, E).entries, 2))
    except SpectralHitError:
        gnorm = math.inf
    stated = 2.0 * w_sup * gnorm * eta
    return DistanceCheck(dist <= bound * (1 + 1e-9) + 1e-14, dist, bound, stated, gnorm)


# Lyapunov exponents ----------------------------------------------------------------


@dataclass
class LyapunovResult:
    exponents: np.ndarray
    steps: int
    flagged: int
    reorth: int


def transfer_blocks(spec: OperatorSpec, x: float, E: float, ns: np.ndarray, cond_max: float = 1e12):
    """``W_(n+1)^{-1} (V_n - E)``, ``W_(n+1)^{-1} W_n^T`` for each n, plus a near-singular-W flag."""
    V = spec.V.real_values(x + ns * spec.omega)
    W_here = spec.W.real_values(x + ns * spec.omega)
    W_next = spec.W.real_values(x + (ns + 1) * spec.omega)
    flag = np.linalg.cond(W_next) > cond_max
    W_safe = np.where(flag[:, None, None], np.eye(spec.l), W_next)
    A = np.linalg.solve(W_safe, V - E * np.eye(spec.l))
    B = np.linalg.solve(W_safe, W_here.swapaxes(-1, -2))
    return A, B, flag


def lyapunov_diagnostic(spec: OperatorSpec, E: float = 0.0, num_steps: int = 100_000, x: float = 0.0,
                        reorth: int = 8, chunk: int = 4096, max_flag_rate: float = 1e-3) -> LyapunovResult:
    """Top l Lyapunov exponents of the transfer cocycle ``(psi_n, psi_(n-1)) -> (psi_(n+1), psi_n)``.

    The l-frame is re-orthonormalised by QR every ``reorth`` steps; steps with
    ``cond W > 1e12`` are flagged (skipped) and the run aborts once they exceed
    ``max_flag_rate`` of the steps.
    """
    if num_steps < 10_000:
        raise DomainError("num_steps must be at least 10^4")
    l = spec.l
    Q = np.vstack([np.eye(l), np.zeros((l, l))])
    logs = np.zeros(l)
    flagged = 0
    since = 0
    for start in range(0, num_steps, chunk):
        ns = np.arange(start, min(start + chunk, num_steps))
        A, B, flag = transfer_blocks(spec, x, E, ns)
        flagged += int(flag.sum())
        if flagged > max_flag_rate * num_steps:
            raise ResourceError(f"lyapunov: {flagged} near-singular W steps exceed {max_flag_rate:.1%} of the run")
        for k in range(len(ns)):
            if flag[k]:
                continue
            top, bottom = Q[:l], Q[l:]
            Q = np.vstack([A[k] @ top - B[k] @ bottom, top])
            since += 1
            if since == reorth:
                Q, R = np.linalg.qr(Q)
                logs += np.log(np.abs(np.diag(R)))
                since = 0
    Q, R = np.linalg.qr(Q)
    logs += np.log(np.abs(np.diag(R)))
    steps = num_steps - flagged
    return LyapunovResult(np.sort(logs / steps)[::-1], steps, flagged, reorth)


# localization campaign ----------------------------------------------------------------


def well_inside(peak: int, interval, edge_margin: int = 7) -> bool:
    """``2a <= n* <= b/2``, and at least ``edge_margin`` blocks from either end."""
    a, b = interval
    return max(2 * a, a + edge_margin) <= peak <= min(b / 2, b - edge_margin)


@dataclass
class LocalizationReport:
    spec_digest: str
    N: int
    x: float
    omega: float
    lam: float
    threshold: float
    n_eigenpairs: int
    n_well_inside: int
    fraction: float
    median_rate: float
    median_ratio: float
    rates: list = field(repr=False, default_factory=list)

    def to_bound_report(self, min_fraction: float = 0.9, ratio_tol: float = 0.2) -> BoundReport:
        ok = (self.n_well_inside > 0 and self.fraction >= min_fraction
              and abs(self.median_ratio - 1.0) <= ratio_tol)
        summary = {k: v for k, v in self.__dict__.items() if k != "rates"}
        thresholds = {"rate_min": self.threshold, "fraction_min": min_fraction, "median_ratio_tol": ratio_tol}
        return BoundReport("localize", PASS if ok else FAIL, summary, thresholds, self.rates,
                           provenance={"spec": self.spec_digest})


def localization_campaign(spec: OperatorSpec, N: int, x: float, energy_window=None, edge_margin: int = 7,
                          rate_factor: float = 0.5) -> LocalizationReport:
    """Decay rates of the well-inside eigenvectors of ``H_[1,N](x)``.

    An eigenvector passes when its fit is defined and ``c >= rate_factor * |log|lambda||``.
    """
    interval = (1, N)
    loglam = abs(math.log(abs(spec.lam)))
    threshold = rate_factor * loglam
    pairs = eigensolve(spec, x, interval)
    rows = []
    for p in pairs:
        if energy_window is not None and not energy_window[0] <= p.E <= energy_window[1]:
            continue
        if not well_inside(p.peak, interval, edge_margin):
            continue
        fit = decay_rate(p.psi)
        p.fit = fit
        rows.append({"E": p.E, "peak": p.peak, "rate": fit.rate, "r2": fit.r2, "points": fit.n_points,
                     "defined": fit.defined, "passes": bool(fit.defined and fit.rate >= threshold)})
    rates = [r["rate"] for r in rows if r["defined"]]
    n_pass = sum(r["passes"] for r in rows)
    med = median(rates) if rates else math.nan
    return LocalizationReport(
        spec.digest(), N, float(x), spec.omega, spec.lam, threshold, len(pairs), len(rows),
        n_pass / len(rows) if rows else 0.0, med, med / loglam if loglam > 0 else math.nan, rows)


__all__ = [
    "DecayFit", "EigenPair", "LocalizationReport", "LyapunovResult", "Surrogate", "DistanceCheck",
    "decay_rate", "eigensolve", "poisson_rhs", "poisson_identity_residual", "surrogate_eigenvector",
    "distance_to_spectrum_check", "transfer_blocks", "lyapunov_diagnostic", "well_inside",
    "localization_campaign",
]

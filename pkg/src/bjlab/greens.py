"""Finite-volume Green's functions, the good-Green test and bad-phase statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .determinants import u_phase
from .errors import DomainError, SpectralHitError
from .minors import minor_direct
from .operator import IndexMap, OperatorSpec, dirichlet_matrix

GOOD_GREEN_CONST = 50.0
SPECTRAL_HIT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class GreenMatrix:
    """``(H_[a,b](x) - E)^{-1}`` with block access by absolute block indices."""

    interval: tuple[int, int]
    phase: float
    E: float
    l: int
    entries: np.ndarray = field(repr=False)
    condition: float = math.nan

    @property
    def N(self) -> int:
        return self.interval[1] - self.interval[0] + 1

    def block(self, n: int, n2: int) -> np.ndarray:
        a, b = self.interval
        if not (a <= n <= b and a <= n2 <= b):
            raise DomainError(f"block ({n}, {n2}) outside [{a}, {b}]")
        l = self.l
        i, j = (n - a) * l, (n2 - a) * l
        return self.entries[i:i + l, j:j + l]

    def entry(self, alpha: int, alpha_prime: int) -> float:
        """Scalar entry with 1-based indices relative to the interval."""
        return self.entries[alpha - 1, alpha_prime - 1]

    def index_map(self) -> IndexMap:
        return IndexMap(self.l, self.N)

    def block_norms(self) -> np.ndarray:
        """(N, N) array of operator 2-norms of the l x l blocks."""
        N, l = self.N, self.l
        blocks = self.entries.reshape(N, l, N, l).transpose(0, 2, 1, 3)
        if l == 1:
            return np.abs(blocks[..., 0, 0])
        return np.linalg.norm(blocks, 2, axis=(-2, -1))


def _banded(H: np.ndarray, bw: int) -> np.ndarray:
    """Diagonal-ordered storage for ``solve_banded`` with ``bw`` sub- and super-diagonals."""
    m = H.shape[0]
    ab = np.zeros((2 * bw + 1, m), dtype=H.dtype)
    for k in range(-bw, bw + 1):
        d = np.diagonal(H, k)
        if k >= 0:
            ab[bw - k, k:] = d
        else:
            ab[bw - k, :m + k] = d
    return ab


def greens(spec: OperatorSpec, x: float, interval, E: float = 0.0) -> GreenMatrix:
    """Solve ``(H_[a,b](x) - E) G = I`` as a banded system (bandwidth ``2l - 1``).

    Raises SpectralHitError when the smallest singular value is at most
    ``1e-12 * ||H - E||``.
    """
    D = dirichlet_matrix(spec, float(x), interval, E)
    H = D.entries
    sv = np.abs(np.linalg.eigvalsh(H))
    smax, smin = float(sv.max()), float(sv.min())
    if smin <= SPECTRAL_HIT_RTOL * max(smax, 1e-300):
        raise SpectralHitError(smin, f"E = {E} is a numerical eigenvalue of H on {D.interval} at x = {x} (smallest singular value {smin:.3e})")
    bw = min(2 * spec.l - 1, H.shape[0] - 1)
    G = solve_banded((bw, bw), _banded(H, bw), np.eye(H.shape[0]), check_finite=False)
    return GreenMatrix(D.interval, float(x), float(E), spec.l, G, smax / smin)


def green_residual(spec: OperatorSpec, G: GreenMatrix) -> float:
    H = dirichlet_matrix(spec, G.phase, G.interval, G.E).entries
    return float(np.abs(G.entries @ H - np.eye(H.shape[0])).max())


def cramer_entry(H, alpha: int, alpha_prime: int) -> float:
    """``G_(alpha, alpha')`` via the adjugate: ``(-1)^(alpha+alpha') minor(alpha', alpha) / det``."""
    H = np.asarray(H)
    sign = -1.0 if (alpha + alpha_prime) % 2 else 1.0
    return sign * minor_direct(H, alpha_prime, alpha) / np.linalg.det(H)


@dataclass(frozen=True)
class GoodGreen:
    good: bool
    worst_cell: tuple[int, int]
    worst_ratio: float
    worst_log_ratio: float

    def __bool__(self):
        return self.good


def good_green_log_ratios(G: GreenMatrix, lam: float, const: float = GOOD_GREEN_CONST) -> np.ndarray:
    """``log ||G_(n,n')|| + (|n - n'| - N / const) log|lambda|``; good means every entry is <= 0."""
    loglam = math.log(abs(lam))
    N = G.N
    dist = np.abs(np.subtract.outer(np.arange(N), np.arange(N)))
    with np.errstate(divide="ignore"):
        return np.log(G.block_norms()) + (dist - N / const) * loglam


def is_good_green(G: GreenMatrix, lam: float, const: float = GOOD_GREEN_CONST) -> GoodGreen:
    """``||G_(n,n')|| <= exp(-(|n - n'| - |interval| / const) log|lambda|)`` for every block pair."""
    if abs(lam) <= 1:
        raise DomainError("the good-Green test needs |lambda| > 1")
    r = good_green_log_ratios(G, lam, const)
    i, j = np.unravel_index(int(np.argmax(r)), r.shape)
    worst = float(r[i, j])
    a = G.interval[0]
    ratio = math.exp(worst) if worst < 700 else math.inf
    return GoodGreen(worst <= 0.0, (int(i) + a, int(j) + a), ratio, worst)


def good_green_safe(spec: OperatorSpec, x: float, interval, E: float, const: float = GOOD_GREEN_CONST) -> GoodGreen:
    """is_good_green that treats a spectral hit as not good."""
    try:
        return is_good_green(greens(spec, x, interval, E), spec.lam, const)
    except SpectralHitError:
        a = int(interval[0])
        return GoodGreen(False, (a, a), math.inf, math.inf)


# bad phases -----------------------------------------------------------------------


def default_delta(l: int) -> float:
    return 1.0 / (100.0 * l)


@dataclass
class BadSetEstimate:
    N: int
    M: int
    E: float
    delta: float
    phase_grid: int
    fraction: float
    threshold: float
    averages: np.ndarray = field(repr=False)
    ladder: dict = field(default_factory=dict)
    monotone: bool = True


def orbit_u_table(spec: OperatorSpec, xs, N: int, M: int, E: float, pmap=map) -> np.ndarray:
    """``u_N(x_i + j omega)`` for j < M as an array of shape (len(xs), M)."""
    xs = np.asarray(xs, dtype=float)
    pts = (xs[:, None] + np.arange(M)[None, :] * spec.omega) % 1.0
    return u_phase(spec, pts.ravel(), N, E, pmap=pmap).reshape(len(xs), M)


def bad_set_estimate(spec: OperatorSpec, N: int, M: int, E: float = 0.0, phase_grid: int = 4096,
                     delta: float | None = None, ladder=None, pmap=map) -> BadSetEstimate:
    """Fraction of grid phases whose M-step orbit average of u_N is at most ``(1 - delta) log|lambda|``.

    ``ladder`` lists extra values of M (a doubling ladder ending at M by
    default); the fraction is reported for each, and a rise along the ladder
    clears ``monotone`` without failing anything; rises of at most one grid
    cell are tolerated.  Sentinel samples count as bad.
    """
    if abs(spec.lam) <= 1:
        raise DomainError("the bad-set threshold needs |lambda| > 1")
    delta = default_delta(spec.l) if delta is None else float(delta)
    if ladder is None:
        ladder = sorted({max(1, M >> k) for k in range(4)})
    ladder = sorted(set(int(m) for m in ladder) | {int(M)})
    xs = np.arange(phase_grid) / phase_grid
    table = orbit_u_table(spec, xs, N, max(ladder), E, pmap)
    threshold = (1.0 - delta) * math.log(abs(spec.lam))
    fractions = {}
    averages = None
    for m in ladder:
        avg = table[:, :m].mean(axis=1)  # a -inf sample makes the average -inf, hence bad
        fractions[m] = float(np.mean(avg <= threshold))
        if m == M:
            averages = avg
    vals = [fractions[m] for m in ladder]
    monotone = all(b <= a + 1.0 / phase_grid for a, b in zip(vals, vals[1:]))
    return BadSetEstimate(N, M, float(E), delta, phase_grid, fractions[M], threshold, averages,
                          fractions, monotone)


@dataclass
class WindowSearch:
    j: int | None
    trace: list


def good_window_search(spec: OperatorSpec, x: float, N: int, M: int, E: float = 0.0,
                       delta: float | None = None, const: float = GOOD_GREEN_CONST) -> WindowSearch:
    """Smallest ``0 <= j < M`` with ``G_N(x + j omega)`` good, with a per-j trace."""
    delta = default_delta(spec.l) if delta is None else float(delta)
    threshold = (1.0 - delta) * math.log(abs(spec.lam))
    trace = []
    for j in range(M):
        xj = (x + j * spec.omega) % 1.0
        u = float(u_phase(spec, [xj], N, E)[0])
        g = good_green_safe(spec, xj, (1, N), E, const)
        trace.append({"j": j, "x": xj, "u": u, "above_threshold": u > threshold,
                      "good": g.good, "worst_log_ratio": g.worst_log_ratio, "worst_cell": g.worst_cell})
        if g.good:
            return WindowSearch(j, trace)
    return WindowSearch(None, trace)


def window_campaign(spec: OperatorSpec, N: int, M: int, E: float = 0.0, phases: int = 512,
                    const: float = GOOD_GREEN_CONST, pmap=map) -> dict:
    """Fraction of equispaced phases for which good_window_search finds a window."""
    xs = (np.arange(phases) + 0.5) / phases
    found = list(pmap(lambda x: good_window_search(spec, x, N, M, E, const=const).j, xs))
    hits = sum(j is not None for j in found)
    return {"N": N, "M": M, "E": E, "phases": phases, "found": hits, "fraction": hits / phases}


def orbit_good_fraction(spec: OperatorSpec, x: float, N: int, E: float = 0.0, horizon: int = 1000,
                        const: float = GOOD_GREEN_CONST, pmap=map) -> float:
    """Fraction of ``0 <= n < horizon`` with ``G_N(x + n omega)`` good."""
    if not 1 <= horizon <= 10**6:
        raise DomainError("horizon must be in [1, 10^6]")
    xs = (x + np.arange(horizon) * spec.omega) % 1.0
    good = list(pmap(lambda xn: good_green_safe(spec, xn, (1, N), E, const).good, xs))
    return sum(good) / horizon


def diophantine_constant(omega: float, K: int = 10**6) -> tuple[float, int]:
    """``min_{1 <= k <= K} k^2 ||k omega||`` and the minimising k (``||.||`` is the distance to Z)."""
    k = np.arange(1, K + 1, dtype=float)
    frac = np.mod(k * omega, 1.0)
    dist = np.minimum(frac, 1.0 - frac)
    vals = k * k * dist
    i = int(np.argmin(vals))
    return float(vals[i]), i + 1


__all__ = [
    "GreenMatrix", "BadSetEstimate", "GoodGreen", "WindowSearch", "greens", "green_residual", "cramer_entry",
    "is_good_green", "good_green_log_ratios", "good_green_safe", "bad_set_estimate", "orbit_u_table",
    "good_window_search", "window_campaign", "orbit_good_fraction", "diophantine_constant", "default_delta",
]

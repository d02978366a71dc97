"""Minors of Dirichlet matrices: direct evaluation, path-system expansion, upper bounds.

The (alpha, alpha')-minor of ``g`` is ``det g`` with row alpha and column
alpha' removed (1-based).  For alpha != alpha' it expands as a signed sum over
paths ``alpha' = gamma_1 -> ... -> gamma_s = alpha`` of distinct indices:

    minor = (-1)^(alpha+alpha') sum_paths (-1)^(s+1) cost(path) det g[~path, ~path]

with ``cost = g[gamma_1, gamma_2] ... g[gamma_{s-1}, gamma_s]``.  The expansion
is exponential in the matrix size and serves as an oracle for small matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .errors import DomainError, ResourceError
from .operator import IndexMap, OperatorSpec, dirichlet_stack
from .reports import FAIL, PASS, BoundReport

MAX_FRONTIER = 10**7


# exact determinants -----------------------------------------------------------


def is_exact(g) -> bool:
    g = np.asarray(g)
    if g.dtype.kind in "iu":
        return True
    if g.dtype == object:
        return all(isinstance(v, (int, Fraction)) for v in g.flat)
    return False


def det_exact(rows) -> int | Fraction:
    """Determinant of a square matrix of ints (Bareiss) or Fractions (Gaussian elimination)."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    if all(isinstance(v, int) for r in a for v in r):
        sign, prev = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                for i in range(k + 1, n):
                    if a[i][k] != 0:
                        a[k], a[i] = a[i], a[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]
    a = [[Fraction(v) for v in r] for r in a]
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return det


def _as_exact_rows(g):
    return [[int(v) if isinstance(v, (int, np.integer)) else v for v in row] for row in np.asarray(g, dtype=object)]


def minor_direct(g, alpha: int, alpha_prime: int, exact: bool | None = None):
    """Determinant of ``g`` without row ``alpha`` and column ``alpha_prime`` (1-based).

    Integer and Fraction matrices are handled in exact arithmetic; floating
    matrices use an LU factorisation with partial pivoting.
    """
    g = np.asarray(g)
    m = g.shape[0]
    if g.ndim != 2 or g.shape[1] != m:
        raise DomainError("minor of a non-square matrix")
    if not (1 <= alpha <= m and 1 <= alpha_prime <= m):
        raise DomainError(f"indices ({alpha}, {alpha_prime}) out of range for m={m}")
    if exact is None:
        exact = is_exact(g)
    rows = [i for i in range(m) if i != alpha - 1]
    cols = [j for j in range(m) if j != alpha_prime - 1]
    if exact:
        rows_exact = _as_exact_rows(g)
        return det_exact([[rows_exact[i][j] for j in cols] for i in rows])
    if m == 1:
        return 1.0 if not np.iscomplexobj(g) else 1.0 + 0j
    return np.linalg.det(g[np.ix_(rows, cols)])


def log_abs_minors(g: np.ndarray) -> np.ndarray:
    """``log |minor(alpha, alpha')|`` for all pairs as an (m, m) array (``-inf`` for zero minors)."""
    m = g.shape[0]
    out = np.empty((m, m))
    if m == 1:
        out[0, 0] = 0.0
        return out
    keep = np.array([[j for j in range(m) if j != i] for i in range(m)])
    for a in range(m):
        sub = g[keep[a]][:, keep]  # (m-1, m, m-1) -> column deletions along axis 1
        sub = np.moveaxis(sub, 1, 0)
        sign, logabs = np.linalg.slogdet(sub)
        logabs = np.where(sign == 0, -np.inf, logabs)
        out[a] = logabs
    return out


# path systems -------------------------------------------------------------------


@dataclass(frozen=True)
class PathSystem:
    """A path ``alpha' = vertices[0] -> ... -> vertices[-1] = alpha`` of distinct 1-based indices."""

    vertices: tuple

    @property
    def length(self) -> int:
        return len(self.vertices)

    def __len__(self):
        return len(self.vertices)

    def cost(self, g):
        g = np.asarray(g) if not isinstance(g, list) else g
        v = self.vertices
        out = 1
        for i in range(len(v) - 1):
            out = out * g[v[i] - 1][v[i + 1] - 1]
        return out

    def bounded_steps(self, l: int) -> int:
        """Number of steps between neighbouring blocks."""
        n = [-(-g // l) for g in self.vertices]
        return sum(abs(n[i + 1] - n[i]) == 1 for i in range(len(n) - 1))


def tridiagonal_predicate(l: int) -> Callable[[int, int], bool]:
    """Allow a step gamma -> gamma' only between equal or neighbouring blocks."""
    def allowed(gamma: int, gamma2: int) -> bool:
        return abs(-(-gamma // l) - -(-gamma2 // l)) <= 1
    return allowed


def path_count_bound(l: int, N: int) -> int:
    """``(4 l)^(N l)``, a bound on the number of paths within the block tridiagonal band."""
    return (4 * l) ** (N * l)


def _walk(m, start, end, allowed, max_nodes):
    counter = [0]
    path = [start]
    used = [False] * (m + 1)
    used[start] = True

    def rec(v):
        counter[0] += 1
        if counter[0] > max_nodes:
            raise ResourceError(f"path enumeration exceeded {max_nodes} search nodes")
        for w in range(1, m + 1):
            if used[w] or (allowed is not None and not allowed(v, w)):
                continue
            if w == end:
                yield tuple(path) + (end,)
                continue
            used[w] = True
            path.append(w)
            yield from rec(w)
            path.pop()
            used[w] = False

    yield from rec(start)


def enumerate_paths(m: int, alpha_prime: int, alpha: int,
                    sparsity: Callable[[int, int], bool] | None = None,
                    max_nodes: int = MAX_FRONTIER) -> Iterator[PathSystem]:
    """Every path of distinct indices from ``alpha_prime`` to ``alpha`` whose steps satisfy ``sparsity``.

    Raises ``ResourceError`` once more than ``max_nodes`` search nodes have
    been expanded; the stream is never silently truncated.
    """
    if alpha == alpha_prime:
        raise DomainError("paths need alpha != alpha'")
    if not (1 <= alpha <= m and 1 <= alpha_prime <= m):
        raise DomainError(f"indices ({alpha}, {alpha_prime}) out of range for m={m}")
    for verts in _walk(m, alpha_prime, alpha, sparsity, max_nodes):
        yield PathSystem(verts)


def minor_via_paths(g, alpha: int, alpha_prime: int,
                    sparsity: Callable[[int, int], bool] | None = None,
                    exact: bool | None = None, max_nodes: int = MAX_FRONTIER):
    """The (alpha, alpha')-minor as a signed sum over paths from alpha' to alpha."""
    g = np.asarray(g)
    m = g.shape[0]
    if alpha == alpha_prime:
        return minor_direct(g, alpha, alpha_prime, exact=exact)
    if exact is None:
        exact = is_exact(g)
    entries = _as_exact_rows(g) if exact else g.tolist()
    full = (1 << m) - 1
    cache: dict[int, object] = {}

    def complement_det(mask):
        if mask not in cache:
            rest = [i for i in range(m) if not mask >> i & 1]
            if exact:
                cache[mask] = det_exact([[entries[i][j] for j in rest] for i in rest])
            elif not rest:
                cache[mask] = 1.0
            else:
                cache[mask] = np.linalg.det(g[np.ix_(rest, rest)])
        return cache[mask]

    total = 0
    for verts in _walk(m, alpha_prime, alpha, sparsity, max_nodes):
        cost = 1
        for i in range(len(verts) - 1):
            cost = cost * entries[verts[i] - 1][verts[i + 1] - 1]
            if cost == 0:
                break
        if cost == 0:
            continue
        mask = 0
        for v in verts:
            mask |= 1 << (v - 1)
        term = cost * complement_det(mask & full)
        total = total + (term if len(verts) % 2 == 1 else -term)
    return total if (alpha + alpha_prime) % 2 == 0 else -total


# upper bound on minors of Dirichlet matrices --------------------------------------


def minor_bound_cells(spec: OperatorSpec, N: int, E: float, xs, pmap=map) -> tuple[np.ndarray, np.ndarray]:
    """Smallest admissible constant for every (phase, alpha, alpha') cell.

    Returns ``C`` of shape (len(xs), N l, N l) with

        C = log|minor| / (N l) - (1 - |n(alpha) - n(alpha')| / (N l)) log|lambda|

    and ``-inf`` where the minor vanishes, together with the block-distance table.
    """
    l = spec.l
    m = N * l
    nb = IndexMap(l, N).block_of()
    dist = np.abs(nb[:, None] - nb[None, :])
    loglam = math.log(abs(spec.lam))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))

    def one(x):
        g = dirichlet_stack(spec, [x], (1, N), E)[0]
        return log_abs_minors(g) / m - (1 - dist / m) * loglam

    return np.stack(list(pmap(one, xs))), dist


def verify_minor_upper_bound(spec: OperatorSpec, N: int, E: float = 0.0, phases=64,
                             check_doubling: bool = True, stability: float = 0.10,
                             pmap=map) -> BoundReport:
    """Empirical constant in ``log|minor| / (N l) <= (1 - |n(a) - n(a')| / (N l)) log|lambda| + C``.

    ``phases`` is a count (equispaced grid) or an explicit array.  With
    ``check_doubling`` the campaign is repeated at 2N and the verdict requires
    ``|C(2N) - C(N)| <= stability * max(|C(N)|, log|lambda|)``.
    """
    if abs(spec.lam) < 1:
        raise DomainError("the minor upper bound is stated for |lambda| >= 1")
    xs = np.arange(phases) / phases if np.isscalar(phases) else np.asarray(phases, dtype=float)
    loglam = math.log(abs(spec.lam))
    summary: dict = {"lambda": spec.lam, "N": N, "l": spec.l, "E": E, "phases": len(xs)}
    cells = []
    runs = [N, 2 * N] if check_doubling else [N]
    maxima = {}
    for n_run in runs:
        C, dist = minor_bound_cells(spec, n_run, E, xs, pmap)
        finite = np.isfinite(C)
        maxima[n_run] = float(C[finite].max()) if finite.any() else math.inf
        summary[f"flagged_N{n_run}"] = int((~finite).sum())
        if n_run == N:
            k, a, b = np.unravel_index(np.argmax(np.where(finite, C, -np.inf)), C.shape)
            summary["argmax"] = {"x": float(xs[k]), "alpha": int(a + 1), "alpha_prime": int(b + 1)}
            summary["median_C"] = float(np.median(C[finite])) if finite.any() else math.nan
            for k, x in enumerate(xs):
                for a in range(C.shape[1]):
                    for b in range(C.shape[2]):
                        cells.append({"x": float(x), "alpha": a + 1, "alpha_prime": b + 1,
                                      "block_distance": int(dist[a, b]), "C": float(C[k, a, b])})
    summary["max_C"] = maxima[N]
    ok = math.isfinite(maxima[N])
    thresholds = {"finite_max_C": True}
    if check_doubling:
        summary["max_C_2N"] = maxima[2 * N]
        change = abs(maxima[2 * N] - maxima[N])
        allowed = stability * max(abs(maxima[N]), loglam)
        summary["doubling_change"] = change
        thresholds["doubling_change_max"] = allowed
        ok = ok and math.isfinite(change) and change <= allowed
    return BoundReport("verify-upper", PASS if ok else FAIL, summary, thresholds, cells,
                       provenance={"spec": spec.digest()})


# oracle campaign -----------------------------------------------------------------------


def minor_oracle_campaign(samples: int = 1000, max_m: int = 7, seed: int = 0, entry_range: int = 5,
                          rtol: float = 1e-9) -> BoundReport:
    """Path expansion against direct minors on seeded random integer matrices, every (alpha, alpha') pair.

    Exact arithmetic must agree exactly; the floating-point expansion must agree
    to ``rtol * max(1, |minor|)``.
    """
    rng = np.random.default_rng(seed)
    exact_mismatch = 0
    float_mismatch = 0
    worst_rel = 0.0
    pairs = 0
    cells = []
    for s in range(samples):
        m = int(rng.integers(1, max_m + 1))
        g = rng.integers(-entry_range, entry_range + 1, size=(m, m))
        gf = g.astype(float)
        bad = 0
        for a in range(1, m + 1):
            for b in range(1, m + 1):
                ref = minor_direct(g, a, b, exact=True)
                exact_ok = minor_via_paths(g, a, b, exact=True) == ref
                rel = abs(minor_via_paths(gf, a, b, exact=False) - ref) / max(1, abs(ref))
                worst_rel = max(worst_rel, float(rel))
                exact_mismatch += not exact_ok
                float_mismatch += bool(rel > rtol)
                bad += bool((not exact_ok) or rel > rtol)
                pairs += 1
        cells.append({"sample": s, "m": m, "mismatches": bad})
    summary = {"samples": samples, "max_m": max_m, "pairs": pairs, "exact_mismatches": exact_mismatch,
               "float_mismatches": float_mismatch, "max_float_rel_error": worst_rel}
    ok = exact_mismatch == 0 and float_mismatch == 0
    return BoundReport("minor-oracle", PASS if ok else FAIL, summary,
                       {"exact_mismatches_max": 0, "float_rtol": rtol}, cells, provenance={"seed": seed})

"""Dirichlet determinants, the subharmonic observable u_N and the lower-bound machinery.

    u_N(z) = log |det[H_N(z) - E]| / (N l)

is subharmonic on the annulus.  The checks here are numerical certificates of
the inequalities used to bound its phase average from below: Hadamard's upper
bound, ``|det(I + g)| >= (1 - ||g||)^m``, the circle scan for ``det[F(z) - t]``,
the factorisation ``H_N - E = lambda D_N + B_N`` and log-convexity of circle
means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoGoodCircleError
from .operator import OperatorSpec, dirichlet_stack
from .reports import FAIL, PASS, WARN, BoundReport, combine_verdicts
from .torus import TrigMatrixPoly, check_in_annulus, sup_norm

SENTINEL_DET = 1e-300
LOG_SENTINEL = math.log(SENTINEL_DET)


def log_abs_det(stack: np.ndarray) -> np.ndarray:
    """``log|det|`` over the leading axis, with ``-inf`` where ``|det| < 1e-300``."""
    sign, logabs = np.linalg.slogdet(stack)
    return np.where((sign == 0) | (logabs < LOG_SENTINEL), -np.inf, logabs)


def u_phase(spec: OperatorSpec, xs, N: int, E: float = 0.0, radius=1.0, start: int = 1,
            chunk: int = 512, pmap=map) -> np.ndarray:
    """``u_N`` at the points ``radius * e(x)`` for an array of phases; ``-inf`` marks a numerically zero determinant.

    Chunks go through ``pmap`` (an order-preserving map), so the result does
    not depend on how many workers evaluate them.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    radius = np.broadcast_to(np.asarray(radius, dtype=float), xs.shape)
    chunk = max(1, min(chunk, 4_000_000 // (N * spec.l) ** 2 or 1))
    starts = range(0, len(xs), chunk)

    def one(i):
        H = dirichlet_stack(spec, xs[i:i + chunk], (start, start + N - 1), E, radius[i:i + chunk])
        return log_abs_det(H) / (N * spec.l)

    parts = list(pmap(one, starts))
    return np.concatenate(parts) if parts else np.empty(0)


def u_value(spec: OperatorSpec, z, N: int, E: float = 0.0) -> float:
    """``u_N(z)`` at one complex point of the annulus."""
    z = complex(z)
    check_in_annulus(z, spec.annulus_r)
    return float(u_phase(spec, [math.atan2(z.imag, z.real) / (2 * math.pi)], N, E, abs(z))[0])


@dataclass
class SubharmonicSamples:
    """Values of u_N at ``size`` equispaced points ``radius * e((j + 1/2) / size)``."""

    radius: float
    N: int
    E: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = len(self.samples)
        if n < 256 or n & (n - 1):
            raise DomainError("sample count must be a power of two >= 256")

    @property
    def sentinels(self) -> int:
        return int(np.isneginf(self.samples).sum())

    def mean(self) -> float:
        """Circle average over the non-sentinel samples."""
        finite = np.isfinite(self.samples)
        return float(self.samples[finite].mean()) if finite.any() else -math.inf


def circle_phases(size: int) -> np.ndarray:
    return (np.arange(size) + 0.5) / size


def circle_samples(spec: OperatorSpec, radius: float, N: int, E: float = 0.0, size: int = 1024) -> SubharmonicSamples:
    if radius != 1.0:
        check_in_annulus(radius, spec.annulus_r)
    return SubharmonicSamples(radius, N, E, u_phase(spec, circle_phases(size), N, E, radius))


# Hadamard upper bound ------------------------------------------------------------


def hadamard_bound(stack: np.ndarray) -> np.ndarray:
    """``sum_rows log ||row||_2`` for each matrix of the stack."""
    return np.log(np.linalg.norm(stack, axis=-1)).sum(axis=-1)


def _hadamard_run(spec, N, E, radius, grid):
    xs = circle_phases(grid)
    H = dirichlet_stack(spec, xs, (1, N), E, radius)
    m = N * spec.l
    u = log_abs_det(H) / m
    bound = hadamard_bound(H) / m
    violation = float(np.max(np.where(np.isfinite(u), u - bound, -np.inf)))
    return u, bound, violation


def hadamard_upper_check(spec: OperatorSpec, N: int, E: float = 0.0, radius: float = 1.0,
                         grid: int = 1024, check_doubling: bool = True,
                         stability: float = 0.10) -> BoundReport:
    """``max_z u_N(z) - log|lambda|`` on a circle, with Hadamard's inequality checked sample by sample."""
    if radius != 1.0:
        check_in_annulus(radius, spec.annulus_r)
    loglam = math.log(abs(spec.lam))
    summary = {"lambda": spec.lam, "N": N, "E": E, "radius": radius, "grid": grid}
    thresholds = {"hadamard_slack_min": -1e-9}
    cells = []
    gaps = {}
    worst_violation = -math.inf
    for n_run in ([N, 2 * N] if check_doubling else [N]):
        u, bound, violation = _hadamard_run(spec, n_run, E, radius, grid)
        worst_violation = max(worst_violation, violation)
        gaps[n_run] = float(np.max(u) - loglam)
        summary[f"max_gap_N{n_run}"] = gaps[n_run]
        summary[f"max_hadamard_bound_gap_N{n_run}"] = float(bound.max() - loglam)
        if n_run == N:
            cells = [{"x": float(x), "u": float(a), "hadamard": float(b)}
                     for x, a, b in zip(circle_phases(grid), u, bound)]
    summary["max_gap"] = gaps[N]
    summary["max_violation"] = worst_violation
    ok = worst_violation <= 1e-9 and math.isfinite(gaps[N])
    if check_doubling:
        change = abs(gaps[2 * N] - gaps[N])
        thresholds["doubling_change_max"] = stability * max(abs(gaps[N]), loglam)
        summary["doubling_change"] = change
        ok = ok and change <= thresholds["doubling_change_max"]
    return BoundReport("hadamard-check", PASS if ok else FAIL, summary, thresholds, cells,
                       provenance={"spec": spec.digest()})


# |det(I + g)| >= (1 - ||g||)^m ------------------------------------------------------


def det_norm_inequality_check(g, rtol: float = 1e-12) -> bool:
    """``|det(I + g)| >= (1 - ||g||)^m`` for a contraction ``g`` (operator 2-norm < 1)."""
    g = np.asarray(g)
    m = g.shape[0]
    norm = np.linalg.norm(g, 2) if m else 0.0
    if norm >= 1:
        raise DomainError(f"||g|| = {norm:.6g} is not < 1")
    if m == 0:
        return True
    _, logdet = np.linalg.slogdet(np.eye(m) + g)
    return bool(logdet >= m * math.log1p(-norm) - rtol * max(1.0, abs(logdet)))


def random_contraction(rng: np.random.Generator, m: int, complex_entries: bool = False) -> np.ndarray:
    g = rng.standard_normal((m, m))
    if complex_entries:
        g = g + 1j * rng.standard_normal((m, m))
    target = rng.uniform(0.0, 1.0)
    if rng.uniform() < 0.1:
        target = 1.0 - 10.0 ** rng.uniform(-8, -1)
    norm = np.linalg.norm(g, 2)
    return g * (target / norm) if norm else g


def det_norm_campaign(samples: int = 10_000, max_m: int = 32, seed: int = 0) -> BoundReport:
    """Random contractions of sizes 1..max_m; records the slack ``log|det(I+g)| - m log(1 - ||g||)``."""
    rng = np.random.default_rng(seed)
    violations = 0
    min_slack = math.inf
    cells = []
    for i in range(samples):
        m = int(rng.integers(1, max_m + 1))
        g = random_contraction(rng, m, complex_entries=bool(i % 4 == 3))
        norm = np.linalg.norm(g, 2)
        _, logdet = np.linalg.slogdet(np.eye(m) + g)
        slack = float(logdet - m * math.log1p(-norm))
        min_slack = min(min_slack, slack)
        holds = det_norm_inequality_check(g)
        violations += not holds
        cells.append({"m": m, "norm": float(norm), "slack": slack, "holds": holds})
    summary = {"samples": samples, "max_m": max_m, "violations": violations, "min_log_slack": min_slack}
    return BoundReport("det-norm", PASS if violations == 0 else FAIL, summary,
                       {"violations_max": 0}, cells, provenance={"seed": seed})


# circle scan for det[F(z) - t] -----------------------------------------------------


@dataclass
class Epsilon0Scan:
    y0: float
    eps0: float
    radii: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)


def _circle_min_det(F: TrigMatrixPoly, radius: float, xs: np.ndarray, ts: np.ndarray) -> float:
    """``min |det[F(z) - t]|`` over circle samples and a t-grid refined by the real parts of eigenvalues."""
    mu = np.linalg.eigvals(F.at_phase(xs, radius))  # (grid, l)
    grid_vals = np.abs(np.prod(mu[:, None, :] - ts[None, :, None], axis=-1)).min()
    t_local = np.clip(mu.real, ts[0], ts[-1])  # per-z candidates at the real parts
    local_vals = np.abs(np.prod(mu[:, None, :] - t_local[:, :, None], axis=-1)).min()
    return float(min(grid_vals, local_vals))


def epsilon0_scan(F: TrigMatrixPoly, delta: float, t_range, circle_grid: int = 256,
                  n_radii: int = 64, t_resolution: float = 1e-3) -> Epsilon0Scan:
    """Find a circle ``|z| = 1 + y0`` with ``y0`` in ``[delta/2, 2 delta]`` on which ``|det[F(z) - t]| >= eps0^l``.

    Every candidate radius is scored by ``min_{z, t} |det[F(z) - t]|^(1/l)``
    over the circle samples and the t-interval; the best radius wins.
    """
    t0, t1 = (float(v) for v in t_range)
    if t1 < t0:
        raise DomainError("empty t-range")
    span = t1 - t0
    n_t = 1 if span == 0 else int(math.ceil(1.0 / t_resolution)) + 1
    ts = np.linspace(t0, t1, n_t)
    xs = np.arange(circle_grid) / circle_grid
    radii = np.linspace(delta / 2, 2 * delta, n_radii)
    values = np.array([_circle_min_det(F, 1.0 + y, xs, ts) for y in radii]) ** (1.0 / F.l)
    best = int(np.argmax(values))
    if values[best] < 1e-12:
        raise NoGoodCircleError(
            f"no circle with 1+{delta / 2:g} <= |z| <= 1+{2 * delta:g} keeps det[F(z)-t] away from 0 "
            f"for t in [{t0:g}, {t1:g}]; shrink the t-range or check that F has no constant eigenvalues")
    return Epsilon0Scan(float(radii[best]), float(values[best]), radii, values)


# H_N - E = lambda D_N + B_N ---------------------------------------------------------------


def split_dn_bn(spec: OperatorSpec, x: float, radius: float, N: int, E: float = 0.0):
    """``D_N = diag(F_j - E/lambda)`` and the block tridiagonal remainder ``B_N`` at ``radius * e(x)``."""
    l = spec.l
    ns = np.arange(1, N + 1)
    Fb = spec.F.at_phase(x + ns * spec.omega, radius * np.ones(N))
    D = np.zeros((N * l, N * l), dtype=complex)
    for j in range(N):
        D[j * l:(j + 1) * l, j * l:(j + 1) * l] = Fb[j] - (E / spec.lam) * np.eye(l)
    H = dirichlet_stack(spec, [x], (1, N), E, radius, complex_out=True)[0]
    B = H - spec.lam * D
    return D, B


def factorization_check(spec: OperatorSpec, x: float, radius: float, N: int, E: float = 0.0) -> dict:
    """Compare ``log|det(H_N - E)|`` with ``N l log|lambda| + log|det D_N| + log|det(I + D_N^{-1} B_N / lambda)|``."""
    D, B = split_dn_bn(spec, x, radius, N, E)
    m = N * spec.l
    H_direct = dirichlet_stack(spec, [x], (1, N), E, radius, complex_out=True)[0]
    _, lhs = np.linalg.slogdet(H_direct)
    _, log_d = np.linalg.slogdet(D)
    g = np.linalg.solve(D, B) / spec.lam
    _, log_rest = np.linalg.slogdet(np.eye(m) + g)
    rhs = m * math.log(abs(spec.lam)) + log_d + log_rest
    return {
        "log_det": float(lhs), "log_rhs": float(rhs), "abs_error": float(abs(rhs - lhs)),
        "log_det_D": float(log_d), "g_norm": float(np.linalg.norm(g, 2)),
        "split_residual": float(np.abs(spec.lam * D + B - H_direct).max()),
    }


def dn_det_bound_check(spec: OperatorSpec, N: int, y0: float, eps0: float, E: float = 0.0,
                       grid: int = 256) -> dict:
    """On ``|z| = 1 + y0``: ``min_z log|det D_N(z)| - N l log eps0`` (non-negative when the bound holds)."""
    xs = circle_phases(grid)
    ns = np.arange(1, N + 1)
    Fb = spec.F.at_phase(xs[:, None] + ns * spec.omega, (1.0 + y0) * np.ones((grid, N)))
    blocks = Fb - (E / spec.lam) * np.eye(spec.l)
    _, logs = np.linalg.slogdet(blocks)
    log_det = logs.sum(axis=1)
    slack = float(log_det.min() - N * spec.l * math.log(eps0))
    return {"min_log_det_D": float(log_det.min()), "slack": slack, "holds": slack >= -1e-9}


@dataclass
class Lambda0Estimate:
    lambda0: float
    y0: float
    eps0: float
    dinv_norm: float
    b_norm: float


def lambda0_estimate(spec: OperatorSpec, energies=(0.0,), delta: float | None = None,
                     circle_grid: int = 256) -> Lambda0Estimate:
    """Smallest ``|lambda|`` with ``||D_N^{-1} B_N|| / |lambda| <= 1/2`` on the scanned circle.

    Uses ``||D^{-1}|| <= max_{z, t} ||(F(z) - t)^{-1}||`` with ``t = E / lambda``
    over the given energies and ``||B_N|| <= sup ||R|| + 2 sup ||W||``, both
    independent of N.
    """
    delta = 0.05 * spec.annulus_r if delta is None else delta
    ts = np.array(sorted(float(E) / spec.lam for E in energies))
    scan = epsilon0_scan(spec.F, delta, (ts[0], ts[-1]), circle_grid)
    radius = 1.0 + scan.y0
    xs = np.arange(circle_grid) / circle_grid
    Fz = spec.F.at_phase(xs, radius)
    t_grid = np.unique(np.concatenate([ts, np.linspace(ts[0], ts[-1], 33)]))
    eye = np.eye(spec.l)
    smin = np.linalg.svd(Fz[:, None] - t_grid[None, :, None, None] * eye, compute_uv=False)[..., -1]
    dinv = float(1.0 / smin.min())
    b_norm = sup_norm(spec.R, radius, circle_grid) + 2 * sup_norm(spec.W, radius, circle_grid)
    return Lambda0Estimate(2.0 * dinv * b_norm, scan.y0, scan.eps0, dinv, b_norm)


# phase average lower bound ---------------------------------------------------------


def phase_average(spec: OperatorSpec, N: int, E: float = 0.0, quadrature_size: int = 8192,
                  pmap=map) -> tuple[float, int]:
    """Equispaced-quadrature average of u_N over the torus, excluding sentinel samples."""
    u = u_phase(spec, circle_phases(quadrature_size), N, E, pmap=pmap)
    finite = np.isfinite(u)
    return (float(u[finite].mean()) if finite.any() else -math.inf), int((~finite).sum())


def verify_lower_bound(spec: OperatorSpec, N: int, energies=(0.0,), quadrature_size: int = 8192,
                       check_doubling: bool = True, lambda_factor: float = 10.0,
                       stability: float = 0.10, sweep_tol: float = 0.2, pmap=map) -> BoundReport:
    """Deficit ``log|lambda| - int u_N dx`` over an energy grid.

    PASS requires finite deficits, ``|deficit(2N) - deficit(N)| <= stability * log|lambda|``
    and ``|deficit(lambda_factor * lambda) - deficit(lambda)| <= sweep_tol``.
    """
    if quadrature_size < 512:
        raise DomainError("quadrature_size must be at least 512")
    energies = [float(E) for E in np.atleast_1d(energies)]
    loglam = math.log(abs(spec.lam))
    cells = []
    notes = []
    runs = [(spec, N)]
    if check_doubling:
        runs.append((spec, 2 * N))
    if lambda_factor:
        runs.append((spec.with_lambda(spec.lam * lambda_factor), N))
    deficits: dict = {}
    total_sentinels = 0
    for run_spec, n_run in runs:
        for E in energies:
            avg, sentinels = phase_average(run_spec, n_run, E, quadrature_size, pmap)
            deficit = math.log(abs(run_spec.lam)) - avg
            deficits[(run_spec.lam, n_run, E)] = deficit
            total_sentinels += sentinels
            cells.append({"lambda": run_spec.lam, "N": n_run, "E": E, "average": avg,
                          "deficit": deficit, "sentinels": sentinels})
            if sentinels > 0.01 * quadrature_size:
                notes.append(f"{sentinels} sentinel samples at lambda={run_spec.lam}, N={n_run}, E={E}")

    base = [deficits[(spec.lam, N, E)] for E in energies]
    summary = {"lambda": spec.lam, "N": N, "energies": energies, "quadrature_size": quadrature_size,
               "max_deficit": max(base), "sentinels": total_sentinels}
    thresholds: dict = {"finite_deficit": True}
    ok = all(math.isfinite(d) for d in deficits.values())
    if check_doubling:
        change = max(abs(deficits[(spec.lam, 2 * N, E)] - deficits[(spec.lam, N, E)]) for E in energies)
        summary["doubling_change"] = change
        thresholds["doubling_change_max"] = stability * loglam
        ok = ok and change <= thresholds["doubling_change_max"]
    if lambda_factor:
        lam2 = spec.lam * lambda_factor
        change = max(abs(deficits[(lam2, N, E)] - deficits[(spec.lam, N, E)]) for E in energies)
        summary["lambda_sweep_change"] = change
        thresholds["lambda_sweep_change_max"] = sweep_tol
        ok = ok and change <= sweep_tol

    try:
        est = lambda0_estimate(spec, energies)
        summary.update(lambda0_estimate=est.lambda0, y0=est.y0, eps0=est.eps0)
        if abs(spec.lam) < est.lambda0:
            notes.append(f"|lambda| = {abs(spec.lam):g} is below the lambda0 estimate {est.lambda0:.4g}")
    except NoGoodCircleError as exc:
        summary.update(lambda0_estimate=math.inf, y0=math.nan, eps0=0.0)
        notes.append(str(exc))
    verdict = PASS if ok else FAIL
    if ok and notes:
        verdict = WARN
    return BoundReport("verify-lower", verdict, summary, thresholds, cells, notes,
                       provenance={"spec": spec.digest()})


# Hardy convexity -------------------------------------------------------------------------


def radial_means(func, radii, size: int = 1024) -> np.ndarray:
    """Circle averages of ``func(phases, radius)`` (sentinel ``-inf`` samples excluded)."""
    xs = circle_phases(size)
    out = []
    for s in radii:
        vals = np.asarray(func(xs, s))
        finite = np.isfinite(vals)
        out.append(vals[finite].mean() if finite.any() else -math.inf)
    return np.array(out)


def log_convexity_defects(radii, means) -> np.ndarray:
    """``m(s2) - interp_log(s1, s3)(s2)`` for consecutive triples; convexity means all <= 0."""
    t = np.log(np.asarray(radii, dtype=float))
    m = np.asarray(means, dtype=float)
    out = []
    for i in range(1, len(t) - 1):
        w = (t[i] - t[i - 1]) / (t[i + 1] - t[i - 1])
        out.append(m[i] - ((1 - w) * m[i - 1] + w * m[i + 1]))
    return np.array(out)


def hardy_convexity_check(spec: OperatorSpec, N: int, E: float = 0.0, radii=None, size: int = 1024,
                          tol: float = 1e-3) -> BoundReport:
    """Circle means of u_N at several radii in (1, 1 + r) must be convex in ``log s``."""
    if radii is None:
        radii = 1.0 + spec.annulus_r * np.linspace(0.02, 0.1, 5)
    radii = np.sort(np.asarray(radii, dtype=float))
    if len(radii) < 5:
        raise DomainError("need at least 5 radii")
    if np.any(radii <= 1.0) or np.any(radii >= 1.0 + spec.annulus_r):
        raise DomainError("radii must lie in (1, 1 + annulus_r)")
    means = radial_means(lambda xs, s: u_phase(spec, xs, N, E, s), radii, size)
    defects = log_convexity_defects(radii, means)
    worst = float(defects.max())
    summary = {"N": N, "E": E, "lambda": spec.lam, "radii": radii, "means": means,
               "max_defect": worst}
    cells = [{"radius": float(s), "mean": float(m)} for s, m in zip(radii, means)]
    verdict = PASS if worst <= tol and np.all(np.isfinite(means)) else FAIL
    return BoundReport("hardy-check", verdict, summary, {"defect_max": tol}, cells,
                       provenance={"spec": spec.digest()})


__all__ = [
    "SubharmonicSamples", "Epsilon0Scan", "Lambda0Estimate", "u_value", "u_phase", "circle_samples",
    "hadamard_upper_check", "det_norm_inequality_check", "det_norm_campaign", "epsilon0_scan",
    "split_dn_bn", "factorization_check", "dn_det_bound_check", "lambda0_estimate", "phase_average", "verify_lower_bound",
    "radial_means", "log_convexity_defects", "hardy_convexity_check", "combine_verdicts", "WARN",
]

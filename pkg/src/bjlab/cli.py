"""``bjlab <command> --config <path> [--seed N] [--out DIR] [--threads K]``.

Every command writes ``<command>.json`` (summary, thresholds, verdict) and,
where there are per-cell values, ``<command>.csv`` into the output directory.
Exit status: 0 on PASS or WARN, 1 on FAIL, 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .config import CampaignConfig, ConfigError, load_config
from .determinants import (NoGoodCircleError, det_norm_campaign, hadamard_upper_check, hardy_convexity_check,
                           lambda0_estimate, verify_lower_bound)
from .errors import DomainError, ResourceError, SpectralHitError
from .greens import bad_set_estimate, diophantine_constant, window_campaign
from .localization import localization_campaign, lyapunov_diagnostic
from .minors import minor_direct, minor_oracle_campaign, minor_via_paths, verify_minor_upper_bound
from .reports import FAIL, PASS, WARN, BoundReport, combine_verdicts, write_csv
from .torus import no_constant_eigenvalue_check

COMMANDS = ("verify-upper", "verify-lower", "minor-oracle", "hardy-check", "green-scan", "localize",
            "lyapunov", "preflight")


@contextmanager
def worker_pool(threads: int):
    """An order-preserving parallel map; results never depend on the worker count."""
    if threads <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=threads) as ex:
        yield ex.map


def _merge(campaign: str, parts: dict[str, BoundReport], extra_notes=()) -> BoundReport:
    verdict = combine_verdicts(*(p.verdict for p in parts.values()))
    summary = {name: p.summary for name, p in parts.items()}
    thresholds = {name: p.thresholds for name, p in parts.items()}
    notes = [f"{name}: {n}" for name, p in parts.items() for n in p.notes] + list(extra_notes)
    cells = []
    for name, p in parts.items():
        cells += [{"part": name, **c} for c in p.cells]
    verdicts = {name: p.verdict for name, p in parts.items()}
    return BoundReport(campaign, verdict, {"parts": verdicts, **summary}, thresholds, cells, notes)


def _verify_upper(cfg: CampaignConfig, pmap) -> BoundReport:
    spec = cfg.spec
    E = cfg.energies[0]
    parts = {"minors": verify_minor_upper_bound(spec, cfg.N, E, cfg.phases, cfg.check_doubling, pmap=pmap),
             "hadamard": hadamard_upper_check(spec, cfg.N, E, check_doubling=cfg.check_doubling)}
    rep = _merge("verify-upper", parts)
    if cfg.lambda_sweep:
        maxima = {spec.lam: parts["minors"].summary["max_C"]}
        for lam in cfg.lambda_sweep:
            r = verify_minor_upper_bound(spec.with_lambda(lam), cfg.N, E, cfg.phases, False, pmap=pmap)
            maxima[lam] = r.summary["max_C"]
        spread = max(maxima.values()) - min(maxima.values())
        rep.summary["lambda_sweep"] = {"max_C": {str(k): v for k, v in maxima.items()}, "spread": spread}
        rep.thresholds["lambda_sweep_spread_max"] = 0.3
        if not spread < 0.3:
            rep.verdict = FAIL
    return rep


def _verify_lower(cfg: CampaignConfig, pmap) -> BoundReport:
    parts = {"lower": verify_lower_bound(cfg.spec, cfg.N, cfg.energies, cfg.quadrature_size,
                                         cfg.check_doubling, pmap=pmap)}
    if cfg.det_norm_samples:
        parts["det_norm"] = det_norm_campaign(cfg.det_norm_samples, 32, cfg.seed)
        parts["det_norm"].cells = []
    return _merge("verify-lower", parts)


def _hardy(cfg: CampaignConfig, pmap) -> BoundReport:
    parts = {f"E={E:g}": hardy_convexity_check(cfg.spec, cfg.N, E, cfg.radii, tol=cfg.hardy_tol)
             for E in cfg.energies}
    return _merge("hardy-check", parts)


def _green_scan(cfg: CampaignConfig, pmap) -> BoundReport:
    spec = cfg.spec
    cells, summary, notes = [], {}, []
    verdict = PASS
    xs = np.arange(cfg.phase_grid) / cfg.phase_grid
    for E in cfg.energies:
        est = bad_set_estimate(spec, cfg.N, cfg.M, E, cfg.phase_grid, cfg.delta, cfg.ladder, pmap)
        ms = sorted(est.ladder)
        fr = [est.ladder[m] for m in ms]
        fit = None
        pos = [(m, f) for m, f in zip(ms, fr) if f > 0]
        if len(pos) >= 2:
            slope = np.polyfit(np.log([m for m, _ in pos]), np.log([f for _, f in pos]), 1)[0]
            fit = float(slope)
        windows = window_campaign(spec, cfg.N, max(1, math.ceil(cfg.N / 100)), E, 512,
                                  cfg.good_green_const, pmap)
        summary[f"E={E:g}"] = {"fraction": est.fraction, "ladder": {str(m): f for m, f in zip(ms, fr)},
                               "monotone": est.monotone, "log_log_slope": fit, "threshold": est.threshold,
                               "delta": est.delta, "good_window": windows}
        if not est.monotone:
            notes.append(f"E={E:g}: bad fraction rises along the M ladder")
            verdict = combine_verdicts(verdict, WARN)
        if est.fraction > cfg.bad_fraction_max:
            verdict = FAIL
        cells += [{"E": E, "x": float(x), "average": float(a), "bad": bool(a <= est.threshold)}
                  for x, a in zip(xs, est.averages)]
    summary.update(N=cfg.N, M=cfg.M, phase_grid=cfg.phase_grid)
    return BoundReport("green-scan", verdict, summary, {"bad_fraction_max": cfg.bad_fraction_max}, cells, notes)


def _localize(cfg: CampaignConfig, pmap, out_dir: Path | None = None) -> BoundReport:
    lr = localization_campaign(cfg.spec, cfg.box, cfg.x, cfg.energy_window, cfg.edge_margin, cfg.rate_factor)
    rep = lr.to_bound_report()
    if cfg.write_block_norms and out_dir is not None:
        from .localization import eigensolve
        rows = []
        for k, p in enumerate(eigensolve(cfg.spec, cfg.x, (1, cfg.box))):
            norms = np.linalg.norm(p.psi, axis=1)
            rows += [{"eigen": k, "E": p.E, "n": n + 1, "norm": float(v)} for n, v in enumerate(norms)]
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(out_dir / "localize_block_norms.csv", rows)
    return rep


def _lyapunov(cfg: CampaignConfig, pmap) -> BoundReport:
    spec = cfg.spec
    loglam = math.log(abs(spec.lam))
    runs = list(pmap(lambda E: lyapunov_diagnostic(spec, E, cfg.num_steps, cfg.x, cfg.reorth), cfg.energies))
    cells = []
    for E, r in zip(cfg.energies, runs):
        row = {"E": E, "steps": r.steps, "flagged": r.flagged}
        row.update({f"gamma_{i + 1}": float(g) for i, g in enumerate(r.exponents)})
        cells.append(row)
    top = [float(r.exponents[0]) for r in runs]
    summary = {"energies": cfg.energies, "top_exponent": top, "log_lambda": loglam,
               "num_steps": cfg.num_steps, "reorth": cfg.reorth}
    notes = [f"E={E:g}: top exponent {g:.4f} is not within 10% of log|lambda|"
             for E, g in zip(cfg.energies, top) if abs(g - loglam) > 0.1 * abs(loglam)]
    return BoundReport("lyapunov", WARN if notes else PASS, summary, {"relative_tol_diagnostic": 0.1},
                       cells, notes)


def _preflight(cfg: CampaignConfig, pmap) -> BoundReport:
    spec = cfg.spec
    notes = []
    verdict = PASS
    det_w = spec.det_w_min()
    xs = np.arange(256) / 256
    det_w_max = float(np.abs(np.linalg.det(spec.W.real_values(xs))).max())
    sym = spec.symmetry_defect()
    ce = no_constant_eigenvalue_check(spec.F)
    t, k = diophantine_constant(spec.omega, cfg.diophantine_k)
    summary = {"det_W_min": det_w, "det_W_max": det_w_max, "symmetry_defect": sym, "no_constant_eigenvalue": ce.ok,
               "constant_eigenvalue_witness": ce.witness, "diophantine_t": t, "diophantine_argmin_k": k,
               "energy_window": spec.energy_window()}
    if det_w_max <= 1e-14:
        verdict = FAIL
        notes.append("det W vanishes on the whole probe grid")
    elif det_w <= 1e-12:
        notes.append("det W comes close to zero on the probe grid")
    if sym > 1e-12:
        verdict = FAIL
        notes.append(f"R or F is not symmetric (defect {sym:.2e})")
    if not ce.ok:
        verdict = FAIL
        notes.append(f"F appears to have the constant eigenvalue {ce.witness:.6g}")
    if t < 1e-3:
        verdict = combine_verdicts(verdict, WARN)
        notes.append(f"omega looks poorly Diophantine: k^2 ||k omega|| = {t:.3g} at k = {k}")
    try:
        est = lambda0_estimate(spec, cfg.energies)
        summary.update(lambda0_estimate=est.lambda0, y0=est.y0, eps0=est.eps0)
        if abs(spec.lam) < est.lambda0:
            verdict = combine_verdicts(verdict, WARN)
            notes.append(f"|lambda| = {abs(spec.lam):g} is below the lambda0 estimate {est.lambda0:.4g}")
    except NoGoodCircleError as exc:
        summary["lambda0_estimate"] = math.inf
        verdict = combine_verdicts(verdict, WARN)
        notes.append(str(exc))
    return BoundReport("preflight", verdict, summary, {"symmetry_defect_max": 1e-12, "diophantine_t_min": 1e-3},
                       [], notes)


def read_matrix(path) -> np.ndarray:
    """Whitespace or comma separated rows; integer entries stay integers for exact arithmetic."""
    path = Path(path)
    if not path.exists():
        raise DomainError(f"matrix file not found: {path}")
    rows = [line.replace(",", " ").split() for line in path.read_text().splitlines()]
    rows = [r for r in rows if r and not r[0].startswith("#")]
    try:
        return np.array([[int(v) for v in r] for r in rows])
    except ValueError:
        return np.array([[float(v) for v in r] for r in rows])


def matrix_oracle(g: np.ndarray, pairs) -> BoundReport:
    """Direct and path-expansion minors of one matrix, side by side."""
    m = g.shape[0]
    if g.ndim != 2 or g.shape[1] != m:
        raise DomainError(f"matrix must be square, got shape {g.shape}")
    exact = g.dtype.kind == "i"
    cells = []
    worst = 0.0
    for a, b in pairs:
        direct = minor_direct(g, a, b, exact=exact)
        paths = minor_via_paths(g, a, b, exact=exact)
        diff = abs(float(paths - direct))
        worst = max(worst, diff / max(1.0, abs(float(direct))))
        cells.append({"alpha": a, "alpha_prime": b, "direct": float(direct), "paths": float(paths), "difference": diff})
    ok = worst == 0.0 if exact else worst <= 1e-9
    return BoundReport("minor-oracle", PASS if ok else FAIL, {"m": m, "exact": exact, "pairs": len(cells),
                       "max_rel_difference": worst}, {"rtol": 0.0 if exact else 1e-9}, cells)


def _minor_oracle(cfg: CampaignConfig, pmap, matrix=None, pair=None) -> BoundReport:
    if matrix is None:
        return minor_oracle_campaign(cfg.minor_samples, cfg.minor_max_m, cfg.seed)
    g = read_matrix(matrix)
    m = g.shape[0]
    pairs = [pair] if pair else [(a, b) for a in range(1, m + 1) for b in range(1, m + 1)]
    return matrix_oracle(g, pairs)


RUNNERS = {
    "verify-upper": _verify_upper, "verify-lower": _verify_lower, "minor-oracle": _minor_oracle,
    "hardy-check": _hardy, "green-scan": _green_scan, "localize": _localize, "lyapunov": _lyapunov,
    "preflight": _preflight,
}


def run(command: str, config: CampaignConfig, out_dir=None, threads: int | None = None,
        matrix=None, pair=None):
    """Run one campaign; returns ``(exit_code, report, written_paths)``.

    ``matrix`` (a file path) and ``pair`` only apply to minor-oracle.
    """
    if command not in RUNNERS:
        raise DomainError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    threads = config.threads if threads is None else threads
    out_dir = Path(out_dir if out_dir is not None else config.out)
    with worker_pool(threads) as pmap:
        if command == "localize":
            report = _localize(config, pmap, out_dir)
        elif command == "minor-oracle":
            report = _minor_oracle(config, pmap, matrix, pair)
        else:
            report = RUNNERS[command](config, pmap)
    report.provenance = {**report.provenance, "config_digest": config.digest(), "spec": config.spec.digest(),
                         "seed": config.seed, "version": __version__, "command": command}
    paths = report.write(out_dir, command)
    return (1 if report.verdict == FAIL else 0), report, paths


def _origin(exc: BaseException) -> str:
    """Module of the innermost frame that raised ``exc``."""
    tb = exc.__traceback__
    name = "bjlab"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", name)
        tb = tb.tb_next
    return name


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bjlab", description="Campaigns for quasi-periodic block Jacobi operators.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="TOML file with [spec] and [campaign] sections")
    p.add_argument("--seed", type=int, help="override campaign.seed")
    p.add_argument("--out", help="output directory (default campaign.out)")
    p.add_argument("--threads", type=int, help="worker threads (results do not depend on this)")
    p.add_argument("--radii", type=_floats, help="comma-separated radii for hardy-check")
    p.add_argument("--energies", type=_floats, help="comma-separated energy grid")
    p.add_argument("--matrix", help="minor-oracle: matrix file instead of seeded random matrices")
    p.add_argument("--alpha", type=int, help="minor-oracle: deleted row (1-based)")
    p.add_argument("--alpha-prime", type=int, help="minor-oracle: deleted column (1-based)")
    p.add_argument("--version", action="version", version=f"bjlab {__version__}")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.radii is not None:
            overrides["radii"] = args.radii
        if args.energies is not None:
            overrides["energies"] = args.energies
        if overrides:
            from .config import parse_config
            raw = {k: dict(v) for k, v in cfg.raw.items()}
            raw.setdefault("campaign", {}).update(overrides)
            cfg = parse_config(raw, cfg.source)
        if args.threads is not None and args.threads < 1:
            raise ConfigError(["--threads must be positive"])
    except ConfigError as exc:
        print("bjlab: configuration error", file=sys.stderr)
        for err in exc.errors:
            print(f"  {err}", file=sys.stderr)
        return 2
    try:
        pair = None
        if args.alpha is not None or args.alpha_prime is not None:
            if args.alpha is None or args.alpha_prime is None:
                print("bjlab: --alpha and --alpha-prime go together", file=sys.stderr)
                return 2
            pair = (args.alpha, args.alpha_prime)
        code, report, paths = run(args.command, cfg, args.out, args.threads, args.matrix, pair)
    except (ResourceError, DomainError, NoGoodCircleError, SpectralHitError) as exc:
        print(f"bjlab {args.command}: {_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: {report.verdict}")
    if args.command == "minor-oracle" and args.matrix:
        for c in report.cells:
            print(f"  minor({c['alpha']},{c['alpha_prime']}): direct={c['direct']:.17g} "
                  f"paths={c['paths']:.17g} difference={c['difference']:.3g}")
    for path in paths:
        print(f"  wrote {path}")
    for note in report.notes:
        print(f"  note: {note}")
    return code


if __name__ == "__main__":
    sys.exit(main())

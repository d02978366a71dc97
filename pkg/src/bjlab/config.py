"""TOML campaign configuration: an operator in [spec] and run parameters in [campaign].

Errors are collected rather than raised one at a time, so a broken file is
reported in full.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DomainError
from .operator import GOLDEN_MEAN, OperatorSpec
from .torus import TrigMatrixPoly


class ConfigError(DomainError):
    def __init__(self, errors: list[str], path=None):
        self.errors = list(errors)
        head = f"{path}: " if path else ""
        super().__init__(head + "; ".join(self.errors))


SPEC_KEYS = {"l", "lambda", "omega", "annulus_r", "W", "R", "F"}

# name -> (kind, default, validator or None, message)
_pos = (lambda v: v > 0, "must be positive")
CAMPAIGN_KEYS = {
    "N": ("int", 16, _pos),
    "M": ("int", 8, _pos),
    "energies": ("floats", [0.0], None),
    "phases": ("int", 64, _pos),
    "x": ("float", 0.1234, None),
    "quadrature_size": ("int", 8192, (lambda v: v >= 512, "must be at least 512")),
    "phase_grid": ("int", 4096, _pos),
    "radii": ("floats", None, None),
    "ladder": ("ints", None, None),
    "lambda_sweep": ("floats", [], None),
    "horizon": ("int", 1000, (lambda v: 1 <= v <= 10**6, "must be in [1, 10^6]")),
    "num_steps": ("int", 100_000, (lambda v: v >= 10_000, "must be at least 10^4")),
    "reorth": ("int", 8, _pos),
    "delta": ("float", None, (lambda v: 0 < v <= 1, "must be in (0, 1]")),
    "good_green_const": ("float", 50.0, _pos),
    "box": ("int", 300, (lambda v: v >= 8, "must be at least 8")),
    "edge_margin": ("int", 7, (lambda v: v >= 0, "must be non-negative")),
    "rate_factor": ("float", 0.5, _pos),
    "energy_window": ("floats", None, (lambda v: len(v) == 2 and v[0] <= v[1], "must be [low, high]")),
    "check_doubling": ("bool", True, None),
    "hardy_tol": ("float", 1e-3, _pos),
    "bad_fraction_max": ("float", 0.05, (lambda v: 0 <= v <= 1, "must be in [0, 1]")),
    "minor_samples": ("int", 200, _pos),
    "minor_max_m": ("int", 7, (lambda v: 1 <= v <= 9, "must be in [1, 9]")),
    "det_norm_samples": ("int", 1000, (lambda v: v >= 0, "must be non-negative")),
    "diophantine_k": ("int", 10**6, _pos),
    "write_block_norms": ("bool", False, None),
    "seed": ("int", 0, (lambda v: 0 <= v < 2**64, "must be a 64-bit unsigned integer")),
    "out": ("str", "out", None),
    "threads": ("int", 1, _pos),
}


@dataclass
class CampaignConfig:
    spec: OperatorSpec
    params: dict = field(default_factory=dict)
    source: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def __getattr__(self, name):
        params = self.__dict__.get("params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)

    def digest(self) -> str:
        blob = json.dumps({"spec": self.spec.to_dict(), "params": self.params}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _omega(value, errors):
    if isinstance(value, str):
        if value.strip().lower() == "goldenmean":
            return GOLDEN_MEAN
        errors.append(f"spec.omega: unknown keyword {value!r} (use a number or 'goldenmean')")
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    errors.append("spec.omega: must be a number or 'goldenmean'")
    return None


def _number(value, name, errors, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{name}: expected a number, got {value!r}")
        return None
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            errors.append(f"{name}: expected an integer, got {value!r}")
            return None
        return int(value)
    if not math.isfinite(value):
        errors.append(f"{name}: must be finite")
        return None
    return float(value)


def _table(value, name, l, errors):
    if not isinstance(value, list):
        errors.append(f"spec.{name}: expected a list of [k, row, col, re, im] entries")
        return None
    try:
        return TrigMatrixPoly.from_table(value, l)
    except (DomainError, TypeError, ValueError) as exc:
        errors.append(f"spec.{name}: {exc}")
        return None


def parse_spec(section: dict, errors: list[str]) -> OperatorSpec | None:
    for key in section:
        if key not in SPEC_KEYS:
            errors.append(f"spec: unknown key {key!r}")
    missing = [k for k in ("l", "lambda", "omega", "F") if k not in section]
    for k in missing:
        errors.append(f"spec: missing required key {k!r}")
    l = _number(section["l"], "spec.l", errors, int) if "l" in section else None
    if l is not None and l < 1:
        errors.append("spec.l: must be positive")
        l = None
    lam = _number(section["lambda"], "spec.lambda", errors) if "lambda" in section else None
    if lam == 0:
        errors.append("spec.lambda: coupling must be nonzero")
    omega = _omega(section["omega"], errors) if "omega" in section else None
    annulus_r = _number(section.get("annulus_r", 0.5), "spec.annulus_r", errors)
    if annulus_r is not None and annulus_r <= 0:
        errors.append("spec.annulus_r: must be positive")
    if l is None:
        return None
    polys = {}
    for name in ("W", "R", "F"):
        if name in section:
            polys[name] = _table(section[name], name, l, errors)
    if "W" not in section:
        polys["W"] = TrigMatrixPoly.constant(np.eye(l))
    if "R" not in section:
        polys["R"] = TrigMatrixPoly.zeros(l)
    if errors or any(p is None for p in polys.values()) or None in (lam, omega, annulus_r):
        return None
    try:
        return OperatorSpec(l=l, lam=lam, omega=omega, W=polys["W"], R=polys["R"], F=polys["F"],
                            annulus_r=annulus_r)
    except DomainError as exc:
        errors.append(f"spec: {exc}")
        return None


def parse_campaign(section: dict, errors: list[str]) -> dict:
    params = {k: spec[1] for k, spec in CAMPAIGN_KEYS.items()}
    for key, value in section.items():
        if key not in CAMPAIGN_KEYS:
            errors.append(f"campaign: unknown key {key!r}")
            continue
        kind, _, check = CAMPAIGN_KEYS[key]
        name = f"campaign.{key}"
        if kind == "int":
            v = _number(value, name, errors, int)
        elif kind == "float":
            v = _number(value, name, errors)
        elif kind == "bool":
            v = value if isinstance(value, bool) else None
            if v is None:
                errors.append(f"{name}: expected true or false")
        elif kind == "str":
            v = value if isinstance(value, str) else None
            if v is None:
                errors.append(f"{name}: expected a string")
        else:
            if not isinstance(value, list) or not value:
                errors.append(f"{name}: expected a non-empty list")
                continue
            elem = int if kind == "ints" else float
            v = [_number(item, name, errors, elem) for item in value]
            if None in v:
                continue
        if v is None:
            continue
        if check is not None and not check[0](v):
            errors.append(f"{name}: {check[1]}")
            continue
        params[key] = v
    return params


def parse_config(data: dict, source=None) -> CampaignConfig:
    errors: list[str] = []
    for key in data:
        if key not in ("spec", "campaign"):
            errors.append(f"unknown section {key!r}")
    if "spec" not in data:
        errors.append("missing [spec] section")
    spec = parse_spec(data.get("spec", {}), errors) if "spec" in data else None
    params = parse_campaign(data.get("campaign", {}), errors)
    if spec is not None and params.get("radii") is not None:
        r = spec.annulus_r
        if len(params["radii"]) < 5:
            errors.append("campaign.radii: need at least 5 radii")
        if any(not 1 < s < 1 + r for s in params["radii"]):
            errors.append(f"campaign.radii: every radius must lie in (1, {1 + r:g})")
    if errors:
        raise ConfigError(errors, source)
    return CampaignConfig(spec, params, str(source) if source else None, data)


def load_config(path) -> CampaignConfig:
    """Read and validate a TOML campaign file; raises ConfigError listing every problem found."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"file not found: {path}"])
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"], path) from exc
    return parse_config(data, path)


def loads_config(text: str) -> CampaignConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc
    return parse_config(data)


__all__ = ["CampaignConfig", "ConfigError", "load_config", "loads_config", "parse_config", "CAMPAIGN_KEYS"]

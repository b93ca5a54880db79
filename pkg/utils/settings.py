from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from utils.errors import UsageError

VALID_EVALUATORS = ("series", "quadrature", "mc_model", "mc_physical")

DEFAULT_SETTINGS: dict[str, Any] = {
    "snr_start": 0.0,
    "snr_stop": 30.0,
    "snr_step": 5.0,
    "modulation": "qpsk",
    "order": None,
    "kappa": 1.0,
    "mu": 1.0,
    "antennas": "1x1x1",
    "evaluators": ["series", "quadrature"],
    "trials": 100_000,
    "seed": 20240101,
    "partitions": 1,
    "series_terms": 40,
    # Figure presets: the κ / μ values swept by fig1-fig5.
    "preset_kappas": [0.0, 1.0, 2.0, 4.0],
    "preset_mus": [1.0, 2.0, 3.0],
    # Per-link overrides; None means "same as kappa / mu".
    "kappa_sr": None,
    "kappa_sd": None,
    "kappa_rd": None,
    "mu_sr": None,
    "mu_sd": None,
    "mu_rd": None,
    "snr_offset_sr_db": 0.0,
    "snr_offset_sd_db": 0.0,
    "snr_offset_rd_db": 0.0,
}

_NUMBER_KEYS = {
    "snr_start", "snr_stop", "snr_step", "kappa", "mu",
    "kappa_sr", "kappa_sd", "kappa_rd", "mu_sr", "mu_sd", "mu_rd",
    "snr_offset_sr_db", "snr_offset_sd_db", "snr_offset_rd_db",
}
_INT_KEYS = {"order", "trials", "seed", "partitions", "series_terms"}


def _read_json(path: Path) -> dict[str, Any]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in _NUMBER_KEYS:
            return float(value)
        if key in _INT_KEYS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if key in {"preset_kappas", "preset_mus"}:
            return [float(v) for v in value]
        if key == "evaluators":
            items = value.split(",") if isinstance(value, str) else list(value)
            return [str(v).strip().lower() for v in items if str(v).strip()]
        return str(value).strip()
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid value for {key!r}: {value!r}") from exc


def validate_settings(settings: dict[str, Any]) -> dict[str, Any]:
    unknown = sorted(set(settings) - set(DEFAULT_SETTINGS))
    if unknown:
        raise UsageError(f"unknown setting(s): {', '.join(unknown)}")
    out = {k: (None if v is None else _coerce(k, v)) for k, v in settings.items()}

    evaluators = out.get("evaluators") or []
    bad = [e for e in evaluators if e not in VALID_EVALUATORS]
    if bad or not evaluators:
        raise UsageError(f"evaluators must be a non-empty subset of {', '.join(VALID_EVALUATORS)}")
    if not out["snr_step"] > 0:
        raise UsageError("snr_step must be > 0")
    if out["snr_start"] > out["snr_stop"]:
        raise UsageError("snr_start must not exceed snr_stop")
    if out["trials"] < 1 or out["partitions"] < 1 or out["series_terms"] < 1:
        raise UsageError("trials, partitions and series_terms must be >= 1")
    return out


def merge_settings(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Later layers win; None values never override."""
    merged = dict(base)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged


def load_settings(path: str | Path | None = None) -> dict[str, Any]:
    """Defaults merged with an optional JSON file (flat keys as DEFAULT_SETTINGS)."""
    merged = dict(DEFAULT_SETTINGS)
    if path:
        data = _read_json(Path(path))
        unknown = sorted(set(data) - set(DEFAULT_SETTINGS))
        if unknown:
            raise UsageError(f"unknown setting(s) in {path}: {', '.join(unknown)}")
        merged = merge_settings(merged, data)
    return validate_settings(merged)


def parse_antennas(text: str) -> tuple[int, int, int]:
    """'NSxNRxND' -> (NS, NR, ND)."""
    parts = str(text or "").lower().replace("×", "x").split("x")
    try:
        values = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"antennas must look like NSxNRxND, got {text!r}") from exc
    if len(values) != 3 or min(values) < 1:
        raise UsageError(f"antennas must look like NSxNRxND with counts >= 1, got {text!r}")
    return values

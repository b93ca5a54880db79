"""
SNR sweeps over the analytical and Monte Carlo evaluators, figure presets and
CSV emission.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import pandas as pd
from joblib import Parallel, delayed

from services import montecarlo, ser_engine
from services.modulation import ModulationParams, parse_modulation
from services.montecarlo import SimConfig, SimMode
from services.rng import derive_seed
from services.ser_engine import LinkParams, NetworkParams
from utils.app_config import get_n_jobs
from utils.errors import ContractError, SerError, UsageError
from utils.settings import DEFAULT_SETTINGS, VALID_EVALUATORS, merge_settings, parse_antennas, validate_settings
from utils.specfun import SeriesControl
from utils.text import curve_slug, format_float, format_snr_db

logger = logging.getLogger(__name__)

EVALUATORS = VALID_EVALUATORS
CSV_COLUMNS = ["snr_db", "evaluator", "ser", "ci99_low", "ci99_high", "trials", "converged"]
ERROR_MARKER = "error"
FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")

_MC_MODES = {"mc_model": SimMode.MODEL_FAITHFUL, "mc_physical": SimMode.PHYSICAL}


@dataclass(frozen=True)
class SweepSpec:
    snr_db_start: float
    snr_db_stop: float
    snr_db_step: float
    net: NetworkParams
    evaluators: tuple[str, ...] = ("series", "quadrature")
    trials: int = 100_000
    seed: int = 0
    partitions: int = 1
    series_terms: int = 40
    snr_offsets_db: tuple[float, float, float] = (0.0, 0.0, 0.0)
    label: str = ""

    def __post_init__(self) -> None:
        evaluators = tuple(str(e) for e in self.evaluators)
        object.__setattr__(self, "evaluators", evaluators)
        if not self.snr_db_step > 0:
            raise ContractError("snr_db_step must be > 0")
        if self.snr_db_start > self.snr_db_stop:
            raise ContractError("snr_db_start must not exceed snr_db_stop")
        if not evaluators:
            raise ContractError("at least one evaluator is required")
        unknown = [e for e in evaluators if e not in EVALUATORS]
        if unknown:
            raise ContractError(f"unknown evaluator(s): {', '.join(unknown)}")
        if int(self.trials) < 1:
            raise ContractError("trials must be >= 1")
        if len(self.snr_offsets_db) != 3:
            raise ContractError("snr_offsets_db needs one value per hop (sr, sd, rd)")

    def snr_points(self) -> list[float]:
        count = int(math.floor((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9)) + 1
        return [round(self.snr_db_start + i * self.snr_db_step, 9) for i in range(count)]

    def ordered_evaluators(self) -> list[str]:
        return [e for e in EVALUATORS if e in self.evaluators]


def _row(snr_db: float, evaluator: str, **values: Any) -> dict[str, Any]:
    row = {
        "snr_db": snr_db,
        "evaluator": evaluator,
        "ser": math.nan,
        "ci99_low": math.nan,
        "ci99_high": math.nan,
        "trials": None,
        "converged": None,
        "error": "",
    }
    row.update(values)
    return row


def _series_point(net: NetworkParams, terms: int) -> tuple[float, bool]:
    ctl = SeriesControl(max_terms_per_index=int(terms))
    results = [ser_engine.link_ser_series(link, net.modulation, ctl) for link in (net.sr, net.sd, net.rd)]
    p_sr, p_sd, p_rd = (r.value for r in results)
    converged = all(r.converged for r in results)
    return ser_engine.compose_end_to_end(p_sr, p_sd, p_sd * p_rd), converged


def _evaluate_point(spec: SweepSpec, index: int, snr_db: float) -> list[dict[str, Any]]:
    net = spec.net.with_mean_snr(10.0 ** (snr_db / 10.0), tuple(spec.snr_offsets_db))
    rows = []
    for evaluator in spec.ordered_evaluators():
        try:
            if evaluator == "series":
                value, converged = _series_point(net, spec.series_terms)
                rows.append(_row(snr_db, evaluator, ser=value, converged=int(converged)))
            elif evaluator == "quadrature":
                rows.append(_row(snr_db, evaluator, ser=ser_engine.end_to_end_ser(net, "quadrature")))
            else:
                cfg = SimConfig(
                    net=net,
                    mode=_MC_MODES[evaluator],
                    trials=spec.trials,
                    seed=derive_seed(spec.seed, index),
                    partitions=spec.partitions,
                )
                result = montecarlo.run(cfg, n_jobs=1)
                rows.append(
                    _row(
                        snr_db,
                        evaluator,
                        ser=result.ser,
                        ci99_low=result.ci99_low,
                        ci99_high=result.ci99_high,
                        trials=result.trials,
                    )
                )
        except SerError as exc:
            logger.warning("%s failed at %s dB: %s", evaluator, format_snr_db(snr_db), exc)
            rows.append(_row(snr_db, evaluator, error=str(exc) or exc.__class__.__name__))
    return rows


def run_sweep(spec: SweepSpec, n_jobs: int | None = None) -> pd.DataFrame:
    """One row per (SNR point, requested evaluator), ordered by SNR then evaluator."""
    jobs = get_n_jobs() if n_jobs is None else int(n_jobs)
    points = list(enumerate(spec.snr_points()))
    if jobs == 1 or len(points) == 1:
        chunks = [_evaluate_point(spec, i, snr) for i, snr in points]
    else:
        chunks = Parallel(n_jobs=jobs)(delayed(_evaluate_point)(spec, i, snr) for i, snr in points)

    frame = pd.DataFrame([row for chunk in chunks for row in chunk])
    frame["trials"] = frame["trials"].astype("Int64")
    frame["converged"] = frame["converged"].astype("Int64")
    return frame


def _format_optional_int(value: Any) -> str:
    return "" if pd.isna(value) else str(int(value))


def format_table(frame: pd.DataFrame) -> pd.DataFrame:
    """String view of a sweep table with the exact CSV columns."""
    out = pd.DataFrame(
        {
            "snr_db": frame["snr_db"].map(format_snr_db),
            "evaluator": frame["evaluator"].astype(str),
        }
    )
    failed = frame["error"].astype(str) != ""
    out["ser"] = [ERROR_MARKER if bad else format_float(v) for v, bad in zip(frame["ser"], failed)]
    for col in ("ci99_low", "ci99_high"):
        out[col] = [("" if pd.isna(v) else format_float(v)) for v in frame[col]]
    out["trials"] = frame["trials"].map(_format_optional_int)
    out["converged"] = frame["converged"].map(_format_optional_int)
    return out[CSV_COLUMNS]


def to_csv_text(frame: pd.DataFrame) -> str:
    return format_table(frame).to_csv(index=False, lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv_text(frame), encoding="utf-8", newline="")
    return path


# ---------------------------------------------------------------------------
# Networks and presets
# ---------------------------------------------------------------------------


def _link_value(settings: dict[str, Any], key: str, hop: str) -> float:
    value = settings.get(f"{key}_{hop}")
    return float(settings[key] if value is None else value)


def network_from_settings(settings: dict[str, Any], modulation: ModulationParams | None = None) -> NetworkParams:
    """Three-hop network at unit mean SNR (the sweep overrides γ̄ per point)."""
    if modulation is None:
        name = str(settings["modulation"])
        order = settings.get("order")
        modulation = parse_modulation(f"{order}{name}" if order else name)
    ns, nr, nd = parse_antennas(settings["antennas"])
    hops = {"sr": (ns, nr), "sd": (ns, nd), "rd": (nr, nd)}
    links = {
        hop: LinkParams.from_antennas(
            _link_value(settings, "kappa", hop),
            _link_value(settings, "mu", hop),
            1.0,
            n_tx,
            n_rx,
        )
        for hop, (n_tx, n_rx) in hops.items()
    }
    return NetworkParams(sr=links["sr"], sd=links["sd"], rd=links["rd"], modulation=modulation)


def spec_from_settings(settings: dict[str, Any], label: str = "") -> SweepSpec:
    return SweepSpec(
        snr_db_start=settings["snr_start"],
        snr_db_stop=settings["snr_stop"],
        snr_db_step=settings["snr_step"],
        net=network_from_settings(settings),
        evaluators=tuple(settings["evaluators"]),
        trials=settings["trials"],
        seed=settings["seed"],
        partitions=settings["partitions"],
        series_terms=settings["series_terms"],
        snr_offsets_db=(
            settings["snr_offset_sr_db"],
            settings["snr_offset_sd_db"],
            settings["snr_offset_rd_db"],
        ),
        label=label,
    )


def _curve(base: dict[str, Any], label: str, **overrides: Any) -> SweepSpec:
    settings = dict(base)
    settings.update(overrides)
    return spec_from_settings(settings, label=label)


def figure_preset(name: str, settings: dict[str, Any] | None = None) -> list[SweepSpec]:
    """Sweeps behind figures 1-5; the κ / μ sets come from the settings."""
    key = str(name or "").strip().lower()
    if key not in FIGURES:
        raise UsageError(f"unknown figure preset {name!r}; expected one of {', '.join(FIGURES)}")
    base = validate_settings(merge_settings(DEFAULT_SETTINGS, settings or {}))
    # Presets define the link parameters themselves.
    for hop in ("sr", "sd", "rd"):
        base[f"kappa_{hop}"] = None
        base[f"mu_{hop}"] = None
    kappas = base["preset_kappas"]
    mus = base["preset_mus"]

    if key == "fig1":
        return [_curve(base, f"kappa={k:g}", modulation="qpsk", order=None, kappa=k, mu=1.0) for k in kappas]
    if key == "fig2":
        mu = base["mu"]
        return [_curve(base, f"kappa={k:g},mu={mu:g}", modulation="qam", order=4, kappa=k, mu=mu) for k in kappas]
    if key == "fig3":
        kappa = base["kappa"]
        return [_curve(base, f"kappa={kappa:g},mu={m:g}", modulation="qpsk", order=None, kappa=kappa, mu=m) for m in mus]

    qam = {"modulation": "qam", "order": 4, "kappa": 1.0, "mu": 1.0}
    if key == "fig4":
        pairs = [(1.0, 1.0)]
        pairs += [(m, 1.0) for m in mus if m != 1.0]
        pairs += [(1.0, m) for m in mus if m != 1.0]
        return [
            _curve(base, f"mu_sr={sr:g},mu_rd={rd:g}", **qam, mu_sr=sr, mu_rd=rd, mu_sd=1.0)
            for sr, rd in pairs
        ]

    pairs = [(1.0, 1.0)]
    pairs += [(k, 1.0) for k in kappas if k > 1.0]
    pairs += [(1.0, m) for m in mus if m > 1.0]
    return [
        _curve(base, f"kappa_rd={k:g},mu_rd={m:g}", **qam, kappa_rd=k, mu_rd=m)
        for k, m in pairs
    ]


def run_figure(name: str, out_dir: str | Path, settings: dict[str, Any] | None = None, n_jobs: int | None = None) -> pd.DataFrame:
    """Write one CSV per curve plus ``index.csv``; returns the index table."""
    out_dir = Path(out_dir)
    entries = []
    for spec in figure_preset(name, settings):
        frame = run_sweep(spec, n_jobs=n_jobs)
        filename = f"{curve_slug(name, spec.label)}.csv"
        write_csv(frame, out_dir / filename)
        entries.append({"preset": name, "label": spec.label, "file": filename, "modulation": spec.net.modulation.label})
        logger.info("wrote %s", filename)
    index = pd.DataFrame(entries, columns=["preset", "label", "file", "modulation"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "index.csv").write_text(index.to_csv(index=False, lineterminator="\n"), encoding="utf-8", newline="")
    return index

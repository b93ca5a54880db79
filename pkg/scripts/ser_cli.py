from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from services.sweep_service import FIGURES, run_figure, run_sweep, spec_from_settings, to_csv_text  # noqa: E402
from utils.app_config import get_config_path, get_log_level  # noqa: E402
from utils.errors import EXIT_NUMERIC, EXIT_OK, SerError, exit_code_for  # noqa: E402
from utils.settings import load_settings, merge_settings, validate_settings  # noqa: E402

logger = logging.getLogger("sdf_ser")

# argparse dest -> settings key
_FLAG_KEYS = {
    "snr_start": "snr_start",
    "snr_stop": "snr_stop",
    "snr_step": "snr_step",
    "modulation": "modulation",
    "order": "order",
    "kappa": "kappa",
    "mu": "mu",
    "antennas": "antennas",
    "evaluators": "evaluators",
    "trials": "trials",
    "seed": "seed",
    "partitions": "partitions",
    "series_terms": "series_terms",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON settings file (default: $SDF_SER_CONFIG)")
    parser.add_argument("--snr-start", type=float, default=None)
    parser.add_argument("--snr-stop", type=float, default=None)
    parser.add_argument("--snr-step", type=float, default=None)
    parser.add_argument("--evaluators", default=None, help="comma list of series,quadrature,mc_model,mc_physical")
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--partitions", type=int, default=None)
    parser.add_argument("--series-terms", type=int, default=None)
    parser.add_argument("--antennas", default=None, help="NSxNRxND, e.g. 2x1x1")
    parser.add_argument("--jobs", type=int, default=None, help="worker count (default: $SDF_SER_JOBS or 1)")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ser_cli",
        description="SER curves of a MIMO-STBC selective decode-and-forward relay over κ-μ fading.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="SER vs SNR for one network, CSV on stdout or --out")
    _add_common(sweep)
    sweep.add_argument("--modulation", default=None, help="bpsk, bfsk, qpsk, dpsk, 4qam, 8psk, 4pam, ...")
    sweep.add_argument("--order", type=int, default=None, help="constellation size M for M-ary schemes")
    sweep.add_argument("--kappa", type=float, default=None)
    sweep.add_argument("--mu", type=float, default=None)
    sweep.add_argument("--out", default=None, help="CSV file (default: stdout)")

    figure = sub.add_parser("figure", help="reproduce a figure preset as one CSV per curve")
    _add_common(figure)
    figure.add_argument("--name", required=True, help=", ".join(FIGURES))
    figure.add_argument("--out", required=True, help="output directory")

    selftest = sub.add_parser("selftest", help="run the invariant test suite")
    selftest.add_argument("--all", action="store_true", help="include the slow statistical tests")
    selftest.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _settings_from_args(args: argparse.Namespace) -> dict[str, Any]:
    settings = load_settings(args.config or get_config_path())
    overrides = {key: getattr(args, dest, None) for dest, key in _FLAG_KEYS.items()}
    return validate_settings(merge_settings(settings, overrides))


def _cmd_sweep(args: argparse.Namespace) -> int:
    settings = _settings_from_args(args)
    frame = run_sweep(spec_from_settings(settings), n_jobs=args.jobs)
    text = to_csv_text(frame)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8", newline="")
        logger.info("wrote %d rows to %s", len(frame), out)
    else:
        sys.stdout.write(text)
    if len(frame) and (frame["error"] != "").all():
        logger.error("every sweep point failed; first error: %s", frame["error"].iloc[0])
        print(f"error: every sweep point failed ({frame['error'].iloc[0]})", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_figure(args: argparse.Namespace) -> int:
    settings = _settings_from_args(args)
    index = run_figure(args.name, args.out, settings, n_jobs=args.jobs)
    print(f"{len(index)} curve(s) written to {args.out}")
    return EXIT_OK


def _cmd_selftest(args: argparse.Namespace) -> int:
    import pytest

    pytest_args = [str(ROOT / "tests"), "-q"]
    if not args.all:
        pytest_args += ["-m", "not slow"]
    code = pytest.main(pytest_args)
    return EXIT_OK if int(code) == 0 else EXIT_NUMERIC


_COMMANDS = {"sweep": _cmd_sweep, "figure": _cmd_figure, "selftest": _cmd_selftest}


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=get_log_level(args.verbose),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except SerError as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def main(argv: list[str] | None = None) -> None:
    raise SystemExit(run(argv))


if __name__ == "__main__":
    main()

"""
Monte Carlo validation of the analytical SER.

Two modes share the partition / merge machinery:

* ``model_faithful`` draws the three link SNRs and turns each conditional
  SER into a Bernoulli event, so the expected error indicator equals the
  analytical end-to-end SER exactly (including its product approximation of
  the cooperative branch).
* ``physical`` transmits symbols over per-element κ-μ channel coefficients
  with Alamouti / plain transmission, combines with perfect CSI and detects;
  the relay forwards a symbol only when it detected it correctly.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from services import kappa_mu
from services.modulation import ModulationParams, Scheme, conditional_ser
from services.rng import make_stream
from services.ser_engine import LinkParams, NetworkParams
from utils.app_config import get_n_jobs
from utils.errors import ContractError, DomainError

logger = logging.getLogger(__name__)

CHUNK_TRIALS = 1 << 17
CONFIDENCE = 0.99
PHYSICAL_ANTENNAS = frozenset({1, 2})
# Symbols per STBC block; one-antenna hops reuse the same two-slot framing.
_BLOCK = 2


class SimMode(str, Enum):
    MODEL_FAITHFUL = "model_faithful"
    PHYSICAL = "physical"


def _physical_scheme_ok(mod: ModulationParams) -> bool:
    if mod.scheme in (Scheme.BPSK, Scheme.QPSK):
        return True
    return mod.scheme is Scheme.MQAM and mod.M == 4


def _check_physical(net: NetworkParams) -> None:
    if not _physical_scheme_ok(net.modulation):
        raise ContractError(f"physical mode supports BPSK, QPSK and 4-QAM, not {net.modulation.label}")
    hops = {"sr": net.sr.antennas, "sd": net.sd.antennas, "rd": net.rd.antennas}
    for name, (n_tx, n_rx) in hops.items():
        if n_tx not in PHYSICAL_ANTENNAS or n_rx not in PHYSICAL_ANTENNAS:
            raise ContractError(f"physical mode needs 1 or 2 antennas per node, hop {name} is {n_tx}x{n_rx}")
    if hops["sr"][0] != hops["sd"][0]:
        raise ContractError("source antenna count differs between the S-R and S-D hops")
    if hops["sr"][1] != hops["rd"][0]:
        raise ContractError("relay antenna count differs between the S-R and R-D hops")
    if hops["sd"][1] != hops["rd"][1]:
        raise ContractError("destination antenna count differs between the S-D and R-D hops")


@dataclass(frozen=True)
class SimConfig:
    net: NetworkParams
    mode: SimMode = SimMode.MODEL_FAITHFUL
    trials: int = 1_000_000
    seed: int = 0
    partitions: int = 1
    # Test hook: False leaves only the S-D hop (non-cooperative baseline).
    relay_enabled: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", SimMode(self.mode))
        if int(self.trials) < 1:
            raise ContractError(f"trials must be >= 1, got {self.trials}")
        if int(self.partitions) < 1:
            raise ContractError(f"partitions must be >= 1, got {self.partitions}")
        if int(self.partitions) > int(self.trials):
            raise ContractError("partitions cannot exceed trials")
        if int(self.seed) < 0:
            raise ContractError(f"seed must be >= 0, got {self.seed}")
        if self.mode is SimMode.PHYSICAL:
            _check_physical(self.net)

    @property
    def config_key(self) -> str:
        """Hash of everything that defines the simulated distribution."""
        payload = repr((self.net, self.mode.value, bool(self.relay_enabled)))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def wilson_interval(errors: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    if trials < 1:
        raise ContractError("wilson_interval needs trials >= 1")
    if not 0 <= errors <= trials:
        raise ContractError(f"errors must lie in [0, {trials}], got {errors}")
    z = float(stats.norm.ppf(0.5 + 0.5 * confidence))
    n = float(trials)
    p = errors / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    # Floating point can put the bounds a hair on the wrong side of p.
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass(frozen=True)
class SimResult:
    trials: int
    errors: int
    ser: float
    ci99_low: float
    ci99_high: float
    seed: int | None
    mode: SimMode
    config_key: str = field(default="")

    def __post_init__(self) -> None:
        if self.trials < 1 or not 0 <= self.errors <= self.trials:
            raise ContractError(f"inconsistent counts: {self.errors} errors over {self.trials} trials")
        if not self.ci99_low <= self.ser <= self.ci99_high:
            raise ContractError("confidence interval does not bracket the estimate")

    @classmethod
    def from_counts(cls, trials: int, errors: int, seed: int | None, mode: SimMode, config_key: str) -> "SimResult":
        low, high = wilson_interval(int(errors), int(trials))
        return cls(
            trials=int(trials),
            errors=int(errors),
            ser=int(errors) / int(trials),
            ci99_low=low,
            ci99_high=high,
            seed=seed,
            mode=SimMode(mode),
            config_key=config_key,
        )

    def contains(self, value: float) -> bool:
        return self.ci99_low <= value <= self.ci99_high


def merge(results: list[SimResult]) -> SimResult:
    """Pool partition (or replicate) results and recompute the interval."""
    results = list(results)
    if not results:
        raise ContractError("merge needs at least one result")
    first = results[0]
    if len(results) == 1:
        return first
    for other in results[1:]:
        if other.mode is not first.mode or other.config_key != first.config_key:
            raise ContractError("cannot merge results of different configurations")
    seeds = {r.seed for r in results}
    return SimResult.from_counts(
        trials=sum(r.trials for r in results),
        errors=sum(r.errors for r in results),
        seed=first.seed if len(seeds) == 1 else None,
        mode=first.mode,
        config_key=first.config_key,
    )


def partition_sizes(trials: int, partitions: int) -> list[int]:
    base, extra = divmod(int(trials), int(partitions))
    return [base + (1 if i < extra else 0) for i in range(int(partitions))]


# ---------------------------------------------------------------------------
# Model-faithful kernel
# ---------------------------------------------------------------------------


def _model_faithful_errors(cfg: SimConfig, rng: np.random.Generator, size: int) -> int:
    net = cfg.net
    mod = net.modulation
    g_sd = kappa_mu.sample_snr(net.sd.fading, rng, size)
    sd_err = rng.random(size) < conditional_ser(mod, g_sd)
    if not cfg.relay_enabled:
        return int(np.count_nonzero(sd_err))

    g_sr = kappa_mu.sample_snr(net.sr.fading, rng, size)
    g_rd = kappa_mu.sample_snr(net.rd.fading, rng, size)
    relay_err = rng.random(size) < conditional_ser(mod, g_sr)
    rd_err = rng.random(size) < conditional_ser(mod, g_rd)
    # Relay idle: only the direct branch. Relay forwarding: both branches must fail.
    dest_err = np.where(relay_err, sd_err, sd_err & rd_err)
    return int(np.count_nonzero(dest_err))


# ---------------------------------------------------------------------------
# Physical kernel
# ---------------------------------------------------------------------------


def symbol_energy_scale(mod: ModulationParams) -> float:
    """Es/N0 per unit of γ that makes a Q(√(bγ)) - c Q²(√(bγ)) exact."""
    if mod.scheme is Scheme.QPSK:
        return 2.0
    return 1.0


def _draw_symbols(mod: ModulationParams, rng: np.random.Generator, size: int) -> np.ndarray:
    if mod.scheme is Scheme.BPSK:
        return (1.0 - 2.0 * rng.integers(0, 2, size=(size, _BLOCK))).astype(complex)
    bits = rng.integers(0, 2, size=(size, _BLOCK, 2))
    return ((1.0 - 2.0 * bits[..., 0]) + 1j * (1.0 - 2.0 * bits[..., 1])) / math.sqrt(2.0)


def _detect(mod: ModulationParams, statistic: np.ndarray) -> np.ndarray:
    if mod.scheme is Scheme.BPSK:
        return np.where(statistic.real >= 0.0, 1.0, -1.0).astype(complex)
    re = np.where(statistic.real >= 0.0, 1.0, -1.0)
    im = np.where(statistic.imag >= 0.0, 1.0, -1.0)
    return (re + 1j * im) / math.sqrt(2.0)


def _stbc_encode(symbols: np.ndarray, n_tx: int) -> np.ndarray:
    """(size, n_tx, 2) antenna x time matrix with unit total transmit energy."""
    if n_tx == 1:
        return symbols[:, None, :]
    s1, s2 = symbols[:, 0], symbols[:, 1]
    block = np.empty((symbols.shape[0], 2, 2), dtype=complex)
    block[:, 0, 0] = s1
    block[:, 1, 0] = s2
    block[:, 0, 1] = -np.conj(s2)
    block[:, 1, 1] = np.conj(s1)
    return block / math.sqrt(2.0)


def _stbc_combine(channel: np.ndarray, received: np.ndarray) -> np.ndarray:
    """Linear STBC/MRC combining; returns ‖H‖²/√n_tx · s + noise per symbol."""
    n_tx = channel.shape[2]
    if n_tx == 1:
        h = channel[:, :, 0]
        return np.einsum("br,brt->bt", np.conj(h), received)
    h1, h2 = channel[:, :, 0], channel[:, :, 1]
    y1, y2 = received[:, :, 0], received[:, :, 1]
    s1 = np.sum(np.conj(h1) * y1 + h2 * np.conj(y2), axis=1)
    s2 = np.sum(np.conj(h2) * y1 - h1 * np.conj(y2), axis=1)
    return np.stack([s1, s2], axis=1)


@dataclass(frozen=True)
class _Hop:
    link: LinkParams
    noise_var: float

    @classmethod
    def build(cls, link: LinkParams, es_scale: float) -> "_Hop":
        n_tx, _ = link.antennas
        fading = link.fading
        # Combined SNR = (γ̄ / ap) ‖H‖², the κ-μ(κ, μ ap, γ̄) law of the analysis.
        noise_var = fading.antenna_product / (n_tx * es_scale * fading.mean_snr)
        return cls(link=link, noise_var=noise_var)

    def transmit(self, symbols: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        """Send one block over a fresh channel; returns (combined statistic, MRC weight)."""
        n_tx, n_rx = self.link.antennas
        size = symbols.shape[0]
        channel = kappa_mu.sample_coefficients(self.link.fading.per_element(), rng, size=(size, n_rx, n_tx))
        noise = (rng.standard_normal((size, n_rx, _BLOCK)) + 1j * rng.standard_normal((size, n_rx, _BLOCK)))
        received = channel @ _stbc_encode(symbols, n_tx) + noise * math.sqrt(self.noise_var / 2.0)
        # Branch gain ‖H‖²/√n_tx over noise variance ‖H‖² N0.
        weight = 1.0 / (math.sqrt(n_tx) * self.noise_var)
        return _stbc_combine(channel, received), weight


def _symbol_errors(detected: np.ndarray, sent: np.ndarray) -> np.ndarray:
    return ~np.isclose(detected, sent)


def _physical_errors(cfg: SimConfig, rng: np.random.Generator, size: int) -> int:
    net = cfg.net
    mod = net.modulation
    es_scale = symbol_energy_scale(mod)
    symbols = _draw_symbols(mod, rng, size)

    direct, w_sd = _Hop.build(net.sd, es_scale).transmit(symbols, rng)
    combined = w_sd * direct
    if cfg.relay_enabled:
        at_relay, _ = _Hop.build(net.sr, es_scale).transmit(symbols, rng)
        relay_symbols = _detect(mod, at_relay)
        relay_ok = ~_symbol_errors(relay_symbols, symbols)
        relayed, w_rd = _Hop.build(net.rd, es_scale).transmit(relay_symbols, rng)
        combined = combined + np.where(relay_ok, w_rd * relayed, 0.0)

    errors = _symbol_errors(_detect(mod, combined), symbols)
    # Symbols sharing a block share a channel; only the first is counted so trials stay independent.
    return int(np.count_nonzero(errors[:, 0]))


_KERNELS = {
    SimMode.MODEL_FAITHFUL: _model_faithful_errors,
    SimMode.PHYSICAL: _physical_errors,
}


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------


def _run_partition(cfg: SimConfig, partition_id: int, trials: int) -> SimResult:
    logger.info("partition %d: %d trials (%s)", partition_id, trials, cfg.mode.value)
    rng = make_stream(cfg.seed, partition_id)
    kernel = _KERNELS[cfg.mode]
    errors = 0
    done = 0
    while done < trials:
        size = min(CHUNK_TRIALS, trials - done)
        errors += kernel(cfg, rng, size)
        done += size
    logger.info("partition %d done: %d errors", partition_id, errors)
    return SimResult.from_counts(trials, errors, cfg.seed, cfg.mode, cfg.config_key)


def run_partitions(cfg: SimConfig, n_jobs: int | None = None) -> list[SimResult]:
    """One result per partition, in partition order."""
    jobs = get_n_jobs() if n_jobs is None else int(n_jobs)
    sizes = partition_sizes(cfg.trials, cfg.partitions)
    if jobs == 1 or len(sizes) == 1:
        return [_run_partition(cfg, pid, n) for pid, n in enumerate(sizes)]
    return list(Parallel(n_jobs=jobs)(delayed(_run_partition)(cfg, pid, n) for pid, n in enumerate(sizes)))


def run_model_faithful(cfg: SimConfig, n_jobs: int | None = None) -> SimResult:
    if cfg.mode is not SimMode.MODEL_FAITHFUL:
        raise ContractError("run_model_faithful needs mode=model_faithful")
    return merge(run_partitions(cfg, n_jobs))


def run_physical(cfg: SimConfig, n_jobs: int | None = None) -> SimResult:
    if cfg.mode is not SimMode.PHYSICAL:
        raise ContractError("run_physical needs mode=physical")
    return merge(run_partitions(cfg, n_jobs))


def run(cfg: SimConfig, n_jobs: int | None = None) -> SimResult:
    if cfg.mode is SimMode.PHYSICAL:
        return run_physical(cfg, n_jobs)
    return run_model_faithful(cfg, n_jobs)


def diversity_slope(snr_db, ser) -> float:
    """Least-squares slope of log10 SER against SNR in decades (-d for diversity d)."""
    x = np.asarray(snr_db, dtype=float) / 10.0
    y = np.asarray(ser, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise DomainError("diversity_slope needs two or more matching points")
    if np.any(~(y > 0)):
        raise DomainError("diversity_slope needs strictly positive SER values")
    slope, _ = np.polyfit(x, np.log10(y), 1)
    return float(slope)

"""
Average SER of the single-relay selective decode-and-forward network.

Per-link SER comes from the MGF form

    P = (a/π) ∫_0^{π/2} M(b / (2 sin²θ)) dθ - (c/π) ∫_0^{π/4} M(b / (2 sin²θ)) dθ

evaluated either by Gauss-Legendre quadrature (authoritative) or by the
Humbert Φ1 / Lauricella Φ1^(3) series obtained from the substitution
t = A / (A + bγ̄ / (2 sin²θ)), A = m(1+κ). With x0 = 2A/(2A+bγ̄),
z0 = A/(A+bγ̄), w0 = (2A+bγ̄)/(2A+2bγ̄) and β = bγ̄/(2A):

    I1 = (a/π) e^{-mκ} (√β/2) x0^{m+½} √π Γ(m+½)/Γ(m+1) Φ1(m+½, 1; m+1; x0, mκ x0)
    I2 = (c/π) e^{-mκ} (√β/2) z0^{m+½} Γ(m+½)/Γ(m+3/2) Φ1^(3)(m+½, 1, ½; m+3/2; z0, w0, mκ z0)

Commonly printed versions of these closed forms carry (mκ)^m instead of
e^{-mκ}, use x0 (resp. z0) as the confluent argument, take z0 as the second
Lauricella argument and use 3/2 for the Lauricella denominator parameter with
a Γ(m+½)√π/Γ(m+1) prefactor; none of those reproduce the MGF integral, see
DESIGN.md for the comparison.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import special

from services import kappa_mu
from services.kappa_mu import KappaMuParams
from services.modulation import ModulationParams, conditional_ser
from utils.errors import ContractError, ConvergenceError
from utils.specfun import DEFAULT_CONTROL, SeriesControl, SeriesResult, humbert_phi1, lauricella_phi1_3

logger = logging.getLogger(__name__)

QUAD_RTOL = 1e-10
QUAD_START_NODES = 64
QUAD_MAX_NODES = 1024
# Negative results smaller than this are rounding noise and clipped silently.
CLIP_TOLERANCE = 1e-12
# Clipped values per origin ("quadrature", "series"), for diagnostics.
CLIP_EVENTS: Counter[str] = Counter()

METHODS = ("quadrature", "series")

__all__ = [
    "LinkParams",
    "NetworkParams",
    "conditional_ser",
    "link_ser_quadrature",
    "link_ser_series",
    "link_ser",
    "coop_ser",
    "direct_ser",
    "compose_end_to_end",
    "end_to_end_ser",
]


@dataclass(frozen=True)
class LinkParams:
    """One hop; ``n_tx``/``n_rx`` are only required by the physical simulator."""

    fading: KappaMuParams
    n_tx: int | None = None
    n_rx: int | None = None

    def __post_init__(self) -> None:
        if (self.n_tx is None) != (self.n_rx is None):
            raise ContractError("n_tx and n_rx must be given together")
        if self.n_tx is not None:
            if self.n_tx < 1 or self.n_rx < 1:
                raise ContractError("antenna counts must be >= 1")
            if self.n_tx * self.n_rx != self.fading.antenna_product:
                raise ContractError(
                    f"antenna_product {self.fading.antenna_product} != {self.n_tx}x{self.n_rx}"
                )

    @classmethod
    def from_antennas(cls, kappa: float, mu: float, mean_snr: float, n_tx: int = 1, n_rx: int = 1) -> "LinkParams":
        fading = KappaMuParams(kappa=kappa, mu=mu, mean_snr=mean_snr, antenna_product=int(n_tx) * int(n_rx))
        return cls(fading=fading, n_tx=int(n_tx), n_rx=int(n_rx))

    @property
    def antennas(self) -> tuple[int, int]:
        if self.n_tx is None:
            if self.fading.antenna_product != 1:
                raise ContractError("antenna counts unknown for a multi-antenna link")
            return 1, 1
        return int(self.n_tx), int(self.n_rx)

    def with_mean_snr(self, mean_snr: float) -> "LinkParams":
        return replace(self, fading=self.fading.with_mean_snr(mean_snr))


@dataclass(frozen=True)
class NetworkParams:
    sr: LinkParams
    sd: LinkParams
    rd: LinkParams
    modulation: ModulationParams

    @classmethod
    def symmetric(
        cls,
        kappa: float,
        mu: float,
        mean_snr: float,
        modulation: ModulationParams,
        antennas: tuple[int, int, int] = (1, 1, 1),
    ) -> "NetworkParams":
        ns, nr, nd = (int(v) for v in antennas)
        return cls(
            sr=LinkParams.from_antennas(kappa, mu, mean_snr, ns, nr),
            sd=LinkParams.from_antennas(kappa, mu, mean_snr, ns, nd),
            rd=LinkParams.from_antennas(kappa, mu, mean_snr, nr, nd),
            modulation=modulation,
        )

    def with_mean_snr(self, mean_snr: float, offsets_db: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> "NetworkParams":
        sr_off, sd_off, rd_off = offsets_db
        return replace(
            self,
            sr=self.sr.with_mean_snr(mean_snr * 10.0 ** (sr_off / 10.0)),
            sd=self.sd.with_mean_snr(mean_snr * 10.0 ** (sd_off / 10.0)),
            rd=self.rd.with_mean_snr(mean_snr * 10.0 ** (rd_off / 10.0)),
        )


# ---------------------------------------------------------------------------
# MGF quadrature
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(int(n))


def _grading_power(shape: float) -> int:
    """Exponent p of θ = upper·u^p.

    Near θ = 0 the MGF integrand behaves like sin^{2m}θ; for small m that
    endpoint stalls Gauss-Legendre. In u the endpoint exponent becomes
    p(2m+1) - 1 >= 3.
    """
    return max(1, math.ceil(4.0 / (2.0 * shape + 1.0)))


def _angle_integral(fading: KappaMuParams, b: float, upper: float, n: int) -> float:
    nodes, weights = _legendre(n)
    power = _grading_power(fading.shape)
    u = 0.5 * (nodes + 1.0)
    theta = upper * u ** power
    jacobian = upper * power * u ** (power - 1)
    s = b / (2.0 * np.sin(theta) ** 2)
    return float(0.5 * np.dot(weights, jacobian * kappa_mu.mgf(fading, s)))


def _quadrature_estimate(link: LinkParams, mod: ModulationParams, n: int) -> float:
    value = mod.a / math.pi * _angle_integral(link.fading, mod.b, math.pi / 2.0, n)
    if mod.c:
        value -= mod.c / math.pi * _angle_integral(link.fading, mod.b, math.pi / 4.0, n)
    return value


def _clip_probability(value: float, origin: str) -> float:
    if value < 0.0:
        if value < -CLIP_TOLERANCE:
            CLIP_EVENTS[origin] += 1
            logger.debug("%s produced %.3e, clipped to 0 (%d so far)", origin, value, CLIP_EVENTS[origin])
        return 0.0
    return min(value, 1.0)


def link_ser_quadrature(
    link: LinkParams,
    mod: ModulationParams,
    *,
    rtol: float = QUAD_RTOL,
    start_nodes: int = QUAD_START_NODES,
    max_nodes: int = QUAD_MAX_NODES,
) -> float:
    n = int(start_nodes)
    previous = _quadrature_estimate(link, mod, n)
    while n < max_nodes:
        n *= 2
        current = _quadrature_estimate(link, mod, n)
        logger.debug("quadrature %d nodes: %.15e", n, current)
        if abs(current - previous) <= rtol * abs(current) or current == previous:
            return _clip_probability(current, "quadrature")
        previous = current
    raise ConvergenceError(
        "MGF quadrature did not settle",
        nodes=n,
        last=previous,
        kappa=link.fading.kappa,
        shape=link.fading.shape,
        mean_snr=link.fading.mean_snr,
    )


# ---------------------------------------------------------------------------
# Hypergeometric series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _SeriesArguments:
    m: float
    mk: float
    log_half_sqrt_beta: float
    x0: float
    z0: float
    w0: float
    y1: float
    y2: float


def _series_arguments(fading: KappaMuParams, b: float) -> _SeriesArguments:
    m = fading.shape
    big_a = m * (1.0 + fading.kappa)
    bg = b * fading.mean_snr
    x0 = 2.0 * big_a / (2.0 * big_a + bg)
    z0 = big_a / (big_a + bg)
    w0 = (2.0 * big_a + bg) / (2.0 * big_a + 2.0 * bg)
    return _SeriesArguments(
        m=m,
        mk=m * fading.kappa,
        log_half_sqrt_beta=0.5 * math.log(bg / (2.0 * big_a)) - math.log(2.0),
        x0=x0,
        z0=z0,
        w0=w0,
        y1=m * fading.kappa * x0,
        y2=m * fading.kappa * z0,
    )


def _series_i1(args: _SeriesArguments, a: float, ctl: SeriesControl) -> tuple[float, SeriesResult]:
    m = args.m
    phi = humbert_phi1(m + 0.5, 1.0, m + 1.0, args.x0, args.y1, ctl)
    log_prefactor = (
        math.log(a / math.pi)
        - args.mk
        + args.log_half_sqrt_beta
        + (m + 0.5) * math.log(args.x0)
        + 0.5 * math.log(math.pi)
        + special.gammaln(m + 0.5)
        - special.gammaln(m + 1.0)
    )
    return phi.sign * math.exp(log_prefactor + phi.log_abs), phi


def _series_i2(args: _SeriesArguments, c: float, ctl: SeriesControl) -> tuple[float, SeriesResult]:
    m = args.m
    phi = lauricella_phi1_3(m + 0.5, 1.0, 0.5, m + 1.5, args.z0, args.w0, args.y2, ctl)
    log_prefactor = (
        math.log(c / math.pi)
        - args.mk
        + args.log_half_sqrt_beta
        + (m + 0.5) * math.log(args.z0)
        + special.gammaln(m + 0.5)
        - special.gammaln(m + 1.5)
    )
    return phi.sign * math.exp(log_prefactor + phi.log_abs), phi


def link_ser_series(link: LinkParams, mod: ModulationParams, ctl: SeriesControl | None = None) -> SeriesResult:
    """Per-link SER from the Φ1 / Φ1^(3) series; check ``converged`` before trusting it."""
    ctl = ctl or DEFAULT_CONTROL
    args = _series_arguments(link.fading, mod.b)

    i1, phi1 = _series_i1(args, mod.a, ctl)
    converged = phi1.converged
    truncation = phi1.truncation
    value = i1
    if mod.c:
        i2, phi3 = _series_i2(args, mod.c, ctl)
        value -= i2
        converged = converged and phi3.converged
        truncation = truncation + phi3.truncation

    value = _clip_probability(value, "series")
    return SeriesResult(
        sign=1.0 if value > 0 else 0.0,
        log_abs=math.log(value) if value > 0 else -math.inf,
        converged=converged,
        truncation=truncation,
    )


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


def link_ser(
    link: LinkParams,
    mod: ModulationParams,
    method: str = "quadrature",
    ctl: SeriesControl | None = None,
) -> float:
    if method == "quadrature":
        return link_ser_quadrature(link, mod)
    if method == "series":
        try:
            result = link_ser_series(link, mod, ctl)
        except ConvergenceError as exc:
            logger.warning("series unusable (%s); falling back to quadrature", exc)
            return link_ser_quadrature(link, mod)
        if result.converged:
            return result.value
        logger.warning("series not converged (truncation %s); falling back to quadrature", result.truncation)
        return link_ser_quadrature(link, mod)
    raise ContractError(f"unknown evaluation method {method!r}; expected one of {METHODS}")


def coop_ser(net: NetworkParams, method: str = "quadrature", ctl: SeriesControl | None = None) -> float:
    """Cooperation-mode error: product of the S→D and R→D link SERs."""
    return link_ser(net.sd, net.modulation, method, ctl) * link_ser(net.rd, net.modulation, method, ctl)


def direct_ser(net: NetworkParams, method: str = "quadrature", ctl: SeriesControl | None = None) -> float:
    """Non-cooperative baseline (S→D only)."""
    return link_ser(net.sd, net.modulation, method, ctl)


def compose_end_to_end(p_sr: float, p_sd: float, p_coop: float) -> float:
    value = p_sr * p_sd + (1.0 - p_sr) * p_coop
    return min(max(value, 0.0), 1.0)


def end_to_end_ser(net: NetworkParams, method: str = "quadrature", ctl: SeriesControl | None = None) -> float:
    p_sr = link_ser(net.sr, net.modulation, method, ctl)
    p_sd = link_ser(net.sd, net.modulation, method, ctl)
    p_rd = link_ser(net.rd, net.modulation, method, ctl)
    return compose_end_to_end(p_sr, p_sd, p_sd * p_rd)

"""
κ-μ instantaneous-SNR distribution of an STBC link.

An orthogonal STBC turns an N_tx x N_rx hop into a scalar channel whose SNR is
proportional to the squared Frobenius norm of the channel matrix. With i.i.d.
κ-μ elements that norm is again κ-μ distributed with the cluster parameter
multiplied by the number of elements, so every formula here only sees the
effective shape m = mu * antenna_product.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, special, stats

from utils.errors import ContractError, DomainError
from utils.specfun import bessel_i_log

logger = logging.getLogger(__name__)

KAPPA_FLOOR = 1e-12
_QUAD_KW = dict(epsabs=1e-14, epsrel=1e-11, limit=400)
_POISSON_TAIL = 1e-17


@dataclass(frozen=True)
class KappaMuParams:
    kappa: float
    mu: float
    mean_snr: float
    antenna_product: int = 1

    def __post_init__(self) -> None:
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ContractError(f"kappa must be >= 0, got {self.kappa!r}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ContractError(f"mu must be > 0, got {self.mu!r}")
        if not (self.mean_snr > 0 and math.isfinite(self.mean_snr)):
            raise ContractError(f"mean_snr must be > 0, got {self.mean_snr!r}")
        if int(self.antenna_product) != self.antenna_product or self.antenna_product < 1:
            raise ContractError(f"antenna_product must be a positive integer, got {self.antenna_product!r}")

    @property
    def shape(self) -> float:
        return float(self.mu) * int(self.antenna_product)

    @property
    def is_nakagami(self) -> bool:
        return self.kappa < KAPPA_FLOOR

    @property
    def rate(self) -> float:
        """m(1+κ)/γ̄: inverse scale of the Gamma components of the mixture."""
        return self.shape * (1.0 + self.kappa) / self.mean_snr

    def with_mean_snr(self, mean_snr: float) -> "KappaMuParams":
        return replace(self, mean_snr=float(mean_snr))

    def per_element(self) -> "KappaMuParams":
        """Unit-mean-power parameters of one channel coefficient."""
        return replace(self, mean_snr=1.0, antenna_product=1)


# ---------------------------------------------------------------------------
# Density and transforms
# ---------------------------------------------------------------------------


def _log_pdf_mixture(p: KappaMuParams, g: np.ndarray) -> np.ndarray:
    # Poisson(mκ)-weighted Gamma(m+k) densities; used for shapes below the
    # Bessel order range (m < 1/2).
    m = p.shape
    lam = m * p.kappa
    k_max = int(stats.poisson.isf(_POISSON_TAIL, lam)) + 1
    k = np.arange(k_max + 1, dtype=float)[:, None]
    log_w = stats.poisson.logpmf(k, lam)
    log_g = stats.gamma.logpdf(g[None, :], a=m + k, scale=1.0 / p.rate)
    return special.logsumexp(log_w + log_g, axis=0)


def log_pdf(p: KappaMuParams, gamma):
    scalar = np.ndim(gamma) == 0
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(~(g > 0)):
        raise DomainError("pdf requires gamma > 0")

    m = p.shape
    if p.is_nakagami:
        out = stats.gamma.logpdf(g, a=m, scale=p.mean_snr / m)
    elif m - 1.0 < -0.5:
        out = _log_pdf_mixture(p, g)
    else:
        k = p.kappa
        gb = p.mean_snr
        arg = 2.0 * m * np.sqrt(k * (1.0 + k) * g / gb)
        out = (
            math.log(m)
            + 0.5 * (m + 1.0) * math.log1p(k)
            - 0.5 * (m - 1.0) * math.log(k)
            - m * k
            - 0.5 * (m + 1.0) * math.log(gb)
            + 0.5 * (m - 1.0) * np.log(g)
            - m * (1.0 + k) * g / gb
            + bessel_i_log(m - 1.0, arg)
        )
    return float(out[0]) if scalar else out


def pdf(p: KappaMuParams, gamma):
    values = np.exp(log_pdf(p, gamma))
    return float(values) if np.ndim(values) == 0 else values


def mgf(p: KappaMuParams, s):
    """Closed-form E[exp(-s γ)]."""
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0):
        raise DomainError("mgf requires s >= 0")

    m = p.shape
    a = m * (1.0 + p.kappa)
    denom = a + s * p.mean_snr
    log_m = m * (np.log(a) - np.log(denom)) - m * p.kappa * s * p.mean_snr / denom
    values = np.exp(log_m)
    return float(values[0]) if scalar else values


def variance(p: KappaMuParams) -> float:
    return p.mean_snr ** 2 * (1.0 + 2.0 * p.kappa) / (p.shape * (1.0 + p.kappa) ** 2)


# ---------------------------------------------------------------------------
# Numeric CDF and moments
# ---------------------------------------------------------------------------


def _breakpoints(p: KappaMuParams, upper: float) -> list[float]:
    sd = math.sqrt(variance(p))
    candidates = [p.mean_snr - 3.0 * sd, p.mean_snr, p.mean_snr + 3.0 * sd, p.mean_snr + 12.0 * sd]
    return sorted({c for c in candidates if 0.0 < c < upper})


def _integrate(func, p: KappaMuParams, lower: float, upper: float) -> float:
    """Adaptive quadrature of a density-weighted integrand on [lower, upper]."""
    if upper <= lower:
        return 0.0
    if math.isinf(upper):
        split = p.mean_snr + 12.0 * math.sqrt(variance(p))
        if split <= lower:
            value, _ = integrate.quad(func, lower, np.inf, **_QUAD_KW)
            return float(value)
        return _integrate(func, p, lower, split) + float(integrate.quad(func, split, np.inf, **_QUAD_KW)[0])

    points = [b for b in _breakpoints(p, upper) if b > lower]
    value, _ = integrate.quad(func, lower, upper, points=points or None, **_QUAD_KW)
    return float(value)


def _pdf_or_zero(p: KappaMuParams):
    def _f(g: float) -> float:
        return pdf(p, g) if g > 0 else 0.0

    return _f


def cdf_numeric(p: KappaMuParams, gamma):
    """P(γ <= gamma) by adaptive quadrature of the density.

    Array input is integrated segment by segment over the sorted points so the
    result is monotone by construction.
    """
    scalar = np.ndim(gamma) == 0
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise DomainError("cdf_numeric requires gamma >= 0")

    f = _pdf_or_zero(p)
    order = np.argsort(g, kind="stable")
    out = np.empty_like(g)
    acc = 0.0
    prev = 0.0
    for idx in order:
        cur = float(g[idx])
        if cur > prev:
            acc += _integrate(f, p, prev, cur)
            prev = cur
        out[idx] = min(max(acc, 0.0), 1.0)
    return float(out[0]) if scalar else out


def moment_numeric(p: KappaMuParams, order: int = 1) -> float:
    f = _pdf_or_zero(p)
    return _integrate(lambda g: g ** order * f(g), p, 0.0, np.inf)


def laplace_numeric(p: KappaMuParams, s: float) -> float:
    """Numeric Laplace transform of the density, the oracle for :func:`mgf`."""
    f = _pdf_or_zero(p)
    return _integrate(lambda g: math.exp(-s * g) * f(g), p, 0.0, np.inf)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def sample_snr(p: KappaMuParams, rng: np.random.Generator, size=None):
    """Exact draws of γ through the Poisson-Gamma mixture.

    Each cluster power is a scaled noncentral chi-squared variable; summing
    them gives P ~ Poisson(mκ), G ~ Gamma(m + P, 1) and γ = γ̄ G / (m(1+κ)),
    which is valid for non-integer m as well.
    """
    m = p.shape
    counts = rng.poisson(m * p.kappa, size=size)
    draws = rng.standard_gamma(m + counts, size=size)
    return draws / p.rate


def sample_envelope(p: KappaMuParams, rng: np.random.Generator, size=None):
    """(magnitude, phase) of one unit-mean-power channel coefficient."""
    if int(p.antenna_product) != 1:
        raise ContractError("sample_envelope draws single coefficients; antenna_product must be 1")
    power = sample_snr(p.per_element(), rng, size=size)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=size)
    return np.sqrt(power), phase


def sample_coefficients(p: KappaMuParams, rng: np.random.Generator, size=None):
    """Complex channel coefficients built from :func:`sample_envelope`."""
    magnitude, phase = sample_envelope(replace(p, antenna_product=1), rng, size=size)
    return magnitude * np.exp(1j * phase)

"""
Scalar special functions used by the κ-μ density and the SER series.

Every hypergeometric term is evaluated as sign + log-magnitude and summed
with a max-shifted accumulation (``scipy.special.logsumexp``), so Pochhammer
ratios with large effective shapes do not overflow.

Pochhammer note: the closed forms for I1/I2 are usually printed next to a
"descending factorial" definition, Γ(x+1)/Γ(x-n+1). The double and triple
series only reproduce their integral definitions with the RISING symbol
(x)_n = Γ(x+n)/Γ(x), which is what this module implements.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from utils.errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

_LOG_SQRT_2 = 0.5 * math.log(2.0)
_IVE_FLOOR = 1e-290
_BESSEL_SERIES_TERMS = 80
# Width (in standard deviations) of the hump of an exponential-argument axis.
_CONFLUENT_SPREAD = 6.0


@dataclass(frozen=True)
class SeriesControl:
    max_terms_per_index: int = 60
    rel_tol: float = 1e-12
    term_floor: float = math.exp(-745)
    patience: int = 3

    def __post_init__(self) -> None:
        if int(self.max_terms_per_index) < 1:
            raise DomainError("max_terms_per_index must be >= 1")
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be > 0")
        if not self.term_floor > 0:
            raise DomainError("term_floor must be > 0")
        if int(self.patience) < 1:
            raise DomainError("patience must be >= 1")

    def power_budget(self, arg: float) -> int:
        """Number of terms for an axis whose terms scale like arg**k."""
        return 1 if arg == 0 else int(self.max_terms_per_index)

    def confluent_budget(self, arg: float) -> int:
        """Number of terms for an axis whose terms scale like arg**k / k!.

        Those terms grow until k ~ |arg| before decaying, so the budget starts
        counting past the hump.
        """
        if arg == 0:
            return 1
        z = abs(float(arg))
        hump = math.ceil(z + _CONFLUENT_SPREAD * math.sqrt(z))
        return int(self.max_terms_per_index) + hump


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class SeriesResult:
    """Outcome of a truncated multiple series.

    ``truncation`` holds, per summation index, how many terms were kept.
    """

    sign: float
    log_abs: float
    converged: bool
    truncation: tuple[int, ...]

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return float(self.sign * math.exp(self.log_abs))

    def __float__(self) -> float:
        return self.value


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------


def log_gamma(x: float) -> float:
    x = float(x)
    if not x > 0 or math.isnan(x):
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return float(special.gammaln(x))


def rising_factorial(x: float, n: int) -> tuple[float, float]:
    """(x)_n as (sign, ln|value|). A zero value is returned as (0.0, -inf)."""
    n = int(n)
    if n < 0:
        raise DomainError(f"rising_factorial requires n >= 0, got {n}")
    if n == 0:
        return 1.0, 0.0
    x = float(x)
    if x > 0:
        return 1.0, float(special.gammaln(x + n) - special.gammaln(x))

    # Product form: x may sit on (or walk through) a pole of Γ.
    sign = 1.0
    log_mag = 0.0
    for k in range(n):
        factor = x + k
        if factor == 0:
            return 0.0, -math.inf
        if factor < 0:
            sign = -sign
        log_mag += math.log(abs(factor))
    return sign, log_mag


def _log_pochhammer(x: float, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised rising factorial over an integer index array."""
    n = np.asarray(n, dtype=float)
    if x > 0:
        return np.ones_like(n), special.gammaln(x + n) - special.gammaln(x)

    if float(x).is_integer():
        # (x)_n vanishes once the product reaches zero.
        table = [rising_factorial(x, k) for k in range(int(n.max()) + 1)]
        signs = np.array([s for s, _ in table])
        logs = np.array([lm for _, lm in table])
        idx = n.astype(int)
        return signs[idx], logs[idx]

    sign = special.gammasgn(x + n) * special.gammasgn(x)
    return sign, special.gammaln(x + n) - special.gammaln(x)


def _check_denominator(c: float) -> None:
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"c must not be a non-positive integer, got {c!r}")


# ---------------------------------------------------------------------------
# Bessel and Gaussian tail
# ---------------------------------------------------------------------------


def _bessel_i_log_series(nu: float, x: np.ndarray) -> np.ndarray:
    k = np.arange(_BESSEL_SERIES_TERMS, dtype=float)[:, None]
    log_half = np.log(x / 2.0)[None, :]
    terms = (2.0 * k + nu) * log_half - special.gammaln(k + 1.0) - special.gammaln(k + nu + 1.0)
    return special.logsumexp(terms, axis=0)


def bessel_i_log(nu: float, x):
    """ln I_nu(x) for nu >= -0.5 and x >= 0 (scalar or array x).

    The exponentially scaled ``scipy.special.ive`` covers the bulk of the
    domain; where it underflows (large order, small argument) the ascending
    series is summed in log space.
    """
    nu = float(nu)
    if nu < -0.5:
        raise DomainError(f"bessel_i_log requires nu >= -0.5, got {nu!r}")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0) or np.any(np.isnan(xs)):
        raise DomainError("bessel_i_log requires x >= 0")

    out = np.empty_like(xs)
    zero = xs == 0
    if nu == 0:
        out[zero] = 0.0
    elif nu > 0:
        out[zero] = -np.inf
    else:
        out[zero] = np.inf

    pos = ~zero
    if np.any(pos):
        xp = xs[pos]
        scaled = special.ive(nu, xp)
        ok = np.isfinite(scaled) & (scaled > _IVE_FLOOR)
        vals = np.empty_like(xp)
        with np.errstate(divide="ignore"):
            vals[ok] = np.log(scaled[ok]) + xp[ok]
        if np.any(~ok):
            vals[~ok] = _bessel_i_log_series(nu, xp[~ok])
        out[pos] = vals

    return float(out[0]) if scalar else out


def gaussian_q(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    values = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(values) if np.ndim(values) == 0 else values


# ---------------------------------------------------------------------------
# Multiple hypergeometric series
# ---------------------------------------------------------------------------


def _signed_power(k: np.ndarray, arg: float) -> tuple[np.ndarray, np.ndarray]:
    log_mag = special.xlogy(k, abs(arg))
    if arg < 0:
        sign = np.where(np.mod(k, 2) == 1, -1.0, 1.0)
    else:
        sign = np.ones_like(log_mag)
    return sign, log_mag


def _first_quiet_index(slice_max: np.ndarray, threshold: float, patience: int) -> int | None:
    """Index where ``patience`` consecutive slices past the peak sit below threshold."""
    peak = int(np.argmax(slice_max)) if np.any(np.isfinite(slice_max)) else 0
    run = 0
    for i in range(peak + 1, slice_max.size):
        if slice_max[i] < threshold:
            run += 1
            if run >= patience:
                return i + 1
        else:
            run = 0
    return None


def _truncated_sum(log_terms: np.ndarray, signs: np.ndarray, ctl: SeriesControl) -> SeriesResult:
    log_terms = np.where(log_terms < math.log(ctl.term_floor), -np.inf, log_terms)
    signs = np.where(np.isfinite(log_terms), signs, 0.0)

    scale = special.logsumexp(log_terms)
    if not np.isfinite(scale):
        return SeriesResult(sign=0.0, log_abs=-math.inf, converged=True, truncation=(1,) * log_terms.ndim)
    threshold = math.log(ctl.rel_tol) + scale

    keep: list[int] = []
    converged = True
    for axis in range(log_terms.ndim):
        others = tuple(a for a in range(log_terms.ndim) if a != axis)
        slice_max = log_terms.max(axis=others) if others else log_terms
        stop = _first_quiet_index(slice_max, threshold, ctl.patience)
        if slice_max.size == 1:
            stop = 1
        if stop is None:
            converged = False
            stop = slice_max.size
        keep.append(int(stop))

    box = tuple(slice(0, k) for k in keep)
    log_abs, sign = special.logsumexp(log_terms[box], b=signs[box], return_sign=True)
    if not converged:
        logger.info("series did not converge within budget (kept terms per index: %s)", keep)
    return SeriesResult(
        sign=float(sign) if np.isfinite(log_abs) else 0.0,
        log_abs=float(log_abs),
        converged=converged,
        truncation=tuple(keep),
    )


def humbert_phi1(a: float, b: float, c: float, x: float, y: float, ctl: SeriesControl | None = None) -> SeriesResult:
    """Humbert Φ1(a, b; c; x, y) = ΣΣ (a)_{j+n} (b)_j x^j y^n / ((c)_{j+n} j! n!)."""
    ctl = ctl or DEFAULT_CONTROL
    if abs(x) >= 1:
        raise ConvergenceError("humbert_phi1 requires |x| < 1", x=x)
    _check_denominator(c)

    j = np.arange(ctl.power_budget(x), dtype=float)[:, None]
    n = np.arange(ctl.confluent_budget(y), dtype=float)[None, :]
    k = j + n

    s_a, l_a = _log_pochhammer(a, k)
    s_b, l_b = _log_pochhammer(b, j)
    s_c, l_c = _log_pochhammer(c, k)
    s_x, l_x = _signed_power(j, x)
    s_y, l_y = _signed_power(n, y)

    log_terms = l_a + l_b - l_c + l_x + l_y - special.gammaln(j + 1.0) - special.gammaln(n + 1.0)
    signs = s_a * s_b * s_c * s_x * s_y
    return _truncated_sum(log_terms, signs, ctl)


def lauricella_phi1_3(
    a: float,
    b1: float,
    b2: float,
    c: float,
    x: float,
    y: float,
    z: float,
    ctl: SeriesControl | None = None,
) -> SeriesResult:
    """Confluent Lauricella Φ1^(3)(a, b1, b2; c; x, y, z), a triple series."""
    ctl = ctl or DEFAULT_CONTROL
    if abs(x) >= 1 or abs(y) >= 1:
        raise ConvergenceError("lauricella_phi1_3 requires |x| < 1 and |y| < 1", x=x, y=y)
    _check_denominator(c)

    j = np.arange(ctl.power_budget(x), dtype=float)[:, None, None]
    n = np.arange(ctl.power_budget(y), dtype=float)[None, :, None]
    p = np.arange(ctl.confluent_budget(z), dtype=float)[None, None, :]
    k = j + n + p

    s_a, l_a = _log_pochhammer(a, k)
    s_b1, l_b1 = _log_pochhammer(b1, j)
    s_b2, l_b2 = _log_pochhammer(b2, n)
    s_c, l_c = _log_pochhammer(c, k)
    s_x, l_x = _signed_power(j, x)
    s_y, l_y = _signed_power(n, y)
    s_z, l_z = _signed_power(p, z)

    log_terms = (
        l_a + l_b1 + l_b2 - l_c + l_x + l_y + l_z
        - special.gammaln(j + 1.0) - special.gammaln(n + 1.0) - special.gammaln(p + 1.0)
    )
    signs = s_a * s_b1 * s_b2 * s_c * s_x * s_y * s_z
    return _truncated_sum(log_terms, signs, ctl)

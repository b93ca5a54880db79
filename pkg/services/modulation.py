from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from utils.errors import ContractError, UsageError
from utils.specfun import gaussian_q


class Scheme(str, Enum):
    BPSK = "bpsk"
    BFSK = "bfsk"
    MPSK = "mpsk"
    MPAM = "mpam"
    QPSK = "qpsk"
    DPSK = "dpsk"  # coherent detection of differentially encoded PSK
    MQAM = "mqam"


# Schemes whose conditional SER is a single Q term (c = 0).
SINGLE_Q_SCHEMES = frozenset({Scheme.BPSK, Scheme.BFSK, Scheme.MPSK, Scheme.MPAM})

_FIXED_ORDER = {Scheme.BPSK: 2, Scheme.BFSK: 2, Scheme.QPSK: 4, Scheme.DPSK: 2}


def _is_power_of_two(m: int) -> bool:
    return m >= 2 and (m & (m - 1)) == 0


def _table_row(scheme: Scheme, order: int) -> tuple[float, float, float]:
    """(a, b, c) of the conditional SER a Q(sqrt(b γ)) - c Q²(sqrt(b γ))."""
    if scheme is Scheme.BPSK:
        return 1.0, 2.0, 0.0
    if scheme is Scheme.BFSK:
        return 1.0, 1.0, 0.0
    if scheme is Scheme.MPSK:
        return 2.0, 2.0 * math.sin(math.pi / order) ** 2, 0.0
    if scheme is Scheme.MPAM:
        return 2.0 * (order - 1) / order, 6.0 / (order ** 2 - 1), 0.0
    if scheme is Scheme.QPSK:
        return 2.0, 2.0, 1.0
    if scheme is Scheme.DPSK:
        return 2.0, 2.0, 2.0
    root = math.sqrt(order)
    ratio = (root - 1.0) / root
    return 4.0 * ratio, 3.0 / (order - 1), 4.0 * ratio ** 2


@dataclass(frozen=True)
class ModulationParams:
    scheme: Scheme
    M: int
    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if self.b <= 0:
            raise ContractError("modulation parameter b must be > 0")
        if self.c < 0:
            raise ContractError("modulation parameter c must be >= 0")
        single = self.scheme in SINGLE_Q_SCHEMES
        if single and self.c != 0:
            raise ContractError(f"{self.scheme.value} has c = 0")
        if not single and self.c <= 0:
            raise ContractError(f"{self.scheme.value} has c > 0")

    @classmethod
    def from_scheme(cls, scheme: Scheme | str, M: int | None = None) -> "ModulationParams":
        scheme = Scheme(scheme)
        order = _FIXED_ORDER.get(scheme)
        if order is None:
            if M is None:
                raise ContractError(f"{scheme.value} needs a constellation size M")
            order = int(M)
            if not _is_power_of_two(order):
                raise ContractError(f"M must be a power of two >= 2, got {M!r}")
            if scheme is Scheme.MQAM and math.isqrt(order) ** 2 != order:
                raise ContractError(f"M-QAM needs a square constellation, got M={order}")
        elif M is not None and int(M) != order:
            raise ContractError(f"{scheme.value} has M={order}, got M={M}")
        a, b, c = _table_row(scheme, order)
        return cls(scheme=scheme, M=order, a=a, b=b, c=c)

    @property
    def label(self) -> str:
        if self.scheme in (Scheme.MPSK, Scheme.MPAM, Scheme.MQAM):
            return f"{self.M}-{self.scheme.value[1:].upper()}"
        return self.scheme.value.upper()


_NAME_RE = re.compile(r"^(?P<order>\d+)?-?(?P<name>[a-z]+)$")
_ALIASES = {"psk": Scheme.MPSK, "pam": Scheme.MPAM, "qam": Scheme.MQAM}


def parse_modulation(text: str) -> ModulationParams:
    """Parse CLI names such as ``bpsk``, ``qpsk``, ``4qam``, ``8-psk``, ``16pam``."""
    raw = str(text or "").strip().lower()
    match = _NAME_RE.match(raw)
    if match is None:
        raise UsageError(f"unrecognised modulation {text!r}")
    name = match.group("name")
    order = match.group("order")
    try:
        if name in _ALIASES:
            if order is None:
                raise UsageError(f"{text!r}: give a constellation size, e.g. 4{name}")
            return ModulationParams.from_scheme(_ALIASES[name], int(order))
        scheme = Scheme(name)
        return ModulationParams.from_scheme(scheme, int(order) if order else None)
    except ValueError as exc:
        raise UsageError(f"unrecognised modulation {text!r}: {exc}") from exc


def conditional_ser(mod: ModulationParams, gamma):
    """a Q(sqrt(b γ)) - c Q²(sqrt(b γ)) for an instantaneous SNR γ >= 0."""
    g = np.asarray(gamma, dtype=float)
    q = np.asarray(gaussian_q(np.sqrt(mod.b * np.maximum(g, 0.0))))
    values = np.clip(mod.a * q - mod.c * q * q, 0.0, 1.0)
    return float(values) if values.ndim == 0 else values

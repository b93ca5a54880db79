import math

import numpy as np
import pytest

from services.modulation import ModulationParams, Scheme, conditional_ser, parse_modulation
from utils.errors import ContractError, UsageError


def test_table_rows():
    bpsk = ModulationParams.from_scheme("bpsk")
    assert (bpsk.a, bpsk.b, bpsk.c, bpsk.M) == (1.0, 2.0, 0.0, 2)

    qpsk = ModulationParams.from_scheme(Scheme.QPSK)
    assert (qpsk.a, qpsk.b, qpsk.c) == (2.0, 2.0, 1.0)

    qam4 = ModulationParams.from_scheme(Scheme.MQAM, 4)
    assert (qam4.a, qam4.b, qam4.c) == pytest.approx((2.0, 1.0, 1.0))

    qam16 = ModulationParams.from_scheme(Scheme.MQAM, 16)
    assert (qam16.a, qam16.b, qam16.c) == pytest.approx((3.0, 0.2, 2.25))

    psk8 = ModulationParams.from_scheme(Scheme.MPSK, 8)
    assert psk8.b == pytest.approx(2.0 * math.sin(math.pi / 8) ** 2)

    pam4 = ModulationParams.from_scheme(Scheme.MPAM, 4)
    assert (pam4.a, pam4.b) == pytest.approx((1.5, 0.4))

    assert ModulationParams.from_scheme(Scheme.BFSK).b == 1.0
    assert ModulationParams.from_scheme(Scheme.DPSK).c == 2.0


@pytest.mark.parametrize(
    "scheme,order",
    [(Scheme.MQAM, 8), (Scheme.MPSK, 6), (Scheme.MPAM, 1), (Scheme.MQAM, None), (Scheme.QPSK, 8)],
)
def test_invalid_orders(scheme, order):
    with pytest.raises(ContractError):
        ModulationParams.from_scheme(scheme, order)


def test_c_must_match_scheme_family():
    with pytest.raises(ContractError):
        ModulationParams(Scheme.BPSK, 2, 1.0, 2.0, 0.5)
    with pytest.raises(ContractError):
        ModulationParams(Scheme.QPSK, 4, 2.0, 2.0, 0.0)
    with pytest.raises(ContractError):
        ModulationParams(Scheme.BPSK, 2, 1.0, 0.0, 0.0)


@pytest.mark.parametrize(
    "text,label",
    [("bpsk", "BPSK"), ("QPSK", "QPSK"), ("4qam", "4-QAM"), ("16-QAM", "16-QAM"), ("8psk", "8-PSK"), ("4pam", "4-PAM"), ("dpsk", "DPSK")],
)
def test_parse_modulation(text, label):
    assert parse_modulation(text).label == label


@pytest.mark.parametrize("text", ["", "qam", "ofdm", "12qam", "4-", "3psk"])
def test_parse_modulation_rejects(text):
    with pytest.raises(UsageError):
        parse_modulation(text)


def test_conditional_ser_at_zero():
    assert conditional_ser(ModulationParams.from_scheme("bpsk"), 0.0) == pytest.approx(0.5)
    assert conditional_ser(ModulationParams.from_scheme("qpsk"), 0.0) == pytest.approx(0.75)


@pytest.mark.parametrize("text", ["bpsk", "bfsk", "qpsk", "dpsk", "8psk", "4pam", "4qam", "64qam"])
def test_conditional_ser_is_a_decreasing_probability(text):
    mod = parse_modulation(text)
    values = conditional_ser(mod, np.linspace(0.0, 50.0, 200))
    assert np.all((values >= 0.0) & (values <= 1.0))
    assert np.all(np.diff(values) <= 0.0)

import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from services import montecarlo, ser_engine
from services.modulation import ModulationParams, Scheme
from services.montecarlo import SimConfig, SimMode, SimResult, diversity_slope, merge, wilson_interval
from services.ser_engine import LinkParams, NetworkParams
from utils.errors import ContractError, DomainError

BPSK = ModulationParams.from_scheme(Scheme.BPSK)
QPSK = ModulationParams.from_scheme(Scheme.QPSK)
QAM4 = ModulationParams.from_scheme(Scheme.MQAM, 4)


def _db(value):
    return 10.0 ** (value / 10.0)


def _single_link(kappa, mu, mean_snr, mod, n_tx=1):
    """Network whose S-D hop is the link under test (relay disabled in the configs)."""
    return NetworkParams.symmetric(kappa, mu, mean_snr, mod, antennas=(n_tx, 1, 1))


# ---------------------------------------------------------------------------
# Bookkeeping
# ---------------------------------------------------------------------------


def test_wilson_interval_brackets_estimate():
    low, high = wilson_interval(50, 1000)
    assert low < 0.05 < high
    z2 = stats.norm.ppf(0.995) ** 2
    low, high = wilson_interval(0, 100)
    assert low == 0.0
    assert high == pytest.approx(z2 / (100 + z2))
    low, high = wilson_interval(100, 100)
    assert high == 1.0 and low < 1.0


def test_wilson_interval_rejects_bad_counts():
    with pytest.raises(ContractError):
        wilson_interval(5, 0)
    with pytest.raises(ContractError):
        wilson_interval(11, 10)


def test_partition_sizes():
    assert montecarlo.partition_sizes(10, 3) == [4, 3, 3]
    assert sum(montecarlo.partition_sizes(1_000_003, 8)) == 1_000_003


def test_sim_config_validation():
    net = NetworkParams.symmetric(1.0, 1.0, 10.0, QPSK)
    with pytest.raises(ContractError):
        SimConfig(net, trials=0)
    with pytest.raises(ContractError):
        SimConfig(net, trials=10, partitions=11)
    with pytest.raises(ContractError):
        SimConfig(net, seed=-1)


def test_physical_mode_limits():
    qam16 = ModulationParams.from_scheme(Scheme.MQAM, 16)
    with pytest.raises(ContractError):
        SimConfig(NetworkParams.symmetric(1.0, 1.0, 10.0, qam16), mode=SimMode.PHYSICAL)
    with pytest.raises(ContractError):
        SimConfig(NetworkParams.symmetric(1.0, 1.0, 10.0, QPSK, antennas=(4, 1, 1)), mode="physical")

    net = NetworkParams.symmetric(1.0, 1.0, 10.0, QPSK, antennas=(2, 1, 1))
    broken = replace(net, rd=LinkParams.from_antennas(1.0, 1.0, 10.0, 2, 1))
    with pytest.raises(ContractError):
        SimConfig(broken, mode=SimMode.PHYSICAL)

    # links without explicit antenna counts are single-antenna hops
    fading = ser_engine.KappaMuParams(1.0, 1.0, 10.0)
    bare = NetworkParams(LinkParams(fading), LinkParams(fading), LinkParams(fading), BPSK)
    assert SimConfig(bare, mode=SimMode.PHYSICAL).mode is SimMode.PHYSICAL


def test_runner_checks_mode():
    net = NetworkParams.symmetric(1.0, 1.0, 10.0, QPSK)
    with pytest.raises(ContractError):
        montecarlo.run_physical(SimConfig(net, trials=10))
    with pytest.raises(ContractError):
        montecarlo.run_model_faithful(SimConfig(net, mode=SimMode.PHYSICAL, trials=10))


def _result(trials, errors, key="k", mode=SimMode.MODEL_FAITHFUL, seed=1):
    return SimResult.from_counts(trials, errors, seed, mode, key)


def test_merge_single_result_is_identity():
    one = _result(1000, 17)
    assert merge([one]) is one


def test_merge_pools_counts():
    parts = [_result(250, e) for e in (3, 5, 0, 9)]
    pooled = merge(parts)
    assert pooled.trials == 1000
    assert pooled.errors == 17
    assert pooled.ser == pytest.approx(17 / 1000)
    assert (pooled.ci99_low, pooled.ci99_high) == pytest.approx(wilson_interval(17, 1000))
    assert pooled.seed == 1


def test_merge_rejects_mixed_configurations():
    with pytest.raises(ContractError):
        merge([_result(100, 1, key="a"), _result(100, 1, key="b")])
    with pytest.raises(ContractError):
        merge([_result(100, 1), _result(100, 1, mode=SimMode.PHYSICAL)])
    with pytest.raises(ContractError):
        merge([])


def test_merge_of_replicates_drops_seed():
    assert merge([_result(100, 1, seed=1), _result(100, 2, seed=2)]).seed is None


def test_sim_result_invariants():
    with pytest.raises(ContractError):
        SimResult(10, 11, 1.1, 0.0, 1.0, 0, SimMode.MODEL_FAITHFUL)
    with pytest.raises(ContractError):
        SimResult(10, 5, 0.5, 0.6, 0.9, 0, SimMode.MODEL_FAITHFUL)


# ---------------------------------------------------------------------------
# Model-faithful mode
# ---------------------------------------------------------------------------


def test_model_faithful_is_deterministic():
    net = NetworkParams.symmetric(1.0, 1.0, 10.0, QPSK)
    cfg = SimConfig(net, trials=200_000, seed=42, partitions=4)
    first = montecarlo.run(cfg, n_jobs=1)
    again = montecarlo.run(cfg, n_jobs=1)
    assert first == again
    assert first.trials == 200_000
    assert first.seed == 42


def test_model_faithful_independent_of_worker_count():
    net = NetworkParams.symmetric(1.0, 1.0, 10.0, QPSK)
    cfg = SimConfig(net, trials=40_000, seed=3, partitions=4)
    assert montecarlo.run(cfg, n_jobs=1) == montecarlo.run(cfg, n_jobs=2)


def test_model_faithful_matches_analytical_example():
    net = NetworkParams.symmetric(1.0, 1.0, 10.0, QPSK)
    result = montecarlo.run_model_faithful(SimConfig(net, trials=1_000_000, seed=7), n_jobs=1)
    assert result.contains(ser_engine.end_to_end_ser(net))


def test_huge_snr_gives_no_errors():
    net = NetworkParams.symmetric(1.0, 1.0, 1e12, QPSK)
    result = montecarlo.run(SimConfig(net, trials=100_000, seed=1), n_jobs=1)
    assert result.errors == 0
    assert result.ci99_low == 0.0


def test_relay_hook_gives_direct_link():
    net = NetworkParams.symmetric(1.0, 1.0, 5.0, QPSK)
    result = montecarlo.run(SimConfig(net, trials=300_000, seed=5, relay_enabled=False), n_jobs=1)
    assert result.contains(ser_engine.direct_ser(net))


def test_partitions_behave_like_binomial_draws():
    net = NetworkParams.symmetric(1.0, 1.0, 5.0, QPSK)
    cfg = SimConfig(net, trials=200_000, seed=11, partitions=40)
    parts = montecarlo.run_partitions(cfg, n_jobs=1)
    expected = ser_engine.end_to_end_ser(net)
    counts = np.array([p.errors for p in parts])
    assert all(p.trials == 5000 for p in parts)
    assert stats.kstest(counts, stats.binom(5000, expected).cdf).pvalue > 1e-3
    assert merge(parts).errors == counts.sum()


@pytest.mark.slow
def test_model_faithful_grid_within_confidence_interval():
    hits = 0
    cells = 0
    for mod in (QPSK, QAM4):
        for kappa, mu in ((1.0, 1.0), (2.0, 1.5)):
            for snr_db in (5.0, 10.0, 15.0):
                net = NetworkParams.symmetric(kappa, mu, _db(snr_db), mod)
                result = montecarlo.run(SimConfig(net, trials=1_000_000, seed=1000 + cells, partitions=4), n_jobs=1)
                hits += result.contains(ser_engine.end_to_end_ser(net))
                cells += 1
    assert cells == 12
    assert hits >= 11


# ---------------------------------------------------------------------------
# Physical mode
# ---------------------------------------------------------------------------


def test_symbol_energy_scale():
    assert montecarlo.symbol_energy_scale(BPSK) == 1.0
    assert montecarlo.symbol_energy_scale(QPSK) == 2.0
    assert montecarlo.symbol_energy_scale(QAM4) == 1.0


def test_alamouti_combining_recovers_symbols_without_noise():
    rng = np.random.default_rng(0)
    channel = rng.standard_normal((5, 2, 2)) + 1j * rng.standard_normal((5, 2, 2))
    symbols = (rng.choice([-1.0, 1.0], (5, 2)) + 1j * rng.choice([-1.0, 1.0], (5, 2))) / math.sqrt(2.0)
    received = channel @ montecarlo._stbc_encode(symbols, 2)
    combined = montecarlo._stbc_combine(channel, received)
    gain = np.sum(np.abs(channel) ** 2, axis=(1, 2))[:, None] / math.sqrt(2.0)
    np.testing.assert_allclose(combined, gain * symbols, atol=1e-12)


@pytest.mark.parametrize("mod,mean_snr", [(BPSK, 1.0), (QPSK, 5.0), (QAM4, 5.0)])
def test_physical_single_link_matches_quadrature(mod, mean_snr):
    net = _single_link(1e-12, 1.0, mean_snr, mod)
    cfg = SimConfig(net, mode=SimMode.PHYSICAL, trials=200_000, seed=21, relay_enabled=False)
    result = montecarlo.run_physical(cfg, n_jobs=1)
    assert result.contains(ser_engine.link_ser_quadrature(net.sd, mod))


def test_physical_rayleigh_bpsk_example():
    net = _single_link(1e-12, 1.0, 1.0, BPSK)
    result = montecarlo.run(SimConfig(net, mode=SimMode.PHYSICAL, trials=1_000_000, seed=8, relay_enabled=False), n_jobs=1)
    assert result.contains(0.5 * (1.0 - math.sqrt(0.5)))


@pytest.mark.slow
@pytest.mark.parametrize("n_tx", [1, 2])
@pytest.mark.parametrize("kappa", [1e-12, 2.0])
def test_physical_single_link_acceptance(n_tx, kappa):
    net = _single_link(kappa, 1.0, _db(5.0), BPSK, n_tx=n_tx)
    cfg = SimConfig(net, mode=SimMode.PHYSICAL, trials=1_000_000, seed=90 + n_tx, relay_enabled=False, partitions=4)
    result = montecarlo.run(cfg, n_jobs=1)
    assert result.contains(ser_engine.link_ser_quadrature(net.sd, BPSK))


@pytest.mark.slow
def test_alamouti_doubles_diversity():
    snr_db = np.array([10.0, 15.0, 20.0])
    ser = []
    for i, value in enumerate(snr_db):
        net = _single_link(1e-12, 1.0, _db(value), BPSK, n_tx=2)
        cfg = SimConfig(net, mode=SimMode.PHYSICAL, trials=2_000_000, seed=300 + i, relay_enabled=False, partitions=4)
        ser.append(montecarlo.run(cfg, n_jobs=1).ser)
    assert -2.3 <= diversity_slope(snr_db, ser) <= -1.7


def test_analytical_diversity_orders():
    snr_db = np.array([10.0, 15.0, 20.0])
    single = [ser_engine.link_ser_quadrature(_single_link(1e-12, 1.0, _db(v), BPSK).sd, BPSK) for v in snr_db]
    alamouti = [ser_engine.link_ser_quadrature(_single_link(1e-12, 1.0, _db(v), BPSK, n_tx=2).sd, BPSK) for v in snr_db]
    assert -1.15 <= diversity_slope(snr_db, single) <= -0.85
    assert -2.3 <= diversity_slope(snr_db, alamouti) <= -1.7


@pytest.mark.parametrize(
    "antennas,mod,mean_snr",
    [((1, 1, 1), QPSK, _db(10.0)), ((2, 1, 1), QAM4, 3.0), ((2, 2, 2), QAM4, 3.0)],
)
def test_physical_and_product_model_are_comparable(antennas, mod, mean_snr):
    net = NetworkParams.symmetric(1.0, 1.0, mean_snr, mod, antennas=antennas)
    physical = montecarlo.run(SimConfig(net, mode=SimMode.PHYSICAL, trials=200_000, seed=4), n_jobs=1)
    model = montecarlo.run(SimConfig(net, mode=SimMode.MODEL_FAITHFUL, trials=200_000, seed=4), n_jobs=1)
    assert math.isfinite(physical.ser) and math.isfinite(model.ser)
    assert physical.errors > 0 and model.errors > 0
    assert 0.1 < physical.ser / model.ser < 10.0


def test_diversity_slope_validation():
    assert diversity_slope([0.0, 10.0, 20.0], [1e-1, 1e-2, 1e-3]) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        diversity_slope([0.0, 10.0], [1e-1])
    with pytest.raises(DomainError):
        diversity_slope([0.0, 10.0], [1e-1, 0.0])

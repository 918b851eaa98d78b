import inspect

import numpy as np
import pytest
from scipy.integrate import quad

from cvqkd4 import estimation, fock
from cvqkd4.channel import ChannelParams
from cvqkd4.errors import DegenerateEstimateError, InsufficientDataError
from cvqkd4.estimation import (
    CovarianceEstimate, Estimate, HETERODYNE_SCALE, HETERODYNE_VACUUM_PENALTY,
    covariance_from_estimate, estimate_channel, estimate_covariance, key_rate_from_data,
)
from cvqkd4.montecarlo import Records, RunConfig, simulate
from cvqkd4.oracle import fock_mixed_covariance
from cvqkd4.security import ReconciliationConfig, key_rate
from cvqkd4.states import PHASES, ModulationParams

SMALL = ModulationParams(0.5, 1.0)
BASELINE = ModulationParams(0.5, 20.0)


def run(n, ch, mod=SMALL, seed=11, channel=None):
    return simulate(RunConfig("beamsplitter", n, mod, ch, seed), workers=4, channel=channel)


def within(est: Estimate, truth, k=3.0):
    return abs(est.value - truth) < k * est.stderr


@pytest.fixture(scope="module")
def lossless_small():
    return run(10 ** 6, ChannelParams(1.0, 0.0))


def test_no_channel_parameter_in_signature():
    params = inspect.signature(estimate_covariance).parameters
    assert list(params) == ["records", "mod"]
    assert "ChannelParams" not in inspect.getsource(estimate_covariance)


def test_lossless_correlation(lossless_small):
    est = estimate_covariance(lossless_small, SMALL)
    assert within(est.c_hat, 2 * 0.5 * 1.0)
    assert within(est.entries["c_xx"], 1.0) and within(est.entries["c_pp"], 1.0)
    # cross-quadrature correlations vanish for the four-state alphabet
    assert within(est.entries["c_px"], 0.0) and within(est.entries["c_xp"], 0.0)
    assert within(est.v_b_hat, 2 * 0.25)
    assert within(est.v_a_hat, 1 + 2 * 1.0)


def test_correlation_scales_with_root_eta():
    est = estimate_covariance(run(10 ** 6, ChannelParams(0.25, 0.0), seed=3), SMALL)
    assert within(est.c_hat, np.sqrt(0.25) * 1.0)


def test_shuffled_null(lossless_small):
    rng = np.random.default_rng(5)
    shuffled = Records(lossless_small.m, lossless_small.x_a, lossless_small.p_a,
                       lossless_small.bob_basis, rng.permutation(lossless_small.bob_value))
    assert within(estimate_covariance(shuffled).c_hat, 0.0)


def test_heterodyne_constant_against_fock():
    # raw homodyne variance behind Alice's split, integrated on the Fock densities
    beta = 0.8
    trunc = fock.TruncationConfig(64)
    halves = [fock.coherent_state(beta * ph / np.sqrt(2), trunc) for ph in PHASES]
    dens = lambda x: 0.25 * sum(fock.homodyne_density(h, x, "x") for h in halves)
    second = quad(lambda x: x * x * dens(x), -12, 12, limit=200)[0]
    raw_var = second - quad(lambda x: x * dens(x), -12, 12, limit=200)[0] ** 2
    v_a_fock = fock_mixed_covariance(0.5, beta, trunc).v_a
    assert HETERODYNE_SCALE ** 2 * raw_var - HETERODYNE_VACUUM_PENALTY == pytest.approx(v_a_fock, abs=1e-9)
    assert v_a_fock == pytest.approx(1 + 2 * beta ** 2, abs=1e-9)


def test_channel_identity(lossless_small):
    ch = estimate_channel(estimate_covariance(lossless_small), SMALL)
    assert abs(ch.eta_hat - 1) < 3 * ch.eta_stderr
    assert abs(ch.epsilon_hat) < 3 * ch.epsilon_stderr
    assert ch.epsilon_hat_clamped >= 0


def test_channel_lossy_noisy():
    ch = estimate_channel(estimate_covariance(run(2 * 10 ** 6, ChannelParams(0.5, 0.01), seed=8)), SMALL)
    assert abs(ch.eta_hat - 0.5) < 3 * ch.eta_stderr
    assert abs(ch.epsilon_hat - 0.01) < 3 * ch.epsilon_stderr


def test_degenerate_correlation():
    zero = Estimate(0.0, 0.1, 1000)
    est = CovarianceEstimate(zero, zero, Estimate(1.5, 0.1, 1000), zero)
    with pytest.raises(DegenerateEstimateError):
        estimate_channel(est, SMALL)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        estimate_covariance(run(120, ChannelParams(1.0, 0.0)))


def test_stderr_shrinks_as_root_n():
    ch = ChannelParams(0.5, 0.01)
    a = estimate_covariance(run(10 ** 5, ch, seed=21))
    b = estimate_covariance(run(4 * 10 ** 5, ch, seed=22))
    assert b.c_hat.stderr / a.c_hat.stderr == pytest.approx(0.5, rel=0.05)
    truth = np.sqrt(0.5) * 1.0
    assert within(a.c_hat, truth) and within(b.c_hat, truth)


def test_influence_stderr_matches_replicates():
    ch = ChannelParams(0.5, 0.01)
    vals, ses = [], []
    for seed in range(30):
        est = estimate_covariance(run(20_000, ch, seed=100 + seed))
        vals.append(est.c_hat.value)
        ses.append(est.c_hat.stderr)
    assert np.std(vals, ddof=1) == pytest.approx(np.mean(ses), rel=0.35)


class VaryingEtaChannel:
    """Per-round transmittance drawn from {0.2, 0.8}: not a fixed linear channel."""

    etas = np.array([0.2, 0.8])
    epsilon = 0.02

    def transmit(self, mean_x, mean_p, rng):
        eta = self.etas[rng.integers(0, 2, np.shape(mean_x))]
        sd = np.sqrt(1 + eta * self.epsilon)
        return (np.sqrt(eta) * mean_x + sd * rng.standard_normal(eta.shape),
                np.sqrt(eta) * mean_p + sd * rng.standard_normal(eta.shape))


def test_varying_eta_aggregate_moments():
    chan = VaryingEtaChannel()
    recs = run(10 ** 6, ChannelParams(1.0, 0.0), channel=chan, seed=31)
    est = estimate_covariance(recs, SMALL)
    mean_root, mean_eta = np.sqrt(chan.etas).mean(), chan.etas.mean()
    assert within(est.c_hat, 2 * 0.5 * 1.0 * mean_root)
    assert within(est.v_b_total, 1 + mean_eta * (2 * 0.25 + chan.epsilon))


def test_permuted_null_rate_negative():
    recs = run(10 ** 6, ChannelParams(1.0, 0.0), mod=BASELINE, seed=4)
    rng = np.random.default_rng(0)
    null = Records(recs.m, recs.x_a, recs.p_a, recs.bob_basis, rng.permutation(recs.bob_value))
    assert key_rate_from_data(null, BASELINE, ReconciliationConfig(1.0)).k_rate < 0


def test_conservative_not_above_point():
    for ch in (ChannelParams(1.0, 0.0), ChannelParams(0.5, 0.01), ChannelParams(0.8, 0.002)):
        recs = run(2 * 10 ** 5, ch, mod=BASELINE, seed=12)
        point = key_rate_from_data(recs, BASELINE)
        cons = key_rate_from_data(recs, BASELINE, conservative=True)
        assert cons.k_rate <= point.k_rate


def test_data_rate_tracks_analytic():
    ch = ChannelParams(0.5, 0.01)
    recs = run(10 ** 6, ch, mod=BASELINE, seed=13)
    data = key_rate_from_data(recs, BASELINE)
    assert data.k_rate == pytest.approx(key_rate(BASELINE, ch).k_rate, abs=0.01)
    assert data.eta == pytest.approx(0.5, abs=0.01)


def test_uncalibrated_alice_reproduces_mixed_source():
    recs = run(10 ** 6, ChannelParams(1.0, 0.0), mod=BASELINE, seed=14)
    est = estimate_covariance(recs)
    cov = covariance_from_estimate(est, BASELINE, calibrated_alice=False)
    assert cov.v_a == pytest.approx(1 + 2 * 400, rel=5e-3)
    assert key_rate_from_data(recs, BASELINE, ReconciliationConfig(1.0), calibrated_alice=False).k_rate < 0


def test_report_carries_raw_estimates():
    recs = run(2 * 10 ** 5, ChannelParams(0.5, 0.01), mod=BASELINE, seed=15)
    rep = estimation.key_rate_from_data(recs, BASELINE)
    assert np.isfinite(rep.eta) and np.isfinite(rep.epsilon)

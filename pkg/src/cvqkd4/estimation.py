"""Covariance and channel estimation from simulated records.

Only sample moments are used: nothing here takes channel parameters, so the
estimates stay valid for channels that are not a fixed linear loss plus noise.

Convention algebra lives in this module. Alice's recorded values are the two
homodyne outputs after her 50:50 split; multiplying by sqrt(2) maps them to
mode-A quadrature estimates, whose variance exceeds the mode-A variance by one
vacuum unit.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from .covariance import Structure, TwoModeCovariance
from .errors import DegenerateEstimateError, InsufficientDataError
from .montecarlo import Records, empirical_ber
from .security import KeyRateReport, ReconciliationConfig, assemble_report
from .states import ModulationParams, phi_l_covariance

HETERODYNE_SCALE = math.sqrt(2.0)
HETERODYNE_VACUUM_PENALTY = 1.0
BOB_SHOT_NOISE = 1.0
MIN_RECORDS = 100
CONSERVATIVE_SIGMAS = 3.0


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n_used: int


@dataclass(frozen=True)
class CovarianceEstimate:
    """Estimated covariance entries.

    Pooled entries combine both of Bob's bases. ``v_b_hat`` is Bob's variance with
    his shot noise removed; ``v_b_total`` keeps it, which is the covariance-matrix
    entry the key rate needs. ``cov_c_vb`` is the estimator covariance of
    ``c_hat`` and ``v_b_total``.
    """

    v_a_hat: Estimate
    v_b_hat: Estimate
    v_b_total: Estimate
    c_hat: Estimate
    entries: dict = field(default_factory=dict)
    cov_c_vb: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ChannelEstimate:
    eta_hat: float
    eta_stderr: float
    epsilon_hat: float
    epsilon_stderr: float

    @property
    def epsilon_hat_clamped(self) -> float:
        return max(self.epsilon_hat, 0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilon_hat_clamped"] = self.epsilon_hat_clamped
        return d


def _centered(v: np.ndarray) -> np.ndarray:
    return v - v.mean()


def _moment(a_c: np.ndarray, b_c: np.ndarray):
    """Sample covariance of centered samples with its influence values."""
    prod = a_c * b_c
    value = float(prod.mean())
    return value, prod - value


def _estimate(value: float, infl: np.ndarray) -> Estimate:
    n = infl.shape[0]
    se = float(np.sqrt(np.mean(infl * infl) / (n - 1))) if n >= 2 else float("nan")
    return Estimate(value, se, n)


def estimate_covariance(records: Records, mod: ModulationParams | None = None) -> CovarianceEstimate:
    """Sample covariance entries with influence-function standard errors.

    ``mod`` is accepted for call symmetry with the other estimators and is not
    read: every entry is a plain sample moment.
    """
    x_a = HETERODYNE_SCALE * records.x_a
    p_a = HETERODYNE_SCALE * records.p_a
    basis = records.bob_basis
    bob = records.bob_value
    sel = {"x": basis == 0, "p": basis == 1}
    for name, s in sel.items():
        if s.sum() < MIN_RECORDS:
            raise InsufficientDataError(
                f"only {int(s.sum())} records with Bob in basis {name}; need {MIN_RECORDS}"
            )

    entries = {}
    xa_c, pa_c = _centered(x_a), _centered(p_a)
    for name, a_c in (("x", xa_c), ("p", pa_c)):
        val, infl = _moment(a_c, a_c)
        entries[f"v_a_{name}"] = _estimate(val - HETERODYNE_VACUUM_PENALTY, infl)
    val, infl = _moment(xa_c, pa_c)
    entries["c_a_xp"] = _estimate(val, infl)

    alice_by_quad = {"x": x_a, "p": p_a}
    b_parts, a_parts = [], []
    for bname, s in sel.items():
        b_c = _centered(bob[s])
        val, infl = _moment(b_c, b_c)
        entries[f"v_b_{bname}_total"] = _estimate(val, infl)
        entries[f"v_b_{bname}"] = _estimate(val - BOB_SHOT_NOISE, infl)
        for aname, a in alice_by_quad.items():
            val, infl = _moment(_centered(a[s]), b_c)
            entries[f"c_{aname}{bname}"] = _estimate(val, infl)
        b_parts.append(b_c)
        a_parts.append(_centered(alice_by_quad[bname][s]))

    # pooled over bases: Alice's quadrature matched to Bob's
    a_all, b_all = np.concatenate(a_parts), np.concatenate(b_parts)
    c_val, c_infl = _moment(a_all, b_all)
    vb_val, vb_infl = _moment(b_all, b_all)
    n = b_all.shape[0]
    cov_c_vb = float(np.mean(c_infl * vb_infl) / (n - 1))

    va_val, va_infl = _moment(np.concatenate([xa_c, pa_c]), np.concatenate([xa_c, pa_c]))
    return CovarianceEstimate(
        v_a_hat=_estimate(va_val - HETERODYNE_VACUUM_PENALTY, va_infl),
        v_b_hat=_estimate(vb_val - BOB_SHOT_NOISE, vb_infl),
        v_b_total=_estimate(vb_val, vb_infl),
        c_hat=_estimate(c_val, c_infl),
        entries=entries,
        cov_c_vb=cov_c_vb,
    )


def estimate_channel(cov_est: CovarianceEstimate, mod: ModulationParams) -> ChannelEstimate:
    """Plug-in transmittance and excess noise with delta-method standard errors.

    eta = (c / (2 alpha beta))^2 and eps = (V_B,total - 1 - 2 eta alpha^2) / eta.
    """
    c = cov_est.c_hat.value
    if not np.isfinite(c) or abs(c) < 1e-12:
        raise DegenerateEstimateError(f"correlation estimate {c!r} is zero; transmittance undefined")
    k = 2 * mod.alpha * mod.beta
    eta = (c / k) ** 2
    v = cov_est.v_b_total.value
    eps = (v - BOB_SHOT_NOISE) / eta - 2 * mod.alpha ** 2

    d_eta_dc = 2 * c / k ** 2
    grad = np.array([-(v - BOB_SHOT_NOISE) / eta ** 2 * d_eta_dc, 1.0 / eta])
    sc, sv = cov_est.c_hat.stderr, cov_est.v_b_total.stderr
    sigma = np.array([[sc ** 2, cov_est.cov_c_vb], [cov_est.cov_c_vb, sv ** 2]])
    return ChannelEstimate(
        eta_hat=float(eta),
        eta_stderr=float(abs(d_eta_dc) * sc),
        epsilon_hat=float(eps),
        epsilon_stderr=float(np.sqrt(grad @ sigma @ grad)),
    )


def covariance_from_estimate(cov_est: CovarianceEstimate, mod: ModulationParams, *,
                             conservative: bool = False,
                             calibrated_alice: bool = True) -> TwoModeCovariance:
    """Post-channel covariance matrix for the Holevo bound.

    With ``calibrated_alice`` the A-block and correlation structure come from the
    purified four-state source, and the data supply Bob's variance and the
    amplitude transmission sqrt(eta) = c / (2 alpha beta). Otherwise every entry
    is taken from data, which reproduces the mixed-state source.
    """
    c = cov_est.c_hat.value
    v_b = cov_est.v_b_total.value
    if conservative:
        c = math.copysign(max(abs(c) - CONSERVATIVE_SIGMAS * cov_est.c_hat.stderr, 0.0), c)
        v_b = v_b + CONSERVATIVE_SIGMAS * cov_est.v_b_total.stderr
    if calibrated_alice:
        src = phi_l_covariance(mod.alpha)
        return TwoModeCovariance.from_blocks(src.v_a, v_b, src.z * c / (2 * mod.alpha * mod.beta),
                                             Structure.SIGMA_Z)
    return TwoModeCovariance.from_blocks(cov_est.v_a_hat.value, v_b, c, Structure.IDENTITY)


def key_rate_from_data(records: Records, mod: ModulationParams,
                       rec: ReconciliationConfig | None = None, *,
                       conservative: bool = False, calibrated_alice: bool = True,
                       sift_factor: float = 1.0) -> KeyRateReport:
    rec = rec or ReconciliationConfig()
    cov_est = estimate_covariance(records, mod)
    try:
        ch_est = estimate_channel(cov_est, mod)
        eta, eps = ch_est.eta_hat, ch_est.epsilon_hat
    except DegenerateEstimateError:
        eta, eps = float("nan"), float("nan")
    cov = covariance_from_estimate(cov_est, mod, conservative=conservative,
                                   calibrated_alice=calibrated_alice)
    ber = empirical_ber(records)
    return assemble_report(cov, ber, _ReportChannel(eta, eps), rec, None, sift_factor)


@dataclass(frozen=True)
class _ReportChannel:
    # carries estimated (possibly unphysical) channel values into the report
    eta: float
    epsilon: float

"""Lossy, noisy Gaussian channel at the covariance and sample level.

Excess noise ``epsilon`` is referred to the channel input, so Bob sees an added
variance ``eta * epsilon`` on top of the loss-scaled signal and one vacuum unit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import TwoModeCovariance
from .errors import DomainError, PhysicalityError

DEFAULT_LOSS_DB_PER_KM = 0.2


@dataclass(frozen=True)
class ChannelParams:
    eta: float
    epsilon: float = 0.0
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM

    def __post_init__(self):
        if not (0 < self.eta <= 1):
            raise DomainError(f"eta must be in (0, 1], got {self.eta}")
        if not self.epsilon >= 0:
            raise DomainError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.loss_db_per_km > 0:
            raise DomainError(f"loss_db_per_km must be > 0, got {self.loss_db_per_km}")

    @classmethod
    def from_distance(cls, distance_km: float, epsilon: float = 0.0,
                      loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM) -> "ChannelParams":
        return cls(distance_to_eta(distance_km, loss_db_per_km), epsilon, loss_db_per_km)

    def transmit(self, mean_x, mean_p, rng: np.random.Generator):
        return transmit_sample(mean_x, mean_p, self, rng)


def chi(params: ChannelParams) -> float:
    """Total added noise referred to the input, (1 - eta)/eta + epsilon."""
    if params.eta <= 0:
        raise DomainError("eta must be > 0")
    return (1 - params.eta) / params.eta + params.epsilon


def distance_to_eta(distance_km: float, loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM) -> float:
    if distance_km < 0:
        raise DomainError(f"distance must be >= 0, got {distance_km}")
    return 10.0 ** (-loss_db_per_km * distance_km / 10.0)


def apply_to_covariance(cov: TwoModeCovariance, params: ChannelParams) -> TwoModeCovariance:
    if not cov.is_physical():
        raise PhysicalityError("input covariance matrix is not physical")
    eta = params.eta
    scale = np.diag([1.0, 1.0, np.sqrt(eta), np.sqrt(eta)])
    added = np.diag([0.0, 0.0, 1.0, 1.0]) * (1 - eta + eta * params.epsilon)
    out = TwoModeCovariance(scale @ cov.matrix @ scale + added, cov.structure)
    return out.check_physical()


def transmit_sample(mean_x, mean_p, params: ChannelParams, rng: np.random.Generator):
    """Bob's homodyne outcomes for coherent inputs with the given quadrature means.

    Accepts scalars or arrays; both quadratures are drawn, the caller keeps the
    one Bob measured.
    """
    mean_x = np.asarray(mean_x, dtype=float)
    mean_p = np.asarray(mean_p, dtype=float)
    g = np.sqrt(params.eta)
    sd = np.sqrt(1.0 + params.eta * params.epsilon)
    x = g * mean_x + sd * rng.standard_normal(mean_x.shape)
    p = g * mean_p + sd * rng.standard_normal(mean_p.shape)
    if x.ndim == 0:
        return float(x), float(p)
    return x, p

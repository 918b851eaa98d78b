"""Protocol states of the four-state scheme and their closed-form moments.

Signal states are ``|alpha e^{i theta_m}>`` with ``theta_m = (2m+1) pi / 4``; Alice's
reference mode carries ``|beta e^{i theta_m}>`` in the mixed-state source.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .covariance import Structure, TwoModeCovariance
from .errors import PhysicalityError

THETAS = (2 * np.arange(4) + 1) * np.pi / 4
PHASES = np.exp(1j * THETAS)


@dataclass(frozen=True)
class ModulationParams:
    alpha: float = 0.5
    beta: float = 20.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    def signal_amplitudes(self) -> np.ndarray:
        return self.alpha * PHASES

    def reference_amplitudes(self) -> np.ndarray:
        return self.beta * PHASES


@dataclass(frozen=True)
class FourStateSpectrum:
    lam: tuple[float, float, float, float]

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lam)
        if len(lam) != 4 or min(lam) < 0 or abs(sum(lam) - 1.0) > 1e-12:
            raise ValueError(f"invalid four-state spectrum {lam}")
        object.__setattr__(self, "lam", lam)

    def as_array(self) -> np.ndarray:
        return np.array(self.lam)


@dataclass(frozen=True)
class EBCovariance:
    """Block covariance ``[[v_a I, z S], [z S, v_b I]]`` with S set by ``structure``."""

    v_a: float
    v_b: float
    z: float
    structure: Structure

    @property
    def v(self) -> float:
        return self.v_b

    def matrix(self) -> TwoModeCovariance:
        return TwoModeCovariance.from_blocks(self.v_a, self.v_b, self.z, self.structure)


def _lambda_series(x: float) -> np.ndarray:
    # e^{-x} sum_{n = k mod 4} x^n / n!; avoids the cancellation in sinh - sin for small x
    terms = np.empty(40)
    terms[0] = 1.0
    for n in range(1, 40):
        terms[n] = terms[n - 1] * x / n
    sums = np.array([terms[k::4].sum() for k in range(4)])
    return np.exp(-x) * sums


def four_state_spectrum(alpha: float) -> FourStateSpectrum:
    """Eigenvalues of rho_B = 1/4 sum_m |alpha_m><alpha_m|, in Fock-class order k = n mod 4."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    x = alpha * alpha
    if x < 0.5:
        lam = _lambda_series(x)
    else:
        h = 0.5 * np.exp(-x)
        lam = h * np.array(
            [np.cosh(x) + np.cos(x), np.sinh(x) + np.sin(x), np.cosh(x) - np.cos(x), np.sinh(x) - np.sin(x)]
        )
    lam = np.clip(lam, 0.0, None)
    return FourStateSpectrum(tuple(lam / lam.sum()))


def correlation_z(alpha: float) -> float:
    """x_A x_B correlation of the purified four-state source.

    z = 2 alpha^2 sum_k lambda_{k-1}^{3/2} lambda_k^{-1/2}, indices mod 4.
    """
    lam = four_state_spectrum(alpha).as_array()
    total = 0.0
    for k in range(4):
        prev, cur = lam[k - 1], lam[k]
        if prev > 0 and cur > 0:
            total += prev ** 1.5 / np.sqrt(cur)
    return 2 * alpha * alpha * total


def phi_l_covariance(alpha: float) -> EBCovariance:
    v = 1 + 2 * alpha * alpha
    z = correlation_z(alpha)
    bound = np.sqrt(max(v * v - 1, 0.0))
    if z > bound * (1 + 1e-12) + 1e-15:
        raise PhysicalityError(f"z={z!r} exceeds the EPR bound {bound!r}")
    return EBCovariance(v, v, z, Structure.SIGMA_Z)


def mixed_entries(alpha: float, beta: float) -> tuple[float, float, float]:
    """(V_A, V_B, C_AB) of the mixed-state source."""
    return 1 + 2 * beta * beta, 1 + 2 * alpha * alpha, 2 * alpha * beta


def mixed_scheme_covariance(params: ModulationParams) -> EBCovariance:
    return EBCovariance(*mixed_entries(params.alpha, params.beta), Structure.IDENTITY)


def heterodyne_means(beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Means of Alice's two post-split homodyne outcomes for each m."""
    r = np.sqrt(2.0) * beta
    return r * np.cos(THETAS), r * np.sin(THETAS)


def conditional_log_weights(x_a, p_a, beta: float) -> np.ndarray:
    """Unnormalized log C_m, shape (..., 4)."""
    mx, mp = heterodyne_means(beta)
    x_a = np.asarray(x_a, dtype=float)[..., None]
    p_a = np.asarray(p_a, dtype=float)[..., None]
    return -0.5 * (x_a - mx) ** 2 - 0.5 * (p_a - mp) ** 2


def conditional_coefficients(x_a, p_a, beta: float) -> np.ndarray:
    """Probabilities C_m of each signal state given Alice's heterodyne pair.

    Vectorized over ``x_a``/``p_a``; the last axis indexes m.
    """
    if not beta > 0:
        raise ValueError("beta must be > 0")
    logw = conditional_log_weights(x_a, p_a, beta)
    return np.exp(logw - logsumexp(logw, axis=-1, keepdims=True))

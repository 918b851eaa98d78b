"""Asymptotic key rate under collective attacks, reverse reconciliation.

K = beta_rec * I(a:b) - S(b:E), with S(b:E) = S(AB) - S(A|b) evaluated on the
Gaussian state sharing the post-channel covariance matrix.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import erfc

from .channel import ChannelParams, apply_to_covariance
from .covariance import OMEGA, TwoModeCovariance
from .errors import DomainError, PhysicalityError
from .states import ModulationParams, mixed_scheme_covariance, phi_l_covariance

NU_CLAMP = 1e-9
NU_TOL = 1e-8
HOLEVO_TOL = 1e-9


class Scheme(str, enum.Enum):
    IMPROVED = "improved"
    MIXED = "mixed"


@dataclass(frozen=True)
class ReconciliationConfig:
    beta_rec: float = 0.8

    def __post_init__(self):
        if not (0 < self.beta_rec <= 1):
            raise ValueError(f"beta_rec must be in (0, 1], got {self.beta_rec}")


@dataclass(frozen=True)
class KeyRateReport:
    distance_km: Optional[float]
    eta: float
    epsilon: float
    ber: float
    i_ab: float
    s_bE: float
    nu1: float
    nu2: float
    nu3: float
    k_rate: float
    beta_rec: float = 1.0
    sift_factor: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def g_entropy(nu: float) -> float:
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue nu."""
    if nu < 1 - NU_CLAMP:
        raise DomainError(f"symplectic eigenvalue {nu!r} < 1")
    if nu <= 1.0:
        return 0.0
    up, dn = (nu + 1) / 2, (nu - 1) / 2
    return float(up * np.log2(up) - dn * np.log2(dn))


def binary_entropy(e: float) -> float:
    if e <= 0 or e >= 1:
        return 0.0
    return float(-e * np.log2(e) - (1 - e) * np.log2(1 - e))


def symplectic_eigenvalues(cov: TwoModeCovariance) -> tuple[float, float]:
    """(nu_plus, nu_minus) from the invariants Delta = detA + detB + 2 detC and det(gamma)."""
    cov.check_physical()
    delta = np.linalg.det(cov.block_a) + np.linalg.det(cov.block_b) + 2 * np.linalg.det(cov.block_c)
    det = np.linalg.det(cov.matrix)
    # sqrt(delta^2 - 4 det) cancels catastrophically near nu_plus = nu_minus; the
    # traceless part of (i Omega gamma)^2 gives the same gap to full precision
    m2 = -(OMEGA @ cov.matrix) @ (OMEGA @ cov.matrix)
    gap = m2 - np.trace(m2) / 4 * np.eye(4)
    disc = np.sqrt(max(float(np.trace(gap @ gap)), 0.0))
    nu_plus_sq = (delta + disc) / 2
    nu_minus_sq = det / nu_plus_sq
    nus = (float(np.sqrt(nu_plus_sq)), float(np.sqrt(max(nu_minus_sq, 0.0))))
    if min(nus) < 1 - NU_TOL:
        raise PhysicalityError(f"symplectic eigenvalues {nus} below 1")
    return nus


def symplectic_eigenvalues_generic(matrix: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of any 2n x 2n matrix as moduli of eig(i Omega gamma), descending."""
    n = matrix.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.sort(np.abs(np.linalg.eigvals(1j * omega @ matrix)))[::-1]
    return ev[::2]


def conditional_a_block(cov: TwoModeCovariance, measured_quadrature: str = "x") -> np.ndarray:
    """A-block after Bob's homodyne: gamma_A - C (X gamma_B X)^+ C^T."""
    if measured_quadrature not in ("x", "p"):
        raise ValueError("measured_quadrature must be 'x' or 'p'")
    proj = np.diag([1.0, 0.0] if measured_quadrature == "x" else [0.0, 1.0])
    pinv = np.linalg.pinv(proj @ cov.block_b @ proj)
    return cov.block_a - cov.block_c @ pinv @ cov.block_c.T


def holevo_terms(cov: TwoModeCovariance, measured_quadrature: str = "x"):
    """Returns (S(b:E), nu1, nu2, nu3)."""
    nu1, nu2 = symplectic_eigenvalues(cov)
    det_cond = np.linalg.det(conditional_a_block(cov, measured_quadrature))
    if det_cond < 0:
        raise PhysicalityError(f"conditional covariance has negative determinant {det_cond:.3e}")
    nu3 = float(np.sqrt(det_cond))
    s = g_entropy(nu1) + g_entropy(nu2) - g_entropy(nu3)
    if s < -HOLEVO_TOL:
        raise PhysicalityError(f"negative Holevo quantity {s:.3e}")
    return max(s, 0.0), nu1, nu2, nu3


def holevo_bE(cov_after_channel: TwoModeCovariance, measured_quadrature: str = "x") -> float:
    return holevo_terms(cov_after_channel, measured_quadrature)[0]


def bob_sign_error(alpha: float, params: ChannelParams) -> float:
    mean = np.sqrt(2 * params.eta) * alpha
    sd = np.sqrt(1 + params.eta * params.epsilon)
    return float(0.5 * erfc(mean / (np.sqrt(2) * sd)))


def alice_sign_error(beta: float) -> float:
    return float(0.5 * erfc(beta / np.sqrt(2)))


def analytic_ber(alpha: float, beta: float, params: ChannelParams,
                 include_alice_error: bool = True) -> float:
    """Bit error rate of sign decoding.

    Bob's matched-quadrature mean is sqrt(2 eta) alpha with variance 1 + eta*eps;
    Alice's heterodyne mean is beta with unit variance. Errors on both sides
    compose as e_A + e_B - 2 e_A e_B.
    """
    e_b = bob_sign_error(alpha, params)
    if not include_alice_error:
        return e_b
    e_a = alice_sign_error(beta)
    return e_a + e_b - 2 * e_a * e_b


def source_covariance(mod: ModulationParams, scheme=Scheme.IMPROVED) -> TwoModeCovariance:
    scheme = Scheme(scheme)
    if scheme is Scheme.IMPROVED:
        return phi_l_covariance(mod.alpha).matrix()
    return mixed_scheme_covariance(mod).matrix()


def assemble_report(cov_after: TwoModeCovariance, ber: float, ch: ChannelParams,
                    rec: ReconciliationConfig, distance_km=None, sift_factor: float = 1.0,
                    measured_quadrature: str = "x") -> KeyRateReport:
    s, nu1, nu2, nu3 = holevo_terms(cov_after, measured_quadrature)
    i_ab = 1.0 - binary_entropy(ber)
    return KeyRateReport(
        distance_km=distance_km, eta=ch.eta, epsilon=ch.epsilon, ber=ber, i_ab=i_ab,
        s_bE=s, nu1=nu1, nu2=nu2, nu3=nu3,
        k_rate=sift_factor * (rec.beta_rec * i_ab - s),
        beta_rec=rec.beta_rec, sift_factor=sift_factor,
    )


def key_rate(mod: ModulationParams, ch: ChannelParams, rec: ReconciliationConfig | None = None,
             scheme=Scheme.IMPROVED, *, include_alice_error: bool = True,
             sift_factor: float = 1.0, distance_km: float | None = None) -> KeyRateReport:
    rec = rec or ReconciliationConfig()
    cov_after = apply_to_covariance(source_covariance(mod, scheme), ch)
    ber = analytic_ber(mod.alpha, mod.beta, ch, include_alice_error)
    return assemble_report(cov_after, ber, ch, rec, distance_km, sift_factor)

"""Truncated Fock-space numerics.

Everything here is a brute-force reference for the closed-form expressions in
:mod:`cvqkd4.states`. Conventions: ``x = a + a^dag``, ``p = i(a^dag - a)``, so the
vacuum quadrature variance is 1.

Two-mode states never become ``dim**2`` vectors. Pure states are stored as a
coefficient matrix ``psi[a, b]`` (equivalently a Schmidt decomposition) and
classical mixtures of product states as weighted lists of single-mode kets.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammainc, gammaln

from .covariance import Structure, TwoModeCovariance, PHYSICALITY_TOL
from .errors import PhysicalityError, TruncationOverflowError, WeightNormalizationError

DEFAULT_DIM = 64
DEFAULT_TAIL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class TruncationConfig:
    dim: int = DEFAULT_DIM
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if not self.tail_tolerance > 0:
            raise ValueError(f"tail_tolerance must be > 0, got {self.tail_tolerance}")

    def doubled(self) -> "TruncationConfig":
        return TruncationConfig(2 * self.dim, self.tail_tolerance)


def default_truncation() -> TruncationConfig:
    """Default truncation, honouring ``QKD_DEFAULT_TRUNC_DIM`` when set."""
    env = os.environ.get("QKD_DEFAULT_TRUNC_DIM")
    return TruncationConfig(int(env)) if env else TruncationConfig()


@dataclass(frozen=True)
class FockVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def expectation(self, op: "FockOperator") -> complex:
        return complex(np.vdot(self.amplitudes, op.entries @ self.amplitudes))

    def projector(self) -> "FockOperator":
        return FockOperator(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class FockOperator:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator must be a square matrix")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.entries @ other.entries)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def expectation(self, op: "FockOperator") -> complex:
        """Tr(self @ op), treating ``self`` as a density operator."""
        return complex(np.einsum("ij,ji->", self.entries, op.entries))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def quadrature_operators(trunc: TruncationConfig) -> tuple[FockOperator, FockOperator]:
    a = annihilation(trunc.dim)
    ad = a.conj().T
    return FockOperator(a + ad), FockOperator(1j * (ad - a))


def _min_dim_for(mean_photons: float, tol: float) -> int:
    d = 2
    while gammainc(d, mean_photons) > tol:
        d *= 2
    lo, hi = d // 2, d
    while lo < hi:
        mid = (lo + hi) // 2
        if gammainc(mid, mean_photons) > tol:
            lo = mid + 1
        else:
            hi = mid
    return max(lo, 2)


def coherent_state(amplitude: complex, trunc: TruncationConfig) -> FockVector:
    amplitude = complex(amplitude)
    n = np.arange(trunc.dim)
    r2 = abs(amplitude) ** 2
    if r2 == 0.0:
        amps = np.zeros(trunc.dim, dtype=complex)
        amps[0] = 1.0
        return FockVector(amps)
    # Poisson(|amp|^2) mass at n >= dim
    tail = float(gammainc(trunc.dim, r2))
    if tail > trunc.tail_tolerance:
        need = _min_dim_for(r2, trunc.tail_tolerance)
        raise TruncationOverflowError(
            f"coherent state |{amplitude:.4g}> loses norm {tail:.3e} at dim={trunc.dim} "
            f"(tolerance {trunc.tail_tolerance:.1e}); use dim >= {need}",
            suggested_dim=need,
        )
    log_mag = -r2 / 2 + n * np.log(abs(amplitude)) - 0.5 * gammaln(n + 1)
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(amplitude))
    return FockVector(amps)


def density_from_coherent_mixture(
    amps: Sequence[complex], weights: Sequence[float], trunc: TruncationConfig
) -> FockOperator:
    weights = np.asarray(weights, dtype=float)
    if len(amps) != len(weights):
        raise ValueError("amps and weights must have the same length")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise WeightNormalizationError(
            f"weights must be nonnegative and sum to 1 (sum={weights.sum():.12g})"
        )
    vecs = np.array([coherent_state(a, trunc).amplitudes for a in amps])
    rho = (vecs.T * weights) @ vecs.conj()
    return FockOperator(rho)


def hermite_functions(q: float, dim: int) -> np.ndarray:
    """Normalized oscillator eigenfunctions psi_0..psi_{dim-1} evaluated at q."""
    out = np.empty(dim)
    out[0] = np.pi ** -0.25 * np.exp(-q * q / 2)
    if dim > 1:
        out[1] = np.sqrt(2.0) * q * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * q * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_eigenstate(value: float, quadrature: str, trunc: TruncationConfig) -> FockVector:
    """Truncated |x=value> or |p=value>.

    Normalized so that ``|<value|psi>|**2`` is the probability density of the
    measured quadrature in shot-noise units.
    """
    psi = hermite_functions(value / np.sqrt(2.0), trunc.dim) * 2.0 ** -0.25
    if quadrature == "x":
        return FockVector(psi.astype(complex))
    if quadrature == "p":
        n = np.arange(trunc.dim)
        return FockVector(((-1j) ** n * psi).conj())
    raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")


def homodyne_density(state: FockVector, value: float, quadrature: str) -> float:
    """Probability density of a homodyne outcome, |<value|state>|^2."""
    eig = quadrature_eigenstate(value, quadrature, TruncationConfig(state.dim))
    return abs(np.vdot(eig.amplitudes, state.amplitudes)) ** 2


# ---------------------------------------------------------------- two-mode states


@dataclass(frozen=True)
class SchmidtState:
    """Pure two-mode state sum_k sqrt(w_k) |a_k>|b_k>."""

    weights: np.ndarray
    a_vectors: np.ndarray  # rows are kets
    b_vectors: np.ndarray

    def coefficient_matrix(self) -> np.ndarray:
        w = np.sqrt(np.clip(np.asarray(self.weights, dtype=float), 0.0, None))
        return (np.asarray(self.a_vectors).T * w) @ np.asarray(self.b_vectors)


@dataclass(frozen=True)
class ProductMixture:
    """Classical mixture sum_i w_i |a_i><a_i| (x) |b_i><b_i|."""

    weights: np.ndarray
    a_states: list = field(default_factory=list)
    b_states: list = field(default_factory=list)


def purification(rho: FockOperator) -> SchmidtState:
    """Schmidt-form purification sum_k sqrt(lambda_k) |conj(phi_k)>_A |phi_k>_B of rho."""
    w, u = np.linalg.eigh(rho.entries)
    # eigenvalues at round-off level are zero; their square roots would not be
    floor = rho.dim * np.finfo(float).eps * max(w.max(), 0.0)
    w = np.where(w > floor, w, 0.0)
    return SchmidtState(w, u.T.conj(), u.T)


def product_coherent_mixture(
    a_amps: Sequence[complex], b_amps: Sequence[complex], weights: Sequence[float],
    trunc: TruncationConfig,
) -> ProductMixture:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise WeightNormalizationError(
            f"weights must be nonnegative and sum to 1 (sum={weights.sum():.12g})"
        )
    return ProductMixture(
        weights,
        [coherent_state(a, trunc) for a in a_amps],
        [coherent_state(b, trunc) for b in b_amps],
    )


def _check_top_levels(populations: np.ndarray, tol: float) -> None:
    # x^2 and p^2 are wrong on the top level of a truncated space
    if populations[-2:].sum() > tol:
        dim = populations.shape[0]
        raise TruncationOverflowError(
            f"population {populations[-2:].sum():.3e} in the top Fock levels at dim={dim}",
            suggested_dim=2 * dim,
        )


def _symmetrized_second_moments(dim: int):
    x, p = quadrature_operators(TruncationConfig(dim))
    ops = [x.entries, p.entries]
    second = [[0.5 * (oi @ oj + oj @ oi) for oj in ops] for oi in ops]
    return ops, second


def two_mode_covariance(state, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> TwoModeCovariance:
    """Covariance matrix 0.5 <{dr_i, dr_j}> of a SchmidtState or ProductMixture."""
    if isinstance(state, SchmidtState):
        moments, d = _pure_moments(state.coefficient_matrix(), tail_tolerance)
    elif isinstance(state, ProductMixture):
        moments, d = _mixture_moments(state)
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    gamma = moments - np.outer(d, d)
    gamma = 0.5 * (gamma + gamma.T)
    cov = TwoModeCovariance(gamma, Structure.GENERAL)
    lam = cov.min_uncertainty_eigenvalue()
    if lam <= -PHYSICALITY_TOL:
        raise PhysicalityError(f"oracle covariance violates uncertainty relation ({lam:.3e})")
    return cov


def _pure_moments(psi: np.ndarray, tol: float):
    dim = psi.shape[0]
    norm = float(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > tol:
        raise TruncationOverflowError(f"two-mode state norm deviates from 1 by {abs(norm - 1):.3e}")
    _check_top_levels(np.sum(np.abs(psi) ** 2, axis=1), tol)
    _check_top_levels(np.sum(np.abs(psi) ** 2, axis=0), tol)
    ops, second = _symmetrized_second_moments(dim)
    psi_h = psi.conj().T

    def on_a(op):
        return np.trace(psi_h @ op @ psi).real

    def on_b(op):
        return np.trace(psi_h @ psi @ op.T).real

    def cross(op_a, op_b):
        return np.trace(psi_h @ op_a @ psi @ op_b.T).real

    d = np.array([on_a(ops[0]), on_a(ops[1]), on_b(ops[0]), on_b(ops[1])])
    m = np.empty((4, 4))
    for i in range(2):
        for j in range(2):
            m[i, j] = on_a(second[i][j])
            m[2 + i, 2 + j] = on_b(second[i][j])
            m[i, 2 + j] = m[2 + j, i] = cross(ops[i], ops[j])
    return m, d


def _mixture_moments(state: ProductMixture):
    dim = state.a_states[0].dim
    ops, second = _symmetrized_second_moments(dim)
    m = np.zeros((4, 4))
    d = np.zeros(4)
    for w, ka, kb in zip(state.weights, state.a_states, state.b_states):
        va, vb = ka.amplitudes, kb.amplitudes
        first = np.array([np.vdot(v, o @ v).real for v in (va, vb) for o in ops])
        d += w * first
        for i in range(2):
            for j in range(2):
                m[i, j] += w * np.vdot(va, second[i][j] @ va).real
                m[2 + i, 2 + j] += w * np.vdot(vb, second[i][j] @ vb).real
                m[i, 2 + j] += w * first[i] * first[2 + j]
                m[2 + j, i] = m[i, 2 + j]
    return m, d

"""Cross-checks of every closed form against truncated Fock-space numerics."""
from __future__ import annotations

import numpy as np

from . import fock
from .covariance import Structure, TwoModeCovariance
from .states import PHASES, conditional_coefficients, four_state_spectrum, mixed_entries, phi_l_covariance

TOLERANCE = 1e-7


def fock_spectrum(alpha: float, trunc: fock.TruncationConfig) -> np.ndarray:
    rho = fock.density_from_coherent_mixture(alpha * PHASES, [0.25] * 4, trunc)
    return np.sort(rho.eigvalsh())[::-1][:4]


def fock_phi_l_covariance(alpha: float, trunc: fock.TruncationConfig) -> TwoModeCovariance:
    rho = fock.density_from_coherent_mixture(alpha * PHASES, [0.25] * 4, trunc)
    return fock.two_mode_covariance(fock.purification(rho), trunc.tail_tolerance)


def fock_mixed_covariance(alpha: float, beta: float, trunc: fock.TruncationConfig) -> TwoModeCovariance:
    state = fock.product_coherent_mixture(beta * PHASES, alpha * PHASES, [0.25] * 4, trunc)
    return fock.two_mode_covariance(state, trunc.tail_tolerance)


def fock_conditional_coefficients(x_a: float, p_a: float, beta: float,
                                  trunc: fock.TruncationConfig) -> np.ndarray:
    """C_m from projecting the split reference modes onto |x_a>_{A1} |p_a>_{A2}."""
    weights = np.empty(4)
    for m, phase in enumerate(PHASES):
        half = fock.coherent_state(beta * phase / np.sqrt(2.0), trunc)
        weights[m] = fock.homodyne_density(half, x_a, "x") * fock.homodyne_density(half, p_a, "p")
    return weights / weights.sum()


def conditional_grid(beta: float, n: int = 7) -> np.ndarray:
    r = np.sqrt(2.0) * beta + 1.5
    return np.linspace(-r, r, n)


def run_oracle_checks(alpha: float, beta: float, trunc: fock.TruncationConfig | None = None) -> dict:
    """Maximum absolute deviations between closed forms and Fock numerics."""
    trunc = trunc or fock.default_truncation()
    closed_lam = np.sort(four_state_spectrum(alpha).as_array())[::-1]
    deviations = {"spectrum": float(np.abs(closed_lam - fock_spectrum(alpha, trunc)).max())}

    phi_closed = phi_l_covariance(alpha)
    phi_fock = fock_phi_l_covariance(alpha, trunc)
    deviations["phi_l_covariance"] = float(np.abs(phi_closed.matrix().matrix - phi_fock.matrix).max())

    v_a, v_b, c = mixed_entries(alpha, beta)
    mixed_closed = TwoModeCovariance.from_blocks(v_a, v_b, c, Structure.IDENTITY)
    deviations["mixed_covariance"] = float(
        np.abs(mixed_closed.matrix - fock_mixed_covariance(alpha, beta, trunc).matrix).max()
    )

    if beta > 0:
        grid = conditional_grid(beta)
        worst = 0.0
        for x in grid:
            for p in grid:
                diff = conditional_coefficients(x, p, beta) - fock_conditional_coefficients(x, p, beta, trunc)
                worst = max(worst, float(np.abs(diff).max()))
        deviations["conditional_coefficients"] = worst

    max_dev = max(deviations.values())
    return {
        "alpha": alpha,
        "beta": beta,
        "dim": trunc.dim,
        "spectrum": closed_lam.tolist(),
        "v": phi_closed.v,
        "z": phi_closed.z,
        "z_fock": float(phi_fock.matrix[0, 2]),
        "deviations": deviations,
        "max_deviation": max_dev,
        "tolerance": TOLERANCE,
        "passed": bool(max_dev <= TOLERANCE),
    }

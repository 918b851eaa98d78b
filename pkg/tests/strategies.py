"""Hypothesis strategies shared across test modules."""
import numpy as np
from hypothesis import strategies as st
from scipy.linalg import expm

from cvqkd4.covariance import OMEGA, TwoModeCovariance


def random_symplectic(rng: np.random.Generator, scale: float = 0.4) -> np.ndarray:
    h = rng.normal(scale=scale, size=(4, 4))
    return expm(OMEGA @ (h + h.T) / 2)


def random_physical_matrix(rng: np.random.Generator, nu_max: float = 6.0) -> np.ndarray:
    nus = rng.uniform(1.0, nu_max, size=2)
    s = random_symplectic(rng)
    return s @ np.diag([nus[0], nus[0], nus[1], nus[1]]) @ s.T


@st.composite
def physical_covariances(draw):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    m = random_physical_matrix(np.random.default_rng(seed))
    return TwoModeCovariance(0.5 * (m + m.T))

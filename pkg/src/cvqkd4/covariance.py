"""Two-mode covariance matrices in shot-noise units.

Quadrature ordering is ``(x_A, p_A, x_B, p_B)`` and the vacuum has unit variance.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import PhysicalityError

OMEGA = np.array(
    [[0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -1.0, 0.0]]
)

PHYSICALITY_TOL = 1e-8


class Structure(str, enum.Enum):
    """Shape of the A-B correlation block."""

    SIGMA_Z = "sigma_z"   # diag(c, -c)
    IDENTITY = "identity"  # diag(c, c)
    GENERAL = "general"


@dataclass(frozen=True)
class TwoModeCovariance:
    matrix: np.ndarray
    structure: Structure = Structure.GENERAL

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0):
            raise ValueError("covariance matrix must be symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_blocks(cls, v_a: float, v_b: float, c: float, structure=Structure.SIGMA_Z):
        """Build ``[[v_a I, c S], [c S, v_b I]]`` with S = sigma_z or identity."""
        structure = Structure(structure)
        if structure is Structure.GENERAL:
            raise ValueError("from_blocks needs SIGMA_Z or IDENTITY")
        s = -1.0 if structure is Structure.SIGMA_Z else 1.0
        m = np.diag([v_a, v_a, v_b, v_b]).astype(float)
        m[0, 2] = m[2, 0] = c
        m[1, 3] = m[3, 1] = s * c
        return cls(m, structure)

    @classmethod
    def identity(cls):
        return cls(np.eye(4), Structure.IDENTITY)

    @property
    def block_a(self) -> np.ndarray:
        return self.matrix[:2, :2]

    @property
    def block_b(self) -> np.ndarray:
        return self.matrix[2:, 2:]

    @property
    def block_c(self) -> np.ndarray:
        return self.matrix[:2, 2:]

    @property
    def v_a(self) -> float:
        return float(self.matrix[0, 0])

    @property
    def v_b(self) -> float:
        return float(self.matrix[2, 2])

    @property
    def c(self) -> float:
        """Magnitude-carrying x_A x_B correlation entry."""
        return float(self.matrix[0, 2])

    def min_uncertainty_eigenvalue(self) -> float:
        """Smallest eigenvalue of the Hermitian form gamma + i Omega."""
        return float(np.linalg.eigvalsh(self.matrix + 1j * OMEGA).min())

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return self.min_uncertainty_eigenvalue() > -tol

    def check_physical(self, tol: float = PHYSICALITY_TOL) -> "TwoModeCovariance":
        lam = self.min_uncertainty_eigenvalue()
        if lam <= -tol:
            raise PhysicalityError(f"gamma + i*Omega has eigenvalue {lam:.3e} < 0")
        return self

"""Two-level states and the three polarization spin observables.

Basis convention: ``|H> = (1, 0)``, ``|V> = (0, 1)``. ``S_HV`` is diagonal
with H -> +1 and V -> -1; ``|P>, |M> = (|H> +- |V>)/sqrt(2)`` are the
eigenvectors of ``S_PM``. Angles are radians throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOL = 1e-12

KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_P = (KET_H + KET_V) / np.sqrt(2.0)
KET_M = (KET_H - KET_V) / np.sqrt(2.0)

IDENTITY = np.eye(2, dtype=complex)


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


PROJ_H = projector(KET_H)
PROJ_V = projector(KET_V)
PROJ_P = projector(KET_P)
PROJ_M = projector(KET_M)


def _frozen(matrix) -> np.ndarray:
    arr = np.array(matrix, dtype=complex)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QubitState:
    """Density matrix of a polarization qubit."""

    rho: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.rho)
        if not np.all(np.isfinite(rho)):
            raise ValueError("density matrix has non-finite entries")
        if abs(np.trace(rho) - 1.0) > ATOL:
            raise ValueError(f"trace(rho) = {np.trace(rho)}, expected 1")
        if not np.allclose(rho, rho.conj().T, atol=ATOL, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(rho).min() < -ATOL:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_ket(cls, ket) -> "QubitState":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(projector(ket))

    @classmethod
    def maximally_mixed(cls) -> "QubitState":
        return cls(IDENTITY / 2)


@dataclass(frozen=True, eq=False)
class SpinObservable:
    """Hermitian observable with eigenvalues +-1."""

    label: str
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if not np.allclose(mat, mat.conj().T, atol=ATOL, rtol=0):
            raise ValueError(f"{self.label} is not Hermitian")
        if not np.allclose(mat @ mat, IDENTITY, atol=ATOL, rtol=0):
            raise ValueError(f"{self.label} does not square to the identity")
        object.__setattr__(self, "matrix", mat)


S_HV = SpinObservable("S_HV", PROJ_H - PROJ_V)
S_PM = SpinObservable("S_PM", PROJ_P - PROJ_M)


def linear_polarization_ket(phi: float) -> np.ndarray:
    """``cos(phi)|V> + sin(phi)|H>``, with ``phi`` measured from vertical."""
    if not np.isfinite(phi):
        raise ValueError(f"phi must be finite, got {phi!r}")
    return np.sin(phi) * KET_H + np.cos(phi) * KET_V


def prepare_linear_polarization(phi: float) -> QubitState:
    return QubitState(projector(linear_polarization_ket(phi)))


def spin_along(phi: float) -> SpinObservable:
    """The ``S1`` observable whose +1 eigenstate is the polarization at ``phi``."""
    up = linear_polarization_ket(phi)
    down = linear_polarization_ket(phi + np.pi / 2)
    return SpinObservable("S1", projector(up) - projector(down))


def expectation(state: QubitState, obs: SpinObservable) -> float:
    value = np.trace(state.rho @ obs.matrix)
    if abs(value.imag) > ATOL:
        raise ValueError(f"expectation has imaginary part {value.imag}")
    return float(value.real)


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a

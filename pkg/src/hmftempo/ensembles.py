"""Comparison ensembles and density-matrix observables."""

from __future__ import annotations

import enum
import math
import warnings

import numpy as np

from .model import DEGENERACY_TOL, SIGMA_X, SystemModel, as_hermitian

#: partial-transpose eigenvalues below -NEGATIVITY_TOL count as negative
NEGATIVITY_TOL = 1e-12
IMAG_DEFECT_TOL = 1e-10


class EnsembleKind(enum.Enum):
    SYSTEM = "system"
    PROJECTED = "projected"
    HMF = "hmf"


def gibbs(h: np.ndarray, beta: float) -> np.ndarray:
    """Normalized ``exp(-beta h)``."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    h = as_hermitian(h, "H")
    w, v = np.linalg.eigh(h)
    p = np.exp(-beta * (w - w.min()))
    p /= p.sum()
    return (v * p) @ v.conj().T


def project(model: SystemModel) -> np.ndarray:
    """Block-diagonal part of ``H_S`` with respect to the eigenspaces of ``X``."""
    w = model.x_eigenvalues
    v = model.x_eigenvectors
    out = np.zeros_like(model.h_s)
    used = np.zeros(len(w), dtype=bool)
    for i in range(len(w)):
        if used[i]:
            continue
        block = np.abs(w - w[i]) < DEGENERACY_TOL
        used |= block
        p = v[:, block] @ v[:, block].conj().T
        out += p @ model.h_s @ p
    return 0.5 * (out + out.conj().T)


def tauz_system(omega_q: float, theta: float, beta: float) -> float:
    """Pointer population difference in the system Gibbs state."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    return -math.cos(theta) * math.tanh(0.5 * beta * omega_q)


def tauz_projected(omega_q: float, theta: float, beta: float) -> float:
    """Pointer population difference in the projected Gibbs state."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    return -math.tanh(0.5 * beta * omega_q * math.cos(theta))


def expectation(rho: np.ndarray, op: np.ndarray) -> float:
    """``Re tr(rho op)``; warns if the imaginary part exceeds 1e-10."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, operator {op.shape}")
    value = np.einsum("ij,ji->", rho, op)
    if abs(value.imag) > IMAG_DEFECT_TOL:
        warnings.warn(f"expectation value has imaginary part {value.imag:.3e}", RuntimeWarning)
    return float(value.real)


def partial_transpose(rho: np.ndarray, qubit: int = 0) -> np.ndarray:
    """Partial transpose of a two-qubit state; ``qubit`` 0 is ``a``, 1 is ``b``."""
    if qubit not in (0, 1):
        raise ValueError("qubit must be 0 (a) or 1 (b)")
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    t = t.transpose(2, 1, 0, 3) if qubit == 0 else t.transpose(0, 3, 2, 1)
    return t.reshape(4, 4)


def negativity(rho: np.ndarray, qubit: int = 0) -> float:
    """Modulus of the sum of negative eigenvalues of the partial transpose."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"negativity needs a 4x4 two-qubit state, got {rho.shape}")
    rho = as_hermitian(rho, "rho", tol=1e-10)
    lam = np.linalg.eigvalsh(partial_transpose(rho, qubit))
    return float(-np.sum(lam[lam < -NEGATIVITY_TOL]))


def cross_coherence(rho: np.ndarray) -> float:
    """``<sigma^x_a sigma^x_b>`` of a two-qubit state."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"cross coherence needs a 4x4 two-qubit state, got {rho.shape}")
    return expectation(rho, np.kron(SIGMA_X, SIGMA_X))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of ``a - b`` for Hermitian ``a``, ``b``."""
    diff = np.asarray(a) - np.asarray(b)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))

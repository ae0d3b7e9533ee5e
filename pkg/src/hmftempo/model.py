"""System models: a Hamiltonian ``H_S`` and the operator ``X`` it couples to
the reservoir through.

Operators are stored in the input ("original") basis. The eigenbasis of
``X`` (the pointer basis) is computed once and kept alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-10

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class UnsupportedModelError(ValueError):
    """Operation only defined for a different kind of model."""


def as_hermitian(a, name: str = "operator", tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``a`` as a square Hermitian matrix (d >= 2) and return it as a
    complex array."""
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError(f"{name} must have dimension >= 2")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    defect = np.max(np.abs(a - a.conj().T))
    if defect > tol * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"{name} is not Hermitian (defect {defect:.3e})")
    return a


def _fix_phase(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-12)[0]
    return v * (abs(v[idx]) / v[idx])


def pointer_basis(x: np.ndarray):
    """Eigen-decomposition of ``x`` in a deterministic order.

    Eigenvalues descend. Each eigenvector has its first nonzero component
    real and positive; inside a degenerate group vectors are sorted
    lexicographically by their components.
    """
    w, v = np.linalg.eigh(x)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    v = np.column_stack([_fix_phase(v[:, i]) for i in range(v.shape[1])])
    start = 0
    cols = list(range(len(w)))
    while start < len(w):
        stop = start + 1
        while stop < len(w) and abs(w[stop] - w[start]) < DEGENERACY_TOL:
            stop += 1
        group = cols[start:stop]
        key = lambda i: tuple(-c for z in np.round(v[:, i], 12) for c in (z.real, z.imag))
        cols[start:stop] = sorted(group, key=key)
        start = stop
    return w[cols].copy(), v[:, cols].copy()


@dataclass(frozen=True, eq=False)
class SystemModel:
    """``H_S`` and coupling operator ``X`` with the pointer basis of ``X``.

    ``x_eigenvectors`` holds eigenvectors as columns, so
    ``V.conj().T @ X @ V == diag(x_eigenvalues)``.
    """

    h_s: np.ndarray
    x: np.ndarray
    x_eigenvalues: np.ndarray = field(init=False)
    x_eigenvectors: np.ndarray = field(init=False)
    kind: str = "generic"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        h = as_hermitian(self.h_s, "H_S")
        x = as_hermitian(self.x, "X")
        if h.shape != x.shape:
            raise ValueError(f"H_S {h.shape} and X {x.shape} differ in dimension")
        w, v = pointer_basis(x)
        for name, val in (("h_s", h), ("x", x), ("x_eigenvalues", w), ("x_eigenvectors", v)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def dim(self) -> int:
        return self.h_s.shape[0]

    def to_pointer(self, op: np.ndarray) -> np.ndarray:
        """Express ``op`` (original basis) in the pointer basis."""
        v = self.x_eigenvectors
        return v.conj().T @ op @ v

    def from_pointer(self, op: np.ndarray) -> np.ndarray:
        v = self.x_eigenvectors
        return v @ op @ v.conj().T

    def with_pointer_basis(self, vectors: np.ndarray) -> "SystemModel":
        """Copy of the model using another eigenbasis of ``X`` (e.g. a
        re-phased or rotated degenerate subspace). ``vectors`` must
        diagonalize ``X`` with the same eigenvalue order."""
        vectors = np.asarray(vectors, dtype=complex)
        d = np.diag(vectors.conj().T @ self.x @ vectors)
        if not np.allclose(vectors.conj().T @ vectors, np.eye(self.dim), atol=1e-12):
            raise ValueError("pointer basis must be unitary")
        if not np.allclose(d.real, self.x_eigenvalues, atol=1e-10):
            raise ValueError("vectors do not reproduce the eigenvalue order of X")
        out = SystemModel(self.h_s, self.x, kind=self.kind, params=dict(self.params))
        vectors.setflags(write=False)
        object.__setattr__(out, "x_eigenvectors", vectors)
        return out


def build_single_qubit(omega_q: float, theta: float) -> SystemModel:
    """Qubit with ``H_S = (omega_q/2) sigma_z`` coupled through
    ``X = cos(theta) sigma_z - sin(theta) sigma_x``."""
    if not omega_q > 0:
        raise ValueError(f"omega_q must be > 0, got {omega_q}")
    h = 0.5 * omega_q * SIGMA_Z
    x = np.cos(theta) * SIGMA_Z - np.sin(theta) * SIGMA_X
    return SystemModel(h, x, kind="single_qubit", params={"omega_q": omega_q, "theta": theta})


def build_two_qubit(omega_q: float) -> SystemModel:
    """Two qubits ``a`` (first tensor factor) and ``b`` with
    ``H_S = (omega_q/2)(sz_a + sz_b)`` and ``X = sx_a + sx_b``."""
    if not omega_q > 0:
        raise ValueError(f"omega_q must be > 0, got {omega_q}")
    h = 0.5 * omega_q * (np.kron(SIGMA_Z, IDENTITY) + np.kron(IDENTITY, SIGMA_Z))
    x = np.kron(SIGMA_X, IDENTITY) + np.kron(IDENTITY, SIGMA_X)
    return SystemModel(h, x, kind="two_qubit", params={"omega_q": omega_q})


def pointer_observables(model: SystemModel):
    """``(tau_z, tau_x)`` of a single-qubit model, in the original basis."""
    if model.kind != "single_qubit":
        raise UnsupportedModelError(
            f"pointer observables need a single-qubit model, got {model.kind!r}"
        )
    theta = model.params["theta"]
    tau_z = np.cos(theta) * SIGMA_Z - np.sin(theta) * SIGMA_X
    tau_x = np.cos(theta) * SIGMA_X + np.sin(theta) * SIGMA_Z
    return tau_z, tau_x

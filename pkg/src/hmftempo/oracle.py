"""Brute-force references for checking the tensor-network contraction.

``exact_path_sum`` enumerates every interior path of the discretized path
sum. ``exact_hmf_ed`` diagonalizes system plus a few truncated oscillator
modes and traces the modes out. Neither shares code with the MPS route
beyond the influence coefficients (path sum) or nothing at all (ED).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .bath import InfluenceKernel
from .model import SystemModel

MAX_PATHS = 10**7
MAX_ED_DIM = 20_000
PATH_CHUNK = 1 << 16
FOCK_CHECK_TOL = 1e-8


class OracleCapError(ValueError):
    """Problem too large for brute force."""


@dataclass(frozen=True)
class DiscreteBathSpec:
    """Oscillator modes ``(g, nu)`` with a Fock cutoff ``n_max`` per mode."""

    modes: tuple
    fock_cutoff: int = 40

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple((float(g), float(nu)) for g, nu in self.modes))
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be >= 2")
        if any(not nu > 0 for _, nu in self.modes):
            raise ValueError("mode frequencies must be > 0")

    def dimension(self, system_dim: int) -> int:
        return system_dim * (self.fock_cutoff + 1) ** len(self.modes)


def exact_path_sum(model: SystemModel, kernel: InfluenceKernel, n_steps: int | None = None,
                   order: np.ndarray | None = None) -> np.ndarray:
    """Unnormalized pointer-basis path sum by explicit enumeration.

    Row ``j_0``, column ``j_N``. ``order`` optionally permutes the enumeration
    order of interior paths (the sum must not depend on it).
    """
    n = kernel.n_steps if n_steps is None else n_steps
    if n != kernel.n_steps:
        raise ValueError("n_steps does not match the kernel")
    d = model.dim
    n_paths = d ** (n - 1)
    if n_paths > MAX_PATHS:
        raise OracleCapError(f"{n_paths} interior paths exceed the cap of {MAX_PATHS}")
    h = model.to_pointer(model.h_s)
    prop = scipy.linalg.expm(-kernel.delta * h)
    x = model.x_eigenvalues
    eta = kernel.eta
    index = np.arange(n_paths) if order is None else np.asarray(order)
    if order is not None and not np.array_equal(np.sort(index), np.arange(n_paths)):
        raise ValueError("order must be a permutation of the path indices")

    out = np.zeros((d, d), dtype=complex)
    for start in range(0, n_paths, PATH_CHUNK):
        chunk = index[start:start + PATH_CHUNK]
        interior = np.stack(np.unravel_index(chunk, (d,) * (n - 1)), axis=1)
        for j0 in range(d):
            paths = np.column_stack([np.full(len(chunk), j0), interior])  # cells 0..N-1
            xs = x[paths]
            log_w = np.zeros(len(chunk))
            for k in range(n):
                for kp in range(k + 1):
                    log_w += eta[k - kp] * xs[:, k] * xs[:, kp]
            w = np.exp(log_w).astype(complex)
            for k in range(n - 1):
                w *= prop[paths[:, k], paths[:, k + 1]]
            # final propagator into j_N
            out[j0] += w @ prop[paths[:, n - 1], :]
    return out


def _ladder(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1)


def _ed(model: SystemModel, bath: DiscreteBathSpec, beta: float, counterterm: bool = False):
    d = model.dim
    n_f = bath.fock_cutoff + 1
    n_modes = len(bath.modes)
    dim_r = n_f**n_modes
    if d * dim_r > MAX_ED_DIM:
        raise OracleCapError(f"total dimension {d * dim_r} exceeds cap {MAX_ED_DIM}")
    b = _ladder(bath.fock_cutoff)
    num = np.diag(np.arange(n_f, dtype=float))
    eye_f = np.eye(n_f)

    def embed(op, i):
        mats = [eye_f] * n_modes
        mats[i] = op
        out = np.ones((1, 1))
        for m in mats:
            out = np.kron(out, m)
        return out

    h_r = np.zeros((dim_r, dim_r))
    coupling = np.zeros((dim_r, dim_r))
    for i, (g, nu) in enumerate(bath.modes):
        h_r += nu * embed(num, i)
        coupling += g * embed(b + b.T, i)
    h = (np.kron(model.h_s, np.eye(dim_r)) + np.kron(model.x, coupling)
         + np.kron(np.eye(d), h_r))
    if counterterm:
        lam = sum(g * g / nu for g, nu in bath.modes)
        h = h + lam * np.kron(model.x @ model.x, np.eye(dim_r))
    w, v = scipy.linalg.eigh(h)
    log_z = logsumexp(-beta * w)
    p = np.exp(-beta * w - log_z)
    rho_full = (v * p) @ v.conj().T
    rho = np.einsum("iaja->ij", rho_full.reshape(d, dim_r, d, dim_r))
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    log_z_r = logsumexp(-beta * np.diag(h_r))
    return rho, float(log_z - log_z_r)


def exact_hmf_ed(model: SystemModel, bath: DiscreteBathSpec, beta: float, check_fock: bool = True,
                 counterterm: bool = False):
    """Reduced thermal state and ``log(Z_SR / Z_R)`` by full diagonalization.

    ``counterterm`` adds ``(sum_i g_i^2/nu_i) X^2`` to the Hamiltonian, matching
    the option of the same name in :func:`~hmftempo.imtempo.compute_hmf`.

    With ``check_fock`` the calculation is repeated with five more Fock states
    per mode and a warning is issued if the state moves by more than 1e-8 in
    trace distance.
    """
    if not beta > 0:
        raise ValueError("beta must be > 0")
    rho, log_ratio = _ed(model, bath, beta, counterterm)
    if check_fock:
        bigger = DiscreteBathSpec(bath.modes, bath.fock_cutoff + 5)
        try:
            rho2, _ = _ed(model, bigger, beta, counterterm)
        except OracleCapError:
            rho2 = None
        if rho2 is not None:
            diff = rho - rho2
            dist = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))))
            if dist > FOCK_CHECK_TOL:
                warnings.warn(
                    f"Fock cutoff {bath.fock_cutoff} not converged (trace distance {dist:.2e})",
                    RuntimeWarning,
                    stacklevel=2,
                )
    return rho, log_ratio

"""Imaginary-time TEMPO: the reduced thermal state of a system coupled to a
Gaussian bosonic reservoir.

The interval ``[0, beta]`` is cut into ``N`` cells. With a first-order
Trotter split, tracing out the reservoir leaves a sum over pointer-basis
paths ``j_0 ... j_N`` weighted by system propagators and by
``exp(eta[k - k'] X_{j_k} X_{j_k'})`` for every ordered pair of cells. For
each boundary value ``j_0`` the sum over ``j_1 ... j_{N-1}`` is built up as
an MPS one cell at a time and then closed with the final propagator.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bath import InfluenceKernel, SpectralDensity, influence_kernel, reorganization_energy
from .model import SystemModel
from .tensor_core import (
    GrowthRow,
    MatrixProductState,
    TruncationPolicy,
    mps_apply_growth_row,
    mps_contract_log,
)

log = logging.getLogger(__name__)

#: hard cap on N * d
MAX_STEPS_TIMES_DIM = 100_000
#: eigenvalues of the normalized state in [-CLIP_TOL, 0) are set to zero
CLIP_TOL = 1e-10
#: eigenvalues below -INVALID_TOL mark the result invalid
INVALID_TOL = 1e-6


class ContractionError(RuntimeError):
    """The contracted path sum is not a usable (positive, finite) trace."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}; diagnostics={diagnostics}")
        self.diagnostics = diagnostics


@dataclass
class HmfResult:
    """Normalized mean-force Gibbs state and contraction diagnostics.

    ``rho`` is in the original basis of the model. ``rho_tilde`` is the raw,
    unsymmetrized path sum in the pointer basis (``j_0`` rows, ``j_N``
    columns), i.e. the unnormalized reduced state divided by ``Z_R``.
    """

    rho: np.ndarray
    log_z_ratio: float
    rho_tilde: np.ndarray
    max_bond: int
    truncation_error: float
    hermiticity_defect: float
    min_eigenvalue: float
    valid: bool = True
    warnings: list = field(default_factory=list)

    @property
    def diagnostics(self) -> dict:
        return {
            "max_bond": self.max_bond,
            "truncation_error": self.truncation_error,
            "hermiticity_defect": self.hermiticity_defect,
            "min_eigenvalue": self.min_eigenvalue,
            "valid": self.valid,
        }


def propagator(model: SystemModel, delta: float) -> np.ndarray:
    """``exp(-delta H_S)`` in the pointer basis of ``model``."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    h = model.to_pointer(model.h_s)
    if np.max(np.abs(h.imag)) <= 1e-14 * max(1.0, np.max(np.abs(h))):
        # real-symmetric in the pointer basis: keep the network real
        h = h.real
    return scipy.linalg.expm(-delta * h)


def growth_row(
    k: int,
    j0: int,
    x: np.ndarray,
    prop: np.ndarray,
    weights: list,
    eta: np.ndarray,
) -> GrowthRow:
    """Row adding cell ``k >= 1`` for boundary index ``j0``.

    ``weights[m]`` is the matrix ``exp(eta[m] x_j x_c)``.
    """
    new_site = np.exp(eta[0] * x**2 + eta[k] * x[j0] * x)
    if k == 1:
        return GrowthRow(step=1, new_site=new_site * prop[j0])
    # existing sites are cells 1 .. k-1
    pass_through = tuple(weights[k - l] for l in range(1, k))
    return GrowthRow(step=k, pass_through=pass_through, link=prop, new_site=new_site)


def _boundary_row(model, prop, kernel, j0, policy):
    """Row ``j0`` of the path sum as ``(mantissas, log_scale, state)``."""
    x = model.x_eigenvalues
    eta = kernel.eta
    n = kernel.n_steps
    weights = [np.exp(e * np.outer(x, x)) for e in eta]
    state = MatrixProductState()
    for k in range(1, n):
        state = mps_apply_growth_row(state, growth_row(k, j0, x, prop, weights, eta), policy)
    ones = np.ones(model.dim)
    values = np.empty(model.dim, dtype=complex)
    log_scale = 0.0
    for jn in range(model.dim):
        terminals = [ones] * (n - 2) + [prop[:, jn]]
        values[jn], log_scale = mps_contract_log(state, terminals)
    return values, log_scale + eta[0] * x[j0] ** 2, state


def contract_path_sum(model: SystemModel, kernel: InfluenceKernel, policy: TruncationPolicy):
    """Unnormalized pointer-basis path sum as ``(matrix, log_scale, info)``.

    The path sum equals ``matrix * exp(log_scale)``.
    """
    d = model.dim
    prop = propagator(model, kernel.delta)
    rows, scales = [], []
    max_bond, trunc = 1, 0.0
    for j0 in range(d):
        values, scale, state = _boundary_row(model, prop, kernel, j0, policy)
        rows.append(values)
        scales.append(scale)
        max_bond = max(max_bond, state.max_bond)
        trunc += state.truncation_error
    top = max(scales)
    matrix = np.array([r * math.exp(s - top) for r, s in zip(rows, scales)])
    return matrix, top, {"max_bond": max_bond, "truncation_error": trunc}


def compute_hmf(
    model: SystemModel,
    J: SpectralDensity,
    beta: float,
    n_steps: int,
    policy: TruncationPolicy = TruncationPolicy(),
    kernel: InfluenceKernel | None = None,
    counterterm: bool = False,
) -> HmfResult:
    """Mean-force Gibbs state of ``model`` coupled to a reservoir with
    spectral density ``J`` at inverse temperature ``beta``.

    Parameters
    ----------
    n_steps
        Number of imaginary-time cells ``N``; the Trotter step is ``beta/N``.
    policy
        SVD truncation used while growing the network.
    kernel
        Precomputed influence coefficients; built from ``J`` if omitted.
    counterterm
        Add the reorganization term ``lambda X^2`` (``lambda = int J/nu``) to
        the coupling, i.e. couple through ``sum_i nu_i (b_i + g_i X/nu_i)^dag
        (b_i + g_i X/nu_i)``. Without it the bare coupling shifts the pointer
        states by ``-lambda X_j^2``, which matters whenever ``X^2`` is not
        proportional to the identity.
    """
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if n_steps < 2:
        raise ValueError(f"n_steps must be >= 2, got {n_steps}")
    if n_steps * model.dim > MAX_STEPS_TIMES_DIM:
        raise ValueError(f"n_steps*d = {n_steps * model.dim} exceeds cap {MAX_STEPS_TIMES_DIM}")
    if kernel is None:
        kernel = influence_kernel(J, beta, n_steps)
    elif kernel.n_steps != n_steps or kernel.beta != beta:
        raise ValueError("kernel does not match beta / n_steps")
    if counterterm:
        eta = kernel.eta.copy()
        eta[0] -= kernel.delta * reorganization_energy(J)
        kernel = InfluenceKernel(kernel.beta, kernel.n_steps, eta)

    matrix, log_scale, info = contract_path_sum(model, kernel, policy)
    tr = np.trace(matrix)
    diag = {**info, "trace": complex(tr), "log_scale": log_scale}
    if not np.all(np.isfinite(matrix)) or not (tr.real > 0) or abs(tr.imag) > 1e-8 * abs(tr):
        raise ContractionError("path sum has a non-positive or non-finite trace", diag)

    log_z_ratio = log_scale + math.log(tr.real)
    scale = abs(tr.real)
    herm_defect = float(np.max(np.abs(matrix - matrix.conj().T)) / scale)
    rho_p = 0.5 * (matrix + matrix.conj().T) / tr.real

    notes = []
    w, v = np.linalg.eigh(rho_p)
    min_eig = float(w.min())
    valid = min_eig >= -INVALID_TOL
    if not valid:
        msg = f"HMF state has eigenvalue {min_eig:.3e} < -{INVALID_TOL:g}"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning)
    clip = (w < 0) & (w >= -CLIP_TOL)
    if np.any(clip):
        w = np.where(clip, 0.0, w)
        rho_p = (v * w) @ v.conj().T
        rho_p /= np.trace(rho_p).real

    rho = model.from_pointer(rho_p)
    rho = 0.5 * (rho + rho.conj().T)
    with np.errstate(over="ignore"):
        rho_tilde = matrix * np.exp(log_scale)
    log.debug("hmf: N=%d max_bond=%d log Z=%.6g", n_steps, info["max_bond"], log_z_ratio)
    return HmfResult(
        rho=rho,
        log_z_ratio=log_z_ratio,
        rho_tilde=rho_tilde,
        max_bond=info["max_bond"],
        truncation_error=info["truncation_error"],
        hermiticity_defect=herm_defect,
        min_eigenvalue=min_eig,
        valid=valid,
        warnings=notes,
    )

"""Matrix product state machinery for the imaginary-time path sum.

Dense tensors are plain ``numpy`` arrays. A :class:`MatrixProductState`
holds rank-3 site tensors with legs ``(left bond, physical, right bond)``.
The only operations needed are growth by one site (applying a
:class:`GrowthRow`), SVD compression, and a full contraction against one
terminal vector per site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg


class SVDError(RuntimeError):
    """SVD failed to converge."""

    def __init__(self, shape):
        super().__init__(f"SVD did not converge for matrix of shape {shape}")
        self.shape = tuple(shape)


class BondDimensionError(RuntimeError):
    """A bond needs more singular values than ``max_bond`` allows."""

    def __init__(self, bond: int, required: int, max_bond: int):
        super().__init__(
            f"bond {bond} requires dimension {required} > max_bond={max_bond}"
        )
        self.bond = bond
        self.required = required
        self.max_bond = max_bond


@dataclass(frozen=True)
class TruncationPolicy:
    """SVD truncation settings.

    Singular values below ``rel_cutoff * s_max`` of each decomposed matrix are
    dropped. ``max_bond`` caps the number retained (``None`` = unlimited).
    """

    rel_cutoff: float = 1e-12
    max_bond: Optional[int] = None

    def __post_init__(self):
        if not (0.0 <= self.rel_cutoff < 1.0) or not math.isfinite(self.rel_cutoff):
            raise ValueError(f"rel_cutoff must lie in [0, 1), got {self.rel_cutoff}")
        if self.max_bond is not None and self.max_bond < 1:
            raise ValueError(f"max_bond must be positive, got {self.max_bond}")
        if self.rel_cutoff == 0.0 and self.max_bond is not None:
            raise ValueError("rel_cutoff=0 is only allowed with unlimited max_bond")


def _as_float_or_complex(a) -> np.ndarray:
    """Real data stays real (half the cost); anything else becomes complex."""
    a = np.asarray(a)
    return a.astype(float if np.isrealobj(a) else complex, copy=False)


def _svd(matrix: np.ndarray):
    try:
        return np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SVDError(matrix.shape) from exc


def _retained(s: np.ndarray, rel_cutoff: float) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 1
    return max(1, int(np.count_nonzero(s >= rel_cutoff * s[0])))


def svd_truncate(matrix: np.ndarray, policy: TruncationPolicy):
    """Truncated SVD ``matrix ~= U @ diag(S) @ V``.

    Returns ``(U, S, V, discarded_weight)`` where ``discarded_weight`` is the
    fraction of squared singular values thrown away.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ValueError(f"expected a rank-2 tensor, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix contains non-finite entries")
    u, s, vh = _svd(matrix)
    keep = _retained(s, policy.rel_cutoff)
    if policy.max_bond is not None:
        keep = min(keep, policy.max_bond)
    total = float(np.sum(s**2))
    discarded = float(np.sum(s[keep:] ** 2)) / total if total > 0 else 0.0
    return u[:, :keep], s[:keep], vh[:keep, :], discarded


@dataclass(frozen=True)
class MatrixProductState:
    """Open-boundary MPS. The represented tensor is ``exp(log_norm)`` times
    the plain contraction of ``sites``."""

    sites: tuple = ()
    truncation_error: float = 0.0
    log_norm: float = 0.0

    def __post_init__(self):
        sites = tuple(_as_float_or_complex(a) for a in self.sites)
        object.__setattr__(self, "sites", sites)
        if not sites:
            return
        if any(a.ndim != 3 for a in sites):
            raise ValueError("MPS sites must be rank-3 tensors")
        if sites[0].shape[0] != 1 or sites[-1].shape[2] != 1:
            raise ValueError("outer bonds of an MPS must have dimension 1")
        d = sites[0].shape[1]
        for i, (a, b) in enumerate(zip(sites[:-1], sites[1:])):
            if a.shape[2] != b.shape[0]:
                raise ValueError(f"bond {i} mismatch: {a.shape[2]} != {b.shape[0]}")
        if any(a.shape[1] != d for a in sites):
            raise ValueError("all sites must share one physical dimension")

    def __len__(self):
        return len(self.sites)

    @property
    def physical_dim(self) -> Optional[int]:
        return self.sites[0].shape[1] if self.sites else None

    @property
    def bond_dims(self) -> list:
        return [a.shape[2] for a in self.sites[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    @classmethod
    def product(cls, vectors: Sequence[np.ndarray]) -> "MatrixProductState":
        """Bond-dimension-one MPS of the outer product of ``vectors``."""
        return cls(tuple(np.asarray(v).reshape(1, -1, 1) for v in vectors))

    def to_dense(self) -> np.ndarray:
        """Full tensor with one axis per site (small states only)."""
        out = np.ones((1, 1))
        for a in self.sites:
            out = np.tensordot(out, a, axes=([-1], [0]))
        return out.reshape(out.shape[1:-1]) * math.exp(self.log_norm)


@dataclass(frozen=True)
class GrowthRow:
    """One row of the triangular network, appending a site to an MPS.

    The new physical index ``c`` is passed through every existing site ``l``
    multiplying it by ``pass_through[l][j_l, c]``. The last existing site is
    additionally multiplied by ``link[j_last, c]``, and the new site carries
    the one-body weight ``new_site[c]``.
    """

    step: int
    pass_through: tuple = field(default=())
    link: Optional[np.ndarray] = None
    new_site: np.ndarray = field(default_factory=lambda: np.ones(1))

    @property
    def n_sites(self) -> int:
        """Site count after the row has been applied."""
        return len(self.pass_through) + 1


def _right_canonicalize(sites: list) -> float:
    """Right-orthonormalize ``sites`` in place; returns log of the norm removed."""
    for l in range(len(sites) - 1, 0, -1):
        a = sites[l]
        chi_l, d, chi_r = a.shape
        q, r = np.linalg.qr(a.reshape(chi_l, d * chi_r).conj().T)
        sites[l] = q.conj().T.reshape(-1, d, chi_r)
        sites[l - 1] = np.tensordot(sites[l - 1], r.conj().T, axes=([2], [0]))
    norm = float(np.linalg.norm(sites[0]))
    if norm == 0.0 or not math.isfinite(norm):
        raise FloatingPointError(f"MPS norm is {norm}")
    sites[0] = sites[0] / norm
    return math.log(norm)


def mps_apply_growth_row(
    state: MatrixProductState, row: GrowthRow, policy: TruncationPolicy
) -> MatrixProductState:
    """Apply ``row`` to ``state`` and compress, returning a state one site longer.

    The row is zipped in left to right, with an SVD truncation after each bond
    expansion. The result is right-canonical with its norm held in
    ``log_norm``.
    """
    n = len(state)
    if row.n_sites != n + 1:
        raise ValueError(f"row builds {row.n_sites} sites but state has {n}")
    u = _as_float_or_complex(row.new_site)
    d = u.shape[0]
    if n == 0:
        sites = [u.reshape(1, d, 1)]
        log_norm = _right_canonicalize(sites)
        return MatrixProductState(tuple(sites), state.truncation_error, state.log_norm + log_norm)
    if state.physical_dim != d:
        raise ValueError(f"physical dims differ: state {state.physical_dim}, row {d}")

    discarded = 0.0
    cutoff_only = TruncationPolicy(policy.rel_cutoff)
    new_sites = []
    # carry legs: (new left bond, old left bond, passed index c)
    carry = np.ones((1, 1, d))
    for l, a in enumerate(state.sites):
        w = np.asarray(row.pass_through[l])
        last = l == n - 1
        if last:
            w = w * np.asarray(row.link)
        # t[x, c, j, b] = sum_a carry[x, a, c] a[a, j, b] * w[j, c]
        t = np.tensordot(carry, a, axes=([1], [0])) * w.T[None, :, :, None]
        chi = t.shape[0]
        if last:
            mat = t[:, :, :, 0].transpose(0, 2, 1).reshape(chi * d, d)
        else:
            mat = t.transpose(0, 2, 3, 1).reshape(chi * d, -1)
        uu, s, vh, dw = svd_truncate(mat, cutoff_only)
        if policy.max_bond is not None and s.size > policy.max_bond:
            raise BondDimensionError(l, s.size, policy.max_bond)
        discarded += dw
        new_sites.append(uu.reshape(chi, d, -1))
        rest = s[:, None] * vh
        carry = rest if last else rest.reshape(s.size, a.shape[2], d)
    # new site: its physical index is the carried c
    new_sites.append((carry * u[None, :])[:, :, None])
    log_norm = _right_canonicalize(new_sites)
    return MatrixProductState(
        tuple(new_sites), state.truncation_error + discarded, state.log_norm + log_norm
    )


def mps_contract_full(state: MatrixProductState, terminals: Sequence[np.ndarray]) -> complex:
    """Contract every physical leg of ``state`` with its terminal vector."""
    mantissa, log_scale = mps_contract_log(state, terminals)
    return mantissa * math.exp(log_scale)


def mps_contract_log(state: MatrixProductState, terminals: Sequence[np.ndarray]):
    """Like :func:`mps_contract_full` but returns ``(mantissa, log_scale)``."""
    if len(terminals) != len(state):
        raise ValueError(f"need {len(state)} terminal vectors, got {len(terminals)}")
    v = np.ones(1)
    for i, (a, t) in enumerate(zip(state.sites, terminals)):
        t = np.asarray(t)
        if t.shape != (a.shape[1],):
            raise ValueError(f"terminal {i} has shape {t.shape}, expected ({a.shape[1]},)")
        v = v @ np.tensordot(a, t, axes=([1], [0]))
    return complex(v[0]), state.log_norm


"""Bosonic reservoir: spectral densities and correlation functions.

Two spectral densities are supported. :class:`OhmicExp` is
``J(nu) = alpha * nu * exp(-nu / omega_c)`` and :class:`Discrete` is a finite
set of modes ``J(nu) = sum_i g_i**2 delta(nu - nu_i)``. Integrals over ``nu``
are done by adaptive quadrature for the continuum and by direct summation for
discrete modes.

Units: hbar = k_B = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy import integrate

#: upper frequency cutoff of continuum integrals, in units of omega_c
NU_MAX_FACTOR = 50.0
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 500
#: below this fraction of omega_c integrands are replaced by their nu -> 0 limit
SMALL_NU = 1e-8


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, what: str, estimate, error_bound: float, message: str = ""):
        super().__init__(
            f"quadrature for {what} did not converge: estimate={estimate!r}, "
            f"error bound={error_bound:.3e} {message}".rstrip()
        )
        self.estimate = estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class OhmicExp:
    """Ohmic spectral density with exponential cutoff."""

    alpha: float
    omega_c: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")

    def __call__(self, nu):
        return self.alpha * nu * np.exp(-nu / self.omega_c)

    @property
    def nu_max(self) -> float:
        return NU_MAX_FACTOR * self.omega_c

    def scaled(self, factor: float) -> "OhmicExp":
        return OhmicExp(self.alpha * factor, self.omega_c)


@dataclass(frozen=True)
class Discrete:
    """Finite set of modes ``((g_1, nu_1), (g_2, nu_2), ...)``."""

    modes: tuple

    def __post_init__(self):
        modes = tuple((float(g), float(nu)) for g, nu in self.modes)
        if not modes:
            raise ValueError("a discrete bath needs at least one mode")
        if any(not nu > 0 for _, nu in modes):
            raise ValueError("all mode frequencies must be > 0")
        object.__setattr__(self, "modes", modes)

    @property
    def couplings(self) -> np.ndarray:
        return np.array([g for g, _ in self.modes])

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([nu for _, nu in self.modes])

    def scaled(self, factor: float) -> "Discrete":
        """Scale J by ``factor`` (couplings by its square root)."""
        r = math.sqrt(factor)
        return Discrete(tuple((g * r, nu) for g, nu in self.modes))


SpectralDensity = Union[OhmicExp, Discrete]


def _integrate_spectrum(J: SpectralDensity, kernel: Callable, what: str, limit_at_zero=None):
    """Integrate ``J(nu) * kernel(nu)`` over ``nu > 0``.

    ``limit_at_zero`` is the value of ``J(nu) * kernel(nu)`` as ``nu -> 0``;
    it replaces the integrand on the tiny interval where the closed forms
    lose precision.
    """
    if isinstance(J, Discrete):
        g2 = J.couplings**2
        return float(np.sum(g2 * kernel(J.frequencies)))
    if J.alpha == 0.0:
        return 0.0
    nu_small = SMALL_NU * J.omega_c

    def f(nu):
        if nu < nu_small:
            return limit_at_zero
        return J(nu) * kernel(nu)

    # most of the weight sits below a few omega_c; split there to help the
    # adaptive scheme
    edges = [0.0, J.omega_c, 5.0 * J.omega_c, J.nu_max]
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e, *rest = integrate.quad(
            f, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1
        )
        total += val
        err += e
        if len(rest) > 1 and err > 1e-8 * abs(total) + 1e-14:
            raise QuadratureError(what, total, err, rest[1])
    return total


def _cosh_ratio(nu, beta, x):
    """``cosh(beta*nu/2 - x) / sinh(beta*nu/2)`` for ``0 <= x <= beta*nu``,
    written to avoid overflow."""
    bn = beta * nu
    return (np.exp(-x) + np.exp(x - bn)) / (-np.expm1(-bn))


def correlation_K(J: SpectralDensity, beta: float, tau: float) -> float:
    """Imaginary-time correlation function ``K(tau)`` for ``0 <= tau <= beta``."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if not (0.0 <= tau <= beta):
        raise ValueError(f"tau={tau} outside [0, beta={beta}]")
    limit = 2.0 * J.alpha / beta if isinstance(J, OhmicExp) else None
    return _integrate_spectrum(
        J, lambda nu: _cosh_ratio(nu, beta, nu * tau), f"K({tau})", limit
    )


def _eta_offdiag_kernel(nu, beta, delta, m):
    """nu-kernel of the coefficient between cells ``m >= 1`` steps apart:
    ``4 sinh^2(nu*delta/2) cosh(beta*nu/2 - m*nu*delta) / (nu^2 sinh(beta*nu/2))``."""
    h = nu * delta
    bn = beta * nu
    # 4 sinh^2(h/2) e^{-x} = (1-e^{-h})^2 e^{h-x}; both exponents below are <= 0
    pref = np.expm1(-h) ** 2 / (-np.expm1(-bn))
    return pref * (np.exp(-(m - 1) * h) + np.exp((m + 1) * h - bn)) / nu**2


def _eta_diag_kernel(nu, beta, delta):
    """nu-kernel of the self-cell coefficient (triangle ``tau' < tau``).

    Equals ``[(coth(a) - 1)(cosh h - 1) + h - 1 + e^{-h}] / nu^2`` with
    ``a = beta*nu/2`` and ``h = nu*delta``.
    """
    h = np.asarray(nu * delta, dtype=float)
    bn = beta * nu
    # (coth a - 1)(cosh h - 1) = (e^{h-bn} + e^{-h-bn} - 2e^{-bn}) / (1 - e^{-bn})
    thermal = (np.exp(h - bn) + np.exp(-h - bn) - 2.0 * np.exp(-bn)) / (-np.expm1(-bn))
    series = h * h * (0.5 - h / 6.0 + h * h / 24.0 - h**3 / 120.0)
    vacuum = np.where(h < 1e-3, series, h + np.expm1(-h))
    return (thermal + vacuum) / nu**2


@dataclass(frozen=True)
class InfluenceKernel:
    """Coefficients ``eta[m]`` coupling imaginary-time cells ``m`` steps apart.

    ``eta[0]`` is the self-cell coefficient. The two-index coefficient
    ``eta_{k k'}`` is ``eta[k - k']`` for ``k >= k'``.
    """

    beta: float
    n_steps: int
    eta: np.ndarray

    @property
    def delta(self) -> float:
        return self.beta / self.n_steps

    def coefficient(self, k: int, kp: int) -> float:
        if kp > k:
            k, kp = kp, k
        return float(self.eta[k - kp])


def influence_kernel(J: SpectralDensity, beta: float, n_steps: int) -> InfluenceKernel:
    """Influence coefficients for ``n_steps`` imaginary-time cells of width
    ``beta / n_steps``."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if n_steps < 2:
        raise ValueError(f"n_steps must be >= 2, got {n_steps}")
    delta = beta / n_steps
    ohmic = isinstance(J, OhmicExp)
    eta = np.empty(n_steps)
    eta[0] = _integrate_spectrum(
        J,
        lambda nu: _eta_diag_kernel(nu, beta, delta),
        "eta[0]",
        J.alpha * delta**2 / beta if ohmic else None,
    )
    for m in range(1, n_steps):
        eta[m] = _integrate_spectrum(
            J,
            lambda nu, m=m: _eta_offdiag_kernel(nu, beta, delta, m),
            f"eta[{m}]",
            2.0 * J.alpha * delta**2 / beta if ohmic else None,
        )
    if not np.all(np.isfinite(eta)):
        raise QuadratureError("eta", eta, float("inf"))
    eta.setflags(write=False)
    return InfluenceKernel(beta, n_steps, eta)


def reorganization_energy(J: SpectralDensity) -> float:
    """``int J(nu)/nu dnu`` (``alpha * omega_c`` for :class:`OhmicExp`)."""
    if isinstance(J, OhmicExp):
        return J.alpha * J.omega_c
    return float(np.sum(J.couplings**2 / J.frequencies))


# -- real-time correlation used by the polaron rates --------------------------


def _coth_half(nu, beta):
    return 1.0 / np.tanh(0.5 * beta * nu)


def _polaron_C_ohmic(J: OhmicExp, beta: float, s: float) -> complex:
    if J.alpha == 0.0 or s == 0.0:
        return 0.0j
    s_abs = abs(s)
    nu_max = J.nu_max
    # below nu_split the integrand has less than one oscillation
    nu_split = min(nu_max, 1.0 / s_abs)
    nu_small = SMALL_NU * J.omega_c

    def re_direct(nu):
        if nu < nu_small:
            return J.alpha * s_abs**2 / beta
        return J(nu) / nu**2 * _coth_half(nu, beta) * 2.0 * math.sin(0.5 * nu * s_abs) ** 2

    def im_direct(nu):
        if nu < nu_small:
            return J.alpha * s_abs
        return J(nu) / nu**2 * math.sin(nu * s_abs)

    def smooth_re(nu):
        return J(nu) / nu**2 * _coth_half(nu, beta)

    def smooth_im(nu):
        return J(nu) / nu**2

    def quad(f, a, b, what, **kw):
        val, err, *rest = integrate.quad(
            f, a, b, epsabs=1e-14, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1, **kw
        )
        if len(rest) > 1 and err > 1e-9 * abs(val) + 1e-12:
            raise QuadratureError(what, val, err, rest[1])
        return val

    re = quad(re_direct, 0.0, nu_split, f"Re C({s})")
    im = quad(im_direct, 0.0, nu_split, f"Im C({s})")
    if nu_split < nu_max:
        re += quad(smooth_re, nu_split, nu_max, f"Re C({s})")
        re -= quad(smooth_re, nu_split, nu_max, f"Re C({s})", weight="cos", wvar=s_abs)
        im += quad(smooth_im, nu_split, nu_max, f"Im C({s})", weight="sin", wvar=s_abs)
    return complex(re, math.copysign(1.0, s) * im)


def _polaron_C_discrete(J: Discrete, beta: float, s: float) -> complex:
    g2 = J.couplings**2
    nu = J.frequencies
    re = np.sum(g2 / nu**2 * 2.0 * _coth_half(nu, beta) * np.sin(0.5 * nu * s) ** 2)
    im = np.sum(g2 / nu**2 * np.sin(nu * s))
    return complex(re, im)


@lru_cache(maxsize=200_000)
def _polaron_C_cached(J: SpectralDensity, beta: float, s: float) -> complex:
    if isinstance(J, Discrete):
        return _polaron_C_discrete(J, beta, s)
    return _polaron_C_ohmic(J, beta, s)


def polaron_C(J: SpectralDensity, beta: float, s: float) -> complex:
    """Real-time polaron correlation
    ``C(s) = int dnu J/nu^2 [2 coth(beta nu/2) sin^2(nu s/2) + i sin(nu s)]``."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    return _polaron_C_cached(J, float(beta), float(s))

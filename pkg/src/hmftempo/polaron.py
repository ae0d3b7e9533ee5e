"""Polaron (Forster) rates between the pointer states of a single qubit.

In the polaron frame the part of ``H_S`` that does not commute with ``X``,
``(omega_q sin(theta)/2) tau_x``, is treated perturbatively. The resulting
rate equation for the pointer populations has up/down rates

    Gamma_pm = (omega_q sin(theta) / 2)^2  int ds exp(-/+ i s dE - 4 C(s))

with ``dE = omega_q cos(theta)``. Only the rates, the relaxation time
``t0 = 1 / (Gamma_+ + Gamma_-)`` and the steady state are produced; the Lamb
shift is diagonal in the pointer basis and does not enter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bath import OhmicExp, SpectralDensity, polaron_C, reorganization_energy

#: ``omega_q sin(theta) / int J(nu)/nu`` above this flags the rates as unreliable
VALIDITY_RATIO = 0.1
#: the s-integral is cut where ``4 Re C(s)`` exceeds this (integrand < 1e-20)
TAIL_EXPONENT = 46.0
S_MAX = 1e4
#: Gauss-Legendre nodes per panel of the s-integral
GL_NODES = 20
KS_TOL = 1e-6


class PolaronConvergenceError(ArithmeticError):
    """The s-integral does not decay within ``S_MAX``."""

    def __init__(self, partial: float, s_reached: float):
        super().__init__(
            f"exp(-4 C(s)) has not decayed by s={s_reached:g} (partial value {partial!r})"
        )
        self.partial = partial


class DegenerateSteadyStateError(ValueError):
    """Both rates vanish, so the rate equation has no unique steady state."""


@dataclass(frozen=True)
class PolaronRates:
    gamma_plus: float
    gamma_minus: float
    delta_e: float
    #: coupling-scale ratio omega_q sin(theta) / int J/nu; small means valid
    validity_ratio: float
    #: largest |Im| of the s-integrals, which vanish exactly
    imag_defect: float = 0.0

    @property
    def t0(self) -> float:
        total = self.gamma_plus + self.gamma_minus
        return math.inf if total == 0 else 1.0 / total

    @property
    def valid(self) -> bool:
        return self.validity_ratio <= VALIDITY_RATIO

    def kennard_stepanov_residual(self, beta: float) -> float:
        """``|Gamma_+ - Gamma_- exp(-beta dE)| / Gamma_-``."""
        if self.gamma_minus == 0:
            return 0.0 if self.gamma_plus == 0 else math.inf
        return abs(self.gamma_plus - self.gamma_minus * math.exp(-beta * self.delta_e)) / self.gamma_minus


def _time_scale(J: SpectralDensity) -> float:
    if isinstance(J, OhmicExp):
        return 1.0 / J.omega_c
    return 1.0 / float(np.max(J.frequencies))


def _panels(J: SpectralDensity, beta: float, delta_e: float):
    """Panel edges ``0 = s_0 < s_1 < ...`` for the s-integral, ending where
    ``4 Re C(s)`` first exceeds ``TAIL_EXPONENT``."""
    tc = _time_scale(J)
    # panels resolve the bath time, the thermal time and the phase exp(i s dE)
    cap = min(beta / 8.0, 1.0 / (4.0 * abs(delta_e)) if delta_e else math.inf, 2.0)
    edges = [0.0]
    s = 0.0
    while True:
        width = min(max(0.25 * s, 0.25 * tc), max(cap, 0.25 * tc))
        s += width
        edges.append(s)
        if 4.0 * polaron_C(J, beta, s).real > TAIL_EXPONENT:
            return np.array(edges)
        if s > S_MAX:
            raise PolaronConvergenceError(float("nan"), s)


def _half_line_integrals(J, beta, delta_e, edges):
    """``int_0^S exp(-/+ i s dE - 4 C(s)) ds`` for both signs."""
    x, w = np.polynomial.legendre.leggauss(GL_NODES)
    plus = minus = 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (b - a) * x + 0.5 * (a + b)
        ws = 0.5 * (b - a) * w
        c = np.array([polaron_C(J, beta, si) for si in s])
        base = np.exp(-4.0 * c)
        phase = np.exp(-1j * s * delta_e)
        plus += np.sum(ws * base * phase)
        minus += np.sum(ws * base * phase.conj())
    return plus, minus


def polaron_rates(omega_q: float, theta: float, J: SpectralDensity, beta: float) -> PolaronRates:
    """Transition rates between the pointer states ``tau_z = -1 -> +1``
    (``gamma_plus``) and ``+1 -> -1`` (``gamma_minus``)."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    delta_e = omega_q * math.cos(theta)
    coupling = omega_q * math.sin(theta)
    reorg = reorganization_energy(J)
    ratio = math.inf if reorg == 0 else abs(coupling) / reorg
    pref = (0.5 * coupling) ** 2
    if pref == 0.0:
        return PolaronRates(0.0, 0.0, delta_e, ratio)
    if reorg == 0:
        raise PolaronConvergenceError(float("nan"), 0.0)
    edges = _panels(J, beta, delta_e)
    plus, minus = _half_line_integrals(J, beta, delta_e, edges)
    # C(-s) = C(s)^*, so the full-line integral is twice the real part
    gp = 2.0 * pref * plus.real
    gm = 2.0 * pref * minus.real
    if gp < 0 or gm < 0:
        if min(gp, gm) < -1e-12 * max(abs(gp), abs(gm)):
            raise PolaronConvergenceError(min(gp, gm), edges[-1])
        gp, gm = max(gp, 0.0), max(gm, 0.0)
    rates = PolaronRates(gp, gm, delta_e, ratio)
    if not rates.valid:
        warnings.warn(
            f"polaron rates outside their regime of validity "
            f"(omega_q sin(theta) / alpha omega_c = {ratio:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return rates


def polaron_steady_state(rates: PolaronRates, beta: float | None = None):
    """Pointer populations ``(P_up, P_down)`` of the rate equation.

    If ``beta`` is given, a warning is issued when the rates break detailed
    balance by more than 1e-6.
    """
    total = rates.gamma_plus + rates.gamma_minus
    if not total > 0:
        raise DegenerateSteadyStateError("both polaron rates vanish; steady state is undetermined")
    if beta is not None and rates.kennard_stepanov_residual(beta) > KS_TOL:
        warnings.warn(
            f"rates violate detailed balance (residual {rates.kennard_stepanov_residual(beta):.2e})",
            RuntimeWarning,
            stacklevel=2,
        )
    p_up = rates.gamma_plus / total
    return p_up, rates.gamma_minus / total

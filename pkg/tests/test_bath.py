import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmftempo.bath import (
    Discrete,
    InfluenceKernel,
    OhmicExp,
    correlation_K,
    influence_kernel,
    polaron_C,
    reorganization_energy,
)

OHMIC = OhmicExp(0.2, 10.0)

# K(tau) for alpha=0.2, omega_c=10, beta=1 from a 30-digit mpmath quadrature
# over the full half line
K_REFERENCE = {0.0: 20.573319660317103527, 0.25: 2.2672393253556885015,
               0.5: 1.4544838683609430704, 1.0: 20.573319660317103527}
# C(s) for the same bath from the closed-form series (mpmath nsum), infinite cutoff
C_REFERENCE = {0.1: (0.072173833167327764973, 0.15707963267948966192),
               1.0: (0.69719820131936364786, 0.29422553486074691837),
               5.0: (3.1500712763246797498, 0.31015979856434921723)}


def test_spectral_density_validation():
    with pytest.raises(ValueError):
        OhmicExp(-0.1, 1.0)
    with pytest.raises(ValueError):
        OhmicExp(0.1, 0.0)
    with pytest.raises(ValueError):
        Discrete(())
    with pytest.raises(ValueError):
        Discrete(((0.1, 0.0),))
    assert OHMIC(2.0) == pytest.approx(0.2 * 2.0 * math.exp(-0.2))
    assert Discrete(((0.3, 1.0),)).scaled(4.0).couplings[0] == pytest.approx(0.6)
    assert OHMIC.scaled(2.0).alpha == pytest.approx(0.4)


@pytest.mark.parametrize("tau", sorted(K_REFERENCE))
def test_K_ohmic_against_mpmath(tau):
    assert correlation_K(OHMIC, 1.0, tau) == pytest.approx(K_REFERENCE[tau], rel=1e-10)


def test_K_ohmic_live_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 25
    a, wc, b, t = 0.7, 3.0, 2.0, 0.6
    ref = mp.quad(lambda v: a * v * mp.exp(-v / wc) * mp.cosh(b * v / 2 - v * t) / mp.sinh(b * v / 2),
                  [0, 1, wc, 50 * wc, mp.inf])
    assert correlation_K(OhmicExp(a, wc), b, t) == pytest.approx(float(ref), rel=1e-10)


def test_K_discrete_closed_form():
    g, nu, beta = 0.3, 1.3, 2.0
    J = Discrete(((g, nu),))
    for tau in (0.0, 0.4, 1.0, 2.0):
        ref = g * g * math.cosh(beta * nu / 2 - nu * tau) / math.sinh(beta * nu / 2)
        assert correlation_K(J, beta, tau) == pytest.approx(ref, rel=1e-14)


@settings(max_examples=15, deadline=None)
@given(beta=st.floats(0.2, 5.0), frac=st.floats(0.0, 1.0))
def test_K_symmetric_about_half_beta(beta, frac):
    J = Discrete(((0.5, 0.7), (0.2, 2.5)))
    tau = frac * beta
    assert correlation_K(J, beta, tau) == pytest.approx(correlation_K(J, beta, beta - tau), rel=1e-12)


def test_K_domain():
    with pytest.raises(ValueError):
        correlation_K(OHMIC, 1.0, 1.5)
    with pytest.raises(ValueError):
        correlation_K(OHMIC, 0.0, 0.0)


def _eta_by_cell_quadrature(J, beta, n, m, nodes=24):
    """Double integral of K over cell pairs with tensor Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    delta = beta / n
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    total = 0.0
    if m == 0:
        # triangle 0 < t' < t < delta: t = delta*u, t' = t*v
        for ui, wi in zip(u, wu):
            for vj, wj in zip(u, wu):
                t = delta * ui
                total += wi * wj * delta * t * correlation_K(J, beta, t - t * vj)
        return total
    for ui, wi in zip(u, wu):
        for vj, wj in zip(u, wu):
            total += wi * wj * delta**2 * correlation_K(J, beta, (m + ui - vj) * delta)
    return total


@pytest.mark.parametrize("J", [Discrete(((0.3, 1.3), (0.5, 4.0))), OhmicExp(0.2, 10.0)],
                         ids=["discrete", "ohmic"])
def test_eta_is_cell_integral_of_K(J):
    beta, n = 1.0, 6
    kern = influence_kernel(J, beta, n)
    for m in (0, 1, 2, 5):
        ref = _eta_by_cell_quadrature(J, beta, n, m)
        assert kern.eta[m] == pytest.approx(ref, rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(n=st.integers(2, 12), beta=st.floats(0.3, 4.0))
def test_eta_sum_rule(n, beta):
    # summing every ordered cell pair recovers the full triangle integral of K
    g, nu = 0.4, 1.1
    J = Discrete(((g, nu),))
    kern = influence_kernel(J, beta, n)
    total = sum((n - m) * kern.eta[m] for m in range(n))
    # int_0^beta dt int_0^t dt' K(t - t') = int_0^beta (beta - u) K(u) du, and
    # K(u) = K(beta - u) turns that into (beta/2) int_0^beta K = beta g^2 / nu
    exact = g * g * beta / nu
    assert total == pytest.approx(exact, rel=1e-10)


def test_eta_symmetric_in_index_distance():
    kern = influence_kernel(OHMIC, 1.0, 8)
    assert np.allclose(kern.eta[1:], kern.eta[1:][::-1], rtol=1e-10)
    assert kern.coefficient(5, 2) == kern.coefficient(2, 5) == kern.eta[3]
    assert isinstance(kern, InfluenceKernel)
    assert kern.delta == pytest.approx(1 / 8)
    with pytest.raises(ValueError):
        kern.eta[0] = 1.0


def test_eta_scales_linearly_with_coupling():
    a = influence_kernel(OhmicExp(0.1, 10.0), 1.0, 6).eta
    b = influence_kernel(OhmicExp(0.3, 10.0), 1.0, 6).eta
    assert np.allclose(b, 3 * a, rtol=1e-10)


def test_influence_kernel_validation():
    with pytest.raises(ValueError):
        influence_kernel(OHMIC, 1.0, 1)
    with pytest.raises(ValueError):
        influence_kernel(OHMIC, -1.0, 4)


def test_zero_coupling_gives_zero_kernel():
    assert np.all(influence_kernel(OhmicExp(0.0, 10.0), 1.0, 5).eta == 0.0)


def test_reorganization_energy():
    assert reorganization_energy(OhmicExp(0.3, 7.0)) == pytest.approx(2.1)
    assert reorganization_energy(Discrete(((0.3, 1.5), (0.2, 0.5)))) == pytest.approx(0.09 / 1.5 + 0.04 / 0.5)


@pytest.mark.parametrize("s", sorted(C_REFERENCE))
def test_polaron_C_against_series(s):
    re, im = C_REFERENCE[s]
    c = polaron_C(OHMIC, 1.0, s)
    assert c.real == pytest.approx(re, rel=1e-10)
    assert c.imag == pytest.approx(im, rel=1e-10)


def test_polaron_C_conjugate_symmetry_and_discrete():
    c = polaron_C(OHMIC, 1.0, 0.7)
    assert polaron_C(OHMIC, 1.0, -0.7) == pytest.approx(c.conjugate(), rel=1e-12)
    g, nu, beta, s = 0.4, 1.5, 2.0, 0.9
    ref = g * g / nu**2 * complex((1 - math.cos(nu * s)) / math.tanh(beta * nu / 2), math.sin(nu * s))
    assert polaron_C(Discrete(((g, nu),)), beta, s) == pytest.approx(ref, rel=1e-13)
    assert polaron_C(OHMIC, 1.0, 0.0) == 0.0


def test_K_positive_and_decreasing_to_half_beta():
    taus = np.linspace(0.0, 0.5, 11)
    k = [correlation_K(OHMIC, 1.0, t) for t in taus]
    assert min(k) > 0
    assert all(b < a for a, b in zip(k, k[1:]))


def test_linearity_in_alpha():
    J1, J2 = OhmicExp(0.2, 10.0), OhmicExp(0.4, 10.0)
    assert correlation_K(J2, 1.0, 0.3) == pytest.approx(2 * correlation_K(J1, 1.0, 0.3), rel=1e-12)
    assert polaron_C(J2, 1.0, 0.8) == pytest.approx(2 * polaron_C(J1, 1.0, 0.8), rel=1e-12)

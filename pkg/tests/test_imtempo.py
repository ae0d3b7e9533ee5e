import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmftempo.bath import Discrete, OhmicExp, influence_kernel, reorganization_energy
from hmftempo.ensembles import cross_coherence, expectation, gibbs, negativity, trace_distance
from hmftempo.imtempo import compute_hmf, propagator
from hmftempo.model import build_single_qubit, build_two_qubit, pointer_observables
from hmftempo.oracle import DiscreteBathSpec, exact_hmf_ed, exact_path_sum
from hmftempo.tensor_core import BondDimensionError, TruncationPolicy

EXACT = TruncationPolicy(0.0)
MODE = Discrete(((0.3, 1.0),))


def _rel_dev(a, b):
    """Elementwise relative deviation; entries that vanish by symmetry are
    compared against the largest entry instead."""
    scale = np.maximum(np.abs(b), 1e-6 * np.max(np.abs(b)))
    return float(np.max(np.abs(a - b) / scale))


@pytest.mark.parametrize("J", [OhmicExp(0.2, 10.0), MODE], ids=["ohmic", "discrete"])
@pytest.mark.parametrize("n", [2, 3, 6])
def test_matches_brute_force_path_sum(J, n):
    m = build_single_qubit(1.0, 1.0)
    kern = influence_kernel(J, 1.0, n)
    res = compute_hmf(m, J, 1.0, n, EXACT, kernel=kern)
    assert _rel_dev(res.rho_tilde, exact_path_sum(m, kern)) < 1e-11


def test_matches_brute_force_two_qubit():
    m = build_two_qubit(2.0)
    J = OhmicExp(0.3, 10.0)
    kern = influence_kernel(J, 1.0, 5)
    res = compute_hmf(m, J, 1.0, 5, EXACT, kernel=kern)
    assert _rel_dev(res.rho_tilde, exact_path_sum(m, kern)) < 1e-11


@settings(max_examples=10, deadline=None)
@given(theta=st.floats(0.0, math.pi), alpha=st.floats(0.01, 1.0), n=st.integers(2, 7))
def test_path_sum_property(theta, alpha, n):
    m = build_single_qubit(1.0, theta)
    J = OhmicExp(alpha, 10.0)
    kern = influence_kernel(J, 1.0, n)
    res = compute_hmf(m, J, 1.0, n, TruncationPolicy(1e-15), kernel=kern)
    assert _rel_dev(res.rho_tilde, exact_path_sum(m, kern)) < 1e-10
    assert np.trace(res.rho) == pytest.approx(1.0, abs=1e-13)
    assert math.exp(res.log_z_ratio) == pytest.approx(np.trace(res.rho_tilde).real, rel=1e-12)


def test_zero_coupling_is_system_gibbs():
    m = build_single_qubit(1.0, 1.0)
    res = compute_hmf(m, OhmicExp(0.0, 10.0), 1.0, 8)
    assert np.allclose(res.rho, gibbs(m.h_s, 1.0), atol=1e-13)
    assert res.log_z_ratio == pytest.approx(math.log(2 * math.cosh(0.5)), rel=1e-13)
    # only the propagator links neighbouring cells
    assert res.max_bond <= m.dim


@pytest.mark.parametrize("alpha", [0.1, 0.5])
def test_commuting_limit_exact_at_any_n(alpha):
    m = build_single_qubit(1.0, 0.0)
    tz, _ = pointer_observables(m)
    res = compute_hmf(m, OhmicExp(alpha, 10.0), 1.0, 10)
    assert expectation(res.rho, tz) == pytest.approx(-math.tanh(0.5), abs=1e-12)


def test_trotter_error_is_second_order():
    # measured against exact diagonalization: halving the step quarters the error
    m = build_single_qubit(1.0, 1.0)
    rho_ed, _ = exact_hmf_ed(m, DiscreteBathSpec(MODE.modes, 40), 1.0, check_fock=False)
    errs = [trace_distance(compute_hmf(m, MODE, 1.0, n, TruncationPolicy(1e-13)).rho, rho_ed)
            for n in (10, 20, 40)]
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    assert all(0.2 < r < 0.3 for r in ratios), ratios


def test_counterterm_matches_ed_for_two_qubits():
    m = build_two_qubit(2.0)
    bath = DiscreteBathSpec(((0.4, 1.0),), 30)
    rho_ed, logz_ed = exact_hmf_ed(m, bath, 1.0, counterterm=True)
    res = compute_hmf(m, Discrete(bath.modes), 1.0, 60, TruncationPolicy(1e-12), counterterm=True)
    assert trace_distance(res.rho, rho_ed) < 1e-3
    assert abs(res.log_z_ratio - logz_ed) < 1e-3
    assert negativity(res.rho) < 1e-12
    # without the counterterm the state differs visibly
    bare = compute_hmf(m, Discrete(bath.modes), 1.0, 60, TruncationPolicy(1e-12))
    assert abs(cross_coherence(bare.rho) - cross_coherence(res.rho)) > 1e-2


def test_counterterm_for_single_qubit_only_shifts_log_z():
    m = build_single_qubit(1.0, 1.0)
    J = OhmicExp(0.2, 10.0)
    a = compute_hmf(m, J, 1.0, 12)
    b = compute_hmf(m, J, 1.0, 12, counterterm=True)
    assert np.allclose(a.rho, b.rho, atol=1e-13)
    assert b.log_z_ratio - a.log_z_ratio == pytest.approx(-reorganization_energy(J), rel=1e-10)


def test_degenerate_pointer_basis_choice_does_not_matter():
    m = build_two_qubit(2.0)
    v = m.x_eigenvectors.copy()
    c, s = math.cos(0.4), math.sin(0.4)
    v[:, 1], v[:, 2] = c * v[:, 1] + s * v[:, 2], -s * v[:, 1] + c * v[:, 2]
    v[:, 3] *= np.exp(0.7j)
    m2 = m.with_pointer_basis(v)
    J = OhmicExp(0.3, 10.0)
    a = compute_hmf(m, J, 1.0, 6, EXACT)
    b = compute_hmf(m2, J, 1.0, 6, EXACT)
    assert trace_distance(a.rho, b.rho) < 1e-10
    assert a.log_z_ratio == pytest.approx(b.log_z_ratio, rel=1e-12)


def test_result_is_a_density_matrix_with_diagnostics():
    m = build_single_qubit(1.0, 1.0)
    res = compute_hmf(m, OhmicExp(0.5, 10.0), 1.0, 30, TruncationPolicy(1e-10))
    assert np.allclose(res.rho, res.rho.conj().T)
    assert np.linalg.eigvalsh(res.rho).min() > 0
    assert res.valid and not res.warnings
    d = res.diagnostics
    assert d["max_bond"] >= 2
    assert 0 <= d["truncation_error"] < 1e-8
    # the raw path sum is only Hermitian up to the Trotter error, which is O(delta)
    defects = [compute_hmf(m, OhmicExp(0.5, 10.0), 1.0, n, TruncationPolicy(1e-10)).hermiticity_defect
               for n in (15, 30)]
    assert defects[1] / defects[0] == pytest.approx(0.5, abs=0.05)


def test_propagator_is_real_in_real_pointer_basis():
    m = build_single_qubit(1.0, 1.0)
    p = propagator(m, 0.1)
    assert np.isrealobj(p)
    with pytest.raises(ValueError):
        propagator(m, 0.0)


def test_input_validation_and_bond_cap():
    m = build_single_qubit(1.0, 1.0)
    J = OhmicExp(0.2, 10.0)
    with pytest.raises(ValueError):
        compute_hmf(m, J, 0.0, 10)
    with pytest.raises(ValueError):
        compute_hmf(m, J, 1.0, 1)
    with pytest.raises(ValueError):
        compute_hmf(m, J, 1.0, 60_000)
    with pytest.raises(ValueError):
        compute_hmf(m, J, 1.0, 10, kernel=influence_kernel(J, 1.0, 8))
    with pytest.raises(BondDimensionError):
        compute_hmf(m, J, 1.0, 20, TruncationPolicy(1e-12, max_bond=2))


def test_strong_coupling_breakdown_is_flagged():
    # a very large self-cell counterterm makes the split unusable; the result must say so
    m = build_two_qubit(2.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = compute_hmf(m, OhmicExp(10.0, 10.0), 1.0, 20, TruncationPolicy(1e-10), counterterm=True)
    assert not res.valid
    assert any("eigenvalue" in str(w.message) for w in caught)

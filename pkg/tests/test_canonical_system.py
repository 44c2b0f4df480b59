import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatterkern.canonical_system import (J_SIGN, NORMALIZATION_POINT, CanonicalCoefficients,
                                          NodeBasis2D, appendix1_divisor_closed_form,
                                          beta_over_alpha, chain_residual, constant_chain_oracle,
                                          divisor_matrix, e_parameters, integrate_canonical,
                                          j_contractivity_points, lam2_polynomial_fit,
                                          lam2_symmetry_residual, left_limit_divisor,
                                          transfer_matrix)
from scatterkern.halfplane_core import ConditionViolation
from scatterkern.scattering_data import get_dataset

L0 = NORMALIZATION_POINT
LAM = np.linspace(0.3, 3.0, 12)
FREE_A0 = np.array([[-1 + 1j, -1j], [1j, -1 - 1j]])


@pytest.mark.parametrize("name", ["zero", "appendix1", "one-mass"])
@pytest.mark.parametrize("x", [0.0, 0.7])
def test_function_of_lam_squared(name, x):
    assert lam2_symmetry_residual(get_dataset(name), L0, x, LAM) < 1e-8


@pytest.mark.parametrize("name", ["zero", "appendix1", "one-mass"])
def test_j_contractive(name):
    T = transfer_matrix(get_dataset(name), L0, 0.5, j_contractivity_points(50))
    assert T.j_defect_eigs().min() > -1e-10
    assert np.max(np.abs(T.det() - 1)) < 1e-8


@pytest.mark.parametrize("name", ["zero", "appendix1", "one-mass"])
def test_j_unitary_for_real_lam_squared(name):
    T = transfer_matrix(get_dataset(name), L0, 0.7, LAM)
    A = T.entries
    D = J_SIGN - A @ J_SIGN @ np.conj(np.transpose(A, (0, 2, 1)))
    assert np.max(np.abs(D)) < 1e-8


def test_normalization_at_lam0():
    T = transfer_matrix(get_dataset("appendix1"), L0, 0.3, LAM[:2])
    assert T.normalization["normalized"]


def test_free_transfer_matrix_at_zero():
    # recorded value: constant j-unitary matrix at x = 0 for s_plus = 0
    T = transfer_matrix(get_dataset("zero"), L0, 0.0, np.array([0.5, 1.3, 0.4 + 0.3j, 2 + 1j]))
    assert np.allclose(T.entries, FREE_A0[None], atol=1e-10)


def test_transfer_matrix_rejects_origin():
    with pytest.raises(ConditionViolation):
        transfer_matrix(get_dataset("zero"), L0, 0.0, np.array([0.0]))


def test_e_parameters_triangular():
    p = e_parameters(NodeBasis2D(get_dataset("appendix1"), L0, 0.4))
    assert p["tau"] > 0


@pytest.mark.parametrize("x", [0.0, 0.5])
def test_beta_over_alpha_free(x):
    ba = beta_over_alpha(get_dataset("zero"), L0, x)
    assert abs(ba + np.exp(2j * L0.real * x)) < 1e-3


def test_beta_over_alpha_node_route_free():
    # the node route reads the conjugate phase (recorded convention conflict)
    ba = beta_over_alpha(get_dataset("zero"), L0, 0.5, method="node")
    assert abs(ba + np.exp(-2j * L0.real * 0.5)) < 1e-3


def test_beta_over_alpha_unimodular_appendix1():
    ba = beta_over_alpha(get_dataset("appendix1"), L0, 0.5)
    assert abs(abs(ba) - 1) < 1e-6


def test_divisor_zero_interval_is_identity():
    B = divisor_matrix(get_dataset("appendix1"), L0, 0.4, 0.4, LAM[:4])
    assert np.allclose(B, np.eye(2)[None], atol=1e-10)


def test_left_limit_divisor_appendix1():
    targets = [0.0, 1.0, 1j]
    B, info = left_limit_divisor(get_dataset("appendix1"), L0, targets)
    assert np.max(np.abs(B - appendix1_divisor_closed_form(L0, targets))) < 1e-6
    assert np.linalg.norm(B[0] - np.eye(2)) > 0.1


def test_closed_form_divisor_is_linear_in_lam2():
    B = appendix1_divisor_closed_form(L0, [0.0, 1.0, 2.0])
    assert np.allclose(B[2] - B[1], B[1] - B[0])


def test_lam2_polynomial_fit_recovers_quadratic():
    lam = np.sqrt(np.linspace(0.1, 4, 20))
    w = lam**2
    vals = (1 + 2j * w - 0.5 * w**2)[:, None]
    out, info = lam2_polynomial_fit(lam, vals, [1j, -1.0])
    z = np.array([1j, -1.0])
    assert np.allclose(out[:, 0], 1 + 2j * z - 0.5 * z**2, atol=1e-9)
    assert info["degree"] == 2


@pytest.mark.parametrize("name", ["zero", "appendix1", "one-mass"])
def test_chain_rule(name):
    assert chain_residual(get_dataset(name), L0, 0.2, 0.8, LAM[:5]) < 1e-6


def test_chain_zero_interval():
    assert chain_residual(get_dataset("appendix1"), L0, 0.3, 0.3, LAM[:3]) < 1e-12


def test_coefficients_validation():
    with pytest.raises(ValueError):
        CanonicalCoefficients([0.0, 1.0], [1.0, -1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        CanonicalCoefficients([1.0, 0.0], [1.0, 1.0], [1.0, 1.0])
    c = CanonicalCoefficients.constant(2.0, 2.0 * np.exp(0.3j), 1.0)
    assert c.modulus_residual() < 1e-15


def test_ode_zero_interval():
    c = CanonicalCoefficients([0.0], [1.0], [1.0 + 0j])
    ch = integrate_canonical(c, 1j)
    assert np.array_equal(ch.A[-1], np.eye(2))


phases = st.floats(0, 2 * np.pi)
upper2 = st.builds(complex, st.floats(-3, 3), st.floats(0, 2))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 2.0), phases, upper2)
def test_ode_matches_constant_oracle(alpha, phi, lam2):
    beta = alpha * np.exp(1j * phi)
    c = CanonicalCoefficients.constant(alpha, beta, 1.0, n=5)
    ch = integrate_canonical(c, lam2)
    ref = constant_chain_oracle(alpha, beta, lam2, 1.0)
    assert np.max(np.abs(ch.A[-1] - ref)) < 1e-8 * max(1.0, np.abs(ref).max())
    assert ch.monotonicity_margin() > -1e-8 * max(1.0, np.abs(ref).max() ** 2)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 2.0), phases, st.floats(-3, 3))
def test_ode_j_unitary_for_real_lam2(alpha, phi, lam2):
    beta = alpha * np.exp(1j * phi)
    c = CanonicalCoefficients(np.linspace(0, 1, 6), np.full(6, alpha), beta * np.exp(1j * np.linspace(0, 1, 6)))
    assert integrate_canonical(c, lam2).unitarity_residual() < 1e-8

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatterkern.appendix_suite import (INFINITE_THRESHOLD, a2_bracket, a2_matrix_check,
                                        a2_scalar_check, appendix1_golden, carleson_check)
from scatterkern.profiles import get_profile
from scatterkern.scattering_data import get_dataset

APPENDIX1_A2 = 8.709294526103253  # frozen regression value, window [-8, 8], depth 10


def zero(t):
    return np.zeros(np.shape(t), complex)


@pytest.fixture(scope="module")
def golden():
    return appendix1_golden()


@pytest.mark.parametrize("check", ["a_norm_of_one", "b_hat_kernel", "c_h2_kernel", "d_orthogonality",
                                   "e_flavors_agree_x_positive", "f_divisor"])
def test_golden_subchecks(golden, check):
    c = golden.checks[check]
    assert c["pass"], c


def test_golden_fast_profile():
    assert appendix1_golden(get_profile("fast")).passed


def test_a2_zero_is_one():
    r = a2_scalar_check(zero)
    assert r.supremum == 1.0
    assert r.verdict == "finite"
    assert a2_matrix_check(zero).supremum == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 2 * np.pi))
def test_a2_constant_is_one(c, phi):
    val = c * np.exp(1j * phi)
    r = a2_scalar_check(lambda t: np.full(np.shape(t), val), max_depth=4)
    assert r.supremum == pytest.approx(1.0, abs=1e-12)


def test_a2_appendix1_frozen():
    r = a2_scalar_check(get_dataset("appendix1").amplitude)
    assert r.verdict == "finite"
    assert r.supremum == pytest.approx(APPENDIX1_A2, rel=1e-10)
    assert r.flagged == 0


def test_a2_plateau_infinite():
    r = a2_scalar_check(get_dataset("plateau").amplitude, max_depth=12)
    assert r.verdict == "infinite"
    assert r.supremum > INFINITE_THRESHOLD
    assert all(np.diff(r.running_sup) >= 0)


def test_a2_bracket():
    s = get_dataset("appendix1").amplitude
    b = a2_bracket(a2_scalar_check(s), a2_matrix_check(s))
    assert b["in_bracket"] and b["verdicts_agree"]


def test_a2_rejects_noncontractive():
    with pytest.raises(ValueError):
        a2_scalar_check(lambda t: np.full(np.shape(t), 1.5 + 0j), max_depth=1)


def test_a2_accepts_samples():
    t = np.linspace(-10, 10, 2001)
    r = a2_scalar_check((t, np.zeros_like(t)), max_depth=3)
    assert r.supremum == 1.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0.1, 3))
def test_a2_scalar_within_matrix_bounds(c, w):
    # scalar value is tr(<W><W^-1>) - 1, between the top eigenvalue and twice it
    s = lambda t: c * np.asarray(t) ** 2 / (np.asarray(t) ** 2 + w**2)
    a, m = a2_scalar_check(s, max_depth=5), a2_matrix_check(s, max_depth=5)
    assert m.supremum * (1 - 1e-10) <= a.supremum <= 2 * m.supremum * (1 + 1e-10)


def test_carleson_closed_form():
    # one point at x = 3, E = [-2, 2], f = 1: F = log 5, ratio (log 5)^2 / 4 per unit weight
    r = carleson_check([3.0], [1.0], lambda t: np.ones_like(t))
    assert r["ratio"] == pytest.approx(np.log(5.0) ** 2 / 4, rel=1e-12)


def test_carleson_symmetric_pair():
    r = carleson_check([-3.0, 3.0], [1.0, 1.0], lambda t: np.ones_like(t))
    assert r["ratio"] == pytest.approx(2 * np.log(5.0) ** 2 / 4, rel=1e-12)


def test_carleson_matrix_weight():
    W = lambda t: np.broadcast_to(2 * np.eye(2), (len(t), 2, 2))
    f = lambda t: np.stack([np.ones_like(t), np.zeros_like(t)], axis=1)
    r = carleson_check([3.0], [np.eye(2)], f, W=W)
    assert r["ratio"] == pytest.approx(2 * np.log(5.0) ** 2 / 4, rel=1e-12)


def test_carleson_rejects_points_on_E():
    with pytest.raises(ValueError):
        carleson_check([0.0], [1.0], lambda t: np.ones_like(t))

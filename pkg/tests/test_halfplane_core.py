import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatterkern.halfplane_core import (BlaschkeProduct, OuterFunction, PoleError, blaschke_eval,
                                        blaschke_factor, cauchy_transform, cayley, cayley_inverse,
                                        fourier_integral, hardy_kernel, line_grid, poisson_extension,
                                        szego_integral, tan_grid)

upper = st.builds(complex, st.floats(-50, 50), st.floats(1e-3, 50))


@given(upper)
def test_cayley_roundtrip(z):
    om = cayley(z)
    assert abs(om) < 1
    assert abs(cayley_inverse(om) - z) <= 1e-9 * max(1.0, abs(z) ** 2)


def test_cayley_maps_real_line_to_circle():
    t = np.linspace(-30, 30, 101)
    assert np.allclose(np.abs(cayley(t)), 1.0, atol=1e-14)


@settings(max_examples=30)
@given(st.lists(upper, min_size=1, max_size=6))
def test_blaschke_unimodular_on_real_line(zeros):
    B = BlaschkeProduct.from_zeros(np.array(zeros))
    t = np.linspace(-20, 20, 81)
    assert np.allclose(np.abs(blaschke_eval(B, t)), 1.0, atol=1e-12)
    for z in zeros:
        assert abs(blaschke_eval(B, np.array([z]))[0]) < 1e-12


@given(upper, upper)
def test_blaschke_factor_contractive_inside(z0, z):
    assert abs(blaschke_factor(z0, z)) <= 1 + 1e-12


@pytest.mark.parametrize("omega", [0.0, 0.5, 2.0, -3.0])
def test_fourier_integral_lorentzian(omega, profile):
    got = fourier_integral(lambda t: 1.0 / (t * t + 1), omega, profile)
    assert abs(got - np.pi * np.exp(-abs(omega))) < 1e-8


def test_hardy_kernel_pole():
    with pytest.raises(PoleError):
        hardy_kernel(1 - 1j, 1 + 1j)


def test_cauchy_reproduces_h2():
    g = tan_grid(64, 16)
    mu = 0.3 + 0.8j
    vals = hardy_kernel(g.nodes, mu)
    z = np.array([1 + 1j, -0.4 + 0.2j, 2j])
    assert np.allclose(cauchy_transform(vals, g, z), hardy_kernel(z, mu), atol=1e-8)


def test_poisson_extension_of_constant():
    g = line_grid(400.0)
    assert np.allclose(poisson_extension(np.ones(len(g)), g, np.array([1j, 0.5 + 2j])), 1.0, atol=5e-3)


def test_outer_modulus_and_normalization():
    logmod = lambda t: 0.5 * np.log(1 - 0.5 / (1 + np.asarray(t) ** 2))
    F = OuterFunction(logmod, 2048)
    t = np.linspace(-10, 10, 41)
    assert np.allclose(np.abs(F(t + 1e-9j)), np.exp(logmod(t)), atol=1e-6)
    v = F(np.array([1j]))[0]
    assert abs(v.imag) < 1e-12 and v.real > 0


def test_outer_has_no_zeros():
    logmod = lambda t: -np.log1p(np.asarray(t) ** 2) / 2
    F = OuterFunction(logmod, 2048)
    z = np.array([1j, 0.1 + 0.1j, -3 + 2j])
    # modulus |i/(t+i)| is the boundary trace of i/(z+i)
    assert np.allclose(np.abs(F(z)), np.abs(1j / (z + 1j)), atol=1e-8)


def test_szego_of_zero():
    assert szego_integral(lambda t: np.zeros_like(np.asarray(t), dtype=complex)) == 0.0


def test_szego_divergent():
    assert szego_integral(lambda t: np.ones_like(np.asarray(t), dtype=complex)) == -np.inf

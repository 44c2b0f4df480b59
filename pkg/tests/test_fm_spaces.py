import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatterkern.appendix_suite import appendix1_khat
from scatterkern.fm_spaces import (fm_inner, fm_norm, function_family, gram_assemble, kernel_compute,
                                   kernel_identity_check, khat_by_duality, lemma3_check,
                                   minus_family, rational_family)
from scatterkern.halfplane_core import hardy_kernel
from scatterkern.scattering_data import GOLDEN, REGISTRY, DerivedData, get_dataset

PROBES = np.array([0.3 + 0.4j, 1 + 2j, -1 + 1j, 0.5j, 2 + 0.1j])
LAM0S = (1 + 1j, 0.5 + 0.8j, -0.7 + 1.2j, 2j, 1.5 + 0.5j)


def test_free_gram_is_identity(profile):
    g = gram_assemble(get_dataset("zero"), 16, "h2", "brute", None, profile)
    assert np.allclose(g.G, np.eye(16), atol=1e-10)


@pytest.mark.parametrize("name", ["appendix1", "contraction", "two-mass"])
@pytest.mark.parametrize("x", [0.0, 0.7])
def test_structured_gram_matches_brute(name, x, profile):
    d = get_dataset(name).translate(x)
    a = gram_assemble(d, 16, "h2", "brute", None, profile)
    b = gram_assemble(d, 16, "h2", "structured", None, profile)
    assert np.max(np.abs(a.G - b.G)) < 1e-8
    assert a.hermitian_residual < 1e-12
    assert a.eigvalsh()[0] > 0


def test_structured_hat_gram_matches_brute(profile):
    d = get_dataset("contraction")
    a = gram_assemble(d, 12, "h2hat", "brute", None, profile)
    b = gram_assemble(d, 12, "h2hat", "structured", None, profile)
    assert np.max(np.abs(a.G - b.G)) < 1e-8


def test_appendix1_norm_of_one(profile):
    d = get_dataset("appendix1")
    one = function_family(lambda t: np.ones_like(np.asarray(t), dtype=complex), d)
    assert abs(fm_norm(one, d, profile) ** 2 - 0.5) < 1e-6


def test_appendix1_kernels(profile):
    d = get_dataset("appendix1")
    for mu in (1 + 1j, -0.3 + 0.6j):
        kh = kernel_compute("h2hat", d, mu, None, "gram", None, profile)
        k = kernel_compute("h2", d, mu, None, "gram", None, profile)
        assert np.max(np.abs(kh(PROBES) - appendix1_khat(PROBES, mu))) < 1e-5
        assert np.max(np.abs(k(PROBES) - hardy_kernel(PROBES, mu))) < 1e-6


@pytest.mark.parametrize("name", ["appendix1", "contraction", "one-mass"])
def test_reproducing_property(name, profile):
    d = get_dataset(name)
    mu = 0.4 + 0.9j
    k = kernel_compute("h2", d, mu, None, "gram", None, profile)
    fam = rational_family(d, 6)
    ip = fm_inner(fam, k.family, d, profile)[:, 0]
    assert np.allclose(ip, fam.at(mu)[0], atol=1e-8)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_duality_isometry(name, profile):
    d = get_dataset(name)
    dv = DerivedData(d, profile.fft_size)
    fam = rational_family(d, 10)
    n1 = np.diag(fm_inner(fam, fam, d, profile)).real
    mf = minus_family(fam, d, dv)
    n2 = np.diag(fm_inner(mf, mf, dv.minus_data(), profile)).real
    assert np.max(np.abs(n2 - n1) / n1) < 1e-6


@pytest.mark.parametrize("name", ["zero", "appendix1", "one-mass"])
def test_kernel_identity(name, profile):
    for lam0 in LAM0S:
        r = kernel_identity_check(get_dataset(name), lam0, profile=profile)
        assert r["relative_residual"] < 1e-4
        assert r["vector_residual"] < 1e-4


@pytest.mark.parametrize("name", GOLDEN)
@pytest.mark.parametrize("flavor", ["h2", "h2hat"])
def test_gram_and_lemma_agree(name, flavor, profile):
    d = get_dataset(name)
    for mu in (1 + 1j, -0.5 + 0.7j):
        a = kernel_compute(flavor, d, mu, None, "gram", None, profile)(PROBES)
        b = kernel_compute(flavor, d, mu, None, "lemma", None, profile)(PROBES)
        assert np.max(np.abs(a - b)) < 1e-5


@pytest.mark.parametrize("name", ["appendix1", "contraction"])
def test_hat_kernel_by_duality(name, profile):
    d = get_dataset(name)
    mu = 0.6 + 0.9j
    kh = kernel_compute("h2hat", d, mu, None, "gram", None, profile)
    r = khat_by_duality(d, mu, profile=profile)
    assert abs(r["diag"] - kh.diag) / kh.diag < 1e-6


def test_flavors_equal_for_strict_contraction(profile):
    r = lemma3_check(get_dataset("contraction"), 1 + 1j, profile=profile)
    assert r["equal_flavors_expected"]
    assert abs(r["margin"]) < 1e-8


def test_flavor_gap_when_modulus_reaches_one(profile):
    r = lemma3_check(get_dataset("appendix1"), 1 + 1j, profile=profile)
    assert r["margin"] > 0.1


def test_mass_truncation_monotone(profile):
    r = lemma3_check(get_dataset("two-mass"), 0.5 + 0.5j, profile=profile)
    assert r["truncation_monotone"]


def test_kernel_center_must_be_upper(profile):
    with pytest.raises(ValueError):
        kernel_compute("h2", get_dataset("zero"), 1 - 1j, None, "gram", None, profile)


upper = st.builds(complex, st.floats(-2, 2), st.floats(0.3, 2))


@settings(max_examples=15, deadline=None)
@given(upper, upper)
def test_kernel_hermitian_symmetry(lam, mu):
    d = get_dataset("contraction")
    kl = kernel_compute("h2", d, lam, 24)
    km = kernel_compute("h2", d, mu, 24)
    assert abs(km(lam)[0] - np.conj(kl(mu)[0])) < 1e-8


@settings(max_examples=15, deadline=None)
@given(upper)
def test_kernel_diagonal_positive_and_dominant(mu):
    # Cauchy-Schwarz bound |k(lam, mu)|^2 <= k(lam, lam) k(mu, mu)
    d = get_dataset("appendix1")
    k = kernel_compute("h2hat", d, mu, 24)
    lam = 0.2 + 0.7j
    kl = kernel_compute("h2hat", d, lam, 24)
    assert k.diag > 0
    assert abs(k(lam)[0]) ** 2 <= k.diag * kl.diag * (1 + 1e-8)

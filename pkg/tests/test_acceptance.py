"""End-to-end acceptance battery; one test per criterion.

Each test prints its own PASS line when run with -s; the terminal summary lists
PASS/FAIL for every criterion regardless of capture.
"""
import numpy as np
import pytest

from scatterkern.appendix_suite import INFINITE_THRESHOLD, a2_scalar_check, appendix1_golden
from scatterkern.asymptotics import run_mass_blowup, run_theorem2
from scatterkern.canonical_system import (NORMALIZATION_POINT, beta_over_alpha, j_contractivity_points,
                                          lam2_symmetry_residual, left_limit_divisor, transfer_matrix)
from scatterkern.fm_spaces import (fm_inner, kernel_compute, kernel_identity_check, minus_family,
                                   rational_family)
from scatterkern.halfplane_core import tan_grid
from scatterkern.scattering_data import GOLDEN, REGISTRY, DerivedData, get_dataset
from scatterkern.sturm_liouville import (BChain, bump_potential, free_B, integrate_B, node_quantities,
                                         sech2_potential, weyl_m_plus, wronskian_derivative_residual,
                                         zero_potential)
from scatterkern.unitary_node import NodeBasis, dlogv_over_i, wronskian_check

L0 = NORMALIZATION_POINT
APPENDIX1_A2 = 8.709294526103253
GRID = tan_grid(64, 16).nodes
GRID = GRID[np.abs(GRID) < 1e4]
PROBES = np.array([0.3 + 0.4j, 1 + 2j, -1 + 1j, 0.5j, 2 + 0.1j])


def report(n, **values):
    body = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in values.items())
    print(f"PASS criterion {n}: {body}")


@pytest.mark.criterion(1, "closed-form battery (norm, hat kernel, H2 kernel, divisor)")
def test_golden_battery(profile):
    rep = appendix1_golden(profile)
    c = rep.checks
    assert c["a_norm_of_one"]["error"] < 1e-6
    assert c["b_hat_kernel"]["error"] < 1e-5
    assert c["c_h2_kernel"]["error"] < 1e-6
    assert c["f_divisor"]["error"] < 1e-6
    assert rep.passed
    report(1, **{k: v["error"] for k, v in c.items()})


@pytest.mark.criterion(2, "scattering matrix unitary and symmetric on every dataset")
def test_unitarity_and_symmetry(profile):
    worst_u = worst_s = 0.0
    for name in sorted(REGISTRY):
        dv = DerivedData(get_dataset(name), profile.fft_size)
        worst_u = max(worst_u, dv.unitarity_residual(GRID).max())
        worst_s = max(worst_s, dv.symmetry_residual(GRID).max())
    assert worst_u < 1e-8 and worst_s < 1e-8
    report(2, unitarity=worst_u, symmetry=worst_s)


@pytest.mark.criterion(3, "duality map is an isometry for 10 rational functions per dataset")
def test_duality_isometry(profile):
    worst = 0.0
    for name in sorted(REGISTRY):
        d = get_dataset(name)
        dv = DerivedData(d, profile.fft_size)
        fam = rational_family(d, 10)
        n1 = np.diag(fm_inner(fam, fam, d, profile)).real
        mf = minus_family(fam, d, dv)
        n2 = np.diag(fm_inner(mf, mf, dv.minus_data(), profile)).real
        worst = max(worst, np.max(np.abs(n2 - n1) / n1))
    assert worst < 1e-6
    report(3, relative=worst)


@pytest.mark.criterion(4, "diagonal kernel identity at 5 centers on 3 datasets")
def test_kernel_identity(profile):
    worst = 0.0
    for name in ("zero", "appendix1", "one-mass"):
        for lam0 in (1 + 1j, 0.5 + 0.8j, -0.7 + 1.2j, 2j, 1.5 + 0.5j):
            worst = max(worst, kernel_identity_check(get_dataset(name), lam0, profile=profile)["relative_residual"])
    assert worst < 1e-4
    report(4, relative=worst)


@pytest.mark.criterion(5, "Gram representer and regularized kernel agree on golden datasets")
def test_oracle_equivalence(profile):
    worst = 0.0
    for name in GOLDEN:
        d = get_dataset(name)
        for flavor in ("h2", "h2hat"):
            for mu in (1 + 1j, -0.5 + 0.7j):
                a = kernel_compute(flavor, d, mu, None, "gram", None, profile)(PROBES)
                b = kernel_compute(flavor, d, mu, None, "lemma", None, profile)(PROBES)
                worst = max(worst, np.max(np.abs(a - b)))
    assert worst < 1e-5
    report(5, pointwise=worst)


@pytest.mark.criterion(6, "FM distance to the standard kernel decays along the forward shift")
def test_forward_distance(profile):
    sched = np.array([0.5, 1.0, 2.0, 3.0, 4.5, 6.0, 8.0, 10.0])
    run = run_theorem2(get_dataset("appendix1"), 1 + 1j, sched, profile=profile)
    assert not run.failures
    assert run.nonincreasing(after=2.0, noise=1e-8)
    d10 = run.values[-1]
    assert d10 < 1e-2
    free = run_theorem2(get_dataset("zero"), 1 + 1j, sched, profile=profile)
    assert free.values.max() < 1e-12
    report(6, D10=float(d10), free_max=float(free.values.max()))


@pytest.mark.criterion(7, "scaled diagonal kernel at the mass approaches 1/nu by x = -6")
def test_mass_blowup(profile):
    run = run_mass_blowup(get_dataset("one-mass"), 1j, -np.linspace(0.0, 6.0, 13), profile=profile)
    gap = run.values[int(np.argmin(np.abs(run.x + 6.0)))]
    assert gap < 1e-2
    report(7, gap=float(gap))


@pytest.mark.criterion(8, "Wronskian identities on a 16-point grid, free and closed-form data")
def test_wronskian_identities():
    lam0 = 1 + 1j
    mu = np.concatenate([np.linspace(0.25, 3.0, 8), np.linspace(-1.5, 1.5, 8) + 0.5j])
    real_mu = mu[:8]
    ref = 4 * real_mu * (lam0**2).imag / np.abs(real_mu**2 - lam0**2) ** 2
    assert np.allclose(dlogv_over_i(lam0, real_mu), ref, rtol=1e-12)
    worst = 0.0
    for name in ("zero", "appendix1"):
        worst = max(worst, wronskian_check(NodeBasis(get_dataset(name), lam0), mu)["max_relative"])
    assert worst < 1e-4
    report(8, relative=worst)


@pytest.mark.criterion(9, "Schroedinger transfer matrices, Weyl function and node identity")
def test_sturm_liouville():
    det = 0.0
    for q in (zero_potential(), bump_potential(), sech2_potential()):
        ch = BChain(q, 1 + 0.5j, 3.0)
        for x in np.linspace(0.0, 3.0, 7):
            det = max(det, abs(np.linalg.det(ch(x)[0]) - 1))
    cons = max(wronskian_derivative_residual(q, 1 + 0.5j) for q in (zero_potential(), bump_potential()))
    trig = max(np.max(np.abs(integrate_B(zero_potential(), lam, x).B - free_B(lam, x)))
               for lam in (0.7 + 0.2j, 1.5, 2 + 1j) for x in (0.5, 2.0))
    mfree = max(abs(weyl_m_plus(zero_potential(), lam) - 1 / (1j * lam)) for lam in (1 + 1j, L0))
    m9 = max(node_quantities(q, L0, x0)["m9_residual"]
             for q in (zero_potential(), bump_potential()) for x0 in (0.5, 1.0, 2.0))
    assert det < 1e-8 and cons < 1e-6 and trig < 1e-8 and mfree < 1e-8 and m9 < 1e-2
    report(9, det=det, conservation=cons, trig=float(trig), m_plus=mfree, m9=m9)


@pytest.mark.criterion(10, "canonical-system transfer matrix: symmetry, contractivity, phase, divisor")
def test_canonical_system():
    lam = np.linspace(0.3, 3.0, 12)
    sym = max(lam2_symmetry_residual(get_dataset(n), L0, 0.7, lam) for n in ("zero", "appendix1", "one-mass"))
    T = transfer_matrix(get_dataset("appendix1"), L0, 0.5, j_contractivity_points(50))
    jmin = float(T.j_defect_eigs().min())
    phase = max(abs(beta_over_alpha(get_dataset("zero"), L0, x) + np.exp(2j * L0.real * x)) for x in (0.0, 0.5))
    B, _ = left_limit_divisor(get_dataset("appendix1"), L0, [0.0])
    jump = float(np.linalg.norm(B[0] - np.eye(2)))
    assert sym < 1e-8 and jmin > -1e-10 and phase < 1e-3 and jump > 0.1
    report(10, symmetry=sym, j_min=jmin, phase=phase, divisor_jump=jump)


@pytest.mark.criterion(11, "A2 checker: zero, frozen closed-form value, plateau diverges")
def test_a2_checker():
    z = a2_scalar_check(lambda t: np.zeros(np.shape(t), complex))
    assert z.supremum == 1.0
    a = a2_scalar_check(get_dataset("appendix1").amplitude)
    assert a.verdict == "finite" and a.supremum == pytest.approx(APPENDIX1_A2, rel=1e-10)
    p = a2_scalar_check(get_dataset("plateau").amplitude, max_depth=12)
    assert p.verdict == "infinite" and p.supremum > INFINITE_THRESHOLD
    report(11, zero=z.supremum, appendix1=a.supremum, plateau=p.supremum)

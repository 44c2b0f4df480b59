r"""One-dimensional unitary node built from dual hat kernels.

The basis vectors are

.. math::

    e_1 = \hat k^+_-(\cdot,\lambda_0)/\sqrt{\hat k_-(\lambda_0,\lambda_0)},\qquad
    e_2 = \hat k^+_-(\cdot,-\bar\lambda_0)/\sqrt{\hat k_-(\lambda_0,\lambda_0)},

with :math:`\hat k_-` the hat kernel of the minus data and :math:`^+` the
plus duality map. Their continuations into the upper half-plane are computed
from Cauchy integrals of the regularized functions :math:`b_p s_e e_j`.
Every quotient with a removable singularity at :math:`\lambda_0` or
:math:`-\bar\lambda_0` is evaluated through the regularized products, so no
local series are needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fm_spaces import fm_inner, kernel_compute, rational_family
from .halfplane_core import PoleError, gauss_panels, tan_grid
from .profiles import GridProfile, get_profile
from .scattering_data import DerivedData, ScatteringData

_RING = np.exp(2j * np.pi * (np.arange(16) + 0.5) / 16)


def v_map(lam0):
    lam0 = complex(lam0)
    a2, b2 = lam0**2, np.conj(lam0) ** 2

    def v(z):
        z = np.asarray(z, dtype=complex)
        return (z**2 - a2) / (z**2 - b2)
    return v


def v_prime(lam0):
    lam0 = complex(lam0)
    a2, b2 = lam0**2, np.conj(lam0) ** 2

    def vp(z):
        z = np.asarray(z, dtype=complex)
        return 2 * z * (a2 - b2) / (z**2 - b2) ** 2
    return vp


def dlogv_over_i(lam0, mu):
    """(1/i)(log v)'(mu); for real mu equals 4 mu Im(lam0^2)/|mu^2 - lam0^2|^2."""
    lam0 = complex(lam0)
    mu = np.asarray(mu, dtype=complex)
    return (2 * mu / (mu**2 - lam0**2) - 2 * mu / (mu**2 - np.conj(lam0) ** 2)) / 1j


class NodeBasis:
    """e_1, e_2 of the node attached to ``data`` and ``lam0`` (first quadrant).

    Parameters
    ----------
    data : ScatteringData
    lam0 : complex
        Re lam0 > 0, Im lam0 > 0, not a mass point.
    N : int, optional
        Basis order of the hat-kernel solves.
    """

    def __init__(self, data: ScatteringData, lam0, N: int | None = None,
                 profile: GridProfile | None = None, derived: DerivedData | None = None):
        lam0 = complex(lam0)
        if not (lam0.real > 0 and lam0.imag > 0):
            raise ValueError("lam0 must lie in the open first quadrant")
        if data.n_masses and np.min(np.abs(data.lam - lam0)) < 1e-10:
            raise ValueError("lam0 must not be a mass point")
        self.profile = profile or get_profile()
        self.data = data
        self.lam0 = lam0
        self.derived = derived or DerivedData(data, self.profile.fft_size)
        self.minus_data = self.derived.minus_data()
        md = DerivedData(self.minus_data, self.profile.fft_size)
        self.kA = kernel_compute("h2hat", self.minus_data, lam0, N, "gram", md, self.profile)
        self.kB = kernel_compute("h2hat", self.minus_data, -np.conj(lam0), N, "gram", md, self.profile)
        self.norm = np.sqrt(self.kA.diag)
        self.v = v_map(lam0)
        self.vp = v_prime(lam0)

    # analytic continuations into C_+ --------------------------------------------------
    def e1(self, z):
        return self.kA.minus(z, self.profile) / self.norm

    def e2(self, z):
        return self.kB.minus(z, self.profile) / self.norm

    def ve2(self, z):
        """v e_2, regular at lam0 and at -conj lam0."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        l0 = self.lam0
        f = lambda w: (w + l0) / (w + np.conj(l0)) * self.kB.minus_regular(w, self.profile) / self.norm
        p = -np.conj(l0)
        near = np.abs(z - p) < 1e-6 * max(1.0, abs(p))
        out = np.empty(len(z), dtype=complex)
        if np.any(~near):
            out[~near] = f(z[~near])
        if np.any(near):
            out[near] = np.mean(f(p + 0.1 * p.imag * _RING))
        return out

    def e1_minus(self, z):
        return self.kA(z) / self.norm

    def e2_minus(self, z):
        return self.kB(z) / self.norm

    # boundary values on R ---------------------------------------------------------------
    def e1_boundary(self, t):
        return self.kA.minus_boundary(t) / self.norm

    def e2_boundary(self, t):
        return self.kB.minus_boundary(t) / self.norm

    def e1_minus_boundary(self, t):
        return self.kA.boundary(t) / self.norm

    def e2_minus_boundary(self, t):
        return self.kB.boundary(t) / self.norm

    def norms(self):
        """FM norms of e_1 and e_2 (through the isometric minus side)."""
        n1 = np.sqrt(self.kA.diag) / self.norm
        n2 = np.sqrt(self.kB.diag) / self.norm
        return float(n1), float(n2)

    def symmetry_residual(self, t) -> float:
        """max |conj e_2(-t) - e_1(t)| on real nodes."""
        t = np.asarray(t, float)
        return float(np.max(np.abs(np.conj(self.e2_boundary(-t)) - self.e1_boundary(t))))


def node_basis(data: ScatteringData, lam0, N: int | None = None,
               profile: GridProfile | None = None) -> NodeBasis:
    return NodeBasis(data, lam0, N, profile)


def theta_eval(basis: NodeBasis, lam):
    """theta(v(lam)) = e_1(lam)/(v e_2)(lam) for lam with |v(lam)| < 1."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if np.any(np.abs(basis.v(lam)) >= 1):
        raise ValueError("v(lam) must lie in the open unit disk")
    den = basis.ve2(lam)
    if np.any(np.abs(den) < 1e-14):
        raise PoleError("v e_2 vanishes at a requested point")
    return basis.e1(lam) / den


def kernel_via_theta(basis: NodeBasis, lam, mu, radius: float = 0.1):
    """[(v e_2)(lam) conj (v e_2)(mu) - e_1(lam) conj e_1(mu)]/(1 - v(lam) conj v(mu)).

    Where the denominator is small (|v| = 1 on the imaginary axis, so the
    quotient cancels near the diagonal there) or v has its pole (-conj lam0)
    the value is the mean of w -> F(lam + w, conj(mu) + w) over a circle of radius
    ``radius * min(Im lam, Im mu)``; F is analytic in lam and conj(mu) and
    the mean keeps the Hermitian symmetry.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))

    def f(l, m):
        num = basis.ve2(l) * np.conj(basis.ve2(m)) - basis.e1(l) * np.conj(basis.e1(m))
        return num / (1 - basis.v(l) * np.conj(basis.v(m)))

    with np.errstate(divide="ignore", invalid="ignore"):
        den = 1 - basis.v(lam) * np.conj(basis.v(mu))
    out = np.empty(len(lam), dtype=complex)
    # direct quotient loses about eps/|den|; also the pole of v at -conj lam0
    bad = ~np.isfinite(den) | (np.abs(den) < 1e-3) | (np.abs(den) > 1e8)
    if np.any(~bad):
        out[~bad] = f(lam[~bad], mu[~bad])
    for i in np.flatnonzero(bad):
        r = radius * min(lam[i].imag, mu[i].imag)
        w = r * _RING
        out[i] = np.mean(f(lam[i] + w, mu[i] + np.conj(w)))
    return out


def wronskian_check(basis: NodeBasis, mu) -> dict:
    """Residuals of both Wronskian identities.

    For Im mu > 0: det[[s e_2^-, s e_1^-], [e_2, e_1]](mu) - (1/i)(log v)'(mu).
    For real mu > 0: |e_2|^2 - |e_1|^2 - (1/i)(log v)'(mu).
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    rhs = dlogv_over_i(basis.lam0, mu)
    out = np.zeros(len(mu), dtype=complex)
    real = np.abs(mu.imag) < 1e-14
    if np.any(~real):
        m = mu[~real]
        s = basis.derived.s(m)
        det = s * (basis.e2_minus(m) * basis.e1(m) - basis.e1_minus(m) * basis.e2(m))
        out[~real] = det - rhs[~real]
    if np.any(real):
        t = mu[real].real
        if np.any(t <= 0):
            raise ValueError("real Wronskian points must be positive")
        lhs = np.abs(basis.e2_boundary(t)) ** 2 - np.abs(basis.e1_boundary(t)) ** 2
        out[real] = lhs - rhs[real]
    scale = np.maximum(np.abs(rhs), 1e-300)
    return {"mu": mu, "residual": out, "rhs": rhs, "relative": np.abs(out) / scale,
            "max_relative": float(np.max(np.abs(out) / scale))}


@dataclass
class ThetaData:
    """Boundary function s_plus^theta on a real grid and the density of
    nu_plus^theta sampled on the positive imaginary axis."""

    t: np.ndarray
    s_theta: np.ndarray
    y: np.ndarray
    density: np.ndarray

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.s_theta)))


def _s_theta(basis: NodeBasis, t):
    """e_2(-t)/e_2(t) for t > 0, extended by conj symmetry."""
    t = np.asarray(t, float)
    ta = np.abs(t)
    val = basis.e2_boundary(-ta) / basis.e2_boundary(ta)
    return np.where(t >= 0, val, np.conj(val))


def _density(basis: NodeBasis, y):
    """d nu^theta/dy at lam = i y."""
    lam = 1j * np.asarray(y, float)
    e2 = basis.e2(lam)
    if np.any(np.abs(e2) < 1e-300):
        raise PoleError("e_2 vanishes on the imaginary axis")
    return np.abs(basis.vp(lam)) / (2 * np.pi * np.abs(e2) ** 2)


def theta_scattering_data(basis: NodeBasis, n_real: int = 401, n_imag: int = 64) -> ThetaData:
    t = np.linspace(-20, 20, n_real)
    t = t[t != 0]
    y = np.geomspace(1e-3, 10.0, n_imag)
    return ThetaData(t, _s_theta(basis, t), y, _density(basis, y))


def theta_isometry_residual(basis: NodeBasis, coeffs=None, N: int = 5, panels: int = 24,
                            order: int = 16) -> dict:
    """Compare ||f||^2 in the original FM space with the norm built from
    s_plus^theta and nu_plus^theta, for f = e_n (or given combinations)."""
    data = basis.data
    fam = rational_family(data, N)
    if coeffs is not None:
        fam = fam.combine(coeffs)
    lhs = np.real(np.diag(fm_inner(fam, fam, data, basis.profile)))
    # boundary part with s^theta
    g = tan_grid(panels, order)
    t = g.nodes[(np.abs(g.nodes) < 1e6) & (g.nodes != 0)]
    w = g.weights[(np.abs(g.nodes) < 1e6) & (g.nodes != 0)]
    st = _s_theta(basis, t)
    F, Fr = fam.values(t), fam.values(-t)
    integrand = (1 - np.abs(st) ** 2)[:, None] * np.abs(F) ** 2 + np.abs(st[:, None] * F - Fr) ** 2
    bnd = (w @ integrand) / (4 * np.pi)
    # imaginary-axis part, y = tan(theta) on (0, pi/2)
    th, wt = gauss_panels(np.linspace(0, np.pi / 2, panels + 1), order)
    y = np.tan(th)
    wy = wt / np.cos(th) ** 2
    keep = y < 1e6
    y, wy = y[keep], wy[keep]
    dens = _density(basis, y)
    Fi = fam.at(1j * y)
    im = (wy * dens) @ np.abs(Fi) ** 2
    rhs = bnd + im
    return {"lhs": lhs, "rhs": rhs, "relative": np.abs(lhs - rhs) / lhs,
            "max_relative": float(np.max(np.abs(lhs - rhs) / lhs))}

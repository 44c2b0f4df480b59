r"""Complex-analysis primitives on the upper half-plane.

Conventions
-----------
The boundary norm is :math:`\|f\|^2 = \frac{1}{2\pi}\int_{\mathbb R} |f|^2 d\lambda`,
so the Hardy-space reproducing kernel is :math:`k(\lambda,\mu) = i/(\lambda-\bar\mu)`.
The Cayley variable :math:`\omega = (\lambda - i)/(\lambda + i)` maps the closed
upper half-plane onto the closed unit disk; :math:`\lambda = \infty` goes to
:math:`\omega = 1`.

Quadrature
----------
Three rules cover every integral in the package:

* ``tan_grid``: Gauss-Legendre panels in :math:`\theta` with :math:`\lambda=\tan\theta`,
  for smooth integrands decaying like :math:`\lambda^{-2}`.
* ``cayley_nodes``: trapezoid nodes on the unit circle, spectrally accurate for
  data that are smooth functions of :math:`\omega`.
* ``fourier_integral``: :math:`\int A(t)e^{i\omega t}dt` by graded panels on a
  truncated line plus an asymptotic endpoint expansion for the tails.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import warnings

import numpy as np
from scipy import integrate

from .profiles import GridProfile, get_profile


class PoleError(ValueError):
    """Evaluation requested at a pole."""


class ConditionViolation(ValueError):
    """An admissibility condition (Szego, Blaschke) fails numerically."""


# ---------------------------------------------------------------- grids

@dataclass(frozen=True)
class RealGrid:
    """Symmetric quadrature rule on the real line (absolute weights)."""

    nodes: np.ndarray
    weights: np.ndarray
    cutoff: float

    def __post_init__(self):
        x, w = np.asarray(self.nodes), np.asarray(self.weights)
        if x.ndim != 1 or x.shape != w.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if not np.allclose(x, -x[::-1], rtol=1e-13, atol=1e-13):
            raise ValueError("node set must be symmetric under x -> -x")

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))

    def __len__(self):
        return len(self.nodes)


@lru_cache(maxsize=64)
def _gauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def gauss_panels(breaks, order: int):
    """Composite Gauss-Legendre nodes and weights on consecutive breakpoints."""
    t, w = _gauss(order)
    a, b = np.asarray(breaks[:-1]), np.asarray(breaks[1:])
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * t[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


@lru_cache(maxsize=64)
def tan_grid(panels: int = 48, order: int = 16) -> RealGrid:
    """Gauss panels on theta in (-pi/2, pi/2) with lambda = tan(theta).

    Built on the positive half and mirrored so that the node set is exactly
    symmetric.
    """
    breaks = np.linspace(0.0, 0.5 * np.pi, panels + 1)
    th, wt = gauss_panels(breaks, order)
    lam = np.tan(th)
    w = wt / np.cos(th) ** 2
    return RealGrid(np.concatenate([-lam[::-1], lam]),
                    np.concatenate([w[::-1], w]), np.inf)


@lru_cache(maxsize=64)
def line_grid(cutoff: float, omega: float = 0.0, kmax: int = 0,
              scale: float = 1.0, order: int = 16) -> RealGrid:
    """Graded Gauss panels on [-cutoff, cutoff].

    Panel widths are bounded by one period of ``exp(i omega t)``, by one
    period of ``b(t)**kmax`` and by ``0.5 * (|t| + scale)``.
    """
    edges = [0.0]
    t = 0.0
    osc = 2 * np.pi / abs(omega) if omega else np.inf
    while t < cutoff:
        w = min(osc, 2 * np.pi * (1 + t * t) / (2 * kmax + 1), 0.5 * (t + scale), 4.0)
        t = min(t + w, cutoff)
        edges.append(t)
    edges = np.asarray(edges)
    nodes, weights = gauss_panels(edges, order)
    return RealGrid(np.concatenate([-nodes[::-1], nodes]),
                    np.concatenate([weights[::-1], weights]), cutoff)


def cayley(lam):
    """omega = (lam - i)/(lam + i)."""
    lam = np.asarray(lam, dtype=complex)
    return (lam - 1j) / (lam + 1j)


def cayley_inverse(om):
    """lam = i (1 + omega)/(1 - omega)."""
    om = np.asarray(om, dtype=complex)
    return 1j * (1 + om) / (1 - om)


@lru_cache(maxsize=16)
def cayley_nodes(m: int):
    """Offset trapezoid angles phi_j = 2 pi (j + 1/2)/m and the real points."""
    phi = 2 * np.pi * (np.arange(m) + 0.5) / m
    om = np.exp(1j * phi)
    lam = (1j * (1 + om) / (1 - om)).real
    return phi, om, lam


@dataclass(frozen=True)
class FourierRule:
    """Points and complex weights with sum(W * A(p)) ~ int A(t) exp(i omega t) dt.

    For ``omega != 0`` the last ten points are finite-difference stencils at
    ``+-L`` whose weights encode the endpoint expansion of the tails.
    """

    points: np.ndarray
    weights: np.ndarray
    omega: float

    def apply(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))


def _tail_coefficients(omega: float, L: float, h: float):
    d0 = np.array([0.0, 0.0, 1.0, 0.0, 0.0])
    d1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12 * h)
    d2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * h * h)
    w = omega
    up = np.exp(1j * w * L) * (1j * d0 / w - d1 / w**2 - 1j * d2 / w**3)
    lo = np.exp(-1j * w * L) * (-1j * d0 / w + d1 / w**2 + 1j * d2 / w**3)
    return up, lo


@lru_cache(maxsize=128)
def fourier_rule(omega: float, cutoff: float = 200.0, panels: int = 48,
                 order: int = 16, kmax: int = 0, scale: float = 1.0) -> FourierRule:
    r"""Quadrature rule for :math:`\int_{\mathbb R} A(t) e^{i\omega t} dt`.

    ``omega == 0`` gives the tangent grid, which needs ``A = O(|t|^{-2})``.
    Otherwise graded Gauss panels cover ``[-L, L]`` with
    ``L = max(cutoff, 40/|omega|)`` and the tails are replaced by three terms
    of the integration-by-parts expansion; ``A`` only has to be smooth and
    bounded for large ``|t|``. ``kmax`` is the largest power of the Cayley
    factor in ``A`` and refines the panels near the origin.
    """
    omega = float(omega)
    if omega == 0.0:
        g = tan_grid(max(panels, kmax + 8), order)
        return FourierRule(g.nodes, g.weights.astype(complex), 0.0)
    L = max(cutoff, 40.0 / abs(omega))
    g = line_grid(float(L), omega, int(kmax), float(scale), order)
    h = 1e-2 * L
    off = h * np.arange(-2, 3)
    up, lo = _tail_coefficients(omega, L, h)
    pts = np.concatenate([g.nodes, -L + off, L + off])
    wts = np.concatenate([g.weights * np.exp(1j * omega * g.nodes), lo, up])
    return FourierRule(pts, wts, omega)


def rule_for(omega: float, profile: GridProfile | None = None, kmax: int = 0,
             scale: float = 1.0) -> FourierRule:
    profile = profile or get_profile()
    return fourier_rule(float(omega), float(profile.cutoff), int(profile.panels),
                        int(profile.order), int(kmax), float(scale))


def fourier_integral(amp, omega: float, profile: GridProfile | None = None,
                     kmax: int = 0, scale: float = 1.0):
    r"""Approximate :math:`\int_{\mathbb R} A(t) e^{i\omega t} dt`.

    Parameters
    ----------
    amp : callable
        Vectorized amplitude; ``amp(t)`` returns an array whose first axis
        matches ``t``.
    omega : float
        Frequency.
    kmax, scale :
        Panel refinement hints, see :func:`fourier_rule`.
    """
    rule = rule_for(omega, profile, kmax, scale)
    return rule.apply(amp(rule.points))


# ---------------------------------------------------------------- kernels

def hardy_kernel(lam, mu):
    """Reproducing kernel i/(lam - conj(mu)) of the standard H^2."""
    lam = np.asarray(lam, dtype=complex)
    mu = np.asarray(mu, dtype=complex)
    den = lam - np.conj(mu)
    if np.any(den == 0):
        raise PoleError("hardy_kernel: lam coincides with conj(mu)")
    return 1j / den


def cauchy_transform(values, grid: RealGrid, z):
    r"""(1/2 pi i) \int g(t)/(t - z) dt for z off the real axis."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    ker = grid.weights[None, :] / (grid.nodes[None, :] - z[:, None])
    return ker @ values / (2j * np.pi)


def poisson_extension(values, grid: RealGrid, z):
    r"""Poisson integral (1/pi) \int y u(t) / ((t-x)^2 + y^2) dt."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    x, y = z.real[:, None], z.imag[:, None]
    ker = grid.weights[None, :] * y / ((grid.nodes[None, :] - x) ** 2 + y**2)
    return ker @ values / np.pi


# ---------------------------------------------------------------- Blaschke

@dataclass(frozen=True)
class BlaschkeProduct:
    """Signed Blaschke product over zeros in the upper half-plane.

    The factor attached to ``z`` is ``(lam - z)/(lam - conj z)``, multiplied by
    -1 when ``Im z > 1`` so that the infinite product converges for zeros
    accumulating at infinity.
    """

    zeros: np.ndarray
    signs: np.ndarray
    n1: int = 0
    n2: int | None = None

    @classmethod
    def from_zeros(cls, zeros, n1: int = 0, n2: int | None = None):
        z = np.atleast_1d(np.asarray(zeros, dtype=complex))
        if np.any(z.imag <= 0):
            raise ValueError("Blaschke zeros must lie in the upper half-plane")
        signs = np.where(z.imag > 1, -1.0, 1.0)
        return cls(z, signs, n1, n2)

    @property
    def active(self):
        sl = slice(self.n1, self.n2)
        return self.zeros[sl], self.signs[sl]

    def blaschke_sums(self):
        """The two Blaschke sums over small and large zeros."""
        z, _ = self.active
        t = z.imag
        return float(np.sum(t[t <= 1])), float(np.sum(1.0 / t[t > 1]))

    def truncate(self, n1: int, n2: int | None):
        return BlaschkeProduct(self.zeros, self.signs, n1, n2)

    def __call__(self, lam):
        return blaschke_eval(self, lam)

    def derivative_at_zero(self, k: int):
        """B'(z_k) for the k-th active zero."""
        z, sg = self.active
        zk = z[k]
        others = np.delete(np.arange(len(z)), k)
        rest = np.prod(sg[others] * (zk - z[others]) / (zk - np.conj(z[others])))
        return sg[k] * rest / (zk - np.conj(zk))


def blaschke_eval(B: BlaschkeProduct, lam):
    """Evaluate the signed product over the stored index range."""
    z, sg = B.active
    lam = np.asarray(lam, dtype=complex)
    out = np.ones(lam.shape, dtype=complex)
    if len(z) == 0:
        return out
    s_small, s_large = B.blaschke_sums()
    if not (np.isfinite(s_small) and np.isfinite(s_large)):
        raise ConditionViolation("Blaschke sums diverge")
    for zk, sk in zip(z, sg):
        den = lam - np.conj(zk)
        if np.any(den == 0):
            raise PoleError("blaschke_eval at the reflection of a zero")
        out = out * (sk * (lam - zk) / den)
    return out


def blaschke_factor(z0, lam):
    """Unsigned factor b_z0(lam) = (lam - z0)/(lam - conj z0)."""
    lam = np.asarray(lam, dtype=complex)
    return (lam - z0) / (lam - np.conj(z0))


# ---------------------------------------------------------------- outer functions

def _reference_order(log_modulus, probe: float = 1e4) -> int:
    """Integer p with log|f(t)| + p log|t| bounded at infinity."""
    a = log_modulus(np.array([probe, 10 * probe]))
    slope = -(a[1] - a[0]) / np.log(10.0)
    p = int(np.round(slope))
    return max(p, 0) if abs(slope - p) < 0.25 else 0


class OuterFunction:
    r"""Outer function in the upper half-plane with prescribed boundary modulus.

    The Schwarz integral is evaluated on the Cayley circle by FFT. When the
    modulus decays like ``|t|**-p`` the factor ``(i/(t+i))**p`` is split off
    first so that the remaining log-modulus is bounded near ``omega = 1``.
    Normalized so that the value at ``i`` is real and positive.
    """

    def __init__(self, log_modulus, m: int = 4096, order: int | None = None):
        self.log_modulus = log_modulus
        self.p = _reference_order(log_modulus) if order is None else order
        phi, om, lam = cayley_nodes(m)
        u = log_modulus(lam) + self.p * 0.5 * np.log1p(lam**2)
        if not np.all(np.isfinite(u)):
            raise ConditionViolation("log-modulus is not finite on the Cayley grid")
        k = np.arange(m // 2)
        # nodes sit half a step off the FFT grid
        c = (np.fft.fft(u) / m)[: m // 2] * np.exp(-1j * np.pi * k / m)
        coef = 2.0 * c
        coef[0] = c[0].real
        self.coef = coef

    def log_value(self, lam):
        lam = np.asarray(lam, dtype=complex)
        om = cayley(lam)
        series = np.polynomial.polynomial.polyval(om, self.coef)
        ref = self.p * np.log(1j / (lam + 1j)) if self.p else 0.0
        return series + ref

    def __call__(self, lam):
        lam = np.asarray(lam)
        lv = self.log_value(lam)
        if np.isrealobj(lam):
            # the boundary modulus is prescribed, only the phase is computed
            with np.errstate(divide="ignore"):
                lv = self.log_modulus(lam) + 1j * lv.imag
        return np.exp(lv)


def outer_from_modulus(log_modulus, lam, m: int = 4096):
    """Value at ``lam`` (closed upper half-plane) of the outer function with
    boundary log-modulus ``log_modulus``; normalized to be positive at ``i``."""
    return OuterFunction(log_modulus, m)(lam)


def szego_integral(s_plus, grid: RealGrid | None = None) -> float:
    r"""\int log(1 - |s_+|^2)/(1 + lam^2) d lam; ``-inf`` when |s_+| reaches 1
    on a set of grid nodes.

    ``s_plus`` is either a callable (adaptive quadrature in theta) or an array
    of samples on ``grid``.
    """
    if callable(s_plus):
        probe = s_plus(tan_grid(64, 16).nodes)
        if np.any(1.0 - np.abs(probe) ** 2 <= 0.0):
            return -np.inf

        def f(t):
            d = 1.0 - abs(s_plus(np.array([t]))[0]) ** 2
            return np.log(d) / (1.0 + t * t) if d > 0 else -1e300

        total = 0.0
        for lo, hi in ((-np.inf, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, np.inf)):
            with warnings.catch_warnings():
                # integrable log singularities trigger spurious warnings
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, _ = integrate.quad(f, lo, hi, limit=200, epsabs=1e-11, epsrel=1e-10)
            if val < -1e290:
                return -np.inf
            total += val
        return float(total)
    vals = np.asarray(s_plus)
    d = 1.0 - np.abs(vals) ** 2
    if np.any(d <= 0.0):
        return -np.inf
    return float(np.sum(grid.weights * np.log(d) / (1.0 + grid.nodes**2)))

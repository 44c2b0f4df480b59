r"""Faddeev-Marchenko spaces, Gram systems and reproducing kernels.

Inner product
-------------
For data :math:`s_+ = u\,e^{2i\lambda x}` with masses :math:`\nu_k` at
:math:`\lambda_k`,

.. math::

    \langle f, g\rangle = \sum_k \nu_k f(\lambda_k)\overline{g(\lambda_k)}
    + \frac{1}{4\pi}\int_{\mathbb R} (1-|u|^2) f\bar g
    + (s_+ f - f(-\cdot))\overline{(s_+ g - g(-\cdot))}\, d\lambda ,

which is the matrix-weighted form rewritten so that every integrand is
absolutely integrable whenever the norm is finite.

Functions are carried as *channel families*: finitely many terms
:math:`e^{ic\lambda}A_c(\lambda)` with smooth non-oscillatory amplitudes. The
integrand of an inner product then splits into frequencies and each one is
integrated by :func:`~scatterkern.halfplane_core.fourier_rule`.

Kernels of the translated spaces :math:`H^2(x) = e^{i\lambda x}H^2_{s_+e^{2i\lambda x}}`
are represented in the modulated frame and multiplied by
:math:`e^{ix(\lambda-\bar\mu)}` on output.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .halfplane_core import (ConditionViolation, PoleError, blaschke_factor,
                             cayley_nodes, hardy_kernel, rule_for)
from .profiles import GridProfile, get_profile
from .scattering_data import DerivedData, ScatteringData, inverse_inner_factor

SQ2 = np.sqrt(2.0)


# ------------------------------------------------------------------ bases

def rational_values(z, N: int):
    """e_n(z) = sqrt(2) i/(z+i) b(z)^n, n < N, as an array (len(z), N)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    b = (z - 1j) / (z + 1j)
    return (SQ2 * 1j / (z + 1j))[:, None] * b[:, None] ** np.arange(N)[None, :]


@dataclass(frozen=True)
class RationalBasis:
    """e_0 .. e_{N-1}, orthonormal in the standard H^2, optionally with an
    exponential phase exp(i c lam)."""

    N: int
    phase: float = 0.0

    def __call__(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.exp(1j * self.phase * z)[:, None] * rational_values(z, self.N)


@dataclass
class ChannelFamily:
    """M functions f_j = sum_c exp(i c t) A_c(t)[:, j] on the real line.

    Attributes
    ----------
    comps : dict
        Frequency -> amplitude callable returning an array (len(t), M).
    mass : ndarray (K, M)
        Values at the mass points (these need not be continuations of the
        boundary values, e.g. for minus-mapped functions).
    point : callable or None
        Analytic continuation to the upper half-plane, (len(z), M).
    kmax : int
        Largest power of the Cayley factor present, used to refine grids.
    """

    comps: dict
    mass: np.ndarray
    point: Callable | None
    size: int
    kmax: int = 0
    tag: str = ""

    def values(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros((len(t), self.size), dtype=complex)
        for c, A in self.comps.items():
            out += np.exp(1j * c * t)[:, None] * A(t)
        return out

    def at(self, z):
        if self.point is None:
            raise ValueError("family has no analytic continuation")
        return self.point(np.atleast_1d(np.asarray(z, dtype=complex)))

    def combine(self, C) -> "ChannelFamily":
        """Family of the columns of (f_0 .. f_{M-1}) @ C."""
        C = np.asarray(C, dtype=complex)
        if C.ndim == 1:
            C = C[:, None]
        comps = {c: (lambda A: (lambda t: A(t) @ C))(A) for c, A in self.comps.items()}
        point = None if self.point is None else (lambda z, P=self.point: P(z) @ C)
        return ChannelFamily(comps, self.mass @ C, point, C.shape[1], self.kmax, self.tag)

    def stack(self, other: "ChannelFamily") -> "ChannelFamily":
        m1, m2 = self.size, other.size
        keys = set(self.comps) | set(other.comps)

        def comp(c):
            A1, A2 = self.comps.get(c), other.comps.get(c)

            def A(t):
                t = np.asarray(t, dtype=float)
                a1 = A1(t) if A1 else np.zeros((len(t), m1), complex)
                a2 = A2(t) if A2 else np.zeros((len(t), m2), complex)
                return np.concatenate([a1, a2], axis=1)
            return A

        point = None
        if self.point is not None and other.point is not None:
            point = lambda z: np.concatenate([self.point(z), other.point(z)], axis=1)
        return ChannelFamily({c: comp(c) for c in keys},
                             np.concatenate([self.mass, other.mass], axis=1), point,
                             m1 + m2, max(self.kmax, other.kmax), self.tag)


def _const(v):
    return lambda t: np.full((len(np.atleast_1d(t)), 1), v, dtype=complex)


def rational_family(data: ScatteringData, N: int, phase: float = 0.0) -> ChannelFamily:
    """e^{i phase lam} e_n as a channel family."""
    E = lambda t: rational_values(t, N)
    lam = data.lam
    mass = RationalBasis(N, phase)(lam) if len(lam) else np.zeros((0, N), complex)
    return ChannelFamily({float(phase): E}, mass, RationalBasis(N, phase), N, N, "rational")


def h2_family(data: ScatteringData, N: int, augment: bool = False) -> ChannelFamily:
    """Generating set for the H^2 flavor of the (translated) data.

    For ``x >= 0`` or ``s_plus = 0`` this is e_0 .. e_{N-1}. For ``x < 0`` the
    channel exp(2i|x| lam) e_n is added; with ``augment`` the bounded element
    1 + c exp(2i|x| lam), c the amplitude at infinity, is included as well
    (it has finite norm exactly when |c| = 1).
    All masses are divided out of the Blaschke prefactor, so no prefactor
    appears for finitely many masses.
    """
    fam = rational_family(data, N)
    if data.x < 0 and not _is_zero(data):
        fam = fam.stack(rational_family(data, N, -data.omega))
        c = data.amplitude_at_infinity()
        if augment and abs(abs(c) - 1.0) < 1e-6:
            y = -data.omega
            comps = {0.0: _const(1.0), y: _const(c)}
            lam = data.lam
            mass = (1.0 + c * np.exp(1j * y * lam))[:, None] if len(lam) else np.zeros((0, 1), complex)
            point = lambda z: (1.0 + c * np.exp(1j * y * z))[:, None]
            fam = ChannelFamily(comps, mass, point, 1, 0, "closure").stack(fam)
    fam.tag = "h2"
    return fam


def _is_zero(data: ScatteringData) -> bool:
    t = np.linspace(-20, 20, 41)
    return bool(np.all(data.amplitude(t) == 0))


def h2hat_family(data: ScatteringData, derived: DerivedData, N: int) -> ChannelFamily:
    """Generating set e_n/s_e for the hat flavor; mass values by analytic
    continuation of e_n/s_e. Combinations of infinite norm are projected out
    by :func:`finite_norm_projection`."""
    se = derived.s_e

    def A(t):
        return rational_values(t, N) / se(t)[:, None]

    def point(z):
        return rational_values(z, N) / se(z)[:, None]

    lam = data.lam
    mass = point(lam) if len(lam) else np.zeros((0, N), complex)
    fam = ChannelFamily({0.0: A}, mass, point, N, N, "h2hat")
    if data.x < 0 and not _is_zero(data):
        y = -data.omega
        fam2 = ChannelFamily({y: A}, (np.exp(1j * y * lam)[:, None] * point(lam)) if len(lam) else np.zeros((0, N), complex),
                             lambda z: np.exp(1j * y * z)[:, None] * point(z), N, N, "h2hat")
        fam = fam.stack(fam2)
    return finite_norm_projection(fam, data)


def minus_components(fam: ChannelFamily, data: ScatteringData):
    """Frequency decomposition of s_plus f - f(-t) for every member."""
    out = {}
    w = data.omega
    for c, A in fam.comps.items():
        out.setdefault(c + w, []).append(lambda t, A=A: data.amplitude(t)[:, None] * A(t))
        out.setdefault(-c, []).append(lambda t, A=A: -A(-np.asarray(t, float)))
    return {k: (lambda t, L=L: sum(F(t) for F in L)) for k, L in out.items()}


def finite_norm_projection(fam: ChannelFamily, data: ScatteringData, T: float = 1e7,
                           tol: float = 1e-4) -> ChannelFamily:
    """Restrict to combinations whose reflected part decays at infinity."""
    comps = minus_components(fam, data)
    rows = []
    for A in comps.values():
        rows.append(A(np.array([T, -T])))
    C = np.concatenate(rows, axis=0)
    if np.max(np.abs(C)) < tol:
        return fam
    u, sv, vh = np.linalg.svd(C)
    rank = int(np.sum(sv > tol))
    null = vh[rank:].conj().T
    proj = fam.combine(null)
    proj.tag = fam.tag
    return proj


def minus_family(fam: ChannelFamily, data: ScatteringData, derived: DerivedData) -> ChannelFamily:
    """Image f^- = (s_plus f - f(-t))/s under the duality map, as a family
    in the space of ``derived.minus_data()``. Applying it to the minus data
    (with its own derived object) gives the inverse map."""
    comps = {w: (lambda t, A=A: A(t) / derived.s(t)[:, None])
             for w, A in minus_components(fam, data).items()}
    mass = (-1j * derived.dinv_s * data.masses())[:, None] * fam.mass
    return ChannelFamily(comps, mass, None, fam.size, fam.kmax, "minus")


# ------------------------------------------------------------------ inner products

def fm_inner(F: ChannelFamily, G: ChannelFamily, data: ScatteringData,
             profile: GridProfile | None = None):
    """Matrix of inner products <F_i, G_j> in the FM space of ``data``."""
    profile = profile or get_profile()
    kmax = max(F.kmax, G.kmax)
    out = np.zeros((F.size, G.size), dtype=complex)
    nu = data.masses()
    if len(nu):
        out += (F.mass * nu[:, None]).T @ np.conj(G.mass)
    # absolutely continuous part weighted by |s_e|^2 = 1 - |u|^2
    for c1, A1 in F.comps.items():
        for c2, A2 in G.comps.items():
            r = rule_for(c1 - c2, profile, kmax)
            t = r.points
            wt = r.weights * (1.0 - np.abs(data.amplitude(t)) ** 2)
            out += (A1(t) * wt[:, None]).T @ np.conj(A2(t)) / (4 * np.pi)
    MF, MG = minus_components(F, data), minus_components(G, data)
    for c1, A1 in MF.items():
        for c2, A2 in MG.items():
            r = rule_for(c1 - c2, profile, kmax)
            t = r.points
            out += (A1(t) * r.weights[:, None]).T @ np.conj(A2(t)) / (4 * np.pi)
    return out


def l2_inner(F: ChannelFamily, G: ChannelFamily, profile: GridProfile | None = None):
    """Matrix of plain integrals int F_i conj(G_j) d lam over the real line."""
    profile = profile or get_profile()
    kmax = max(F.kmax, G.kmax)
    out = np.zeros((F.size, G.size), dtype=complex)
    for c1, A1 in F.comps.items():
        for c2, A2 in G.comps.items():
            r = rule_for(c1 - c2, profile, kmax)
            out += (A1(r.points) * r.weights[:, None]).T @ np.conj(A2(r.points))
    return out


def l2_norm(F: ChannelFamily, profile: GridProfile | None = None) -> float:
    return float(np.sqrt(max(l2_inner(F, F, profile)[0, 0].real, 0.0)))


def scaled_family(fam: ChannelFamily, fn, shift: float = 0.0, mass=None) -> ChannelFamily:
    """Multiply every member by the smooth function ``fn`` and by
    exp(i shift lam); mass values are replaced by ``mass`` when given."""
    comps = {c + shift: (lambda t, A=A: np.asarray(fn(t))[:, None] * A(t)) for c, A in fam.comps.items()}
    m = fam.mass if mass is None else np.asarray(mass, complex).reshape(fam.mass.shape)
    return ChannelFamily(comps, m, None, fam.size, fam.kmax, fam.tag)


def sum_families(*fams: ChannelFamily) -> ChannelFamily:
    """Pointwise sum of families of equal size."""
    size = fams[0].size
    comps: dict = {}
    for f in fams:
        for c, A in f.comps.items():
            comps.setdefault(c, []).append(A)
    comps = {c: (lambda t, L=L: sum(A(t) for A in L)) for c, L in comps.items()}
    mass = sum(f.mass for f in fams)
    return ChannelFamily(comps, mass, None, size, max(f.kmax for f in fams), "sum")


def standard_kernel_family(data: ScatteringData, mu, with_masses: bool = True,
                           scale: complex = 1.0) -> ChannelFamily:
    """scale * i/(lam - conj mu); zero at the mass points unless ``with_masses``."""
    mu = complex(mu)
    f = lambda z: scale * 1j / (np.asarray(z, dtype=complex) - np.conj(mu))
    fam = function_family(f, data, kmax=8)
    if not with_masses:
        fam.mass = np.zeros_like(fam.mass)
    return fam


def fm_norm(f: ChannelFamily, data: ScatteringData, profile: GridProfile | None = None) -> float:
    """FM norm of a single function (family of size 1)."""
    if f.size != 1:
        raise ValueError("fm_norm expects a single function")
    v = fm_inner(f, f, data, profile)[0, 0].real
    if not np.isfinite(v):
        raise ValueError("non-finite samples in fm_norm")
    return float(np.sqrt(max(v, 0.0)))


def function_family(fun, data: ScatteringData, freq: float = 0.0, kmax: int = 8) -> ChannelFamily:
    """Wrap a vectorized callable (complex-capable) as a single-member family."""
    A = lambda t: np.asarray(fun(np.asarray(t, float)), dtype=complex).reshape(-1, 1)
    lam = data.lam
    mass = np.asarray(fun(lam), complex).reshape(-1, 1) if len(lam) else np.zeros((0, 1), complex)
    point = lambda z: np.asarray(fun(z), dtype=complex).reshape(-1, 1)
    return ChannelFamily({float(freq): A}, mass, point, 1, kmax, "user")


# ------------------------------------------------------------------ Gram systems

@dataclass
class GramSystem:
    """Gram matrix G[m, n] = <f_n, f_m> of a generating family."""

    G: np.ndarray
    family: ChannelFamily
    data: ScatteringData
    method: str
    flavor: str
    info: dict = field(default_factory=dict)

    @property
    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.G - self.G.conj().T)))

    @property
    def cond(self) -> float:
        w = np.linalg.eigvalsh(0.5 * (self.G + self.G.conj().T))
        return float(w[-1] / max(w[0], 1e-300))

    def eigvalsh(self):
        return np.linalg.eigvalsh(0.5 * (self.G + self.G.conj().T))


def structured_moments_h2(data: ScatteringData, K: int, m: int):
    """Hankel moments h_k = -(1/2pi) int s_plus(phi) e^{i(k+1)phi} dphi on the
    Cayley circle (x = 0)."""
    phi, om, lam = cayley_nodes(m)
    s = data.s_plus(lam)
    k = np.arange(K)
    return -(np.exp(1j * np.outer(k + 1, phi)) @ s) / m


def fourier_moments_h2(data: ScatteringData, K: int, profile: GridProfile):
    """Hankel moments for translated data through oscillatory quadrature."""
    r = rule_for(data.omega, profile, K)
    t = r.points
    A = (data.amplitude(t) / (t + 1j) ** 2)[:, None] * ((t - 1j) / (t + 1j))[:, None] ** np.arange(K)[None, :]
    return -r.apply(A) / np.pi


def gram_assemble(data: ScatteringData, N: int | None = None, flavor: str = "h2",
                  method: str = "brute", derived: DerivedData | None = None,
                  profile: GridProfile | None = None, augment: bool = False) -> GramSystem:
    """Assemble the Gram system of the generating set for ``flavor``.

    ``method='brute'`` integrates the inner product pointwise;
    ``method='structured'`` uses Hankel (and Toeplitz) moments: Cayley-circle
    FFT at ``x = 0`` and oscillatory quadrature for ``x > 0``.
    """
    profile = profile or get_profile()
    N = N or profile.basis_order
    if flavor == "h2":
        fam = h2_family(data, N, augment)
    elif flavor == "h2hat":
        derived = derived or DerivedData(data, profile.fft_size)
        fam = h2hat_family(data, derived, N)
    else:
        raise ValueError("flavor must be 'h2' or 'h2hat'")
    if 2 * N > 4 * profile.panels * profile.order:
        warnings.warn("basis order exceeds grid resolution", RuntimeWarning)
    nu = data.masses()
    if method == "brute":
        G = fm_inner(fam, fam, data, profile).T
        return GramSystem(G, fam, data, method, flavor)
    if method != "structured":
        raise ValueError("method must be 'brute' or 'structured'")
    if flavor == "h2":
        if data.x < 0 and not _is_zero(data):
            raise ValueError("structured Gram needs x >= 0 for the H^2 flavor")
        if data.x == 0:
            h = structured_moments_h2(data, 2 * N, profile.fft_size)
        else:
            h = fourier_moments_h2(data, 2 * N, profile)
        idx = np.add.outer(np.arange(N), np.arange(N))
        G = np.eye(N) - h[idx]
    else:
        if data.x != 0 or fam.size != N:
            raise ValueError("structured hat Gram is available at x = 0 on the full basis")
        derived = derived or DerivedData(data, profile.fft_size)
        phi, om, lam = cayley_nodes(profile.fft_size)
        se = derived.s_e(lam)
        T = 1.0 / np.abs(se) ** 2
        H = data.s_plus(lam) / se**2
        m = profile.fft_size
        d = np.arange(-(N - 1), N)
        tk = (np.exp(1j * np.outer(d, phi)) @ T) / m
        hk = (np.exp(1j * np.outer(np.arange(2 * N) + 1, phi)) @ H) / m
        n_, m_ = np.meshgrid(np.arange(N), np.arange(N))
        G = tk[(n_ - m_) + (N - 1)] + hk[n_ + m_]
    if len(nu):
        Mv = fam.mass
        G = G + (np.conj(Mv) * nu[:, None]).T @ Mv
    return GramSystem(G, fam, data, method, flavor)


def representer_solve(G, a, rcond: float = 1e-13):
    """Solve G c = a for Hermitian positive semidefinite G by a truncated
    eigen-decomposition. Returns (c, info)."""
    Gh = 0.5 * (G + G.conj().T)
    w, V = np.linalg.eigh(Gh)
    keep = w > rcond * max(w[-1], 1e-300)
    c = V[:, keep] @ ((V[:, keep].conj().T @ a) / w[keep])
    return c, {"epsilon": 0.0, "dropped": int(np.sum(~keep)), "cond": float(w[-1] / max(w[keep][0], 1e-300))}


def ridge_solve(G, a, schedule=(1e-2, 1e-4, 1e-6, 1e-8, 0.0), stop: float = 1e-6):
    """Regularized solves (eps I + G) c = a along a decreasing ridge
    schedule; stops once the diagonal value moves by less than ``stop``
    relatively. Returns (c, info)."""
    prev, c, used, trace = None, None, None, []
    n = len(a)
    for eps in schedule:
        M = G + eps * np.eye(n)
        try:
            cc = np.linalg.solve(M, a)
        except np.linalg.LinAlgError:
            break
        val = float(np.real(np.vdot(a, cc)))
        if not np.isfinite(val) or val < 0:
            break
        trace.append((eps, val))
        prev_c, prev_eps = c, used
        c, used = cc, eps
        if prev is not None and abs(val - prev) <= stop * abs(val):
            if eps > 0:
                # first-order extrapolation of c(eps) to eps = 0
                c = c + (c - prev_c) * eps / (prev_eps - eps)
            break
        prev = val
    if c is None:
        raise ConditionViolation("ridge schedule failed on every step")
    return c, {"epsilon": used, "trace": trace}


# ------------------------------------------------------------------ kernels

class KernelField:
    """Reproducing kernel k(., mu; x) of one flavor.

    Evaluation uses the original frame: k(lam, mu; x) = exp(i x (lam - conj mu))
    k_x(lam, mu), where k_x lives in the space of the modulated data.
    """

    def __init__(self, flavor, data, derived, mu, gram: GramSystem, coef, info):
        self.flavor = flavor
        self.data = data
        self.derived = derived
        self.mu = complex(mu)
        self.gram = gram
        self.coef = np.asarray(coef)
        self.info = info
        self.family = gram.family.combine(self.coef)

    @property
    def x(self) -> float:
        return self.data.x

    def _phase(self, z):
        return np.exp(1j * self.x * (np.asarray(z, dtype=complex) - np.conj(self.mu)))

    def modulated(self, z):
        """k_x(z, mu) in the frame of the modulated data (closed upper half-plane)."""
        return self.family.at(z)[:, 0]

    def __call__(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self._phase(z) * self.modulated(z)

    @property
    def diag(self) -> float:
        """k(mu, mu; x), real and nonnegative."""
        return float(np.real(self(self.mu)[0]))

    def mass_values(self):
        return np.exp(1j * self.x * (self.data.lam - np.conj(self.mu))) * self.family.mass[:, 0]

    def boundary(self, t):
        t = np.asarray(t, float)
        return self._phase(t) * self.family.values(t)[:, 0]

    def minus_boundary(self, t):
        """(k)^- on the real line, original frame."""
        t = np.asarray(t, float)
        f = self.family.values(t)[:, 0]
        fr = self.family.values(-t)[:, 0]
        fm = (self.data.s_plus(t) * f - fr) / self.derived.s(t)
        return np.exp(-1j * self.x * (t + np.conj(self.mu))) * fm

    def minus_mass(self):
        nu = self.data.masses()
        v = -1j * self.derived.dinv_s * nu * self.family.mass[:, 0]
        return np.exp(-1j * self.x * (self.data.lam + np.conj(self.mu))) * v

    def minus_regular(self, z, profile: GridProfile | None = None):
        """(b_p k^-)(z) for z in the upper half-plane, p = -conj(mu).

        b_p s_e k^- is a standard H^2 function; its Cauchy integral is
        evaluated frequency by frequency and divided by s_e(z).
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        profile = profile or get_profile()
        p = -np.conj(self.mu)
        d = self.data
        fam = self.family
        B = self.derived.blaschke
        out = np.zeros(len(z), dtype=complex)
        comps = minus_components(fam, d)
        for w, A in comps.items():
            r = rule_for(w, profile, fam.kmax)
            t = r.points
            g = blaschke_factor(p, t) * B(t) * A(t)[:, 0]
            ker = 1.0 / (t[:, None] - z[None, :])
            out += (r.weights * g) @ ker / (2j * np.pi)
        val = out / self.derived.s_e(z)
        return np.exp(-1j * self.x * (z + np.conj(self.mu))) * val

    def minus(self, z, profile: GridProfile | None = None):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        p = -np.conj(self.mu)
        near = np.abs(z - p) < 1e-6 * max(1.0, abs(p))
        out = np.empty(len(z), dtype=complex)
        if np.any(~near):
            zz = z[~near]
            out[~near] = self.minus_regular(zz, profile) / blaschke_factor(p, zz)
        if np.any(near):
            # removable singularity at p: mean value over a small circle
            r = 0.1 * p.imag
            ring = p + r * np.exp(2j * np.pi * (np.arange(16) + 0.5) / 16)
            out[near] = np.mean(self.minus_regular(ring, profile) / blaschke_factor(p, ring))
        return out


def kernel_compute(flavor: str, data: ScatteringData, mu, N: int | None = None,
                   method: str = "gram", derived: DerivedData | None = None,
                   profile: GridProfile | None = None, gram: GramSystem | None = None,
                   augment: bool = False) -> KernelField:
    """Reproducing kernel at ``mu`` of the H^2 or hat flavor.

    ``method='gram'`` is the Riesz representer of evaluation on the brute
    Gram system; ``method='lemma'`` applies the ridge-regularized inverse of
    the structured operator I + H to the standard kernel (coefficients
    conj(e_n(mu))) along the profile's ridge schedule.
    """
    mu = complex(mu)
    if mu.imag <= 0:
        raise ValueError("kernel center must lie in the upper half-plane")
    profile = profile or get_profile()
    derived = derived or DerivedData(data, profile.fft_size)
    if gram is None:
        gm = "brute" if method == "gram" else "structured"
        gram = gram_assemble(data, N, flavor, gm, derived, profile, augment)
    a = np.conj(gram.family.at(mu)[0])
    if method == "gram":
        c, info = representer_solve(gram.G, a)
    elif method == "lemma":
        c, info = ridge_solve(gram.G, a, profile.ridge, profile.ridge_stop)
    else:
        raise ValueError("method must be 'gram' or 'lemma'")
    info["basis_size"] = gram.family.size
    # conditioning on the retained subspace (generating sets may be overcomplete)
    info["gram_cond"] = info.get("cond", gram.cond)
    return KernelField(flavor, data, derived, mu, gram, c, info)


# ------------------------------------------------------------------ duality identities

def dual_data(data: ScatteringData, derived: DerivedData, lam0) -> ScatteringData:
    """Minus data multiplied by (b_lam0 b_{-conj lam0})^{-1}."""
    return derived.minus_data().modulate(inverse_inner_factor(lam0))


def kernel_identity_check(data: ScatteringData, lam0, N: int | None = None,
                          profile: GridProfile | None = None, grid=None) -> dict:
    """Both sides of the diagonal identity
    k(lam0, lam0) khat'(-conj lam0, -conj lam0) = 1/(s(-conj lam0) s(lam0) (2 Im lam0)^2)
    with khat' the hat kernel of the dual data, together with the pointwise
    residual of the vector identity for k^- on a real grid."""
    lam0 = complex(lam0)
    if lam0.imag <= 0:
        raise ValueError("lam0 must lie in the upper half-plane")
    profile = profile or get_profile()
    for z in (lam0, -np.conj(lam0)):
        if data.n_masses and np.min(np.abs(data.lam - z)) < 1e-10:
            raise PoleError("lam0 or its reflection coincides with a mass point")
    derived = DerivedData(data, profile.fft_size)
    s0, s1 = derived.s(np.array([lam0]))[0], derived.s(np.array([-np.conj(lam0)]))[0]
    if abs(s0) < 1e-14 or abs(s1) < 1e-14:
        raise PoleError("s vanishes at the excluded point")
    k = kernel_compute("h2", data, lam0, N, "gram", derived, profile)
    dd = dual_data(data, derived, lam0)
    ddv = DerivedData(dd, profile.fft_size)
    p = -np.conj(lam0)
    kh = kernel_compute("h2hat", dd, p, N, "gram", ddv, profile)
    lhs = k.diag * kh.diag
    rhs = 1.0 / (s1 * s0 * (2 * lam0.imag) ** 2)
    t = np.linspace(-6, 6, 25) if grid is None else np.asarray(grid, float)
    km = k.minus_boundary(t)
    pred = (1.0 / s1) / blaschke_factor(p, t) / (2 * lam0.imag) * kh(t) / kh.diag
    vec = float(np.max(np.abs(km - pred)) / max(np.max(np.abs(km)), 1e-300))
    return {"lhs": complex(lhs), "rhs": complex(rhs),
            "relative_residual": float(abs(lhs - rhs) / abs(rhs)),
            "vector_residual": vec, "k_diag": k.diag, "khat_dual_diag": kh.diag}


def khat_by_duality(sigma: ScatteringData, mu, N: int | None = None,
                    profile: GridProfile | None = None, augment: bool = False) -> dict:
    """Hat-flavor kernel of ``sigma`` at ``mu`` through the H^2 kernel of its
    dual data (the data whose minus side is sigma b_mu b_{-conj mu}).

    Returns the diagonal value and the H^2 kernel used.
    """
    mu = complex(mu)
    profile = profile or get_profile()
    lam0 = -np.conj(mu)
    dsig = DerivedData(sigma, profile.fft_size)
    ww = lambda t: blaschke_factor(mu, t) * blaschke_factor(lam0, t)
    s = dsig.s

    def amp(t):
        t = np.asarray(t, float)
        sv = s(t)
        # s_plus = -(s/conj s) conj(s_minus), phase handled by the translation
        return -(sv / np.conj(sv)) * np.conj(sigma.amplitude(t) * ww(t))

    nu_d = np.zeros(0)
    if sigma.n_masses:
        nu_minus_d = sigma.masses() * np.abs(blaschke_factor(lam0, sigma.lam)) ** 2
        nu_d = 1.0 / (nu_minus_d * np.abs(dsig.dinv_s) ** 2)
    dplus = ScatteringData(sigma.label + "-dual", amp, lam=sigma.lam, nu=nu_d,
                           s_e=dsig._se, meta={"s_plus": {"kind": "derived"}}).translate(-sigma.x)
    dv = DerivedData(dplus, profile.fft_size)
    k = kernel_compute("h2", dplus, lam0, N, "gram", dv, profile, augment=augment)
    s_mu, s_l0 = dsig.s(np.array([mu]))[0], dsig.s(np.array([lam0]))[0]
    diag = 1.0 / (k.diag * s_mu * s_l0 * (2 * mu.imag) ** 2)
    return {"diag": complex(diag), "dual_kernel": k, "dual_data": dplus}


def lemma3_check(data: ScatteringData, lam0, N: int | None = None,
                 profile: GridProfile | None = None) -> dict:
    """Compare normalized diagonals of both flavors and the behaviour under
    mass truncation. Normalization divides by the standard kernel value."""
    lam0 = complex(lam0)
    profile = profile or get_profile()
    derived = DerivedData(data, profile.fft_size)
    k = kernel_compute("h2", data, lam0, N, "gram", derived, profile)
    kh = kernel_compute("h2hat", data, lam0, N, "gram", derived, profile)
    k0 = float(np.real(hardy_kernel(lam0, lam0)))
    t = np.linspace(-50, 50, 2001)
    sup = float(np.max(np.abs(data.amplitude(t))))
    rep = {"K": k.diag / k0, "Khat": kh.diag / k0, "margin": (kh.diag - k.diag) / k0,
           "sup_s_plus": sup, "equal_flavors_expected": sup < 1 - 1e-9}
    trunc = []
    for n in range(data.n_masses + 1):
        dn = data.truncate_masses(n)
        kn = kernel_compute("h2", dn, lam0, N, "gram", None, profile)
        trunc.append(kn.diag / k0)
    rep["truncation"] = trunc
    rep["truncation_monotone"] = bool(all(trunc[i] >= trunc[i + 1] - 1e-10 for i in range(len(trunc) - 1)))
    return rep

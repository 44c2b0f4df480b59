"""Scattering data, admissibility checks and the dual (minus) data.

A data set consists of a contractive symmetric function ``s_plus`` on the real
line and positive masses at points of the upper half-plane. Translation by
``x`` multiplies ``s_plus`` by ``exp(2i lam x)`` and each mass by
``exp(-2 Im(lam_k) x)``; multiplication by an inner factor ``w w_*`` is kept
symbolically as well, so the oscillatory phase never has to be resampled.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .halfplane_core import (BlaschkeProduct, ConditionViolation, OuterFunction,
                             blaschke_factor, szego_integral, tan_grid)


def _zero(t):
    return np.zeros(np.shape(t), dtype=complex)


def _one(t):
    return np.ones(np.shape(t), dtype=complex)


@dataclass(frozen=True)
class ScatteringData:
    """Scattering data ``{s_plus, nu_plus}``, possibly translated.

    Attributes
    ----------
    base : callable
        ``s_plus`` at ``x = 0`` without inner factors, vectorized on real input.
    lam, nu : ndarray
        Mass points (upper half-plane) and positive weights at ``x = 0``.
    s_e : callable or None
        Closed-form outer factor, analytic in the upper half-plane. When
        ``None`` it is built from ``|s_plus|`` numerically.
    x : float
        Translation parameter.
    factors : tuple of callables
        Inner products ``w w_*`` multiplying ``s_plus`` (and the masses).
    """

    label: str
    base: Callable
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    nu: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s_e: Callable | None = None
    x: float = 0.0
    factors: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=complex))
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        if lam.shape != nu.shape:
            raise ValueError("masses: points and weights differ in length")
        if np.any(lam.imag <= 0):
            raise ValueError("mass points must lie in the upper half-plane")
        if np.any(nu <= 0):
            raise ValueError("mass weights must be positive")
        if len(np.unique(np.round(lam, 12))) != len(lam):
            raise ValueError("mass points must be pairwise distinct")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "nu", nu)

    # boundary values ---------------------------------------------------
    def amplitude(self, t):
        """Non-oscillatory part u with s_plus = u exp(2i t x)."""
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.base(t), dtype=complex) * _one(t)
        for w in self.factors:
            out = out * w(t)
        return out

    @property
    def omega(self) -> float:
        return 2.0 * self.x

    def s_plus(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude(t) * np.exp(1j * self.omega * t)

    def masses(self):
        """Mass weights at the current translation and with inner factors."""
        nu = self.nu * np.exp(-2.0 * self.lam.imag * self.x)
        for w in self.factors:
            nu = nu * np.real(w(self.lam))
        return nu

    def amplitude_at_infinity(self) -> float:
        """Limit of the amplitude at +infinity (real by symmetry)."""
        v = self.amplitude(np.array([1e9, 2e9]))
        return float(np.real(v[0]))

    # transformations ---------------------------------------------------
    def translate(self, dx: float) -> "ScatteringData":
        return replace(self, x=self.x + float(dx))

    def modulate(self, ww) -> "ScatteringData":
        """Multiply s_plus and nu by the inner product ``ww = w w_*``."""
        return replace(self, factors=self.factors + (ww,))

    def truncate_masses(self, n: int) -> "ScatteringData":
        return replace(self, lam=self.lam[:n], nu=self.nu[:n])

    @property
    def n_masses(self) -> int:
        return len(self.lam)

    def to_dict(self) -> dict:
        d = {"label": self.label, "x": self.x,
             "masses": [{"lambda": [float(z.real), float(z.imag)], "weight": float(w)}
                        for z, w in zip(self.lam, self.nu)]}
        d.update(self.meta)
        return d


# ------------------------------------------------------------------ registry

_SQ2, _SQ23 = np.sqrt(2.0), np.sqrt(2.0 / 3.0)


def zero_data() -> ScatteringData:
    return ScatteringData("zero", _zero, s_e=_one,
                          meta={"s_plus": {"kind": "closed-form", "name": "zero"}})


def appendix1_data() -> ScatteringData:
    """s_plus = lam/(lam + i), no masses."""
    return ScatteringData("appendix1", lambda t: t / (t + 1j),
                          s_e=lambda z: 1j / (np.asarray(z, dtype=complex) + 1j),
                          meta={"s_plus": {"kind": "closed-form", "name": "appendix1"}})


def contraction_data() -> ScatteringData:
    """s_plus = 0.5 lam^2/(lam^2 + 1), sup norm 1/2."""
    def s_e(z):
        z = np.asarray(z, dtype=complex)
        return np.sqrt(0.75) * (z + 1j * _SQ2) * (z + 1j * _SQ23) / (z + 1j) ** 2
    return ScatteringData("contraction", lambda t: 0.5 * t**2 / (t**2 + 1), s_e=s_e,
                          meta={"s_plus": {"kind": "closed-form", "name": "contraction"}})


def masses_data(points, weights, label: str = "masses") -> ScatteringData:
    """s_plus = 0 with the given masses (pure Blaschke data)."""
    return ScatteringData(label, _zero, lam=np.asarray(points, complex),
                          nu=np.asarray(weights, float), s_e=_one,
                          meta={"s_plus": {"kind": "closed-form", "name": "zero"}})


def one_mass_data(nu: float = 1.0) -> ScatteringData:
    return masses_data([1j], [nu], "one-mass")


def two_mass_data() -> ScatteringData:
    return masses_data([1j, 2j], [1.0, 1.0], "two-mass")


def plateau_data() -> ScatteringData:
    """s_plus = exp(-lam^4): modulus reaches 1 at the origin."""
    return ScatteringData("plateau", lambda t: np.exp(-np.asarray(t, float) ** 4),
                          meta={"s_plus": {"kind": "closed-form", "name": "plateau"}})


def sampled_data(t, values, masses=(), label: str = "samples") -> ScatteringData:
    """Data from samples on a real grid: cubic splines of the real and
    imaginary parts, constant continuation outside the sampled range."""
    t = np.asarray(t, float)
    values = np.asarray(values, complex)
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample abscissas must be increasing")
    re, im = CubicSpline(t, values.real), CubicSpline(t, values.imag)

    def base(s):
        s = np.clip(np.asarray(s, float), t[0], t[-1])
        return re(s) + 1j * im(s)

    lam = [complex(*m["lambda"]) if isinstance(m, dict) else m[0] for m in masses]
    nu = [m["weight"] if isinstance(m, dict) else m[1] for m in masses]
    return ScatteringData(label, base, lam=np.asarray(lam, complex),
                          nu=np.asarray(nu, float), meta={"s_plus": {"kind": "samples"}})


REGISTRY = {
    "zero": zero_data,
    "appendix1": appendix1_data,
    "contraction": contraction_data,
    "one-mass": one_mass_data,
    "two-mass": two_mass_data,
    "plateau": plateau_data,
}

GOLDEN = ("zero", "appendix1", "contraction", "one-mass", "two-mass")


def get_dataset(name: str, **params) -> ScatteringData:
    try:
        return REGISTRY[name](**params)
    except KeyError:
        raise KeyError(f"unknown dataset {name!r}; known: {sorted(REGISTRY)}") from None


def load_data(source) -> ScatteringData:
    """Build data from a JSON file path, JSON text or an already parsed dict.

    ``{"label": ..., "s_plus": {"kind": "closed-form", "name": ..., "params": {...}}
    | {"kind": "samples", "t": [...], "re": [...], "im": [...]},
    "masses": [{"lambda": [re, im], "weight": w}], "x": 0.0}``
    """
    if isinstance(source, dict):
        d = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            d = json.loads(text)
        else:
            with open(text) as fh:
                d = json.load(fh)
    if not isinstance(d, dict) or "s_plus" not in d:
        raise ValueError("data file must be an object with an 's_plus' entry")
    sp = d["s_plus"]
    masses = d.get("masses", [])
    kind = sp.get("kind")
    if kind == "closed-form":
        data = get_dataset(sp["name"], **sp.get("params", {}))
        if masses:
            lam = np.concatenate([data.lam, [complex(*m["lambda"]) for m in masses]])
            nu = np.concatenate([data.nu, [float(m["weight"]) for m in masses]])
            data = replace(data, lam=lam, nu=nu)
    elif kind == "samples":
        vals = np.asarray(sp["re"], float) + 1j * np.asarray(sp.get("im", np.zeros(len(sp["re"]))), float)
        data = sampled_data(sp["t"], vals, masses)
    else:
        raise ValueError(f"unknown s_plus kind {kind!r}")
    data = replace(data, label=d.get("label", data.label))
    if d.get("x"):
        data = data.translate(float(d["x"]))
    return data


# ------------------------------------------------------------------ validation

@dataclass
class ValidationReport:
    label: str
    symmetry_residual: float
    max_modulus: float
    szego: float
    blaschke_small: float
    blaschke_large: float
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"label": self.label, "symmetry_residual": self.symmetry_residual,
                "max_modulus": self.max_modulus, "szego": self.szego,
                "blaschke_small": self.blaschke_small, "blaschke_large": self.blaschke_large,
                "checks": self.checks, "passed": self.passed}


def validate(data: ScatteringData, tol: float = 1e-10) -> ValidationReport:
    """Symmetry, contractivity, Szego and Blaschke conditions."""
    t = tan_grid(64, 16).nodes
    t = t[np.abs(t) < 1e6]
    sp = data.amplitude(t)
    sym = float(np.max(np.abs(sp - np.conj(data.amplitude(-t))))) if len(t) else 0.0
    mod = float(np.max(np.abs(sp)))
    sz = szego_integral(data.amplitude)
    im = data.lam.imag
    small, large = float(np.sum(im[im <= 1])), float(np.sum(1.0 / im[im > 1]))
    checks = {"symmetry": sym < tol, "contractive": mod <= 1 + tol,
              "szego": bool(np.isfinite(sz)),
              "blaschke": bool(np.isfinite(small) and np.isfinite(large))}
    return ValidationReport(data.label, sym, mod, sz, small, large, checks)


# ------------------------------------------------------------------ derived data

def richardson_derivative(f, z, h: float | None = None, levels: int = 4):
    """Central-difference derivative of an analytic f at complex z with
    Richardson extrapolation over step halvings."""
    h = 1e-2 * max(1.0, abs(z)) if h is None else h
    T = np.zeros((levels, levels), dtype=complex)
    for i in range(levels):
        hi = h / 2**i
        T[i, 0] = (f(z + hi) - f(z - hi)) / (2 * hi)
        for j in range(1, i + 1):
            T[i, j] = T[i, j - 1] + (T[i, j - 1] - T[i - 1, j - 1]) / (4**j - 1)
    return T[-1, -1]


class DerivedData:
    """Outer factor, Blaschke product, s = s_e/B, s_minus and nu_minus.

    Translation and inner factors of ``data`` are honoured: ``s`` depends on
    the modulus of ``s_plus`` and on the mass points only, while ``s_minus``
    carries the conjugate phase. Evaluations of the numerical outer factor on
    real grids are memoized behind a lock.
    """

    def __init__(self, data: ScatteringData, fft_size: int = 4096):
        self.data = data
        self.B = BlaschkeProduct.from_zeros(data.lam) if data.n_masses else BlaschkeProduct.from_zeros([])
        if data.s_e is not None:
            self._outer = None
            self._se = data.s_e
        else:
            base = data.base

            def logmod(t):
                # non-finite values are reported by the outer function
                with np.errstate(divide="ignore", invalid="ignore"):
                    return 0.5 * np.log(1.0 - np.abs(base(t)) ** 2)
            self._outer = OuterFunction(logmod, fft_size)
            self._se = self._outer
        self._lock = threading.Lock()
        self._memo = {}
        k = data.n_masses
        self.dinv_s = np.array([richardson_derivative(self.inv_s, z) for z in data.lam],
                               dtype=complex) if k else np.zeros(0, complex)
        if np.any(np.abs(self.dinv_s) < 1e-14):
            raise ConditionViolation("(1/s)' vanishes at a mass point")
        self.nu_minus0 = 1.0 / (data.nu * np.abs(self.dinv_s) ** 2) if k else np.zeros(0)

    # analytic functions in the closed upper half-plane
    def s_e(self, z):
        z = np.asarray(z)
        if z.ndim == 1 and np.isrealobj(z) and self._outer is not None:
            key = (z.shape, hash(z.tobytes()))
            with self._lock:
                if key not in self._memo:
                    self._memo[key] = self._se(z)
                return self._memo[key]
        return self._se(z)

    def blaschke(self, z):
        return self.B(z)

    def s(self, z):
        return self.s_e(z) / self.B(z)

    def inv_s(self, z):
        return self.B(z) / self.s_e(z)

    # boundary functions on R
    def s_plus(self, t):
        return self.data.s_plus(t)

    def s_minus_amplitude(self, t):
        """Non-oscillatory part of s_minus; s_minus = amp * exp(-2i t x)."""
        t = np.asarray(t, dtype=float)
        s = self.s(t)
        return -(s / np.conj(s)) * np.conj(self.data.amplitude(t))

    def s_minus(self, t):
        t = np.asarray(t, dtype=float)
        return self.s_minus_amplitude(t) * np.exp(-1j * self.data.omega * t)

    def nu_minus(self):
        """nu_minus at the current translation of the data."""
        nu = self.nu_minus0 * np.exp(2.0 * self.data.lam.imag * self.data.x)
        for w in self.data.factors:
            nu = nu / np.real(w(self.data.lam))
        return nu

    def S(self, t):
        """Scattering matrix [[s_minus, s], [s, s_plus]] on a real grid, shape (n,2,2)."""
        t = np.asarray(t, dtype=float)
        s = self.s(t)
        out = np.empty(t.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = self.s_minus(t)
        out[..., 0, 1] = s
        out[..., 1, 0] = s
        out[..., 1, 1] = self.s_plus(t)
        return out

    def minus_data(self) -> ScatteringData:
        """The data {s_minus, nu_minus} as a ScatteringData object."""
        d = self.data
        amp = self.s_minus_amplitude
        nu = self.nu_minus0.copy()
        for w in d.factors:
            nu = nu / np.real(w(d.lam))
        return ScatteringData(d.label + "-minus", amp, lam=d.lam,
                              nu=nu, s_e=self._se, x=0.0,
                              meta={"s_plus": {"kind": "derived"}}).translate(-d.x)

    def unitarity_residual(self, t):
        S = self.S(t)
        I = np.eye(2)
        return np.linalg.norm(S @ np.conj(np.swapaxes(S, -1, -2)) - I, axis=(-2, -1))

    def symmetry_residual(self, t):
        """max |S^*(-t) - S(t)| on the grid (S^* is the conjugate transpose)."""
        S = self.S(t)
        Sm = self.S(-np.asarray(t, float))
        return np.max(np.abs(np.conj(np.swapaxes(Sm, -1, -2)) - S), axis=(-2, -1))

    def mass_duality_residual(self):
        d = self.data
        if not d.n_masses:
            return np.zeros(0)
        return np.abs(d.masses() * self.nu_minus() * np.abs(self.dinv_s) ** 2 - 1.0)


def derive(data: ScatteringData, fft_size: int = 4096) -> DerivedData:
    rep = validate(data)
    if not rep.checks["szego"]:
        raise ConditionViolation(f"{data.label}: Szego condition fails")
    if not rep.checks["blaschke"]:
        raise ConditionViolation(f"{data.label}: Blaschke condition fails")
    return DerivedData(data, fft_size)


# ------------------------------------------------------------------ duality maps

def minus_map(f_real, f_reflected, f_mass, t, derived: DerivedData):
    """Boundary and mass values of f^- from those of f.

    ``f_real`` and ``f_reflected`` are f(t) and f(-t) on the real nodes ``t``;
    ``f_mass`` holds f at the mass points.
    """
    s = derived.s(t)
    fm = (derived.s_plus(t) * f_real - f_reflected) / s
    nu = derived.data.masses()
    fm_mass = -1j * derived.dinv_s * nu * np.asarray(f_mass)
    return fm, fm_mass


def plus_map(g_real, g_reflected, g_mass, t, derived: DerivedData):
    """Inverse of :func:`minus_map`."""
    s = derived.s(t)
    fp = (derived.s_minus(t) * g_real - g_reflected) / s
    num = derived.nu_minus()
    fp_mass = -1j * derived.dinv_s * num * np.asarray(g_mass)
    return fp, fp_mass


def duality_map(f, derived: DerivedData, t, direction: str = "+-"):
    """Apply the duality map to a callable f (vectorized, complex-capable at
    the mass points). Returns (values on t, values at the mass points)."""
    t = np.asarray(t, float)
    lam = derived.data.lam
    if direction == "+-":
        return minus_map(f(t), f(-t), f(lam) if len(lam) else np.zeros(0), t, derived)
    if direction == "-+":
        return plus_map(f(t), f(-t), f(lam) if len(lam) else np.zeros(0), t, derived)
    raise ValueError("direction must be '+-' or '-+'")


def inner_factor(z0):
    """The product b_z0 * (b_z0)_* = b_z0 b_{-conj z0} as a callable."""
    z0 = complex(z0)

    def ww(t):
        return blaschke_factor(z0, t) * blaschke_factor(-np.conj(z0), t)
    return ww


def inverse_inner_factor(z0):
    """(b_z0 b_{-conj z0})^{-1}; on the real line this is the conjugate."""
    z0 = complex(z0)

    def ww(t):
        return 1.0 / (blaschke_factor(z0, t) * blaschke_factor(-np.conj(z0), t))
    return ww

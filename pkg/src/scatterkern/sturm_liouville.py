"""Transfer matrices and Weyl-function quantities for -y'' + q y = lam^2 y.

Conventions
-----------
* B_x(lam^2) = [[c, s], [c', s']] solves B' = [[0, 1], [q - lam^2, 0]] B, B_0 = I.
* m_+(lam) = e(0)/e'(0) for the solution e in L^2(R_+) (value over
  derivative, the reciprocal of the usual Weyl function).
* J = [[0, 1], [-1, 0]].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .halfplane_core import ConditionViolation

J = np.array([[0, 1], [-1, 0]], dtype=complex)
E11 = np.array([[1, 0], [0, 0]], dtype=complex)

RTOL = 1e-12
ATOL = 1e-14


@dataclass
class Potential:
    """Real potential q on [0, support] (q = 0 beyond ``support``).

    ``support`` may be a truncation point for rapidly decaying potentials;
    ``tail`` is a bound for the integral of (1 + x)|q| beyond it.
    """

    name: str
    q: object
    support: float
    params: dict = field(default_factory=dict)
    tail: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, float)
        return np.where(x <= self.support, self.q(x), 0.0)

    def marchenko_integral(self, n: int = 4001) -> float:
        """Integral of (1 + x)|q| over [0, support] (trapezoid)."""
        if self.support == 0:
            return 0.0
        x = np.linspace(0, self.support, n)
        return float(np.trapezoid((1 + x) * np.abs(self(x)), x))


def zero_potential() -> Potential:
    return Potential("zero", lambda x: np.zeros_like(np.asarray(x, float)), 0.0)


def bump_potential(height: float = 1.0, center: float = 1.5, width: float = 1.0) -> Potential:
    """C^1 compact bump height*(1 - ((x - c)/w)^2)^2 on |x - c| < w."""
    def q(x):
        u = (np.asarray(x, float) - center) / width
        return np.where(np.abs(u) < 1, height * (1 - u**2) ** 2, 0.0)
    return Potential("bump", q, center + width, {"height": height, "center": center, "width": width})


def sech2_potential(amp: float = 2.0, shift: float = 3.0, cut: float = 30.0) -> Potential:
    """amp / cosh^2(x - shift), truncated at ``cut``."""
    q = lambda x: amp / np.cosh(np.asarray(x, float) - shift) ** 2
    tail = 4 * amp * (1 + cut) * np.exp(-2 * (cut - shift))
    return Potential("sech2", q, cut, {"amp": amp, "shift": shift}, tail)


POTENTIALS = {"zero": zero_potential, "bump": bump_potential, "sech2": sech2_potential}


def parse_potential(spec: str) -> Potential:
    """'name' or 'name:k=v,k=v'."""
    name, _, rest = spec.partition(":")
    if name not in POTENTIALS:
        raise KeyError(f"unknown potential {name!r}; known: {sorted(POTENTIALS)}")
    kw = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        kw[k.strip()] = float(v)
    return POTENTIALS[name](**kw)


def _rhs(q: Potential, lam2):
    def f(x, y):
        Y = y.reshape(2, -1)
        M = np.array([[0, 1], [q(x) - lam2, 0]], dtype=complex)
        return (M @ Y).ravel()
    return f


def _breaks(q: Potential, x0: float, x1: float):
    """Integration breakpoints at support edges (q only piecewise smooth)."""
    pts = {x0, x1}
    for p in (q.support, q.params.get("center", None)):
        if p is None:
            continue
        for b in (p, p - q.params.get("width", 0.0), p + q.params.get("width", 0.0)):
            if min(x0, x1) < b < max(x0, x1):
                pts.add(b)
    return sorted(pts, reverse=x1 < x0)


def _propagate(q: Potential, lam, x0: float, x1: float, Y0, dense: bool = False):
    lam2 = complex(lam) ** 2
    Y = np.asarray(Y0, complex)
    bps = _breaks(q, x0, x1)
    sols = []
    for a, b in zip(bps[:-1], bps[1:]):
        if a == b:
            continue
        if abs(b - a) * max(1.0, abs(lam2)) ** 0.5 > 1e4:
            raise ConditionViolation("oscillation count too large for the integrator")
        sol = solve_ivp(_rhs(q, lam2), (a, b), Y.ravel(), method="DOP853", rtol=RTOL,
                        atol=ATOL, dense_output=dense)
        if not sol.success:
            raise ConditionViolation(f"integration failed: {sol.message}")
        Y = sol.y[:, -1].reshape(Y.shape)
        sols.append(sol)
    return Y, sols


@dataclass
class SLTransfer:
    B: np.ndarray
    x: float
    lam: complex

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.B))


def integrate_B(q: Potential, lam, x: float) -> SLTransfer:
    """B_x(lam^2) from 0 to x."""
    Y, _ = _propagate(q, lam, 0.0, float(x), np.eye(2))
    return SLTransfer(Y, float(x), complex(lam))


def free_B(lam, x):
    lam = complex(lam)
    c, s = np.cos(lam * x), np.sin(lam * x)
    return np.array([[c, s / lam], [-lam * s, c]])


class BChain:
    """Dense B_x on [0, X] for one lam (continuous extension of the ODE solution)."""

    def __init__(self, q: Potential, lam, X: float):
        self.q, self.lam, self.X = q, complex(lam), float(X)
        _, self._sols = _propagate(q, lam, 0.0, self.X, np.eye(2), dense=True)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, float))
        out = np.empty((len(x), 2, 2), dtype=complex)
        for i, xi in enumerate(x):
            for sol in self._sols:
                lo, hi = sorted(sol.t[[0, -1]])
                if lo - 1e-14 <= xi <= hi + 1e-14:
                    out[i] = sol.sol(xi).reshape(2, 2)
                    break
            else:
                raise ValueError("x outside the integrated range")
        return out


def wronskian_derivative_residual(q: Potential, lam, X: float = 3.0, n: int = 40,
                                  h: float = 1e-3) -> float:
    """Relative residual of d/dx (B^* J B) + (lam^2 - conj lam^2) B^* E11 B = 0,
    with the derivative taken by a fourth-order difference of the integrated
    chain."""
    lam = complex(lam)
    ch = BChain(q, lam, X + 3 * h)
    xs = np.linspace(3 * h, X, n)
    # avoid stencils straddling a potential breakpoint
    bps = np.array(_breaks(q, 0.0, X + 3 * h))
    xs = np.array([x for x in xs if np.min(np.abs(bps - x)) > 2.5 * h])
    F = lambda x: np.conj(np.transpose(ch(x), (0, 2, 1))) @ J[None] @ ch(x)
    dF = (-F(xs + 2 * h) + 8 * F(xs + h) - 8 * F(xs - h) + F(xs - 2 * h)) / (12 * h)
    B = ch(xs)
    Bh = np.conj(np.transpose(B, (0, 2, 1)))
    R = dF + (lam**2 - np.conj(lam**2)) * (Bh @ E11[None] @ B)
    scale = np.maximum(np.abs(dF).max(axis=(1, 2)), np.abs(lam**2 - np.conj(lam**2)) *
                       np.abs(Bh @ E11[None] @ B).max(axis=(1, 2)))
    return float(np.max(np.abs(R).max(axis=(1, 2)) / np.maximum(scale, 1e-300)))


def weyl_m_plus(q: Potential, lam) -> complex:
    """m_+(lam) = e(0)/e'(0), e = exp(i lam x) beyond the support, integrated back to 0."""
    lam = complex(lam)
    if abs((lam**2).imag) < 1e-14:
        raise ConditionViolation("lam^2 on the real axis: boundary of the resolvent set")
    if lam.imag < 0:
        lam = -lam  # the L^2 solution depends on lam^2 only; take Im lam > 0
    X = q.support
    y = np.array([np.exp(1j * lam * X), 1j * lam * np.exp(1j * lam * X)])
    if X > 0:
        # rescale to avoid overflow; m_+ is a ratio
        y = y / y[0]
        Y, _ = _propagate(q, lam, X, 0.0, y.reshape(2, 1))
        y = Y[:, 0]
    return complex(y[0] / y[1])


def _forms(B, m):
    """Q(m1, m2) = [conj m1, 1] B^* J B [m2; 1]."""
    def Qf(m1, m2):
        u1 = B @ np.array([m1, 1.0])
        u2 = B @ np.array([m2, 1.0])
        return complex(np.conj(u1) @ J @ u2)
    return Qf


@dataclass
class WeylData:
    m_plus: complex
    rho0: float
    rho: float
    tau: float
    a: complex
    branch: str = "principal"


def _quantities(q: Potential, lam0, x0: float, m=None):
    lam0 = complex(lam0)
    m = weyl_m_plus(q, lam0) if m is None else m
    B = integrate_B(q, lam0, x0).B
    Qf = _forms(B, m)
    Q = Qf(m, m)
    l2 = lam0**2
    tau_m2 = -(m - np.conj(m)) / Q
    a = -Qf(m, np.conj(m)) / Q
    rho2 = (l2 - np.conj(l2)) / Q
    rho02 = -(l2 - np.conj(l2)) / (m - np.conj(m))
    return {"m": m, "B": B, "Q": Q, "tau_m2": tau_m2, "a": a, "rho2": rho2, "rho02": rho02}


def node_quantities(q: Potential, lam0, x0: float, h: float = 1e-3) -> dict:
    """Weyl data, the assembled normalized transfer matrix at lam0^2 and the
    residuals of its triangular form and of the identity relating da/d(tau^-2)
    to conj(c m + s)/(c m + s)."""
    lam0 = complex(lam0)
    if not (lam0.real > 0 and lam0.imag > 0):
        raise ValueError("lam0 must lie in the open first quadrant")
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    m = weyl_m_plus(q, lam0)
    r = _quantities(q, lam0, x0, m)
    if abs(r["Q"]) < 1e-300 or abs(r["tau_m2"]) == 0:
        raise ConditionViolation("vanishing denominator bracket")
    rho2, rho02 = r["rho2"], r["rho02"]
    if abs(rho2.imag) > 1e-8 * abs(rho2) or abs(rho02.imag) > 1e-8 * abs(rho02):
        raise ConditionViolation("normalization constants are not real")
    rho, rho0 = np.sqrt(rho2.real + 0j), np.sqrt(rho02.real + 0j)
    tau = float(np.real(1 / np.sqrt(r["tau_m2"])))
    wd = WeylData(m, float(rho0.real), float(rho.real), tau, r["a"])

    # normalized solutions at -conj lam0 are the conjugates (q real)
    B0 = r["B"]
    ep = B0 @ np.array([m, 1.0]) * rho  # (e, e') of e_{x0}^+(., lam0) at x0
    E_x0 = np.array([[ep[0], -np.conj(ep[0])], [ep[1], -np.conj(ep[1])]])
    e0 = np.array([m, 1.0]) * rho0
    E_0 = np.array([[e0[0], -np.conj(e0[0])], [e0[1], -np.conj(e0[1])]])
    At = np.linalg.solve(E_x0, B0 @ E_0)
    tri = np.array([[tau, r["a"] * tau], [0, 1 / tau]])
    triangle = float(np.max(np.abs(At - tri)) / np.max(np.abs(tri)))

    # (m)-identity by centred differences in x0, one Richardson step
    def d(step):
        rp, rm = _quantities(q, lam0, x0 + step, m), _quantities(q, lam0, x0 - step, m)
        return (rp["a"] - rm["a"]) / (rp["tau_m2"] - rm["tau_m2"])
    lhs = (4 * d(h / 2) - d(h)) / 3
    cs = B0[0, 0] * m + B0[0, 1]
    rhs = np.conj(cs) / cs
    Delta = np.linalg.det(E_x0)
    return {"weyl": wd, "transfer": At, "normalization": (complex(At[1, 0]), complex(At[0, 0])),
            "triangular_residual": triangle, "m9_lhs": complex(lhs), "m9_rhs": complex(rhs),
            "m9_residual": float(abs(lhs - rhs) / abs(rhs)), "delta": complex(Delta),
            "cm_plus_s": complex(cs), "rho2": complex(rho2)}


def free_m9_rhs(lam0, x0):
    lam0 = complex(lam0)
    return -(lam0 / np.conj(lam0)) * np.exp(-2j * lam0.real * x0)

r"""Two-dimensional node, transfer matrices and the canonical system.

The x-dependent vectors are the normalized H^2 kernels of the translated data

.. math::

    e_2^{(1)} = k(\cdot,\lambda_0;x)/\|k(\cdot,\lambda_0;x)\|,\qquad
    e_2^{(2)} = k(\cdot,-\bar\lambda_0;x)/\|k(\cdot,-\bar\lambda_0;x)\|,

and the x-independent ones e_1^{(1)}, e_1^{(2)} are the vectors of
:class:`~scatterkern.unitary_node.NodeBasis`. The transfer matrix is

.. math::

    \mathfrak A_x(\lambda^2) = \frac{-is(\lambda)}{v'(\lambda)}
    \mathcal E(\lambda)\,R(\lambda),

with :math:`\mathcal E` built from the e_2 vectors and R from the e_1 vectors.
Evaluation is supported on the closed upper half-plane.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .fm_spaces import kernel_compute
from .halfplane_core import ConditionViolation
from .profiles import GridProfile, get_profile
from .scattering_data import DerivedData, ScatteringData
from .unitary_node import NodeBasis, v_map, v_prime

J_SIGN = np.diag([1.0, -1.0]).astype(complex)
NORMALIZATION_POINT = np.exp(1j * np.pi / 4)  # lam0^2 = i

_REAL_TOL = 1e-12


def _split(z):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.imag < -_REAL_TOL):
        raise ValueError("evaluation is supported on the closed upper half-plane only")
    return z, np.abs(z.imag) <= _REAL_TOL


class _Vector:
    """Normalized kernel with its minus image, evaluated on the closed
    upper half-plane."""

    def __init__(self, k, norm, lam0):
        self.k = k
        self.norm = norm
        self.lam0 = complex(lam0)
        self.v = v_map(lam0)

    def __call__(self, z):
        return self.k(z) / self.norm

    def minus(self, z):
        z, real = _split(z)
        out = np.empty(len(z), dtype=complex)
        if np.any(real):
            out[real] = self.k.minus_boundary(z[real].real)
        if np.any(~real):
            out[~real] = self.k.minus(z[~real])
        return out / self.norm

    def v_minus(self, z):
        """v times the minus image, regular at -conj(mu)."""
        z, real = _split(z)
        out = np.empty(len(z), dtype=complex)
        if np.any(real):
            out[real] = self.v(z[real]) * self.k.minus_boundary(z[real].real)
        if np.any(~real):
            zz = z[~real]
            if abs(-np.conj(self.k.mu) - self.lam0) > 1e-14:
                raise ValueError("v_minus is regular only for the kernel at -conj(lam0)")
            # v / b_{lam0}
            vb = (zz + self.lam0) / (zz + np.conj(self.lam0))
            out[~real] = vb * self.k.minus_regular(zz)
        return out / self.norm


class NodeBasis2D:
    """Four vectors of the two-dimensional node at translation x.

    Parameters
    ----------
    data : ScatteringData
        Untranslated data.
    lam0 : complex
        First-quadrant point, not a mass point.
    x : float
    base : NodeBasis, optional
        Reused x-independent part.
    """

    def __init__(self, data: ScatteringData, lam0, x: float, N: int | None = None,
                 profile: GridProfile | None = None, base: NodeBasis | None = None,
                 flavor: str = "h2"):
        self.profile = profile or get_profile()
        self.data = data
        self.lam0 = complex(lam0)
        self.x = float(x)
        self.base = base or NodeBasis(data, lam0, N, self.profile)
        self.derived = self.base.derived
        d = data.translate(self.x)
        aug = flavor == "h2"
        kP = kernel_compute(flavor, d, self.lam0, N, "gram", None, self.profile, augment=aug)
        kM = kernel_compute(flavor, d, -np.conj(self.lam0), N, "gram", None, self.profile, augment=aug)
        self.e21 = _Vector(kP, np.sqrt(kP.diag), self.lam0)
        self.e22 = _Vector(kM, np.sqrt(kM.diag), self.lam0)
        self.v = v_map(self.lam0)
        self.vp = v_prime(self.lam0)

    # x-independent vectors
    def e11(self, z):
        z, real = _split(z)
        out = np.empty(len(z), dtype=complex)
        out[real] = self.base.e1_boundary(z[real].real)
        out[~real] = self.base.e1(z[~real])
        return out

    def ve12(self, z):
        z, real = _split(z)
        out = np.empty(len(z), dtype=complex)
        out[real] = self.v(z[real]) * self.base.e2_boundary(z[real].real)
        out[~real] = self.base.ve2(z[~real])
        return out

    def e11_minus(self, z):
        return self.base.e1_minus(z)

    def ve12_minus(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.v(z) * self.base.e2_minus(z)

    def unit_norms(self):
        """FM norms of e_2^{(1)}, e_2^{(2)} (exactly one by construction)."""
        return (float(np.sqrt(self.e21.k.diag) / self.e21.norm),
                float(np.sqrt(self.e22.k.diag) / self.e22.norm))

    def symmetry_residual(self, t) -> float:
        """max |conj e_2^{(2)}(-t) - e_2^{(1)}(t)| on real nodes."""
        t = np.asarray(t, float)
        return float(np.max(np.abs(np.conj(self.e22(-t)) - self.e21(t))))


def build_node_basis_2d(data: ScatteringData, lam0, x: float, N: int | None = None,
                        profile: GridProfile | None = None, base: NodeBasis | None = None
                        ) -> NodeBasis2D:
    return NodeBasis2D(data, lam0, x, N, profile, base)


def e_matrix(node: NodeBasis2D, lam):
    """E(lam) = [[-e_2^{(1)}, (e_2^{(1)})^-], [-v e_2^{(2)}, v (e_2^{(2)})^-]], shape (n, 2, 2)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    v = node.v(lam)
    E = np.empty((len(lam), 2, 2), dtype=complex)
    E[:, 0, 0] = -node.e21(lam)
    E[:, 0, 1] = node.e21.minus(lam)
    E[:, 1, 0] = -v * node.e22(lam)
    E[:, 1, 1] = node.e22.v_minus(lam)
    return E


def right_factor(node: NodeBasis2D, lam):
    """[[(e_1^{(1)})^-, -v (e_1^{(2)})^-], [e_1^{(1)}, -v e_1^{(2)}]], shape (n, 2, 2)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    R = np.empty((len(lam), 2, 2), dtype=complex)
    R[:, 0, 0] = node.e11_minus(lam)
    R[:, 0, 1] = -node.ve12_minus(lam)
    R[:, 1, 0] = node.e11(lam)
    R[:, 1, 1] = -node.ve12(lam)
    return R


@dataclass
class TransferMatrix:
    """Values of the transfer matrix at sample points lam (entries (n, 2, 2))."""

    lam: np.ndarray
    entries: np.ndarray
    x: float
    lam0: complex
    normalization: dict = field(default_factory=dict)

    @property
    def lam2(self):
        return self.lam**2

    def j_defect_eigs(self):
        """Eigenvalues of j - A j A^* per point, shape (n, 2)."""
        A = self.entries
        D = J_SIGN[None] - A @ J_SIGN[None] @ np.conj(np.transpose(A, (0, 2, 1)))
        D = 0.5 * (D + np.conj(np.transpose(D, (0, 2, 1))))
        return np.linalg.eigvalsh(D)

    def det(self):
        return np.linalg.det(self.entries)


def transfer_matrix(data: ScatteringData, lam0, x: float, lam, N: int | None = None,
                    profile: GridProfile | None = None, node: NodeBasis2D | None = None
                    ) -> TransferMatrix:
    """Product formula for the transfer matrix at the points ``lam``.

    Raises
    ------
    ConditionViolation
        At points where v'(lam) = 0 (lam = 0).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    node = node or NodeBasis2D(data, lam0, x, N, profile)
    vp = node.vp(lam)
    if np.any(np.abs(vp) < 1e-14):
        raise ConditionViolation("v'(lam) vanishes at a requested point")
    s = node.derived.s(lam)
    A = (-1j * s / vp)[:, None, None] * (e_matrix(node, lam) @ right_factor(node, lam))
    E0 = e_matrix(node, np.array([node.lam0]))[0]
    norm = {"E21_at_lam0": complex(E0[1, 0]), "E11_at_lam0": complex(E0[0, 0]),
            "normalized": bool(abs(E0[1, 0]) < 1e-8 and abs(E0[0, 0].imag) < 1e-8
                               and E0[0, 0].real < 0)}
    return TransferMatrix(lam, A, float(x), complex(lam0), norm)


def lam2_symmetry_residual(data: ScatteringData, lam0, x: float, lam_real, N: int | None = None,
                           profile: GridProfile | None = None, node=None) -> float:
    """max |A(lam) - A(-lam)| over real sample points (function of lam^2)."""
    lam_real = np.asarray(lam_real, float)
    node = node or NodeBasis2D(data, lam0, x, N, profile)
    A = transfer_matrix(data, lam0, x, lam_real, node=node).entries
    B = transfer_matrix(data, lam0, x, -lam_real, node=node).entries
    return float(np.max(np.abs(A - B)) / max(1.0, np.max(np.abs(A))))


def j_contractivity_points(n: int = 50, seed: int = 0, lam0=NORMALIZATION_POINT):
    """Sample points with |v(lam)| < 1: lam^2 on a random upper half-plane set."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(-3, 3, n) + 1j * rng.uniform(0.05, 3, n)
    lam = np.sqrt(w)
    lam = np.where(lam.imag < 0, -lam, lam)
    assert np.all(np.abs(v_map(lam0)(lam)) < 1)
    return lam


# ----------------------------------------------------------------------------------------
# beta / alpha


def _x_derivative(fn, x: float, h: float = 1e-3):
    """Central difference with one Richardson step."""
    d1 = (fn(x + h) - fn(x - h)) / (2 * h)
    d2 = (fn(x + h / 2) - fn(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def hat_trace(data: ScatteringData, lam0, x: float, N: int | None = None,
              profile: GridProfile | None = None):
    """(khat(lam0, -conj lam0; x), khat(-conj lam0, -conj lam0; x)), original frame."""
    lam0 = complex(lam0)
    d = data.translate(x)
    k = kernel_compute("h2hat", d, -np.conj(lam0), N, "gram", None, profile)
    return complex(k(lam0)[0]), complex(k.diag)


def beta_over_alpha(data: ScatteringData, lam0=NORMALIZATION_POINT, x: float = 0.0,
                    N: int | None = None, profile: GridProfile | None = None,
                    method: str = "traces", h: float = 1e-3, base: NodeBasis | None = None) -> complex:
    """Coefficient ratio beta/alpha of the canonical system at x.

    ``method='traces'`` differentiates the hat-kernel traces khat(lam0, -conj
    lam0; x) and khat(-conj lam0, -conj lam0; x) in x and multiplies by
    -s(lam0)/s(-conj lam0). ``method='node'`` differentiates the matrix E of
    the node and reads the ratio from j E' E^{-1} at lam0, which is upper
    triangular with equal diagonal.
    """
    profile = profile or get_profile()
    lam0 = complex(lam0)
    if method == "traces":
        dv = DerivedData(data, profile.fft_size)
        s = dv.s(np.array([lam0, -np.conj(lam0)]))
        cache = {}

        def tr(y):
            if y not in cache:
                cache[y] = np.array(hat_trace(data, lam0, y, N, profile))
            return cache[y]

        for step in (h, h / 4):
            num, den = _x_derivative(tr, x, step)
            if abs(den) >= 1e-14:
                return complex(-(s[0] / s[1]) * num / den)
        raise ConditionViolation("trace derivative vanishes")
    if method == "node":
        base = base or NodeBasis(data, lam0, N, profile)
        p = np.array([lam0])
        Ef = lambda y: e_matrix(NodeBasis2D(data, lam0, y, N, profile, base), p)[0]
        M = J_SIGN @ _x_derivative(Ef, x, h) @ np.linalg.inv(Ef(x))
        if abs(M[0, 0]) < 1e-14:
            raise ConditionViolation("alpha vanishes")
        return complex(M[0, 1] / (2 * M[0, 0]))
    raise ValueError("method must be 'traces' or 'node'")


def e_parameters(node: NodeBasis2D):
    """tau, a and C with E(lam0) = [[tau, a tau], [0, 1/tau]] diag(-1, C)."""
    E = e_matrix(node, np.array([node.lam0]))[0]
    tau = float(-E[0, 0].real)
    a = complex(E[0, 1] / E[1, 1] * (1 / tau) / tau) if abs(E[1, 1]) > 0 else np.nan
    C = complex(E[1, 1] * tau)
    return {"tau": tau, "a": a, "C": C, "E": E, "lower_left": complex(E[1, 0])}


# ----------------------------------------------------------------------------------------
# canonical system ODE


@dataclass
class CanonicalCoefficients:
    """alpha(t) > 0 and beta(t) with |beta| = alpha on a t-grid."""

    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    x: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, float)
        self.alpha = np.asarray(self.alpha, float)
        self.beta = np.asarray(self.beta, complex)
        if len(self.t) < 1 or np.any(np.diff(self.t) <= 0):
            raise ValueError("t-grid must be increasing")
        if np.any(self.alpha <= 0):
            raise ValueError("alpha must be positive")

    def modulus_residual(self) -> float:
        return float(np.max(np.abs(np.abs(self.beta) - self.alpha) / self.alpha))

    def at(self, t):
        """Cubic interpolation (linear on two-point grids)."""
        if len(self.t) < 4:
            a = np.interp(t, self.t, self.alpha)
            b = np.interp(t, self.t, self.beta.real) + 1j * np.interp(t, self.t, self.beta.imag)
            return a, b
        from scipy.interpolate import CubicSpline
        if not hasattr(self, "_spl"):
            self._spl = (CubicSpline(self.t, self.alpha), CubicSpline(self.t, self.beta.real),
                         CubicSpline(self.t, self.beta.imag))
        sa, sr, si = self._spl
        return float(sa(t)), complex(sr(t) + 1j * si(t))

    @classmethod
    def constant(cls, alpha: float, beta: complex, t1: float, n: int = 2):
        t = np.linspace(0.0, t1, n)
        return cls(t, np.full(n, alpha), np.full(n, beta, complex))


def generator(alpha: float, beta: complex, lam2: complex):
    """j times the bracket: A' = j {i lam^2 H + K} A."""
    H = np.array([[alpha, beta], [np.conj(beta), alpha]], dtype=complex)
    K = np.array([[0, -beta], [np.conj(beta), 0]], dtype=complex)
    return J_SIGN @ (1j * lam2 * H + K)


@dataclass
class CanonicalChain:
    t: np.ndarray
    A: np.ndarray
    lam2: complex
    rejections: int = 0

    def j_form(self):
        """A^* j A along the chain."""
        Ah = np.conj(np.transpose(self.A, (0, 2, 1)))
        return Ah @ J_SIGN[None] @ self.A

    def monotonicity_margin(self) -> float:
        """min over consecutive steps of the smallest eigenvalue of
        A_1^* j A_1 - A_2^* j A_2 (nonnegative for Im lam^2 >= 0)."""
        F = self.j_form()
        D = F[:-1] - F[1:]
        D = 0.5 * (D + np.conj(np.transpose(D, (0, 2, 1))))
        return float(np.min(np.linalg.eigvalsh(D))) if len(D) else 0.0

    def unitarity_residual(self) -> float:
        """max ||A^* j A - j|| and ||A j A^* - j|| (zero for real lam^2)."""
        F = self.j_form()
        Ah = np.conj(np.transpose(self.A, (0, 2, 1)))
        G = self.A @ J_SIGN[None] @ Ah
        return float(max(np.max(np.abs(F - J_SIGN)), np.max(np.abs(G - J_SIGN))))


def integrate_canonical(coeffs: CanonicalCoefficients, lam2: complex, substeps: int = 32,
                        tol: float = 1e-8, max_halvings: int = 6) -> CanonicalChain:
    """Classical RK4 for A' = j {i lam^2 [[a, b], [conj b, a]] + [[0, -b], [conj b, 0]]} A,
    A(t_0) = I, with ``substeps`` steps per grid interval.

    For Im lam^2 >= 0 a step is rejected and subdivided when A^* j A fails
    to be nonincreasing beyond ``tol``.
    """
    lam2 = complex(lam2)
    t = coeffs.t
    A = np.eye(2, dtype=complex)
    out = [A.copy()]
    rej = 0

    def rk4(A, t0, h):
        f = lambda tt, Y: generator(*coeffs.at(tt), lam2) @ Y
        k1 = f(t0, A)
        k2 = f(t0 + h / 2, A + h / 2 * k1)
        k3 = f(t0 + h / 2, A + h / 2 * k2)
        k4 = f(t0 + h, A + h * k3)
        return A + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    def jform(A):
        return A.conj().T @ J_SIGN @ A

    for i in range(len(t) - 1):
        n = substeps
        for attempt in range(max_halvings + 1):
            h = (t[i + 1] - t[i]) / n
            B, ok = A.copy(), True
            for m in range(n):
                Bn = rk4(B, t[i] + m * h, h)
                if lam2.imag >= 0:
                    D = jform(B) - jform(Bn)
                    if np.min(np.linalg.eigvalsh(0.5 * (D + D.conj().T))) < -tol * max(1, np.abs(Bn).max() ** 2):
                        ok = False
                        break
                B = Bn
            if ok:
                break
            rej += 1
            n *= 2
        else:
            raise ConditionViolation("j-monotonicity violated beyond tolerance")
        A = B
        out.append(A.copy())
    return CanonicalChain(t.copy(), np.array(out), lam2, rej)


def constant_chain_oracle(alpha: float, beta: complex, lam2: complex, t: float):
    """Exact exp(t j {i lam^2 H + K}) for constant coefficients."""
    return expm(t * generator(alpha, beta, lam2))


# ----------------------------------------------------------------------------------------
# divisors


def _row_matrix(vec21, vec22, v, lam):
    """Rows [v e_2^{(2)}, e_2^{(1)}] at lam and -lam for real lam."""
    lam = np.asarray(lam, float)
    E = np.empty((len(lam), 2, 2), dtype=complex)
    for r, z in enumerate((lam, -lam)):
        E[:, r, 0] = v(z) * vec22(z)
        E[:, r, 1] = vec21(z)
    return E


def divisor_matrix(data: ScatteringData, lam0, x0: float, x1: float, lam_real,
                   N: int | None = None, profile: GridProfile | None = None,
                   flavors=("h2", "h2")):
    """B(x0, x1; lam^2) = E(x0)^{-1} E(x1) from the rows [v e_2^{(2)}, e_2^{(1)}]
    at lam and -lam, lam real and nonzero. ``flavors`` selects the kernel
    flavor at each end (('h2hat', 'h2') at x0 = x1 = 0 gives the left limit
    at 0)."""
    profile = profile or get_profile()
    lam0 = complex(lam0)
    v = v_map(lam0)
    mats = []
    for x, fl in ((x0, flavors[0]), (x1, flavors[1])):
        d = data.translate(x)
        aug = fl == "h2"
        kP = kernel_compute(fl, d, lam0, N, "gram", None, profile, augment=aug)
        kM = kernel_compute(fl, d, -np.conj(lam0), N, "gram", None, profile, augment=aug)
        nP, nM = np.sqrt(kP.diag), np.sqrt(kM.diag)
        mats.append(_row_matrix(lambda z: kP(z) / nP, lambda z: kM(z) / nM, v, lam_real))
    E0, E1 = mats
    cond = np.linalg.cond(E0)
    if np.any(cond > 1e12):
        raise ConditionViolation("kernel row matrix is singular at a sample point")
    return np.linalg.solve(E0, E1)


def lam2_polynomial_fit(lam_real, values, targets, tol: float = 1e-10, max_degree: int = 10):
    """Fit entries sampled at real lam as polynomials in lam^2 (increasing
    degree until the max residual is below ``tol``) and evaluate at the
    ``targets`` (values of lam^2).

    Returns
    -------
    out : ndarray (len(targets), ...)
    info : dict with degree and residual
    """
    w = np.asarray(lam_real, float) ** 2
    vals = np.asarray(values, complex)
    flat = vals.reshape(len(w), -1)
    c0, sc = 0.5 * (w.min() + w.max()), 0.5 * (w.max() - w.min())
    u = (w - c0) / sc
    ut = (np.asarray(targets, complex) - c0) / sc
    best = None
    for deg in range(0, min(max_degree, len(w) - 2) + 1):
        V = np.vander(u, deg + 1, increasing=True).astype(complex)
        coef, *_ = np.linalg.lstsq(V, flat, rcond=None)
        res = float(np.max(np.abs(V @ coef - flat)) / max(1.0, np.max(np.abs(flat))))
        best = (deg, coef, res)
        if res < tol:
            break
    deg, coef, res = best
    Vt = np.vander(ut, deg + 1, increasing=True)
    out = (Vt @ coef).reshape((len(ut),) + vals.shape[1:])
    return out, {"degree": deg, "residual": res}


def left_limit_divisor(data: ScatteringData, lam0, lam2_targets, N: int | None = None,
                       profile: GridProfile | None = None, n_nodes: int = 25,
                       window=(0.1, 4.0)):
    """lim_{x -> -0} B(x, 0; lam^2) at the given lam^2 values, using
    H^2(-0) = hat H^2(0): rows of hat kernels at 0 against rows of H^2
    kernels at 0, sampled on real lam and continued in lam^2 by a polynomial
    fit."""
    lam = np.sqrt(np.linspace(window[0], window[1], n_nodes))
    B = divisor_matrix(data, lam0, 0.0, 0.0, lam, N, profile, flavors=("h2hat", "h2"))
    return lam2_polynomial_fit(lam, B, lam2_targets)


def appendix1_divisor_closed_form(lam0, lam2):
    lam0 = complex(lam0)
    a, b = lam0.real, lam0.imag
    lam2 = np.atleast_1d(np.asarray(lam2, complex))
    out = np.empty((len(lam2), 2, 2), dtype=complex)
    for i, L in enumerate(lam2):
        M = np.array([[-L + np.conj(lam0) ** 2, -L + np.conj(lam0) ** 2],
                      [L - lam0**2, L - lam0**2]])
        out[i] = (np.eye(2) + 1j / a * M) / np.sqrt(1 + 4 * b)
    return out


def chain_residual(data: ScatteringData, lam0, x1: float, x2: float, lam_real,
                   N: int | None = None, profile: GridProfile | None = None) -> float:
    """Relative residual of A_{x2} = P B(x1, x2)^{-1} P A_{x1}, P = diag(1, -1).

    The product formula expresses A_x through the inverse of the x-dependent
    factor, so the divisor acts on the left in this form.
    """
    profile = profile or get_profile()
    lam_real = np.asarray(lam_real, float)
    base = NodeBasis(data, lam0, N, profile)
    A1 = transfer_matrix(data, lam0, x1, lam_real, node=NodeBasis2D(data, lam0, x1, N, profile, base)).entries
    A2 = transfer_matrix(data, lam0, x2, lam_real, node=NodeBasis2D(data, lam0, x2, N, profile, base)).entries
    B = divisor_matrix(data, lam0, x1, x2, lam_real, N, profile)
    pred = J_SIGN[None] @ np.linalg.inv(B) @ J_SIGN[None] @ A1
    return float(np.max(np.abs(pred - A2)) / np.max(np.abs(A2)))

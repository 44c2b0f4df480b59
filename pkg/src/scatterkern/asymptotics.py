"""Numerical harness for the large-|x| behaviour of translated kernels.

Each run evaluates one quantity along an x-schedule and stores a record per
x. Runs never assert rates; they report the final value, monotonicity up to
solver noise and a fitted decaying envelope.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fm_spaces import (ChannelFamily, fm_inner, gram_assemble, kernel_compute, l2_norm,
                        rational_family, scaled_family, standard_kernel_family, sum_families)
from .halfplane_core import ConditionViolation
from .profiles import GridProfile, get_profile
from .scattering_data import DerivedData, ScatteringData

COND_CAP = 1e10


def forward_schedule(n: int = 24, lo: float = 0.1, hi: float = 20.0):
    return np.geomspace(lo, hi, n)


def backward_schedule(n: int = 24, lo: float = 0.1, hi: float = 20.0):
    return -forward_schedule(n, lo, hi)[::-1]


@dataclass
class AsymptoticsRun:
    """Per-x records of one asymptotic quantity."""

    label: str
    lam0: complex
    quantity: str
    flavor: str = "h2"
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def x(self):
        return np.array([r["x"] for r in self.records])

    @property
    def values(self):
        return np.array([r["value"] for r in self.records])

    @property
    def final(self) -> float:
        """Value at the largest |x| of the schedule (the limit direction)."""
        if not self.records:
            return float("nan")
        return float(self.values[int(np.argmax(np.abs(self.x)))])

    def nonincreasing(self, after: float | None = None, noise: float = 1e-8) -> bool:
        """Values nonincreasing in |x| up to noise (either schedule direction)."""
        order = np.argsort(np.abs(self.x), kind="stable")
        v, xs = self.values[order], self.x[order]
        if after is not None:
            v = v[np.abs(xs) >= after]
        return bool(np.all(np.diff(v) <= noise))

    def envelope(self):
        """Least-squares fit log v ~ c0 - c1 |x| over positive values; returns (c0, c1)."""
        v, xs = self.values, np.abs(self.x)
        ok = v > 1e-300
        if ok.sum() < 2:
            return (float("nan"), float("nan"))
        c1, c0 = np.polyfit(xs[ok], np.log(v[ok]), 1)
        return (float(c0), float(-c1))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "quantity", "residual", "epsilon_used", "gram_cond"])
        for r in self.records:
            w.writerow([repr(float(r["x"])), self.quantity, repr(float(r["value"])),
                        repr(float(r.get("epsilon", 0.0))), repr(float(r.get("gram_cond", 1.0)))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"label": self.label, "lambda0": [self.lam0.real, self.lam0.imag],
                "quantity": self.quantity, "flavor": self.flavor,
                "records": [{k: (float(v) if np.isscalar(v) else v) for k, v in r.items()} for r in self.records],
                "failures": self.failures}


def _run(data, lam0, schedule, quantity, flavor, fn, workers: int = 1) -> AsymptoticsRun:
    schedule = np.asarray(schedule, float)
    run = AsymptoticsRun(data.label, complex(lam0), quantity, flavor)

    def one(x):
        try:
            return fn(float(x))
        except (ConditionViolation, np.linalg.LinAlgError, ValueError) as exc:
            return {"x": float(x), "error": str(exc)}

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(one, schedule))
    else:
        out = [one(x) for x in schedule]
    for r in out:
        if "error" in r:
            run.failures.append(r)
            continue
        # overcomplete generating sets (dropped directions) are not capped
        if r.get("gram_cond", 1.0) > COND_CAP and not r.get("dropped", 0):
            run.failures.append({"x": r["x"], "error": "gram conditioning cap reached"})
            break
        run.records.append(r)
    return run


def _kernel(data, x, lam0, flavor, N, profile, augment=True):
    d = data.translate(x)
    return kernel_compute(flavor, d, lam0, N, "gram", None, profile, augment=augment)


def run_theorem2(data: ScatteringData, lam0, schedule=None, flavor: str = "h2",
                 N: int | None = None, profile: GridProfile | None = None,
                 workers: int = 1) -> AsymptoticsRun:
    """FM distance D(x) between the translated kernel and the truncated
    standard kernel (standard on the line, zero at the masses)."""
    profile = profile or get_profile()
    schedule = forward_schedule() if schedule is None else schedule
    lam0 = complex(lam0)

    def fn(x):
        k = _kernel(data, x, lam0, flavor, N, profile)
        d = k.data
        kt = standard_kernel_family(d, lam0, with_masses=False, scale=-1.0)
        diff = sum_families(k.family, kt)
        D2 = fm_inner(diff, diff, d, profile)[0, 0].real
        nu = d.masses()
        mass = float(np.sqrt(np.sum(nu * np.abs(k.family.mass[:, 0]) ** 2))) if len(nu) else 0.0
        return {"x": x, "value": float(np.sqrt(max(D2, 0.0))), "mass_channel": mass,
                "diag": float(np.real(k.modulated(lam0)[0])),
                "epsilon": k.info.get("epsilon", 0.0), "gram_cond": k.info["gram_cond"],
                "dropped": k.info.get("dropped", 0)}

    return _run(data, lam0, schedule, "fm_distance", flavor, fn, workers)


def run_mass_channel(data: ScatteringData, lam0, schedule=None, flavor: str = "h2",
                     N: int | None = None, profile: GridProfile | None = None,
                     workers: int = 1) -> AsymptoticsRun:
    """L2_nu norm of the translated kernel on the mass points, in the
    modulated frame, as x increases (zero for data without masses)."""
    profile = profile or get_profile()
    schedule = forward_schedule() if schedule is None else schedule
    lam0 = complex(lam0)

    def fn(x):
        k = _kernel(data, x, lam0, flavor, N, profile)
        nu = k.data.masses()
        val = float(np.sqrt(np.sum(nu * np.abs(k.family.mass[:, 0]) ** 2))) if len(nu) else 0.0
        return {"x": x, "value": val,
                "epsilon": k.info.get("epsilon", 0.0), "gram_cond": k.info["gram_cond"],
                "dropped": k.info.get("dropped", 0)}

    return _run(data, lam0, schedule, "mass_channel", flavor, fn, workers)


def run_ratio_limits(data: ScatteringData, lam0, schedule=None, flavor: str = "h2",
                     N: int | None = None, profile: GridProfile | None = None,
                     workers: int = 1) -> AsymptoticsRun:
    """Trace of k_x(lam0, lam0)/k(lam0, lam0) in the modulated frame, with
    k the standard kernel; value stored is |ratio - 1|."""
    profile = profile or get_profile()
    schedule = forward_schedule() if schedule is None else schedule
    lam0 = complex(lam0)
    k0 = 1.0 / (2 * lam0.imag)

    def fn(x):
        k = _kernel(data, x, lam0, flavor, N, profile)
        ratio = float(np.real(k.modulated(lam0)[0])) / k0
        return {"x": x, "value": abs(ratio - 1.0), "ratio": ratio,
                "epsilon": k.info.get("epsilon", 0.0), "gram_cond": k.info["gram_cond"],
                "dropped": k.info.get("dropped", 0)}

    return _run(data, lam0, schedule, "kernel_ratio", flavor, fn, workers)


def run_mass_blowup(data: ScatteringData, lam_k, schedule=None, N: int | None = None,
                    profile: GridProfile | None = None, flavor: str = "h2",
                    workers: int = 1) -> AsymptoticsRun:
    """Trace of exp(-2 Im lam_k x) k_x(lam_k, lam_k) against 1/nu(lam_k) as
    x decreases; value stored is the relative gap."""
    profile = profile or get_profile()
    lam_k = complex(lam_k)
    idx = int(np.argmin(np.abs(data.lam - lam_k)))
    if not data.n_masses or abs(data.lam[idx] - lam_k) > 1e-12:
        raise ValueError("lam_k must be one of the mass points")
    target = 1.0 / data.nu[idx]
    schedule = -np.linspace(0.0, 6.0, 13) if schedule is None else schedule

    def fn(x):
        k = _kernel(data, x, lam_k, flavor, N, profile)
        val = k.diag  # the frame factor equals exp(-2 Im lam_k x)
        return {"x": x, "value": abs(val - target) / target, "scaled_diag": val,
                "epsilon": k.info.get("epsilon", 0.0), "gram_cond": k.info["gram_cond"],
                "dropped": k.info.get("dropped", 0)}

    return _run(data, lam_k, schedule, "mass_gap", flavor, fn, workers)


def run_scattering_identities(data: ScatteringData, lam0, schedule=None, direction: str = "forward",
                              flavor: str = "h2", N: int | None = None,
                              profile: GridProfile | None = None, workers: int = 1) -> AsymptoticsRun:
    """L2 residuals of the boundary relations for s times the translated
    kernel: against s k(., lam0) forward, and against
    k(., lam0) + s_minus exp(-2i lam x) k(., -lam0) (after the factor
    s(-conj lam0)) backward. For the reverse scattering direction pass the
    minus data with the opposite direction."""
    profile = profile or get_profile()
    lam0 = complex(lam0)
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if schedule is None:
        schedule = forward_schedule() if direction == "forward" else backward_schedule(12, 0.1, 6.0)
    base = DerivedData(data, profile.fft_size)

    def fn(x):
        k = _kernel(data, x, lam0, flavor, N, profile)
        d = k.data
        dv = k.derived
        s = dv.s
        if direction == "forward":
            std = standard_kernel_family(d, lam0, scale=-1.0)
            r = scaled_family(sum_families(k.family, std), s)
        else:
            s1 = base.s(np.array([-np.conj(lam0)]))[0]
            left = scaled_family(k.family, lambda t: s1 * s(t))
            std = standard_kernel_family(d, lam0, scale=-1.0)
            refl = standard_kernel_family(d, -lam0, scale=-1.0)
            refl = scaled_family(refl, dv.s_minus_amplitude, shift=-d.omega)
            r = sum_families(left, std, refl)
        return {"x": x, "value": l2_norm(r, profile),
                "epsilon": k.info.get("epsilon", 0.0), "gram_cond": k.info["gram_cond"],
                "dropped": k.info.get("dropped", 0)}

    return _run(data, lam0, schedule, f"identity_{direction}", flavor, fn, workers)


def projection_norms(data: ScatteringData, f, x_values, N: int | None = None,
                     profile: GridProfile | None = None, flavor: str = "h2"):
    """For a rational f (vectorized callable) return arrays of ||P_x f|| and
    ||P_x f - f||, P_x the orthogonal projector onto the translated space."""
    profile = profile or get_profile()
    out_p, out_r = [], []
    for x in np.asarray(x_values, float):
        d = data.translate(x)
        g = gram_assemble(d, N, flavor, "brute", None, profile, augment=True)
        lam = d.lam
        gen, G = g.family, g.G
        if x < 0:
            # exp(i|x| lam) e_n lie in the space as well; without this channel
            # the e_n expansion of the modulated f converges very slowly
            gen = gen.stack(rational_family(d, N or profile.basis_order, -float(x)))
            G = fm_inner(gen, gen, d, profile).T
        # e^{-i lam x} f as a family in the modulated space
        A = lambda t: np.asarray(f(t), complex).reshape(-1, 1)
        mass = (np.exp(-1j * x * lam) * f(lam)).reshape(-1, 1) if len(lam) else np.zeros((0, 1), complex)
        fam = ChannelFamily({-float(x): A}, mass, None, 1, 8, "user")
        b = fm_inner(gen, fam, d, profile)[:, 0]
        nf2 = fm_inner(fam, fam, d, profile)[0, 0].real
        # diagonal scaling first: mass weights grow like exp(2 Im lam_k |x|)
        sc = 1.0 / np.sqrt(np.maximum(np.real(np.diag(G)), 1e-300))
        Gh = sc[:, None] * (0.5 * (G + G.conj().T)) * sc[None, :]
        w, V = np.linalg.eigh(Gh)
        keep = w > 1e-13 * w[-1]
        y = V[:, keep].conj().T @ (sc * b)
        p2 = float(np.real(np.sum(np.abs(y) ** 2 / w[keep])))
        out_p.append(np.sqrt(max(p2, 0.0)))
        out_r.append(np.sqrt(max(nf2 - p2, 0.0)))
    return np.array(out_p), np.array(out_r)

"""Command-line front end.

Every subcommand prints a JSON report on stdout. With ``--out DIR`` the
report, a run manifest and any traces are also written to DIR. Exit codes:
0 when all requested checks pass, 1 on numerical failure or a failed check,
2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .halfplane_core import ConditionViolation, PoleError
from .profiles import get_profile

NUMERIC_ERRORS = (ConditionViolation, PoleError, np.linalg.LinAlgError, FloatingPointError)
_VALUE_FLAGS = ("--window", "--x-grid", "--schedule", "--mu", "--lambda0", "--points", "--x0")


class UsageError(Exception):
    pass


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    if isinstance(o, (np.floating, float)):
        return float(o) if np.isfinite(o) else str(float(o))
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if hasattr(o, "to_dict"):
        return _jsonable(o.to_dict())
    return o


def _complex(text: str) -> complex:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise UsageError(f"expected RE,IM, got {text!r}") from None
    if len(parts) != 2:
        raise UsageError(f"expected RE,IM, got {text!r}")
    return complex(parts[0], parts[1])


def _range(text: str, n_default: int | None = None):
    parts = text.split(":")
    try:
        if len(parts) == 2 and n_default is None:
            return float(parts[0]), float(parts[1])
        if len(parts) == 3:
            return np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise UsageError(f"malformed range {text!r}")


def _data(spec: str):
    from .scattering_data import REGISTRY, get_dataset, load_data
    if spec in REGISTRY:
        return get_dataset(spec)
    if not os.path.exists(spec):
        raise UsageError(f"no dataset or file named {spec!r}")
    try:
        return load_data(spec)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed data file: {exc}") from None


# ---------------------------------------------------------------------- subcommands


def cmd_validate(a, prof):
    from .scattering_data import validate
    d = _data(a.data)
    r = validate(d)
    return r.to_dict(), r.passed, {}, d.label


def cmd_derive(a, prof):
    from .scattering_data import DerivedData
    d = _data(a.data)
    dv = DerivedData(d, prof.fft_size)
    t = np.linspace(-a.tmax, a.tmax, a.n)
    uni = float(np.max(dv.unitarity_residual(t)))
    sym = float(np.max(dv.symmetry_residual(t)))
    rep = {"label": d.label, "unitarity": uni, "symmetry": sym,
           "nu_minus": dv.nu_minus(), "mass_duality": dv.mass_duality_residual() if d.n_masses else 0.0}
    sm = dv.s_minus(t)
    s = dv.s(t)
    rows = ["t,re_s_minus,im_s_minus,re_s,im_s"] + [
        f"{ti!r},{v.real!r},{v.imag!r},{w.real!r},{w.imag!r}" for ti, v, w in zip(t, sm, s)]
    ok = uni < 1e-8 and sym < 1e-8
    return rep, ok, {"derived.csv": "\n".join(rows) + "\n"}, d.label


def cmd_kernel(a, prof):
    from .fm_spaces import kernel_compute
    d = _data(a.data).translate(a.x)
    mu = _complex(a.mu)
    k = kernel_compute(a.flavor, d, mu, a.n_basis, a.method, None, prof, augment=a.flavor == "h2")
    pts = np.array([_complex(p) for p in a.points.split(";")]) if a.points else np.array([mu])
    vals = k(pts)
    rep = {"label": d.label, "flavor": a.flavor, "method": a.method, "mu": mu, "x": a.x,
           "diag": k.diag, "points": pts, "values": vals,
           "info": {k_: v for k_, v in k.info.items() if np.isscalar(v)}}
    return rep, bool(np.all(np.isfinite(vals))), {}, d.label


def cmd_asymptotics(a, prof):
    from . import asymptotics as asy
    d = _data(a.data)
    lam0 = _complex(a.lambda0)
    sched = _range(a.schedule, 0) if a.schedule else None
    th = a.theorem
    opts = (a.flavor, a.n_basis, prof, a.workers)

    def split(sign):
        # each quantity takes the part of the schedule on its side of 0
        if sched is None:
            return None
        part = sched[sign * sched > 0]
        return part if len(part) else None

    if th == "t2":
        runs = [asy.run_theorem2(d, lam0, split(1), *opts)]
    elif th == "ratio":
        runs = [asy.run_ratio_limits(d, lam0, split(1), *opts)]
    elif th == "t1ii":
        runs = [asy.run_mass_channel(d, lam0, split(1), *opts)]
    elif th == "c12":
        runs = [asy.run_mass_blowup(d, lam0, split(-1), a.n_basis, prof, a.flavor, a.workers)]
    else:
        # c11: the reverse family is the translated minus data at y = -x
        from .scattering_data import DerivedData
        src = d if th == "t1i" else DerivedData(d, prof.fft_size).minus_data()
        sign = 1 if th == "t1i" else -1
        f = split(sign)
        b = split(-sign)
        runs = [asy.run_scattering_identities(src, lam0, None if f is None else sign * f,
                                              "forward", *opts),
                asy.run_scattering_identities(src, lam0, None if b is None else sign * b,
                                              "backward", *opts)]
        for r in runs:
            for rec in r.records:
                rec["x"] = sign * rec["x"]
    ok = all(bool(r.records) and r.final < prof.tol_asym for r in runs)
    rep = {"theorem": th, "runs": [dict(r.to_dict(), final=r.final) for r in runs],
           "tolerance": prof.tol_asym}
    csv_text = runs[0].to_csv() + "".join(r.to_csv().split("\n", 1)[1] for r in runs[1:])
    return rep, ok, {"trace.csv": csv_text}, d.label


def cmd_node(a, prof):
    from . import unitary_node as un
    d = _data(a.data)
    lam0 = _complex(a.lambda0)
    nb = un.node_basis(d, lam0, a.n_basis, prof)
    rep = {"label": d.label, "lambda0": lam0, "check": a.check}
    if a.check == "wronskian":
        mu = np.concatenate([np.linspace(0.25, 3.0, 8), np.linspace(-2, 2, 8) + 0.5j])
        r = un.wronskian_check(nb, mu)
        rep.update({"mu": mu, "relative": r["relative"], "max_relative": r["max_relative"]})
        ok = r["max_relative"] < 1e-4
    elif a.check in ("theta", "theta-iso"):
        r = un.theta_isometry_residual(nb)
        td = un.theta_scattering_data(nb)
        rep.update({"isometry": r["max_relative"], "max_modulus_s_theta": td.max_modulus,
                    "y": td.y, "density": td.density})
        ok = r["max_relative"] < prof.tol_identity and td.max_modulus <= 1 + 1e-8
    else:
        from .fm_spaces import kernel_compute
        k = kernel_compute("h2", d, lam0, a.n_basis, "gram", None, prof)
        z = np.array([1 + 2j, 0.5 + 0.5j, -1 + 1j])
        kt = un.kernel_via_theta(nb, z, np.full(3, lam0))
        err = float(np.max(np.abs(kt - k(z))))
        rep.update({"points": z, "via_theta": kt, "error": err})
        ok = err < 1e-6
    return rep, ok, {}, d.label


def cmd_canonical(a, prof):
    from . import canonical_system as cs
    d = _data(a.data)
    lam0 = _complex(a.lambda0)
    xs = _range(a.x_grid, 0)
    base = cs.NodeBasis(d, lam0, a.n_basis, prof)
    rows = ["t,alpha,re_beta,im_beta"]
    out, arts, ok = [], {}, True
    lam = cs.j_contractivity_points(8, lam0=lam0)
    for x in xs:
        ba = cs.beta_over_alpha(d, lam0, float(x), a.n_basis, prof, a.method, base=base)
        ok &= abs(abs(ba) - 1) < 1e-3
        # gauge alpha = 1 with t = x
        rows.append(f"{float(x)!r},1.0,{ba.real!r},{ba.imag!r}")
        rec = {"x": float(x), "beta_over_alpha": ba}
        if a.emit == "chain.json":
            T = cs.transfer_matrix(d, lam0, float(x), lam,
                                   node=cs.NodeBasis2D(d, lam0, float(x), a.n_basis, prof, base))
            jmin = float(T.j_defect_eigs().min())
            ok &= jmin > -1e-8
            rec.update({"lam": lam, "A": T.entries, "j_defect_min": jmin})
        out.append(rec)
    if a.emit == "coeffs.csv":
        arts["coeffs.csv"] = "\n".join(rows) + "\n"
    else:
        arts["chain.json"] = json.dumps(_jsonable(out), indent=1)
    rep = {"label": d.label, "lambda0": lam0, "method": a.method, "gauge": "alpha=1, t=x",
           "records": [{"x": r["x"], "beta_over_alpha": r["beta_over_alpha"]} for r in out]}
    return rep, bool(ok), arts, d.label


def cmd_sturm(a, prof):
    from . import sturm_liouville as sl
    try:
        q = sl.parse_potential(a.q)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    lam0 = _complex(a.lambda0)
    rep = {"potential": q.name, "params": q.params, "lambda0": lam0, "x0": a.x0, "check": a.check}
    if a.check == "m9":
        r = sl.node_quantities(q, lam0, a.x0)
        rep.update({"lhs": r["m9_lhs"], "rhs": r["m9_rhs"], "residual": r["m9_residual"]})
        ok = r["m9_residual"] < 1e-2
    elif a.check == "factorization":
        r = sl.node_quantities(q, lam0, a.x0)
        w = r["weyl"]
        rep.update({"transfer": r["transfer"], "tau": w.tau, "a": w.a, "m_plus": w.m_plus,
                    "triangular_residual": r["triangular_residual"],
                    "normalization": r["normalization"]})
        ok = r["triangular_residual"] < 1e-6 and abs(r["normalization"][0]) < 1e-8
    else:
        res = sl.wronskian_derivative_residual(q, lam0, a.x0)
        det = abs(sl.integrate_B(q, lam0, a.x0).det - 1)
        rep.update({"residual": res, "det_minus_one": det})
        ok = res < 1e-6 and det < 1e-8
    return rep, bool(ok), {}, q.name


def cmd_a2(a, prof):
    from .appendix_suite import a2_bracket, a2_matrix_check, a2_scalar_check
    d = _data(a.data)
    win = _range(a.window)
    sc = a2_scalar_check(d.amplitude, win, a.depth)
    mt = a2_matrix_check(d.amplitude, win, a.depth)
    rep = {"label": d.label, "scalar": sc.to_dict(), "matrix": mt.to_dict(), "bracket": a2_bracket(sc, mt)}
    ok = rep["bracket"]["verdicts_agree"] and (a.expect is None or sc.verdict == a.expect)
    return rep, bool(ok), {}, d.label


def cmd_golden(a, prof):
    from .appendix_suite import appendix1_golden
    r = appendix1_golden(prof)
    return r.to_dict(), r.passed, {}, "appendix1"


# ---------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scatterkern", description=__doc__.splitlines()[0])
    p.add_argument("--out", help="directory for report, manifest and traces")
    p.add_argument("--profile", help="grid profile (overrides SCATTERKERN_PROFILE)")
    sub = p.add_subparsers(dest="command", required=True)

    def data_cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--data", required=True, help="registered dataset name or JSON file")
        return sp

    data_cmd("validate", "check symmetry, contractivity, Szego and Blaschke conditions")
    sp = data_cmd("derive", "derived scattering data and unitarity residuals")
    sp.add_argument("--tmax", type=float, default=20.0)
    sp.add_argument("--n", type=int, default=401)

    sp = data_cmd("kernel", "reproducing kernel values")
    sp.add_argument("--flavor", choices=("h2", "h2hat"), default="h2")
    sp.add_argument("--mu", required=True, help="RE,IM")
    sp.add_argument("--method", choices=("gram", "lemma"), default="gram")
    sp.add_argument("--x", type=float, default=0.0)
    sp.add_argument("--points", help="RE,IM;RE,IM;...")
    sp.add_argument("--n-basis", type=int)

    sp = data_cmd("asymptotics", "trace of an asymptotic quantity along an x-schedule")
    sp.add_argument("--theorem", required=True,
                    choices=("t2", "t1i", "t1ii", "c11", "c12", "ratio"))
    sp.add_argument("--lambda0", required=True, help="RE,IM")
    sp.add_argument("--schedule", help="a:b:n")
    sp.add_argument("--flavor", choices=("h2", "h2hat"), default="h2")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--n-basis", type=int)

    sp = data_cmd("node", "one-dimensional node checks")
    sp.add_argument("--lambda0", default="0.7071067811865476,0.7071067811865476")
    sp.add_argument("--check", choices=("wronskian", "theta", "theta-iso", "kernel"), default="wronskian")
    sp.add_argument("--n-basis", type=int)

    sp = data_cmd("canonical", "canonical-system coefficients and transfer matrices")
    sp.add_argument("--lambda0", default="0.7071067811865476,0.7071067811865476")
    sp.add_argument("--x-grid", required=True, help="a:b:n")
    sp.add_argument("--emit", choices=("coeffs.csv", "chain.json"), default="coeffs.csv")
    sp.add_argument("--method", choices=("traces", "node"), default="traces")
    sp.add_argument("--n-basis", type=int)

    sp = sub.add_parser("sturm", help="Sturm-Liouville node checks")
    sp.add_argument("--q", required=True, help="name or name:k=v,...")
    sp.add_argument("--lambda0", default="0.7071067811865476,0.7071067811865476")
    sp.add_argument("--x0", type=float, default=1.0)
    sp.add_argument("--check", choices=("m9", "factorization", "wronskian"), default="m9")

    sp = data_cmd("a2", "dyadic A2 scan of s_plus")
    sp.add_argument("--window", default="-8:8", help="a:b")
    sp.add_argument("--depth", type=int, default=10)
    sp.add_argument("--expect", choices=("finite", "infinite"))

    sub.add_parser("golden", help="closed-form battery")
    return p


COMMANDS = {"validate": cmd_validate, "derive": cmd_derive, "kernel": cmd_kernel,
            "asymptotics": cmd_asymptotics, "node": cmd_node, "canonical": cmd_canonical,
            "sturm": cmd_sturm, "a2": cmd_a2, "golden": cmd_golden}


def _join_negative_values(argv):
    """Allow '--window -8:8' style values starting with '-'."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def _emit(out_dir, report, artifacts, manifest):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in artifacts.items():
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(text)
        paths.append(path)
    rp = os.path.join(out_dir, "report.json")
    with open(rp, "w") as fh:
        json.dump(_jsonable(report), fh, indent=1, sort_keys=True)
    manifest["outputs"] = [rp] + paths
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=1, sort_keys=True)


def main(argv=None) -> int:
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        prof = get_profile(a.profile)
    except KeyError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    try:
        report, ok, artifacts, label = COMMANDS[a.command](a, prof)
    except UsageError as exc:
        print(json.dumps({"error": str(exc), "kind": "usage"}), file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}), file=sys.stderr)
        return 1
    except ValueError as exc:
        print(json.dumps({"error": str(exc), "kind": "usage"}), file=sys.stderr)
        return 2
    manifest = {"command": a.command, "argv": argv, "dataset": label, "profile": prof.name,
                "profile_digest": prof.digest(), "passed": bool(ok)}
    if a.out:
        _emit(a.out, report, artifacts, manifest)
    print(json.dumps(_jsonable({"manifest": manifest, "report": report}), indent=1, sort_keys=True))
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())

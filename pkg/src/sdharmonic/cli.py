"""Command-line front end.

    sdharmonic verify   --model A
    sdharmonic classify --model B --R 1/2
    sdharmonic moser    [--input run.json] [--steps 16] [--seed 0]
    sdharmonic reeb     --model A --point 0,0,0,1 --T 20
    sdharmonic census   --model B --grid 101
    sdharmonic graft    --model B --R 1/2

Every command prints a JSON report ``{"command", "checks": [...], "result"}``
to stdout (and to ``--out``), where each check is
``{name, anchor, status, value, tolerance}``.  Exit status: 0 if every check
passes, 1 if one fails, 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exceptions import ClassMismatchError, SDHarmonicError
from .forms import DTHETA, DiffForm, ext_d, hodge3, hodge4, pullback_affine, wedge
from .models import (
    ModelSpec,
    classify_splitting,
    extract_L,
    lemma_check,
    make_model,
    mu_A,
    nondegeneracy_scan,
)
from .ring import ChartPoint

log = logging.getLogger("sdharmonic")

PASS, FAIL = "pass", "fail"

DEFAULT_TOLERANCES = {
    "pullback": 1e-4,
    "eta_order": 1.95,  # a fitted slope of 2 lands within roundoff of it
    "decay_slope": 0.9,
    "drift": 1e-8,
    "closure": 1e-6,
    "reeb": 1e-10,
}


class InputError(Exception):
    pass


# -- serialization ----------------------------------------------------------
def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return "null"
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = format(v, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits and stable key order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def check(name: str, anchor: str, ok: bool, value=None, tolerance=None) -> dict:
    return {"name": name, "anchor": anchor, "status": PASS if ok else FAIL, "value": value, "tolerance": tolerance}


def _exact(name, anchor, lhs, rhs) -> dict:
    diff = lhs - rhs
    return check(name, anchor, diff.is_zero(), "0" if diff.is_zero() else str(diff), "exact")


# -- parsing helpers --------------------------------------------------------
def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"not a rational number: {text!r}") from e


def _spec(args) -> ModelSpec:
    try:
        if args.model == "B":
            return ModelSpec("B", _parse_fraction(args.R) if args.R else None)
        if args.R:
            raise InputError("--R applies to model B only")
        return ModelSpec(args.model)
    except ValueError as e:
        raise InputError(str(e)) from e


def _tolerances(pairs) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for item in pairs or ():
        key, sep, val = item.partition("=")
        if not sep or key not in tol:
            raise InputError(f"bad tolerance override {item!r}; known: {', '.join(sorted(tol))}")
        try:
            tol[key] = float(val)
        except ValueError as e:
            raise InputError(f"bad tolerance value {val!r}") from e
    return tol


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read descriptor {path}: {e}") from e


def _form_from_json(data, degree: int | None = None) -> DiffForm:
    if isinstance(data, (str, dict)) and (isinstance(data, str) or "kind" in data):
        try:
            form = make_model(ModelSpec.from_json(data)).form
        except (ValueError, KeyError) as e:
            raise InputError(str(e)) from e
    else:
        try:
            form = DiffForm.from_json(data)
        except (ValueError, KeyError, TypeError) as e:
            raise InputError(f"bad form descriptor: {e}") from e
    if degree is not None and form.degree != degree:
        raise InputError(f"expected a {degree}-form, got degree {form.degree}")
    return form


# -- commands ---------------------------------------------------------------
def cmd_verify(args, tol) -> tuple[list, dict]:
    from .reeb import contact_volume, make_contact, expected_contact_volume, positivity_certificate

    spec = _spec(args)
    model = make_model(spec)
    w = model.form
    checks = [
        _exact("dω=0", "local model is closed", ext_d(w), DiffForm(3)),
        _exact("*ω=ω", "local model is self-dual", hodge4(w), w),
    ]
    scan = nondegeneracy_scan(w)
    checks.append(check("ω∧ω>0 off C", "local model is nondegenerate off the zero circle",
                        scan.zeros_only_on_core, scan.min_density, 1e-12))
    L = extract_L(model)
    rep = lemma_check(L)
    checks.append(check("L symmetric traceless", "linear part is symmetric and traceless",
                        rep.ok, None, "exact"))
    result = {"model": spec.to_json()}
    if spec.kind in ("A", "B-glued"):
        mu = mu_A()
        checks.append(_exact("ω=*₃μ+dθ∧μ", "A is built from a Morse function on D^3",
                             w, hodge3(mu) + wedge(DTHETA, mu)))
        cm = make_contact(spec.kind)
        checks.append(_exact("dλ=ω", "lambda is a primitive of the model", ext_d(cm.lam), w))
        if spec.kind == "A":
            vol = contact_volume(cm)
            checks.append(_exact("contact volume", "radial contact volume polynomial", vol, expected_contact_volume()))
            cert = positivity_certificate(vol)
            checks.append(check("contact positivity", "lambda is contact on S^1 x S^2",
                                cert is not None, None if cert is None else [[str(c), a, b] for c, a, b in cert],
                                "certificate"))
        else:
            checks.append(_exact("φ*ω=ω", "glueing map preserves the form", pullback_affine(model.glue, w), w))
            checks.append(_exact("φ*λ=λ", "glueing map preserves lambda", pullback_affine(model.glue, cm.lam), cm.lam))
    return checks, result


def cmd_classify(args, tol):
    spec = _spec(args)
    model = make_model(spec)
    L = extract_L(model, args.samples)
    cls = classify_splitting(L)
    refined = classify_splitting(extract_L(model, 2 * args.samples))
    rep = lemma_check(L)
    checks = [
        check("L symmetric traceless", "linear part is symmetric and traceless", rep.ok, None, "exact"),
        check("refinement stable", "splitting class is independent of sampling",
              refined.value == cls.value, refined.value, None),
    ]
    result = {"model": spec.to_json(), "class": cls.value, "monodromy": cls.monodromy_sign,
              **{k: v for k, v in cls.to_json().items() if k not in ("class",)}}
    return checks, result


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([format(float(v), ".17g") for v in row])


def _moser_descriptor(args) -> dict:
    if args.input:
        d = _load_json(args.input)
        if not isinstance(d, dict):
            raise InputError("descriptor must be a JSON object")
        return d
    return {
        "family": {
            "omega0": "A",
            "perturbation": {
                "epsilon": "1/100",
                "generator": {"degree": 1, "components": {"1": [{"c": "1", "pow": [0, 1, 0]}]}},
                "damping": [0.5, 0.9],
            },
        },
        "particles": {"seed": args.seed, "count": 200, "region": [0.2, 0.8]},
        "steps": args.steps,
    }


def cmd_moser(args, tol):
    from .moser import DampingProfile, FormFamily, integrate_flow, sample_annulus

    d = _moser_descriptor(args)
    try:
        fam_d = d["family"]
        w0 = _form_from_json(fam_d["omega0"], 2)
        if "perturbation" in fam_d:
            p = fam_d["perturbation"]
            damp = DampingProfile(*p.get("damping", (0.5, 0.9)))
            family = FormFamily.perturbed(w0, _parse_fraction(str(p["epsilon"])), _form_from_json(p["generator"], 1), damp)
        else:
            family = FormFamily.linear(w0, _form_from_json(fam_d["omega1"], 2))
            damp = DampingProfile(*fam_d.get("damping", (0.5, 0.9)))
        pd = d.get("particles", {})
        seed = int(pd.get("seed", args.seed))
        count = int(pd.get("count", 200))
        rmin, rmax = (float(v) for v in pd.get("region", (0.2, 0.8)))
        steps = int(d.get("steps", args.steps))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad moser descriptor: {e}") from e
    P = sample_annulus(count, rmin, rmax, seed)
    res = integrate_flow(family, P, steps, damp)
    checks = [
        check("pullback error", "time-1 Moser map pulls w1 back to w0", res.max_pullback_error <= tol["pullback"],
              res.max_pullback_error, tol["pullback"]),
        check("eta order at C", "corrected primitive vanishes to second order along C",
              res.eta_order >= tol["eta_order"], res.eta_order, tol["eta_order"]),
        check("|X| = O(|x|)", "Moser field is bounded by k|x| near C",
              res.decay_fit.slope >= tol["decay_slope"], res.decay_fit.slope, tol["decay_slope"]),
    ]
    result = {"particles": count, "seed": seed, "steps": steps, "max_pullback_error": res.max_pullback_error,
              "eta_order": res.eta_order, "decay_slope": res.decay_fit.slope, "decay_k": res.decay_fit.k,
              "step_stats": res.step_stats}
    out = d.get("output") or (str(Path(args.out) / "moser.csv") if args.out else None)
    if out:
        rows = [(*a, *b, e) for a, b, e in zip(res.starts, res.ends, res.pullback_error)]
        _write_csv(Path(out), ["start_theta", "start_x1", "start_x2", "start_x3",
                               "end_theta", "end_x1", "end_x2", "end_x3", "error"], rows)
        result["csv"] = out
    return checks, result


def _parse_point(text: str) -> ChartPoint:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise InputError(f"bad point {text!r}") from e
    if len(vals) != 4:
        raise InputError("point needs theta,x1,x2,x3")
    x = np.array(vals[1:])
    n = np.linalg.norm(x)
    if abs(n - 1) > 1e-9:
        raise InputError(f"point must lie on the unit sphere, |x| = {n}")
    return ChartPoint(vals[0], tuple(x / n))


def cmd_reeb(args, tol):
    from .reeb import integrate_orbit, make_contact

    kind = _spec(args).kind
    if kind == "B":
        raise InputError("the Reeb commands take model A or B-glued")
    cm = make_contact(kind)
    p0 = _parse_point(args.point)
    rec = integrate_orbit(cm, p0, T=args.T, h=args.h, closure_tol=tol["closure"], drift_limit=1.0,
                          record_every=args.record_every)
    checks = [check("conserved drift", "x3 (|x3| when glued) and x1^2 + x2^2 are constant on orbits",
                    rec.drift <= tol["drift"], rec.drift, tol["drift"])]
    result = rec.to_json()
    result["model"] = kind
    result["normalizer"] = _normalizer_note(cm)
    result["events"] = [{"t": t, "direction": s} for t, s in rec.events]
    if args.out:
        path = Path(args.out) / "orbit.csv"
        _write_csv(path, ["t", "theta", "x1", "x2", "x3"], rec.trajectory)
        result["csv"] = str(path)
    return checks, result


def _normalizer_note(cm):
    from .reeb import reeb_at, reeb_normalizer

    # f = -(1/2)[rho(rho + 2 x3^2) + c x3^4]; the pole value fixes c
    c = -2 * reeb_normalizer(cm, (0.0, 0.0, 1.0))
    X_pole = reeb_at(cm, (0.0, 0.0, 0.0, 1.0))
    return {
        "f": "-(1/2)[(x1^2+x2^2)(x1^2+x2^2+2x3^2) + c x3^4]",
        "c": c,
        "X_at_pole": [float(v) for v in X_pole],
        "note": "kernel solve gives c = 4; c = 2 would give X = 2 d/dtheta at the poles and lambda(X) = 2",
    }


def cmd_census(args, tol):
    from .reeb import DOUBLED, SINGLE, make_contact, orbit_census

    kind = _spec(args).kind
    if kind == "B":
        kind = "B-glued"
    cm = make_contact(kind)
    entries = orbit_census(cm, args.grid, h=args.h)
    checks = [check(f"orbit r={e.r:.6g} phase={e.phase:.6g}", "special closed orbits",
                    bool(e.verified), e.period, tol["closure"]) for e in entries if e.verified is not None]
    if cm.glued:
        poles = [e for e in entries if abs(abs(e.r) - 1) < 1e-12]
        fixed = [e for e in entries if abs(e.r) < 1e-12 and abs(math.sin(e.phase)) < 1e-12]
        doubled = [e for e in entries if abs(e.r) < 1e-12 and abs(math.sin(e.phase)) > 1e-12]
        checks.append(check("poles doubled", "pole orbit doubles the unglued one",
                            bool(poles) and all(e.multiplicity == DOUBLED for e in poles), len(poles), None))
        checks.append(check("(±1,0,0) single", "single closed orbits at the fixed equatorial points",
                            bool(fixed) and all(e.multiplicity == SINGLE for e in fixed), len(fixed), None))
        checks.append(check("x2≠0 equator doubled", "doubled equatorial orbits",
                            bool(doubled) and all(e.multiplicity == DOUBLED for e in doubled), len(doubled), None))
    result = {"model": kind, "grid": args.grid, "entries": [e.to_json() for e in entries]}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
    return checks, result


def cmd_graft(args, tol):
    from .moser import graft_experiment

    spec = _spec(args)
    if spec.kind == "B-glued":
        raise InputError("graft needs an explicit chart model (A or B)")
    if args.input:
        w = _form_from_json(_load_json(args.input), 2)
    else:
        w = make_model(spec).form
    target = None
    if args.target:
        try:
            target = ModelSpec(args.target)
        except ValueError as e:
            raise InputError(str(e)) from e
    rep = graft_experiment(w, target=target, steps=args.steps, seed=args.seed)
    fl = rep.flow
    checks = [
        check("pullback error", "time-1 Moser map pulls the model back to w", rep.max_pullback_error <= tol["pullback"],
              rep.max_pullback_error, tol["pullback"]),
        check("eta order at C", "corrected primitive vanishes to second order along C",
              fl.eta_order >= tol["eta_order"], fl.eta_order, tol["eta_order"]),
        check("|X| = O(|x|)", "Moser field is bounded by k|x| near C",
              fl.decay_fit.slope >= tol["decay_slope"], fl.decay_fit.slope, tol["decay_slope"]),
    ]
    return checks, rep.to_json()


COMMANDS = {
    "verify": cmd_verify,
    "classify": cmd_classify,
    "moser": cmd_moser,
    "reeb": cmd_reeb,
    "census": cmd_census,
    "graft": cmd_graft,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sdharmonic", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", choices=("A", "B", "B-glued"), default="A")
        p.add_argument("--R", default=None, help="rational parameter of model B (default 1/2)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="directory for <command>.json and CSV artifacts")
        p.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                       help=f"override a tolerance ({', '.join(DEFAULT_TOLERANCES)})")
        return p

    common(sub.add_parser("verify", help="exact identities of a model"))
    p = common(sub.add_parser("classify", help="splitting class of a model"))
    p.add_argument("--samples", type=int, default=360)
    p = common(sub.add_parser("moser", help="Moser flow experiment"))
    p.add_argument("--input", default=None, help="JSON run descriptor")
    p.add_argument("--steps", type=int, default=16)
    p = common(sub.add_parser("reeb", help="integrate one Reeb orbit"))
    p.add_argument("--point", default="0,0,0,1", help="theta,x1,x2,x3 on S^1 x S^2")
    p.add_argument("--T", type=float, default=20.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--record-every", type=int, default=10)
    p = common(sub.add_parser("census", help="closed Reeb orbit census"))
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--h", type=float, default=1e-3)
    p = common(sub.add_parser("graft", help="Moser graft of a form onto its model"))
    p.add_argument("--input", default=None, help="JSON 2-form (defaults to the chosen model)")
    p.add_argument("--target", default=None, choices=("A", "B"))
    p.add_argument("--steps", type=int, default=8)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        tol = _tolerances(args.tolerance)
        checks, result = COMMANDS[args.command](args, tol)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ClassMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SDHarmonicError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    report = {"command": args.command, "checks": checks, "result": result}
    text = dumps(report) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text)
    failed = [c["name"] for c in checks if c["status"] != PASS]
    for name in failed:
        print(f"check failed: {name}", file=sys.stderr)
    return 1 if failed else 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

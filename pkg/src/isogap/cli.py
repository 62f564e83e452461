"""Command-line front end: ``isogap {analyze,reproduce,proptest,profile,certify}``.

Exit codes: 0 all checks hold, 1 an inequality or target failed,
2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bounds import INEQ_TOL, RATE_TOL, bound_report, gap_certificate
from .errors import InputError, IsogapError, NoDecay, SolverError
from .isoperimetry import STRATEGIES, iso_profile
from .kernel import orgc_estimate
from .models import load_from_file, lump_two_state, make_model
from .proptest import run_property_suite
from .spectral import gelfand_sequence, iso_gap_estimator, spectral_report

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3
FAMILIES = ("cycle", "mm1", "hypercube", "star")


def g6(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    return f"{x:.6g}"


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".isogap-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _formats(text: str) -> set:
    fm = {f.strip() for f in text.split(",") if f.strip()}
    bad = fm - {"text", "csv", "json"}
    if bad:
        raise InputError(f"unknown output format(s): {', '.join(sorted(bad))}")
    return fm


def _load(args):
    if args.file:
        return load_from_file(args.file)
    if not args.model:
        raise InputError("give --model or --file")
    params = {"dim": args.dim, "trunc": args.trunc, "a1": args.a1, "n": args.n}
    if args.lazy is not None:
        params["lazy"] = args.lazy
    if args.p is not None:
        params["p"] = args.p
    if args.a:
        try:
            params["a"] = [float(t) for t in args.a.split(",")]
        except ValueError:
            raise InputError(f"cannot parse weights {args.a!r}")
    return make_model(args.model, **params)


def _strategy(args, model) -> tuple[str, list | None]:
    m = model.kernel.size
    if args.strategy:
        s = args.strategy
    elif m <= 16:
        s = "exhaustive"
    else:
        s = "candidates" if model.cuts else "sweep"
    return s, (list(model.cuts) if s == "candidates" else None)


def _check_common(args):
    if args.horizon < 1:
        raise InputError("horizon must be >= 1")
    if args.kappa < 1:
        raise InputError("kappa must be >= 1")


def _table(rows) -> str:
    head = f"{'name':<34}{'check':<38}{'lhs':>13}{'rhs':>13}{'margin':>13}  verdict"
    out = [head, "-" * len(head)]
    for r in rows:
        verdict = "skipped" if r.ok is None else ("ok" if r.ok else "VIOLATED")
        margin = None
        if math.isfinite(r.lhs) and math.isfinite(r.rhs):
            margin = r.margin
            # below the operands' last printed digit is roundoff
            if abs(margin) <= 1e-12 * max(abs(r.lhs), abs(r.rhs)):
                margin = 0.0
        out.append(f"{r.name:<34}{r.check:<38}{g6(r.lhs):>13}{g6(r.rhs):>13}"
                   f"{g6(margin):>13}  {verdict}")
    return "\n".join(out)


# --------------------------------------------------------------------------
# commands

def cmd_analyze(args) -> int:
    _check_common(args)
    fm = _formats(args.format)
    model = _load(args)
    k, pi = model.kernel, model.pi
    strategy, cands = _strategy(args, model)
    prof = iso_profile(k, pi, args.horizon, strategy, cands)
    spec = spectral_report(k, pi)
    gel = gelfand_sequence(k, pi, args.horizon)
    try:
        rates = orgc_estimate(k, pi, args.rate_horizon)
    except NoDecay as exc:
        rates, rate_note = None, f"rates not estimated: {exc}"
    else:
        rate_note = (f"delta={g6(rates.delta)} delta*={g6(rates.delta_adjoint)}"
                     f" converged={rates.converged}")
    rep = bound_report(k, pi, prof, spec, gel, rates, args.kappa, args.tol)
    lines = [
        f"model: {model.config.family} {model.config.params if model.config.family != 'star' else ''}".rstrip(),
        f"states: {k.size}  strategy: {strategy}  horizon: {args.horizon}",
        f"rho = {g6(spec.rho)}  gap = {g6(spec.gap)}  ({spec.method})",
        f"class: reversible={spec.chain_class.reversible} normal={spec.chain_class.normal}"
        f" positive={spec.chain_class.positive}",
        f"rates: {rate_note}",
        f"k_inf[1] = {g6(prof.k_inf[0])}  k_inf[{args.horizon}] = {g6(prof.k_inf[-1])}",
    ]
    cert = rep.certificate
    if cert is not None and cert.m_nonempty:
        lines.append(f"spectral gap certificate: eps={g6(cert.best_epsilon)} r0={g6(cert.r0)}")
    elif cert is not None:
        why = "insufficient horizon" if cert.insufficient_horizon else \
            f"k_{args.horizon} = {g6(prof.k_inf[-1])}"
        lines.append(f"no spectral gap certificate; {why}")
    lines.append("")
    lines.append(_table(rep.rows))
    text = "\n".join(lines)
    print(text)
    if args.out:
        if "text" in fm:
            write_atomic(os.path.join(args.out, "summary.txt"), text + "\n")
        if "csv" in fm:
            write_atomic(os.path.join(args.out, "profile.csv"), prof.to_csv())
            write_atomic(os.path.join(args.out, "gelfand.csv"), gel.to_csv())
        if "json" in fm:
            write_atomic(os.path.join(args.out, "spectral.json"),
                         json.dumps(spec.to_dict(), indent=2) + "\n")
            write_atomic(os.path.join(args.out, "bounds.json"), rep.to_json() + "\n")
    elif "json" in fm:
        print(rep.to_json())
    return EXIT_OK if rep.all_ok else EXIT_VIOLATION


def _target_line(name, target, computed, tol) -> tuple[str, bool]:
    err = abs(computed - target)
    ok = err <= tol
    return (f"{name:<34}{g6(target):>13}{g6(computed):>13}{g6(err):>13}"
            f"{g6(tol):>10}  {'PASS' if ok else 'FAIL'}"), ok


def cmd_reproduce(args) -> int:
    ex = args.example
    lines = [f"{'quantity':<34}{'target':>13}{'computed':>13}{'error':>13}{'tol':>10}  verdict"]
    oks = []

    def add(*row):
        line, ok = _target_line(*row)
        lines.append(line)
        oks.append(ok)

    if ex == "star":
        model = make_model("star", a1=args.a1, n=args.n)
        spec = spectral_report(model.kernel, model.pi)
        add("rho (hub self-weight a1)", args.a1, spec.rho, 1e-10)
        zeros = int(np.sum(np.abs(spec.restricted) <= 1e-10))
        add("multiplicity of eigenvalue 0", args.n - 2, zeros, 0)
        Q = lump_two_state(model, model.cuts[0])
        lam = np.sort(np.linalg.eigvals(Q).real)
        add("lumped second eigenvalue", -args.a1, lam[0], 1e-12)
    elif ex == "hypercube":
        model = make_model("hypercube", dim=args.dim, lazy=True)
        spec = spectral_report(model.kernel, model.pi)
        add("rho", 1 - 1 / args.dim, spec.rho, 1e-10)
        prof = iso_profile(model.kernel, model.pi, 2 * 10, "candidates", [model.cuts[0]])
        m = np.arange(1, 21)
        err = float(np.max(np.abs(prof.k_inf - (1 - (1 - 1 / args.dim) ** m))))
        add("coordinate cut k_m max error", 0.0, err, 1e-12)
        est = iso_gap_estimator(prof, spec)
        add("ratio estimator on coordinate cut", 1 - 1 / args.dim, est.rho_estimate, 1e-12)
    elif ex == "mm1":
        target = 2 * math.sqrt(args.p * (1 - args.p))
        big = spectral_report(*make_model("mm1", p=args.p, trunc=args.trunc)[:2]).rho
        half = spectral_report(*make_model("mm1", p=args.p, trunc=args.trunc // 2)[:2]).rho
        add(f"rho at truncation {args.trunc}", target, big, 1e-2)
        add(f"rho at truncation {args.trunc // 2}", target, half, 1e-2)
        lines.append(f"truncation error shrinks: {abs(big - target) < abs(half - target)}")
        oks.append(abs(big - target) < abs(half - target))
    elif ex == "cycle":
        p = int(args.p) if args.p is not None else 7
        model = make_model("cycle", p=p)
        prof = iso_profile(model.kernel, model.pi, p, "exhaustive")
        add(f"k_inf[{p}]", 0.0, prof.k_inf[-1], 1e-14)
        early = float(prof.k_inf[:-1].min()) if p > 1 else math.inf
        lines.append(f"min k_inf[1..{p - 1}] = {g6(early)} > 1/{p}: {early > 1 / p}")
        oks.append(early > 1 / p)
        spec = spectral_report(model.kernel, model.pi)
        add("max | |lambda| - 1 |", 0.0, float(np.max(np.abs(np.abs(spec.eigenvalues) - 1))), 1e-12)
        cert = gap_certificate(prof)
        lines.append(f"certificate: m_nonempty={cert.m_nonempty}"
                     f" insufficient_horizon={cert.insufficient_horizon}")
        oks.append(not cert.m_nonempty and not cert.insufficient_horizon)
    print("\n".join(lines))
    return EXIT_OK if all(oks) else EXIT_VIOLATION


def cmd_proptest(args) -> int:
    if args.trials < 0:
        raise InputError("trials must be >= 0")
    if args.max_states < 2:
        raise InputError("max-states must be >= 2")
    res = run_property_suite(args.trials, args.max_states, args.horizon, args.seed,
                             args.inject_failure)
    print(res.summary())
    return EXIT_OK if res.ok else EXIT_VIOLATION


def cmd_profile(args) -> int:
    _check_common(args)
    model = _load(args)
    strategy, cands = _strategy(args, model)
    prof = iso_profile(model.kernel, model.pi, args.horizon, strategy, cands)
    text = prof.to_csv()
    if args.out:
        write_atomic(os.path.join(args.out, "profile.csv"), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_certify(args) -> int:
    _check_common(args)
    model = _load(args)
    prof = iso_profile(model.kernel, model.pi, args.horizon, "exhaustive")
    cert = gap_certificate(prof, args.kappa)
    d = cert.to_dict()
    if cert.m_nonempty:
        msg = f"certified: non-unit spectrum inside radius r0={g6(cert.r0)} (eps={g6(cert.best_epsilon)})"
    elif cert.insufficient_horizon:
        msg = "inconclusive: horizon too short to decide"
    else:
        msg = f"no spectral gap certificate; k_{args.horizon} = {g6(prof.k_inf[-1])}"
    if "json" in _formats(args.format):
        print(json.dumps(d, indent=2))
    else:
        print(msg)
    if args.out:
        write_atomic(os.path.join(args.out, "certificate.json"), json.dumps(d, indent=2) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------

def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=FAMILIES)
    g.add_argument("--file", help="kernel file (dense or 'i j p' triplets)")
    g.add_argument("--p", type=float, help="cycle length, or M/M/1 down probability")
    g.add_argument("--a", help="star weights, comma separated")
    g.add_argument("--a1", type=float, default=0.3, help="star hub self-weight")
    g.add_argument("--n", type=int, default=10, help="star size")
    g.add_argument("--dim", type=int, default=4, help="hypercube dimension")
    g.add_argument("--trunc", type=int, default=100, help="M/M/1 truncation level")
    g.add_argument("--lazy", action=argparse.BooleanOptionalAction, default=None,
                   help="hold with probability 1/2 (default: on for hypercube, off for cycle)")


def _run_flags(p: argparse.ArgumentParser, horizon: int = 20) -> None:
    p.add_argument("--horizon", type=int, default=horizon)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", default="text", help="comma list of text,csv,json")
    p.add_argument("--tol", type=float, default=INEQ_TOL, help="inequality tolerance")
    p.add_argument("--rate-tol", type=float, default=RATE_TOL)
    p.add_argument("--rate-horizon", type=int, default=200)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="isogap",
        description="Isoperimetric constants and spectral-gap bounds for finite Markov chains.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="profile, spectrum and every bound check")
    _model_flags(p)
    _run_flags(p, horizon=50)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reproduce", help="compare a worked example against its target")
    p.add_argument("example", choices=FAMILIES)
    p.add_argument("--p", type=float)
    p.add_argument("--a1", type=float, default=0.3)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--trunc", type=int, default=600)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("proptest", help="randomised property suite")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-states", type=int, default=8)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-failure", action="store_true",
                   help="perturb a kernel row to exercise the failure path")
    p.set_defaults(func=cmd_proptest)

    p = sub.add_parser("profile", help="iso profile CSV only")
    _model_flags(p)
    _run_flags(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("certify", help="finite-horizon spectral gap certificate only")
    _model_flags(p)
    _run_flags(p, horizon=50)
    p.set_defaults(func=cmd_certify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "reproduce" and args.example == "mm1" and args.p is None:
        args.p = 0.7
    try:
        return args.func(args)
    except (InputError, NoDecay) as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except IsogapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

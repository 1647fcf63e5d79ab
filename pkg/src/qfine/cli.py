"""Command-line front end: verify / calculus / spectrum / fueter.

Exit codes (stable for CI): 0 pass, 2 identity failure, 3 numeric failure,
4 precondition failure.  Reports are byte-deterministic for a fixed seed
and configuration (no timestamps; ordered trials).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import quaternion as qt
from .calculi import calculus_bounded, calculus_unbounded
from .errors import (
    CannotSeparate,
    EigenSolverFailure,
    KernelSingularity,
    NoConvergence,
    PoleProximity,
    PreconditionViolated,
    QfineError,
    SingularOperator,
    SpectrumHit,
)
from .functions import descriptor_to_function, diagram_residuals
from .identities import IDENTITY_NAMES, THRESHOLDS, run_verification
from .linalg import CommutingTuple, extract_components, s_spectrum

EXIT_OK = 0
EXIT_IDENTITY = 2
EXIT_NUMERIC = 3
EXIT_PRECONDITION = 4

_NUMERIC_ERRORS = (
    NoConvergence,
    SingularOperator,
    EigenSolverFailure,
    KernelSingularity,
    SpectrumHit,
    CannotSeparate,
    PoleProximity,
    np.linalg.LinAlgError,
)


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


_GATE_TABLE = {
    "S": "none",
    "Q": "none",
    "P2": "f(alpha)=0 and d_alpha f(alpha)=0",
    "F": "f(alpha)=0",
}


def _verify_markdown(report):
    lines = ["# Identity verification report", ""]
    cfg = report["config"]
    lines.append(
        f"dim={cfg['dim']} trials={cfg['trials']} seed={cfg['seed']} "
        f"rtol={cfg['rtol']} margin={cfg['margin']}"
    )
    lines += ["", "| identity | trials | max residual | threshold | pass |",
              "|---|---|---|---|---|"]
    by_name = {}
    for r in report["results"]:
        by_name.setdefault(r["identity"], []).append(r)
    for name in cfg["identities"]:
        rows = by_name.get(name, [])
        worst = max((r["max_residual"] for r in rows), default=0.0)
        ok = all(r["pass"] for r in rows)
        lines.append(
            f"| {name} | {len(rows)} | {worst:.3e} | {THRESHOLDS[name]:.1e} | "
            f"{'yes' if ok else 'NO'} |"
        )
    gates = report["notes"].get("gates", {})
    lines += ["", "## Unbounded-calculus admission gates", "",
              "| calculus | condition | measured |f(alpha)| | measured |f'(alpha)| |",
              "|---|---|---|---|"]
    for kind in ("S", "Q", "P2", "F"):
        g = gates.get(kind)
        fa = f"{g['f_at_alpha']:.2e}" if g else "-"
        dfa = f"{g['df_at_alpha']:.2e}" if g else "-"
        lines.append(f"| {kind} | {_GATE_TABLE[kind]} | {fa} | {dfa} |")
    lines += ["", f"split-form right-resolvent defect: "
                  f"{report['notes'].get('sr_split_defect', 0.0):.3e}",
              "", f"all pass: {'yes' if report['all_pass'] else 'NO'}", ""]
    return "\n".join(lines)


def cmd_verify(args):
    try:
        report = run_verification(
            dim=args.dim,
            trials=args.trials,
            seed=args.seed,
            margin=args.margin,
            rtol=args.rtol,
            nodes_cap=args.nodes_cap,
            identities=args.identities,
        )
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = _dump_json(report) if args.format == "json" else _verify_markdown(report)
    _write(text, args.out)
    if not report["all_pass"]:
        bad = [r for r in report["results"] if not r["pass"]]
        print(f"{len(bad)} trials over threshold", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


def _load_tuple(path) -> CommutingTuple:
    with open(path) as fh:
        return CommutingTuple.from_json_dict(json.load(fh))


def _load_function(path):
    with open(path) as fh:
        return descriptor_to_function(json.load(fh))


def cmd_calculus(args):
    try:
        T = _load_tuple(args.tuple)
        f = _load_function(args.function)
        if args.mode == "bounded":
            res = calculus_bounded(
                args.kind, f, T, side=args.side, margin=args.margin,
                rtol=args.rtol, nodes_cap=args.nodes_cap,
            )
        else:
            if args.alpha is None:
                raise PreconditionViolated(
                    "alpha in rho_S(T) and real", "pass --alpha for unbounded modes"
                )
            mode = "transform" if args.mode == "unbounded-transform" else "integral"
            res = calculus_unbounded(
                args.kind, f, T, args.alpha, mode=mode, side=args.side,
                margin=args.margin, rtol=args.rtol, nodes_cap=args.nodes_cap,
            )
    except PreconditionViolated as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    comps = extract_components(res.op.M, T.n)
    out = {
        "n": T.n,
        "components": {f"T{l}": comps[l].tolist() for l in range(4)},
        "meta": {
            "kind": args.kind,
            "mode": args.mode,
            "side": args.side,
            "alpha": args.alpha,
            "nodes_used": res.nodes_used,
            "contour": res.contour.to_json_dict() if res.contour else None,
        },
    }
    _write(_dump_json(out), args.out)
    return EXIT_OK


def cmd_spectrum(args):
    try:
        T = _load_tuple(args.tuple)
        spec = s_spectrum(T)
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.format == "json":
        _write(_dump_json({"spheres": [[u, v] for (u, v) in spec.spheres]}), args.out)
    else:
        lines = "".join(f"({u:.12g}, {v:.12g})\n" for (u, v) in spec.spheres)
        _write(lines, args.out)
    return EXIT_OK


def cmd_fueter(args):
    try:
        f = _load_function(args.function)
        rng = np.random.default_rng(args.seed)
        points = []
        while len(points) < args.trials:
            q = rng.uniform(-2.0, 2.0, size=4)
            u, v, _ = qt.slice_decompose(q)
            if any(np.hypot(u - pu, v - pv) < 0.2 for (pu, pv) in f.poles):
                continue
            points.append(q)
        worst = diagram_residuals(f, points, h=args.h)
    except (PoleProximity,) + _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for label, val in worst.items():
        print(f"{label:12s} max residual {val:.3e} over {args.trials} points")
    out = {"residuals": {k: v for k, v in worst.items()}, "points": args.trials}
    if args.out:
        _write(_dump_json(out), args.out)
    return EXIT_OK


def _positive_float(txt):
    val = float(txt)
    if val <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return val


def _rtol(txt):
    val = float(txt)
    if val <= 0 or val >= 1e-2:
        raise argparse.ArgumentTypeError("rtol must lie in (0, 1e-2)")
    return val


def build_parser():
    p = argparse.ArgumentParser(
        prog="qfine",
        description="Quaternionic functional calculi on the S-spectrum: "
        "verification harness and calculator.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--rtol", type=_rtol, default=1e-10)
        sp.add_argument("--nodes-cap", type=int, default=2**14)
        sp.add_argument("--margin", type=_positive_float, default=0.3)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("json", "md"), default="json")

    v = sub.add_parser("verify", help="run the identity verification suite")
    v.add_argument("--dim", type=int, default=4, choices=range(1, 17), metavar="1..16")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument(
        "--identities", nargs="*", default=None, choices=IDENTITY_NAMES,
        metavar="NAME",
    )
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("calculus", help="apply a functional calculus to a tuple")
    c.add_argument("--tuple", required=True, help="tuple JSON file")
    c.add_argument("--function", required=True, help="function descriptor JSON file")
    c.add_argument("--kind", required=True, choices=("S", "F", "Q", "P2"))
    c.add_argument(
        "--mode",
        default="bounded",
        choices=("bounded", "unbounded-transform", "unbounded-integral"),
    )
    c.add_argument("--side", default="left", choices=("left", "right"))
    c.add_argument("--alpha", type=float, default=None)
    common(c)
    c.set_defaults(func=cmd_calculus)

    s = sub.add_parser("spectrum", help="print the S-spectrum of a tuple")
    s.add_argument("--tuple", required=True)
    common(s)
    s.set_defaults(func=cmd_spectrum, format="text")

    fu = sub.add_parser("fueter", help="pointwise fine-structure diagram residuals")
    fu.add_argument("--function", required=True)
    fu.add_argument("--seed", type=int, default=0)
    fu.add_argument("--trials", type=int, default=25)
    fu.add_argument("--h", type=_positive_float, default=1e-3)
    common(fu)
    fu.set_defaults(func=cmd_fueter)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QfineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any

from .constrained import ConstrainedProblem, build_g_structure, lower_bound
from .cover import (
    bound_via_cover,
    constrained_cover_bound,
    decompose,
    default_targets,
    improve_weights,
)
from .errors import ClubsuitViolated, NotSimplex, NotSTForm, SoncError, SolverFailure
from .geometry import Triangulation, analyze_support, st_form
from .oracle import validate_bound
from .polynomial import Polynomial, infer_variable_count, parse, render, scale_exponents
from .unconstrained import SoncCertificate, global_bound, sonc_bound, verify_certificate

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class InputError(Exception):
    pass


# ------------------------------------------------------------------ input


def _read_problem(source: str, n: int | None, extra_constraints: list[str]) -> tuple[Polynomial, list[Polynomial], dict]:
    """A JSON problem file ``{"f", "constraints", "n"}`` or a polynomial string."""
    path = Path(source)
    if source.endswith(".json") or path.is_file():
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read problem file {source}: {exc}") from exc
        if not isinstance(data, dict) or "f" not in data:
            raise InputError("problem file must be an object with key 'f'")
        f_text = data["f"]
        g_texts = list(data.get("constraints", [])) + extra_constraints
        n = n or data.get("n")
    else:
        f_text, g_texts = source, list(extra_constraints)
    if n is None:
        n = max(infer_variable_count(t) for t in [f_text, *g_texts])
    f = parse(f_text, int(n))
    gs = [parse(t, int(n)) for t in g_texts]
    echo = {"f": f_text, "constraints": g_texts, "n": int(n)}
    return f, gs, echo


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {what} {path}: {exc}") from exc


def _triangulation(arg: str | None) -> Triangulation | None:
    if arg is None or arg == "auto":
        return None
    data = _read_json(arg, "triangulation")
    if isinstance(data, dict):
        data = data.get("simplices", data)
    return Triangulation.from_simplices(data)


def _weights(arg: str) -> tuple[dict | str, int | None]:
    """Returns (weights, optimisation budget)."""
    if arg == "equal":
        return "equal", None
    if arg.startswith("optimize:"):
        try:
            return "equal", int(arg.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"bad budget in {arg!r}") from exc
    data = _read_json(arg, "weights")
    try:
        return {tuple(item["exponent"]): item["split"] for item in data}, None
    except (TypeError, KeyError) as exc:
        raise InputError("weights file must be a list of {exponent, split} objects") from exc


def _target(arg: str | None) -> tuple[int, ...] | None:
    if arg is None:
        return None
    try:
        return tuple(int(v) for v in arg.replace("(", "").replace(")", "").split(","))
    except ValueError as exc:
        raise InputError(f"bad target {arg!r}; expected comma-separated integers") from exc


# ----------------------------------------------------------------- output


def _num(x: float | None):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf"


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    return f"{float(x):.6g}"


def _emit(report: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def _validate(args, f, gs, bound) -> dict | None:
    if not args.validate or bound is None:
        return None
    ok = validate_bound(f, gs, bound, n_samples=args.samples, seed=args.seed)
    return {"passed": ok, "samples": args.samples, "seed": args.seed}


def _save(args, report: dict, cert: SoncCertificate | None) -> None:
    if args.save_certificate and cert is not None:
        Path(args.save_certificate).write_text(
            json.dumps({"problem": report["input"], "bound": report["bound"], "certificate": cert.to_json()}, indent=2)
        )


# --------------------------------------------------------------- commands


def cmd_analyze(args) -> int:
    f, _, echo = _read_problem(args.input, args.n, [])
    f = scale_exponents(f, args.scale_exponents)
    sa = analyze_support(f)
    status, detail = "ST-polynomial", ""
    try:
        st = st_form(f)
        if not st.tail:
            status = "sum of monomial squares"
        detail = f"{len(st.tail)} tail term{'s' if len(st.tail) != 1 else ''}"
    except NotSimplex:
        status = "not ST: vertex set is not a simplex"
    except NotSTForm as exc:
        status = f"not ST: {exc}"
    report = {
        "command": "analyze",
        "input": echo,
        "vertices": [list(v) for v in sa.vertices],
        "non_vertex_support": [list(v) for v in sa.delta_A],
        "tail_support": [list(v) for v in sa.delta_f],
        "clubsuit": sa.clubsuit_ok,
        "status": status,
    }
    lines = [
        f"polynomial: {render(f)}",
        f"vertices: {sa.vertices}",
        f"non-vertex exponents: {sa.delta_A}",
        f"tail exponents: {sa.delta_f}",
        f"vertex condition (even, positive): {'yes' if sa.clubsuit_ok else 'no'}",
        f"status: {status}" + (f", {detail}" if detail and status == "ST-polynomial" else ""),
    ]
    _emit(report, args.json, lines)
    return EXIT_OK


def cmd_minimize(args) -> int:
    f, _, echo = _read_problem(args.input, args.n, [])
    f = scale_exponents(f, args.scale_exponents)
    target = _target(args.target)
    tri = _triangulation(args.triangulation)
    weights, budget = _weights(args.weights)
    t0 = time.perf_counter()
    use_cover = tri is not None or args.weights != "equal"
    unbounded = None
    if not use_cover:
        try:
            st_form(f, target)
        except NotSimplex:
            use_cover = True
        except ClubsuitViolated as exc:
            unbounded = str(exc)
    report: dict[str, Any] = {"command": "minimize", "input": echo}
    lines = []
    if unbounded is not None:
        # an odd or negative vertex term makes f unbounded below
        report.update(program_kind="unconstrained-gp", heuristic=False, bound=_num(-math.inf),
                      certificate=None, note=unbounded)
        lines.append(f"bound: -inf ({unbounded})")
        cert, lower = None, None
    elif not use_cover:
        origin = tuple([0] * f.n)
        if target is None or target == origin:
            bound, cert = global_bound(f)
            kind_label = "lower bound on min f"
        else:
            r = sonc_bound(f, target)
            bound, cert = r.bound, r.certificate
            kind_label = f"lower bound on the coefficient slack at {target}"
        report.update(program_kind="unconstrained-gp", heuristic=False, bound=_num(bound),
                      certificate=cert.to_json() if cert else None)
        lines.append(f"bound ({kind_label}): {_fmt(bound)}")
        lines.append(f"certificate: {'verified' if cert and verify_certificate(f, cert) else 'none'}")
        lower = bound if target is None or target == tuple([0] * f.n) else None
    else:
        dec = decompose(f, tri, weights)
        targets = [target] * dec.k if target is not None else default_targets(dec)
        if budget is not None:
            dec, res = improve_weights(f, dec, targets, budget)
        else:
            res = bound_via_cover(f, dec, targets)
        report.update(
            program_kind="cover",
            heuristic=res.heuristic,
            bound=_num(res.bound),
            m_stars=[_num(m) for m in res.m_stars],
            targets=[list(t) for t in targets],
            requirements=[{"exponent": list(e), "coefficient": _num(v)} for e, v in res.requirements.items()],
            triangulation=dec.triangulation.to_json(),
            weights=dec.weights_json(),
            pieces=[render(g) for g in dec.pieces],
            certificate=res.certificate.to_json() if res.certificate else None,
        )
        cert = res.certificate
        lower = res.bound
        lines.append(f"triangulation: {dec.triangulation.to_json()}")
        for i, (g, t, m) in enumerate(zip(dec.pieces, targets, res.m_stars)):
            lines.append(f"piece {i + 1}: {render(g)}  target {t}  m* = {_fmt(m)}")
        if res.bound is not None:
            lines.append(f"bound (lower bound on min f): {_fmt(res.bound)}")
        for e, v in res.requirements.items():
            lines.append(f"required coefficient at {e}: {_fmt(v)}")
        if res.heuristic:
            lines.append("weights: optimised (heuristic)")
    val = _validate(args, f, [], lower)
    if val is not None:
        report["validation"] = val
        lines.append(f"oracle validation: {'passed' if val['passed'] else 'FAILED'}")
    if args.timing:
        report["wall_time"] = time.perf_counter() - t0
        lines.append(f"wall time: {report['wall_time']:.3f} s")
    _save(args, report, cert)
    _emit(report, args.json, lines)
    return EXIT_OK


def cmd_minimize_constrained(args) -> int:
    f, gs, echo = _read_problem(args.input, args.n, args.constraint or [])
    f = scale_exponents(f, args.scale_exponents)
    gs = [scale_exponents(g, args.scale_exponents) for g in gs]
    p = ConstrainedProblem(f, gs)
    target = _target(args.target)
    t0 = time.perf_counter()
    use_cover = args.cover
    if not use_cover:
        try:
            build_g_structure(p, target)
        except NotSimplex:
            use_cover = True
        except NotSTForm:
            pass
    report: dict[str, Any] = {"command": "minimize-constrained", "input": echo}
    lines = []
    if use_cover:
        tri = _triangulation(args.triangulation)
        weights = None
        if args.weights not in ("equal",):
            w, _ = _weights(args.weights)
            weights = w if isinstance(w, dict) else None
        strategy = "snp" if args.strategy == "snp" else "gp"
        r = constrained_cover_bound(p, tri, weights, strategy)
        report.update(
            program_kind="cover-constrained", heuristic=r.heuristic, bound=_num(r.bound),
            mu=[_num(m) for m in r.mu], m_stars=[_num(m) for m in r.m_stars],
            program_bound=_num(r.program_bound), probe_bound=_num(r.probe_bound),
            triangulation=r.triangulation.to_json(),
            certificate=r.certificate.to_json() if r.certificate else None,
        )
        cert, bound = r.certificate, r.bound
        lines.append(f"triangulation: {r.triangulation.to_json()}")
        lines.append(f"m*: {[_fmt(m) for m in r.m_stars]}")
    else:
        r = lower_bound(p, args.strategy, target)
        report.update(
            program_kind=r.program_kind, heuristic=r.heuristic, bound=_num(r.bound), gamma=_num(r.gamma),
            mu=[_num(m) for m in r.mu], program_bound=_num(r.program_bound), probe_bound=_num(r.probe_bound),
            certificate=r.certificate.to_json() if r.certificate else None,
            iterations=r.solve.iterations if r.solve else 0,
        )
        if r.message:
            report["note"] = r.message
            lines.append(f"note: {r.message}")
        cert, bound = r.certificate, r.bound
        lines.append(f"gamma: {_fmt(r.gamma)}")
    lines.append(f"mu: {[_fmt(m) for m in report['mu']]}")
    lines.append(f"program bound: {_fmt(r.program_bound)}   mu=0 probe: {_fmt(r.probe_bound)}")
    lines.append(f"bound (lower bound on f over K): {_fmt(bound)}" + ("  [local, heuristic]" if r.heuristic else ""))
    val = _validate(args, f, gs, bound)
    if val is not None:
        report["validation"] = val
        lines.append(f"oracle validation: {'passed' if val['passed'] else 'FAILED'}")
    if args.timing:
        report["wall_time"] = time.perf_counter() - t0
        lines.append(f"wall time: {report['wall_time']:.3f} s")
    _save(args, report, cert)
    _emit(report, args.json, lines)
    return EXIT_OK


def cmd_verify(args) -> int:
    data = _read_json(args.certificate, "certificate")
    cert_data = data.get("certificate", data) if isinstance(data, dict) else None
    if cert_data is None:
        raise InputError("certificate file has no certificate")
    try:
        cert = SoncCertificate.from_json(cert_data)
    except (KeyError, TypeError, ValueError, SoncError) as exc:
        raise InputError(f"malformed certificate: {exc}") from exc
    f, gs, _ = _read_problem(args.problem, args.n, args.constraint or [])
    f = scale_exponents(f, args.scale_exponents)
    gs = [scale_exponents(g, args.scale_exponents) for g in gs]
    mu = cert.multipliers or ()
    ok = len(cert.target) == f.n
    if ok and mu:
        ok = len(mu) == len(gs)
        if ok:
            f = ConstrainedProblem(f, gs).G(list(mu))
    ok = ok and verify_certificate(f, cert, args.tol)
    report = {"command": "verify", "verified": ok, "bound": _num(cert.shift), "target": list(cert.target)}
    line = (f"certificate verified: certified bound {_fmt(cert.shift)} at exponent {cert.target}"
            if ok else "certificate REJECTED")
    _emit(report, args.json, [line])
    return EXIT_OK if ok else EXIT_VERIFY


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soncgp", description="Certified polynomial lower bounds via circuit polynomials.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, problem=True):
        if problem:
            p.add_argument("input", help="problem JSON file or polynomial text, e.g. '1 + x1^4*x2^2 - 3*x1^2*x2^2'")
        p.add_argument("--n", type=int, help="number of variables (inferred from x<k> names if omitted)")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--scale-exponents", type=int, default=1, metavar="K", help="multiply every exponent by K")

    def solving(p):
        p.add_argument("--target", help="target vertex, e.g. '0,0' (default: the constant term)")
        p.add_argument("--triangulation", help="JSON list of simplices (each a list of exponents) or 'auto'")
        p.add_argument("--weights", default="equal", help="equal | FILE.json | optimize:BUDGET")
        p.add_argument("--validate", action="store_true", help="check the bound against sampling")
        p.add_argument("--samples", type=int, default=4096, help="oracle sample count")
        p.add_argument("--seed", type=int, default=0, help="oracle seed")
        p.add_argument("--save-certificate", metavar="FILE", help="write the certificate to FILE")
        p.add_argument("--timing", action="store_true", help="report wall time")

    p = sub.add_parser("analyze", help="support, vertices and ST status")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("minimize", help="global lower bound")
    common(p)
    solving(p)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("minimize-constrained", help="lower bound over {g_i >= 0}")
    common(p)
    solving(p)
    p.add_argument("-g", "--constraint", action="append", help="constraint polynomial g (g >= 0); repeatable")
    p.add_argument("--strategy", choices=("gp", "snp", "auto"), default="auto")
    p.add_argument("--cover", action="store_true", help="split G(mu) over a triangulation")
    p.set_defaults(func=cmd_minimize_constrained)

    p = sub.add_parser("verify", help="re-check a saved certificate")
    p.add_argument("certificate", help="certificate JSON file")
    p.add_argument("problem", help="problem JSON file or polynomial text")
    common(p, problem=False)
    p.add_argument("-g", "--constraint", action="append", help="constraint polynomial (for constrained certificates)")
    p.add_argument("--tol", type=float, default=1e-7, help="reconstruction tolerance")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InputError, SoncError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command line: ``wresidue density | verify | moments``.

Exit codes: 0 success, 1 unadjudicated mismatch, 2 bad flags, 3 bad context
file, 4 pipeline failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .actions import (AGREES, KINDS, TARGETS, TripleSpec, VerificationReport, compare_with_paper,
                      decompose, invariant_basis, pipeline, wres_density)
from .cosphere import Density, mc_moment_oracle, sphere_moment, sphere_volume
from .jets import ContextError, CurvatureError, JetContext, JetOrderError, random_context
from .symexpr import Expr, format_key

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_MISMATCH, EXIT_FLAGS, EXIT_CONTEXT, EXIT_PIPELINE = 0, 1, 2, 3, 4

SUITES = {
    "lemmas": ("fd2f_symbol", "fd2f_parametrix", "cxd2cx_symbol", "cxd2cx_parametrix",
               "clifford_traces", "cosphere_integrals"),
    "theorems": ("fd2f_power_symbol", "cxd2cx_power_symbol", "fd2f_density", "cxd2cx_density",
                 "kkw_density", "fd2f_m2_density"),
}

# moments sampled by the oracle suite
ORACLE_MOMENTS = ((1, 1), (1, 2), (1, 1, 2, 2), (1, 1, 1, 1))


class ContextFileError(ValueError):
    pass


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# serialization

def rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def expr_rows(e: Expr) -> list:
    return sorted([format_key(k), rational(c)] for k, c in e.items())


def density_rows(d: Density) -> list:
    return [[k, rational(c)] for k, c in d.items()]


def report_to_json(r: VerificationReport) -> dict:
    diff = {}
    for label, v in sorted(r.diff.items()):
        diff[label] = density_rows(v) if isinstance(v, Density) else expr_rows(v)
    return {"target": r.target, "m": r.m, "status": r.status, "oracleStatus": r.oracle_status,
            "erratum": r.erratum, "diff": diff}


def emit_document(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


def parse_document(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("schemaVersion") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schemaVersion {doc.get('schemaVersion')!r}")
    return doc


def _document(command: str, args: dict, **body) -> dict:
    doc = {"schemaVersion": SCHEMA_VERSION, "version": __version__,
           "command": {"name": command, "args": args}, "results": [], "reports": []}
    doc.update(body)
    return doc


# ---------------------------------------------------------------------------
# context files

def load_context(source: str, m: int) -> JetContext:
    """``generic`` or a JSON file ``{m, riem, fJets, xJets}``; absent parts stay symbolic.

    ``riem`` is a list of ``[a, b, c, d, value]``, ``fJets`` a list of
    ``[[derivative indices], value]`` and ``xJets`` a list of
    ``[i, [derivative indices], value]``; values are integers or "p/q" strings.
    """
    if source == "generic":
        return JetContext(m)
    try:
        raw = json.loads(Path(source).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ContextFileError(f"cannot read context file {source}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ContextFileError("context file must hold a JSON object")
    if raw.get("mode") in ("generic", "symbolic"):
        raw = {"m": raw.get("m", m)}
    if raw.get("m", m) != m:
        raise ContextFileError(f"context file is for m={raw['m']} but --m {m} was given")
    try:
        riem = None if raw.get("riem") is None else {tuple(row[:4]): Fraction(row[4]) for row in raw["riem"]}
        fj = None if raw.get("fJets") is None else {tuple(d): Fraction(v) for d, v in raw["fJets"]}
        xj = None if raw.get("xJets") is None else {(i, tuple(d)): Fraction(v) for i, d, v in raw["xJets"]}
    except (TypeError, ValueError, IndexError, ZeroDivisionError) as exc:
        raise ContextFileError(f"malformed context entry: {exc}") from exc
    try:
        return JetContext(m, riem, fj, xj)
    except (CurvatureError, ContextError, JetOrderError) as exc:
        raise ContextFileError(str(exc)) from exc


# ---------------------------------------------------------------------------
# LaTeX

def _latex_var(name: str) -> str:
    if name.startswith("R["):
        return "R_{" + name[2:-1].replace(",", "") + "}"
    base, _, deriv = name.partition("_;")
    if base == "XN":
        base = "|X|^2"
    elif base.startswith("X"):
        base = "X^{" + base[1:] + "}"
    elif base == "trid":
        base = r"\mathrm{tr}[\mathrm{id}]"
    if deriv:
        base = (f"({base})" if base.startswith("|") else base) + "_{;" + deriv.replace(",", "") + "}"
    return base


def _latex_monomial(key: str) -> str:
    if key == "1":
        return ""
    out = []
    for tok in key.split(" "):
        name, _, p = tok.partition("^")
        v = _latex_var(name)
        if p:
            v = (f"({v})" if v.startswith("|") or "_{;" in v else v) + "^{" + p + "}"
        out.append(v)
    return r"\,".join(out)


def _latex_coeff(q: Fraction, first: bool) -> str:
    sign = "-" if q < 0 else ("" if first else "+")
    a = abs(q)
    body = str(a.numerator) if a.denominator == 1 else rf"\frac{{{a.numerator}}}{{{a.denominator}}}"
    return f"{sign}{body}"


INVARIANT_LATEX = {
    "type1": {"s": "f^{{{a}}}\\,s", "lap_f": "f^{{{b}}}\\,\\Delta(f)", "grad_f_sq": "f^{{{c}}}\\,|\\nabla f|^2"},
    "type2": {"s": "|X|^{{{a}}}\\,s", "lap_Ninv": "|X|^{{{d}}}\\,\\Delta(|X|^{{-2}})",
              "grad_Ninv_sq": "|X|^{{{e}}}\\,|\\nabla(|X|^{{-2}})|^2", "grad_X_sq": "|X|^{{{g}}}\\,\\sum_j|\\nabla_{{e_j}}X|^2"},
    "unperturbed": {"s": "s"},
}


def latex_density(rows: list, m: int, evaluated: float | None = None) -> str:
    """Math-mode fragment ``2^m Vol(S^{n-1}) ( ... )`` from ``[(latex monomial, coefficient)]``."""
    terms = []
    for i, (mono, q) in enumerate(rows):
        c = _latex_coeff(q, i == 0)
        if mono and abs(q) == 1:
            c = c[:-1]
        terms.append(c + (r"\," + mono if mono and c not in ("", "-", "+") else mono))
    body = " ".join(terms) or "0"
    if evaluated is not None:
        return rf"{evaluated!r}\left({body}\right)"
    return rf"2^{{{m}}}\,\mathrm{{Vol}}(S^{{{2 * m - 1}}})\left({body}\right)"


# ---------------------------------------------------------------------------
# commands

def _invariants(kind: str, ctx: JetContext, d: Density) -> list | None:
    """Coefficients on the invariant basis; only meaningful with symbolic jets."""
    if ctx.mode != "symbolic":
        return None
    coeffs, rest = decompose(d, invariant_basis(ctx, kind))
    if not rest.is_zero():
        return None
    return [[name, coeffs[name]] for name in invariant_basis(ctx, kind)]


def cmd_density(args) -> tuple[int, str]:
    if args.m < 2:
        raise UsageError("--m must be >= 2")
    ctx = load_context(args.context, args.m)
    m = args.m
    d = wres_density(TripleSpec(args.triple, ctx))
    tr_id = 2 ** m
    if args.eval_vol:
        prefactor = {"volSphere": False, "trId": tr_id, "value": repr(tr_id * sphere_volume(2 * m))}
    else:
        prefactor = {"volSphere": True, "trId": "2^m"}
    inv = _invariants(args.triple, ctx, d)
    results = [{"termKey": k, "coefficient": rational(c), "prefactor": prefactor} for k, c in d.items()]
    invariants = None if inv is None else [{"name": k, "coefficient": rational(c)} for k, c in inv]
    if args.format == "latex":
        evaluated = tr_id * sphere_volume(2 * m) if args.eval_vol else None
        if inv is not None:
            exps = dict(a=-2 * m + 2, b=-2 * m + 1, c=-2 * m, d=-2 * m + 4, e=-2 * m + 6, g=-2 * m)
            rows = [(INVARIANT_LATEX[args.triple][k].format(**exps), c) for k, c in inv if c]
        else:
            rows = [(_latex_monomial(k), c) for k, c in d.items()]
        return EXIT_OK, latex_density(rows, m, evaluated) + "\n"
    doc = _document("density", {"triple": args.triple, "m": m, "context": args.context,
                                "evalVol": bool(args.eval_vol)},
                    results=results, invariants=invariants)
    return EXIT_OK, emit_document(doc)


def _parse_m_list(text: str | None) -> list[int]:
    if not text:
        return [2, 3, 4]
    try:
        ms = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"--m-list must be comma separated integers: {text!r}") from exc
    if not ms:
        return [2, 3, 4]
    if any(m < 2 for m in ms):
        raise UsageError("every m in --m-list must be >= 2")
    return ms


def _verify_context(kind: str, m: int, seed: int) -> JetContext:
    return JetContext(m) if kind == "generic" else random_context(m, seed=seed)


def _moment_check(indices: tuple, n: int, samples: int, seed: int) -> dict:
    exact = sphere_moment(indices, n)
    est, err = mc_moment_oracle(indices, n, samples=samples, seed=seed)
    ok = abs(est - float(exact)) <= 3 * err if err > 0 else est == float(exact)
    return {"name": f"sphere moment {list(indices)} n={n}", "exact": rational(exact),
            "estimate": repr(est), "stderr": repr(err), "passed": bool(ok)}


def _oracle_checks(ms: list[int], seed: int, samples: int, context: str) -> list[dict]:
    checks = []
    for n in (4, 6):
        for idx in ORACLE_MOMENTS:
            checks.append(_moment_check(idx, n, samples, seed))
    for m in ms:
        ctx = _verify_context(context, m, seed)
        for kind in KINDS:
            P = pipeline(kind, ctx)
            checks.append({"name": f"power symbol equals iterated composition ({kind}, m={m})",
                           "passed": P.power_symbol == P.power_symbol_oracle})
            checks.append({"name": f"parametrix residual vanishes at orders 0,-1,-2 ({kind}, m={m})",
                           "passed": all(P.residual.part(k).is_zero() for k in (0, -1, -2))})
    return checks


def cmd_verify(args) -> tuple[int, str]:
    ms = _parse_m_list(args.m_list)
    names = []
    if args.suite in ("lemmas", "all"):
        names += SUITES["lemmas"]
    if args.suite in ("theorems", "all"):
        names += SUITES["theorems"]
    reports = []
    for m in ms:
        ctx = _verify_context(args.context, m, args.seed)
        for t in names:
            if t == "fd2f_m2_density" and m != 2:
                continue
            reports.append(compare_with_paper(ctx, t))
    checks = []
    if args.suite in ("oracles", "all"):
        checks = _oracle_checks(ms, args.seed, args.mc_samples, args.context)
    reports.sort(key=lambda r: (TARGETS.index(r.target), r.m))
    ok = all(r.adjudicated for r in reports) and all(c["passed"] for c in checks)
    doc = _document("verify", {"suite": args.suite, "mList": ms, "seed": args.seed,
                               "context": args.context, "mcSamples": args.mc_samples},
                    reports=[report_to_json(r) for r in reports], checks=checks)
    return (EXIT_OK if ok else EXIT_MISMATCH), emit_document(doc)


def cmd_moments(args) -> tuple[int, str]:
    if args.n % 2 or args.n < 4:
        raise UsageError(f"--n must be an even integer >= 4, got {args.n}")
    try:
        idx = tuple(int(t) for t in args.indices.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"--indices must be comma separated integers: {args.indices!r}") from exc
    if any(not 1 <= i <= args.n for i in idx):
        raise UsageError(f"indices must lie in 1..{args.n}")
    check = _moment_check(idx, args.n, args.mc_samples, args.seed)
    key = " ".join(f"xi{i}" for i in sorted(idx)) or "1"
    results = [{"termKey": key, "coefficient": check["exact"], "prefactor": {"volSphere": True, "trId": 1}}]
    doc = _document("moments", {"indices": list(idx), "n": args.n, "mcSamples": args.mc_samples,
                                "seed": args.seed},
                    results=results, monteCarlo={k: check[k] for k in ("estimate", "stderr", "passed")})
    return EXIT_OK, emit_document(doc)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wresidue", description="Residue densities of perturbed Dirac Laplacians.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", help="residue density of one operator")
    d.add_argument("--triple", choices=KINDS, required=True)
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--context", default="generic", help="JSON context file or 'generic' (default)")
    d.add_argument("--format", choices=("json", "latex"), default="json")
    d.add_argument("--eval-vol", action="store_true", help="substitute Vol(S^{n-1}) and tr[id] numerically")
    d.set_defaults(func=cmd_density)

    v = sub.add_parser("verify", help="compare engine output with the closed forms")
    v.add_argument("--suite", choices=("lemmas", "theorems", "oracles", "all"), default="all")
    v.add_argument("--m-list", default="", help="comma separated m values (default 2,3,4)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--context", choices=("random", "generic"), default="random",
                   help="random rational jets from --seed, or fully symbolic jets")
    v.add_argument("--mc-samples", type=int, default=10**5)
    v.set_defaults(func=cmd_verify)

    mo = sub.add_parser("moments", help="exact and Monte Carlo sphere moments")
    mo.add_argument("--indices", required=True)
    mo.add_argument("--n", type=int, required=True)
    mo.add_argument("--mc-samples", type=int, default=10**5)
    mo.add_argument("--seed", type=int, default=0)
    mo.set_defaults(func=cmd_moments)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, text = args.func(args)
    except UsageError as exc:
        print(f"wresidue: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except ContextFileError as exc:
        print(f"wresidue: context error: {exc}", file=sys.stderr)
        return EXIT_CONTEXT
    except Exception as exc:  # anything raised inside the pipeline
        print(f"wresidue: pipeline error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

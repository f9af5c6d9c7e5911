"""Command-line front end: JSON documents, TSV tables and exit codes.

Exit codes are 0 when every check passes, 1 when a check fails and 2 for
usage, parse or budget errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources

from .cohft import build_I, check_axioms
from .formal import (
    FormalLManifold,
    TruncatedSuperSeries,
    lie_condition_residual,
    operations_to_potential,
    potential_to_operations,
)
from .graphcx import cohomology_dimension
from .linfty import LinftyStructure, check_all_jacobi, jacobi_residual, validate_structure
from .superlin import ANTISYMMETRIC, SYMMETRIC, PairingForm, SuperSpace
from .treespace import h_dimension, metric_stable_tree_count, presentation_check

FORMAT = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
BUNDLED_PREFIX = "bundled:"

DEFAULT_BUDGET = {"max_p": 5, "max_w": 4, "max_S": 5, "max_dim": 4, "max_n": 4, "max_genus": 1}


class DocumentError(ValueError):
    pass


class BudgetError(ValueError):
    pass


def fmt_rational(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s, where: str) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise DocumentError(f"{where}: expected a rational string like \"p/q\", got {s!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise DocumentError(f"{where}: bad rational {s!r}") from exc


def _require(doc: dict, key: str, kind):
    if key not in doc:
        raise DocumentError(f"missing field {key!r}")
    if not isinstance(doc[key], kind):
        raise DocumentError(f"field {key!r} has the wrong type")
    return doc[key]


def _space(entries, key: str) -> SuperSpace:
    labels, pars = [], []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or key not in e or e.get("parity") not in (0, 1):
            raise DocumentError(f"entry {i} needs {key!r} and a parity 0 or 1")
        labels.append(str(e[key]))
        pars.append(e["parity"])
    try:
        return SuperSpace(tuple(labels), tuple(pars))
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def _matrix(rows, dim: int, name: str) -> list[list[Fraction]]:
    if len(rows) != dim or any(not isinstance(r, list) or len(r) != dim for r in rows):
        raise DocumentError(f"{name} must be a {dim}x{dim} matrix")
    return [[parse_rational(x, f"{name}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(rows)]


def load_json(text: str, source: str = "<input>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise DocumentError(f"{source}: top level must be an object")
    if doc.get("format") != FORMAT:
        raise DocumentError(f"{source}: unsupported or missing \"format\" (expected {FORMAT})")
    if doc.get("kind") not in ("algebra", "potential"):
        raise DocumentError(f"{source}: \"kind\" must be \"algebra\" or \"potential\"")
    return doc


def parse_algebra(doc: dict) -> LinftyStructure:
    """AlgebraDocument -> structure; antisymmetry and cyclicity are checked by ``verify``."""
    space = _space(_require(doc, "basis", list), "label")
    g = _matrix(_require(doc, "pairing", list), space.dim, "pairing")
    ops_doc = _require(doc, "operations", dict)
    arities = []
    for k in ops_doc:
        if not str(k).isdigit():
            raise DocumentError(f"operation arity {k!r} is not a non-negative integer")
        arities.append(int(k))
    max_arity = doc.get("max_arity", max(arities, default=0))
    if not isinstance(max_arity, int) or max_arity < max(arities, default=0):
        raise DocumentError("max_arity must be an integer covering every listed arity")
    ops = [dict() for _ in range(max_arity + 1)]
    for k, entries in ops_doc.items():
        n = int(k)
        for i, e in enumerate(entries):
            where = f"operations[{k}][{i}]"
            if not isinstance(e, list) or len(e) != n + 2 or not all(isinstance(x, int) for x in e[:-1]):
                raise DocumentError(f"{where}: expected {n} input indices, an output index and a coefficient")
            if not all(0 <= x < space.dim for x in e[:-1]):
                raise DocumentError(f"{where}: index out of range")
            key = tuple(e[:-1])
            if key in ops[n]:
                raise DocumentError(f"{where}: duplicate entry {key}")
            ops[n][key] = parse_rational(e[-1], where)
    try:
        return LinftyStructure(space, PairingForm(space, g, SYMMETRIC), max_arity, tuple(ops))
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def parse_potential(doc: dict) -> FormalLManifold:
    coords = _space(_require(doc, "variables", list), "name")
    w = _matrix(_require(doc, "omega", list), coords.dim, "omega")
    D = _require(doc, "truncation", int)
    terms = []
    for i, e in enumerate(_require(doc, "terms", list)):
        where = f"terms[{i}]"
        if not isinstance(e, list) or len(e) != 2 or not isinstance(e[0], list) or len(e[0]) != coords.dim:
            raise DocumentError(f"{where}: expected [exponent list of length {coords.dim}, coefficient]")
        if not all(isinstance(x, int) and x >= 0 for x in e[0]):
            raise DocumentError(f"{where}: exponents must be non-negative integers")
        terms.append((tuple(e[0]), parse_rational(e[1], where)))
    try:
        phi = TruncatedSuperSeries.from_terms(coords, D, terms)
        return FormalLManifold(coords, PairingForm(coords, w, ANTISYMMETRIC), phi)
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def algebra_document(L: LinftyStructure, name: str = "", truncation: int | None = None) -> dict:
    doc = {"format": FORMAT, "kind": "algebra", "name": name}
    if truncation is not None:
        doc["truncation"] = truncation
    doc["basis"] = [{"label": l, "parity": p} for l, p in zip(L.space.labels, L.space.parities)]
    doc["pairing"] = [[fmt_rational(x) for x in row] for row in L.pairing.matrix]
    doc["max_arity"] = L.max_arity
    doc["operations"] = {
        str(n): [list(k) + [fmt_rational(c)] for k, c in sorted(L.op(n).items())]
        for n in range(L.max_arity + 1) if L.op(n)
    }
    return doc


def potential_document(M: FormalLManifold, name: str = "") -> dict:
    return {
        "format": FORMAT,
        "kind": "potential",
        "name": name,
        "variables": [{"name": l, "parity": p} for l, p in zip(M.coordinates.labels, M.coordinates.parities)],
        "omega": [[fmt_rational(x) for x in row] for row in M.omega.matrix],
        "truncation": M.truncation,
        "terms": [[list(m), fmt_rational(c)] for m, c in M.potential.coeffs],
    }


def _render(x, depth: int) -> str:
    pad = " " * depth
    if isinstance(x, dict):
        if all(not isinstance(v, (dict, list)) for v in x.values()) and len(x) <= 4:
            return json.dumps(x, separators=(", ", ": "))
        body = ",\n".join(f"{pad} {json.dumps(k)}: {_render(v, depth + 1)}" for k, v in x.items())
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(x, list) and any(isinstance(v, (dict, list)) for v in x):
        body = ",\n".join(f"{pad} {_render(v, depth + 1)}" for v in x)
        return "[\n" + body + "\n" + pad + "]"
    return json.dumps(x, separators=(", ", ": "))


def dumps(doc) -> str:
    """Canonical serialization, so equal documents are byte-identical; scalar lists stay on one line."""
    return _render(doc, 0) + "\n"


def read_document(path: str) -> dict:
    if path.startswith(BUNDLED_PREFIX):
        name = path[len(BUNDLED_PREFIX):]
        try:
            text = resources.files("lmanifold").joinpath("data", name).read_text()
        except (FileNotFoundError, IsADirectoryError) as exc:
            raise DocumentError(f"no bundled document named {name!r}") from exc
    elif path == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise DocumentError(f"cannot read {path}: {exc.strerror}") from exc
    return load_json(text, path)


def load_budget(env=None) -> dict:
    """Defaults overridden by LMAN_BUDGET: a JSON file path or ``key=value,...``."""
    env = os.environ if env is None else env
    budget = dict(DEFAULT_BUDGET)
    raw = env.get("LMAN_BUDGET", "").strip()
    if not raw:
        return budget
    if os.path.isfile(raw):
        try:
            with open(raw) as fh:
                updates = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise BudgetError(f"cannot read budget file {raw}: {exc}") from exc
        if not isinstance(updates, dict):
            raise BudgetError("budget file must hold a JSON object")
    else:
        updates = {}
        for item in raw.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise BudgetError(f"bad LMAN_BUDGET item {item!r}; expected key=value")
            updates[key.strip()] = val.strip()
    for key, val in updates.items():
        if key not in budget:
            raise BudgetError(f"unknown budget key {key!r}; known keys: {', '.join(sorted(budget))}")
        try:
            budget[key] = int(val)
        except (TypeError, ValueError) as exc:
            raise BudgetError(f"budget {key} must be an integer") from exc
    return budget


def enforce(budget: dict, key: str, value: int, what: str) -> None:
    if value > budget[key]:
        raise BudgetError(f"refusing: {what} = {value} exceeds budget {key} = {budget[key]} (raise it via LMAN_BUDGET)")


def parse_range(text: str) -> list[int]:
    """``"3"``, ``"1-4"`` or ``"1..4"`` as an inclusive list."""
    lo, sep, hi = text.replace("..", "-").partition("-")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc
    if a < 0 or b < a:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return list(range(a, b + 1))


def _cells(fn, args: list, jobs: int) -> list:
    # pool.map keeps the submission order, so output is deterministic
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, args))
    return [fn(a) for a in args]


def emit(rows: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        out.write(dumps(rows))
        return
    if rows:
        cols = list(rows[0])
        out.write("\t".join(cols) + "\n")
        for r in rows:
            out.write("\t".join(_cell_text(r[c]) for c in cols) + "\n")


def _cell_text(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, Fraction):
        return fmt_rational(v)
    return str(v)


# verify

def verify_algebra(L: LinftyStructure, up_to: int | None, jobs: int) -> dict:
    problems = validate_structure(L)
    jac = check_all_jacobi(L, jobs=jobs, up_to=up_to)
    report = {
        "kind": "algebra",
        "dimension": L.dim,
        "max_arity": L.max_arity,
        "structure_violations": len(problems),
        "first_violation": problems[0] if problems else None,
        "jacobi_certified_up_to": jac.certified_up_to,
        "jacobi_failing_arities": jac.failing,
        "crosscheck_mismatches": len(jac.crosscheck_mismatches),
    }
    first = None
    if jac.failing:
        n = jac.failing[0]
        key, c = min(jacobi_residual(L, n).items())
        first = {"arity": n, "inputs": list(key[:-1]), "output": key[-1], "residual": fmt_rational(c)}
    report["first_failing_relation"] = first
    report["passed"] = not problems and jac.passed
    return report


def verify_potential(M: FormalLManifold, jobs: int) -> dict:
    res = lie_condition_residual(M, jobs=jobs)
    first = None
    for k, r in enumerate(res.residuals):
        if r:
            mono, c = r.coeffs[0]
            first = {"coordinate": M.coordinates.labels[k], "monomial": list(mono), "coefficient": fmt_rational(c)}
            break
    const = res.constant
    return {
        "kind": "potential",
        "dimension": M.dim,
        "truncation": M.truncation,
        "certified_degree": res.certified_degree,
        "residual_vanishes": res.vanishes,
        "first_nonzero_residual": first,
        "omega_QQ": fmt_rational(const) if const is not None else None,
        "isotropic": res.vanishes and not res.bracket,
        "passed": res.vanishes,
    }


def cmd_verify(args) -> int:
    doc = read_document(args.input)
    if doc["kind"] == "algebra":
        report = verify_algebra(parse_algebra(doc), args.truncation, args.jobs)
    else:
        M = parse_potential(doc)
        if args.truncation is not None:
            if args.truncation > M.truncation:
                raise DocumentError(f"--truncation {args.truncation} exceeds the document truncation {M.truncation}")
            M = FormalLManifold(M.coordinates, M.omega, M.potential.truncate(args.truncation))
        report = verify_potential(M, args.jobs)
    report = {"name": doc.get("name", ""), **report}
    emit_report(report, args.format, sys.stdout)
    if not report["passed"]:
        if report["kind"] == "algebra" and report["jacobi_failing_arities"]:
            print(f"Jacobi relation fails at arity {report['jacobi_failing_arities'][0]}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def emit_report(report: dict, fmt: str, out) -> None:
    if fmt == "json":
        out.write(dumps(report))
    else:
        out.write("key\tvalue\n")
        for k, v in report.items():
            out.write(f"{k}\t{json.dumps(v) if isinstance(v, (dict, list)) or v is None else _cell_text(v)}\n")


# convert

def _to_ops(M: FormalLManifold, N: int | None) -> LinftyStructure:
    N = M.truncation - 1 if N is None else N
    if M.truncation < N + 1:
        raise DocumentError(f"truncation {M.truncation} is insufficient for arity {N}; the minimal sufficient truncation is {N + 1}")
    return potential_to_operations(M, N)


def _to_potential(L: LinftyStructure, D: int | None) -> FormalLManifold:
    D = L.max_arity + 1 if D is None else D
    if D < L.max_arity + 1:
        raise DocumentError(f"truncation {D} is insufficient for max arity {L.max_arity}; the minimal sufficient truncation is {L.max_arity + 1}")
    return operations_to_potential(L, D)


def cmd_convert(args) -> int:
    doc = read_document(args.input)
    name = doc.get("name", "")
    source = doc["kind"]
    target = {"ops": "algebra", "potential": "potential"}.get(args.to) if args.to else None
    if target is None:
        target = "potential" if source == "algebra" else "algebra"
    if target == source:
        raise DocumentError(f"input is already a {source} document")
    if source == "potential":
        M = parse_potential(doc)
        L = _to_ops(M, args.max_arity)
        out = algebra_document(L, name, M.truncation)
        back = potential_document(_to_potential(L, M.truncation), name) if args.roundtrip else None
        original = potential_document(M, name)
    else:
        L = parse_algebra(doc)
        M = _to_potential(L, args.truncation)
        out = potential_document(M, name)
        back = algebra_document(_to_ops(M, L.max_arity), name, doc.get("truncation")) if args.roundtrip else None
        original = algebra_document(L, name, doc.get("truncation"))
    if not args.roundtrip:
        sys.stdout.write(dumps(out))
        return EXIT_OK
    sys.stdout.write(dumps(back))
    if dumps(back) != dumps(original):
        print("round trip changed the document", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# tables

def _hdim_cell(args) -> dict:
    n, p, metric = args
    row = {"n": n, "p": p, "dimension": h_dimension(range(1, n + 1), p)}
    if metric:
        row["metric"] = metric_stable_tree_count(range(1, n + 1), p) if n >= 3 else ""
    return row


def cmd_hdim_table(args) -> int:
    budget = load_budget()
    ns = args.n
    enforce(budget, "max_S", max(ns), "|S|")
    enforce(budget, "max_p", args.max_degree, "max degree")
    cells = [(n, p, args.metric) for n in ns for p in range(args.max_degree + 1)]
    emit(_cells(_hdim_cell, cells, args.jobs), args.format, sys.stdout)
    return EXIT_OK


def _graph_cell(args) -> dict:
    n, w, g, p = args
    return {"n": n, "w": w, "p": p, "dimension": cohomology_dimension(n, w, p, g)}


def cmd_graph_table(args) -> int:
    budget = load_budget()
    enforce(budget, "max_S", max(args.n), "n")
    enforce(budget, "max_w", max(args.w), "w")
    enforce(budget, "max_genus", args.genus, "genus")
    cells = []
    for n in args.n:
        for w in args.w:
            if w < 1:
                continue
            top = w - 1 + 2 * args.genus if args.max_degree is None else args.max_degree
            cells.extend((n, w, args.genus, p) for p in range(top + 1))
    enforce(budget, "max_p", max((c[3] for c in cells), default=0), "degree")
    emit(_cells(_graph_cell, cells, args.jobs), args.format, sys.stdout)
    return EXIT_OK


def _presentation_cell(args):
    n, p = args
    return presentation_check(range(1, n + 1), p)


def cmd_presentation_check(args) -> int:
    budget = load_budget()
    enforce(budget, "max_S", max(args.n), "|S|")
    enforce(budget, "max_p", args.max_degree, "max degree")
    ns = [n for n in args.n if n >= 1]
    reports = _cells(_presentation_cell, [(n, args.max_degree) for n in ns], args.jobs)
    rows = []
    for n, rep in zip(ns, reports):
        for p in range(args.max_degree + 1):
            rows.append({
                "n": n, "p": p,
                "quotient": rep.quotient_dims[p],
                "dimension": rep.h_dims[p],
                "image_rank": rep.image_ranks[p],
                "ok": rep.ok,
            })
    emit(rows, args.format, sys.stdout)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


def _cohft_cell(args) -> dict:
    L, n, p = args
    rep = check_axioms(build_I(L, n, p))
    return {
        "n": n, "p": p,
        "equivariant": rep.equivariant,
        "boundary_compatible": rep.boundary_compatible,
        "equivariance_failures": len(rep.equivariance_failures),
        "boundary_failures": len(rep.boundary_failures),
        "annihilator_failures": len(rep.annihilator_failures),
    }


def cmd_cohft_check(args) -> int:
    budget = load_budget()
    doc = read_document(args.input)
    if doc["kind"] != "algebra":
        raise DocumentError("cohft-check needs an algebra document")
    L = parse_algebra(doc)
    enforce(budget, "max_n", max(args.n), "n")
    enforce(budget, "max_p", args.max_degree, "max degree")
    enforce(budget, "max_dim", L.dim, "dimension")
    ns = [n for n in args.n if n >= 1]
    rows = _cells(_cohft_cell, [(L, n, args.max_degree) for n in ns], args.jobs)
    emit(rows, args.format, sys.stdout)
    return EXIT_OK if all(r["equivariant"] and r["boundary_compatible"] for r in rows) else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    parser = _Parser(prog="lmanifold", description="Exact checks for cyclic L-infinity structures, formal L-manifolds and tree/graph spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", parents=[common], help="check an algebra or potential document")
    p.add_argument("input", help="document path, '-' for stdin, or bundled:NAME")
    p.add_argument("--truncation", type=int, help="Jacobi arities (algebra) or even degree (potential) to check")
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convert", parents=[common], help="potential <-> operations")
    p.add_argument("input")
    p.add_argument("--to", choices=("ops", "potential"))
    p.add_argument("--max-arity", type=int, help="top arity when producing operations")
    p.add_argument("--truncation", type=int, help="truncation when producing a potential")
    p.add_argument("--roundtrip", action="store_true", help="convert there and back and compare")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("hdim-table", parents=[common], help="dimensions of H_S")
    p.add_argument("--n", type=parse_range, default=parse_range("0-2"), help="range of |S|, e.g. 0-2")
    p.add_argument("--max-degree", type=int, default=4)
    p.add_argument("--metric", action="store_true", help="add the metric stable tree count")
    p.add_argument("--format", choices=("json", "tsv"), default="tsv")
    p.set_defaults(func=cmd_hdim_table)

    p = sub.add_parser("graph-table", parents=[common], help="cohomology of the weighted graph complex")
    p.add_argument("--n", type=parse_range, default=parse_range("2"))
    p.add_argument("--w", type=parse_range, default=parse_range("1-4"))
    p.add_argument("--genus", type=int, default=0)
    p.add_argument("--max-degree", type=int)
    p.add_argument("--format", choices=("json", "tsv"), default="tsv")
    p.set_defaults(func=cmd_graph_table)

    p = sub.add_parser("presentation-check", parents=[common], help="compare F_S/I_S with H_S")
    p.add_argument("--n", type=parse_range, default=parse_range("1-3"))
    p.add_argument("--max-degree", type=int, default=3)
    p.add_argument("--format", choices=("json", "tsv"), default="tsv")
    p.set_defaults(func=cmd_presentation_check)

    p = sub.add_parser("cohft-check", parents=[common], help="axioms of the tree-level CohFT of an algebra")
    p.add_argument("input", nargs="?", default=BUNDLED_PREFIX + "gl11.json")
    p.add_argument("--n", type=parse_range, default=parse_range("1-4"))
    p.add_argument("--max-degree", type=int, default=2)
    p.add_argument("--format", choices=("json", "tsv"), default="tsv")
    p.set_defaults(func=cmd_cohft_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("lmanifold: error: --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    for name in ("max_degree", "truncation", "max_arity"):
        if (getattr(args, name, None) or 0) < 0:
            print(f"lmanifold: error: --{name.replace('_', '-')} must be non-negative", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except (DocumentError, BudgetError) as exc:
        print(f"lmanifold: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

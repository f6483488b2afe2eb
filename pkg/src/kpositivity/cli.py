"""``kpositivity`` command line: build, check, decompose, reproduce.

Exit codes for ``check``: 0 certified (by an exact criterion), 1 refuted,
2 inconclusive.  Usage errors exit 64, bad input data 65.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from importlib import metadata
from pathlib import Path
from typing import Callable

import numpy as np

from . import dtype as dt
from . import linalg
from .decomp import involution_split, phi_one, verify_split
from .errors import (
    BadSpec,
    KOutOfRange,
    KPositivityError,
    UnknownCriterion,
    UnknownSuite,
    WrongSplit,
)
from .falsify import SearchBudget
from .kcriteria import (
    EXACT_SLACK,
    OrthoBasisFamily,
    Status,
    Verdict,
    Witness,
    choi_psd_verdict,
    ck_corollary,
    ck_necessary_last,
    ck_sufficient,
    numrange_sufficient,
    ortho_family_from_map,
    recheck_witness,
    schmidt_min_verdict,
    trace_necessary,
)
from .maps import (
    ChoiMap,
    DTypeMap,
    KrausDifference,
    MapRep,
    choi,
    dims,
    l_gamma,
    map_from_json,
    map_to_json,
    to_kraus,
)
from .suites import SUITES, run_suite

EXIT_CERTIFIED, EXIT_REFUTED, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_DATA = 64, 65


def version() -> str:
    try:
        return metadata.version("kpositivity")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "0.0.0"


# -- spec parsing ---------------------------------------------------------------------

def _locate(text: str, field: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        if f'"{field}"' in line:
            return i
    return None


def _bad(text: str, field: str, msg: str) -> BadSpec:
    line = _locate(text, field)
    where = f"line {line}, " if line else ""
    return BadSpec(f"{where}field '{field}': {msg}")


def _matrix(obj, text: str, field: str) -> np.ndarray:
    try:
        if isinstance(obj, dict):
            return linalg.matrix_from_json(obj)
        M = np.asarray(obj, dtype=complex)
        if M.ndim != 2:
            raise ValueError(f"expected a 2-d array, got {M.ndim}-d")
        return M
    except (KPositivityError, ValueError, TypeError) as exc:
        raise _bad(text, field, str(exc)) from exc


def load_json(text: str, what: str = "input") -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadSpec(f"line {exc.lineno}, column {exc.colno}: {exc.msg} in {what}") from exc
    if not isinstance(obj, dict):
        raise BadSpec(f"line 1: {what} must be a JSON object")
    return obj


def build_map(text: str) -> MapRep:
    """Map described by a family spec (JSON text)."""
    spec = load_json(text, "spec")

    def need(field, cast=None):
        if field not in spec:
            raise _bad(text, field, "missing") if _locate(text, field) else BadSpec(f"field '{field}': missing")
        val = spec[field]
        if cast is None:
            return val
        try:
            return cast(val)
        except (TypeError, ValueError) as exc:
            raise _bad(text, field, f"expected {cast.__name__}: {exc}") from exc

    family = need("family", str)
    try:
        if family == "l-gamma":
            return l_gamma(need("n", int), need("gamma", float))
        if family == "phi-t-pi":
            n = need("n", int)
            return DTypeMap(dt.make_phi(n, need("pi", list), need("t", float)))
        if family == "circulant":
            return DTypeMap(dt.make_circulant(need("s", list), need("t", float), need("n", int)))
        if family == "orthobasis":
            mats = [_matrix(F, text, "basis") for F in need("basis", list)]
            fam = OrthoBasisFamily(tuple(mats), need("p", int))
            return fam.to_map(need("gamma", list))
        if family == "raw":
            if "d" in spec:
                return DTypeMap(np.asarray(spec["d"], dtype=float))
            if "plus" in spec or "minus" in spec:
                return KrausDifference([_matrix(A, text, "plus") for A in spec.get("plus", [])],
                                       [_matrix(A, text, "minus") for A in spec.get("minus", [])])
            C = _matrix(need("choi"), text, "choi")
            size = C.shape[0]
            n = int(spec.get("n", round(np.sqrt(size))))
            m = int(spec.get("m", size // n if n else 0))
            return ChoiMap(C, n, m)
    except BadSpec:
        raise
    except KPositivityError as exc:
        raise BadSpec(f"family '{family}': {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise BadSpec(f"family '{family}': {exc}") from exc
    raise _bad(text, "family", f"unknown family {family!r}")


# -- criteria dispatch ----------------------------------------------------------------

def _kraus(L: MapRep) -> KrausDifference:
    return to_kraus(L, tol=1e-12 * max(1.0, float(np.linalg.norm(choi(L), 2))))


def _family(L: MapRep):
    return ortho_family_from_map(L)


def _crit_choi_psd(L, k, budget):
    return choi_psd_verdict(L, k, budget.tol)


def _crit_schmidt(L, k, budget):
    return schmidt_min_verdict(L, k, budget)


def _crit_frame(L, k, budget):
    """Random k-frames scored by the block matrix; refutes only."""
    from .kcriteria import check_frame_positivity

    n, _ = dims(L)
    best = None
    for rng in budget.generators():
        Z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        Q, _ = np.linalg.qr(Z)
        v = check_frame_positivity(L, Q, budget.tol)
        if best is None or v.margin < best.margin:
            best = v
        if v.refuted:
            return v
    return best


def _crit_trace(L, k, budget):
    return trace_necessary(_kraus(L), k, budget.tol)


def _crit_numrange(L, k, budget):
    return numrange_sufficient(_kraus(L), k, budget)


def _crit_ortho_sufficient(L, k, budget):
    fam, g = _family(L)
    return ck_sufficient(fam, g, k)


def _crit_ortho_corollary(L, k, budget):
    fam, g = _family(L)
    return ck_corollary(fam, g, k)


def _crit_ortho_necessary(L, k, budget):
    fam, g = _family(L)
    return ck_necessary_last(fam, g, k, budget.tol)


def _require_dtype(L) -> np.ndarray:
    if not isinstance(L, DTypeMap):
        raise WrongSplit("criterion applies to D-type maps only")
    return np.asarray(L.D)


def _crit_phi_threshold(L, k, budget):
    D = _require_dtype(L)
    hit = dt.detect_phi(D)
    if hit is None:
        raise WrongSplit("D is not of the form (n - t) I + t P")
    pi, t = hit
    n = D.shape[0]
    th = dt.phi_threshold(n, pi)
    details = {"t": t, "threshold": th, "pi": list(pi.image)}
    if t <= th * (1 + EXACT_SLACK):
        if k == 1:
            return Verdict(Status.CERTIFIED, k, th - t, "phi-threshold", details=details)
        return Verdict(Status.INCONCLUSIVE, k, th - t, "phi-threshold", applicable=False, details=details)
    v = dt.dtype_falsify(D, 1, budget)
    if v.refuted:
        v.k, v.method, v.details = k, "phi-threshold", {**details, **v.details}
        return v
    return Verdict(Status.INCONCLUSIVE, k, th - t, "phi-threshold", details=details)


def _crit_dtype_falsify(L, k, budget):
    return dt.dtype_falsify(_require_dtype(L), k, budget)


def _crit_prop63(L, k, budget):
    D = _require_dtype(L)
    rep = dt.prop63_classify(D)
    details = rep.to_json()
    if rep.completely_positive:
        return Verdict(Status.CERTIFIED, k, 0.0, "prop63", details=details)
    if k == 1:
        status = Status.CERTIFIED if rep.positive_sufficient else Status.INCONCLUSIVE
        return Verdict(status, k, rep.min_diagonal - (D.shape[0] - 1), "prop63", details=details)
    if rep.proof_value > 1 + budget.tol or not rep.proof_feasible:
        return Verdict(Status.REFUTED, k, 1 - rep.proof_value, "prop63",
                       Witness("dtype-u", rep.proof_u), details=details)
    return Verdict(Status.INCONCLUSIVE, k, 1 - rep.proof_value, "prop63", details=details)


CRITERIA: dict[str, Callable] = {
    "choi-psd": _crit_choi_psd,
    "schmidt-min": _crit_schmidt,
    "frame": _crit_frame,
    "trace-necessary": _crit_trace,
    "numrange-sufficient": _crit_numrange,
    "ortho-sufficient": _crit_ortho_sufficient,
    "ortho-corollary": _crit_ortho_corollary,
    "ortho-necessary": _crit_ortho_necessary,
    "phi-threshold": _crit_phi_threshold,
    "dtype-falsify": _crit_dtype_falsify,
    "prop63": _crit_prop63,
}

DEFAULT_CRITERIA = ("choi-psd", "trace-necessary", "ortho-sufficient", "numrange-sufficient", "schmidt-min")
DEFAULT_DTYPE_CRITERIA = ("choi-psd", "phi-threshold", "ortho-sufficient", "dtype-falsify", "schmidt-min")


def parse_criteria(spec: str | None, L: MapRep) -> list[str]:
    if not spec:
        return list(DEFAULT_DTYPE_CRITERIA if isinstance(L, DTypeMap) else DEFAULT_CRITERIA)
    names = [c.strip() for c in spec.split(",") if c.strip()]
    for c in names:
        if c not in CRITERIA:
            raise UnknownCriterion(f"unknown criterion {c!r}; choose from {', '.join(CRITERIA)}")
    return names


def run_check(L: MapRep, k: int, criteria: list[str], budget: SearchBudget,
              exhaustive: bool = False, digest: str = "") -> dict:
    n, m = dims(L)
    if not 1 <= k <= min(n, m):
        raise KOutOfRange(f"k={k} outside 1..{min(n, m)}")
    entries, final = [], None
    for name in criteria:
        t0 = time.perf_counter()
        try:
            v = CRITERIA[name](L, k, budget)
        except KPositivityError as exc:
            # the criterion does not apply to this input
            if isinstance(exc, (UnknownCriterion, KOutOfRange)):
                raise
            v = Verdict(Status.INCONCLUSIVE, k, float("nan"), name, applicable=False,
                        details={"note": f"{type(exc).__name__}: {exc}"})
        entries.append({"criterion": name, "seconds": time.perf_counter() - t0, "verdict": v.to_json()})
        decisive = v.refuted or v.exact
        if decisive and final is None:
            final = v
        elif decisive and final.status != v.status:
            raise RuntimeError(f"criteria disagree: {final.method} vs {v.method}")
        if decisive and not exhaustive:
            break
    status = final.status.value if final else Status.INCONCLUSIVE.value
    return {
        "tool": "kpositivity",
        "version": version(),
        "input_sha256": digest,
        "k": k,
        "seed": budget.seed,
        "budget": budget.to_json(),
        "status": status,
        "decided_by": final.method if final else None,
        "results": entries,
    }


def exit_code(status: str) -> int:
    return {"certified": EXIT_CERTIFIED, "refuted": EXIT_REFUTED}.get(status, EXIT_INCONCLUSIVE)


def verify_report(L: MapRep, report: dict, tol: float) -> tuple[str, list[dict]]:
    """Recheck every embedded witness against ``L``; returns the reproduced status."""
    rows = []
    for entry in report.get("results", []):
        v = entry["verdict"]
        if v["status"] != "refuted" or "witness" not in v:
            continue
        w = Witness.from_json(v["witness"])
        ok, value = recheck_witness(L, w, int(v["k"]), tol)
        rows.append({"criterion": entry["criterion"], "reproduced": ok, "value": value})
    status = "refuted" if rows and all(r["reproduced"] for r in rows) else "inconclusive"
    return status, rows


# -- output ---------------------------------------------------------------------------

def _emit(obj: dict, args, text_lines: list[str]):
    payload = json.dumps(obj, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    if args.format == "json":
        print(payload)
    else:
        for line in text_lines:
            print(line)


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise BadSpec(f"cannot read {path}: {exc.strerror}") from exc


def cmd_build(args) -> int:
    L = build_map(_read(args.spec))
    obj = map_to_json(L)
    if args.with_choi:
        n, m = dims(L)
        obj["choi_matrix"] = {"n": n, "m": m, "choi": linalg.matrix_to_json(choi(L))}
    _emit(obj, args, [json.dumps(obj)])
    return 0


def load_map(text: str) -> MapRep:
    obj = load_json(text, "map file")
    if "family" in obj:
        return build_map(text)
    try:
        return map_from_json(obj)
    except KPositivityError as exc:
        raise BadSpec(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise BadSpec(f"malformed map: {exc}") from exc


def cmd_check(args) -> int:
    text = _read(args.map)
    L = load_map(text)
    digest = hashlib.sha256(text.encode()).hexdigest()
    if args.verify_witness:
        report = load_json(_read(args.verify_witness), "report")
        if report.get("input_sha256") not in (None, "", digest):
            print("warning: report was produced for a different input", file=sys.stderr)
        status, rows = verify_report(L, report, args.tol)
        obj = {"status": status, "input_sha256": digest, "witnesses": rows}
        lines = [f"{r['criterion']}: {'reproduced' if r['reproduced'] else 'NOT reproduced'} "
                 f"(value {r['value']:.3e})" for r in rows] + [f"status: {status}"]
        _emit(obj, args, lines)
        return exit_code(status)
    budget = SearchBudget(restarts=args.budget_restarts, max_iters=args.max_iters,
                          seed=args.seed, tol=args.tol)
    criteria = parse_criteria(args.criteria, L)
    report = run_check(L, args.k, criteria, budget, args.exhaustive, digest)
    lines = []
    for e in report["results"]:
        v = e["verdict"]
        flag = "" if v["applicable"] else " (not applicable)"
        flag += " (heuristic)" if v["heuristic"] else ""
        lines.append(f"{e['criterion']:<20} {v['status']:<12} margin={v['margin']}{flag}")
    lines.append(f"k={report['k']} status: {report['status']}")
    _emit(report, args, lines)
    return exit_code(report["status"])


def _parse_pi(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace("[", "").replace("]", "").split(",") if x.strip()]
    except ValueError as exc:
        raise BadSpec(f"--pi must be a comma-separated image list: {exc}") from exc


def cmd_decompose(args) -> int:
    pi = dt.PermutationSpec(tuple(_parse_pi(args.pi)))
    split = involution_split(args.n, pi)
    v = verify_split(phi_one(args.n, pi), split)
    if args.split_out:
        Path(args.split_out).write_text(json.dumps(split.to_json()) + "\n")
    report = {"tool": "kpositivity", "version": version(), "n": args.n, "pi": list(pi.image),
              "status": v.status.value, "verdict": v.to_json()}
    _emit(report, args, [f"n={args.n} pi={list(pi.image)} decomposable: {v.status.value}",
                         f"min eigenvalues: C1 {v.details['lambda_min_c1']:.3e}, "
                         f"C2 partial transpose {v.details['lambda_min_c2_pt']:.3e}"])
    return 0 if v.certified else EXIT_INCONCLUSIVE


def cmd_reproduce(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = [run_suite(name, args.seed) for name in names]
    report = {"tool": "kpositivity", "version": version(), "seed": args.seed,
              "passed": all(r.passed for r in results), "suites": [r.to_json() for r in results]}
    lines = []
    for r in results:
        for c in r.checks:
            lines.append(f"[{'PASS' if c.passed else 'FAIL'}] {r.name}: {c.name}")
        lines.append(f"{r.name}: {'passed' if r.passed else 'FAILED'} in {r.seconds:.1f}s")
    _emit(report, args, lines)
    return 0 if report["passed"] else 1


# -- argument parsing -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kpositivity", description="Certify or refute k-positivity of linear maps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {version()}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="also write the JSON report to this path")
        sp.add_argument("--format", choices=("json", "text"), default="text")

    b = sub.add_parser("build", help="construct a map from a family spec")
    b.add_argument("spec", help="JSON spec file ('-' for stdin)")
    b.add_argument("--with-choi", action="store_true", help="include the Choi matrix")
    common(b)
    b.set_defaults(func=cmd_build)

    c = sub.add_parser("check", help="run criteria at level k")
    c.add_argument("map", help="map JSON or family spec ('-' for stdin)")
    c.add_argument("--k", type=_positive_int, default=1)
    c.add_argument("--criteria", help=f"comma-separated subset of: {', '.join(CRITERIA)}")
    c.add_argument("--budget-restarts", type=_positive_int, default=64)
    c.add_argument("--max-iters", type=_positive_int, default=500)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=_positive_float, default=1e-8)
    c.add_argument("--exhaustive", action="store_true", help="run every criterion even after a decision")
    c.add_argument("--verify-witness", metavar="REPORT", help="recheck witnesses of an earlier report")
    common(c)
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("decompose", help="decomposability split for an involution")
    d.add_argument("--n", type=_positive_int, required=True)
    d.add_argument("--pi", required=True, help="1-based image list, e.g. 3,4,1,2")
    d.add_argument("--split-out", help="write the split to this path")
    common(d)
    d.set_defaults(func=cmd_decompose)

    r = sub.add_parser("reproduce", help="run a pinned-seed reproduction suite")
    r.add_argument("suite", help=f"one of: {', '.join(SUITES)}, all")
    r.add_argument("--seed", type=int, default=0)
    common(r)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (UnknownCriterion, UnknownSuite, KOutOfRange) as exc:
        print(f"kpositivity: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KPositivityError as exc:
        print(f"kpositivity: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

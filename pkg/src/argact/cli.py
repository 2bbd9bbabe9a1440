"""Command-line front end.

Exit codes: 0 at least one result, 1 none (or a failed check), 2 parse or
validation error, 3 inconsistent theory, 4 resource bound hit.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

from . import models, ramification, semantics
from .deduction import ResourceBound, UnknownAtom, engine, r_consistent
from .lang import (
    ORIGIN,
    FAAt,
    FluentAt,
    GroundDomain,
    Occ,
    ValidationError,
    formula_times,
    ground,
    ground_formula,
    negate,
)
from .parser import ParseError, parse_domain, parse_formula

EXIT_OK, EXIT_NONE, EXIT_INPUT, EXIT_INCONSISTENT, EXIT_BOUND = 0, 1, 2, 3, 4

ALIASES = {"circuit-thielscher": "circuit"}


class InconsistentTheory(Exception):
    pass


# ------------------------------------------------------------------ loading


def corpus_dir() -> Path:
    return Path(str(resources.files("argact") / "corpus"))


def resolve_path(name: str) -> Path:
    """The file itself if it exists, otherwise the bundled corpus entry of that name."""
    p = Path(name)
    if p.exists():
        return p
    stem = p.name[:-3] if p.name.endswith(".ad") else p.name
    stem = ALIASES.get(stem, stem)
    bundled = corpus_dir() / f"{stem}.ad"
    if bundled.exists():
        return bundled
    raise ValidationError(f"no such domain file: {name}")


def load(name: str):
    dom = parse_domain(resolve_path(name).read_text(encoding="utf-8"))
    return dom, ground(dom)


def require_consistent(g: GroundDomain) -> None:
    if not r_consistent(g):
        raise InconsistentTheory("the theory is inconsistent under the rules, before any assumption")


# ---------------------------------------------------------------- rendering


def tokens(items) -> list[str]:
    return [str(a) for a in items]


def dummies(v: semantics.AssumptionVerdict) -> list[str]:
    """Unexplained changes: frame assumptions given up without an attack."""
    return [str(Occ(a.time, models.dummy_name(negate(a.literal)), a.time + 1))
            for a in v.lr if isinstance(a, FAAt)]


def trace_rows(g: GroundDomain, delta) -> list[tuple[str, str]]:
    c = engine(g).close(delta)
    names: dict[int, list[str]] = {}
    for name, t in g.times.items():
        if name != ORIGIN:
            names.setdefault(t, []).append(name)
    rows = []
    for t in range(g.horizon + 1):
        parts = []
        for f in g.fluents:
            v = c.value(FluentAt(t, f))
            parts.append(f if v else ("¬" + f if v is False else f + "?"))
        state = "{" + ", ".join(parts) + "}"
        if names:
            for n in sorted(names.get(t, []), key=_constant_order(g)):
                rows.append((f"{n} = {t}", state))
        else:
            rows.append((str(t), state))
    return rows


def _constant_order(g: GroundDomain):
    order = g.domain.constants
    return lambda n: order.index(n) if n in order else len(order)


def verdict_record(g: GroundDomain, i: int, v, trace: bool) -> dict:
    rec = {
        "id": i,
        "assumptions": tokens(v.assumptions),
        "omitted": tokens(v.omitted),
        "lr": tokens(v.lr),
        "dummies": dummies(v),
    }
    if trace:
        rec["trace"] = [{"time": k, "state": s} for k, s in trace_rows(g, v.assumptions)]
    return rec


def emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True))
    else:
        print("\n".join(text_lines))


# ----------------------------------------------------------------- commands


def cmd_solve(args) -> int:
    dom, g = load(args.file)
    require_consistent(g)
    found = semantics.solve(g, args.semantics)
    if args.select_min_lr_aq:
        found = semantics.select_min_lr_aq(found)
    records = [verdict_record(g, i, v, args.trace) for i, v in enumerate(found, 1)]
    lines = [f"domain: {dom.name}", f"semantics: {args.semantics}", f"extensions: {len(found)}"]
    for r in records:
        lines.append(f"[{r['id']}] omitted: {', '.join(r['omitted']) or '-'}")
        lines.append(f"    lr: {', '.join(r['lr']) or '-'}")
        if r["dummies"]:
            lines.append(f"    dummies: {', '.join(r['dummies'])}")
        if args.verbose:
            lines.append(f"    holds: {', '.join(r['assumptions'])}")
        for row in r.get("trace", []):
            lines.append(f"    {row['time']}: {row['state']}")
    emit(args, {"domain": dom.name, "semantics": args.semantics,
                "select_min_lr_aq": args.select_min_lr_aq, "extensions": records}, lines)
    return EXIT_OK if found else EXIT_NONE


def cmd_entail(args) -> int:
    dom, g = load(args.file)
    require_consistent(g)
    parsed = parse_formula(args.formula)
    for t in formula_times(parsed, g.times):
        if not 0 <= t <= g.horizon:
            raise ValidationError(f"the formula mentions time {t}, outside the window [0,{g.horizon}]")
    formula = ground_formula(parsed, dict(g.times), None, g.horizon)
    found = semantics.solve(g, args.semantics)
    if not found:
        emit(args, {"formula": args.formula, "verdict": None, "extensions": 0},
             ["no extensions"])
        return EXIT_NONE
    results = []
    for v in found:
        try:
            results.append(semantics.extension(g, v.assumptions).entails(formula))
        except UnknownAtom as exc:
            raise ValidationError(f"formula mentions {exc.args[0]}, which lies outside the domain") from None
    if args.mode == "skeptical":
        ok = all(results)
        witness = None if ok else results.index(False) + 1
    else:
        ok = any(results)
        witness = results.index(True) + 1 if ok else None
    word = "YES" if ok else "NO"
    line = word
    if witness is not None:
        line += f" ({'witness' if ok else 'counterexample'}: extension {witness})"
    emit(args, {"formula": args.formula, "mode": args.mode, "semantics": args.semantics,
                "verdict": ok, "witness": witness, "extensions": len(found)}, [line])
    return EXIT_OK if ok else EXIT_NONE


def cmd_models(args) -> int:
    dom, g = load(args.file)
    require_consistent(g)
    kind = {"cpmm": models.enumerate_cpmm, "cpmqm": models.enumerate_cpmqm,
            "coherent": models.enumerate_coherent}[args.kind]
    found = kind(g)
    shown = found[: args.limit] if args.limit else found
    lines = [f"domain: {dom.name}", f"kind: {args.kind}", f"models: {len(found)}"]
    records = []
    for i, m in enumerate(shown, 1):
        lines.append(f"[{i}]")
        lines.extend("    " + r for r in m.rows())
        records.append({"id": i, "rows": m.rows(), "delta": tokens(models.sort_assumptions(m.delta_qf))})
    if len(shown) < len(found):
        lines.append(f"... {len(found) - len(shown)} more")
    emit(args, {"domain": dom.name, "kind": args.kind, "count": len(found), "models": records}, lines)
    return EXIT_OK if found else EXIT_NONE


def cmd_trans(args) -> int:
    dom = parse_domain(resolve_path(args.file).read_text(encoding="utf-8"))
    fluents = dom.signature.fluents
    start = ramification.InstantwiseState.parse(args.state, fluents) if args.state else initial_state(dom)
    action = args.action or initial_action(dom)
    if action not in dom.signature.actions:
        raise ValidationError(f"unknown action {action!r}")
    strat = ramification.check_stratified(dom)
    result = ramification.trans(dom, start, action, args.max_steps)
    lines = [f"domain: {dom.name}", f"from: {start.render(fluents)}", f"action: {action}"]
    if strat.stratified:
        lines.append("stratified: yes")
    else:
        cyc = "; ".join(" -> ".join(c) for c in strat.cycles) or "found by the exhaustive check"
        lines.append(f"stratified: no (cycle: {cyc})")
    lines.append(f"stable successors: {len(result.states)}")
    lines.extend("  " + s.render(fluents) for s in result.states)
    if result.diverged:
        lines.append(f"DIVERGED: still unstable after {result.steps} steps")
    emit(args, {"domain": dom.name, "from": start.render(fluents), "action": action,
                "stratified": strat.stratified, "cycles": strat.cycles,
                "states": [s.render(fluents) for s in result.states],
                "diverged": result.diverged, "steps": result.steps}, lines)
    return EXIT_OK if result.states else EXIT_NONE


def initial_state(dom) -> ramification.InstantwiseState:
    g = ground(dom)
    c = engine(g).close(())
    values = {f: c.value(FluentAt(0, f)) for f in dom.signature.fluents}
    missing = [f for f, v in values.items() if v is None]
    if missing:
        raise ValidationError(f"the theory leaves {', '.join(missing)} open at 0; pass --state")
    return ramification.InstantwiseState.of(values)


def initial_action(dom) -> str:
    g = ground(dom)
    first = sorted({o.action for o in g.occurrences if o.start == 0 and o.end == 1})
    if len(first) != 1:
        raise ValidationError("cannot tell which action starts at 0; pass --action")
    return first[0]


def cmd_verify(args) -> int:
    dom, g = load(args.file)
    if args.theorem == 7:
        start = ramification.InstantwiseState.parse(args.state, dom.signature.fluents) \
            if args.state else initial_state(dom)
        action = args.action or initial_action(dom)
        report = ramification.check_theorem7(dom, start, action, family=args.family)
        lines = [report.line()]
        lines += [f"  reachable stable state: {s.render(dom.signature.fluents)}" for s in report.trans_states]
        payload = {"theorem": 7, "passed": report.passed, "checked": report.checked,
                   "skipped": report.skipped, "family": report.family,
                   "trans": [s.render(dom.signature.fluents) for s in report.trans_states],
                   "witnesses": report.witnesses}
    else:
        require_consistent(g)
        report = models.verify_correspondence(g, args.theorem)
        lines = [report.line()]
        payload = {"theorem": args.theorem, "passed": report.passed, "checked": report.checked,
                   "witnesses": report.witnesses}
    lines += [f"  witness: {w}" for w in report.witnesses]
    emit(args, payload, lines)
    return EXIT_OK if report.passed else EXIT_NONE


# ------------------------------------------------------------------- corpus


def manifest() -> list[dict]:
    return json.loads((corpus_dir() / "manifest.json").read_text(encoding="utf-8"))


def run_entry(entry: dict) -> str:
    """Transcript of every command listed for one corpus domain."""
    import contextlib
    import io

    chunks = []
    for cmd in entry["commands"]:
        argv = [cmd[0], entry["file"]] + cmd[1:]
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(buf):
            code = main(argv)
        chunks.append(f"$ argact {' '.join(argv)}\n{buf.getvalue()}exit: {code}\n")
    return "\n".join(chunks)


def cmd_corpus(args) -> int:
    entries = manifest()
    if args.action == "list":
        for e in entries:
            print(f"{e['name']:<16} {e['file']:<20} {e['about']}")
        return EXIT_OK
    wanted = set(args.names)
    unknown = wanted - {e["name"] for e in entries}
    if unknown:
        raise ValidationError(f"not in the corpus: {', '.join(sorted(unknown))}")
    failed = 0
    for e in entries:
        if wanted and e["name"] not in wanted:
            continue
        out = run_entry(e)
        expected_path = corpus_dir() / "expected" / f"{e['name']}.txt"
        if args.update:
            expected_path.write_text(out, encoding="utf-8")
            print(f"{e['name']}: written")
            continue
        expected = expected_path.read_text(encoding="utf-8") if expected_path.exists() else None
        ok = out == expected
        failed += not ok
        print(f"{e['name']}: {'PASS' if ok else 'FAIL'}")
        if not ok and args.show_diff:
            import difflib

            sys.stdout.writelines(difflib.unified_diff(
                (expected or "").splitlines(True), out.splitlines(True), "expected", "actual"))
    return EXIT_OK if not failed else EXIT_NONE


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="argact", description="Reason about action domains with assumptions.")
    p.add_argument("--time", action="store_true", help="report elapsed time on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", help="domain file, or the name of a bundled corpus domain")
        sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = sub.add_parser("solve", help="enumerate extensions")
    common(sp)
    sp.add_argument("--semantics", choices=semantics.SEMANTICS, default="plausible")
    sp.add_argument("--select-min-lr-aq", action="store_true",
                    help="keep extensions whose leniently rejected qualifications are minimal")
    sp.add_argument("--trace", action="store_true", help="print the fluent state at each time point")
    sp.add_argument("--verbose", action="store_true", help="also list the assumptions each extension keeps")
    sp.set_defaults(run=cmd_solve)

    sp = sub.add_parser("entail", help="ask whether a formula follows")
    common(sp)
    sp.add_argument("--formula", required=True)
    sp.add_argument("--semantics", choices=semantics.SEMANTICS, default="plausible")
    sp.add_argument("--mode", choices=("skeptical", "credulous"), default="skeptical")
    sp.set_defaults(run=cmd_entail)

    sp = sub.add_parser("models", help="enumerate preferred models")
    common(sp)
    sp.add_argument("--kind", choices=("cpmm", "cpmqm", "coherent"), default="cpmm")
    sp.add_argument("--limit", type=int, default=20, help="print at most this many (0 for all)")
    sp.set_defaults(run=cmd_models)

    sp = sub.add_parser("trans", help="stable states reached after an action")
    common(sp)
    sp.add_argument("--state", help="start state, e.g. '¬sw1,sw2' (defaults to the state at 0)")
    sp.add_argument("--action", help="action to perform (defaults to the one occurring over [0,1])")
    sp.add_argument("--max-steps", type=int, default=None)
    sp.set_defaults(run=cmd_trans)

    sp = sub.add_parser("verify", help="check a model/argument correspondence theorem")
    common(sp)
    sp.add_argument("--theorem", type=int, choices=range(1, 8), required=True)
    sp.add_argument("--state", help="start state for theorem 7")
    sp.add_argument("--action", help="action for theorem 7")
    sp.add_argument("--family", choices=ramification.THEOREM7_FAMILIES, default="attacked-omissions",
                    help="candidate sets checked for theorem 7")
    sp.set_defaults(run=cmd_verify)

    sp = sub.add_parser("corpus", help="list or run the bundled domains")
    sp.add_argument("action", choices=("list", "run"))
    sp.add_argument("names", nargs="*")
    sp.add_argument("--update", action="store_true", help="rewrite the expected outputs")
    sp.add_argument("--show-diff", action="store_true")
    sp.set_defaults(run=cmd_corpus)
    return p


VALUE_OPTIONS = ("--formula", "--state")


def _join_values(argv: list[str]) -> list[str]:
    # formulas and states often start with '-', which argparse would read as a flag
    out, i = [], 0
    while i < len(argv):
        if argv[i] in VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = _join_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    started = time.perf_counter()
    try:
        code = args.run(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except InconsistentTheory as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INCONSISTENT
    except ResourceBound as exc:
        print(f"resource bound: {exc}", file=sys.stderr)
        code = EXIT_BOUND
    if args.time:
        print(f"elapsed: {time.perf_counter() - started:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

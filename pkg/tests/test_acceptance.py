"""Acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL`` line; the lines are repeated
in the pytest terminal summary and printed when this file is run directly.
"""

import time

from hypothesis import given, settings, strategies as st

from argact import models, ramification, semantics
from argact.cli import initial_state
from argact.deduction import ResourceBound
from argact.lang import (
    AQAt,
    ActionEffect,
    FAAt,
    Literal,
    RamificationEffect,
    ground,
    ground_formula,
)
from argact.parser import parse_domain, parse_formula
from argact.ramification import InstantwiseState

from conftest import load, run_cli, run_json

RESULTS: dict[int, str] = {}


def record(n: int, title: str, checks: dict[str, bool]) -> None:
    failed = [name for name, ok in checks.items() if not ok]
    status = "FAIL" if failed else "PASS"
    line = f"criterion {n}: {status}  {title}"
    if failed:
        line += "  [failed: " + "; ".join(failed) + "]"
    RESULTS[n] = line
    print(line)
    assert not failed, line


def fa(t, fluent, positive=True):
    return FAAt(t, Literal(fluent, positive))


# -------------------------------------------------------------- criterion 1


def test_criterion_01_yale_shooting():
    start = time.perf_counter()
    code, report = run_json("solve", "yale", "--semantics", "plausible")
    skeptical = [run_cli("entail", "yale", "--formula", f)[0] for f in ("-[3]alive", "[2]loaded")]
    elapsed = time.perf_counter() - start

    _, g = load("yale")
    expected = sorted(str(a) for a in g.frame_assumptions
                      if a not in {fa(0, "loaded", False), fa(2, "alive")})
    ext = report["extensions"]
    record(1, "Yale shooting: one plausible extension, intended entailments", {
        "exit 0": code == 0,
        "exactly one extension": len(ext) == 1,
        "extension is all FA minus FA@0(¬loaded), FA@2(alive)":
            len(ext) == 1 and sorted(ext[0]["assumptions"]) == expected,
        "omitted tokens": len(ext) == 1 and ext[0]["omitted"] == ["FA@0(¬loaded)", "FA@2(alive)"],
        "-[3]alive and [2]loaded skeptically YES": skeptical == [0, 0],
        "under one second": elapsed < 1.0,
    })


# -------------------------------------------------------------- criterion 2


def test_criterion_02_rejection_versus_attack():
    _, g = load("yale")
    d1 = {fa(0, "alive"), fa(1, "alive"), fa(1, "loaded")}
    d2 = {fa(0, "alive"), fa(1, "alive"), fa(2, "alive")}
    record(2, "rejection versus attack on the Yale domain", {
        "Δ1 attacks FA@2(alive)": semantics.attacks(g, d1, fa(2, "alive")) is True,
        "Δ2 rejects FA@1(loaded)": semantics.rejects(g, d2, fa(1, "loaded")) is True,
        "Δ2 does not attack FA@1(loaded)": semantics.attacks(g, d2, fa(1, "loaded")) is False,
        "∅ attacks FA@0(¬loaded)": semantics.attacks(g, set(), fa(0, "loaded", False)) is True,
    })


# -------------------------------------------------------------- criterion 3


def test_criterion_03_plausibility_versus_preferability():
    _, g = load("spy")
    aqs = set(g.qual_assumptions)
    preferred = semantics.preferred_sets(g)
    checks = {
        "three qualification assumptions": len(aqs) == 3,
        "preferred sets exist": bool(preferred),
        "preferred sets hold no AQ": all(not (set(v.assumptions) & aqs) for v in preferred),
    }
    for name in ("plausible", "q-plausible"):
        found = semantics.solve(g, name)
        checks[f"three {name} sets"] = len(found) == 3
        for i, v in enumerate(found, 1):
            inside = set(v.assumptions) & aqs
            rivals = aqs - inside
            attacked = [a for a in rivals if semantics.attacks(g, v.assumptions, a)]
            lenient = [a for a in rivals if a in v.lr]
            checks[f"{name} set {i} holds exactly one AQ"] = len(inside) == 1
            checks[f"{name} set {i}: one rival attacked, one leniently rejected"] = (
                len(attacked) == 1 and len(lenient) == 1 and set(attacked) != set(lenient))
    record(3, "spy: preferred sets hold no AQ, plausible sets hold exactly one", checks)


# -------------------------------------------------------------- criterion 4


def test_criterion_04_qualification_anomaly():
    _, g = load("potato")
    code_all, all_sets = run_json("solve", "potato", "--semantics", "q-plausible")
    code_sel, selected = run_json("solve", "potato", "--semantics", "q-plausible", "--select-min-lr-aq")
    got_started = AQAt(1, ActionEffect("turn_on_ignition", Literal("get_started")), 2)
    checks = {
        "exit codes": code_all == 0 and code_sel == 0,
        "exactly two q-plausible sets": len(all_sets["extensions"]) == 2,
        "selection keeps one set": len(selected["extensions"]) == 1,
    }
    if len(selected["extensions"]) == 1:
        kept = selected["extensions"][0]
        delta = next(v.assumptions for v in semantics.q_plausible_sets(g)
                     if [str(a) for a in v.assumptions] == kept["assumptions"])
        ext = semantics.extension(g, delta)

        def holds(text):
            return ext.entails(ground_formula(parse_formula(text), {}, None, g.horizon))

        checks["get_started is disqualified"] = str(got_started) in kept["omitted"]
        checks["blocked_tp holds at 1"] = holds("[1]blocked_tp")
        checks["the car does not start"] = holds("-[2]get_started")
    record(4, "potato: two q-plausible sets, selection keeps the blocked tail pipe", checks)


# -------------------------------------------------------------- criterion 5


SHOT = AQAt(2, ActionEffect("shoot", Literal("alive", False)), 3)


LOAD = AQAt(0, ActionEffect("load", Literal("loaded")), 1)


def _surprise_holds(text: str, loaded_known: bool) -> dict[str, bool]:
    g = ground(parse_domain(text))
    found = semantics.q_plausible_sets(g)
    if loaded_known:
        explained = all(SHOT not in v.assumptions for v in found)
    else:
        # a failed load explains the survivor just as well as a failed shot
        explained = all(SHOT not in v.assumptions or LOAD not in v.assumptions for v in found)
    return {"nonempty": bool(found), "the survival is explained by a disqualification": explained}


def test_criterion_05_expectation_failure():
    code, report = run_json("solve", "yale-surprise", "--semantics", "q-plausible")
    exts = report["extensions"]
    checks = {
        "exit 0": code == 0,
        "extensions exist": bool(exts),
        "every extension omits AQ@2..3(shoot->¬alive)": all(str(SHOT) in e["omitted"] for e in exts),
    }
    checks.update(_surprise_property())
    record(5, "surprising survivor: solving succeeds and the shot is disqualified", checks)


def _surprise_property() -> dict[str, bool]:
    outcome: dict[str, bool] = {}

    @settings(max_examples=20, deadline=None)
    @given(st.sampled_from(["", "fact [1] loaded;", "fact [2] loaded;", "fact -[0] loaded;"]),
           st.booleans())
    def prop(extra, unqualified_load):
        text = YALE_Q.replace("#EXTRA", extra)
        if not unqualified_load:
            text = text.replace(" unqualified;", ";")
        loaded_known = unqualified_load or extra in ("fact [1] loaded;", "fact [2] loaded;")
        for name, ok in _surprise_holds(text, loaded_known).items():
            assert ok, name

    try:
        prop()
        outcome["holds for observation variants"] = True
    except AssertionError:
        outcome["holds for observation variants"] = False
    return outcome


YALE_Q = """
domain yale_q;
fluents loaded, alive;
actions load, wait, shoot;
horizon 3;
fact [0] alive;
fact [0,1] load;
fact [1,2] wait;
fact [2,3] shoot;
fact [3] alive;
#EXTRA
effect load causes loaded unqualified;
effect shoot if loaded causes -alive;
"""


# -------------------------------------------------------------- criterion 6


def test_criterion_06_theorem_harness():
    start = time.perf_counter()
    checks = {}
    for name, theorems in (("yale", (1, 2, 3)), ("potato", (4, 5, 6)),
                           ("spy", (4, 5, 6)), ("roulette", (4, 5, 6))):
        for k in theorems:
            code, out = run_cli("verify", name, "--theorem", str(k))
            checks[f"{name} theorem {k}"] = code == 0 and "PASS" in out
    for qualified, theorems in ((False, (1, 2, 3)), (True, (4, 5, 6))):
        failures = []
        for seed in range(100):
            g = ground(models.random_domain(seed, qualified=qualified))
            for k in theorems:
                if not models.verify_correspondence(g, k).passed:
                    failures.append((seed, k))
        kind = "Q" if qualified else "S"
        checks[f"100 random {kind}-domains"] = not failures
    checks["under sixty seconds"] = time.perf_counter() - start < 60
    record(6, "model correspondence on the corpus and on random small domains", checks)


# -------------------------------------------------------------- criterion 7

T1 = "{sw1, ¬sw2, sw3, relay, ¬light, ¬detect}"
T2 = "{sw1, ¬sw2, sw3, relay, ¬light, detect}"


def test_criterion_07_ramification():
    code, out = run_json("trans", "circuit", "--state", "¬sw1,sw2,sw3,¬relay,¬light,¬detect",
                         "--action", "toggle1")
    vcode, vout = run_cli("verify", "circuit", "--theorem", "7")
    checks = {
        "trans exit 0": code == 0,
        "trans gives exactly T1 and T2": sorted(out["states"]) == sorted([T1, T2]),
        "not diverged": out["diverged"] is False,
        "theorem 7 passes": vcode == 0 and "PASS" in vout,
    }

    dom, g = load("circuit")
    fluents = dom.signature.fluents
    detect = [AQAt(t, RamificationEffect(Literal("detect")), t + 1) for t in (2, 3)]
    classes = {"Δ": ({detect[0], detect[1]}, T1),
               "Δ′": ({detect[0]}, T2),
               "Δ″": (set(), T2)}
    reached = {name: set() for name in classes}
    for v in ramification.ad_plausible_sets(g):
        omitted_aq = {a for a in v.omitted if isinstance(a, AQAt)}
        state = ramification.state_at(g, v.assumptions, 4)
        if None in state.values():
            continue
        shown = InstantwiseState.of(state).render(fluents)
        for name, (aq, _) in classes.items():
            if omitted_aq == aq:
                reached[name].add(shown)
    for name, (_, expected) in classes.items():
        checks[f"{name} class reaches {expected} at 4"] = expected in reached[name]
    checks["Δ classes split into ω and ω′"] = (
        reached["Δ"] == {T1} and reached["Δ′"] == {T2} and reached["Δ″"] == {T2})
    record(7, "circuit: transition states, theorem 7 and the three AD-plausible classes", checks)


# -------------------------------------------------------------- criterion 8


def test_criterion_08_vicious_cycle():
    dom, _ = load("relay-loop")
    code, out = run_json("trans", "relay-loop")
    strat = ramification.check_stratified(dom)
    cycle_nodes = {n.lstrip("¬") for c in strat.cycles for n in c}
    checks = {
        "reports divergence": out["diverged"] is True,
        "within the default bound": out["steps"] == ramification.default_max_steps(dom),
        "no stable successor": out["states"] == [],
        "exit signals no result": code == 1,
        "not stratified": strat.stratified is False,
        "cycle through sw2, relay1, relay2": {"sw2", "relay1", "relay2"} <= cycle_nodes,
    }
    start = initial_state(dom)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=ramification.default_max_steps(dom), max_value=80))
    def never_settles(steps):
        result = ramification.trans(dom, start, "toggle1", steps)
        assert result.states == [] and result.diverged

    try:
        never_settles()
        checks["no stable successor for larger bounds"] = True
    except AssertionError:
        checks["no stable successor for larger bounds"] = False
    record(8, "relay loop: divergence and the sw2/relay cycle", checks)


# -------------------------------------------------------------- criterion 9


SUITCASE_TRACE = [
    ["c1 = 0", "{upL1, upL2, open, ¬held_closed}"],
    ["c2 = 1", "{upL1, upL2, ¬open, held_closed}"],
    ["c4 = 1", "{upL1, upL2, ¬open, held_closed}"],
    ["c5 = 2", "{¬upL1, upL2, ¬open, held_closed}"],
    ["c3 = 2", "{¬upL1, upL2, ¬open, held_closed}"],
]


def test_criterion_09_suitcase():
    code, out = run_cli("corpus", "run", "suitcase")
    _, report = run_json("solve", "suitcase", "--semantics", "ad-plausible", "--trace")
    traces = [[[row["time"], row["state"]] for row in e["trace"]] for e in report["extensions"]]
    record(9, "suitcase: five-row state trace ending with the latch down and the lid held", {
        "corpus transcript matches": code == 0 and "suitcase: PASS" in out,
        "an extension reproduces the trace": SUITCASE_TRACE in traces,
        "every extension ends the same way": all(t[-1] == SUITCASE_TRACE[-1] for t in traces),
    })


# ------------------------------------------------------------- criterion 10


CORPUS = ["yale", "yale-surprise", "stolen-car", "murder-mystery", "spy", "potato",
          "roulette", "circuit", "suitcase", "relay-loop"]


def test_criterion_10_oracle_equivalence():
    checks = {}
    for name in CORPUS:
        _, g = load(name)
        try:
            canon = models.enumerate_cpmm(g) if g.mode == "S" else models.enumerate_cpmqm(g)
        except ResourceBound:
            continue  # beyond the model enumerator's bound
        chosen = semantics.plausible_sets(g) if g.mode == "S" else semantics.q_plausible_sets(g)
        checks[name] = {frozenset(v.assumptions) for v in chosen} == {i.delta_qf for i in canon}
    checks["at least the S and Q corpus checked"] = len(checks) >= 7
    record(10, "extension sets equal the assumption projections of canonical models", checks)


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0 if all("PASS" in v for v in RESULTS.values()) else 1)

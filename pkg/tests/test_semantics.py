import itertools

import pytest
from hypothesis import given, settings, strategies as st

from argact import semantics as S
from argact.deduction import ResourceBound, close
from argact.lang import AQAt, ActionEffect, FAAt, Literal, ground, ground_formula
from argact.models import random_domain
from argact.parser import parse_domain, parse_formula

from conftest import load


def fa(t, fluent, positive=True):
    return FAAt(t, Literal(fluent, positive))


def sets(verdicts):
    return {frozenset(v.assumptions) for v in verdicts}


def entails(g, delta, text):
    return S.extension(g, delta).entails(ground_formula(parse_formula(text), {}, None, g.horizon))


EMPTY = ground(parse_domain("domain d; fluents f; horizon 1;"))
D1 = {fa(0, "alive"), fa(1, "alive"), fa(1, "loaded")}
D2 = {fa(0, "alive"), fa(1, "alive"), fa(2, "alive")}

MINI_YALE = """
domain mini; fluents loaded, alive; actions shoot; horizon 1;
fact [0] loaded; fact [0] alive; fact [0,1] shoot;
effect shoot if loaded causes -alive;
"""


def brute_presumable(g):
    universe = list(g.assumptions)
    out = set()
    for k in range(len(universe) + 1):
        for combo in itertools.combinations(universe, k):
            if "presumable" in S.verdict(g, combo).flags:
                out.add(frozenset(combo))
    return out


# ---------------------------------------------------------- attack/rejection


def test_attack_examples():
    _, g = load("yale")
    assert S.attacks(g, D1, fa(2, "alive"))
    assert not S.attacks(g, D2, fa(1, "loaded"))
    assert S.rejects(g, D2, fa(1, "loaded"))
    assert S.leniently_rejects(g, D2, fa(1, "loaded"))
    assert not S.leniently_rejects(g, D1, fa(2, "alive"))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**12 - 1))
def test_every_set_attacks_the_unloaded_frame(mask):
    _, g = load("yale")
    delta = {a for i, a in enumerate(g.assumptions) if mask >> i & 1}
    assert S.attacks(g, delta, fa(0, "loaded", False))


def test_nothing_rejected_without_rules():
    assert not S.rejects(EMPTY, set(), fa(0, "f"))
    assert S.lr(EMPTY, set()) == frozenset()


def test_closed_and_conflict_free():
    _, g = load("yale")
    assert S.is_closed(g, set()) and S.is_conflict_free(g, set())
    assert not S.is_conflict_free(g, g.assumptions)
    assert S.is_closed(EMPTY, set()) and S.is_conflict_free(EMPTY, set())


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["yale", "stolen-car", "spy", "roulette"]), st.integers(0, 2**13 - 1),
       st.integers(0, 12))
def test_conflict_free_attack_means_rejection(name, mask, pick):
    _, g = load(name)
    universe = list(g.assumptions)
    delta = {a for i, a in enumerate(universe) if mask >> i & 1}
    target = universe[pick % len(universe)]
    if S.is_conflict_free(g, delta) and S.attacks(g, delta, target) and target not in delta:
        assert S.rejects(g, delta, target)
    # every set is closed or attacks itself
    assert S.is_closed(g, delta) or S.attacks_itself(g, delta)


# ------------------------------------------------------------ presumable sets


def test_yale_presumable_includes_the_intended_set():
    _, g = load("yale")
    intended = frozenset(g.assumptions) - {fa(0, "loaded", False), fa(2, "alive")}
    assert intended in sets(S.presumable_sets(g))


def test_empty_domain_has_the_full_universe():
    assert sets(S.presumable_sets(EMPTY)) == {frozenset(EMPTY.assumptions)}
    [v] = S.plausible_sets(EMPTY)
    assert v.lr == ()


def test_stolen_car():
    _, g = load("stolen-car")
    pres = S.presumable_sets(g)
    assert [v.omitted for v in pres] == [(fa(0, "parked"),), (fa(1, "parked"),)]
    plaus = S.plausible_sets(g)
    assert sets(plaus) == sets(pres)
    assert {v.lr for v in plaus} == {(fa(0, "parked"),), (fa(1, "parked"),)}


@pytest.mark.parametrize("name", ["yale", "stolen-car", "murder-mystery", "spy", "roulette"])
def test_presumable_matches_subset_enumeration(name):
    _, g = load(name)
    assert sets(S.presumable_sets(g)) == brute_presumable(g)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5000), st.booleans())
def test_presumable_matches_subset_enumeration_on_random_domains(seed, qualified):
    g = ground(random_domain(seed, qualified=qualified, max_horizon=2))
    if len(g.assumptions) > 10:
        return
    assert sets(S.presumable_sets(g)) == brute_presumable(g)


# -------------------------------------------------------------- the filters


def test_yale_plausible_and_stable():
    _, g = load("yale")
    [v] = S.plausible_sets(g)
    assert v.omitted == (fa(0, "loaded", False), fa(2, "alive"))
    assert sets(S.stable_sets(g)) == {frozenset(v.assumptions)}
    assert entails(g, v.assumptions, "-[3]alive")


def test_mini_yale_keeps_the_shot():
    g = ground(parse_domain(MINI_YALE))
    shot = AQAt(0, ActionEffect("shoot", Literal("alive", False)), 1)
    [v] = S.q_plausible_sets(g)
    assert shot in v.assumptions
    assert S.attacks(g, v.assumptions, fa(0, "alive"))
    # the frame-favouring rival is presumable but drops out
    assert len(S.presumable_sets(g)) == 2


def test_potato():
    _, g = load("potato")
    found = S.q_plausible_sets(g)
    assert len(found) == 2
    started = AQAt(1, ActionEffect("turn_on_ignition", Literal("get_started")), 2)
    blocked = AQAt(0, ActionEffect("insert_potato", Literal("blocked_tp")), 1)
    assert [(blocked in v.assumptions, started in v.assumptions) for v in found].count((True, False)) == 1
    assert [(blocked in v.assumptions, started in v.assumptions) for v in found].count((False, True)) == 1
    [kept] = S.select_min_lr_aq(found)
    assert blocked in kept.assumptions and started not in kept.assumptions


def test_spy_sets_hold_exactly_one_qualification():
    _, g = load("spy")
    for v in S.q_plausible_sets(g):
        assert len(v.aq) == 1
    for v in S.preferred_sets(g):
        assert not v.aq


def test_select_min_lr_aq_edge_cases():
    _, g = load("spy")
    found = S.q_plausible_sets(g)
    assert S.select_min_lr_aq(found[:1]) == found[:1]
    # the three spy sets leniently reject different single assumptions
    assert S.select_min_lr_aq(found) == found


def test_roulette_extensions_disagree_on_loaded():
    _, g = load("roulette")
    found = S.q_plausible_sets(g)
    assert len(found) == 2
    verdicts = sorted(entails(g, v.assumptions, "[1]loaded") for v in found)
    assert verdicts == [False, True]
    assert any(entails(g, v.assumptions, "-[1]loaded") for v in found)
    assert not any(entails(g, v.assumptions, "[1]loaded")
                   and entails(g, v.assumptions, "-[1]loaded") for v in found)


def test_empty_extension_is_the_bare_theory():
    _, g = load("yale")
    assert S.extension(g, ()).literals() == close(g, ()).literals()


@pytest.mark.parametrize("name", ["yale", "yale-surprise", "stolen-car", "murder-mystery", "spy",
                                  "potato", "roulette"])
def test_filter_chain_never_adds(name):
    _, g = load(name)
    pres = sets(S.presumable_sets(g))
    plaus = sets(S.plausible_sets(g))
    semi = sets(S.semi_q_plausible_sets(g))
    q = sets(S.q_plausible_sets(g))
    assert plaus <= pres and semi <= pres and q <= semi


@pytest.mark.parametrize("name", ["yale", "stolen-car", "murder-mystery"])
def test_s_domains_q_filter_is_plausibility(name):
    _, g = load(name)
    assert g.mode == "S"
    assert sets(S.q_plausible_sets(g)) == sets(S.plausible_sets(g))


@pytest.mark.parametrize("name", ["yale", "yale-surprise", "stolen-car", "murder-mystery", "spy", "roulette"])
def test_stable_sets_are_preferred(name):
    _, g = load(name)
    assert sets(S.stable_sets(g)) <= sets(S.preferred_sets(g))


# ------------------------------------------------------------- admissibility


def test_empty_set_is_admissible():
    for name in ("yale", "spy", "roulette"):
        _, g = load(name)
        assert frozenset() in sets(S.admissible_sets(g))


@pytest.mark.parametrize("name", ["spy", "stolen-car", "roulette"])
def test_admissible_sets_defend_themselves(name):
    _, g = load(name)
    universe = list(g.assumptions)
    subsets = [frozenset(c) for k in range(len(universe) + 1) for c in itertools.combinations(universe, k)]
    # an inconsistent set entails every assumption, so only the whole universe can be closed
    closed = [b for b in subsets if S.is_closed(g, b)]
    admissible = sets(S.admissible_sets(g))
    for delta in closed:
        attackers = [b for b in closed if any(S.attacks(g, b, d) for d in delta)]
        defended = all(any(S.attacks(g, delta, x) for x in b) for b in attackers)
        self_attack = any(S.attacks(g, delta, d) for d in delta)
        assert (delta in admissible) == (defended and not self_attack)
    preferred = sets(S.preferred_sets(g))
    assert preferred == {a for a in admissible if not any(a < b for b in admissible)}


def test_enumeration_bound(monkeypatch):
    monkeypatch.setenv("ARGACT_MAX_ASSUMPTIONS", "3")
    _, g = load("spy")
    with pytest.raises(ResourceBound):
        S.preferred_sets(g)


def test_search_budget():
    _, g = load("yale")
    with pytest.raises(ResourceBound):
        S.maximal_consistent_subsets(g, budget=1)


def test_verdicts_are_deterministic():
    _, g = load("potato")
    first = S.q_plausible_sets(g)
    again = S.q_plausible_sets(ground(load("potato")[0]))
    assert first == again


def test_solve_rejects_unknown_semantics():
    with pytest.raises(ValueError):
        S.solve(EMPTY, "grounded")

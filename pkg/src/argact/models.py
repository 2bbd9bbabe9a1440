"""Bounded model enumeration and the model/argument correspondence checks.

Interpretations live on the window [0, H].  Outside it every model takes the
same canonical values (frame and qualification assumptions true, no
occurrences), so inclusion tests over the window decide global inclusion.
Basic occurrences are fixed to those the theory entails, and dummy events are
unit triples ``(t, da_l, t+1)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator

from .deduction import ResourceBound, engine, satisfiable
from .lang import (
    atoms_of,
    as_literal,
    AQAt,
    DomainDescription,
    EffectRule,
    FAAt,
    FluentAt,
    Formula,
    GroundDomain,
    Literal,
    Not,
    Occ,
    QualRule,
    Signature,
    Time,
    AtTime,
    Occurs,
    FluentRef,
    evaluate,
    ground_formula,
    negate,
    sort_assumptions,
)
from . import semantics

MODEL_BOUND = 16


def dummy_name(lit: Literal) -> str:
    return f"da_{lit}"


@dataclass(frozen=True)
class Interpretation:
    """A finite-window interpretation; ``history[t][i]`` is fluent i at t."""

    fluents: tuple[str, ...]
    history: tuple[tuple[bool, ...], ...]
    occ: frozenset
    fa: frozenset
    aq: frozenset

    @property
    def horizon(self) -> int:
        return len(self.history) - 1

    def holds(self, t: int, fluent: str) -> bool:
        return self.history[t][self.fluents.index(fluent)]

    def value(self, atom) -> bool:
        if isinstance(atom, FluentAt):
            if not 0 <= atom.time <= self.horizon:
                return False
            return self.history[atom.time][self.fluents.index(atom.fluent)]
        if isinstance(atom, Occ):
            return atom in self.occ
        if isinstance(atom, FAAt):
            return atom in self.fa if 0 <= atom.time < self.horizon else True
        if isinstance(atom, AQAt):
            return atom in self.aq
        raise TypeError(atom)

    def eval(self, f: Formula, t: int = 0) -> bool:
        return evaluate(ground_formula(f, {}, t, self.horizon), self.value)

    @property
    def delta_qf(self) -> frozenset:
        return self.fa | self.aq

    def key(self) -> tuple:
        return (self.history, tuple(sorted(map(str, self.occ))),
                tuple(sorted(map(str, self.fa))), tuple(sorted(map(str, self.aq))))

    def rows(self) -> list[str]:
        out = []
        for t, state in enumerate(self.history):
            lits = [f if v else "¬" + f for f, v in zip(self.fluents, state)]
            out.append(f"{t}: " + ", ".join(lits))
        occ = sorted(self.occ, key=lambda o: (o.start, o.end, o.action))
        out.append("occ: " + ", ".join(str(o) for o in occ))
        out.append("FA: " + ", ".join(str(a) for a in sort_assumptions(self.fa)))
        if self.aq:
            out.append("AQ: " + ", ".join(str(a) for a in sort_assumptions(self.aq)))
        return out


class ModelSpace:
    """Everything needed to enumerate interpretations of one ground domain."""

    def __init__(self, g: GroundDomain, explain_with_ramifications: bool | None = None):
        self.g = g
        self.fluents = g.fluents
        self.H = g.horizon
        if len(self.fluents) * (self.H + 1) > MODEL_BOUND:
            raise ResourceBound(
                f"{len(self.fluents)} fluents over {self.H + 1} time points exceed the model bound {MODEL_BOUND}")
        self.fa_universe = tuple(a for a in g.assumptions if isinstance(a, FAAt))
        self.aq_universe = tuple(a for a in g.assumptions if isinstance(a, AQAt))
        if len(self.aq_universe) > 12:
            raise ResourceBound(f"{len(self.aq_universe)} qualification assumptions exceed the model bound 12")
        facts = list(g.facts)
        self.basic = frozenset(o for o in g.occurrences if not satisfiable(facts + [Not(o)]))
        if explain_with_ramifications is None:
            explain_with_ramifications = g.mode == "AD"
        kinds = {"action", "ramification"} if explain_with_ramifications else {"action"}
        self.explainers: dict = {}
        for r in g.rules:
            if r.kind in kinds:
                for e in r.effects:
                    self.explainers.setdefault((e.time, e.literal), []).append(r)
        # rules that use each qualification assumption; quals mentioning AQ atoms stay branching
        self.aq_rules: dict = {}
        self.aq_quals: dict = {}
        self.aq_dependent: set = set()
        for r in g.rules:
            if r.kind == "qualification":
                for a, _ in r.consequence:
                    self.aq_quals.setdefault(a, []).append(r)
                    if any(isinstance(x, (AQAt, FAAt)) for p in r.premises for x in atoms_of(p)):
                        self.aq_dependent.add(a)
                continue
            for p in r.premises:
                if isinstance(p, AQAt):
                    self.aq_rules.setdefault(p, []).append(r)
        self._compiled: dict = {}
        self._fa_premises: dict = {}
        for r in g.rules:
            lits = [as_literal(p) for p in r.premises]
            self._compiled[r] = None if any(l is None for l in lits) else lits
            self._fa_premises[r] = [p for p in r.premises if isinstance(p, FAAt)]
        fixed = {a: v for a, v in engine(g).base_assign.items() if isinstance(a, FluentAt)}
        self.fixed = fixed
        self.free = [FluentAt(t, f) for t in range(self.H + 1) for f in self.fluents
                     if FluentAt(t, f) not in fixed]

    # --------------------------------------------------------------- pieces

    def histories(self) -> Iterator[dict]:
        facts = self.g.facts
        for bits in product((False, True), repeat=len(self.free)):
            h = dict(self.fixed)
            h.update(zip(self.free, bits))
            val = self._valuer(h, self.basic, frozenset(), frozenset())
            if all(evaluate(f, val) for f in facts):
                yield h

    def _valuer(self, h: dict, occ, fa, aq):
        # anything not listed is false: occurrences, assumptions and times outside the window
        table = dict(h)
        table.update(dict.fromkeys(occ, True))
        table.update(dict.fromkeys(fa, True))
        table.update(dict.fromkeys(aq, True))
        get = table.get
        return lambda atom: get(atom, False)

    def interpretation(self, h: dict, occ, fa, aq) -> Interpretation:
        hist = tuple(tuple(h[FluentAt(t, f)] for f in self.fluents) for t in range(self.H + 1))
        return Interpretation(self.fluents, hist, frozenset(occ), frozenset(fa), frozenset(aq))

    def is_model(self, h: dict, occ, fa, aq) -> bool:
        val = self._valuer(h, occ, fa, aq)
        if not all(evaluate(f, val) for f in self.g.facts):
            return False
        for r in self.g.rules:
            if self._fires(r, val):
                if not all(val(a) == pol for a, pol in r.consequence):
                    return False
        return True

    def _fires(self, r, val, skip_fa: bool = False) -> bool:
        lits = self._compiled[r]
        if lits is None:
            return all(evaluate(p, val) for p in r.premises
                       if not (skip_fa and isinstance(p, FAAt)))
        return all(val(a) == pol for a, pol in lits if not (skip_fa and isinstance(a, FAAt)))

    def _explained(self, t: int, new: Literal, val) -> bool:
        return any(self._fires(r, val)
                   for r in self.explainers.get((t + 1, new), ()))

    def flips(self, h: dict) -> list[tuple[int, Literal]]:
        out = []
        for t in range(self.H):
            for f in self.fluents:
                a, b = h[FluentAt(t, f)], h[FluentAt(t + 1, f)]
                if a != b:
                    out.append((t, Literal(f, a)))
        return out

    def canonical_dummies(self, h: dict, aq) -> frozenset:
        val = self._valuer(h, self.basic, frozenset(), aq)
        return frozenset(Occ(t, dummy_name(negate(l)), t + 1)
                         for t, l in self.flips(h) if not self._explained(t, negate(l), val))

    def max_fa(self, h: dict, aq) -> frozenset:
        """Largest ε_f compatible with (h, ε_q): frame rules and action kills decide."""
        val = self._valuer(h, self.basic, frozenset(self.fa_universe), aq)
        killed = set()
        for r in self.g.rules:
            fa_prem = self._fa_premises[r]
            if not self._fires(r, val, skip_fa=True):
                continue
            violated = [a for a, pol in r.consequence if val(a) != pol]
            for a in violated:
                if isinstance(a, FAAt):
                    killed.add(a)
            if fa_prem and any(not isinstance(a, FAAt) for a in violated):
                killed.update(fa_prem)
        return frozenset(a for a in self.fa_universe if a not in killed)

    def aq_subsets(self) -> Iterator[frozenset]:
        n = len(self.aq_universe)
        for mask in range(1 << n):
            yield frozenset(a for i, a in enumerate(self.aq_universe) if mask >> i & 1)

    def aq_choices(self, h: dict) -> Iterator[frozenset]:
        """The ε_q values for one history that can survive occurrence and AQ minimisation.

        Turning an assumption on never adds a dummy and only grows ε_q, so it
        is on unless its enabled rule's effect fails in ``h`` or a
        qualification rule fires.  Assumptions whose qualification rules
        mention other assumptions are left to branch.
        """
        val = self._valuer(h, self.basic, frozenset(), frozenset())
        fixed, branch = set(), []
        for a in self.aq_universe:
            if a in self.aq_dependent:
                branch.append(a)
                continue
            ok = not any(self._fires(r, val) for r in self.aq_quals.get(a, ()))
            for r in self.aq_rules.get(a, ()):
                if not ok:
                    break
                if all(p == a or isinstance(p, FAAt) or evaluate(p, val) for p in r.premises):
                    ok = all(val(x) == pol for x, pol in r.consequence if not isinstance(x, FAAt))
            if ok:
                fixed.add(a)
        for bits in product((False, True), repeat=len(branch)):
            yield frozenset(fixed) | frozenset(a for a, b in zip(branch, bits) if b)

    # ------------------------------------------------------------ model sets

    def canonical_models(self, s_models: bool, exhaustive: bool = False) -> list[Interpretation]:
        """Coherent models with minimal dummies and maximal ε_f for each (h, ε_q).

        Any other coherent model is beaten on occurrences or frame
        assumptions by one of these with the same history and ε_q.  Unless
        ``exhaustive`` is set, ε_q is narrowed per history to the values
        that can survive occurrence and AQ minimisation.
        """
        out = []
        for h in self.histories():
            if s_models:
                aq_choices = [frozenset(self.aq_universe)]
            else:
                aq_choices = self.aq_subsets() if exhaustive else self.aq_choices(h)
            for aq in aq_choices:
                fa = self.max_fa(h, aq)
                occ = self.basic | self.canonical_dummies(h, aq)
                if self.is_model(h, occ, fa, aq):
                    out.append(self.interpretation(h, occ, fa, aq))
        return out

    def relativised(self, delta: Iterable) -> list[Interpretation]:
        """Models whose assumptions are exactly Δ and whose occurrences are OA_D ∪ DAS(Δ)."""
        delta = frozenset(delta)
        fa = frozenset(a for a in delta if isinstance(a, FAAt))
        aq = frozenset(a for a in delta if isinstance(a, AQAt))
        out = []
        for h in self.histories():
            val = self._valuer(h, self.basic, fa, aq)
            das = frozenset(
                Occ(a.time, dummy_name(negate(a.literal)), a.time + 1)
                for a in self.fa_universe
                if a not in fa and not self._explained(a.time, negate(a.literal), val)
            )
            occ = self.basic | das
            if self.is_model(h, occ, fa, aq):
                out.append(self.interpretation(h, occ, fa, aq))
        return out


def _minimal(items: list, key) -> list:
    keys = [key(i) for i in items]
    return [i for i, k in zip(items, keys) if not any(o < k for o in keys)]


def _maximal(items: list, key) -> list:
    keys = [key(i) for i in items]
    return [i for i, k in zip(items, keys) if not any(o > k for o in keys)]


def _sorted(models: Iterable[Interpretation]) -> list[Interpretation]:
    return sorted(models, key=Interpretation.key)


def enumerate_coherent(g: GroundDomain, s_models: bool | None = None) -> list[Interpretation]:
    space = ModelSpace(g)
    if s_models is None:
        s_models = g.mode == "S"
    return _sorted(space.canonical_models(s_models, exhaustive=True))


def enumerate_cpmm(g: GroundDomain) -> list[Interpretation]:
    """Minimal occurrences, then maximal frame assumptions, over coherent S-models."""
    models = ModelSpace(g).canonical_models(s_models=True)
    pmm = _minimal(models, lambda i: i.occ)
    return _sorted(_maximal(pmm, lambda i: i.fa))


def enumerate_cpmqm(g: GroundDomain) -> list[Interpretation]:
    """Minimal occurrences, then maximal AQ, then maximal FA, over coherent Q-models."""
    models = ModelSpace(g).canonical_models(s_models=False)
    pmqm = _minimal(models, lambda i: i.occ)
    stage = _maximal(pmqm, lambda i: i.aq)
    return _sorted(_maximal(stage, lambda i: i.fa))


def relativised_models(g: GroundDomain, delta: Iterable) -> list[Interpretation]:
    return _sorted(ModelSpace(g).relativised(delta))


def is_model(g: GroundDomain, interp: Interpretation) -> bool:
    space = ModelSpace(g)
    h = {FluentAt(t, f): interp.history[t][i] for t in range(space.H + 1) for i, f in enumerate(space.fluents)}
    return space.is_model(h, interp.occ, interp.fa, interp.aq)


def is_coherent(g: GroundDomain, interp: Interpretation) -> bool:
    space = ModelSpace(g)
    basic_actions = set(g.domain.signature.actions)
    if {o for o in interp.occ if o.action in basic_actions} - space.basic:
        return False
    h = {FluentAt(t, f): interp.history[t][i] for t in range(space.H + 1) for i, f in enumerate(space.fluents)}
    val = space._valuer(h, interp.occ, interp.fa, interp.aq)
    for t, l in space.flips(h):
        new = negate(l)
        if not space._explained(t, new, val) and Occ(t, dummy_name(new), t + 1) not in interp.occ:
            return False
    return True


# ------------------------------------------------------------------- harness


@dataclass
class TheoremReport:
    theorem: int
    passed: bool
    checked: int
    witnesses: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"theorem {self.theorem}: {status} ({self.checked} checked)"


def _fmt(delta: Iterable) -> str:
    return "{" + ", ".join(str(a) for a in sort_assumptions(delta)) + "}"


def verify_correspondence(g: GroundDomain, theorem: int) -> TheoremReport:
    """Compare the argument side with the model side for one of theorems 1-6."""
    if theorem not in range(1, 7):
        raise ValueError("theorem must be between 1 and 6")
    q = theorem >= 4
    space = ModelSpace(g)
    pres = semantics.presumable_sets(g)
    if q:
        chosen = semantics.q_plausible_sets(g, pres)
        canon = enumerate_cpmqm(g)
    else:
        chosen = semantics.plausible_sets(g, pres)
        canon = enumerate_cpmm(g)
    chosen_sets = {frozenset(v.assumptions) for v in chosen}
    canon_keys = {i.key() for i in canon}
    witnesses: list[str] = []
    k = theorem - 3 if q else theorem

    if k == 1:
        for i in canon:
            if i.delta_qf not in chosen_sets:
                witnesses.append(f"model with Δ={_fmt(i.delta_qf)} has no matching extension")
        return TheoremReport(theorem, not witnesses, len(canon), witnesses)

    if k == 2:
        candidates = chosen_sets | {i.delta_qf for i in canon} | {frozenset(v.assumptions) for v in pres}
        for d in sorted(candidates, key=_fmt):
            mods = space.relativised(d)
            good = bool(mods) and all(m.key() in canon_keys for m in mods)
            if good != (d in chosen_sets):
                side = "selected" if d in chosen_sets else "not selected"
                witnesses.append(f"Δ={_fmt(d)} is {side} but relativised models are "
                                 f"{'all canonical' if good else 'not all canonical'} ({len(mods)})")
        return TheoremReport(theorem, not witnesses, len(candidates), witnesses)

    union = {}
    for d in chosen_sets:
        for m in space.relativised(d):
            union[m.key()] = m
    missing = canon_keys - set(union)
    extra = set(union) - canon_keys
    for key in sorted(missing)[:5]:
        witnesses.append(f"canonical model not produced by any extension: {key[0]}")
    for key in sorted(extra)[:5]:
        witnesses.append(f"extension model that is not canonical: {key[0]}")
    return TheoremReport(theorem, not (missing or extra), len(canon_keys | set(union)), witnesses)


# ------------------------------------------------------- random small domains


def random_domain(seed: int, qualified: bool = False, max_fluents: int = 2,
                  max_actions: int = 2, max_horizon: int = 3) -> DomainDescription:
    """A small random, well-defined domain with a complete initial state.

    Occurrences have unit length and every fluent is fixed at 0.  Either
    effects carry conditions or the theory observes later time points, never both.
    """
    rng = random.Random(seed)
    fluents = tuple(f"f{i}" for i in range(rng.randint(1, max_fluents)))
    actions = tuple(f"a{i}" for i in range(rng.randint(1, max_actions)))
    H = rng.randint(1, max_horizon)

    def lit() -> Literal:
        return Literal(rng.choice(fluents), rng.random() < 0.5)

    def lit_at(l: Literal, t) -> Formula:
        body = AtTime(t if isinstance(t, Time) else Time(t), FluentRef(l.fluent))
        return body if l.positive else Not(body)

    facts: list[Formula] = []
    for f in fluents:
        facts.append(lit_at(Literal(f, rng.random() < 0.5), 0))
    # Conditions and later observations are not mixed: a condition on a fluent
    # whose value depends on where a surprise happened is decided by the models
    # but left open by the closure, which never reasons backward.
    conditional = rng.random() < 0.5
    if not conditional:
        for _ in range(rng.randint(0, 2)):
            facts.append(lit_at(lit(), rng.randint(1, H)))
    for _ in range(rng.randint(1, H + 1)):
        t = rng.randint(0, H - 1)
        occ = Occurs(Time(t), Time(t + 1), rng.choice(actions))
        if occ not in facts:
            facts.append(occ)

    # one direction per fluent keeps the rule set well-defined
    direction = {f: rng.random() < 0.5 for f in fluents}
    effects: list[EffectRule] = []
    seen = set()
    for a in actions:
        for _ in range(rng.randint(1, 2)):
            f = rng.choice(fluents)
            e = Literal(f, direction[f])
            if (a, e) in seen:
                continue
            seen.add((a, e))
            conds = (lit_at(lit(), Time("t")),) if conditional and rng.random() < 0.6 else ()
            effects.append(EffectRule(a, e, conds, qualified=qualified))
    quals: list[QualRule] = []
    if qualified:
        for e in effects:
            if rng.random() < 0.4:
                when = Time("u") if rng.random() < 0.5 else Time("t")
                quals.append(QualRule(e.effect, (lit_at(lit(), when),), e.action, ("t", "u")))
    return DomainDescription(
        name=f"random_{'q' if qualified else 's'}_{seed}",
        signature=Signature(fluents, actions),
        horizon=H,
        facts=tuple(facts),
        effects=tuple(effects),
        quals=tuple(quals),
    )

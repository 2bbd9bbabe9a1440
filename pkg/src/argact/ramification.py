"""Indirect effects: stable time points, compliance, and state transitions.

The transition side works on complete literal snapshots (instantwise
states).  Direct effects come from the action statements whose conditions
hold in the snapshot; indirect effects come from ``ramify`` statements.  A
causal step applies any nonempty set of ramification rules that would change
the snapshot, so different firing orders show up as different paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from graphlib import CycleError, TopologicalSorter
from itertools import combinations, permutations, product
from typing import Iterable, Iterator

from .deduction import ResourceBound, engine
from .lang import (
    AQAt,
    ActionEffect,
    AtTime,
    BinOp,
    Compare,
    Const,
    DomainDescription,
    FAAt,
    FluentAt,
    FluentRef,
    Formula,
    GroundDomain,
    Literal,
    Not,
    Occ,
    Occurs,
    as_literal,
    RamificationEffect,
    ValidationError,
    ground,
    negate,
)
from . import semantics
from .semantics import AssumptionVerdict


# ------------------------------------------------------------------ states


@dataclass(frozen=True, order=True)
class InstantwiseState:
    """A complete, consistent set of fluent literals."""

    values: tuple[tuple[str, bool], ...]

    @classmethod
    def of(cls, mapping: dict[str, bool]) -> "InstantwiseState":
        return cls(tuple(sorted(mapping.items())))

    @classmethod
    def parse(cls, text: str, fluents: Iterable[str]) -> "InstantwiseState":
        fluents = list(fluents)
        got: dict[str, bool] = {}
        for raw in text.replace(";", ",").split(","):
            item = raw.strip()
            if not item:
                continue
            positive = True
            while item[:1] in ("-", "¬"):
                positive = not positive
                item = item[1:].strip()
            if item not in fluents:
                raise ValidationError(f"unknown fluent {item!r} in state")
            if item in got and got[item] != positive:
                raise ValidationError(f"state gives both {item} and ¬{item}")
            got[item] = positive
        missing = [f for f in fluents if f not in got]
        if missing:
            raise ValidationError(f"state leaves out {', '.join(missing)}")
        return cls.of(got)

    def as_dict(self) -> dict[str, bool]:
        return dict(self.values)

    def holds(self, lit: Literal) -> bool:
        return self.as_dict()[lit.fluent] == lit.positive

    def update(self, lits: Iterable[Literal]) -> "InstantwiseState":
        d = self.as_dict()
        for l in lits:
            d[l.fluent] = l.positive
        return InstantwiseState.of(d)

    def literals(self, order: Iterable[str] | None = None) -> list[Literal]:
        d = self.as_dict()
        names = list(order) if order is not None else sorted(d)
        return [Literal(f, d[f]) for f in names]

    def render(self, order: Iterable[str] | None = None) -> str:
        return "{" + ", ".join(str(l) for l in self.literals(order)) + "}"


def _state_eval(f: Formula, state: dict[str, bool]) -> bool:
    """Evaluate a statement condition in one snapshot (all times collapse to it)."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, FluentRef):
        return state[f.name]
    if isinstance(f, AtTime):
        return _state_eval(f.body, state)
    if isinstance(f, Not):
        return not _state_eval(f.body, state)
    if isinstance(f, BinOp):
        a, b = _state_eval(f.left, state), _state_eval(f.right, state)
        return {"&": a and b, "|": a or b, "->": (not a) or b, "<->": a == b}[f.op]
    if isinstance(f, Compare):
        # interval conditions such as t < u hold for the unit steps used here
        return f.op in ("<", "<=") if f.left.base != f.right.base else f.op != "<"
    if isinstance(f, Occurs):
        raise ValidationError("occurrence conditions are not supported in state transitions")
    raise TypeError(f"cannot evaluate {f!r} in a state")


@dataclass(frozen=True)
class RamificationRuleView:
    conditions: tuple[Formula, ...]
    effect: Literal

    @property
    def tag(self) -> RamificationEffect:
        return RamificationEffect(self.effect)

    def applicable(self, state: dict[str, bool]) -> bool:
        return all(_state_eval(c, state) for c in self.conditions)

    def condition_literals(self) -> list[Literal]:
        out = []
        for c in self.conditions:
            out.extend(_literals_of(c))
        return out


def _literals_of(f: Formula, positive: bool = True) -> list[Literal]:
    if isinstance(f, FluentRef):
        return [Literal(f.name, positive)]
    if isinstance(f, AtTime):
        return _literals_of(f.body, positive)
    if isinstance(f, Not):
        return _literals_of(f.body, not positive)
    if isinstance(f, BinOp):
        return _literals_of(f.left, positive) + _literals_of(f.right, positive)
    return []


def rule_views(domain: DomainDescription) -> list[RamificationRuleView]:
    return [RamificationRuleView(r.conditions, r.effect) for r in domain.ramifications]


# ------------------------------------------------------------- direct step


def possible_applications(domain: DomainDescription, action: str, state: InstantwiseState) -> list[tuple]:
    """Maximal sets of applicable effect statements whose effects are consistent."""
    s = state.as_dict()
    applicable = [e for e in domain.effects if e.action == action
                  and all(_state_eval(c, s) for c in e.conditions)]
    if not applicable:
        return []
    out: list[tuple] = []
    for k in range(len(applicable), 0, -1):
        for combo in combinations(applicable, k):
            effects = {(e.effect.fluent, e.effect.positive) for e in combo}
            if len({f for f, _ in effects}) != len(effects):
                continue
            if any(set(combo) < set(o) for o in out):
                continue
            out.append(combo)
    return out


def res(domain: DomainDescription, state: InstantwiseState, action: str) -> set[InstantwiseState]:
    apps = possible_applications(domain, action, state)
    if not apps:
        return {state}
    return {state.update(e.effect for e in omega) for omega in apps}


def causes(domain: DomainDescription, state: InstantwiseState) -> set[InstantwiseState]:
    """One causal step: any nonempty consistent set of rules that change the state."""
    s = state.as_dict()
    firing = [r for r in rule_views(domain) if r.applicable(s) and not state.holds(r.effect)]
    effects = sorted({r.effect for r in firing}, key=lambda l: l.key)
    out = set()
    for k in range(1, len(effects) + 1):
        for combo in combinations(effects, k):
            if len({l.fluent for l in combo}) != k:
                continue
            out.add(state.update(combo))
    return out


def is_stable_state(domain: DomainDescription, state: InstantwiseState) -> bool:
    return not causes(domain, state)


@dataclass
class TransResult:
    states: list[InstantwiseState]
    diverged: bool
    steps: int


def default_max_steps(domain: DomainDescription) -> int:
    return 4 * 2 * len(domain.signature.fluents)


def trans(domain: DomainDescription, start: InstantwiseState, action: str,
          max_steps: int | None = None) -> TransResult:
    """Stable states reachable from the direct effects of ``action`` by causal steps."""
    if max_steps is None:
        max_steps = default_max_steps(domain)
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    found: set[InstantwiseState] = set()
    frontier = res(domain, start, action)
    depth = 0
    while frontier and depth < max_steps:
        nxt: set[InstantwiseState] = set()
        for s in frontier:
            succ = causes(domain, s)
            if succ:
                nxt |= succ
            else:
                found.add(s)
        frontier = nxt
        depth += 1
    return TransResult(sorted(found), bool(frontier), depth)


# ------------------------------------------------------------ stratification


@dataclass
class StratificationReport:
    stratified: bool
    cycles: list[list[str]]
    exact: bool | None = None


def check_stratified(domain: DomainDescription, exact_limit: int = 8) -> StratificationReport:
    """Literal dependency graph of the ramification rules; a cycle means non-stratified."""
    views = rule_views(domain)
    graph: dict[str, set[str]] = {}
    for v in views:
        graph.setdefault(str(v.effect), set())
        for c in v.condition_literals():
            graph.setdefault(str(v.effect), set()).add(str(c))
    cycles: list[list[str]] = []
    g = {k: set(vs) for k, vs in graph.items()}
    while True:
        try:
            TopologicalSorter(g).prepare()
            break
        except CycleError as exc:
            cyc = list(exc.args[1])
            cycles.append(cyc)
            # break the reported cycle at one edge and look for more
            a, b = cyc[0], cyc[1]
            if b in g.get(a, set()):
                g[a].discard(b)
            elif a in g.get(b, set()):
                g[b].discard(a)
            else:
                break
    exact = None
    if len(views) <= exact_limit:
        exact = _exact_cycle(views)
    return StratificationReport(not cycles and not exact, cycles, exact)


def _exact_cycle(views: list[RamificationRuleView]) -> bool:
    """Search for a rule cycle whose conditions a common literal set Φ can supply."""
    n = len(views)
    for k in range(1, n + 1):
        for combo in permutations(range(n), k):
            if combo[0] != min(combo):
                continue
            effects = [views[i].effect for i in combo]
            phi: set[Literal] = set()
            linked = all(effects[idx - 1] in views[i].condition_literals()
                         for idx, i in enumerate(combo))
            if not linked:
                continue
            for idx, i in enumerate(combo):
                prev = effects[idx - 1]
                for c in views[i].condition_literals():
                    if c != prev:
                        phi.add(c)
            if any(negate(l) in phi for l in phi):
                continue
            if any(negate(l) in phi for l in effects):
                continue
            return True
    return False


# --------------------------------------------------- argument-side notions


def _ramification_rules(g: GroundDomain):
    return [r for r in g.rules if r.kind == "ramification"]


def stable_time_points(g: GroundDomain, delta: Iterable) -> set[int]:
    """Time points where no ramification rule is derivably enabled without its effect holding."""
    c = engine(g).close(delta)
    unstable = set()
    for r in _ramification_rules(g):
        aq = next(p for p in r.premises if isinstance(p, AQAt))
        lit = aq.tag.literal
        t = aq.start
        if all(c.entails(p) for p in r.premises):
            f = FluentAt(t, lit.fluent)
            if not c.entails(f if lit.positive else Not(f)):
                unstable.add(t)
    return set(range(g.horizon + 1)) - unstable


def ramification_compliant(g: GroundDomain, delta: Iterable, maximal: bool = False) -> bool:
    """Saturated in qualification assumptions, with no unstable point keeping its frame row.

    ``maximal`` promises delta is maximal consistent; the saturation clause
    then holds trivially since nothing outside can be added consistently.
    """
    delta = frozenset(delta)
    eng = engine(g)
    base = eng.close(delta)
    if not base.consistent:
        return False
    # clause 1: every compatible qualification assumption that would add something is already in
    for a in () if maximal else g.assumptions:
        if not isinstance(a, AQAt) or a in delta:
            continue
        c = eng.close(delta | {a})
        if not c.consistent:
            continue
        extra = {k for k, v in c.assign.items() if base.assign.get(k) != v} - {a}
        if extra:
            return False
    # clause 2: no unstable time point keeps its whole frame row
    literals = g.domain.signature.literals
    stable = stable_time_points(g, delta)
    for t in range(g.horizon):
        if t in stable:
            continue
        if all(FAAt(t, l) in delta for l in literals):
            return False
    return True


def forward_determined(g: GroundDomain) -> bool:
    """The theory fixes every fluent at 0 and otherwise only states occurrences."""
    fixed = set()
    for f in g.facts:
        lit = as_literal(f)
        if lit is None:
            return False
        atom, _ = lit
        if isinstance(atom, FluentAt):
            if atom.time != 0:
                return False
            fixed.add(atom.fluent)
        elif not isinstance(atom, Occ):
            return False
    return fixed == set(g.fluents) and all(a.end == a.start + 1 for a in g.qual_assumptions)


def forward_sets(g: GroundDomain, budget: int | None = None) -> list[frozenset]:
    """Maximal consistent sets whose every omitted frame assumption is attacked.

    Only valid on forward-determined theories: there the state at t follows
    from the choices made before t, so the search can decide time point by
    time point which qualification assumptions to keep and then drop exactly
    the frame assumptions the kept rules defeat.
    """
    if not forward_determined(g):
        raise ValueError("forward search needs a forward-determined theory")
    eng = engine(g)
    steps = semantics._Budget(semantics.SEARCH_BUDGET if budget is None else budget)
    aq_at: dict[int, list] = {}
    for a in g.qual_assumptions:
        aq_at.setdefault(a.start, []).append(a)
    fa_at: dict[int, list] = {}
    for a in g.frame_assumptions:
        fa_at.setdefault(a.time, []).append(a)
    memo: dict[tuple, list[frozenset]] = {}

    def blocked(decided: frozenset, a) -> bool:
        return not eng.close(decided | {a}).consistent

    def when(atom) -> int:
        if isinstance(atom, FluentAt) or isinstance(atom, FAAt):
            return atom.time
        if isinstance(atom, AQAt):
            return atom.start
        return -1

    def suffixes(t: int, decided: frozenset) -> list[frozenset]:
        # later choices only see what the prefix fixes from t onwards
        if t == g.horizon:
            return [frozenset()]
        c = eng.close(decided)
        if not c.consistent:
            return []
        key = (t, frozenset((a, v) for a, v in c.assign.items() if when(a) >= t), c.residual)
        if key in memo:
            return memo[key]
        steps.tick()
        out: list[frozenset] = []
        open_ = [a for a in aq_at.get(t, []) if not c.entails(Not(a))]
        for k in range(len(open_), -1, -1):
            for keep in combinations(open_, k):
                d = decided | frozenset(keep)
                ck = eng.close(d)
                if not ck.consistent:
                    continue
                fas = [f for f in fa_at.get(t, []) if not ck.entails(Not(f))]
                d = d | frozenset(fas)
                if not eng.close(d).consistent:
                    continue
                # every assumption left out at t must be rejected already
                if any(not blocked(d, a) for a in open_ if a not in keep):
                    continue
                step = frozenset(keep) | frozenset(fas)
                out.extend(step | rest for rest in suffixes(t + 1, d))
        memo[key] = out
        return out

    return suffixes(0, frozenset())


def _action_qualification(a) -> bool:
    return isinstance(a, AQAt) and isinstance(a.tag, ActionEffect)


def ad_plausible_sets(g: GroundDomain, presumable=None) -> list[AssumptionVerdict]:
    """Compliant presumable sets, filtered for qualification precedence.

    With ramification rules present only action qualifications are maximised
    and the final frame-maximisation is skipped, so that different firing
    orders of indirect effects survive side by side.
    """
    if presumable is None and forward_determined(g):
        quick = [semantics._verdict(g, s, ("closed", "conflict_free", "presumable"), maximal=True)
                 for s in forward_sets(g)]
        quick = [v for v in quick if not v.lr_fa]
        keep = [v for v in quick if ramification_compliant(g, v.assumptions, maximal=True)]
        if keep:
            # sets with no leniently rejected frame assumption win the first stage outright
            presumable = keep
    pres = semantics.presumable_sets(g) if presumable is None else presumable
    compliant = [v.with_flags("ramification_compliant") for v in pres
                 if ramification_compliant(g, v.assumptions, maximal=True)]
    if not _ramification_rules(g):
        chosen = semantics.q_filter(compliant)
    else:
        chosen = semantics.q_filter(compliant, aq_scope=_action_qualification, fa_stage=False)
    return semantics._sorted(v.with_flags("ad_plausible") for v in chosen)


def state_at(g: GroundDomain, delta: Iterable, t: int) -> dict[str, bool | None]:
    c = engine(g).close(delta)
    return {f: c.value(FluentAt(t, f)) for f in g.fluents}


# ---------------------------------------------------------------- theorem 7


@dataclass
class Theorem7Report:
    passed: bool
    checked: int
    skipped: int
    trans_states: list[InstantwiseState]
    witnesses: list[str] = field(default_factory=list)
    family: str = "attacked-omissions"

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"theorem 7: {status} ({self.checked} {self.family} sets checked, "
                f"{self.skipped} not yet stable inside the window)")


def transition_domain(domain: DomainDescription, start: InstantwiseState, action: str,
                      horizon: int | None = None) -> DomainDescription:
    """The domain with the theory replaced by the start state and one action over [0,1]."""
    from .lang import Time

    facts: list[Formula] = []
    for l in start.literals(domain.signature.fluents):
        body = AtTime(Time(0), FluentRef(l.fluent))
        facts.append(body if l.positive else Not(body))
    facts.append(Occurs(Time(0), Time(1), action))
    h = domain.horizon if horizon is None else horizon
    return replace(domain, facts=tuple(facts), orders=(), horizon=max(h, 1))


MODEL_ATOM_LIMIT = 16


def _models_of_extension(g: GroundDomain, delta) -> Iterator[list[InstantwiseState]] | None:
    c = engine(g).close(delta)
    if not c.consistent:
        return None
    undetermined = [FluentAt(t, f) for t in range(g.horizon + 1) for f in g.fluents
                    if c.value(FluentAt(t, f)) is None]
    if len(undetermined) > MODEL_ATOM_LIMIT:
        raise ResourceBound(f"{len(undetermined)} undetermined fluent atoms exceed {MODEL_ATOM_LIMIT}")

    def gen():
        for bits in product((False, True), repeat=len(undetermined)):
            fill = dict(zip(undetermined, bits))
            rows = []
            for t in range(g.horizon + 1):
                row = {}
                for f in g.fluents:
                    v = c.value(FluentAt(t, f))
                    row[f] = fill[FluentAt(t, f)] if v is None else v
                rows.append(InstantwiseState.of(row))
            yield rows

    return gen()


THEOREM7_FAMILIES = ("attacked-omissions", "presumable")


def check_theorem7(domain: DomainDescription, start: InstantwiseState, action: str,
                   horizon: int | None = None, family: str = "attacked-omissions") -> Theorem7Report:
    """AD-plausible ⟺ every model of the extension reaches a stable state in Trans.

    The right-hand side is checked for every candidate set.  ``family`` picks
    the candidates: ``presumable`` takes all of them, ``attacked-omissions``
    only those whose omitted frame assumptions are all attacked.  The
    AD-plausible sets always lie in the smaller family whenever it is nonempty.
    """
    if family not in THEOREM7_FAMILIES:
        raise ValueError(f"unknown candidate family {family!r}")
    strat = check_stratified(domain)
    if not strat.stratified:
        raise ValidationError("theorem 7 needs a stratified domain")
    d = transition_domain(domain, start, action, horizon)
    g = ground(d)
    target = set(trans(d, start, action).states)
    if family == "presumable":
        pres = semantics.presumable_sets(g)
    else:
        pres = [semantics._verdict(g, s, ("closed", "conflict_free", "presumable"), maximal=True)
                for s in forward_sets(g)]
        pres = [v for v in pres if not v.lr_fa]
    chosen = {frozenset(v.assumptions) for v in ad_plausible_sets(g, pres)}
    witnesses: list[str] = []
    checked = skipped = 0
    for v in pres:
        delta = frozenset(v.assumptions)
        lands = True
        unresolved = False
        for rows in _models_of_extension(g, delta) or ():
            nxt = next((u for u in range(1, len(rows)) if is_stable_state(d, rows[u])), None)
            if nxt is None:
                unresolved = True
                continue
            if rows[nxt] not in target:
                lands = False
                break
        if lands and unresolved:
            skipped += 1
            continue
        checked += 1
        if lands != (delta in chosen):
            kind = "selected" if delta in chosen else "not selected"
            omitted = ", ".join(str(a) for a in v.omitted)
            witnesses.append(f"set omitting {{{omitted}}} is {kind} but its models "
                             f"{'all reach' if lands else 'do not all reach'} a state in the transition")
    return Theorem7Report(not witnesses, checked, skipped, sorted(target), witnesses, family)

"""Timed propositional language, assumptions, rule statements and grounding.

Domains talk about fluents at integer time points, action occurrences over
intervals, and two kinds of defeasible assumptions: frame assumptions
(``[t]FA_l``, "l persists from t to t+1") and qualification assumptions
(``[t,u]AQ_x``, "the effect x is qualified to happen over [t,u]").
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Iterator, Union

ORIGIN = "theta"


class ValidationError(ValueError):
    pass


class ConstraintCycle(ValidationError):
    pass


class HorizonOverflow(ValidationError):
    pass


# ---------------------------------------------------------------- literals


def _cached_hash(self) -> int:
    # atoms are hashed constantly by the closure engine; fields never change
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in fields(self)))
        object.__setattr__(self, "_hash", h)
        return h


@dataclass(frozen=True)
class Literal:
    fluent: str
    positive: bool = True

    __hash__ = _cached_hash

    def __str__(self) -> str:
        return self.fluent if self.positive else "¬" + self.fluent

    @property
    def key(self) -> tuple:
        return (self.fluent, not self.positive)


def negate(lit: Literal) -> Literal:
    return Literal(lit.fluent, not lit.positive)


def all_literals(fluents: Iterable[str]) -> list[Literal]:
    out = []
    for f in fluents:
        out.append(Literal(f, True))
        out.append(Literal(f, False))
    return out


# ------------------------------------------------------------- ground atoms


@dataclass(frozen=True)
class ActionEffect:
    """Tag of an action-bound qualification assumption."""

    __hash__ = _cached_hash

    action: str
    literal: Literal

    def __str__(self) -> str:
        return f"{self.action}->{self.literal}"


@dataclass(frozen=True)
class RamificationEffect:
    """Tag of a unit-interval qualification assumption for an indirect effect."""

    __hash__ = _cached_hash

    literal: Literal

    def __str__(self) -> str:
        return str(self.literal)


QualTag = Union[ActionEffect, RamificationEffect]


@dataclass(frozen=True)
class FluentAt:
    time: int
    fluent: str

    __hash__ = _cached_hash

    def __str__(self) -> str:
        return f"[{self.time}]{self.fluent}"


@dataclass(frozen=True)
class Occ:
    start: int
    action: str
    end: int

    __hash__ = _cached_hash

    def __str__(self) -> str:
        return f"[{self.start},{self.end}]{self.action}"


@dataclass(frozen=True)
class FAAt:
    time: int
    literal: Literal

    __hash__ = _cached_hash

    def __str__(self) -> str:
        return f"FA@{self.time}({self.literal})"


@dataclass(frozen=True)
class AQAt:
    start: int
    tag: QualTag
    end: int

    __hash__ = _cached_hash

    def __post_init__(self) -> None:
        if isinstance(self.tag, RamificationEffect) and self.end != self.start + 1:
            raise ValueError("ramification qualification must span one step")

    def __str__(self) -> str:
        if isinstance(self.tag, RamificationEffect):
            return f"AQ@{self.start}({self.tag})"
        return f"AQ@{self.start}..{self.end}({self.tag})"


GroundAtom = Union[FluentAt, Occ, FAAt, AQAt]
Assumption = Union[FAAt, AQAt]


def is_assumption(atom: object) -> bool:
    return isinstance(atom, (FAAt, AQAt))


def assumption_key(a: Assumption) -> tuple:
    """Canonical order: frame before qualification, then times, then tag."""
    if isinstance(a, FAAt):
        return (0, a.time, 0, a.literal.key, "")
    tag = a.tag
    if isinstance(tag, RamificationEffect):
        return (1, a.start, a.end, tag.literal.key, "")
    return (1, a.start, a.end, tag.literal.key, tag.action)


def atom_key(a: GroundAtom) -> tuple:
    if isinstance(a, FluentAt):
        return (0, a.time, a.fluent)
    if isinstance(a, Occ):
        return (1, a.start, a.end, a.action)
    return (2,) + assumption_key(a)


def sort_assumptions(items: Iterable[Assumption]) -> list[Assumption]:
    return sorted(items, key=assumption_key)


# ----------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Time:
    """Time-point expression: an integer, a variable or named constant, plus an offset."""

    base: Union[int, str]
    offset: int = 0

    def __str__(self) -> str:
        if isinstance(self.base, int):
            return str(self.base + self.offset)
        if self.offset > 0:
            return f"{self.base}+{self.offset}"
        if self.offset < 0:
            return f"{self.base}-{-self.offset}"
        return self.base


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class FluentRef:
    """An untimed fluent; only meaningful under a time binder."""

    name: str


@dataclass(frozen=True)
class AtTime:
    time: Time
    body: "Formula"


@dataclass(frozen=True)
class Occurs:
    start: Time
    end: Time
    action: str


@dataclass(frozen=True)
class Compare:
    op: str  # "<", "=", "<="
    left: Time
    right: Time


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class BinOp:
    op: str  # "&", "|", "->", "<->"
    left: "Formula"
    right: "Formula"


Formula = Union[Const, FluentRef, AtTime, Occurs, Compare, Not, BinOp, FluentAt, Occ, FAAt, AQAt]

TRUE = Const(True)
FALSE = Const(False)


def conj(items: Iterable[Formula]) -> Formula:
    out: Formula | None = None
    for item in items:
        out = item if out is None else BinOp("&", out, item)
    return TRUE if out is None else out


def lit_formula(lit: Literal, time: int) -> Formula:
    atom = FluentAt(time, lit.fluent)
    return atom if lit.positive else Not(atom)


def atoms_of(f: Formula) -> Iterator[GroundAtom]:
    if isinstance(f, (FluentAt, Occ, FAAt, AQAt)):
        yield f
    elif isinstance(f, Not):
        yield from atoms_of(f.body)
    elif isinstance(f, BinOp):
        yield from atoms_of(f.left)
        yield from atoms_of(f.right)
    elif isinstance(f, AtTime):
        yield from atoms_of(f.body)


def as_literal(f: Formula) -> tuple[GroundAtom, bool] | None:
    """(atom, polarity) when f is a ground literal, otherwise None."""
    if isinstance(f, (FluentAt, Occ, FAAt, AQAt)):
        return (f, True)
    if isinstance(f, Not) and isinstance(f.body, (FluentAt, Occ, FAAt, AQAt)):
        return (f.body, False)
    return None


def evaluate(f: Formula, value) -> bool:
    """Two-valued evaluation of a ground formula; ``value`` maps atoms to bools."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not evaluate(f.body, value)
    if isinstance(f, BinOp):
        a = evaluate(f.left, value)
        if f.op == "&":
            return a and evaluate(f.right, value)
        if f.op == "|":
            return a or evaluate(f.right, value)
        if f.op == "->":
            return (not a) or evaluate(f.right, value)
        return a == evaluate(f.right, value)
    return value(f)


# ---------------------------------------------------------- rule statements


@dataclass(frozen=True)
class EffectRule:
    """``effect ACTION [if COND, ...] causes LIT [unqualified] [throughout];``"""

    action: str
    effect: Literal
    conditions: tuple[Formula, ...] = ()
    qualified: bool = True
    throughout: bool = False


@dataclass(frozen=True)
class QualRule:
    """Qualification rule deriving the contrary of a qualification assumption.

    ``interval`` names the start/end variables for action qualifications; it is
    None for ramification qualifications, which bind only ``t``.
    """

    effect: Literal
    conditions: tuple[Formula, ...] = ()
    action: str | None = None
    interval: tuple[str, str] | None = ("t", "u")


@dataclass(frozen=True)
class RamifyRule:
    effect: Literal
    conditions: tuple[Formula, ...] = ()


@dataclass(frozen=True)
class OrderChain:
    """``order a <= b < c;`` stored as names with the operators between them."""

    names: tuple[str, ...]
    ops: tuple[str, ...]


@dataclass(frozen=True)
class Signature:
    fluents: tuple[str, ...]
    actions: tuple[str, ...] = ()

    @property
    def literals(self) -> list[Literal]:
        return all_literals(self.fluents)

    @property
    def dummy_actions(self) -> tuple[str, ...]:
        return tuple(f"da_{lit}" for lit in self.literals)


@dataclass(frozen=True)
class DomainDescription:
    name: str
    signature: Signature
    horizon: int
    facts: tuple[Formula, ...] = ()
    effects: tuple[EffectRule, ...] = ()
    quals: tuple[QualRule, ...] = ()
    ramifications: tuple[RamifyRule, ...] = ()
    inertia: tuple[Literal, ...] | None = None  # None means every literal
    orders: tuple[OrderChain, ...] = ()

    @property
    def mode(self) -> str:
        if self.ramifications:
            return "AD"
        if self.quals or any(e.qualified for e in self.effects):
            return "Q"
        return "S"

    @property
    def inertia_scope(self) -> list[Literal]:
        if self.inertia is None:
            return self.signature.literals
        return list(self.inertia)

    @property
    def constants(self) -> list[str]:
        seen: list[str] = []
        for chain in self.orders:
            for n in chain.names:
                if n != ORIGIN and n not in seen:
                    seen.append(n)
        return seen


# ----------------------------------------------------------- time handling


def time_assignment(domain: DomainDescription) -> dict[str, int]:
    """Least integer assignment to named time constants honouring every order chain."""
    names = [ORIGIN] + domain.constants
    edges: list[tuple[str, str, int]] = []  # value[b] >= value[a] + w
    for chain in domain.orders:
        for a, op, b in zip(chain.names, chain.ops, chain.names[1:]):
            if op == "<":
                edges.append((a, b, 1))
            elif op == "<=":
                edges.append((a, b, 0))
            elif op == "=":
                edges.append((a, b, 0))
                edges.append((b, a, 0))
            else:
                raise ValidationError(f"unknown order operator {op!r}")
    value = {n: 0 for n in names}
    for _ in range(len(names) + 1):
        changed = False
        for a, b, w in edges:
            if value[b] < value[a] + w:
                value[b] = value[a] + w
                changed = True
        if not changed:
            break
    else:
        raise ConstraintCycle("time constraints are contradictory")
    if value[ORIGIN] != 0:
        raise ConstraintCycle("the origin cannot follow another time constant")
    for n, v in value.items():
        if v > domain.horizon:
            raise HorizonOverflow(f"time constant {n} needs {v} > horizon {domain.horizon}")
    return value


def _resolve_time(t: Time, env: dict[str, int]) -> Time:
    if isinstance(t.base, str) and t.base in env:
        return Time(env[t.base] + t.offset)
    return t


def _resolve_formula(f: Formula, env: dict[str, int]) -> Formula:
    if isinstance(f, AtTime):
        return AtTime(_resolve_time(f.time, env), _resolve_formula(f.body, env))
    if isinstance(f, Occurs):
        return Occurs(_resolve_time(f.start, env), _resolve_time(f.end, env), f.action)
    if isinstance(f, Compare):
        return Compare(f.op, _resolve_time(f.left, env), _resolve_time(f.right, env))
    if isinstance(f, Not):
        return Not(_resolve_formula(f.body, env))
    if isinstance(f, BinOp):
        return BinOp(f.op, _resolve_formula(f.left, env), _resolve_formula(f.right, env))
    return f


def resolve_times(domain: DomainDescription) -> DomainDescription:
    """Replace named time constants (and the origin) by their least integer values."""
    env = time_assignment(domain)
    conds = lambda cs: tuple(_resolve_formula(c, env) for c in cs)
    return replace(
        domain,
        facts=conds(domain.facts),
        effects=tuple(replace(e, conditions=conds(e.conditions)) for e in domain.effects),
        quals=tuple(replace(q, conditions=conds(q.conditions)) for q in domain.quals),
        ramifications=tuple(replace(r, conditions=conds(r.conditions)) for r in domain.ramifications),
        orders=(),
    )


# ---------------------------------------------------------------- grounding


@dataclass(frozen=True)
class Effect:
    """A literal an action-like rule brings about at ``time``; ``start`` is where it is caused."""

    literal: Literal
    time: int


@dataclass(frozen=True)
class GroundRule:
    kind: str  # "frame" | "action" | "qualification" | "ramification"
    premises: tuple[Formula, ...]
    consequence: tuple[tuple[GroundAtom, bool], ...]
    label: str = ""
    effects: tuple[Effect, ...] = ()

    def __str__(self) -> str:
        prem = ", ".join(_show(p) for p in self.premises)
        cons = " & ".join(("" if pol else "¬") + str(a) for a, pol in self.consequence)
        return f"{prem} => {cons}"


def _show(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return "¬" + _show(f.body)
    if isinstance(f, BinOp):
        return f"({_show(f.left)} {f.op} {_show(f.right)})"
    return str(f)


class GroundingError(ValidationError):
    pass


def ground_formula(f: Formula, env: dict[str, int], default_time: int | None, horizon: int) -> Formula:
    """Instantiate time variables; bare fluents take ``default_time``.

    Fluent references outside [0, horizon] ground to false, so conditions about
    points beyond the window simply never hold.
    """

    def t_of(t: Time) -> int:
        if isinstance(t.base, int):
            return t.base + t.offset
        if t.base == ORIGIN:
            return t.offset
        if t.base not in env:
            raise GroundingError(f"unbound time variable {t.base!r}")
        return env[t.base] + t.offset

    def go(g: Formula, at: int | None) -> Formula:
        if isinstance(g, FluentRef):
            if at is None:
                raise GroundingError(f"fluent {g.name!r} is not bound to a time point")
            if not 0 <= at <= horizon:
                return FALSE
            return FluentAt(at, g.name)
        if isinstance(g, AtTime):
            return go(g.body, t_of(g.time))
        if isinstance(g, Occurs):
            return Occ(t_of(g.start), g.action, t_of(g.end))
        if isinstance(g, Compare):
            a, b = t_of(g.left), t_of(g.right)
            ok = a < b if g.op == "<" else a <= b if g.op == "<=" else a == b
            return Const(ok)
        if isinstance(g, Not):
            return Not(go(g.body, at))
        if isinstance(g, BinOp):
            return BinOp(g.op, go(g.left, at), go(g.right, at))
        return g

    return go(f, default_time)


def simplify(f: Formula) -> Formula:
    """Fold constants."""
    if isinstance(f, Not):
        b = simplify(f.body)
        if isinstance(b, Const):
            return Const(not b.value)
        if isinstance(b, Not):
            return b.body
        return Not(b)
    if isinstance(f, BinOp):
        a, b = simplify(f.left), simplify(f.right)
        if isinstance(a, Const) and isinstance(b, Const):
            return Const(evaluate(BinOp(f.op, a, b), lambda _: False))
        if f.op == "&":
            if isinstance(a, Const):
                return b if a.value else FALSE
            if isinstance(b, Const):
                return a if b.value else FALSE
        elif f.op == "|":
            if isinstance(a, Const):
                return TRUE if a.value else b
            if isinstance(b, Const):
                return TRUE if b.value else a
        elif f.op == "->":
            if isinstance(a, Const):
                return b if a.value else TRUE
            if isinstance(b, Const):
                return TRUE if b.value else simplify(Not(a))
        return BinOp(f.op, a, b)
    return f


@dataclass(frozen=True)
class GroundDomain:
    domain: DomainDescription
    horizon: int
    facts: tuple[Formula, ...]
    rules: tuple[GroundRule, ...]
    assumptions: tuple[Assumption, ...]  # the relevant universe, canonically sorted
    occurrences: tuple[Occ, ...]  # occurrences mentioned by the theory
    forced_in: int = 0  # qualification assumptions left out of the finite restriction
    times: dict = field(default_factory=dict, compare=False)

    @property
    def mode(self) -> str:
        return self.domain.mode

    @property
    def fluents(self) -> tuple[str, ...]:
        return self.domain.signature.fluents

    @property
    def frame_assumptions(self) -> list[FAAt]:
        return [a for a in self.assumptions if isinstance(a, FAAt)]

    @property
    def qual_assumptions(self) -> list[AQAt]:
        return [a for a in self.assumptions if isinstance(a, AQAt)]

    @property
    def ramification_rules(self) -> list[GroundRule]:
        return [r for r in self.rules if r.kind == "ramification"]


def formula_times(f: Formula, env: dict[str, int] | None = None) -> Iterator[int]:
    """Time points named by ``[T]`` binders; unknown variables are skipped."""
    env = {ORIGIN: 0, **(env or {})}
    if isinstance(f, AtTime):
        t = f.time
        if isinstance(t.base, int) or t.base in env:
            yield env.get(t.base, t.base) + t.offset
        yield from formula_times(f.body, env)
    elif isinstance(f, Not):
        yield from formula_times(f.body, env)
    elif isinstance(f, BinOp):
        yield from formula_times(f.left, env)
        yield from formula_times(f.right, env)


def _occurrences_in(f: Formula) -> Iterator[Occ]:
    for a in atoms_of(f):
        if isinstance(a, Occ):
            yield a


def ground(domain: DomainDescription) -> GroundDomain:
    """Instantiate every rule statement over the integer window [0, H]."""
    times = time_assignment(domain) if domain.orders else {ORIGIN: 0}
    if domain.orders:
        domain_r = resolve_times(domain)
    else:
        domain_r = domain
    H = domain.horizon
    for f in domain_r.facts:
        for t in formula_times(f):
            if not 0 <= t <= H:
                raise HorizonOverflow(f"a fact mentions time {t}, outside the window [0,{H}]")
    facts = tuple(simplify(ground_formula(f, {}, None, H)) for f in domain_r.facts)

    occurrences: list[Occ] = []
    for f in facts:
        for o in _occurrences_in(f):
            if o not in occurrences:
                occurrences.append(o)
    for o in occurrences:
        if not (0 <= o.start < o.end <= H):
            raise GroundingError(f"occurrence {o} lies outside the window [0,{H}]")
    occurrences.sort(key=atom_key)

    rules: list[GroundRule] = []
    aq: list[AQAt] = []

    def add_aq(a: AQAt) -> None:
        if a not in aq:
            aq.append(a)

    # frame rules
    for lit in domain.inertia_scope:
        for t in range(H):
            rules.append(GroundRule(
                "frame",
                (lit_formula(lit, t), FAAt(t, lit)),
                ((FluentAt(t + 1, lit.fluent), lit.positive),),
                label=f"inertia {lit}",
            ))

    # action effects, only over intervals the theory mentions
    intervals: dict[str, list[tuple[int, int]]] = {}
    for o in occurrences:
        intervals.setdefault(o.action, []).append((o.start, o.end))
    for e in domain_r.effects:
        for (t, u) in intervals.get(e.action, []):
            env = {"t": t, "u": u}
            prem = [simplify(ground_formula(c, env, t, H)) for c in e.conditions]
            if any(p == FALSE for p in prem):
                continue
            prem = [p for p in prem if p != TRUE]
            prem.append(Occ(t, e.action, u))
            if e.qualified:
                a = AQAt(t, ActionEffect(e.action, e.effect), u)
                add_aq(a)
                prem.append(a)
            lit = e.effect
            if e.throughout:
                cons: list[tuple[GroundAtom, bool]] = []
                effects = []
                for s in range(t, u + 1):
                    cons.append((FluentAt(s, lit.fluent), lit.positive))
                    effects.append(Effect(lit, s))
                    if s >= 1:
                        cons.append((FAAt(s - 1, negate(lit)), False))
            else:
                cons = [(FluentAt(u, lit.fluent), lit.positive), (FAAt(t, negate(lit)), False)]
                effects = [Effect(lit, u)]
            rules.append(GroundRule("action", tuple(prem), tuple(cons),
                                    label=f"{e.action} causes {lit}", effects=tuple(effects)))

    # ramification rules, one per step
    for r in domain_r.ramifications:
        for t in range(H):
            env = {"t": t}
            prem = [simplify(ground_formula(c, env, t, H)) for c in r.conditions]
            if any(p == FALSE for p in prem):
                continue
            prem = [p for p in prem if p != TRUE]
            a = AQAt(t, RamificationEffect(r.effect), t + 1)
            add_aq(a)
            prem.append(a)
            lit = r.effect
            cons = ((FluentAt(t + 1, lit.fluent), lit.positive), (FAAt(t, negate(lit)), False))
            rules.append(GroundRule("ramification", tuple(prem), cons,
                                    label=f"ramify {lit}", effects=(Effect(lit, t + 1),)))

    # qualification rules for the assumptions that exist
    for q in domain_r.quals:
        for a in list(aq):
            if q.interval is None:
                if not (isinstance(a.tag, RamificationEffect) and a.tag.literal == q.effect):
                    continue
                env = {"t": a.start}
            else:
                if not (isinstance(a.tag, ActionEffect) and a.tag.literal == q.effect):
                    continue
                if q.action is not None and a.tag.action != q.action:
                    continue
                env = {q.interval[0]: a.start, q.interval[1]: a.end}
            prem = [simplify(ground_formula(c, env, a.start, H)) for c in q.conditions]
            if any(p == FALSE for p in prem):
                continue
            prem = [p for p in prem if p != TRUE]
            rules.append(GroundRule("qualification", tuple(prem), ((a, False),),
                                    label=f"qualification of {a.tag}"))

    fa = [FAAt(t, lit) for t in range(H) for lit in domain.signature.literals]
    universe = tuple(sort_assumptions(fa + aq))
    return GroundDomain(
        domain=domain,
        horizon=H,
        facts=facts,
        rules=tuple(rules),
        assumptions=universe,
        occurrences=tuple(occurrences),
        forced_in=_count_forced(domain, H, aq),
        times=times,
    )


def _count_forced(domain: DomainDescription, H: int, kept: list[AQAt]) -> int:
    """Action qualification assumptions outside the relevant restriction."""
    tags = {(e.action, e.effect) for e in domain.effects if e.qualified}
    intervals = H * (H + 1) // 2
    total = len(tags) * intervals + len({r.effect for r in domain.ramifications}) * H
    return total - len(kept)


def relevant_assumptions(g: GroundDomain) -> list[Assumption]:
    return list(g.assumptions)


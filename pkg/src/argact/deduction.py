"""Rule closure over a ground domain and classical entailment.

A theory is kept as a partial assignment of ground atoms plus a list of
residual formulas that are not literals.  Rules fire once their premises are
classically entailed; entailment falls back to a small DPLL search only when
residual formulas remain after unit propagation.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

from .lang import (
    FALSE,
    TRUE,
    AQAt,
    BinOp,
    Const,
    FAAt,
    FluentAt,
    Formula,
    GroundDomain,
    GroundRule,
    Not,
    Occ,
    atoms_of,
    atom_key,
    sort_assumptions,
)

ATOM_LIMIT = int(os.environ.get("ARGACT_MAX_ATOMS", "200000"))

_ATOMS = (FluentAt, Occ, FAAt, AQAt)


class ResourceBound(RuntimeError):
    """A configured size or search budget was exceeded."""


class UnknownAtom(KeyError):
    pass


# ------------------------------------------------------------ propositional


def reduce(f: Formula, assign: Mapping) -> Formula:
    """Substitute known atoms and fold constants."""
    if isinstance(f, _ATOMS):
        v = assign.get(f)
        return f if v is None else (TRUE if v else FALSE)
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        b = reduce(f.body, assign)
        if isinstance(b, Const):
            return FALSE if b.value else TRUE
        if isinstance(b, Not):
            return b.body
        return f if b is f.body else Not(b)
    if isinstance(f, BinOp):
        a = reduce(f.left, assign)
        op = f.op
        if op == "&" and a == FALSE:
            return FALSE
        if op == "|" and a == TRUE:
            return TRUE
        if op == "->" and a == FALSE:
            return TRUE
        b = reduce(f.right, assign)
        if isinstance(a, Const):
            if op == "&" or (op == "->" and a.value):
                return b
            if op == "|":
                return b
            if op == "<->":
                return b if a.value else _neg(b)
        if isinstance(b, Const):
            if op == "&":
                return a if b.value else FALSE
            if op == "|":
                return TRUE if b.value else a
            if op == "->":
                return TRUE if b.value else _neg(a)
            return a if b.value else _neg(a)
        if a is f.left and b is f.right:
            return f
        return BinOp(op, a, b)
    raise TypeError(f"not a ground formula: {f!r}")


def _neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Not):
        return f.body
    return Not(f)


def _units(f: Formula, out: list) -> bool:
    """Split a reduced formula into conjuncts; literals go to ``out`` as (atom, pol).

    Returns the list of non-literal conjuncts via ``out`` entries of kind
    ("f", formula).  Result is False only for the constant false.
    """
    if f == FALSE:
        return False
    if f == TRUE:
        return True
    if isinstance(f, _ATOMS):
        out.append((f, True))
    elif isinstance(f, Not) and isinstance(f.body, _ATOMS):
        out.append((f.body, False))
    elif isinstance(f, BinOp) and f.op == "&":
        return _units(f.left, out) and _units(f.right, out)
    elif isinstance(f, Not) and isinstance(f.body, BinOp) and f.body.op == "|":
        return _units(_neg(f.body.left), out) and _units(_neg(f.body.right), out)
    else:
        out.append(("f", f))
    return True


def propagate(formulas: Iterable[Formula], assign: dict) -> list[Formula] | None:
    """Unit propagation; extends ``assign`` in place.

    Returns the remaining non-literal formulas, or None on contradiction.
    """
    pending = list(formulas)
    while True:
        residual: list[Formula] = []
        learned = False
        for f in pending:
            parts: list = []
            if not _units(reduce(f, assign), parts):
                return None
            for item in parts:
                if item[0] == "f":
                    residual.append(item[1])
                    continue
                atom, pol = item
                old = assign.get(atom)
                if old is None:
                    assign[atom] = pol
                    learned = True
                elif old != pol:
                    return None
        if not learned:
            return residual
        pending = residual


def satisfiable(formulas: Iterable[Formula], assign: Mapping | None = None) -> bool:
    """DPLL over formula trees."""
    local = dict(assign or {})
    rest = propagate(formulas, local)
    if rest is None:
        return False
    if not rest:
        return True
    atom = next(atoms_of(rest[0]))
    for value in (True, False):
        trial = dict(local)
        trial[atom] = value
        if satisfiable(rest, trial):
            return True
    return False


def valid(f: Formula) -> bool:
    return not satisfiable([_neg(f)])


# ------------------------------------------------------------------ closure


@dataclass(frozen=True)
class Closure:
    """Th_R(Γ ∪ Δ) for one assumption set."""

    assumptions: frozenset
    consistent: bool
    assign: Mapping = field(repr=False)
    residual: tuple[Formula, ...] = field(repr=False)
    fired: tuple[int, ...] = field(repr=False)
    base: tuple[Formula, ...] = field(repr=False)
    rules: tuple[GroundRule, ...] = field(repr=False)
    vocabulary: frozenset = field(repr=False)

    @property
    def derived(self) -> list[tuple]:
        out = []
        for i in self.fired:
            out.extend(self.rules[i].consequence)
        return out

    def value(self, atom) -> bool | None:
        """True/False when the closure fixes ``atom``; None otherwise."""
        if not self.consistent:
            return None
        v = self.assign.get(atom)
        if v is not None or not self.residual:
            return v
        if self.entails(atom):
            return True
        if self.entails(Not(atom)):
            return False
        return None

    def entails(self, f: Formula) -> bool:
        for a in atoms_of(f):
            if a not in self.vocabulary:
                raise UnknownAtom(str(a))
        if not self.consistent:
            return True
        g = reduce(f, self.assign)
        if isinstance(g, Const):
            return g.value
        return not satisfiable(list(self.residual) + [_neg(g)], self.assign)

    def literals(self) -> list[tuple]:
        """Sorted (atom, polarity) pairs fixed by the closure's assignment."""
        return sorted(self.assign.items(), key=lambda kv: atom_key(kv[0]))

    def holding_assumptions(self) -> list:
        return sort_assumptions(a for a, v in self.assign.items() if v and isinstance(a, (FAAt, AQAt)))


@dataclass
class _Compiled:
    lits: tuple  # (atom, pol) premises
    complex: tuple  # non-literal premises


class Engine:
    """Per-domain closure cache and rule index."""

    def __init__(self, g: GroundDomain):
        self.g = g
        self.rules = g.rules
        vocab: set = set()
        for f in g.facts:
            vocab.update(atoms_of(f))
        for r in g.rules:
            for p in r.premises:
                vocab.update(atoms_of(p))
            vocab.update(a for a, _ in r.consequence)
        vocab.update(g.assumptions)
        for t in range(g.horizon + 1):
            vocab.update(FluentAt(t, f) for f in g.fluents)
        if len(vocab) > ATOM_LIMIT:
            raise ResourceBound(f"vocabulary of {len(vocab)} atoms exceeds limit {ATOM_LIMIT}")
        self.vocabulary = frozenset(vocab)
        self.compiled: list[_Compiled] = []
        self.watch: dict = {}
        for i, r in enumerate(g.rules):
            lits, cplx = [], []
            for p in r.premises:
                if isinstance(p, _ATOMS):
                    lits.append((p, True))
                elif isinstance(p, Not) and isinstance(p.body, _ATOMS):
                    lits.append((p.body, False))
                elif p != TRUE:
                    cplx.append(p)
            self.compiled.append(_Compiled(tuple(lits), tuple(cplx)))
            watched = {a for a, _ in lits}
            for p in cplx:
                watched.update(atoms_of(p))
            for a in watched:
                self.watch.setdefault(a, []).append(i)
        base_assign: dict = {}
        rest = propagate(g.facts, base_assign)
        self.base_ok = rest is not None
        self.base_assign = base_assign
        self.base_residual = tuple(rest or ())
        self.cache: dict = {}
        self.fired_sets: set = set()
        self.closures_computed = 0

    def close(self, delta: Iterable, extra: Iterable[Formula] = ()) -> Closure:
        delta = frozenset(delta)
        extra = tuple(extra)
        key = (delta, extra)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        c = self._close(delta, extra)
        self.closures_computed += 1
        if len(self.cache) > 500_000:
            self.cache.clear()
        self.cache[key] = c
        if c.consistent:
            self.fired_sets.add(c.fired)
        return c

    def _close(self, delta: frozenset, extra: tuple) -> Closure:
        assign = dict(self.base_assign)
        fired: list[int] = []
        done: set[int] = set()
        base = tuple(self.g.facts) + tuple(sorted(delta, key=atom_key)) + extra

        def result(ok: bool, residual) -> Closure:
            return Closure(delta, ok, assign, tuple(residual), tuple(sorted(fired)), base,
                           self.rules, self.vocabulary)

        if not self.base_ok:
            return result(False, ())
        seeds = [a for a in delta] + [ex for ex in extra]
        residual = list(self.base_residual)
        queue: deque = deque()
        for a in delta:
            old = assign.get(a)
            if old is False:
                return result(False, ())
            if old is None:
                assign[a] = True
                queue.append(a)
        if extra:
            before = set(assign)
            rest = propagate(residual + list(extra), assign)
            if rest is None:
                return result(False, ())
            residual = rest
            queue.extend(a for a in assign if a not in before)
        del seeds

        def ready(i: int) -> bool:
            comp = self.compiled[i]
            for a, pol in comp.lits:
                if assign.get(a) is not pol:
                    if not residual:
                        return False
                    if not entails_now(a if pol else Not(a)):
                        return False
            for p in comp.complex:
                if not entails_now(p):
                    return False
            return True

        def entails_now(f: Formula) -> bool:
            g_ = reduce(f, assign)
            if isinstance(g_, Const):
                return g_.value
            return not satisfiable(residual + [_neg(g_)], assign)

        candidates = deque(range(len(self.rules)))
        queued = set(candidates)
        while True:
            while candidates or queue:
                while queue:
                    a = queue.popleft()
                    for i in self.watch.get(a, ()):
                        if i not in done and i not in queued:
                            candidates.append(i)
                            queued.add(i)
                if not candidates:
                    break
                i = candidates.popleft()
                queued.discard(i)
                if i in done or not ready(i):
                    continue
                done.add(i)
                fired.append(i)
                new = []
                for atom, pol in self.rules[i].consequence:
                    old = assign.get(atom)
                    if old is None:
                        assign[atom] = pol
                        new.append(atom)
                    elif old != pol:
                        return result(False, ())
                queue.extend(new)
                if residual and new:
                    before = set(assign)
                    rest = propagate(residual, assign)
                    if rest is None:
                        return result(False, ())
                    residual = rest
                    queue.extend(a for a in assign if a not in before)
            if not residual:
                break
            # residual formulas may entail premises that no literal shows; sweep once more
            if not satisfiable(residual, assign):
                return result(False, residual)
            extra_fire = [i for i in range(len(self.rules)) if i not in done and ready(i)]
            if not extra_fire:
                break
            candidates.extend(extra_fire)
            queued.update(extra_fire)
        return result(True, residual)


def engine(g: GroundDomain) -> Engine:
    eng = g.__dict__.get("_engine")
    if eng is None:
        eng = Engine(g)
        object.__setattr__(g, "_engine", eng)
    return eng


def close(g: GroundDomain, delta: Iterable = ()) -> Closure:
    return engine(g).close(delta)


def entails(c: Closure, f: Formula) -> bool:
    return c.entails(f)


def r_consistent(g: GroundDomain, sigma: Iterable[Formula] = ()) -> bool:
    """Whether Γ ∪ Σ stays consistent under the rules."""
    return engine(g).close((), tuple(sigma)).consistent


# --------------------------------------------------------- well-definedness


@dataclass(frozen=True)
class Violation:
    rules: tuple[GroundRule, ...]

    def __str__(self) -> str:
        return "; ".join(str(r) for r in self.rules)


@dataclass
class WellDefinedReport:
    mode: str
    checked: int
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations


EXHAUSTIVE_RULE_LIMIT = 20


def _subset_violates(rules: tuple[GroundRule, ...]) -> bool:
    prem = [p for r in rules for p in r.premises]
    if not satisfiable(prem):
        return False
    cons = [a if pol else Not(a) for r in rules for a, pol in r.consequence]
    return not satisfiable(cons)


def check_well_defined(g: GroundDomain, mode: str = "fired-only",
                       rules: Iterable[GroundRule] | None = None) -> WellDefinedReport:
    """Lint: rule sets with jointly consistent premises must have consistent consequences."""
    pool = tuple(g.rules if rules is None else rules)
    violations: list[Violation] = []
    if mode == "exhaustive":
        if len(pool) > EXHAUSTIVE_RULE_LIMIT:
            raise ResourceBound(f"{len(pool)} ground rules exceed the exhaustive limit {EXHAUSTIVE_RULE_LIMIT}")
        checked = 0
        for k in range(1, len(pool) + 1):
            for combo in combinations(pool, k):
                checked += 1
                # minimal witnesses only
                if any(set(v.rules) <= set(combo) for v in violations):
                    continue
                if _subset_violates(combo):
                    violations.append(Violation(combo))
        return WellDefinedReport(mode, checked, violations)
    if mode != "fired-only":
        raise ValueError(f"unknown mode {mode!r}")
    eng = engine(g)
    sets = sorted(eng.fired_sets)
    for fs in sets:
        combo = tuple(eng.rules[i] for i in fs)
        if combo and _subset_violates(combo):
            violations.append(Violation(combo))
    return WellDefinedReport(mode, len(sets), violations)

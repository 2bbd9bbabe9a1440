"""Attack, rejection and the extension semantics over a ground domain.

Assumption atoms only ever appear positively in Δ and negatively in rule
consequences, so a set attacks itself exactly when its closure is
inconsistent.  Presumable sets are therefore the maximal consistent subsets
of the universe; they are enumerated by a conflict-directed search instead of
walking all 2^n subsets.  Admissible and preferred sets still need the full
subset lattice and are bounded by ``ARGACT_MAX_ASSUMPTIONS``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .deduction import Closure, ResourceBound, engine
from .lang import (
    AQAt,
    ActionEffect,
    FAAt,
    GroundDomain,
    Not,
    assumption_key,
    sort_assumptions,
)

DEFAULT_BOUND = 24
SEARCH_BUDGET = int(os.environ.get("ARGACT_SEARCH_BUDGET", "400000"))


def enumeration_bound() -> int:
    raw = os.environ.get("ARGACT_MAX_ASSUMPTIONS")
    return int(raw) if raw else DEFAULT_BOUND


# ------------------------------------------------------------------ verdicts


@dataclass(frozen=True)
class AssumptionVerdict:
    assumptions: tuple  # Δ, canonically sorted
    lr: tuple  # leniently rejected assumptions
    omitted: tuple  # universe minus Δ
    flags: frozenset = field(default_factory=frozenset)

    @property
    def fa(self) -> tuple:
        return tuple(a for a in self.assumptions if isinstance(a, FAAt))

    @property
    def aq(self) -> tuple:
        return tuple(a for a in self.assumptions if isinstance(a, AQAt))

    @property
    def lr_fa(self) -> frozenset:
        return frozenset(a for a in self.lr if isinstance(a, FAAt))

    @property
    def lr_aq(self) -> frozenset:
        return frozenset(a for a in self.lr if isinstance(a, AQAt))

    def with_flags(self, *names: str) -> "AssumptionVerdict":
        return AssumptionVerdict(self.assumptions, self.lr, self.omitted, self.flags | frozenset(names))

    def sort_key(self) -> tuple:
        return (len(self.omitted), tuple(assumption_key(a) for a in self.omitted))


def _sorted(verdicts: Iterable[AssumptionVerdict]) -> list[AssumptionVerdict]:
    return sorted(verdicts, key=AssumptionVerdict.sort_key)


# ----------------------------------------------------------- basic relations


def closure(g: GroundDomain, delta: Iterable) -> Closure:
    return engine(g).close(delta)


def attacks(g: GroundDomain, delta: Iterable, target) -> bool:
    c = closure(g, delta)
    if not c.consistent:
        return True
    v = c.assign.get(target)
    if v is not None or not c.residual:
        return v is False
    return c.entails(Not(target))


def _attacks_in(c: Closure, target) -> bool:
    if not c.consistent:
        return True
    v = c.assign.get(target)
    if v is not None or not c.residual:
        return v is False
    return c.entails(Not(target))


def is_conflict_free(g: GroundDomain, delta: Iterable) -> bool:
    c = closure(g, delta)
    if c.consistent:
        # a consistent theory cannot entail both δ and ¬δ
        return True
    return not g.assumptions


def is_closed(g: GroundDomain, delta: Iterable) -> bool:
    delta = frozenset(delta)
    c = closure(g, delta)
    derived = {a for a in g.assumptions if a in delta or c.entails(a)}
    return derived == delta


def attacks_itself(g: GroundDomain, delta: Iterable) -> bool:
    delta = frozenset(delta)
    c = closure(g, delta)
    return any(_attacks_in(c, d) for d in delta)


def rejects(g: GroundDomain, delta: Iterable, target) -> bool:
    delta = frozenset(delta)
    if not is_conflict_free(g, delta):
        return False
    return attacks_itself(g, delta | {target})


def leniently_rejects(g: GroundDomain, delta: Iterable, target) -> bool:
    delta = frozenset(delta)
    return rejects(g, delta, target) and not attacks(g, delta, target)


def lr(g: GroundDomain, delta: Iterable) -> frozenset:
    delta = frozenset(delta)
    return frozenset(a for a in g.assumptions if leniently_rejects(g, delta, a))


# ------------------------------------------------ maximal consistent subsets


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def tick(self) -> None:
        self.used += 1
        if self.used > self.limit:
            raise ResourceBound(f"search budget of {self.limit} steps exhausted")


def _min_conflict(consistent: Callable[[frozenset], bool], background: frozenset,
                  candidates: list, budget: _Budget) -> list:
    """A ⊂-minimal subset X of ``candidates`` with background ∪ X inconsistent."""

    def qx(base: frozenset, delta_added: bool, cands: list) -> list:
        budget.tick()
        if delta_added and not consistent(base):
            return []
        if len(cands) == 1:
            return cands
        mid = len(cands) // 2
        c1, c2 = cands[:mid], cands[mid:]
        x2 = qx(base | frozenset(c1), True, c2)
        x1 = qx(base | frozenset(x2), bool(x2), c1)
        return x1 + x2

    return qx(background, False, candidates)


def maximal_consistent_subsets(g: GroundDomain, universe: Sequence | None = None,
                               budget: int | None = None) -> list[frozenset]:
    """Every ⊂-maximal subset of ``universe`` whose closure is consistent.

    Each node fixes a set of removed and kept assumptions.  A minimal conflict
    among the undecided ones is split so that child i removes its i-th member
    and keeps the earlier ones, which visits every maximal set exactly once.
    """
    eng = engine(g)
    universe = sort_assumptions(g.assumptions if universe is None else universe)
    full = frozenset(universe)
    steps = _Budget(SEARCH_BUDGET if budget is None else budget)

    def consistent(s: frozenset) -> bool:
        return eng.close(s).consistent

    if not consistent(frozenset()):
        return []
    found: list[frozenset] = []
    stack = [(frozenset(), frozenset())]  # (removed, kept)
    while stack:
        removed, kept = stack.pop()
        steps.tick()
        rest = full - removed
        if consistent(rest):
            if all(not consistent(rest | {r}) for r in removed):
                found.append(rest)
            continue
        cands = [a for a in universe if a in rest and a not in kept]
        conflict = _min_conflict(consistent, kept, cands, steps)
        for i, c in enumerate(conflict):
            keep = kept | frozenset(conflict[:i])
            if i and not consistent(keep):
                break
            stack.append((removed | {c}, keep))
    return found


# ------------------------------------------------------------------ semantics


def _verdict(g: GroundDomain, delta: frozenset, flags: Iterable[str] = (),
             maximal: bool = False) -> AssumptionVerdict:
    """``maximal`` promises delta is maximal consistent, so everything outside is rejected."""
    c = closure(g, delta)
    outside = [a for a in g.assumptions if a not in delta]
    lenient: list = []
    if c.consistent:
        for a in outside:
            if not _attacks_in(c, a) and (maximal or rejects(g, delta, a)):
                lenient.append(a)
    return AssumptionVerdict(
        tuple(sort_assumptions(delta)),
        tuple(sort_assumptions(lenient)),
        tuple(sort_assumptions(outside)),
        frozenset(flags),
    )


def verdict(g: GroundDomain, delta: Iterable) -> AssumptionVerdict:
    """Verdict for an arbitrary set, with the cheap membership flags filled in."""
    delta = frozenset(delta)
    flags = []
    if is_closed(g, delta):
        flags.append("closed")
    if is_conflict_free(g, delta):
        flags.append("conflict_free")
    v = _verdict(g, delta)
    c = closure(g, delta)
    if c.consistent and "closed" in flags and all(rejects(g, delta, a) for a in v.omitted):
        flags.append("presumable")
        if not v.lr:
            flags.append("stable")
    return AssumptionVerdict(v.assumptions, v.lr, v.omitted, frozenset(flags))


def presumable_sets(g: GroundDomain) -> list[AssumptionVerdict]:
    """Closed, non-self-attacking sets that reject every assumption they leave out."""
    out = []
    for s in maximal_consistent_subsets(g):
        flags = ["closed", "conflict_free", "presumable"]
        v = _verdict(g, s, flags, maximal=True)
        if not v.lr:
            v = v.with_flags("stable")
        out.append(v)
    return _sorted(out)


def _minimal_by(verdicts: list[AssumptionVerdict], key) -> list[AssumptionVerdict]:
    keys = [key(v) for v in verdicts]
    return [v for v, k in zip(verdicts, keys) if not any(o < k for o in keys)]


def _maximal_by(verdicts: list[AssumptionVerdict], key) -> list[AssumptionVerdict]:
    keys = [key(v) for v in verdicts]
    return [v for v, k in zip(verdicts, keys) if not any(o > k for o in keys)]


def plausible_sets(g: GroundDomain, presumable: list[AssumptionVerdict] | None = None) -> list[AssumptionVerdict]:
    pres = presumable_sets(g) if presumable is None else presumable
    return [v.with_flags("plausible") for v in _minimal_by(pres, lambda v: frozenset(v.lr))]


def stable_sets(g: GroundDomain, presumable: list[AssumptionVerdict] | None = None) -> list[AssumptionVerdict]:
    pres = presumable_sets(g) if presumable is None else presumable
    return [v for v in pres if not v.lr]


def semi_q_plausible_sets(g: GroundDomain, presumable=None) -> list[AssumptionVerdict]:
    pres = presumable_sets(g) if presumable is None else presumable
    return [v.with_flags("semi_q_plausible") for v in _minimal_by(pres, lambda v: v.lr_fa)]


def q_filter(verdicts: list[AssumptionVerdict], aq_scope: Callable | None = None,
             fa_stage: bool = True) -> list[AssumptionVerdict]:
    """Minimal Lr_FA, then maximal qualification part, then maximal frame part.

    ``aq_scope`` restricts which qualification assumptions take part in the
    second stage; ``fa_stage=False`` stops after it.
    """
    stage1 = _minimal_by(verdicts, lambda v: v.lr_fa)
    if aq_scope is None:
        stage2 = _maximal_by(stage1, lambda v: frozenset(v.aq))
    else:
        stage2 = _maximal_by(stage1, lambda v: frozenset(a for a in v.aq if aq_scope(a)))
    if not fa_stage:
        return stage2
    return _maximal_by(stage2, lambda v: frozenset(v.fa))


def q_plausible_sets(g: GroundDomain, presumable=None) -> list[AssumptionVerdict]:
    pres = presumable_sets(g) if presumable is None else presumable
    return [v.with_flags("semi_q_plausible", "q_plausible") for v in q_filter(pres)]


def select_min_lr_aq(verdicts: list[AssumptionVerdict]) -> list[AssumptionVerdict]:
    """Keep the sets whose leniently rejected qualification assumptions are ⊂-minimal."""
    return _minimal_by(list(verdicts), lambda v: v.lr_aq)


def is_action_qualification(a) -> bool:
    return isinstance(a, AQAt) and isinstance(a.tag, ActionEffect)


# ------------------------------------------------------ admissible/preferred


@dataclass
class _Lattice:
    universe: list
    consistent: list  # per mask
    attacked: list  # per mask: bitmask of attacked assumptions


def _lattice(g: GroundDomain) -> _Lattice:
    universe = list(g.assumptions)
    n = len(universe)
    bound = enumeration_bound()
    if n > bound:
        raise ResourceBound(f"{n} relevant assumptions exceed the enumeration bound {bound}")
    eng = engine(g)
    size = 1 << n
    full = size - 1
    consistent = [False] * size
    attacked = [0] * size
    for mask in range(size):
        # supersets of an inconsistent set stay inconsistent
        low = mask & -mask
        if mask and not consistent[mask ^ low]:
            attacked[mask] = full
            continue
        m, bit = mask, 0
        delta = []
        while m:
            if m & 1:
                delta.append(universe[bit])
            m >>= 1
            bit += 1
        c = eng.close(delta)
        if not c.consistent:
            attacked[mask] = full
            continue
        consistent[mask] = True
        att = 0
        for i, a in enumerate(universe):
            if _attacks_in(c, a):
                att |= 1 << i
        attacked[mask] = att
    return _Lattice(universe, consistent, attacked)


def _admissible_masks(lat: _Lattice) -> list[int]:
    n = len(lat.universe)
    size = 1 << n
    full = size - 1
    # minimal closed attackers of each assumption; an inconsistent universe is closed too
    attackers: list[list[int]] = [[] for _ in range(n)]
    for mask in range(size):
        if not lat.consistent[mask]:
            continue
        att = lat.attacked[mask]
        if not att:
            continue
        for i in range(n):
            if att >> i & 1:
                if not any((m & mask) == m for m in attackers[i]):
                    attackers[i] = [m for m in attackers[i] if (m & mask) != mask] + [mask]
    universe_attacks = not lat.consistent[full]
    out = []
    for mask in range(size):
        if not lat.consistent[mask]:
            continue
        att = lat.attacked[mask]
        if att & mask:
            continue
        ok = True
        if mask and universe_attacks and not att:
            ok = False
        i = 0
        m = mask
        while ok and m:
            if m & 1:
                for a in attackers[i]:
                    if not att & a:
                        ok = False
                        break
            m >>= 1
            i += 1
        if ok:
            out.append(mask)
    return out


def _from_mask(universe: list, mask: int) -> frozenset:
    return frozenset(a for i, a in enumerate(universe) if mask >> i & 1)


def admissible_sets(g: GroundDomain) -> list[AssumptionVerdict]:
    lat = _lattice(g)
    masks = _admissible_masks(lat)
    return _sorted(_verdict(g, _from_mask(lat.universe, m), ["closed", "conflict_free", "admissible"])
                   for m in masks)


def preferred_sets(g: GroundDomain) -> list[AssumptionVerdict]:
    lat = _lattice(g)
    masks = _admissible_masks(lat)
    maximal = [m for m in masks if not any(o != m and (o & m) == m for o in masks)]
    return _sorted(_verdict(g, _from_mask(lat.universe, m),
                            ["closed", "conflict_free", "admissible", "preferred"]) for m in maximal)


def extension(g: GroundDomain, delta: Iterable) -> Closure:
    return closure(g, delta)


SEMANTICS = ("presumable", "plausible", "stable", "admissible", "preferred",
             "semi-q-plausible", "q-plausible", "ad-plausible")


def solve(g: GroundDomain, semantics: str) -> list[AssumptionVerdict]:
    if semantics == "admissible":
        return admissible_sets(g)
    if semantics == "preferred":
        return preferred_sets(g)
    if semantics == "ad-plausible":
        from .ramification import ad_plausible_sets

        return ad_plausible_sets(g)
    pres = presumable_sets(g)
    if semantics == "presumable":
        return pres
    if semantics == "plausible":
        return plausible_sets(g, pres)
    if semantics == "stable":
        return stable_sets(g, pres)
    if semantics == "semi-q-plausible":
        return _sorted(semi_q_plausible_sets(g, pres))
    if semantics == "q-plausible":
        return _sorted(q_plausible_sets(g, pres))
    raise ValueError(f"unknown semantics {semantics!r}")

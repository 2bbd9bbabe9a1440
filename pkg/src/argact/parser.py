"""Surface syntax for domain descriptions (``.ad`` files) and its renderer.

Grammar (statements end with ``;``, ``#`` starts a comment)::

    domain NAME;
    fluents f1, f2, ...;
    actions a1, a2, ...;
    horizon INT;
    inertia all;                 | inertia f1, -f2, ...;
    fact FORMULA;
    effect ACTION [if COND, ...] causes LIT [unqualified] [throughout];
    qual LIT [by ACTION] [if COND, ...] over [T, U];
    qual LIT [if COND, ...];     # qualifies an indirect effect
    ramify [if COND, ...] causes LIT;
    order NAME (< | <= | =) NAME ...;

Formulas use ``[T] F``, ``[T,U] ACTION``, ``-``/``¬``, ``&``, ``|``, ``->``,
``<->``, parentheses, ``true``/``false`` and time comparisons ``T < U``,
``T <= U``, ``T = U``.  Assumption tokens ``FA@t(lit)``, ``AQ@t..u(a->lit)``
and ``AQ@t(lit)`` are accepted inside formulas given to queries.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .lang import (
    ORIGIN,
    AQAt,
    ActionEffect,
    AtTime,
    BinOp,
    Compare,
    Const,
    DomainDescription,
    EffectRule,
    FAAt,
    FluentRef,
    Formula,
    Literal,
    Not,
    Occurs,
    OrderChain,
    QualRule,
    RamificationEffect,
    RamifyRule,
    Signature,
    Time,
    ValidationError,
)


class ParseError(ValueError):
    def __init__(self, line: int, column: int, expected: str, lexeme: str):
        self.line = line
        self.column = column
        self.expected = expected
        self.lexeme = lexeme
        super().__init__(f"line {line}, column {column}: expected {expected}, found {lexeme!r}")


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "int", "sym", "eof"
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)"
    r"|(?P<int>\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*|Θ)"
    r"|(?P<sym><->|->|<=|\.\.|[;,\[\]()\-¬&|<=+@])"
)

KEYWORDS = {"domain", "fluents", "actions", "horizon", "inertia", "fact", "effect", "qual",
            "ramify", "order", "if", "causes", "unqualified", "throughout", "by", "over",
            "all", "true", "false"}


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(line, col, "a token", text[pos])
        kind = m.lastgroup
        lexeme = m.group()
        if kind in ("name", "int", "sym"):
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, expected: str):
        t = self.tok
        raise ParseError(t.line, t.column, expected, t.text or "end of input")

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "name") and self.tok.text == text

    def eat(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def name(self, what: str = "a name") -> str:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.fail(what)
        self.i += 1
        return t.text

    def integer(self) -> int:
        t = self.tok
        if t.kind != "int":
            self.fail("an integer")
        self.i += 1
        return int(t.text)

    # grammar pieces
    def literal(self) -> Literal:
        positive = True
        while self.at("-") or self.at("¬"):
            self.i += 1
            positive = not positive
        return Literal(self.name("a fluent"), positive)

    def time(self) -> Time:
        if self.tok.kind == "int":
            base: int | str = self.integer()
        elif self.tok.kind == "name" and self.tok.text not in KEYWORDS:
            text = self.name("a time expression")
            base = ORIGIN if text in ("Θ", ORIGIN) else text
        else:
            self.fail("a time expression")
        offset = 0
        while (self.at("+") or self.at("-")) and self.peek().kind == "int":
            sign = 1 if self.eat(self.tok.text).text == "+" else -1
            offset += sign * self.integer()
        if isinstance(base, int):
            return Time(base + offset)
        return Time(base, offset)

    def formula(self) -> Formula:
        left = self.implication()
        if self.accept("<->"):
            return BinOp("<->", left, self.formula())
        return left

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.accept("->"):
            return BinOp("->", left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.accept("|"):
            left = BinOp("|", left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.accept("&"):
            left = BinOp("&", left, self.unary())
        return left

    def _comparison_ahead(self) -> bool:
        j = self.i
        t = self.toks[j]
        if t.kind not in ("int", "name") or (t.kind == "name" and t.text in KEYWORDS):
            return False
        j += 1
        while self.toks[j].text in ("+", "-") and self.toks[j + 1].kind == "int":
            j += 2
        return self.toks[j].text in ("<", "<=", "=")

    def unary(self) -> Formula:
        if self.accept("-") or self.accept("¬"):
            return Not(self.unary())
        if self.accept("("):
            f = self.formula()
            self.eat(")")
            return f
        if self.accept("true"):
            return Const(True)
        if self.accept("false"):
            return Const(False)
        if self.at("["):
            self.i += 1
            start = self.time()
            if self.accept(","):
                end = self.time()
                self.eat("]")
                return Occurs(start, end, self.name("an action"))
            self.eat("]")
            return AtTime(start, self.unary())
        if self.tok.kind == "name" and self.tok.text in ("FA", "AQ") and self.peek().text == "@":
            return self.assumption_token()
        if self._comparison_ahead():
            left = self.time()
            op = self.tok.text
            self.i += 1
            return Compare(op, left, self.time())
        if self.tok.kind == "name" and self.tok.text not in KEYWORDS:
            return FluentRef(self.name())
        self.fail("a formula")

    def assumption_token(self):
        kind = self.name()
        self.eat("@")
        start = self.integer()
        end = None
        if self.accept(".."):
            end = self.integer()
        self.eat("(")
        if kind == "FA":
            lit = self.literal()
            self.eat(")")
            return FAAt(start, lit)
        if end is None:
            lit = self.literal()
            self.eat(")")
            return AQAt(start, RamificationEffect(lit), start + 1)
        action = self.name("an action")
        self.eat("->")
        lit = self.literal()
        self.eat(")")
        return AQAt(start, ActionEffect(action, lit), end)

    def conditions(self) -> tuple[Formula, ...]:
        items = [self.formula()]
        while self.accept(","):
            items.append(self.formula())
        return tuple(items)

    def names(self) -> tuple[str, ...]:
        items = [self.name()]
        while self.accept(","):
            items.append(self.name())
        return tuple(items)

    def parse(self) -> dict:
        out: dict = {"name": None, "fluents": None, "actions": (), "horizon": None,
                     "inertia": None, "facts": [], "effects": [], "quals": [],
                     "ramifications": [], "orders": []}
        while self.tok.kind != "eof":
            kw = self.tok.text
            if self.tok.kind != "name" or kw not in KEYWORDS:
                self.fail("a statement keyword")
            self.i += 1
            if kw == "domain":
                out["name"] = self.name()
            elif kw == "fluents":
                out["fluents"] = self.names()
            elif kw == "actions":
                out["actions"] = self.names()
            elif kw == "horizon":
                out["horizon"] = self.integer()
            elif kw == "inertia":
                if self.accept("all"):
                    out["inertia"] = None
                else:
                    lits = [self.literal()]
                    while self.accept(","):
                        lits.append(self.literal())
                    out["inertia"] = tuple(lits)
            elif kw == "fact":
                out["facts"].append(self.formula())
            elif kw == "effect":
                action = self.name("an action")
                conds = self.conditions() if self.accept("if") else ()
                self.eat("causes")
                lit = self.literal()
                qualified, throughout = True, False
                while self.at("unqualified") or self.at("throughout"):
                    if self.accept("unqualified"):
                        qualified = False
                    else:
                        self.eat("throughout")
                        throughout = True
                out["effects"].append(EffectRule(action, lit, conds, qualified, throughout))
            elif kw == "qual":
                lit = self.literal()
                action = self.name("an action") if self.accept("by") else None
                conds = self.conditions() if self.accept("if") else ()
                if self.accept("over"):
                    self.eat("[")
                    a = self.name("a time variable")
                    self.eat(",")
                    b = self.name("a time variable")
                    self.eat("]")
                    out["quals"].append(QualRule(lit, conds, action, (a, b)))
                else:
                    if action is not None:
                        self.fail("'over'")
                    out["quals"].append(QualRule(lit, conds, None, None))
            elif kw == "ramify":
                conds = self.conditions() if self.accept("if") else ()
                self.eat("causes")
                out["ramifications"].append(RamifyRule(self.literal(), conds))
            elif kw == "order":
                names = [self._order_name()]
                ops = []
                while self.tok.text in ("<", "<=", "="):
                    ops.append(self.tok.text)
                    self.i += 1
                    names.append(self._order_name())
                if not ops:
                    self.fail("an order relation")
                out["orders"].append(OrderChain(tuple(names), tuple(ops)))
            else:
                self.fail("a statement keyword")
            self.eat(";")
        return out

    def _order_name(self) -> str:
        n = self.name("a time constant")
        return ORIGIN if n in ("Θ", ORIGIN) else n


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    if p.tok.kind != "eof":
        p.fail("end of formula")
    return f


def parse_domain(text: str) -> DomainDescription:
    raw = _Parser(text).parse()
    if raw["name"] is None:
        raise ValidationError("missing 'domain' statement")
    if not raw["fluents"]:
        raise ValidationError("missing or empty 'fluents' statement")
    if raw["horizon"] is None or raw["horizon"] < 1:
        raise ValidationError("'horizon' must be a positive integer")
    dom = DomainDescription(
        name=raw["name"],
        signature=Signature(tuple(raw["fluents"]), tuple(raw["actions"])),
        horizon=raw["horizon"],
        facts=tuple(raw["facts"]),
        effects=tuple(raw["effects"]),
        quals=tuple(raw["quals"]),
        ramifications=tuple(raw["ramifications"]),
        inertia=raw["inertia"],
        orders=tuple(raw["orders"]),
    )
    validate(dom)
    return dom


# ------------------------------------------------------------------ checks


def _walk(f: Formula, bound: bool, visit) -> None:
    visit(f, bound)
    if isinstance(f, AtTime):
        _walk(f.body, True, visit)
    elif isinstance(f, Not):
        _walk(f.body, bound, visit)
    elif isinstance(f, BinOp):
        _walk(f.left, bound, visit)
        _walk(f.right, bound, visit)


def validate(dom: DomainDescription) -> None:
    fluents = set(dom.signature.fluents)
    actions = set(dom.signature.actions)
    if len(fluents) != len(dom.signature.fluents) or len(actions) != len(dom.signature.actions):
        raise ValidationError("duplicate name in declarations")
    clash = fluents & actions
    if clash:
        raise ValidationError(f"names declared as both fluent and action: {sorted(clash)}")
    constants = set(dom.constants) | {ORIGIN}

    def check_lit(lit: Literal) -> None:
        if lit.fluent not in fluents:
            raise ValidationError(f"undeclared fluent {lit.fluent!r}")

    def check_action(a: str) -> None:
        if a not in actions:
            raise ValidationError(f"undeclared action {a!r}")

    def check_formula(f: Formula, variables: set[str], bare_ok: bool, where: str) -> None:
        def time_ok(t: Time) -> None:
            if isinstance(t.base, str) and t.base not in variables and t.base not in constants:
                raise ValidationError(f"unknown time name {t.base!r} in {where}")

        def visit(g: Formula, bound: bool) -> None:
            if isinstance(g, FluentRef):
                if g.name not in fluents:
                    raise ValidationError(f"undeclared fluent {g.name!r} in {where}")
                if not bound and not bare_ok:
                    raise ValidationError(f"fluent {g.name!r} needs a time point in {where}")
            elif isinstance(g, AtTime):
                time_ok(g.time)
            elif isinstance(g, Occurs):
                check_action(g.action)
                time_ok(g.start)
                time_ok(g.end)
            elif isinstance(g, Compare):
                time_ok(g.left)
                time_ok(g.right)
            elif isinstance(g, (FAAt, AQAt)):
                raise ValidationError(f"assumptions cannot appear in {where}")

        _walk(f, False, visit)

    for f in dom.facts:
        check_formula(f, set(), False, "a fact")
    for e in dom.effects:
        check_action(e.action)
        check_lit(e.effect)
        for c in e.conditions:
            check_formula(c, {"t", "u"}, True, f"effect of {e.action}")
    qualified = {(e.action, e.effect) for e in dom.effects if e.qualified}
    ramified = {r.effect for r in dom.ramifications}
    for q in dom.quals:
        check_lit(q.effect)
        if q.interval is None:
            if q.effect not in ramified:
                raise ValidationError(f"qual {q.effect} targets no ramification rule")
            variables = {"t"}
        else:
            if q.action is not None:
                check_action(q.action)
            targets = [k for k in qualified if k[1] == q.effect and q.action in (None, k[0])]
            if not targets:
                raise ValidationError(f"qual {q.effect} targets no qualified effect")
            variables = set(q.interval)
        for c in q.conditions:
            check_formula(c, variables, True, f"qual of {q.effect}")
    for r in dom.ramifications:
        check_lit(r.effect)
        for c in r.conditions:
            check_formula(c, {"t"}, True, f"ramification of {r.effect}")
    if dom.inertia is not None:
        for lit in dom.inertia:
            check_lit(lit)
    if dom.mode == "S":
        for e in dom.effects:
            if e.qualified:
                raise ValidationError("simple domain may not use qualified effects")


# ----------------------------------------------------------------- rendering

_PREC = {"<->": 1, "->": 2, "|": 3, "&": 4}


def render_time(t: Time) -> str:
    return str(t)


def render_literal(lit: Literal) -> str:
    return lit.fluent if lit.positive else "-" + lit.fluent


def render_formula(f: Formula, parent: int = 0) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, FluentRef):
        return f.name
    if isinstance(f, AtTime):
        return f"[{render_time(f.time)}] {render_formula(f.body, 5)}"
    if isinstance(f, Occurs):
        return f"[{render_time(f.start)},{render_time(f.end)}] {f.action}"
    if isinstance(f, Compare):
        return f"{render_time(f.left)} {f.op} {render_time(f.right)}"
    if isinstance(f, Not):
        return "-" + render_formula(f.body, 5)
    if isinstance(f, BinOp):
        p = _PREC[f.op]
        right_assoc = f.op in ("->", "<->")
        left = render_formula(f.left, p + 1 if right_assoc else p)
        right = render_formula(f.right, p if right_assoc else p + 1)
        text = f"{left} {f.op} {right}"
        return f"({text})" if p < parent else text
    if isinstance(f, FAAt):
        return f"FA@{f.time}({render_literal(f.literal)})"
    if isinstance(f, AQAt):
        tag = f.tag
        if isinstance(tag, RamificationEffect):
            return f"AQ@{f.start}({render_literal(tag.literal)})"
        return f"AQ@{f.start}..{f.end}({tag.action}->{render_literal(tag.literal)})"
    raise TypeError(f"cannot render {f!r}")


def _conds(cs) -> str:
    return " if " + ", ".join(render_formula(c) for c in cs) if cs else ""


def render_domain(dom: DomainDescription) -> str:
    lines = [f"domain {dom.name};", "fluents " + ", ".join(dom.signature.fluents) + ";"]
    if dom.signature.actions:
        lines.append("actions " + ", ".join(dom.signature.actions) + ";")
    lines.append(f"horizon {dom.horizon};")
    if dom.inertia is None:
        lines.append("inertia all;")
    elif dom.inertia:
        lines.append("inertia " + ", ".join(render_literal(l) for l in dom.inertia) + ";")
    for chain in dom.orders:
        parts = [chain.names[0]]
        for op, n in zip(chain.ops, chain.names[1:]):
            parts += [op, n]
        lines.append("order " + " ".join(parts) + ";")
    for f in dom.facts:
        lines.append(f"fact {render_formula(f)};")
    for e in dom.effects:
        tail = ("" if e.qualified else " unqualified") + (" throughout" if e.throughout else "")
        lines.append(f"effect {e.action}{_conds(e.conditions)} causes {render_literal(e.effect)}{tail};")
    for q in dom.quals:
        by = f" by {q.action}" if q.action else ""
        over = f" over [{q.interval[0]},{q.interval[1]}]" if q.interval else ""
        lines.append(f"qual {render_literal(q.effect)}{by}{_conds(q.conditions)}{over};")
    for r in dom.ramifications:
        lines.append(f"ramify{_conds(r.conditions)} causes {render_literal(r.effect)};")
    return "\n".join(lines) + "\n"

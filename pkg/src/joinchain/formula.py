"""Formula data model for existential prenex predicates with one free variable.

A formula has the shape::

    P(x) := exists y1 .. yT . (conj_1) | (conj_2) | ... | (conj_M)

where every conjunct mixes unary atoms ``P(v)``, binary atoms ``W(u, v)`` with
``index(u) < index(v)``, and at most one propositional constant. Variable 0 is
the free variable ``x`` (also written ``y0``).

This module also hosts the text syntax: :func:`parse_formula`,
:func:`render_formula` and :func:`validate`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

TAUT1 = "TAUT1"
TAUT2 = "TAUT2"
KEYWORDS = frozenset({"exists", "true", "false", "x"})


class FormulaError(ValueError):
    """Raised when a formula is rejected; carries an optional source position."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class FormulaSyntaxError(FormulaError):
    pass


@dataclass(frozen=True, order=True)
class Variable:
    index: int

    def __str__(self) -> str:
        return "x" if self.index == 0 else f"y{self.index}"


@dataclass(frozen=True)
class UnaryAtom:
    predicate: str
    arg: Variable

    def __str__(self) -> str:
        return f"{self.predicate}({self.arg})"


@dataclass(frozen=True)
class BinaryAtom:
    predicate: str
    left: Variable
    right: Variable

    def __str__(self) -> str:
        return f"{self.predicate}({self.left},{self.right})"


@dataclass(frozen=True)
class PropConst:
    """A propositional constant: a literal truth value or a named symbol."""

    name: Union[str, bool]

    @property
    def is_literal(self) -> bool:
        return isinstance(self.name, bool)

    def __str__(self) -> str:
        if self.name is True:
            return "true"
        if self.name is False:
            return "false"
        return f"${self.name}"

    @classmethod
    def from_text(cls, text: str) -> "PropConst":
        if text == "true":
            return cls(True)
        if text == "false":
            return cls(False)
        return cls(text[1:] if text.startswith("$") else text)


@dataclass(frozen=True)
class Disjunct:
    unary_atoms: tuple[UnaryAtom, ...] = ()
    binary_atoms: tuple[BinaryAtom, ...] = ()
    constant: Optional[PropConst] = None

    def variables(self) -> set[int]:
        out = {a.arg.index for a in self.unary_atoms}
        for b in self.binary_atoms:
            out.update((b.left.index, b.right.index))
        return out


@dataclass(frozen=True)
class PredicateSignature:
    unary_names: frozenset[str] = frozenset()
    binary_names: frozenset[str] = frozenset()
    prop_names: frozenset[str] = frozenset()

    def merge(self, other: "PredicateSignature") -> "PredicateSignature":
        return PredicateSignature(
            self.unary_names | other.unary_names,
            self.binary_names | other.binary_names,
            self.prop_names | other.prop_names,
        )

    def has_unary(self, name: str) -> bool:
        return name == TAUT1 or name in self.unary_names

    def has_binary(self, name: str) -> bool:
        return name == TAUT2 or name in self.binary_names


@dataclass(frozen=True)
class PrenexFormula:
    name: str
    num_quantified: int
    disjuncts: tuple[Disjunct, ...]
    signature: PredicateSignature = field(default_factory=PredicateSignature)

    @property
    def num_disjuncts(self) -> int:
        return len(self.disjuncts)


def infer_signature(disjuncts: Iterable[Disjunct]) -> PredicateSignature:
    unary, binary, prop = set(), set(), set()
    for d in disjuncts:
        unary.update(a.predicate for a in d.unary_atoms)
        binary.update(b.predicate for b in d.binary_atoms)
        if d.constant is not None and not d.constant.is_literal:
            prop.add(d.constant.name)
    return PredicateSignature(frozenset(unary), frozenset(binary), frozenset(prop))


def make_formula(
    disjuncts: Iterable[Disjunct], num_quantified: Optional[int] = None, name: str = "P"
) -> PrenexFormula:
    """Build a formula, inferring the signature (and T when not given)."""
    disjuncts = tuple(disjuncts)
    if num_quantified is None:
        num_quantified = max((max(d.variables(), default=0) for d in disjuncts), default=0)
    return PrenexFormula(name, num_quantified, disjuncts, infer_signature(disjuncts))


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    kind: str
    message: str
    disjunct: Optional[int] = None
    atom: Optional[str] = None

    def __str__(self) -> str:
        where = ""
        if self.disjunct is not None:
            where = f"disjunct {self.disjunct}"
            if self.atom is not None:
                where += f", atom {self.atom}"
            where += ": "
        return f"{self.level}: {where}{self.message}"


def validate(f: PrenexFormula) -> list[Diagnostic]:
    """Check every structural invariant of ``f``; an empty list means valid."""
    out: list[Diagnostic] = []
    sig = f.signature

    def err(kind, msg, m=None, atom=None):
        out.append(Diagnostic("error", kind, msg, m, None if atom is None else str(atom)))

    if f.num_quantified < 0:
        err("range", f"negative quantifier count {f.num_quantified}")
    if not f.disjuncts:
        err("empty", "formula has no disjuncts")
    pairs = [
        ("unary/binary", sig.unary_names & sig.binary_names),
        ("unary/prop", sig.unary_names & sig.prop_names),
        ("binary/prop", sig.binary_names & sig.prop_names),
    ]
    for label, clash in pairs:
        for name in sorted(clash):
            err("arity", f"name {name!r} declared as both {label}")
    if TAUT2 in sig.unary_names:
        err("arity", f"reserved binary name {TAUT2} declared unary")
    if TAUT1 in sig.binary_names:
        err("arity", f"reserved unary name {TAUT1} declared binary")

    for m, d in enumerate(f.disjuncts):
        if not d.unary_atoms and not d.binary_atoms and d.constant is None:
            err("empty", "disjunct has neither atoms nor a constant", m)
        for a in d.unary_atoms:
            if not sig.has_unary(a.predicate):
                err("signature", f"unary predicate {a.predicate!r} not in signature", m, a)
            if not 0 <= a.arg.index <= f.num_quantified:
                err("range", f"variable {a.arg} outside y0..y{f.num_quantified}", m, a)
        for b in d.binary_atoms:
            if not sig.has_binary(b.predicate):
                err("signature", f"binary predicate {b.predicate!r} not in signature", m, b)
            for v in (b.left, b.right):
                if not 0 <= v.index <= f.num_quantified:
                    err("range", f"variable {v} outside y0..y{f.num_quantified}", m, b)
            if b.left.index >= b.right.index:
                err("orientation", f"left argument {b.left} must precede right argument {b.right}", m, b)
        c = d.constant
        if c is not None and not c.is_literal and c.name not in sig.prop_names:
            err("signature", f"constant ${c.name} not in signature", m, c)
    return out


# ---------------------------------------------------------------------------
# text syntax

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<assign>:=)
  | (?P<prop>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[().,&|])
    """,
    re.VERBOSE,
)
_VAR_RE = re.compile(r"x|y([0-9]+)")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        mo = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if mo is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = mo.lastgroup
        if kind == "nl":
            line += 1
            line_start = mo.end()
        elif kind == "punct":
            tokens.append(_Token(mo.group(), mo.group(), line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(_Token(kind, mo.group(), line, col))
        pos = mo.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, reorient: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.reorient = reorient
        self.notes: list[Diagnostic] = []
        self.arity: dict[str, tuple[str, _Token]] = {}

    @property
    def tok(self) -> _Token:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Optional[_Token] = None, cls=FormulaSyntaxError):
        tok = tok or self.tok
        raise cls(msg, tok.line, tok.column)

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = tok.text or "end of input"
            self.fail(f"expected {want!r}, found {got!r}")
        self.i += 1
        return tok

    def variable(self) -> tuple[Variable, _Token]:
        tok = self.expect("ident")
        mo = _VAR_RE.fullmatch(tok.text)
        if mo is None:
            self.fail(f"expected a variable (x or y<n>), found {tok.text!r}", tok)
        index = 0 if tok.text == "x" else int(mo.group(1))
        return Variable(index), tok

    def declare(self, name: str, kind: str, tok: _Token):
        if name in KEYWORDS:
            self.fail(f"reserved word {name!r} used as a predicate name", tok)
        reserved = {TAUT1: "unary", TAUT2: "binary"}
        prior = self.arity.get(name)
        if reserved.get(name, kind) != kind:
            self.fail(f"{name} is reserved as {reserved[name]}", tok, FormulaError)
        if prior is not None and prior[0] != kind:
            p = prior[1]
            self.fail(
                f"arity clash: {name!r} used as {kind} here and as {prior[0]} at {p.line}:{p.column}",
                tok,
                FormulaError,
            )
        self.arity.setdefault(name, (kind, tok))

    def formula(self) -> PrenexFormula:
        name = self.expect("ident")
        if name.text in KEYWORDS:
            self.fail(f"reserved word {name.text!r} used as formula name", name)
        self.expect("(")
        free, ftok = self.variable()
        if free.index != 0:
            self.fail("the head variable must be x", ftok)
        self.expect(")")
        self.expect("assign")

        declared: list[int] = []
        if self.tok.kind == "ident" and self.tok.text == "exists":
            self.i += 1
            while self.tok.kind == "ident":
                v, vtok = self.variable()
                if v.index == 0:
                    self.fail("the free variable x cannot be quantified", vtok, FormulaError)
                if v.index in declared:
                    self.fail(f"variable {v} quantified twice", vtok, FormulaError)
                declared.append(v.index)
            if not declared:
                self.fail("expected at least one variable after 'exists'")
        T = len(declared)
        if sorted(declared) != list(range(1, T + 1)):
            self.fail(f"quantified variables must be exactly y1..y{T}", cls=FormulaError)
        self.expect(".")

        disjuncts = [self.disjunct(T)]
        while self.tok.kind == "|":
            self.i += 1
            disjuncts.append(self.disjunct(T))
        self.expect("eof")
        return make_formula(disjuncts, T, name.text)

    def disjunct(self, T: int) -> Disjunct:
        self.expect("(")
        unary, binary = [], []
        constant = None
        while True:
            tok = self.tok
            if tok.kind == "prop" or (tok.kind == "ident" and tok.text in ("true", "false")):
                self.i += 1
                if constant is not None:
                    self.fail("a disjunct holds at most one propositional constant", tok, FormulaError)
                constant = PropConst.from_text(tok.text)
                if not constant.is_literal:
                    self.declare(constant.name, "prop", tok)
            else:
                atom = self.atom(T)
                (unary if isinstance(atom, UnaryAtom) else binary).append(atom)
            if self.tok.kind != "&":
                break
            self.i += 1
        self.expect(")")
        return Disjunct(tuple(unary), tuple(binary), constant)

    def atom(self, T: int):
        ptok = self.expect("ident")
        self.expect("(")
        a, atok = self.variable()
        args = [(a, atok)]
        if self.tok.kind == ",":
            self.i += 1
            args.append(self.variable())
        self.expect(")")
        for v, vtok in args:
            if v.index > T:
                self.fail(f"variable {v} is not quantified (declared y1..y{T})", vtok, FormulaError)
        if len(args) == 1:
            self.declare(ptok.text, "unary", ptok)
            return UnaryAtom(ptok.text, a)
        b, btok = args[1]
        name = ptok.text
        if a.index >= b.index:
            if not self.reorient or a.index == b.index:
                self.fail(
                    f"orientation violation in {name}({a},{b}): left index must be below right",
                    btok,
                    FormulaError,
                )
            new = f"{name}_rev"
            self.notes.append(
                Diagnostic("warning", "reoriented", f"{name}({a},{b}) rewritten as {new}({b},{a})",
                           atom=f"{name}({a},{b})")
            )
            a, b, name = b, a, new
        self.declare(name, "binary", ptok)
        return BinaryAtom(name, a, b)


def parse_formula_diagnostics(text: str, reorient: bool = False) -> tuple[PrenexFormula, list[Diagnostic]]:
    """Parse ``text`` and also return the warnings produced by ``reorient``."""
    p = _Parser(text, reorient)
    f = p.formula()
    errors = [d for d in validate(f) if d.level == "error"]
    if errors:
        raise FormulaError(str(errors[0]))
    return f, p.notes


def parse_formula(text: str, reorient: bool = False) -> PrenexFormula:
    """Parse one formula from DSL text.

    With ``reorient=True`` a binary atom ``W(y3,y1)`` becomes ``W_rev(y1,y3)``
    instead of being rejected.
    """
    return parse_formula_diagnostics(text, reorient)[0]


def render_formula(f: PrenexFormula) -> str:
    """Canonical DSL text: unary atoms, binary atoms, then the constant."""
    quant = "exists " + " ".join(f"y{t}" for t in range(1, f.num_quantified + 1)) + " " if f.num_quantified else ""
    parts = []
    for d in f.disjuncts:
        terms = [str(a) for a in d.unary_atoms] + [str(b) for b in d.binary_atoms]
        if d.constant is not None:
            terms.append(str(d.constant))
        parts.append("(" + " & ".join(terms) + ")")
    return f"{f.name}(x) := {quant}. " + " | ".join(parts)

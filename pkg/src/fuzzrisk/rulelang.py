"""The textual IF-THEN rule language.

Grammar (keywords are case-insensitive)::

    rule := "IF" cond "THEN" ident "IS" ident ["WITH" number]
    cond := conj ("OR" conj)*
    conj := unary ("AND" unary)*
    unary := "NOT" unary | "(" cond ")" | ident "IS" ["NOT"] ident

``x IS NOT a`` is sugar for ``NOT x IS a``.  Rule files hold one rule per
line; ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import FuzzRiskError

__all__ = [
    "Atom",
    "And",
    "Or",
    "Not",
    "Condition",
    "Consequent",
    "Rule",
    "RuleError",
    "RuleLexError",
    "RuleSyntaxError",
    "RuleWeightError",
    "Diagnostic",
    "KEYWORDS",
    "parse",
    "parse_rules",
    "validate",
    "format_rule",
    "format_condition",
    "iter_atoms",
]

KEYWORDS = frozenset({"IF", "THEN", "IS", "AND", "OR", "NOT", "WITH"})
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

Span = tuple  # (start, end) character offsets into the statement


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------
# Spans are carried for diagnostics but excluded from equality so that
# structurally identical rules compare equal wherever they were written.


@dataclass(frozen=True)
class Atom:
    variable: str
    term: str
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class And:
    left: "Condition"
    right: "Condition"
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Or:
    left: "Condition"
    right: "Condition"
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    inner: "Condition"
    span: Span = field(default=(0, 0), compare=False, repr=False)


Condition = Union[Atom, And, Or, Not]


@dataclass(frozen=True)
class Consequent:
    variable: str
    term: str
    span: Span = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Rule:
    antecedent: Condition
    consequent: Consequent
    weight: float = 1.0
    expert: str | None = None
    span: Span = field(default=(0, 0), compare=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise RuleWeightError(f"rule weight must be in (0, 1], got {self.weight}", self.span[0])


def iter_atoms(cond: Condition) -> Iterator[Atom]:
    if isinstance(cond, Atom):
        yield cond
    elif isinstance(cond, Not):
        yield from iter_atoms(cond.inner)
    else:
        yield from iter_atoms(cond.left)
        yield from iter_atoms(cond.right)


# --------------------------------------------------------------------------
# Errors
# --------------------------------------------------------------------------


class RuleError(FuzzRiskError):
    """A rule failed to lex or parse.  ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int, line: int | None = None):
        super().__init__(message)
        self.message = message
        self.position = position
        self.line = line

    @property
    def column(self) -> int:
        return self.position + 1

    def __str__(self):
        where = f"line {self.line}, col {self.column}" if self.line is not None else f"col {self.column}"
        return f"{where}: {self.message}"


class RuleLexError(RuleError):
    def __init__(self, char: str, position: int):
        super().__init__(f"unexpected character {char!r}", position)
        self.char = char


class RuleSyntaxError(RuleError):
    def __init__(self, found: str, expected, position: int):
        expected = frozenset(expected)
        super().__init__(f"unexpected {found}, expected {' or '.join(sorted(expected))}", position)
        self.found = found
        self.expected = expected


class RuleWeightError(RuleError):
    pass


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # KW, IDENT, NUMBER, LPAREN, RPAREN, EOF
    text: str
    start: int
    end: int

    def describe(self) -> str:
        return "end of rule" if self.kind == "EOF" else repr(self.text)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<NUMBER>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<LPAREN>\()
  | (?P<RPAREN>\))
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RuleLexError(text[pos], pos)
        kind = m.lastgroup
        if kind != "ws":
            word = m.group()
            if kind == "IDENT" and word.upper() in KEYWORDS:
                tokens.append(_Token("KW", word.upper(), m.start(), m.end()))
            else:
                tokens.append(_Token(kind, word, m.start(), m.end()))
        pos = m.end()
    tokens.append(_Token("EOF", "", len(text), len(text)))
    return tokens


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

_UNARY_START = ("NOT", "(", "identifier")


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _fail(self, *expected):
        raise RuleSyntaxError(self.tok.describe(), expected, self.tok.start)

    def keyword(self, word: str) -> _Token:
        if self.tok.kind == "KW" and self.tok.text == word:
            self.i += 1
            return self.tokens[self.i - 1]
        self._fail(word)

    def accept(self, word: str) -> bool:
        if self.tok.kind == "KW" and self.tok.text == word:
            self.i += 1
            return True
        return False

    def ident(self) -> _Token:
        if self.tok.kind == "IDENT":
            self.i += 1
            return self.tokens[self.i - 1]
        self._fail("identifier")

    def rule(self) -> Rule:
        start = self.keyword("IF").start
        cond = self.cond()
        self.keyword("THEN")
        var = self.ident()
        self.keyword("IS")
        term = self.ident()
        cons = Consequent(var.text, term.text, (var.start, term.end))
        weight = 1.0
        end = term.end
        if self.accept("WITH"):
            if self.tok.kind != "NUMBER":
                self._fail("number")
            num = self.tok
            self.i += 1
            weight = float(num.text)
            if not 0.0 < weight <= 1.0:
                raise RuleWeightError(f"rule weight must be in (0, 1], got {num.text}", num.start)
            end = num.end
            if self.tok.kind != "EOF":
                self._fail("end of rule")
        elif self.tok.kind != "EOF":
            self._fail("WITH", "end of rule")
        return Rule(cond, cons, weight, span=(start, end))

    def cond(self) -> Condition:
        left = self.conj()
        while self.accept("OR"):
            right = self.conj()
            left = Or(left, right, (left.span[0], right.span[1]))
        return left

    def conj(self) -> Condition:
        left = self.unary()
        while self.accept("AND"):
            right = self.unary()
            left = And(left, right, (left.span[0], right.span[1]))
        return left

    def unary(self) -> Condition:
        tok = self.tok
        if tok.kind == "KW" and tok.text == "NOT":
            self.i += 1
            inner = self.unary()
            return Not(inner, (tok.start, inner.span[1]))
        if tok.kind == "LPAREN":
            self.i += 1
            inner = self.cond()
            if self.tok.kind != "RPAREN":
                self._fail(")", "AND", "OR")
            self.i += 1
            return inner
        if tok.kind == "IDENT":
            self.i += 1
            self.keyword("IS")
            negated = self.accept("NOT")
            term = self.ident()
            atom = Atom(tok.text, term.text, (tok.start, term.end))
            return Not(atom, atom.span) if negated else atom
        self._fail(*_UNARY_START)


def parse(text: str) -> Rule:
    """Parse one rule statement.

    Raises RuleLexError / RuleSyntaxError / RuleWeightError, each carrying
    the 0-based offset of the offending character.
    """
    if not text.strip():
        raise RuleSyntaxError("end of rule", {"IF"}, 0)
    return _Parser(text).rule()


def parse_rules(text: str) -> list[tuple[int, Rule]]:
    """Parse a rule file: one rule per line, ``#`` comments, blank lines ignored.

    Returns ``(line_number, rule)`` pairs with 1-based line numbers.
    """
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stmt = line.split("#", 1)[0]
        if not stmt.strip():
            continue
        try:
            rules.append((lineno, parse(stmt)))
        except RuleError as exc:
            exc.line = lineno
            raise
    return rules


# --------------------------------------------------------------------------
# Validation against a model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Span = (0, 0)

    def __str__(self):
        return f"{self.code}: {self.message}"


def validate(rule: Rule, model) -> list[Diagnostic]:
    """Check every name in ``rule`` against ``model``'s declared variables.

    ``model`` needs ``inputs`` and ``outputs`` sequences of variables with
    ``name`` and ``terms``.  Returns an empty list when the rule is valid.
    """
    inputs = {v.name: v for v in model.inputs}
    outputs = {v.name: v for v in model.outputs}
    diags = []
    for atom in iter_atoms(rule.antecedent):
        if atom.variable in inputs:
            if atom.term not in inputs[atom.variable].terms:
                diags.append(Diagnostic(
                    "unknown-term", f"input {atom.variable!r} has no term {atom.term!r}", atom.span))
        elif atom.variable in outputs:
            diags.append(Diagnostic(
                "antecedent-not-input", f"{atom.variable!r} is an output variable", atom.span))
        else:
            diags.append(Diagnostic("unknown-variable", f"unknown variable {atom.variable!r}", atom.span))
    cons = rule.consequent
    if cons.variable in outputs:
        if cons.term not in outputs[cons.variable].terms:
            diags.append(Diagnostic(
                "unknown-term", f"output {cons.variable!r} has no term {cons.term!r}", cons.span))
    elif cons.variable in inputs:
        diags.append(Diagnostic(
            "consequent-not-output", f"{cons.variable!r} is an input variable", cons.span))
    else:
        diags.append(Diagnostic("unknown-variable", f"unknown variable {cons.variable!r}", cons.span))
    return diags


# --------------------------------------------------------------------------
# Formatting
# --------------------------------------------------------------------------

_PREC = {Or: 1, And: 2, Not: 3, Atom: 4}


def format_condition(cond: Condition) -> str:
    """Canonical text with the fewest parentheses that re-parse to the same tree."""
    if isinstance(cond, Atom):
        return f"{cond.variable} IS {cond.term}"
    if isinstance(cond, Not):
        inner = format_condition(cond.inner)
        if _PREC[type(cond.inner)] < _PREC[Not]:
            inner = f"({inner})"
        return f"NOT {inner}"
    prec = _PREC[type(cond)]
    word = "AND" if isinstance(cond, And) else "OR"
    left = format_condition(cond.left)
    right = format_condition(cond.right)
    if _PREC[type(cond.left)] < prec:
        left = f"({left})"
    # left-associative: an equal-precedence right operand needs parentheses
    if _PREC[type(cond.right)] <= prec:
        right = f"({right})"
    return f"{left} {word} {right}"


def format_rule(rule: Rule) -> str:
    text = (
        f"IF {format_condition(rule.antecedent)} "
        f"THEN {rule.consequent.variable} IS {rule.consequent.term}"
    )
    if rule.weight != 1.0:
        text += f" WITH {float(rule.weight)!r}"
    return text

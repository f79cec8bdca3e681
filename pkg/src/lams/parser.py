"""Recursive-descent parser for ``.lams`` source text.

Terms, from loosest to tightest: ``+``/``-``, scaling ``a . t``, product ``*``,
application (left associative), atoms.  ``t - a . u`` is sugar for
``t + (-a) . u`` and ``t - u`` for ``t + (-1) . u``.  Types: ``B``, ``B^n``, ``S(T)``,
``T x T`` and right associative ``T => T``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import syntax as sx
from .scalars import DEFAULT_RING, RingError, Scalar

KEYWORDS = {"zero", "head", "tail", "upR", "upL", "if", "then", "else", "sqrt2", "i"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<ket>\|[01]>)
  | (?P<arrow>=>)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[\\λ:.()\[\]{}+\-*/^])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ket, arrow, int, ident, punct, eof
    text: str
    span: sx.SourceSpan


class ParseError(Exception):
    def __init__(self, message: str, span: sx.SourceSpan, expected=(), fatal: bool = False
                 ) -> None:
        self.message = message
        self.fatal = fatal  # not recoverable by backtracking (e.g. a literal outside the ring)
        self.span = span
        self.expected = frozenset(expected)
        where = f"line {span.line}, column {span.col}"
        exp = f" (expected {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{where}: {message}{exp}")

    def to_json(self) -> dict:
        return {"error": "parse", "message": self.message, "span": self.span.to_json(),
                "expected": sorted(self.expected)}


def tokenize(src: str) -> list[Token]:
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            span = sx.SourceSpan(pos, pos + 1, line, col)
            raise ParseError(f"unexpected character {src[pos]!r}", span)
        text = m.group()
        kind = m.lastgroup
        if kind != "ws":
            toks.append(Token(kind, text, sx.SourceSpan(pos, m.end(), line, col)))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", sx.SourceSpan(pos, pos, line, col)))
    return toks


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, src: str, ring: str = DEFAULT_RING) -> None:
        self.toks = tokenize(src)
        self.pos = 0
        self.ring = ring

    # helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("punct", "arrow", "ident", "ket")

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"unexpected {self.describe()}", {repr(text)})
        return self.advance()

    def describe(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.text)

    def fail(self, message: str, expected=()):
        raise ParseError(message, self.tok.span, expected)

    def span_from(self, start: Token) -> sx.SourceSpan:
        end = self.toks[self.pos - 1].span if self.pos > 0 else start.span
        return sx.SourceSpan(start.span.start, end.end, start.span.line, start.span.col)

    def done(self) -> None:
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.describe()}", {"end of input"})

    # types

    def parse_type(self) -> sx.Type:
        start = self.tok
        left = self.parse_prod_type()
        if self.tok.kind == "arrow":
            self.advance()
            right = self.parse_type()
            if not sx.is_qubit_type(left):
                raise ParseError("arrow domain is not a qubit type", self.span_from(start))
            return sx.Arrow(left, right)
        return left

    def parse_prod_type(self) -> sx.Type:
        parts = [self.parse_atom_type()]
        while self.at("x"):
            self.advance()
            parts.append(self.parse_atom_type())
        if len(parts) > 1:
            for p in parts:
                if not sx.is_qubit_type(p):
                    self.fail("product components must be qubit types")
        return sx.mk_prod(*parts)

    def parse_atom_type(self) -> sx.Type:
        if self.at("B"):
            self.advance()
            if self.at("^"):
                self.advance()
                if self.tok.kind != "int":
                    self.fail("expected exponent", {"integer"})
                n = int(self.advance().text)
                if n < 1:
                    self.fail("exponent must be at least 1")
                return sx.bool_power(n)
            return sx.B
        if self.at("S"):
            self.advance()
            self.expect("(")
            inner = self.parse_type()
            self.expect(")")
            return sx.Span(inner)
        if self.at("("):
            self.advance()
            t = self.parse_type()
            self.expect(")")
            return t
        self.fail(f"unexpected {self.describe()} in type", {"'B'", "'S'", "'('"})

    # scalars

    def parse_scalar(self) -> Scalar:
        acc = self.parse_scalar_term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.parse_scalar_term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def parse_scalar_term(self) -> Scalar:
        acc = self.parse_scalar_factor()
        while self.at("*") and self._scalar_follows(1):
            self.advance()
            acc = acc * self.parse_scalar_factor()
        return acc

    def _scalar_follows(self, k: int) -> bool:
        t = self.toks[min(self.pos + k, len(self.toks) - 1)]
        return t.kind == "int" or t.text in ("sqrt2", "i", "(", "-")

    def parse_scalar_factor(self) -> Scalar:
        t = self.tok
        try:
            if self.at("-"):
                self.advance()
                return -self.parse_scalar_factor()
            if t.kind == "int":
                self.advance()
                value = Fraction(int(t.text))
                if self.at("/"):
                    self.advance()
                    if self.tok.kind != "int":
                        self.fail("expected denominator", {"integer"})
                    den = int(self.advance().text)
                    if den == 0:
                        raise ParseError("zero denominator", t.span, fatal=True)
                    value /= den
                return Scalar.of(value, self.ring)
            if self.at("sqrt2"):
                self.advance()
                return Scalar.sqrt2(self.ring)
            if self.at("i"):
                self.advance()
                return Scalar.imag(self.ring)
        except RingError as e:
            raise ParseError(str(e), t.span, fatal=True) from None
        if self.at("("):
            self.advance()
            s = self.parse_scalar()
            self.expect(")")
            return s
        self.fail(f"unexpected {self.describe()} in scalar", {"integer", "'sqrt2'", "'i'", "'('"})

    # terms

    def parse_term(self) -> sx.Term:
        start = self.tok
        parts = [self.parse_scale()]
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.parse_scale()
            if op == "-":
                rhs = self.negate(rhs)
            parts.append(rhs)
        if len(parts) == 1:
            return parts[0]
        return sx.mk_sum(parts, self.span_from(start))

    def parse_scale(self) -> sx.Term:
        start = self.tok
        if start.kind == "int" or start.text in ("sqrt2", "i", "(", "-"):
            saved = self.pos
            try:
                alpha = self.parse_scalar()
                if not self.at("."):
                    raise _Backtrack
                self.advance()
            except ParseError as e:
                if e.fatal:
                    raise
                self.pos = saved
            except _Backtrack:
                self.pos = saved
            else:
                body = self.parse_scale()
                return sx.Scale(alpha, body, self.span_from(start))
            if self.at("-"):
                self.advance()
                body = self.parse_scale()
                return self.negate(body, self.span_from(start))
        return self.parse_product()

    def negate(self, t: sx.Term, span: Optional[sx.SourceSpan] = None) -> sx.Term:
        """``- a . t`` is read as ``(-a) . t``; any other ``- t`` as ``(-1) . t``."""
        if isinstance(t, sx.Scale):
            return sx.Scale(-t.scalar, t.body, span or t.span)
        return sx.Scale(Scalar.of(-1, self.ring), t, span or t.span)

    def parse_product(self) -> sx.Term:
        start = self.tok
        parts = [self.parse_app()]
        while self.at("*"):
            self.advance()
            parts.append(self.parse_app())
        if len(parts) == 1:
            return parts[0]
        return sx.mk_times(*parts, span=self.span_from(start))

    def parse_app(self) -> sx.Term:
        start = self.tok
        fun = self.parse_prefix()
        while self._atom_follows():
            arg = self.parse_prefix()
            fun = sx.App(fun, arg, self.span_from(start))
        return fun

    def _atom_follows(self) -> bool:
        t = self.tok
        if t.kind in ("ket",):
            return True
        if t.kind == "ident":
            return t.text not in ("then", "else", "sqrt2", "i")
        return t.text in ("(", "\\", "λ")

    def parse_prefix(self) -> sx.Term:
        start = self.tok
        ops = {"head": sx.Head, "tail": sx.Tail, "upR": sx.CastR, "upL": sx.CastL}
        if start.kind == "ident" and start.text in ops:
            self.advance()
            body = self.parse_prefix()
            return ops[start.text](body, self.span_from(start))
        return self.parse_atom()

    def parse_atom(self) -> sx.Term:
        start = self.tok
        if start.kind == "ket":
            self.advance()
            return sx.Ket(int(start.text[1]), start.span)
        if self.at("(") :
            self.advance()
            t = self.parse_term()
            self.expect(")")
            return t
        if self.at("\\") or self.at("λ"):
            self.advance()
            if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
                self.fail("expected a variable name", {"identifier"})
            var = self.advance().text
            self.expect(":")
            ann_start = self.tok
            annot = self.parse_type()
            if not sx.is_qubit_type(annot):
                raise ParseError("abstraction domain is not a qubit type", self.span_from(ann_start))
            self.expect(".")
            body = self.parse_term()
            return sx.Lam(var, annot, body, self.span_from(start))
        if self.at("zero"):
            self.advance()
            self.expect("[")
            annot = self.parse_type()
            self.expect("]")
            return sx.Zero(annot, self.span_from(start))
        if self.at("if"):
            self.advance()
            if self.at("{"):
                self.advance()
                t = self.parse_term()
                self.expect("}")
                self.expect("else")
                self.expect("{")
                r = self.parse_term()
                self.expect("}")
                return sx.Ite(t, r, self.span_from(start))
            cond = self.parse_term()
            self.expect("then")
            t = self.parse_term()
            self.expect("else")
            r = self.parse_term()
            span = self.span_from(start)
            return sx.App(sx.Ite(t, r, span), cond, span)
        if start.kind == "ident" and start.text not in KEYWORDS:
            self.advance()
            return sx.Var(start.text, start.span)
        self.fail(f"unexpected {self.describe()}",
                  {"'|0>'", "'|1>'", "identifier", "'\\'", "'('", "'zero'", "'if'",
                   "'head'", "'tail'", "'upR'", "'upL'"})


def parse_term(src: str, ring: str = DEFAULT_RING) -> sx.Term:
    p = Parser(src, ring)
    t = p.parse_term()
    p.done()
    return t


def parse_type(src: str) -> sx.Type:
    p = Parser(src)
    t = p.parse_type()
    p.done()
    return t


def parse_file(path, ring: str = DEFAULT_RING) -> sx.Term:
    with open(path, encoding="utf-8") as fh:
        return parse_term(fh.read(), ring)

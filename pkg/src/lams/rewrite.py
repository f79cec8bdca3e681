"""Type-directed small-step rewriting.

``step`` picks one redex deterministically: root rules in figure order, then
the evaluation contexts left to right.  The only exception is ``dist_scal_sum``,
which is tried after the contexts below a scaled sum, so that ``a.(t + u)``
first reduces inside its body (this reproduces the printed example traces).
``all_reducts`` enumerates every rule/position pair instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

from . import syntax as sx
from .scalars import DEFAULT_RING, Scalar
from .syntax import (App, Arrow, CastL, CastR, Head, Ite, Ket, Lam, Scale, Span, Sum, Tail, Term,
                     Times, Zero)
from .typecheck import EMPTY, TypingError, derivable, synth, typecheck

RULES = (
    # Fig 3
    "beta_b", "beta_n",
    # Fig 4
    "lin_r_plus", "lin_r_scal", "lin_r_zero", "lin_l_plus", "lin_l_scal", "lin_l_zero",
    # Fig 5
    "if_true", "if_false",
    # Fig 6
    "head", "tail",
    # Fig 7
    "neut", "unit", "zero_scal", "zero", "prod", "dist_scal_sum", "fact", "fact1", "fact2",
    # Fig 8
    "dist_sum_r", "dist_sum_l", "dist_scal_r", "dist_scal_l", "dist_zero_r", "dist_zero_l",
    "dist_cast_sum", "dist_cast_scal", "dist_cast_zero_r", "cast_neut_zero_r",
    "dist_cast_zero_l", "cast_neut_zero_l", "cast_neut_r", "cast_neut_l",
)
RULE_INDEX = {r: i for i, r in enumerate(RULES)}
DEFERRED = "dist_scal_sum"


class EngineError(Exception):
    """Internal invariant violation (a stuck well-typed term, a budget overrun)."""


class IllTyped(EngineError):
    pass


@dataclass(frozen=True)
class Step:
    rule: str
    path: tuple
    before: Term
    after: Term

    @property
    def before_text(self) -> str:
        return sx.pretty(self.before)

    @property
    def after_text(self) -> str:
        return sx.pretty(self.after)

    def to_json(self, index: int) -> dict:
        return {"index": index, "rule": self.rule, "path": list(self.path),
                "before": self.before_text, "after": self.after_text}


@dataclass
class Trace:
    initial: Term
    steps: list = field(default_factory=list)
    final: Optional[Term] = None
    normal: bool = False

    @property
    def count(self) -> int:
        return len(self.steps)

    def rules(self) -> list:
        return [s.rule for s in self.steps]

    def json_lines(self) -> Iterator[str]:
        for i, s in enumerate(self.steps):
            yield json.dumps(s.to_json(i), ensure_ascii=False)
        yield json.dumps({"steps": self.count, "normal_form": sx.pretty(self.final)},
                         ensure_ascii=False)


# ---------------------------------------------------------------- helpers


def min_type(t: Term):
    return synth(EMPTY, t)


@lru_cache(maxsize=65536)
def _ring_of(t: Term) -> Optional[str]:
    if isinstance(t, Scale):
        return t.scalar.ring
    if isinstance(t, Lam):
        return _ring_of(t.body)
    if isinstance(t, Ite):
        return _ring_of(t.then_branch) or _ring_of(t.else_branch)
    for c in sx.children(t):
        r = _ring_of(c)
        if r:
            return r
    return None


def term_ring(t: Term, default: str = DEFAULT_RING) -> str:
    return _ring_of(t) or default


def _basis_arrow(f: Term) -> Optional[Arrow]:
    ty = min_type(f)
    if isinstance(ty, Arrow) and sx.is_basis_type(ty.domain):
        return ty
    return None


def _splits(parts: tuple):
    """Binary splits ``(p_i, rest)`` of an AC sum, one per summand."""
    for i, p in enumerate(parts):
        rest = parts[:i] + parts[i + 1:]
        yield p, sx.mk_sum(rest)


def _strip_one(ty):
    return ty.inner if isinstance(ty, Span) else ty


def _first_last(body: Term):
    comps = sx.times_components(body)
    return comps[0], sx.mk_times(*comps[1:]), sx.mk_times(*comps[:-1]), comps[-1]


# ---------------------------------------------------------------- root rules


def root_matches(t: Term, ring: str) -> Iterator[tuple]:
    """All ``(rule, result)`` pairs for rules matching at the root, in priority order."""
    if isinstance(t, App):
        yield from _app_rules(t)
    elif isinstance(t, (Head, Tail)):
        b = t.body
        if isinstance(b, Times) and sx.is_basis_term(b.left):
            if isinstance(t, Head):
                yield "head", b.left
            else:
                yield "tail", b.right
    elif isinstance(t, Sum):
        yield from _sum_rules(t, ring)
    elif isinstance(t, Scale):
        yield from _scale_rules(t)
    elif isinstance(t, CastR):
        yield from _cast_r_rules(t)
    elif isinstance(t, CastL):
        yield from _cast_l_rules(t)


def _app_rules(t: App):
    f, a = t.fun, t.arg
    if isinstance(f, Lam):
        if sx.is_basis_type(f.annot):
            if sx.is_basis_term(a) and derivable(EMPTY, a, f.annot):
                yield "beta_b", sx.substitute(f.body, f.var, a)
        elif derivable(EMPTY, a, f.annot):
            yield "beta_n", sx.substitute(f.body, f.var, a)
    if isinstance(a, (Sum, Scale, Zero)):
        arrow = _basis_arrow(f)
        if arrow is not None:
            if isinstance(a, Sum):
                for p, rest in _splits(a.summands):
                    yield "lin_r_plus", sx.mk_sum([App(f, p), App(f, rest)])
            elif isinstance(a, Scale):
                yield "lin_r_scal", Scale(a.scalar, App(f, a.body))
            else:
                yield "lin_r_zero", Zero(arrow.codomain)
    if isinstance(f, Sum):
        for p, rest in _splits(f.summands):
            yield "lin_l_plus", sx.mk_sum([App(p, a), App(rest, a)])
    elif isinstance(f, Scale):
        yield "lin_l_scal", Scale(f.scalar, App(f.body, a))
    elif isinstance(f, Zero) and isinstance(f.annot, Arrow):
        yield "lin_l_zero", Zero(f.annot.codomain)
    if isinstance(f, Ite) and isinstance(a, Ket):
        if a.bit == 1:
            yield "if_true", f.then_branch
        else:
            yield "if_false", f.else_branch


def _sum_rules(t: Sum, ring: str):
    parts = t.summands
    for i, p in enumerate(parts):
        if isinstance(p, Zero):
            yield "neut", sx.mk_sum(parts[:i] + parts[i + 1:])
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            m = _factor(parts[i], parts[j], ring)
            if m is not None:
                rest = parts[:i] + parts[i + 1:j] + parts[j + 1:]
                yield m[0], sx.mk_sum(rest + (m[1],))


def _factor(a: Term, b: Term, ring: str):
    if isinstance(a, Scale) and isinstance(b, Scale) and a.body == b.body:
        return "fact", Scale(a.scalar + b.scalar, a.body)
    if isinstance(a, Scale) and a.body == b:
        return "fact1", Scale(a.scalar + Scalar.one(a.scalar.ring), b)
    if isinstance(b, Scale) and b.body == a:
        return "fact1", Scale(b.scalar + Scalar.one(b.scalar.ring), a)
    if a == b:
        return "fact2", Scale(Scalar.of(2, ring), a)
    return None


def _scale_rules(t: Scale):
    alpha, b = t.scalar, t.body
    if alpha.is_one():
        yield "unit", b
    if alpha.is_zero():
        yield "zero_scal", Zero(_strip_one(min_type(b)))
    if isinstance(b, Zero):
        yield "zero", b
    if isinstance(b, Scale):
        yield "prod", Scale(alpha * b.scalar, b.body)
    if isinstance(b, Sum):
        for p, rest in _splits(b.summands):
            yield "dist_scal_sum", sx.mk_sum([Scale(alpha, p), Scale(alpha, rest)])


def _cast_r_rules(t: CastR):
    b = t.body
    if isinstance(b, Times):
        u, rest = b.left, b.right
        if isinstance(u, Sum):
            for p, others in _splits(u.summands):
                yield "dist_sum_r", sx.mk_sum([CastR(sx.mk_times(p, rest)),
                                               CastR(sx.mk_times(others, rest))])
        elif isinstance(u, Scale):
            yield "dist_scal_r", Scale(u.scalar, CastR(sx.mk_times(u.body, rest)))
        elif isinstance(u, Zero):
            psi = sx.strip_spans(u.annot)[0]
            yield "dist_zero_r", Zero(sx.mk_prod(psi, min_type(rest)))
    if isinstance(b, Sum):
        for p, others in _splits(b.summands):
            yield "dist_cast_sum", sx.mk_sum([CastR(p), CastR(others)])
    elif isinstance(b, Scale):
        yield "dist_cast_scal", Scale(b.scalar, CastR(b.body))
    elif isinstance(b, Zero):
        comps = sx.prod_components(b.annot)
        if len(comps) >= 2:
            first, rest = comps[0], comps[1:]
            if isinstance(first, Span) and isinstance(first.inner, Span):
                yield "dist_cast_zero_r", CastR(Zero(sx.mk_prod(first.inner, *rest)))
            else:
                yield "cast_neut_zero_r", Zero(sx.mk_prod(_strip_one(first), *rest))
    if isinstance(b, Times) and sx.is_basis_term(b.left):
        yield "cast_neut_l", b


def _cast_l_rules(t: CastL):
    b = t.body
    if isinstance(b, Times):
        _, _, init, v = _first_last(b)
        if isinstance(v, Sum):
            for p, others in _splits(v.summands):
                yield "dist_sum_l", sx.mk_sum([CastL(sx.mk_times(init, p)),
                                               CastL(sx.mk_times(init, others))])
        elif isinstance(v, Scale):
            yield "dist_scal_l", Scale(v.scalar, CastL(sx.mk_times(init, v.body)))
        elif isinstance(v, Zero):
            phi = sx.strip_spans(v.annot)[0]
            yield "dist_zero_l", Zero(sx.mk_prod(min_type(init), phi))
    if isinstance(b, Sum):
        for p, others in _splits(b.summands):
            yield "dist_cast_sum", sx.mk_sum([CastL(p), CastL(others)])
    elif isinstance(b, Scale):
        yield "dist_cast_scal", Scale(b.scalar, CastL(b.body))
    elif isinstance(b, Zero):
        comps = sx.prod_components(b.annot)
        if len(comps) >= 2:
            init, last = comps[:-1], comps[-1]
            if isinstance(last, Span) and isinstance(last.inner, Span):
                yield "dist_cast_zero_l", CastL(Zero(sx.mk_prod(*init, last.inner)))
            else:
                yield "cast_neut_zero_l", Zero(sx.mk_prod(*init, _strip_one(last)))
    if isinstance(b, Times) and sx.is_basis_term(sx.times_components(b)[-1]):
        yield "cast_neut_r", b


# ---------------------------------------------------------------- contexts


def contexts(t: Term) -> list:
    """Child positions where reduction may take place."""
    if isinstance(t, App):
        out = []
        if sx.is_value(t.arg):
            out.append(0)
        f = t.fun
        if (isinstance(f, Lam) and sx.is_basis_type(f.annot)) or isinstance(f, Ite):
            out.append(1)
        # neither context of the figure applies: allow both positions
        return out or [0, 1]
    if isinstance(t, Sum):
        return list(range(len(t.summands)))
    if isinstance(t, Times):
        return [0, 1]
    if isinstance(t, (Scale, Head, Tail, CastR, CastL)):
        return [0]
    return []


# ---------------------------------------------------------------- strategy


def _find(t: Term, ring: str) -> Optional[tuple]:
    deferred = None
    for rule, res in root_matches(t, ring):
        if rule == DEFERRED:
            deferred = (rule, (), res)
            break
        return rule, (), res
    kids = sx.children(t)
    for i in contexts(t):
        hit = _find(kids[i], ring)
        if hit is not None:
            rule, path, res = hit
            return rule, (i,) + path, res
    return deferred


def step(t, ring: Optional[str] = None) -> Optional[Step]:
    """One deterministic step, or ``None`` when ``t`` is in normal form."""
    t = _as_term(t)
    ring = ring or term_ring(t)
    hit = _find(t, ring)
    if hit is None:
        return None
    rule, path, res = hit
    return Step(rule, path, t, sx.replace_at(t, path, res))


def all_reducts(t, ring: Optional[str] = None) -> set:
    t = _as_term(t)
    ring = ring or term_ring(t)
    out = set()
    for rule, path, res in _all(t, ring):
        out.add((rule, path, sx.replace_at(t, path, res)))
    return out


def _all(t: Term, ring: str):
    for rule, res in root_matches(t, ring):
        yield rule, (), res
    kids = sx.children(t)
    for i in contexts(t):
        for rule, path, res in _all(kids[i], ring):
            yield rule, (i,) + path, res


def is_normal(t, ring: Optional[str] = None) -> bool:
    return step(t, ring) is None


def _as_term(t) -> Term:
    return t.term if hasattr(t, "premises") else t


def normalize(t, max_steps: int = 10_000, ring: Optional[str] = None,
              check_types: bool = True) -> Trace:
    t = _as_term(t)
    if check_types:
        try:
            typecheck(t)
        except TypingError as e:
            raise IllTyped(f"refusing to rewrite an ill-typed term: {e}") from e
    ring = ring or term_ring(t)
    trace = Trace(initial=t)
    cur = t
    while len(trace.steps) < max_steps:
        s = step(cur, ring)
        if s is None:
            trace.final = cur
            trace.normal = True
            return trace
        trace.steps.append(s)
        cur = s.after
    trace.final = cur
    trace.normal = step(cur, ring) is None
    return trace


def normal_form(t, max_steps: int = 10_000, ring: Optional[str] = None) -> Term:
    tr = normalize(t, max_steps, ring)
    if not tr.normal:
        raise EngineError(f"no normal form within {max_steps} steps")
    return tr.final

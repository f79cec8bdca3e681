"""Typing relation with minimal-type synthesis and canonical derivations.

``derive(ctx, t, T)`` decides ``ctx |- t : T`` (ignoring linearity, which is
checked by a separate syntactic pass) and returns the canonical derivation:
whenever ``T = S(T')`` and ``t : T'`` holds, the derivation ends with ``S_I``,
so lifts sit as close to the root as possible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import syntax as sx
from .syntax import (App, Arrow, B, CastL, CastR, Head, Ite, Ket, Lam, Prod, Scale, Span, Sum,
                     Tail, Term, Times, Type, Var, Zero)

KINDS = (
    "unbound variable",
    "linear variable reused",
    "linear variable unused",
    "application mismatch",
    "cast shape mismatch",
    "head/tail arity",
    "annotation mismatch",
)


class TypingError(Exception):
    def __init__(self, kind: str, rule: str, term: Term, expected=None, found=None,
                 detail: str = "") -> None:
        assert kind in KINDS, kind
        self.kind = kind
        self.rule = rule
        self.term = term
        self.expected = expected
        self.found = found
        self.detail = detail
        super().__init__(self.summary())

    @property
    def span(self) -> Optional[sx.SourceSpan]:
        return getattr(self.term, "span", None)

    def summary(self) -> str:
        msg = f"{self.kind} (rule {self.rule}) in {sx.pretty(self.term)}"
        if self.expected is not None:
            msg += f"; expected {_show(self.expected)}"
        if self.found is not None:
            msg += f", found {_show(self.found)}"
        if self.detail:
            msg += f"; {self.detail}"
        return msg

    def to_json(self) -> dict:
        span = self.span
        return {
            "error": "type",
            "kind": self.kind,
            "rule": self.rule,
            "term": sx.pretty(self.term),
            "expected": None if self.expected is None else _show(self.expected),
            "found": None if self.found is None else _show(self.found),
            "span": None if span is None else span.to_json(),
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


def _show(x) -> str:
    if isinstance(x, Type):
        return sx.pretty_type(x)
    return str(x)


class Context:
    """Immutable ordered map from names to types; later bindings shadow earlier ones."""

    __slots__ = ("items", "_map", "_hash")

    def __init__(self, items: Iterable = ()) -> None:
        items = tuple(items)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "_map", dict(items))
        object.__setattr__(self, "_hash", hash(items))

    def __setattr__(self, key, value):
        raise AttributeError("Context is immutable")

    def extend(self, name: str, ty: Type) -> "Context":
        return Context(tuple((n, t) for n, t in self.items if n != name) + ((name, ty),))

    def get(self, name: str) -> Optional[Type]:
        return self._map.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._map

    def names(self):
        return list(self._map)

    def linear_names(self) -> set:
        return {n for n, t in self._map.items() if not sx.is_basis_type(t)}

    def __eq__(self, other) -> bool:
        return isinstance(other, Context) and self.items == other.items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return "Context(" + ", ".join(f"{n}:{sx.pretty_type(t)}" for n, t in self.items) + ")"


EMPTY = Context()


@dataclass(frozen=True)
class Derivation:
    """A typing derivation; ``rule`` is the name of the last rule applied."""

    rule: str
    term: Term
    type: Type
    premises: tuple = ()
    ctx: Context = field(default=EMPTY, compare=False, repr=False)
    k: int = 0

    def erase(self) -> Term:
        return self.term

    def rules(self) -> list:
        out = [self.rule]
        for p in self.premises:
            out.extend(p.rules())
        return out


# aliases for the derivation-as-typed-term view
TypedTerm = Derivation


def minimal_type(d: Derivation) -> Type:
    return d.type


# ---------------------------------------------------------------- type lattice


def lift_span(t: Type) -> Type:
    return t if isinstance(t, Span) else Span(t)


def join(a: Type, b: Type) -> Optional[Type]:
    """Least type both ``a`` and ``b`` lift to by inserting S's, if any."""
    if a == b:
        return a
    if isinstance(a, Span) and isinstance(b, Span):
        j = join(a.inner, b.inner)
        return None if j is None else Span(j)
    if isinstance(a, Span):
        j = join(a.inner, b)
        return None if j is None else Span(j)
    if isinstance(b, Span):
        j = join(a, b.inner)
        return None if j is None else Span(j)
    if isinstance(a, Prod) and isinstance(b, Prod):
        ca, cb = sx.prod_components(a), sx.prod_components(b)
        if len(ca) != len(cb):
            return None
        parts = [join(x, y) for x, y in zip(ca, cb)]
        if any(p is None for p in parts):
            return None
        return sx.mk_prod(*parts)
    if isinstance(a, Arrow) and isinstance(b, Arrow) and a.domain == b.domain:
        j = join(a.codomain, b.codomain)
        return None if j is None else Arrow(a.domain, j)
    return None


def lifts_to(a: Type, t: Type) -> bool:
    """Is ``t`` obtained from ``a`` by inserting S's (anywhere)?"""
    if a == t:
        return True
    if isinstance(t, Span):
        if lifts_to(a, t.inner):
            return True
        return isinstance(a, Span) and lifts_to(a.inner, t.inner)
    if isinstance(t, Prod):
        return _lifts_list(sx.prod_components(a), sx.prod_components(t))
    if isinstance(a, Arrow) and isinstance(t, Arrow):
        return a.domain == t.domain and lifts_to(a.codomain, t.codomain)
    return False


def _lifts_list(src: list, dst: list) -> bool:
    if not dst:
        return not src
    room = len(src) - (len(dst) - 1)
    for g in range(1, room + 1):
        if lifts_to(sx.mk_prod(*src[:g]), dst[0]) and _lifts_list(src[g:], dst[1:]):
            return True
    return False


# ---------------------------------------------------------------- derivations

_DERIVE: dict = {}
_SYNTH: dict = {}


def clear_caches() -> None:
    _DERIVE.clear()
    _SYNTH.clear()


def _cached(table: dict, key, compute):
    hit = table.get(key)
    if hit is None:
        try:
            hit = compute()
        except TypingError as e:
            hit = e
        if len(table) > 500_000:
            table.clear()
        table[key] = hit
    if isinstance(hit, TypingError):
        raise hit
    return hit


def derive(ctx: Context, t: Term, ty: Type) -> Derivation:
    return _cached(_DERIVE, (ctx, t, ty), lambda: _derive(ctx, t, ty))


def derivable(ctx: Context, t: Term, ty: Type) -> bool:
    try:
        derive(ctx, t, ty)
        return True
    except TypingError:
        return False


def _derive(ctx: Context, t: Term, ty: Type) -> Derivation:
    if isinstance(ty, Span):
        try:
            d = derive(ctx, t, ty.inner)
            return Derivation("S_I", t, ty, (d,), ctx)
        except TypingError:
            pass
    return _derive_rule(ctx, t, ty)


def _mismatch(rule: str, t: Term, expected, found=None) -> TypingError:
    return TypingError("annotation mismatch", rule, t, expected, found)


def _derive_rule(ctx: Context, t: Term, ty: Type) -> Derivation:
    if isinstance(t, Var):
        found = ctx.get(t.name)
        if found is None:
            raise TypingError("unbound variable", "Ax", t, detail=f"variable {t.name}")
        if found != ty:
            raise _mismatch("Ax", t, ty, found)
        return Derivation("Ax", t, ty, (), ctx)

    if isinstance(t, Ket):
        if ty != B:
            raise _mismatch(f"Ax|{t.bit}>", t, ty, B)
        return Derivation(f"Ax|{t.bit}>", t, ty, (), ctx)

    if isinstance(t, Zero):
        if not sx.is_well_formed_type(t.annot):
            raise _mismatch("Ax0", t, "a well-formed annotation", t.annot)
        if not (isinstance(ty, Span) and lifts_to(t.annot, ty.inner)):
            raise _mismatch("Ax0", t, ty, Span(t.annot))
        return Derivation("Ax0", t, ty, (), ctx)

    if isinstance(t, Scale):
        if not isinstance(ty, Span):
            raise _mismatch("alpha_I", t, ty, "a span type")
        d = derive(ctx, t.body, ty)
        return Derivation("alpha_I", t, ty, (d,), ctx)

    if isinstance(t, Sum):
        if not isinstance(ty, Span):
            raise _mismatch("+_I", t, ty, "a span type")
        ds = tuple(derive(ctx, s, ty) for s in t.summands)
        return Derivation("+_I", t, ty, ds, ctx)

    if isinstance(t, Lam):
        if not sx.is_qubit_type(t.annot):
            raise _mismatch("=>_I", t, "a qubit type", t.annot)
        if not isinstance(ty, Arrow) or ty.domain != t.annot:
            raise _mismatch("=>_I", t, ty, f"{sx.pretty_type(t.annot)} => ...")
        d = derive(ctx.extend(t.var, t.annot), t.body, ty.codomain)
        return Derivation("=>_I", t, ty, (d,), ctx)

    if isinstance(t, Ite):
        if not isinstance(ty, Arrow) or ty.domain != B:
            raise _mismatch("If", t, ty, "B => ...")
        d1 = derive(ctx, t.then_branch, ty.codomain)
        d2 = derive(ctx, t.else_branch, ty.codomain)
        return Derivation("If", t, ty, (d1, d2), ctx)

    if isinstance(t, App):
        ftype = synth(ctx, t.fun)
        core, _ = sx.strip_spans(ftype)
        if not isinstance(core, Arrow):
            raise TypingError("application mismatch", "=>_E", t, "a function", ftype)
        psi = core.domain
        err = None
        try:
            df = derive(ctx, t.fun, Arrow(psi, ty))
            du = derive(ctx, t.arg, psi)
            return Derivation("=>_E", t, ty, (du, df), ctx)
        except TypingError as e:
            err = e
        if isinstance(ty, Span):
            try:
                df = derive(ctx, t.fun, Span(Arrow(psi, ty.inner)))
                du = derive(ctx, t.arg, Span(psi))
                return Derivation("=>_ES", t, ty, (du, df), ctx)
            except TypingError as e:
                err = e
        raise TypingError("application mismatch", "=>_E", t, ty, None, detail=str(err))

    if isinstance(t, Times):
        comps = sx.prod_components(ty)
        if len(comps) < 2:
            raise _mismatch("x_I", t, ty, "a product type")
        err = None
        for i in range(1, len(comps)):
            left, right = sx.mk_prod(*comps[:i]), sx.mk_prod(*comps[i:])
            try:
                dl = derive(ctx, t.left, left)
                dr = derive(ctx, t.right, right)
                return Derivation("x_I", t, ty, (dl, dr), ctx)
            except TypingError as e:
                err = e
        raise _mismatch("x_I", t, ty, None) if err is None else err

    if isinstance(t, (Head, Tail)):
        rule = "x_Er" if isinstance(t, Head) else "x_El"
        inner = synth(ctx, t.body)
        n = sx.basis_arity(inner)
        if n < 2:
            raise TypingError("head/tail arity", rule, t, "B^n with n > 1", inner)
        want = B if isinstance(t, Head) else sx.bool_power(n - 1)
        if ty != want:
            raise _mismatch(rule, t, ty, want)
        d = derive(ctx, t.body, inner)
        return Derivation(rule, t, ty, (d,), ctx)

    if isinstance(t, (CastR, CastL)):
        return _derive_cast(ctx, t, ty)

    raise AssertionError(f"unknown term {t!r}")


def _cast_depth_bound(ctx: Context, t: Term, right: bool) -> int:
    m = synth(ctx, t.body)
    p = m.inner if isinstance(m, Span) else m
    comps = sx.prod_components(p)
    _, d = sx.strip_spans(comps[0] if right else comps[-1])
    return d + 1


def _derive_cast(ctx: Context, t: Term, ty: Type) -> Derivation:
    right = isinstance(t, CastR)
    rule = "cast_r" if right else "cast_l"
    if not isinstance(ty, Span):
        raise TypingError("cast shape mismatch", rule, t, ty, "a span of a product")
    comps = sx.prod_components(ty.inner)
    if len(comps) < 2:
        raise TypingError("cast shape mismatch", rule, t, ty, "a span of a product")
    kmax = _cast_depth_bound(ctx, t, right)
    splits = range(1, len(comps)) if right else range(len(comps) - 1, 0, -1)
    for i in splits:
        psi, phi = sx.mk_prod(*comps[:i]), sx.mk_prod(*comps[i:])
        if isinstance(psi if right else phi, Span):
            continue
        for k in range(1, kmax + 1):
            if right:
                premise = Span(sx.mk_prod(sx.span_n(psi, k), phi))
            else:
                premise = Span(sx.mk_prod(psi, sx.span_n(phi, k)))
            try:
                d = derive(ctx, t.body, premise)
            except TypingError:
                continue
            return Derivation(rule, t, ty, (d,), ctx, k)
    raise TypingError("cast shape mismatch", rule, t, ty, synth(ctx, t.body))


# ---------------------------------------------------------------- synthesis


def synth(ctx: Context, t: Term) -> Type:
    """Minimal type of ``t`` (linearity not checked)."""
    return _cached(_SYNTH, (ctx, t), lambda: _synth(ctx, t))


def _synth(ctx: Context, t: Term) -> Type:
    if isinstance(t, Var):
        found = ctx.get(t.name)
        if found is None:
            raise TypingError("unbound variable", "Ax", t, detail=f"variable {t.name}")
        return found
    if isinstance(t, Ket):
        return B
    if isinstance(t, Zero):
        if not sx.is_well_formed_type(t.annot):
            raise _mismatch("Ax0", t, "a well-formed annotation", t.annot)
        return Span(t.annot)
    if isinstance(t, Scale):
        return lift_span(synth(ctx, t.body))
    if isinstance(t, Sum):
        types = [synth(ctx, s) for s in t.summands]
        acc = types[0]
        for other in types[1:]:
            j = join(acc, other)
            if j is None:
                raise _mismatch("+_I", t, acc, other)
            acc = j
        res = lift_span(acc)
        derive(ctx, t, res)
        return res
    if isinstance(t, Lam):
        if not sx.is_qubit_type(t.annot):
            raise _mismatch("=>_I", t, "a qubit type", t.annot)
        return Arrow(t.annot, synth(ctx.extend(t.var, t.annot), t.body))
    if isinstance(t, Ite):
        a, b = synth(ctx, t.then_branch), synth(ctx, t.else_branch)
        j = join(a, b)
        if j is None:
            raise _mismatch("If", t, a, b)
        res = Arrow(B, j)
        derive(ctx, t, res)
        return res
    if isinstance(t, App):
        ftype = synth(ctx, t.fun)
        core, depth = sx.strip_spans(ftype)
        if not isinstance(core, Arrow):
            raise TypingError("application mismatch", "=>_E", t, "a function", ftype)
        psi, cod = core.domain, core.codomain
        if depth == 0 and derivable(ctx, t.arg, psi):
            return cod
        if depth <= 1 and derivable(ctx, t.arg, Span(psi)):
            return Span(cod)
        rule = "=>_E" if depth == 0 else "=>_ES"
        raise TypingError("application mismatch", rule, t, psi, synth(ctx, t.arg))
    if isinstance(t, Times):
        left, right = synth(ctx, t.left), synth(ctx, t.right)
        for part, ty in ((t.left, left), (t.right, right)):
            if not sx.is_qubit_type(ty):
                raise _mismatch("x_I", part, "a qubit type", ty)
        return sx.mk_prod(left, right)
    if isinstance(t, (Head, Tail)):
        rule = "x_Er" if isinstance(t, Head) else "x_El"
        inner = synth(ctx, t.body)
        n = sx.basis_arity(inner)
        if n < 2:
            raise TypingError("head/tail arity", rule, t, "B^n with n > 1", inner)
        return B if isinstance(t, Head) else sx.bool_power(n - 1)
    if isinstance(t, (CastR, CastL)):
        right = isinstance(t, CastR)
        rule = "cast_r" if right else "cast_l"
        m = synth(ctx, t.body)
        p = m.inner if isinstance(m, Span) else m
        comps = sx.prod_components(p)
        if len(comps) < 2:
            raise TypingError("cast shape mismatch", rule, t, "S(S(A) x B)", m)
        splits = range(1, len(comps)) if right else range(len(comps) - 1, 0, -1)
        for i in splits:
            psi, phi = sx.mk_prod(*comps[:i]), sx.mk_prod(*comps[i:])
            if right:
                psi = sx.strip_spans(psi)[0]
            else:
                phi = sx.strip_spans(phi)[0]
            res = Span(sx.mk_prod(psi, phi))
            if derivable(ctx, t, res):
                return res
        raise TypingError("cast shape mismatch", rule, t, "S(S(A) x B)", m)
    raise AssertionError(f"unknown term {t!r}")


# ---------------------------------------------------------------- linearity


def _linear_uses(t: Term, env: Context) -> frozenset:
    if isinstance(t, Var):
        ty = env.get(t.name)
        if ty is None:
            raise TypingError("unbound variable", "Ax", t, detail=f"variable {t.name}")
        return frozenset() if sx.is_basis_type(ty) else frozenset((t.name,))
    if isinstance(t, Lam):
        used = _linear_uses(t.body, env.extend(t.var, t.annot))
        if not sx.is_basis_type(t.annot) and t.var not in used:
            raise TypingError("linear variable unused", "=>_I", t,
                              detail=f"variable {t.var} is never used")
        return used - {t.var}
    if isinstance(t, Ite):
        a = _linear_uses(t.then_branch, env)
        b = _linear_uses(t.else_branch, env)
        if a != b:
            missing = sorted(a ^ b)
            raise TypingError("linear variable unused", "If", t,
                              detail=f"branches disagree on {', '.join(missing)}")
        return a
    rule = {App: "=>_E", Times: "x_I", Sum: "+_I"}.get(type(t))
    used: frozenset = frozenset()
    for c in sx.children(t):
        u = _linear_uses(c, env)
        if rule is not None and used & u:
            raise TypingError("linear variable reused", rule, t,
                              detail=f"variable {', '.join(sorted(used & u))} used twice")
        used |= u
    return used


def check_linear(ctx: Context, t: Term) -> None:
    used = _linear_uses(t, ctx)
    unused = ctx.linear_names() - used
    if unused:
        raise TypingError("linear variable unused", "Ax", t,
                          detail=f"context variable {', '.join(sorted(unused))} is never used")


# ---------------------------------------------------------------- public API


def _as_ctx(ctx) -> Context:
    if ctx is None:
        return EMPTY
    if isinstance(ctx, Context):
        return ctx
    if isinstance(ctx, dict):
        return Context(ctx.items())
    return Context(ctx)


def synthesize(ctx, t: Term) -> tuple[Derivation, frozenset]:
    """Canonical derivation at the minimal type, and the linear variables used."""
    ctx = _as_ctx(ctx)
    used = _linear_uses(t, ctx)
    ty = synth(ctx, t)
    return derive(ctx, t, ty), used


def check(ctx, t: Term, ty: Type) -> Derivation:
    ctx = _as_ctx(ctx)
    check_linear(ctx, t)
    return derive(ctx, t, ty)


def type_of(t: Term, ctx=None) -> Type:
    """Minimal type of a term, with the linearity check."""
    ctx = _as_ctx(ctx)
    check_linear(ctx, t)
    return synth(ctx, t)


def typecheck(t: Term, ctx=None) -> Derivation:
    ctx = _as_ctx(ctx)
    check_linear(ctx, t)
    return derive(ctx, t, synth(ctx, t))

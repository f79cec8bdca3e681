"""Types and terms of the calculus, AC canonical forms and pretty printing."""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from .scalars import Scalar


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    col: int

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "line": self.line, "col": self.col}


def _node(cls):
    """Frozen dataclass with a cached structural hash; ``span`` is ignored."""
    cls = dataclass(frozen=True, eq=False)(cls)
    names = tuple(f.name for f in dataclasses.fields(cls) if f.compare)
    cls._names = names

    def _tuple(self):
        return tuple(getattr(self, n) for n in names)

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((cls.__name__,) + _tuple(self))
            object.__setattr__(self, "_h", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self):
            return NotImplemented if not isinstance(other, (Type, Term)) else False
        if hash(self) != hash(other):
            return False
        return _tuple(self) == _tuple(other)

    cls.__hash__ = __hash__
    cls.__eq__ = __eq__
    return cls


# ---------------------------------------------------------------- types


class Type:
    __slots__ = ()


@_node
class Bool(Type):
    pass


@_node
class Prod(Type):
    left: Type
    right: Type


@_node
class Span(Type):
    inner: Type


@_node
class Arrow(Type):
    domain: Type
    codomain: Type


B = Bool()


def prod_components(t: Type) -> list[Type]:
    if isinstance(t, Prod):
        return prod_components(t.left) + prod_components(t.right)
    return [t]


def mk_prod(*parts: Type) -> Type:
    """Right-associated, flattened product."""
    comps = [c for p in parts for c in prod_components(p)]
    if not comps:
        raise ValueError("mk_prod needs at least one component")
    out = comps[-1]
    for c in reversed(comps[:-1]):
        out = Prod(c, out)
    return out


def bool_power(n: int) -> Type:
    if n < 1:
        raise ValueError("B^n needs n >= 1")
    return mk_prod(*([B] * n))


def span_n(t: Type, k: int) -> Type:
    for _ in range(k):
        t = Span(t)
    return t


def strip_spans(t: Type) -> tuple[Type, int]:
    k = 0
    while isinstance(t, Span):
        t, k = t.inner, k + 1
    return t, k


@lru_cache(maxsize=None)
def basis_arity(t: Type) -> int:
    """n if ``t`` is B^n, else 0."""
    comps = prod_components(t)
    return len(comps) if all(isinstance(c, Bool) for c in comps) else 0


def is_basis_type(t: Type) -> bool:
    return basis_arity(t) > 0


@lru_cache(maxsize=None)
def is_qubit_type(t: Type) -> bool:
    if isinstance(t, Bool):
        return True
    if isinstance(t, Span):
        return is_qubit_type(t.inner)
    if isinstance(t, Prod):
        return is_qubit_type(t.left) and is_qubit_type(t.right)
    return False


def is_well_formed_type(t: Type) -> bool:
    if isinstance(t, Bool):
        return True
    if isinstance(t, Span):
        return is_well_formed_type(t.inner)
    if isinstance(t, Prod):
        return is_qubit_type(t)
    if isinstance(t, Arrow):
        return is_qubit_type(t.domain) and is_well_formed_type(t.codomain)
    return False


def type_key(t: Type) -> tuple:
    if isinstance(t, Bool):
        return (0,)
    if isinstance(t, Prod):
        return (1, type_key(t.left), type_key(t.right))
    if isinstance(t, Span):
        return (2, type_key(t.inner))
    return (3, type_key(t.domain), type_key(t.codomain))


def pretty_type(t: Type) -> str:
    if isinstance(t, Bool):
        return "B"
    if isinstance(t, Span):
        return f"S({pretty_type(t.inner)})"
    if isinstance(t, Prod):
        parts = []
        for c in prod_components(t):
            s = pretty_type(c)
            parts.append(f"({s})" if isinstance(c, Arrow) else s)
        return " x ".join(parts)
    dom = pretty_type(t.domain)
    if isinstance(t.domain, Arrow):
        dom = f"({dom})"
    return f"{dom} => {pretty_type(t.codomain)}"


# ---------------------------------------------------------------- terms


class Term:
    __slots__ = ()

    def key(self) -> tuple:
        k = self.__dict__.get("_k")
        if k is None:
            k = _term_key(self)
            object.__setattr__(self, "_k", k)
        return k

    def __lt__(self, other: "Term") -> bool:
        return self.key() < other.key()

    def __str__(self) -> str:
        return pretty(self)


_SPAN = dict(default=None, compare=False, repr=False)


@_node
class Var(Term):
    name: str
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Lam(Term):
    var: str
    annot: Type
    body: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class App(Term):
    fun: Term
    arg: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Ket(Term):
    bit: int
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Ite(Term):
    """``if {then_branch} else {else_branch}``: a function of type B => A."""

    then_branch: Term
    else_branch: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Sum(Term):
    summands: tuple
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Scale(Term):
    scalar: Scalar
    body: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Zero(Term):
    """The null vector of type S(annot)."""

    annot: Type
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Times(Term):
    left: Term
    right: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Head(Term):
    body: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class Tail(Term):
    body: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class CastR(Term):
    body: Term
    span: Optional[SourceSpan] = field(**_SPAN)


@_node
class CastL(Term):
    body: Term
    span: Optional[SourceSpan] = field(**_SPAN)


KET0 = Ket(0)
KET1 = Ket(1)
Ket0 = KET0
Ket1 = KET1

_TAG = {Var: 0, Ket: 1, Lam: 2, Ite: 3, App: 4, Times: 5, Head: 6, Tail: 7,
        CastR: 8, CastL: 9, Zero: 10, Sum: 11}


def _term_key(t: Term) -> tuple:
    # a scaled term sorts right after its body, so factorisable summands sit together
    if isinstance(t, Scale):
        return t.body.key() + (t.scalar.sort_key(),)
    tag = _TAG[type(t)]
    if isinstance(t, Var):
        return (tag, (t.name,))
    if isinstance(t, Ket):
        return (tag, (t.bit,))
    if isinstance(t, Lam):
        return (tag, (t.var, type_key(t.annot), t.body.key()))
    if isinstance(t, Ite):
        return (tag, (t.then_branch.key(), t.else_branch.key()))
    if isinstance(t, (App,)):
        return (tag, (t.fun.key(), t.arg.key()))
    if isinstance(t, Times):
        return (tag, (t.left.key(), t.right.key()))
    if isinstance(t, Zero):
        return (tag, (type_key(t.annot),))
    if isinstance(t, Sum):
        return (tag, tuple(s.key() for s in t.summands))
    return (tag, (t.body.key(),))


def term_key(t: Term) -> tuple:
    return t.key()


def children(t: Term) -> tuple:
    """Children in path order (lambda bodies and if-branches are not positions)."""
    if isinstance(t, App):
        return (t.fun, t.arg)
    if isinstance(t, Sum):
        return t.summands
    if isinstance(t, Times):
        return (t.left, t.right)
    if isinstance(t, (Scale, Head, Tail, CastR, CastL)):
        return (t.body,)
    return ()


def mk_sum(parts, span: Optional[SourceSpan] = None) -> Term:
    flat: list[Term] = []
    for p in parts:
        if isinstance(p, Sum):
            flat.extend(p.summands)
        else:
            flat.append(p)
    if not flat:
        raise ValueError("mk_sum of an empty list")
    if len(flat) == 1:
        return flat[0]
    flat.sort(key=Term.key)
    return Sum(tuple(flat), span)


def times_components(t: Term) -> list[Term]:
    if isinstance(t, Times):
        return times_components(t.left) + times_components(t.right)
    return [t]


def mk_times(*parts: Term, span: Optional[SourceSpan] = None) -> Term:
    comps = [c for p in parts for c in times_components(p)]
    if len(comps) == 1:
        return comps[0]
    out = comps[-1]
    for c in reversed(comps[:-1]):
        out = Times(c, out)
    if span is not None:
        out = dataclasses.replace(out, span=span)
    return out


def replace_child(t: Term, i: int, new: Term) -> Term:
    """Rebuild ``t`` with child ``i`` replaced, re-establishing canonical form."""
    if isinstance(t, App):
        return App(new, t.arg, t.span) if i == 0 else App(t.fun, new, t.span)
    if isinstance(t, Sum):
        parts = list(t.summands)
        parts[i] = new
        return mk_sum(parts, t.span)
    if isinstance(t, Times):
        return mk_times(new, t.right) if i == 0 else mk_times(t.left, new)
    if isinstance(t, Scale):
        return Scale(t.scalar, new, t.span)
    return type(t)(new, t.span)


def subterm_at(t: Term, path) -> Term:
    for i in path:
        t = children(t)[i]
    return t


def replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    i = path[0]
    return replace_child(t, i, replace_at(children(t)[i], path[1:], new))


def size(t: Term) -> int:
    if isinstance(t, Lam):
        return 1 + size(t.body)
    if isinstance(t, Ite):
        return 1 + size(t.then_branch) + size(t.else_branch)
    return 1 + sum(size(c) for c in children(t))


# ---------------------------------------------------------------- classification


def is_basis_term(t: Term) -> bool:
    if isinstance(t, (Var, Lam, Ket)):
        return True
    if isinstance(t, Times):
        return is_basis_term(t.left) and is_basis_term(t.right)
    return False


def is_value(t: Term) -> bool:
    if is_basis_term(t) or isinstance(t, Zero):
        return True
    if isinstance(t, Sum):
        return all(is_value(s) for s in t.summands)
    if isinstance(t, Scale):
        return is_value(t.body)
    if isinstance(t, Times):
        return is_value(t.left) and is_value(t.right)
    return False


# ---------------------------------------------------------------- variables


@lru_cache(maxsize=65536)
def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.var}
    if isinstance(t, Ite):
        return free_vars(t.then_branch) | free_vars(t.else_branch)
    out = frozenset()
    for c in children(t):
        out |= free_vars(c)
    return out


def _fresh(base: str, avoid: set) -> str:
    for k in itertools.count(1):
        cand = f"{base}{k}"
        if cand not in avoid:
            return cand
    raise AssertionError


def rename(t: Term, old: str, new: str) -> Term:
    return substitute(t, old, Var(new))


def substitute(t: Term, x: str, r: Term) -> Term:
    """Capture-avoiding ``(r/x)t``; sums are re-canonicalised on the way up."""
    if x not in free_vars(t):
        return t
    if isinstance(t, Var):
        return r
    if isinstance(t, Lam):
        var, body = t.var, t.body
        if var in free_vars(r):
            new = _fresh(var, set(free_vars(r)) | set(free_vars(body)) | {x})
            body = rename(body, var, new)
            var = new
        return Lam(var, t.annot, substitute(body, x, r), t.span)
    if isinstance(t, Ite):
        return Ite(substitute(t.then_branch, x, r), substitute(t.else_branch, x, r), t.span)
    if isinstance(t, App):
        return App(substitute(t.fun, x, r), substitute(t.arg, x, r), t.span)
    if isinstance(t, Sum):
        return mk_sum([substitute(s, x, r) for s in t.summands], t.span)
    if isinstance(t, Scale):
        return Scale(t.scalar, substitute(t.body, x, r), t.span)
    if isinstance(t, Times):
        return mk_times(substitute(t.left, x, r), substitute(t.right, x, r))
    return type(t)(substitute(t.body, x, r), t.span)


def canonical(t: Term) -> Term:
    """Re-establish sum and product canonical forms everywhere."""
    if isinstance(t, Lam):
        return Lam(t.var, t.annot, canonical(t.body), t.span)
    if isinstance(t, Ite):
        return Ite(canonical(t.then_branch), canonical(t.else_branch), t.span)
    if isinstance(t, App):
        return App(canonical(t.fun), canonical(t.arg), t.span)
    if isinstance(t, Sum):
        return mk_sum([canonical(s) for s in t.summands], t.span)
    if isinstance(t, Scale):
        return Scale(t.scalar, canonical(t.body), t.span)
    if isinstance(t, Times):
        return mk_times(canonical(t.left), canonical(t.right))
    if isinstance(t, (Head, Tail, CastR, CastL)):
        return type(t)(canonical(t.body), t.span)
    return t


def strip_zero_annots(t: Term) -> Term:
    """Erase zero annotations (used to compare normal forms up to the type of null vectors)."""
    if isinstance(t, Zero):
        return Zero(B)
    if isinstance(t, Lam):
        return Lam(t.var, t.annot, strip_zero_annots(t.body))
    if isinstance(t, Ite):
        return Ite(strip_zero_annots(t.then_branch), strip_zero_annots(t.else_branch))
    if isinstance(t, App):
        return App(strip_zero_annots(t.fun), strip_zero_annots(t.arg))
    if isinstance(t, Sum):
        return mk_sum([strip_zero_annots(s) for s in t.summands])
    if isinstance(t, Scale):
        return Scale(t.scalar, strip_zero_annots(t.body))
    if isinstance(t, Times):
        return mk_times(strip_zero_annots(t.left), strip_zero_annots(t.right))
    if isinstance(t, (Head, Tail, CastR, CastL)):
        return type(t)(strip_zero_annots(t.body))
    return t


# ---------------------------------------------------------------- printing

# precedence levels: 0 sum, 1 scale, 2 product, 3 application, 4 atom
_LEVEL = {Sum: 0, Scale: 1, Times: 2, App: 3, Head: 3, Tail: 3, CastR: 3, CastL: 3, Lam: 0}


def pretty(t: Term) -> str:
    return _pp(t, 0)


def _pp(t: Term, ctx: int) -> str:
    s = _render(t)
    if _LEVEL.get(type(t), 4) < ctx:
        return f"({s})"
    return s


def _render(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Ket):
        return f"|{t.bit}>"
    if isinstance(t, Zero):
        return f"zero[{pretty_type(t.annot)}]"
    if isinstance(t, Lam):
        return f"\\{t.var}:{pretty_type(t.annot)}. {_pp(t.body, 0)}"
    if isinstance(t, Ite):
        return f"if {{ {_pp(t.then_branch, 0)} }} else {{ {_pp(t.else_branch, 0)} }}"
    if isinstance(t, App):
        return f"{_pp(t.fun, 3)} {_pp(t.arg, 4)}"
    if isinstance(t, Sum):
        return " + ".join(_pp(s, 1) for s in t.summands)
    if isinstance(t, Scale):
        return f"{t.scalar.render_term()} . {_pp(t.body, 1)}"
    if isinstance(t, Times):
        return " * ".join(_pp(c, 3) for c in times_components(t))
    word = {Head: "head", Tail: "tail", CastR: "upR", CastL: "upL"}[type(t)]
    return f"{word} {_pp(t.body, 4)}"

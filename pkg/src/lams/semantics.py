"""Free-module model: exact evaluation of typing derivations.

Types are read as sets: ``B`` is {|0>, |1>}, products are tuples, ``S(A)`` is
the free module over the configured scalar ring on the set for ``A`` (a finite
map with no zero coefficients), and arrows are closures.  Scaling and addition
act on the outermost layer of a value; equality at nested spans is decided
after flattening the layers with the monad multiplication.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from . import syntax as sx
from .scalars import DEFAULT_RING, Scalar
from .syntax import Arrow, Prod, Span, Type
from .typecheck import Derivation


class ShapeError(Exception):
    """A value does not have the shape its type promises (a model/typechecker mismatch)."""


class Incomparable(Exception):
    """Equality is not decidable for the given values (closures over an infinite domain)."""


INCOMPARABLE = "incomparable"


# ---------------------------------------------------------------- values


@dataclass(frozen=True)
class BoolElem:
    bit: int


@dataclass(frozen=True)
class Tuple:
    left: "SemValue"
    right: "SemValue"


class Lin:
    """Finite linear combination; zero coefficients are never stored."""

    __slots__ = ("_map", "_hash")

    def __init__(self, coeffs: Union[Mapping, Iterable] = ()) -> None:
        acc: dict = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for k, c in items:
            acc[k] = acc[k] + c if k in acc else c
        m = {k: c for k, c in acc.items() if not c.is_zero()}
        object.__setattr__(self, "_map", m)
        object.__setattr__(self, "_hash", hash(frozenset(m.items())))

    def __setattr__(self, key, value):
        raise AttributeError("Lin is immutable")

    def items(self):
        return self._map.items()

    def keys(self):
        return self._map.keys()

    def get(self, key, default=None):
        return self._map.get(key, default)

    def __getitem__(self, key):
        return self._map[key]

    def __contains__(self, key) -> bool:
        return key in self._map

    def __len__(self) -> int:
        return len(self._map)

    def __bool__(self) -> bool:
        return bool(self._map)

    def __eq__(self, other) -> bool:
        return isinstance(other, Lin) and self._map == other._map

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{_repr_key(k)}: {c.render()}" for k, c in sorted_items(self))
        return "{" + inner + "}"


@dataclass(frozen=True, eq=False)
class Closure:
    """A lambda abstraction together with the environment it was evaluated in."""

    env: Mapping
    var: str
    body: Derivation
    domain: Type
    ring: str = DEFAULT_RING

    def apply(self, v: "SemValue") -> "SemValue":
        env = dict(self.env)
        env[self.var] = v
        return denote(self.body, env, self.ring)


@dataclass(frozen=True, eq=False)
class IteClosure:
    """``if {t} else {r}``: |1> selects the first branch, |0> the second."""

    then_value: "SemValue"
    else_value: "SemValue"
    domain: Type = field(default=sx.B)

    def apply(self, v: "SemValue") -> "SemValue":
        if not isinstance(v, BoolElem):
            raise ShapeError(f"conditional applied to {v!r}")
        return self.then_value if v.bit == 1 else self.else_value


SemValue = Union[BoolElem, Tuple, Lin, Closure, IteClosure]
Env = Mapping[str, SemValue]

KET0 = BoolElem(0)
KET1 = BoolElem(1)


def _repr_key(k) -> str:
    if isinstance(k, BoolElem):
        return f"|{k.bit}>"
    if isinstance(k, Tuple):
        return "(" + ", ".join(_repr_key(c) for c in tuple_components(k)) + ")"
    if isinstance(k, Lin):
        return repr(k)
    return "<fun>"


def value_key(v) -> tuple:
    """Deterministic ordering key (closures are ordered by identity)."""
    if isinstance(v, BoolElem):
        return (0, v.bit)
    if isinstance(v, Tuple):
        return (1, tuple(value_key(c) for c in tuple_components(v)))
    if isinstance(v, Lin):
        return (2, tuple((value_key(k), c.sort_key()) for k, c in sorted_items(v)))
    return (3, id(v))


def sorted_items(x: Lin) -> list:
    return sorted(x.items(), key=lambda kv: value_key(kv[0]))


# ---------------------------------------------------------------- tuples


def tuple_components(v) -> list:
    """Components of a right-nested tuple (a non-tuple is its own single component)."""
    out = []
    while isinstance(v, Tuple):
        out.append(v.left)
        v = v.right
    out.append(v)
    return out


def mk_tuple(*parts) -> SemValue:
    """Right-nested tuple of the flattened components of ``parts``."""
    comps = [c for p in parts for c in tuple_components(p)]
    acc = comps[-1]
    for c in reversed(comps[:-1]):
        acc = Tuple(c, acc)
    return acc


# ---------------------------------------------------------------- free-module operations


def _lin(x, op: str) -> Lin:
    if not isinstance(x, Lin):
        raise ShapeError(f"{op} expects a linear combination, got {x!r}")
    return x


def unit_eta(v: SemValue, ring: str = DEFAULT_RING) -> Lin:
    return Lin({v: Scalar.one(ring)})


def mu_flatten(vv: Lin) -> Lin:
    acc = []
    for inner, a in _lin(vv, "mu_flatten").items():
        for x, b in _lin(inner, "mu_flatten").items():
            acc.append((x, a * b))
    return Lin(acc)


def vadd(x: Lin, y: Lin) -> Lin:
    """Pointwise sum of two combinations over the same set."""
    return Lin(itertools.chain(_lin(x, "vadd").items(), _lin(y, "vadd").items()))


def scale_sem(alpha: Scalar, x: Lin) -> Lin:
    return Lin((k, alpha * c) for k, c in _lin(x, "scale_sem").items())


def tensor_pair(x: Lin, y: Lin) -> Lin:
    """Bilinear pairing: sum_ij a_i b_j (u_i, w_j)."""
    _lin(x, "tensor_pair")
    _lin(y, "tensor_pair")
    return Lin((mk_tuple(u, w), a * b) for u, a in x.items() for w, b in y.items())


def vadd_layered(x: Lin, y: Lin, m: int) -> Lin:
    """Sum at S-depth ``m`` performed at the innermost layer.

    The outer ``m - 1`` layers of both arguments are multiplied out pairwise
    (the layer-factoring map), and each pair of innermost combinations is added.
    """
    if m <= 1:
        return vadd(x, y)
    return Lin((vadd_layered(u, w, m - 1), a * b)
               for u, a in _lin(x, "vadd").items() for w, b in _lin(y, "vadd").items())


def scale_layered(alpha: Scalar, x: Lin, m: int) -> Lin:
    """Scaling at S-depth ``m`` acting on the innermost layer."""
    if m <= 1:
        return scale_sem(alpha, x)
    return Lin((scale_layered(alpha, u, m - 1), c) for u, c in _lin(x, "scale").items())


def cast_distribute(x: Lin, k: int, side: str = "right") -> Lin:
    """Distribute the outer ``k`` layers of one tuple component over the whole tuple.

    ``side="right"`` is the upR cast (the first component carries the layers),
    ``side="left"`` is upL (the last component does).
    """
    if side not in ("right", "left"):
        raise ValueError(f"unknown side {side!r}")
    for _ in range(k):
        acc = []
        for key, a in _lin(x, "cast").items():
            comps = tuple_components(key)
            if len(comps) < 2:
                raise ShapeError(f"cast expects tuples, got {key!r}")
            if side == "right":
                inner, others = comps[0], comps[1:]
                for u, c in _lin(inner, "cast").items():
                    acc.append((mk_tuple(u, *others), a * c))
            else:
                inner, others = comps[-1], comps[:-1]
                for u, c in _lin(inner, "cast").items():
                    acc.append((mk_tuple(*others, u), a * c))
        x = Lin(acc)
    return x


def apply_value(f: SemValue, v: SemValue) -> SemValue:
    if isinstance(f, (Closure, IteClosure)):
        return f.apply(v)
    raise ShapeError(f"application of a non-function {f!r}")


# ---------------------------------------------------------------- interpretation


def denote(d: Derivation, env: Optional[Env] = None, ring: str = DEFAULT_RING) -> SemValue:
    """Interpret a typing derivation in the environment ``env``."""
    env = {} if env is None else env
    r, t, ps = d.rule, d.term, d.premises
    if r == "Ax":
        try:
            return env[t.name]
        except KeyError:
            raise ShapeError(f"no value for variable {t.name}") from None
    if r == "Ax0":
        return Lin()
    if r == "Ax|0>":
        return KET0
    if r == "Ax|1>":
        return KET1
    if r == "S_I":
        return unit_eta(denote(ps[0], env, ring), ring)
    if r == "alpha_I":
        return scale_sem(t.scalar, denote(ps[0], env, ring))
    if r == "+_I":
        acc = Lin()
        for p in ps:
            acc = vadd(acc, denote(p, env, ring))
        return acc
    if r == "=>_I":
        return Closure(dict(env), t.var, ps[0], t.annot, ring)
    if r == "If":
        return IteClosure(denote(ps[0], env, ring), denote(ps[1], env, ring))
    if r == "=>_E":
        du, df = ps
        return apply_value(denote(df, env, ring), denote(du, env, ring))
    if r == "=>_ES":
        du, df = ps
        fs = _lin(denote(df, env, ring), "=>_ES")
        us = _lin(denote(du, env, ring), "=>_ES")
        return Lin((apply_value(f, u), a * b) for f, a in fs.items() for u, b in us.items())
    if r == "x_I":
        return mk_tuple(denote(ps[0], env, ring), denote(ps[1], env, ring))
    if r in ("x_Er", "x_El"):
        comps = tuple_components(denote(ps[0], env, ring))
        if len(comps) < 2:
            raise ShapeError(f"{r} on a non-tuple")
        return comps[0] if r == "x_Er" else mk_tuple(*comps[1:])
    if r in ("cast_r", "cast_l"):
        side = "right" if r == "cast_r" else "left"
        return cast_distribute(denote(ps[0], env, ring), d.k, side)
    raise ShapeError(f"unknown rule {r}")


def denote_term(t: sx.Term, ty: Optional[Type] = None, ring: Optional[str] = None, ctx=None,
                env: Optional[Env] = None):
    """Typecheck ``t`` (at ``ty``, or at its minimal type) and interpret the canonical
    derivation; returns ``(value, type)``."""
    from .rewrite import term_ring
    from .typecheck import check, typecheck

    d = typecheck(t, ctx) if ty is None else check(ctx, t, ty)
    return denote(d, env, ring or term_ring(t)), d.type


# ---------------------------------------------------------------- equality


def basis_values(n: int) -> list:
    """All elements of B^n in lexicographic order."""
    return [mk_tuple(*(BoolElem(b) for b in bits)) for bits in itertools.product((0, 1), repeat=n)]


def ground(v: SemValue):
    """Hashable canonical form used for equality, with span layers flattened.

    Raises ``Incomparable`` for closures whose domain is not B^n.
    """
    if isinstance(v, BoolElem):
        return ("b", v.bit)
    if isinstance(v, Tuple):
        return ("t",) + tuple(ground(c) for c in tuple_components(v))
    if isinstance(v, Lin):
        acc: dict = defaultdict(lambda: None)
        for k, c in v.items():
            g = ground(k)
            if g[0] == "L":
                for gk, gc in g[1]:
                    acc[gk] = c * gc if acc[gk] is None else acc[gk] + c * gc
            else:
                acc[g] = c if acc[g] is None else acc[g] + c
        return ("L", frozenset((k, c) for k, c in acc.items() if not c.is_zero()))
    if isinstance(v, (Closure, IteClosure)):
        n = sx.basis_arity(v.domain)
        if n == 0:
            raise Incomparable(f"function with domain {sx.pretty_type(v.domain)}")
        return ("f",) + tuple(ground(v.apply(x)) for x in basis_values(n))
    raise ShapeError(f"not a semantic value: {v!r}")


def sem_eq(x: SemValue, y: SemValue, at: Optional[Type] = None):
    """``True``/``False``, or ``INCOMPARABLE`` when equality is not decidable."""
    if at is not None and _has_opaque_arrow(at):
        return INCOMPARABLE
    try:
        return ground(x) == ground(y)
    except Incomparable:
        return INCOMPARABLE


def _has_opaque_arrow(t: Type) -> bool:
    if isinstance(t, Arrow):
        return sx.basis_arity(t.domain) == 0 or _has_opaque_arrow(t.codomain)
    if isinstance(t, Span):
        return _has_opaque_arrow(t.inner)
    if isinstance(t, Prod):
        return any(_has_opaque_arrow(c) for c in sx.prod_components(t))
    return False


# ---------------------------------------------------------------- rendering


def render_key(v: SemValue) -> str:
    if isinstance(v, BoolElem):
        return f"|{v.bit}>"
    if isinstance(v, Tuple):
        comps = tuple_components(v)
        if all(isinstance(c, BoolElem) for c in comps):
            return "|" + "".join(str(c.bit) for c in comps) + ">"
        return "(" + ", ".join(render_key(c) for c in comps) + ")"
    if isinstance(v, Lin):
        return "(" + _render_lin(v) + ")" if len(v) != 1 else _render_lin(v)
    if isinstance(v, (Closure, IteClosure)):
        n = sx.basis_arity(v.domain)
        if n == 0:
            raise Incomparable(f"cannot render a function with domain {sx.pretty_type(v.domain)}")
        rows = [f"{render_key(x)} -> {render(v.apply(x))}" for x in basis_values(n)]
        return "{" + ", ".join(rows) + "}"
    raise ShapeError(f"not a semantic value: {v!r}")


def _render_lin(x: Lin) -> str:
    if not x:
        return "0"
    out = ""
    for idx, (k, c) in enumerate(sorted_items(x)):
        mons = c.monomials()
        neg = len(mons) == 1 and mons[0][0] < 0
        coef = (-c if neg else c).render()
        if len(mons) > 1:
            coef = f"({coef})"
        body = render_key(k) if coef == "1" else f"{coef} {render_key(k)}"
        if idx == 0:
            out = ("-" if neg else "") + body
        else:
            out += (" - " if neg else " + ") + body
    return out


def render(v: SemValue, ty: Optional[Type] = None) -> str:
    """Deterministic text rendering; the zero vector prints as ``0 : T``."""
    if isinstance(v, Lin):
        if not v and ty is not None:
            return f"0 : {sx.pretty_type(ty)}"
        return _render_lin(v)
    return render_key(v)

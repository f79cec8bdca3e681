"""Random well-typed terms and executable metatheorems.

The generator is type directed: it picks a goal type and builds a closed term
top down, threading the set of linear variables each subterm must consume.
Every emitted term is re-checked by the typechecker before use.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

from . import syntax as sx
from .rewrite import EngineError, all_reducts, is_normal, normalize
from .scalars import DEFAULT_RING, Scalar
from .semantics import INCOMPARABLE, denote, render, sem_eq
from .syntax import (App, Arrow, B, CastL, CastR, Head, Ite, Ket, Lam, Prod, Scale, Span, Sum,
                     Tail, Term, Times, Type, Var, Zero)
from .typecheck import EMPTY, Context, Derivation, TypingError, check, derivable, lifts_to

PROPERTIES = (
    "subject_reduction",
    "soundness_per_step",
    "strong_normalization",
    "local_confluence",
    "completeness_ground",
    "substitution_lemma",
    "derivation_independence",
)


def scalar_pool(ring: str) -> tuple:
    base = [Fraction(1), Fraction(-1), Fraction(2), Fraction(0), Fraction(3)]
    out = [Scalar.of(v, ring) for v in base]
    if ring in ("q", "qsi"):
        out.append(Scalar.of(Fraction(1, 2), ring))
    if ring == "qsi":
        h = Fraction(1, 2)
        out += [Scalar(ring, (0, h, 0, 0)), Scalar(ring, (0, -h, 0, 0)), Scalar.imag(ring),
                Scalar(ring, (1, 0, 1, 0))]
    return tuple(out)


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_size: int = 10
    target: Optional[Type] = None
    scalars: Optional[tuple] = None
    count: int = 100
    ring: str = DEFAULT_RING
    max_qubits: int = 3

    def pool(self) -> tuple:
        return self.scalars if self.scalars is not None else scalar_pool(self.ring)


class DeadEnd(Exception):
    pass


def can_host(goal: Type) -> bool:
    """Can a term of this type consume a linear (span-typed) variable?"""
    if isinstance(goal, Span):
        return True
    if isinstance(goal, Prod):
        return any(can_host(c) for c in sx.prod_components(goal))
    if isinstance(goal, Arrow):
        return can_host(goal.codomain)
    return False


class TermGen:
    """Type-directed generator of closed terms; ``lin`` is the set of linear
    variables the generated term has to use exactly once."""

    def __init__(self, rng: random.Random, cfg: GenConfig) -> None:
        self.rng = rng
        self.cfg = cfg
        self.pool = cfg.pool()
        self.counter = 0
        self.work = 0
        self.depth = 0
        self.max_depth = 2 * cfg.max_size + 4
        self.max_work = 400 * cfg.max_size

    # helpers

    def fresh(self) -> str:
        self.counter += 1
        return f"x{self.counter}"

    def scalar(self) -> Scalar:
        return self.rng.choice(self.pool)

    def split_size(self, size: int, parts: int) -> list:
        size = max(size - 1, parts)
        cuts = sorted(self.rng.randint(1, size - 1) for _ in range(parts - 1)) if size > 1 else []
        bounds = [0] + cuts + [size]
        return [max(1, b - a) for a, b in zip(bounds, bounds[1:])]

    def split_lin(self, lin: frozenset, goals: list, hostable: Optional[list] = None) -> list:
        hostable = hostable or [can_host(g) for g in goals]
        slots = [i for i, h in enumerate(hostable) if h]
        out = [set() for _ in goals]
        for x in sorted(lin):
            if not slots:
                raise DeadEnd
            out[self.rng.choice(slots)].add(x)
        return [frozenset(s) for s in out]

    def basis_type(self, lo: int = 1) -> Type:
        return sx.bool_power(self.rng.randint(lo, self.cfg.max_qubits))

    def basis_value(self, n: int, env: dict) -> Term:
        parts = []
        for _ in range(n):
            bvars = [v for v, t in env.items() if t == B]
            if bvars and self.rng.random() < 0.3:
                parts.append(Var(self.rng.choice(bvars)))
            else:
                parts.append(Ket(self.rng.randint(0, 1)))
        return sx.mk_times(*parts)

    # main entry

    def gen(self, goal: Type, size: int, lin: frozenset = frozenset(), env: Optional[dict] = None
            ) -> Term:
        env = env or {}
        self.work += 1
        if lin and not can_host(goal) or self.depth > self.max_depth or self.work > self.max_work:
            raise DeadEnd
        total = self.options(goal, size, lin, env)
        self.depth += 1
        try:
            while total:
                weights = [w for w, _ in total]
                idx = self.rng.choices(range(len(total)), weights=weights)[0]
                _, make = total.pop(idx)
                try:
                    return make()
                except DeadEnd:
                    if self.work > self.max_work:
                        raise
        finally:
            self.depth -= 1
        raise DeadEnd

    def options(self, goal: Type, size: int, lin: frozenset, env: dict) -> list:
        r = self.rng
        opts: list = []
        small = size <= 1

        # leaves
        if len(lin) == 1:
            (x,) = lin
            if lifts_to(env[x], goal):
                opts.append((6 if small else 2, lambda: Var(x)))
        if not lin:
            if goal == B:
                opts.append((3, lambda: Ket(r.randint(0, 1))))
            n = sx.basis_arity(goal)
            if n:
                same = [v for v, t in env.items() if t == goal]
                if same:
                    opts.append((2, lambda: Var(r.choice(same))))
                if small or n > 1:
                    opts.append((2 if small else 1, lambda: self.basis_value(n, env)))
            if isinstance(goal, Span):
                opts.append((1, lambda: Zero(self.zero_annot(goal))))
                if small and not isinstance(goal.inner, Arrow):
                    opts.append((4, lambda: self.gen(goal.inner, size, lin, env)))

        if isinstance(goal, Arrow):
            opts.append((4, lambda: self.gen_lam(goal, size, lin, env)))
            if goal.domain == B:
                opts.append((2, lambda: self.gen_ite(goal.codomain, size, lin, env)))
            return opts

        if small and opts:
            return opts

        if isinstance(goal, Span):
            inner = goal.inner
            opts.append((3, lambda: self.gen_sum(goal, size, lin, env)))
            opts.append((2, lambda: Scale(self.scalar(), self.gen(goal, size - 1, lin, env))))
            if not isinstance(inner, Arrow) or not lin:
                opts.append((1, lambda: self.gen(inner, size, lin, env)))
            if not isinstance(inner, Arrow):
                opts.append((3, lambda: self.gen_app_superposed(inner, size, lin, env)))
                if isinstance(inner, Prod) and not isinstance(sx.strip_spans(inner)[0], Arrow):
                    opts.append((3, lambda: self.gen_cast(inner, size, lin, env)))

        if isinstance(goal, Prod):
            opts.append((4, lambda: self.gen_times(goal, size, lin, env)))
            n = sx.basis_arity(goal)
            if n and n < self.cfg.max_qubits and not lin:
                opts.append((1, lambda: Tail(self.gen(sx.bool_power(n + 1), size - 1, lin, env))))

        if goal == B and not lin and self.cfg.max_qubits >= 2:
            opts.append((1, lambda: Head(self.gen(self.basis_type(2), size - 1, lin, env))))

        if not isinstance(goal, Arrow):
            opts.append((2, lambda: self.gen_app_basis(goal, size, lin, env)))
            opts.append((2, lambda: self.gen_app_ite(goal, size, lin, env)))
            if can_host(goal):
                opts.append((2, lambda: self.gen_app_span(goal, size, lin, env)))
        return opts

    def zero_annot(self, goal: Span) -> Type:
        inner = goal.inner
        if isinstance(inner, Span) and self.rng.random() < 0.5:
            return inner.inner
        return inner

    # compound shapes

    def gen_sum(self, goal: Span, size: int, lin, env) -> Term:
        k = 2 if self.rng.random() < 0.8 else 3
        sizes = self.split_size(size, k)
        lins = self.split_lin(lin, [goal] * k)
        return sx.mk_sum([self.gen(goal, s, l, env) for s, l in zip(sizes, lins)])

    def gen_times(self, goal: Type, size: int, lin, env) -> Term:
        comps = sx.prod_components(goal)
        i = self.rng.randint(1, len(comps) - 1)
        left, right = sx.mk_prod(*comps[:i]), sx.mk_prod(*comps[i:])
        sl, sr = self.split_size(size, 2)
        ll, lr = self.split_lin(lin, [left, right])
        return sx.mk_times(self.gen(left, sl, ll, env), self.gen(right, sr, lr, env))

    def gen_lam(self, goal: Arrow, size: int, lin, env) -> Term:
        x = self.fresh()
        env2 = dict(env)
        env2[x] = goal.domain
        inner_lin = lin if sx.is_basis_type(goal.domain) else lin | {x}
        body = self.gen(goal.codomain, size - 1, inner_lin, env2)
        return Lam(x, goal.domain, body)

    def gen_ite(self, goal: Type, size: int, lin, env) -> Term:
        st, sr = self.split_size(size, 2)
        return Ite(self.gen(goal, st, lin, env), self.gen(goal, sr, lin, env))

    def lam_domain(self) -> Type:
        return self.basis_type() if self.cfg.max_qubits == 1 else sx.bool_power(
            self.rng.randint(1, min(2, self.cfg.max_qubits)))

    def gen_app_basis(self, goal: Type, size: int, lin, env) -> Term:
        dom = self.lam_domain()
        sf, sa = self.split_size(size, 2)
        fun = self.gen_lam(Arrow(dom, goal), sf, lin, env)
        return App(fun, self.gen(dom, sa, frozenset(), env))

    def gen_app_ite(self, goal: Type, size: int, lin, env) -> Term:
        sf, sa = self.split_size(size, 2)
        return App(self.gen_ite(goal, sf, lin, env), self.gen(B, sa, frozenset(), env))

    def gen_app_span(self, goal: Type, size: int, lin, env) -> Term:
        dom = Span(self.lam_domain())
        sf, sa = self.split_size(size, 2)
        lf, la = self.split_lin(lin, [goal, dom])
        fun = self.gen_lam(Arrow(dom, goal), sf, lf, env)
        return App(fun, self.gen(dom, sa, la, env))

    def gen_app_superposed(self, inner: Type, size: int, lin, env) -> Term:
        """An application of type S(inner) whose argument or function is a superposition."""
        r = self.rng
        dom = self.lam_domain()
        sf, sa = self.split_size(size, 2)
        kind = r.randrange(3)
        if kind == 0:
            lf, la = self.split_lin(lin, [inner, Span(dom)])
            fun = self.gen_lam(Arrow(dom, inner), sf, lf, env)
            return App(fun, self.gen(Span(dom), sa, la, env))
        if kind == 1:
            lf, la = self.split_lin(lin, [inner, Span(B)])
            return App(self.gen_ite(inner, sf, lf, env), self.gen(Span(B), sa, la, env))
        # a combination of functions; only basis domains, so every summand can fire
        if lin:
            raise DeadEnd
        fun = self.gen_fun_combination(Arrow(dom, inner), sf, env)
        arg_goal = Span(dom) if r.random() < 0.5 else dom
        return App(fun, self.gen(arg_goal, sa, frozenset(), env))

    def gen_fun_combination(self, arrow: Arrow, size: int, env) -> Term:
        r = self.rng
        roll = r.random()
        if size <= 2 or roll < 0.3:
            if r.random() < 0.15:
                return Zero(arrow)
            return self.gen(arrow, size, frozenset(), env)
        if roll < 0.5:
            return Scale(self.scalar(), self.gen_fun_combination(arrow, size - 1, env))
        s1, s2 = self.split_size(size, 2)
        return sx.mk_sum([self.gen_fun_combination(arrow, s1, env),
                          self.gen_fun_combination(arrow, s2, env)])

    def gen_cast(self, inner: Type, size: int, lin, env) -> Term:
        comps = sx.prod_components(inner)
        i = self.rng.randint(1, len(comps) - 1)
        psi, phi = sx.mk_prod(*comps[:i]), sx.mk_prod(*comps[i:])
        right = self.rng.random() < 0.5
        if right and isinstance(psi, Span) or not right and isinstance(phi, Span):
            right = not right
        if right and isinstance(psi, Span) or not right and isinstance(phi, Span):
            raise DeadEnd
        k = 2 if self.rng.random() < 0.15 else 1
        lifted = sx.span_n(psi if right else phi, k)
        pair = sx.mk_prod(lifted, phi) if right else sx.mk_prod(psi, lifted)
        if self.rng.random() < 0.6:
            # the common shape: a product with an explicit superposition on the cast side
            sl, sr = self.split_size(size - 1, 2)
            goals = [lifted, phi] if right else [psi, lifted]
            ll, lr = self.split_lin(lin, goals)
            sup = self.gen_sum if self.rng.random() < 0.6 else self.gen_scaled
            if right:
                body = sx.mk_times(sup(lifted, sl, ll, env), self.gen(phi, sr, lr, env))
            else:
                body = sx.mk_times(self.gen(psi, sl, ll, env), sup(lifted, sr, lr, env))
        else:
            body = self.gen(Span(pair), size - 1, lin, env)
        return CastR(body) if right else CastL(body)

    def gen_scaled(self, goal: Span, size: int, lin, env) -> Term:
        return Scale(self.scalar(), self.gen(goal, size - 1, lin, env))


# ---------------------------------------------------------------- goal types


def ground_goals(max_qubits: int = 3) -> list:
    return [Span(sx.bool_power(n)) for n in range(1, max_qubits + 1)]


def general_goals(max_qubits: int = 3) -> list:
    out = [B, Span(B), Span(B), Span(sx.bool_power(2)), Span(Span(B)),
           sx.mk_prod(Span(B), B), sx.mk_prod(B, Span(B)),
           Arrow(B, Span(B)), Arrow(Span(B), Span(B))]
    if max_qubits >= 2:
        out.append(sx.bool_power(2))
    if max_qubits >= 3:
        out += [Span(sx.bool_power(3)), sx.bool_power(3)]
    return out


def gen_typed_term(cfg: GenConfig, rng: Optional[random.Random] = None,
                   goals: Optional[list] = None, attempts: int = 200, prefer_redex: float = 0.0
                   ) -> tuple[Term, Type, Derivation]:
    """One closed term, its goal type and its canonical derivation at that goal.

    With ``prefer_redex`` > 0 a term already in normal form is thrown away with
    that probability, which steers the stream towards terms that compute.
    """
    rng = rng or random.Random(cfg.seed)
    goals = goals or ([cfg.target] if cfg.target is not None else general_goals(cfg.max_qubits))
    for _ in range(attempts):
        goal = rng.choice(goals)
        size = rng.randint(max(1, cfg.max_size // 2), cfg.max_size)
        gen = TermGen(rng, cfg)
        try:
            t = gen.gen(goal, size)
        except (DeadEnd, RecursionError):
            continue
        if sx.size(t) > cfg.max_size:
            continue
        try:
            d = check(EMPTY, t, goal)
        except TypingError:
            continue
        if prefer_redex and rng.random() < prefer_redex and is_normal(t, cfg.ring):
            continue
        return t, goal, d
    raise DeadEnd(f"no term after {attempts} attempts")


def term_stream(cfg: GenConfig, goals: Optional[list] = None, tag: str = "") -> Iterator:
    """Deterministic stream: case ``i`` is generated from its own seeded generator."""
    for i in range(cfg.count):
        rng = random.Random(f"{cfg.seed}/{tag}/{i}")
        yield i, gen_typed_term(cfg, rng, goals)


# ---------------------------------------------------------------- reports


@dataclass
class Failure:
    case: int
    term: str
    goal: str
    message: str
    shrunk: Optional[str] = None
    shrink_path: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    denotations: dict = field(default_factory=dict)


@dataclass
class PropertyReport:
    name: str
    seed: int
    cases: int = 0
    checks: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "ok" if self.ok else f"{len(self.failures)} FAILED"
        return (f"{self.name}: {status} ({self.cases} cases, {self.checks} checks, "
                f"{self.skipped} skipped, {self.seconds:.2f}s)")

    def to_json(self, timing: bool = False) -> dict:
        out = {"name": self.name, "seed": self.seed, "cases": self.cases, "checks": self.checks,
               "skipped": self.skipped, "ok": self.ok,
               "failures": [asdict(f) for f in self.failures]}
        if timing:
            out["seconds"] = round(self.seconds, 3)
        return out


# ---------------------------------------------------------------- shrinking


def shrink_candidates(t: Term) -> list:
    """Smaller terms to try in place of ``t``: subterms first, then local simplifications."""
    out = []
    kids = sx.children(t)
    out.extend(k for k in kids if not isinstance(t, (Lam, Ite)))
    if isinstance(t, Ite):
        out += [t.then_branch, t.else_branch]
    if isinstance(t, Sum):
        for i in range(len(t.summands)):
            out.append(sx.mk_sum(t.summands[:i] + t.summands[i + 1:]))
    for i, k in enumerate(kids):
        for c in shrink_candidates(k):
            out.append(sx.replace_child(t, i, c))
    if isinstance(t, Lam):
        out += [Lam(t.var, t.annot, c) for c in shrink_candidates(t.body)]
    if isinstance(t, Ite):
        out += [Ite(c, t.else_branch) for c in shrink_candidates(t.then_branch)]
        out += [Ite(t.then_branch, c) for c in shrink_candidates(t.else_branch)]
    if not isinstance(t, Ket):
        out += [Ket(0)]
    return [c for c in out if sx.size(c) < sx.size(t)]


def shrink(t: Term, goal: Type, fails: Callable[[Term], bool], limit: int = 200
           ) -> tuple[Term, list]:
    """Greedy shrinking; the path lists the candidate index taken at each round."""
    path = []
    for _ in range(limit):
        for idx, c in enumerate(shrink_candidates(t)):
            try:
                check(EMPTY, c, goal)
            except TypingError:
                continue
            try:
                if fails(c):
                    t = c
                    path.append(idx)
                    break
            except Exception:  # noqa: BLE001 - a crash also reproduces a failure
                t = c
                path.append(idx)
                break
        else:
            return t, path
    return t, path


def replay_shrink(t: Term, goal: Type, path: list) -> Term:
    """Re-apply a recorded shrink path to the originally generated term."""
    for idx in path:
        cands = shrink_candidates(t)
        if idx >= len(cands) or not derivable_closed(cands[idx], goal):
            raise ValueError(f"shrink path does not replay at index {idx}")
        t = cands[idx]
    return t


def derivable_closed(t: Term, goal: Type) -> bool:
    try:
        check(EMPTY, t, goal)
        return True
    except TypingError:
        return False


# ---------------------------------------------------------------- properties


def _pretty(t) -> str:
    return sx.pretty(t) if isinstance(t, Term) else str(t)


def _ring(cfg: GenConfig) -> str:
    return cfg.ring


def _check_subject_reduction(t: Term, goal: Type, cfg: GenConfig) -> tuple:
    checks = 0
    ring = _ring(cfg)
    tr = normalize(t, ring=ring)
    terms = [t] + [s.after for s in tr.steps]
    for cur in terms[:50]:
        for rule, path, red in all_reducts(cur, ring):
            checks += 1
            try:
                check(EMPTY, red, goal)
            except TypingError as e:
                return checks, f"{rule} at {list(path)} gives an ill-typed term: {e}", tr
    for s in tr.steps:
        checks += 1
        try:
            check(EMPTY, s.after, goal)
        except TypingError as e:
            return checks, f"step {s.rule} breaks typing: {e}", tr
    return checks, None, tr


def _check_soundness(t: Term, goal: Type, cfg: GenConfig) -> tuple:
    ring = _ring(cfg)
    tr = normalize(t, ring=ring)
    before = denote(check(EMPTY, t, goal), ring=ring)
    checks = 0
    for s in tr.steps:
        after = denote(check(EMPTY, s.after, goal), ring=ring)
        checks += 1
        eq = sem_eq(before, after, goal)
        if eq is INCOMPARABLE:
            return checks, "incomparable", tr
        if not eq:
            return checks, (f"step {s.rule} changes the denotation: {render(before, goal)} "
                            f"vs {render(after, goal)}"), tr
        before = after
    return checks, None, tr


def _check_sn(t: Term, goal: Type, cfg: GenConfig, budget: int = 10_000) -> tuple:
    tr = normalize(t, max_steps=budget, ring=_ring(cfg))
    if not tr.normal:
        return 1, f"no normal form within {budget} steps", tr
    return 1, None, tr


def _nf_key(t: Term, ring: str) -> Term:
    tr = normalize(t, ring=ring, check_types=False)
    if not tr.normal:
        raise EngineError("budget exceeded while joining")
    return sx.strip_zero_annots(tr.final)


def _check_local_confluence(t: Term, goal: Type, cfg: GenConfig) -> tuple:
    ring = _ring(cfg)
    tr = normalize(t, ring=ring)
    checks = 0
    for cur in [t] + [s.after for s in tr.steps][:20]:
        reds = sorted(all_reducts(cur, ring), key=lambda x: (x[0], x[1], x[2].key()))
        nfs = {}
        for rule, path, red in reds:
            nfs[(rule, path, red)] = _nf_key(red, ring)
        items = list(nfs.items())
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                checks += 1
                (r1, p1, t1), n1 = items[i]
                (r2, p2, t2), n2 = items[j]
                if n1 != n2:
                    return checks, (f"peak {r1}@{list(p1)} / {r2}@{list(p2)} from "
                                    f"{sx.pretty(cur)} not joinable: {sx.pretty(n1)} vs "
                                    f"{sx.pretty(n2)}"), tr
    return checks, None, tr


# semantics-preserving shuffles used by the completeness property

def _shuffles(t: Term, rng: random.Random, ring: str) -> list:
    one = Scalar.one(ring)
    out = [Scale(one, t), sx.mk_sum([t, Zero(sx.strip_spans(_safe_type(t))[0])])]
    if isinstance(t, Scale):
        a = t.scalar
        b = rng.choice(scalar_pool(ring))
        out.append(sx.mk_sum([Scale(b, t.body), Scale(a - b, t.body)]))
        if ring != "z":
            h = Scalar.of(Fraction(1, 2), ring)
            out.append(Scale(Scalar.of(2, ring), Scale(h * a, t.body)))
        out.append(Scale(-one, Scale(-a, t.body)))
        if isinstance(t.body, Sum):
            out.append(sx.mk_sum([Scale(a, s) for s in t.body.summands]))
    if isinstance(t, Sum):
        out.append(Scale(one, t))
        parts = list(t.summands)
        rng.shuffle(parts)
        k = rng.randint(1, len(parts) - 1) if len(parts) > 1 else 1
        out.append(sx.mk_sum([Scale(one, sx.mk_sum(parts[:k]))] + parts[k:]))
    return out


def _safe_type(t: Term) -> Type:
    try:
        from .typecheck import synth
        return synth(EMPTY, t)
    except TypingError:
        return B


def _positions(t: Term, path=()) -> list:
    out = [path]
    if isinstance(t, (Lam, Ite)):
        return out
    for i, k in enumerate(sx.children(t)):
        out.extend(_positions(k, path + (i,)))
    return out


def make_shuffled(t: Term, goal: Type, rng: random.Random, ring: str, rounds: int = 3
                  ) -> Term:
    """Apply random summand permutations and scalar refactorings that keep the denotation."""
    cur = t
    for _ in range(rounds):
        pos = rng.choice(_positions(cur))
        sub = sx.subterm_at(cur, pos)
        if sx.free_vars(sub):
            continue
        cands = _shuffles(sub, rng, ring)
        rng.shuffle(cands)
        for c in cands:
            new = sx.replace_at(cur, pos, c)
            if derivable_closed(new, goal):
                cur = new
                break
    return cur


def _check_completeness(t: Term, goal: Type, cfg: GenConfig, rng: random.Random) -> tuple:
    ring = _ring(cfg)
    other = make_shuffled(t, goal, rng, ring)
    dv = denote(check(EMPTY, t, goal), ring=ring)
    dw = denote(check(EMPTY, other, goal), ring=ring)
    if sem_eq(dv, dw, goal) is not True:
        return 1, (f"shuffle changed the denotation: {sx.pretty(other)}"), None
    n1, n2 = _nf_key(t, ring), _nf_key(other, ring)
    if n1 != n2:
        return 1, (f"equal denotations, different normal forms: {sx.pretty(n1)} vs "
                   f"{sx.pretty(n2)} (partner {sx.pretty(other)})"), None
    return 1, None, None


def _substitution_instance(cfg: GenConfig, rng: random.Random):
    for _ in range(200):
        psi = rng.choice([B, sx.bool_power(2), Span(B), Span(sx.bool_power(2))][
            : 4 if cfg.max_qubits >= 2 else 1])
        goal = rng.choice([Span(B), Span(sx.bool_power(2)), B, Span(Span(B))])
        gen = TermGen(rng, cfg)
        x = "z0"
        lin = frozenset() if sx.is_basis_type(psi) else frozenset((x,))
        try:
            body = gen.gen(goal, rng.randint(1, cfg.max_size), lin, {x: psi})
            arg = gen.gen(psi, rng.randint(1, max(1, cfg.max_size // 2)))
        except DeadEnd:
            continue
        try:
            db = check(Context(((x, psi),)), body, goal)
            da = check(EMPTY, arg, psi)
            check(EMPTY, sx.substitute(body, x, arg), goal)
        except TypingError:
            continue
        return body, x, psi, arg, goal, db, da
    raise DeadEnd("no substitution instance")


def push_down_lifts(d: Derivation) -> list:
    """Alternative derivations of the same judgement, each moving one S_I towards the leaves."""
    out = []
    if d.rule == "S_I":
        p = d.premises[0]
        if p.rule == "alpha_I":
            lifted = Derivation("S_I", p.premises[0].term, d.type, (p.premises[0],), p.ctx)
            out.append(Derivation("alpha_I", d.term, d.type, (lifted,), d.ctx))
        elif p.rule == "+_I":
            lifted = tuple(Derivation("S_I", q.term, d.type, (q,), q.ctx) for q in p.premises)
            out.append(Derivation("+_I", d.term, d.type, lifted, d.ctx))
        elif p.rule == "=>_E":
            du, df = p.premises
            lu = Derivation("S_I", du.term, Span(du.type), (du,), du.ctx)
            lf = Derivation("S_I", df.term, Span(df.type), (df,), df.ctx)
            out.append(Derivation("=>_ES", d.term, d.type, (lu, lf), d.ctx))
    for i, p in enumerate(d.premises):
        for alt in push_down_lifts(p):
            prem = d.premises[:i] + (alt,) + d.premises[i + 1:]
            out.append(Derivation(d.rule, d.term, d.type, prem, d.ctx, d.k))
    return out


def derivation_example(ring: str = DEFAULT_RING) -> tuple:
    """The two derivations of ``1.zero[B] : S(S(B))`` (scale then lift, lift then scale)."""
    one = Scalar.one(ring)
    t = Scale(one, Zero(B))
    sb, ssb = Span(B), Span(Span(B))
    ax = Derivation("Ax0", Zero(B), sb)
    first = Derivation("alpha_I", t, ssb, (Derivation("S_I", Zero(B), ssb, (ax,)),))
    second = Derivation("S_I", t, ssb, (Derivation("alpha_I", t, sb, (ax,)),))
    return t, first, second


def run_property(name: str, cfg: GenConfig) -> PropertyReport:
    if name not in PROPERTIES:
        raise ValueError(f"unknown property {name!r} (expected one of {', '.join(PROPERTIES)})")
    rep = PropertyReport(name, cfg.seed)
    start = time.perf_counter()
    ring = cfg.ring

    if name == "substitution_lemma":
        for i in range(cfg.count):
            rng = random.Random(f"{cfg.seed}/{name}/{i}")
            try:
                body, x, psi, arg, goal, db, da = _substitution_instance(cfg, rng)
            except DeadEnd:
                rep.skipped += 1
                continue
            rep.cases += 1
            rep.checks += 1
            direct = denote(check(EMPTY, sx.substitute(body, x, arg), goal), ring=ring)
            via_env = denote(db, {x: denote(da, ring=ring)}, ring)
            eq = sem_eq(direct, via_env, goal)
            if eq is INCOMPARABLE:
                rep.skipped += 1
            elif not eq:
                rep.failures.append(Failure(i, sx.pretty(body), sx.pretty_type(goal),
                                            f"substituting {sx.pretty(arg)} for {x}",
                                            denotations={"substituted": render(direct, goal),
                                                         "environment": render(via_env, goal)}))
        rep.seconds = time.perf_counter() - start
        return rep

    if name == "derivation_independence":
        t, first, second = derivation_example(ring)
        rep.checks += 1
        a, b = denote(first, ring=ring), denote(second, ring=ring)
        if a != b:
            rep.failures.append(Failure(-1, sx.pretty(t), "S(S(B))", "paper example differs",
                                        denotations={"first": repr(a), "second": repr(b)}))

    goals = ground_goals(cfg.max_qubits) if name in (
        "soundness_per_step", "completeness_ground") else None
    if cfg.target is not None:
        goals = [cfg.target]

    for i in range(cfg.count):
        rng = random.Random(f"{cfg.seed}/{name}/{i}")
        try:
            t, goal, d = gen_typed_term(cfg, rng, goals, prefer_redex=0.8)
        except DeadEnd:
            rep.skipped += 1
            continue
        rep.cases += 1

        def run(term: Term):
            if name == "subject_reduction":
                return _check_subject_reduction(term, goal, cfg)
            if name == "soundness_per_step":
                return _check_soundness(term, goal, cfg)
            if name == "strong_normalization":
                return _check_sn(term, goal, cfg)
            if name == "local_confluence":
                return _check_local_confluence(term, goal, cfg)
            if name == "completeness_ground":
                return _check_completeness(term, goal, cfg, random.Random(f"{cfg.seed}/{i}/c"))
            return _check_independence(term, goal, cfg)

        try:
            checks, msg, tr = run(t)
        except Exception as e:  # noqa: BLE001 - a crash is reported as a failure
            checks, msg, tr = 1, f"internal error: {type(e).__name__}: {e}", None
        rep.checks += checks
        if msg == "incomparable":
            rep.skipped += 1
            continue
        if msg is None:
            continue

        def fails(c: Term) -> bool:
            try:
                return run(c)[1] not in (None, "incomparable")
            except Exception:  # noqa: BLE001
                return True

        small, path = shrink(t, goal, fails)
        f = Failure(i, sx.pretty(t), sx.pretty_type(goal), msg, sx.pretty(small), path)
        if tr is not None:
            f.trace = tr.rules()
        rep.failures.append(f)
    rep.seconds = time.perf_counter() - start
    return rep


def _check_independence(t: Term, goal: Type, cfg: GenConfig) -> tuple:
    ring = _ring(cfg)
    d = check(EMPTY, t, goal)
    base = denote(d, ring=ring)
    checks = 0
    for alt in push_down_lifts(d)[:20]:
        checks += 1
        other = denote(alt, ring=ring)
        eq = sem_eq(base, other, goal)
        if eq is INCOMPARABLE:
            return checks, "incomparable", None
        if not eq:
            return checks, (f"derivations disagree: {render(base, goal)} vs "
                            f"{render(other, goal)}"), None
    return checks, None, None


DEFAULT_COUNTS = {
    "subject_reduction": (500, 10),
    "soundness_per_step": (300, 10),
    "strong_normalization": (300, 12),
    "local_confluence": (200, 8),
    "completeness_ground": (100, 10),
    "substitution_lemma": (200, 8),
    "derivation_independence": (200, 10),
}


def run_suite(seed: int = 0, count: Optional[int] = None, ring: str = DEFAULT_RING,
              names=PROPERTIES) -> list:
    """Run the property suite; ``count`` overrides the per-property default case counts."""
    out = []
    for name in names:
        n, size = DEFAULT_COUNTS[name]
        cfg = GenConfig(seed=seed, max_size=size, count=count if count is not None else n,
                        ring=ring)
        out.append(run_property(name, cfg))
    return out


def suite_json(reports: list) -> str:
    return json.dumps({"properties": [r.to_json() for r in reports],
                       "ok": all(r.ok for r in reports)}, indent=2, ensure_ascii=False)

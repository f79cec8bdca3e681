import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lams import syntax as sx
from lams.harness import GenConfig, gen_typed_term, ground_goals
from lams.parser import parse_term as P
from lams.rewrite import (RULES, EngineError, IllTyped, all_reducts, is_normal, normal_form,
                          normalize, step)
from lams.semantics import INCOMPARABLE, denote, sem_eq
from lams.syntax import Ket, Scale, Sum, Times, Zero
from lams.typecheck import EMPTY, check, type_of, typecheck

# one root redex per rule, with the expected contractum
REDEXES = {
    "beta_b": (r"(\x:B. x * x) |1>", "|1> * |1>"),
    "beta_n": (r"(\x:S(B). 2 . x) (|0> + |1>)", "2 . (|0> + |1>)"),
    "lin_r_plus": (r"(\x:B. x * x) (|0> + |1>)", r"(\x:B. x * x) |0> + (\x:B. x * x) |1>"),
    "lin_r_scal": (r"(\x:B. x * x) (2 . |1>)", r"2 . ((\x:B. x * x) |1>)"),
    "lin_r_zero": (r"(\x:B. x * x) zero[B]", "zero[B x B]"),
    "lin_l_plus": (r"((\x:B. x) + (\y:B. |0>)) |1>", r"(\x:B. x) |1> + (\y:B. |0>) |1>"),
    "lin_l_scal": (r"(3 . (\x:B. x)) |1>", r"3 . ((\x:B. x) |1>)"),
    "lin_l_zero": ("zero[B => B] |1>", "zero[B]"),
    "if_true": ("(if {|0>} else {|1>}) |1>", "|0>"),
    "if_false": ("(if {|0>} else {|1>}) |0>", "|1>"),
    "head": ("head (|0> * |1> * |1>)", "|0>"),
    "tail": ("tail (|0> * |1> * |1>)", "|1> * |1>"),
    "neut": ("zero[B] + |1>", "|1>"),
    "unit": ("1 . |1>", "|1>"),
    "zero_scal": ("0 . |1>", "zero[B]"),
    "zero": ("2 . zero[B]", "zero[B]"),
    "prod": ("2 . (3 . |1>)", "6 . |1>"),
    "dist_scal_sum": ("2 . (|0> + |1>)", "2 . |0> + 2 . |1>"),
    "fact": ("2 . |1> + 3 . |1>", "5 . |1>"),
    "fact1": ("2 . |1> + |1>", "3 . |1>"),
    "fact2": ("|1> + |1>", "2 . |1>"),
    "dist_sum_r": ("upR ((|0> + |1>) * |0>)", "upR (|0> * |0>) + upR (|1> * |0>)"),
    "dist_sum_l": ("upL (|0> * (|0> + |1>))", "upL (|0> * |0>) + upL (|0> * |1>)"),
    "dist_scal_r": ("upR ((2 . |1>) * |0>)", "2 . upR (|1> * |0>)"),
    "dist_scal_l": ("upL (|0> * (2 . |1>))", "2 . upL (|0> * |1>)"),
    "dist_zero_r": ("upR (zero[B] * |0>)", "zero[B x B]"),
    "dist_zero_l": ("upL (|0> * zero[B])", "zero[B x B]"),
    "dist_cast_sum": ("upR ((1 . |0>) * |0> + (1 . |1>) * |0>)",
                      "upR ((1 . |0>) * |0>) + upR ((1 . |1>) * |0>)"),
    "dist_cast_scal": ("upR (2 . ((1 . |1>) * |0>))", "2 . upR ((1 . |1>) * |0>)"),
    "dist_cast_zero_r": ("upR zero[S(S(B)) x B]", "upR zero[S(B) x B]"),
    "cast_neut_zero_r": ("upR zero[S(B) x B]", "zero[B x B]"),
    "dist_cast_zero_l": ("upL zero[B x S(S(B))]", "upL zero[B x S(B)]"),
    "cast_neut_zero_l": ("upL zero[B x S(B)]", "zero[B x B]"),
    "cast_neut_r": ("upL (|0> * |1>)", "|0> * |1>"),
    "cast_neut_l": ("upR (|0> * |1>)", "|0> * |1>"),
}


def test_every_rule_has_a_redex():
    assert set(REDEXES) == set(RULES)


@pytest.mark.parametrize("rule", RULES)
def test_rule_fires(rule):
    src, expected = REDEXES[rule]
    s = step(P(src))
    assert (s.rule, s.path) == (rule, ())
    assert s.after == P(expected)


@pytest.mark.parametrize("rule", RULES)
def test_rule_preserves_type(rule):
    t = P(REDEXES[rule][0])
    ty = type_of(t)
    check(EMPTY, step(t).after, ty)


@pytest.mark.parametrize("rule", RULES)
def test_rule_preserves_denotation(rule):
    t = P(REDEXES[rule][0])
    d = typecheck(t)
    before = denote(d)
    after = denote(check(EMPTY, step(t).after, d.type))
    assert sem_eq(before, after, d.type) is True


def test_cnot_first_steps():
    t = P(r"(\x:B. x * x) ((1/2)*sqrt2 . (|0> + |1>))")
    tr = normalize(t)
    assert tr.rules()[:4] == ["lin_r_scal", "lin_r_plus", "beta_b", "beta_b"]
    assert tr.steps[3].after == P("(1/2)*sqrt2 . (|0> * |0> + |1> * |1>)")


def test_steps_chain():
    tr = normalize(P(r"(if {|0>} else {|1>}) (2 . |1> + 3 . |0>)"))
    for a, b in zip(tr.steps, tr.steps[1:]):
        assert a.after == b.before
    assert tr.final == tr.steps[-1].after and tr.normal


def test_step_path_locates_redex():
    s = step(P("|0> + 1 . |1>"))
    assert s.rule == "unit" and s.path == (1,)
    assert sx.subterm_at(s.before, s.path) == P("1 . |1>")


def test_sum_rule_prefers_first_pair():
    s = step(P("2 . |0> + 3 . |0> + 4 . |0>"))
    assert s.rule == "fact" and s.after == P("5 . |0> + 4 . |0>")


def test_normal_form_of_value():
    assert is_normal(P("(1/2)*sqrt2 . |0> + (-1) . |1>"))
    assert step(P("|0>")) is None


def test_all_reducts_unit():
    reds = all_reducts(P("1 . (|0> + |1>)"))
    assert ("unit", (), P("|0> + |1>")) in reds


def test_all_reducts_prod_only():
    reds = all_reducts(P("2 . (3 . |1>)"))
    assert {(r, p) for r, p, _ in reds} == {("prod", ())}


def test_all_reducts_fact_pair():
    reds = all_reducts(P("2 . |0> + 3 . |0> + |1>"))
    assert ("fact", (), P("5 . |0> + |1>")) in reds


def test_all_reducts_finds_every_fact_pair():
    t = P("2 . |0> + 3 . |0> + 5 . |0>")
    facts = {u for r, _, u in all_reducts(t) if r == "fact"}
    # brute force over the three summand pairs
    parts = t.summands
    expected = set()
    for i in range(3):
        for j in range(i + 1, 3):
            rest = [p for k, p in enumerate(parts) if k not in (i, j)]
            expected.add(sx.mk_sum(rest + [Scale(parts[i].scalar + parts[j].scalar, parts[i].body)]))
    assert facts == expected


def test_zero_scal_annotation_strips_one_span():
    assert step(P("0 . (|0> + |1>)")).after == Zero(sx.B)
    assert step(P("0 . (1 . zero[S(B)])")).rule == "zero_scal"


def test_refuses_ill_typed():
    with pytest.raises(IllTyped):
        normalize(P("head (|0> + |1>)"))


def test_budget():
    t = P(r"(\x:B. x * x) ((1/2)*sqrt2 . (|0> + |1>))")
    tr = normalize(t, max_steps=2)
    assert tr.count == 2 and not tr.normal
    with pytest.raises(EngineError):
        normal_form(t, max_steps=2)


def test_trace_json_lines():
    tr = normalize(P("2 . (3 . |1>)"))
    lines = [json.loads(x) for x in tr.json_lines()]
    assert lines[0] == {"index": 0, "rule": "prod", "path": [], "before": "2 . 3 . |1>",
                        "after": "6 . |1>"}
    assert lines[-1] == {"steps": 1, "normal_form": "6 . |1>"}


def _adequate(t) -> bool:
    """Zero, or a sum of distinct basis kets each scaled by neither 0 nor 1."""
    if isinstance(t, Zero):
        return True
    parts = t.summands if isinstance(t, Sum) else (t,)
    bodies = []
    for p in parts:
        if isinstance(p, Scale):
            if p.scalar.is_zero() or p.scalar.is_one():
                return False
            p = p.body
        if not all(isinstance(c, Ket) for c in sx.times_components(p)):
            return False
        bodies.append(p)
    return len(set(bodies)) == len(bodies)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["qsi", "q", "z"]))
def test_ground_normal_forms_are_adequate(seed, ring):
    cfg = GenConfig(max_size=10, ring=ring)
    t, goal, _ = gen_typed_term(cfg, random.Random(seed), ground_goals())
    nf = normal_form(t)
    assert _adequate(nf), sx.pretty(nf)
    check(EMPTY, nf, goal)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_every_step_is_in_all_reducts(seed):
    t, _, _ = gen_typed_term(GenConfig(max_size=8), random.Random(seed))
    for s in normalize(t).steps[:10]:
        assert (s.rule, s.path, s.after) in all_reducts(s.before)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_reducts_stay_typed_and_sound(seed):
    t, goal, d = gen_typed_term(GenConfig(max_size=8), random.Random(seed))
    before = denote(d)
    for _, _, u in all_reducts(t):
        eq = sem_eq(before, denote(check(EMPTY, u, goal)), goal)
        assert eq is True or eq is INCOMPARABLE


def test_times_of_values_normalizes_both_sides():
    nf = normal_form(P("(1 . |0>) * (1 . |1>)"))
    assert nf == Times(Ket(0), Ket(1))

import json
import random
from collections import Counter

import pytest

from lams import syntax as sx
from lams.harness import (PROPERTIES, GenConfig, derivable_closed, gen_typed_term,
                          make_shuffled, push_down_lifts, replay_shrink, run_property, run_suite,
                          shrink, suite_json, term_stream)
from lams.parser import parse_term as P
from lams.parser import parse_type as T
from lams.semantics import denote, sem_eq
from lams.typecheck import EMPTY, check


def constructors(t) -> Counter:
    c: Counter = Counter()
    stack = [t]
    while stack:
        u = stack.pop()
        c[type(u).__name__] += 1
        stack.extend(sx.children(u))
        if isinstance(u, sx.Lam):
            stack.append(u.body)
        if isinstance(u, sx.Ite):
            stack += [u.then_branch, u.else_branch]
    return c


def test_stream_is_deterministic():
    cfg = GenConfig(seed=7, max_size=10, count=30)
    a = [sx.pretty(t) for _, (t, _, _) in term_stream(cfg)]
    b = [sx.pretty(t) for _, (t, _, _) in term_stream(cfg)]
    assert a == b
    c = [sx.pretty(t) for _, (t, _, _) in term_stream(GenConfig(seed=8, max_size=10, count=30))]
    assert a != c


def test_generated_terms_self_check():
    cfg = GenConfig(seed=1, max_size=10, count=200)
    for _, (t, goal, d) in term_stream(cfg):
        assert not sx.free_vars(t)
        assert sx.size(t) <= cfg.max_size
        assert check(EMPTY, t, goal) == d


def test_target_span_b_stream():
    cfg = GenConfig(seed=2, max_size=6, target=T("S(B)"), count=200)
    seen = Counter()
    for _, (t, goal, _) in term_stream(cfg):
        assert goal == T("S(B)")
        seen.update(constructors(t))
    for name in ("Sum", "Scale", "Ite", "App", "Zero"):
        assert seen[name] > 0, name


def test_target_pair_stream():
    cfg = GenConfig(seed=2, max_size=6, target=T("B x B"), count=200)
    seen = Counter()
    for _, (t, _, _) in term_stream(cfg):
        seen.update(constructors(t))
    assert seen["Times"] > 0 and seen["Head"] + seen["Tail"] > 0


def test_every_constructor_appears():
    seen = Counter()
    for _, (t, _, _) in term_stream(GenConfig(seed=0, max_size=12, count=300)):
        seen.update(constructors(t))
    for name in ("Var", "Lam", "App", "Ket", "Ite", "Sum", "Scale", "Zero", "Times", "Head",
                 "Tail", "CastR", "CastL"):
        assert seen[name] > 0, name


@pytest.mark.parametrize("name", PROPERTIES)
def test_reports_are_deterministic(name):
    cfg = GenConfig(seed=4, max_size=6, count=8)
    a, b = run_property(name, cfg), run_property(name, cfg)
    assert a.to_json() == b.to_json()
    assert a.ok and a.cases > 0


def test_unknown_property():
    with pytest.raises(ValueError):
        run_property("nope", GenConfig())


def test_suite_json_round_trips():
    reports = run_suite(seed=0, count=3)
    payload = json.loads(suite_json(reports))
    assert [p["name"] for p in payload["properties"]] == list(PROPERTIES)
    assert payload["ok"] is True


def test_shrink_keeps_type_and_failure():
    # a planted "bug": any term containing a cast fails
    def fails(t) -> bool:
        return constructors(t)["CastR"] > 0

    rng = random.Random(0)
    for _ in range(500):
        t, goal, _ = gen_typed_term(GenConfig(max_size=12), rng)
        if fails(t) and sx.size(t) > 6:
            break
    else:
        pytest.fail("no cast in the stream")
    small, path = shrink(t, goal, fails)
    assert fails(small) and derivable_closed(small, goal)
    assert sx.size(small) < sx.size(t)
    assert replay_shrink(t, goal, path) == small


def test_shrink_returns_input_when_nothing_smaller_fails():
    t = P("|0>")
    small, path = shrink(t, T("B"), lambda u: u == t)
    assert small == t and path == []


def test_shuffled_partner_has_same_denotation():
    rng = random.Random(3)
    t = P("2 . (|0> + |1>) + (1/2)*sqrt2 . |0>")
    goal = T("S(B)")
    other = make_shuffled(t, goal, rng, "qsi")
    assert sem_eq(denote(check(EMPTY, t, goal)), denote(check(EMPTY, other, goal)), goal) is True


def test_push_down_lifts_preserves_judgement():
    d = check(EMPTY, P("2 . (|0> + |1>)"), T("S(S(B))"))
    alts = push_down_lifts(d)
    assert alts
    for alt in alts:
        assert alt.type == d.type and alt.term == d.term and alt != d
        assert sem_eq(denote(alt), denote(d), d.type) is True


def test_failures_replay_from_seed_and_path(monkeypatch):
    import lams.harness as h

    def planted(t, goal, cfg, budget=10_000):
        return 1, ("has a cast" if constructors(t)["CastR"] else None), None

    monkeypatch.setattr(h, "_check_sn", planted)
    cfg = GenConfig(seed=5, max_size=12, count=60)
    rep = run_property("strong_normalization", cfg)
    assert not rep.ok
    for f in rep.failures:
        rng = random.Random(f"{cfg.seed}/strong_normalization/{f.case}")
        t, goal, _ = gen_typed_term(cfg, rng, None, prefer_redex=0.8)
        assert sx.pretty(t) == f.term
        small = replay_shrink(t, goal, f.shrink_path)
        assert sx.pretty(small) == f.shrunk
        assert constructors(small)["CastR"] == 1

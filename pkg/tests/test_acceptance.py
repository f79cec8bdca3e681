"""The twelve acceptance criteria, one test each (summary lines come from conftest.py).

All arithmetic is exact, so every comparison is structural equality with no
tolerance.  The only pinned tolerances are wall-clock budgets and step budgets.
"""

import random
import time

import pytest

from lams import syntax as sx
from lams.cli import _corpus_text, corpus_names, main
from lams.harness import GenConfig, derivation_example, run_property
from lams.parser import parse_term as P
from lams.rewrite import normalize
from lams.scalars import RINGS
from lams.semantics import (Lin, denote, mu_flatten, scale_sem, sem_eq, tensor_pair, unit_eta,
                            vadd)
from lams.syntax import B, Scale, Zero
from lams.typecheck import EMPTY, check, typecheck
from lin_gen import random_lin, random_scalar

QIF_SECONDS = 1.0          # criterion 1, per instance
SOUNDNESS_SECONDS = 60.0   # criterion 6, corpus plus generated suite
SN_BUDGET = 10_000         # criterion 8, steps per term
MODEL_INSTANCES = 1000     # criterion 12, per law and ring

H = (r"\x:B. if x then (1/2)*sqrt2 . |0> - (1/2)*sqrt2 . |1> "
     r"else (1/2)*sqrt2 . |0> + (1/2)*sqrt2 . |1>")


def nf(src: str):
    tr = normalize(P(src), max_steps=SN_BUDGET)
    assert tr.normal
    return tr


# ---------------------------------------------------------------- 1


QIF_SCALARS = ["(1/2)*sqrt2", "((1/2)*i*sqrt2)", "3", "(-1)", "(1 + i)", "(-(1/2)*sqrt2)"]


def qif_cases():
    for r in ("|0>", "|1>"):
        for s in ("|0>", "|1>"):
            for a, b in [(QIF_SCALARS[i], QIF_SCALARS[(i + 1 + j) % len(QIF_SCALARS)])
                         for i in range(len(QIF_SCALARS)) for j in range(2)]:
                yield r, s, a, b


def test_criterion_01_quantum_if():
    for r, s, a, b in qif_cases():
        start = time.perf_counter()
        got = nf(f"(if {{{r}}} else {{{s}}}) ({a} . |1> + {b} . |0>)").final
        elapsed = time.perf_counter() - start
        sa, sb = P(f"{a} . |0>").scalar, P(f"{b} . |0>").scalar
        if r != s:
            expected = sx.mk_sum([Scale(sa, P(r)), Scale(sb, P(s))])
        elif (sa + sb).is_zero():
            expected = Zero(B)
        elif (sa + sb).is_one():
            expected = P(r)
        else:
            expected = Scale(sa + sb, P(r))
        assert got == expected, (r, s, a, b, sx.pretty(got))
        assert elapsed < QIF_SECONDS


# ---------------------------------------------------------------- 2, 3


CNOT = r"(\x:B. x * x) ((1/2)*sqrt2 . (|0> + |1>))"
CNOT_TARGET = "(1/2)*sqrt2 . (|0> * |0> + |1> * |1>)"
CNOT_RULES = ["lin_r_scal", "lin_r_plus", "beta_b", "beta_b"]

CAST = "upR (((1/2)*sqrt2 . (|0> + |1>)) * |0>)"
CAST_TARGET = "(1/2)*sqrt2 . (|0> * |0> + |1> * |0>)"


def test_cnot_printed_prefix():
    """The printed four-step reduction is reproduced rule by rule."""
    tr = nf(CNOT)
    assert tr.rules()[:4] == CNOT_RULES
    assert tr.steps[3].after == P(CNOT_TARGET)


def test_cast_printed_prefix():
    tr = nf(CAST)
    assert tr.steps[3].after == P(CAST_TARGET)
    assert sem_eq(denote(typecheck(tr.final)), denote(typecheck(P(CAST_TARGET)))) is True


def test_criterion_02_cnot():
    # The target still has a redex (dist_scal_sum), so it cannot be the normal form;
    # this fails by design and is recorded in the decisions ledger.
    tr = nf(CNOT)
    assert tr.rules() == CNOT_RULES
    assert tr.final == P(CNOT_TARGET)


def test_criterion_03_cast():
    # Same obstruction as criterion 2: the target is reducible by dist_scal_sum.
    tr = nf(CAST)
    assert tr.final == P(CAST_TARGET)


# ---------------------------------------------------------------- 4


def test_criterion_04_hadamard(capsys):
    plus = P("(1/2)*sqrt2 . |0> + (1/2)*sqrt2 . |1>")
    minus = P("(1/2)*sqrt2 . |0> + (-(1/2)*sqrt2) . |1>")
    assert nf(f"({H}) |0>").final == plus
    assert nf(f"({H}) |1>").final == minus
    assert P(_corpus_text("hadamard")) == P(H)
    assert main(["check", "corpus:hadamard"]) == 0
    assert capsys.readouterr().out == "B => S(B)\n"


# ---------------------------------------------------------------- 5


INTRO_CHAIN = ["fact1", "fact", "zero_scal", "neut", "unit"]
# pairs with v before w in the term order, matching the printed chain
INTRO_PAIRS = [("|0>", "|1>"), ("|0> * |1>", "|1> * |1>"), (r"\x:B. x", r"\y:B. |0>")]


def test_criterion_05_intro_derivation():
    for v, w in INTRO_PAIRS:
        tr = nf(f"(-1) . ({v}) + ({v}) + 3 . ({w}) + (-2) . ({w})")
        assert tr.count == 5
        assert tr.rules() == INTRO_CHAIN
        assert tr.final == P(w)


def test_intro_derivation_other_order():
    """With w before v the engine merges the w pair first; still five steps to w."""
    v, w = "|1>", "|0>"
    tr = nf(f"(-1) . {v} + {v} + 3 . {w} + (-2) . {w}")
    assert tr.count == 5 and tr.final == P(w)
    assert sorted(tr.rules()) == sorted(INTRO_CHAIN)


# ---------------------------------------------------------------- 6 to 10


def _corpus_soundness() -> int:
    steps = 0
    for name in corpus_names():
        t = P(_corpus_text(name))
        d = typecheck(t)
        tr = normalize(t, max_steps=SN_BUDGET)
        assert tr.normal
        for s in tr.steps:
            before = denote(check(EMPTY, s.before, d.type))
            after = denote(check(EMPTY, s.after, d.type))
            assert sem_eq(before, after, d.type) is True, (name, s.rule)
            steps += 1
    return steps


def test_criterion_06_soundness_suite():
    start = time.perf_counter()
    assert _corpus_soundness() > 0
    rep = run_property("soundness_per_step", GenConfig(seed=0, max_size=10, count=300))
    elapsed = time.perf_counter() - start
    assert rep.ok, rep.failures[:3]
    assert rep.cases >= 300 and rep.skipped == 0 and rep.checks >= 300
    assert elapsed < SOUNDNESS_SECONDS


def test_criterion_07_subject_reduction():
    rep = run_property("subject_reduction", GenConfig(seed=0, max_size=10, count=500))
    assert rep.ok, rep.failures[:3]
    assert rep.cases >= 500


def test_criterion_08_strong_normalization():
    rep = run_property("strong_normalization", GenConfig(seed=0, max_size=12, count=300))
    assert rep.ok, rep.failures[:3]
    assert rep.cases >= 300


def test_criterion_09_local_confluence():
    rep = run_property("local_confluence", GenConfig(seed=0, max_size=8, count=200))
    assert rep.ok, rep.failures[:3]
    assert rep.cases >= 200


def test_criterion_10_completeness_ground():
    rep = run_property("completeness_ground", GenConfig(seed=0, max_size=10, count=100))
    assert rep.ok, rep.failures[:3]
    assert rep.cases >= 100 and rep.skipped == 0


# ---------------------------------------------------------------- 11


def test_criterion_11_derivation_independence():
    t, first, second = derivation_example()
    assert first.rules() != second.rules()
    a, b = denote(first), denote(second)
    assert a == b
    assert denote(check(EMPTY, t, first.type)) == a


# ---------------------------------------------------------------- 12


def _us_map(f, x):
    return Lin((f(k), c) for k, c in x.items())


@pytest.mark.parametrize("ring", RINGS)
def test_criterion_12_model_axioms(ring):
    rng = random.Random(f"model/{ring}")
    for _ in range(MODEL_INSTANCES):
        x = random_lin(rng, ring, rng.randint(1, 3))
        assert mu_flatten(unit_eta(x, ring)) == x
        assert mu_flatten(_us_map(lambda k: unit_eta(k, ring), x)) == x
    for _ in range(MODEL_INSTANCES):
        x = random_lin(rng, ring, 3)
        assert mu_flatten(mu_flatten(x)) == mu_flatten(_us_map(mu_flatten, x))
    for _ in range(MODEL_INSTANCES):
        x = random_lin(rng, ring, 1, 4, rng.randint(1, 2))
        alpha = random_scalar(rng, ring)
        assert scale_sem(alpha, Lin()) == Lin()
        assert tensor_pair(Lin(), x) == Lin() == tensor_pair(x, Lin())
        assert vadd(x, Lin()) == x
    for _ in range(MODEL_INSTANCES):
        a, b, c = (random_lin(rng, ring, 1, 4, rng.randint(1, 2)) for _ in range(3))
        assert tensor_pair(vadd(a, b), c) == vadd(tensor_pair(a, c), tensor_pair(b, c))


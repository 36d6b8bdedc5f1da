import math
import random

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_bleu, oracle_f1, oracle_metric_tokens, oracle_rouge_l
from pdnrg.acts import DialogueAct as DA
from pdnrg.annotation import Frame
from pdnrg.corpus import load_schema
from pdnrg.generation import TemplateRealizer, Variant, generate_turn
from pdnrg.metrics import (
    MetricError,
    adherence_report,
    bleu4,
    distinct_n,
    evaluate_corpus,
    knowledge_realized,
    metric_tokens,
    rouge_l,
    unigram_prf,
)
from pdnrg.tagging import Tag

_text = st.lists(st.sampled_from("a b c d e f the cat sat on mat .".split()), min_size=1, max_size=12).map(" ".join)


def test_tokens():
    assert metric_tokens("Hello, World!") == ["hello", ",", "world", "!"]


def test_bleu_brevity_case():
    # all n-gram precisions are 1 over the three usable orders; only the penalty remains
    assert bleu4("the cat sat", "the cat sat down") == pytest.approx(math.exp(1 - 4 / 3), abs=1e-9)


def test_rouge_lcs_three_case():
    p = r = 3 / 4
    beta = 1.2
    expected = (1 + beta**2) * p * r / (r + beta**2 * p)
    assert rouge_l("a b c d", "a c d e") == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(0.75)


def test_multiset_f1_case():
    p, r, f = unigram_prf("a a b", "a b b")
    assert (p, r, f) == pytest.approx((2 / 3, 2 / 3, 2 / 3), abs=1e-9)


@pytest.mark.parametrize("fn", [bleu4, rouge_l, lambda c, r: unigram_prf(c, r)[2]])
def test_identity_and_disjoint(fn):
    assert fn("the cat sat on the mat", "the cat sat on the mat") == pytest.approx(1.0)
    assert fn("alpha beta gamma", "delta epsilon zeta") == pytest.approx(0.0, abs=1e-6)


def test_distinct_examples():
    assert distinct_n(["a b a b"], 1) == 0.5
    assert distinct_n(["x y z"], 1) == 1.0
    assert distinct_n(["a b", "a b"], 2) == 0.5
    with pytest.raises(MetricError):
        distinct_n(["a", "b"], 2)


def test_ten_pair_report_equals_oracle_aggregate():
    rng = random.Random(10)
    words = "the cat sat on a mat dog ran fast".split()
    pairs = [(" ".join(rng.choices(words, k=rng.randint(2, 9))), " ".join(rng.choices(words, k=rng.randint(2, 9)))) for _ in range(10)]
    report = evaluate_corpus(pairs)
    assert report.n == 10
    assert report.bleu4 == pytest.approx(sum(oracle_bleu(c, r) for c, r in pairs) / 10, abs=1e-12)
    assert report.rouge_l == pytest.approx(sum(oracle_rouge_l(c, r) for c, r in pairs) / 10, abs=1e-12)
    assert report.f1 == pytest.approx(sum(oracle_f1(c, r) for c, r in pairs) / 10, abs=1e-12)
    all_tokens = [t for c, _ in pairs for t in oracle_metric_tokens(c)]
    assert report.distinct_1 == pytest.approx(len(set(all_tokens)) / len(all_tokens))


def test_single_identical_pair_report():
    rep = evaluate_corpus([("I like golf.", "I like golf.")])
    assert (rep.bleu4, rep.rouge_l, rep.f1) == pytest.approx((1, 1, 1))
    jsonschema.validate(rep.to_json(), load_schema("report"))
    with pytest.raises(MetricError):
        evaluate_corpus([])


# adherence


def test_adherence_on_template_output():
    k = "Golf balls have about 336 dimples."
    plan = [Frame(DA.FEEDBACK), Frame(DA.STATEMENT, None, "k", k, True), Frame(DA.PROP_Q, None, "k", k, True)]
    result = generate_turn(["Do you play golf?"], plan, TemplateRealizer(), Variant.DA_FLAG)
    rep = adherence_report(result.trace)
    assert rep["da_acc"] == 1.0
    assert rep["k_real"] == 1.0 and rep["k_n"] == 2


def test_adherence_excludes_no_da_and_errors_when_empty():
    traces = [(Frame(DA.NO_DA), "whatever."), (Frame(DA.STATEMENT), "The sky is blue.")]
    assert adherence_report(traces)["da_n"] == 1
    with pytest.raises(MetricError):
        adherence_report([(Frame(DA.NO_DA), "x.")])
    with pytest.raises(MetricError):
        adherence_report([])


def test_adherence_with_external_tags():
    traces = [(Frame(DA.STATEMENT), "a."), (Frame(DA.PROP_Q), "b?")]
    rep = adherence_report(traces, [Tag(DA.STATEMENT, 0.9), Tag(DA.PROP_Q, 0.3)])
    assert rep["da_acc"] == 0.5
    with pytest.raises(MetricError):
        adherence_report(traces, [Tag(DA.STATEMENT, 0.9)])


def test_knowledge_realized():
    k = "Tom Brady has won seven Super Bowl titles."
    assert knowledge_realized(f"I heard that {k}", k)
    assert not knowledge_realized("I like pizza.", k)


# properties


@settings(max_examples=200, deadline=None)
@given(_text, _text)
def test_metrics_match_oracles(c, r):
    assert bleu4(c, r) == pytest.approx(oracle_bleu(c, r), abs=1e-12)
    assert rouge_l(c, r) == pytest.approx(oracle_rouge_l(c, r), abs=1e-12)
    assert unigram_prf(c, r)[2] == pytest.approx(oracle_f1(c, r), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(_text, _text)
def test_metric_ranges_and_swap(c, r):
    for v in (bleu4(c, r), rouge_l(c, r), *unigram_prf(c, r)):
        assert 0.0 <= v <= 1.0 + 1e-12
    p, rec, f = unigram_prf(c, r)
    p2, rec2, f2 = unigram_prf(r, c)
    assert (p, rec) == pytest.approx((rec2, p2))
    # the harmonic mean is symmetric whatever the lengths
    assert f == pytest.approx(f2)


@settings(max_examples=100, deadline=None)
@given(st.lists(_text, min_size=1, max_size=6), st.integers(1, 2))
def test_distinct_bounds_and_duplicates(corpus, n):
    try:
        d = distinct_n(corpus, n)
    except MetricError:
        return
    assert 0.0 < d <= 1.0
    assert distinct_n(corpus + [corpus[0]], n) <= d + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(_text, _text), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_report_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a, b = evaluate_corpus(pairs).to_json(), evaluate_corpus(shuffled).to_json()
    for key, value in a.items():
        if isinstance(value, float):
            assert b[key] == pytest.approx(value, abs=1e-12)
        else:
            assert b[key] == value

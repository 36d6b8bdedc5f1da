import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bm25_scores, brute_df, dense_tfidf_scores, oracle_select, oracle_tokens
from pdnrg.corpus import KnowledgeCorpus
from pdnrg.retrieval import (
    RetrievalError,
    TokenizerConfig,
    build_index,
    cosine_score,
    rank_knowledge,
    select_knowledge,
    smoothed_idf,
    tokenize,
)

TOY = [
    ("k0", "The NFL has no official rule against female players."),
    ("k1", "Tom Brady has won seven Super Bowl titles."),
    ("k2", "Golf balls have about 336 dimples."),
    ("k3", "The NFL season runs from September to February."),
    ("k4", "Female referees have worked NFL games."),
]

WORDS = "nfl golf ball team player music song album book novel film actor season win lose fan".split()


def random_corpus(rng, n_max=50):
    n = rng.randint(1, n_max)
    ids = rng.sample(range(1000), n)
    return [(f"s{i:03d}", " ".join(rng.choices(WORDS, k=rng.randint(1, 8)))) for i in ids]


def random_context(rng):
    pool = WORDS + ["zebra", "quux"]
    return " ".join(rng.choices(pool, k=rng.randint(1, 10)))


def test_tokenize():
    assert tokenize("Don't STOP-me, now!") == ["dont", "stop", "me", "now"]
    assert tokenize("A.B", TokenizerConfig(lowercase=False, strip_punct=False)) == ["A.B"]


def test_smoothed_idf_values():
    assert smoothed_idf(1, 1) == 1.0
    assert smoothed_idf(3, 0) == pytest.approx(math.log(4) + 1)


def test_df_small_example():
    index = build_index([("a", "cat dog"), ("b", "cat cat"), ("c", "bird")])
    df = {t: index.doc_freq[i] for t, i in index.vocabulary.items()}
    assert df == {"cat": 2, "dog": 1, "bird": 1}


def test_single_doc_idf_all_equal():
    index = build_index([("a", "one two three two")])
    assert set(index.idf) == {1.0}


def test_hundred_sentence_index_matches_brute_force():
    rng = random.Random(7)
    docs = [(f"k{i:03d}", " ".join(rng.choices(WORDS, k=rng.randint(1, 12)))) for i in range(100)]
    index = build_index(docs)
    df = brute_df(docs)
    got = {t: index.doc_freq[i] for t, i in index.vocabulary.items()}
    assert got == dict(df)
    for term, tid in index.vocabulary.items():
        assert index.idf[tid] == pytest.approx(math.log(101 / (df[term] + 1)) + 1, abs=1e-12)


def test_toy_scores_equal_dense_oracle():
    index = build_index(TOY)
    oracle = dense_tfidf_scores(TOY, "nfl female players")
    for kid, _ in TOY:
        assert cosine_score(index, "nfl female players", kid) == pytest.approx(oracle[kid], abs=1e-12)
    sel = select_knowledge(index, "nfl female players")
    assert sel.knowledge_id == "k0"
    assert sel.use_knowledge


def test_unseen_context_terms_lower_the_score():
    index = build_index(TOY)
    plain = cosine_score(index, "nfl female players", "k0")
    padded = cosine_score(index, "nfl female players zebra", "k0")
    assert padded < plain
    assert padded == pytest.approx(dense_tfidf_scores(TOY, "nfl female players zebra")["k0"], abs=1e-12)


def test_twenty_sentence_fixture_ten_contexts():
    rng = random.Random(11)
    docs = [(f"k{i:02d}", " ".join(rng.choices(WORDS, k=rng.randint(2, 9)))) for i in range(20)]
    index = build_index(docs)
    for _ in range(10):
        ctx = random_context(rng)
        kid, score, _ = oracle_select(docs, ctx)
        sel = select_knowledge(index, ctx)
        assert sel.knowledge_id == kid
        assert sel.score == pytest.approx(score, abs=1e-9)


def test_oracle_equivalence_random_corpora():
    rng = random.Random(2024)
    for _ in range(100):
        docs = random_corpus(rng)
        index = build_index(docs)
        ctx = random_context(rng)
        kid, score, use = oracle_select(docs, ctx)
        sel = select_knowledge(index, ctx, threshold=0.2)
        assert sel.knowledge_id == kid
        assert abs(sel.score - score) <= 1e-9
        assert sel.use_knowledge == use


def test_ties_break_by_lowest_id():
    index = build_index([("b", "golf ball"), ("a", "golf ball"), ("c", "music")])
    assert select_knowledge(index, "golf").knowledge_id == "a"
    assert [k for k, _ in rank_knowledge(index, "golf", 3)] == ["a", "b", "c"]


def test_zero_context_selects_lowest_id_unused():
    index = build_index(TOY)
    sel = select_knowledge(index, "!!!")
    assert sel.knowledge_id == "k0"
    assert sel.score == 0.0
    assert not sel.use_knowledge
    assert sel.effective_id is None


def test_threshold_is_inclusive():
    index = build_index(TOY)
    score = cosine_score(index, "golf", "k2")
    assert select_knowledge(index, "golf", threshold=score).use_knowledge
    assert not select_knowledge(index, "golf", threshold=math.nextafter(score, 2)).use_knowledge


def test_rank_matches_oracle_sort():
    rng = random.Random(3)
    docs = random_corpus(rng, 30)
    index = build_index(docs)
    ctx = random_context(rng)
    oracle = dense_tfidf_scores(docs, ctx)
    ranked = rank_knowledge(index, ctx, len(docs))
    assert [k for k, _ in ranked] == [k for k, _ in sorted(oracle.items(), key=lambda kv: (-round(kv[1], 12), kv[0]))]
    assert rank_knowledge(index, ctx, 0) == []


def test_bm25_scorer_matches_oracle_ranking():
    index = build_index(TOY)
    ctx = "nfl season players"
    oracle = bm25_scores(TOY, ctx)
    ranked = rank_knowledge(index, ctx, 5, scorer="bm25")
    for kid, s in ranked:
        assert s == pytest.approx(oracle[kid], abs=1e-12)
    sel = select_knowledge(index, ctx, scorer="bm25")
    assert sel.knowledge_id == ranked[0][0]
    # the reported score stays the cosine so the threshold keeps its meaning
    assert sel.score == pytest.approx(cosine_score(index, ctx, sel.knowledge_id))


def test_errors():
    with pytest.raises(RetrievalError):
        build_index([])
    with pytest.raises(RetrievalError):
        build_index([("a", "...")])
    index = build_index([("a", "words"), ("b", "?!")])
    assert index.excluded == ("b",)
    with pytest.raises(KeyError):
        cosine_score(index, "words", "b")
    with pytest.raises(ValueError):
        select_knowledge(index, "words", scorer="nope")


def test_knowledge_corpus_input():
    kc = KnowledgeCorpus.from_texts([t for _, t in TOY])
    assert select_knowledge(build_index(kc), "golf dimples").text == TOY[2][1]


_doc_text = st.lists(st.sampled_from(WORDS), min_size=1, max_size=8).map(" ".join)
_corpus = st.lists(_doc_text, min_size=1, max_size=20).map(lambda ts: [(f"k{i:02d}", t) for i, t in enumerate(ts)])
_context = st.lists(st.sampled_from(WORDS + ["zebra"]), min_size=0, max_size=8).map(" ".join)


@settings(max_examples=100, deadline=None)
@given(_corpus, _context, st.floats(0.01, 100))
def test_idf_scale_invariance(docs, ctx, factor):
    index = build_index(docs)
    scaled = index.with_idf_scale(factor)
    a, b = select_knowledge(index, ctx), select_knowledge(scaled, ctx)
    if b.knowledge_id != a.knowledge_id:
        # only a floating-point near-tie may reorder the argmax
        assert abs(cosine_score(index, ctx, a.knowledge_id) - cosine_score(index, ctx, b.knowledge_id)) < 1e-9
    assert b.score == pytest.approx(a.score, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(_corpus, _context)
def test_score_bounds(docs, ctx):
    index = build_index(docs)
    for kid in index.ids:
        assert 0.0 <= cosine_score(index, ctx, kid) <= 1.0 + 1e-9


@settings(max_examples=100, deadline=None)
@given(_corpus, _context, st.floats(0, 1), st.floats(0, 1))
def test_monotone_threshold(docs, ctx, t1, t2):
    lo, hi = sorted((t1, t2))
    index = build_index(docs)
    if not select_knowledge(index, ctx, lo).use_knowledge:
        assert not select_knowledge(index, ctx, hi).use_knowledge


@settings(max_examples=100, deadline=None)
@given(_corpus, _context, st.integers(1, 25))
def test_rank_consistent_with_select(docs, ctx, k):
    index = build_index(docs)
    ranked = rank_knowledge(index, ctx, k)
    assert len(ranked) == min(k, len(index.ids))
    scores = [s for _, s in ranked]
    assert scores == sorted(scores, reverse=True)
    assert ranked[0][0] == select_knowledge(index, ctx).knowledge_id


@settings(max_examples=60, deadline=None)
@given(_corpus, _context)
def test_oracle_tokenizer_agrees(docs, ctx):
    for _, text in docs:
        assert tokenize(text) == oracle_tokens(text)

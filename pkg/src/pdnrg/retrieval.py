"""TF-IDF knowledge index and cosine-similarity knowledge selection.

Weights are ``tf * idf`` with raw term counts and the smoothed inverse
document frequency ``ln((N + 1) / (df + 1)) + 1``.  Context terms missing
from the index vocabulary keep their weight (``df = 0``) so they count
towards the context norm; a context full of unseen words therefore scores
low instead of being reduced to its few in-vocabulary terms.

An Okapi BM25 ranker is available as an alternative ordering.  Whatever the
ranker, the score reported by :func:`select_knowledge` (and compared against
the use-knowledge threshold) is the TF-IDF cosine of the chosen sentence.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import KnowledgeCorpus

DEFAULT_THRESHOLD = 0.2
SCORERS = ("tfidf", "bm25")


class RetrievalError(ValueError):
    pass


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    strip_punct: bool = True


_APOSTROPHES = {"'", "’", "‘"}


def tokenize(text: str, config: TokenizerConfig = TokenizerConfig()) -> list[str]:
    if config.lowercase:
        text = text.lower()
    if config.strip_punct:
        text = "".join(
            "" if ch in _APOSTROPHES else (" " if unicodedata.category(ch).startswith("P") else ch)
            for ch in text
        )
    return text.split()


def smoothed_idf(n_docs: int, df: int) -> float:
    return math.log((n_docs + 1) / (df + 1)) + 1.0


@dataclass(frozen=True)
class KnowledgeSelection:
    knowledge_id: str | None
    score: float
    use_knowledge: bool
    text: str | None = None

    @classmethod
    def empty(cls) -> "KnowledgeSelection":
        return cls(None, 0.0, False, None)

    @property
    def effective_id(self) -> str | None:
        """The selected id when it clears the threshold, else ``None``."""
        return self.knowledge_id if self.use_knowledge else None


@dataclass(frozen=True)
class RetrievalIndex:
    ids: tuple[str, ...]
    texts: dict[str, str]
    vocabulary: dict[str, int]
    doc_freq: dict[int, int]
    idf: tuple[float, ...]
    oov_idf: float
    doc_vectors: dict[str, dict[int, float]]
    doc_norms: dict[str, float]
    doc_lengths: dict[str, int]
    config: TokenizerConfig
    excluded: tuple[str, ...] = ()
    _postings: dict[int, list[tuple[int, float]]] = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_docs(self) -> int:
        return len(self.ids)

    def with_idf_scale(self, factor: float) -> "RetrievalIndex":
        """Copy with every IDF weight (including the unseen-term weight) multiplied by ``factor``."""
        if factor <= 0:
            raise ValueError("factor must be positive")
        vectors = {k: {t: w * factor for t, w in v.items()} for k, v in self.doc_vectors.items()}
        return _assemble(
            self.ids,
            self.texts,
            self.vocabulary,
            self.doc_freq,
            tuple(w * factor for w in self.idf),
            self.oov_idf * factor,
            vectors,
            self.doc_lengths,
            self.config,
            self.excluded,
        )

    def context_vector(self, context: str) -> dict:
        """Weighted context vector; unseen terms are keyed by their string."""
        counts = Counter(tokenize(context, self.config))
        vec = {}
        for term, tf in counts.items():
            tid = self.vocabulary.get(term)
            if tid is None:
                vec[term] = tf * self.oov_idf
            else:
                vec[tid] = tf * self.idf[tid]
        return vec


def _assemble(ids, texts, vocabulary, doc_freq, idf, oov_idf, vectors, lengths, config, excluded) -> RetrievalIndex:
    norms = {k: math.sqrt(sum(w * w for w in v.values())) for k, v in vectors.items()}
    postings: dict[int, list[tuple[int, float]]] = {}
    for pos, kid in enumerate(ids):
        for tid, w in vectors[kid].items():
            postings.setdefault(tid, []).append((pos, w))
    return RetrievalIndex(
        ids=tuple(ids),
        texts=dict(texts),
        vocabulary=dict(vocabulary),
        doc_freq=dict(doc_freq),
        idf=tuple(idf),
        oov_idf=oov_idf,
        doc_vectors=vectors,
        doc_norms=norms,
        doc_lengths=dict(lengths),
        config=config,
        excluded=tuple(excluded),
        _postings=postings,
    )


def build_index(corpus: KnowledgeCorpus | Iterable[tuple[str, str]], config: TokenizerConfig = TokenizerConfig()) -> RetrievalIndex:
    """Index a knowledge corpus. Sentences with no tokens are excluded and recorded."""
    items = corpus.sentences if isinstance(corpus, KnowledgeCorpus) else tuple(corpus)
    if not items:
        raise RetrievalError("cannot index an empty knowledge corpus")
    vocabulary: dict[str, int] = {}
    term_counts: dict[str, Counter] = {}
    ids, excluded, texts, lengths = [], [], {}, {}
    for kid, text in items:
        toks = tokenize(text, config)
        if not toks:
            excluded.append(kid)
            continue
        counts = Counter()
        for tok in toks:
            tid = vocabulary.setdefault(tok, len(vocabulary))
            counts[tid] += 1
        ids.append(kid)
        texts[kid] = text
        lengths[kid] = len(toks)
        term_counts[kid] = counts
    if not ids:
        raise RetrievalError("every knowledge sentence is empty after tokenization")
    df = Counter()
    for counts in term_counts.values():
        df.update(counts.keys())
    n = len(ids)
    idf = tuple(smoothed_idf(n, df[tid]) for tid in range(len(vocabulary)))
    vectors = {kid: {tid: tf * idf[tid] for tid, tf in term_counts[kid].items()} for kid in ids}
    return _assemble(ids, texts, vocabulary, dict(df), idf, smoothed_idf(n, 0), vectors, lengths, config, excluded)


def _cosine_all(index: RetrievalIndex, context: str) -> list[float]:
    cvec = index.context_vector(context)
    scores = [0.0] * index.n_docs
    cnorm = math.sqrt(sum(w * w for w in cvec.values()))
    if cnorm == 0.0:
        return scores
    for key, cw in cvec.items():
        if isinstance(key, int):
            for pos, dw in index._postings.get(key, ()):
                scores[pos] += cw * dw
    for pos, kid in enumerate(index.ids):
        if scores[pos]:
            scores[pos] = min(1.0, scores[pos] / (cnorm * index.doc_norms[kid]))
    return scores


def _bm25_all(index: RetrievalIndex, context: str, k1: float = 1.2, b: float = 0.75) -> list[float]:
    n = index.n_docs
    avgdl = sum(index.doc_lengths.values()) / n
    query = [index.vocabulary[t] for t in tokenize(context, index.config) if t in index.vocabulary]
    scores = [0.0] * n
    for tid in query:
        df = index.doc_freq[tid]
        idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        for pos, w in index._postings.get(tid, ()):
            kid = index.ids[pos]
            tf = round(w / index.idf[tid])
            denom = tf + k1 * (1 - b + b * index.doc_lengths[kid] / avgdl)
            scores[pos] += idf * tf * (k1 + 1) / denom
    return scores


def _scores(index: RetrievalIndex, context: str, scorer: str) -> list[float]:
    if scorer == "tfidf":
        return _cosine_all(index, context)
    if scorer == "bm25":
        return _bm25_all(index, context)
    raise ValueError(f"unknown scorer {scorer!r}; expected one of {SCORERS}")


def cosine_score(index: RetrievalIndex, context: str, knowledge_id: str) -> float:
    """TF-IDF cosine between ``context`` and one indexed knowledge sentence."""
    if knowledge_id not in index.doc_vectors:
        raise KeyError(f"knowledge id {knowledge_id!r} is not indexed")
    cvec = index.context_vector(context)
    cnorm = math.sqrt(sum(w * w for w in cvec.values()))
    if cnorm == 0.0:
        return 0.0
    dvec = index.doc_vectors[knowledge_id]
    dot = sum(cw * dvec.get(key, 0.0) for key, cw in cvec.items() if isinstance(key, int))
    return min(1.0, dot / (cnorm * index.doc_norms[knowledge_id]))


def rank_knowledge(index: RetrievalIndex, context: str, top_k: int, scorer: str = "tfidf") -> list[tuple[str, float]]:
    """Descending by score; equal scores ordered by ascending id."""
    if top_k <= 0:
        return []
    scores = _scores(index, context, scorer)
    order = sorted(range(index.n_docs), key=lambda p: (-scores[p], index.ids[p]))
    return [(index.ids[p], scores[p]) for p in order[:top_k]]


def select_knowledge(
    index: RetrievalIndex,
    context: str,
    threshold: float = DEFAULT_THRESHOLD,
    scorer: str = "tfidf",
) -> KnowledgeSelection:
    if index.n_docs == 0:
        raise RetrievalError("empty knowledge corpus")
    scores = _scores(index, context, scorer)
    best = min(range(index.n_docs), key=lambda p: (-scores[p], index.ids[p]))
    kid = index.ids[best]
    score = scores[best] if scorer == "tfidf" else cosine_score(index, context, kid)
    return KnowledgeSelection(kid, score, score >= threshold, index.texts[kid])

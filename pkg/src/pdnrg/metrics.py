"""Automatic response metrics and corpus-level evaluation reports.

All metrics share one tokenizer: lowercase, punctuation split into separate
tokens, whitespace separated.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

from .acts import DialogueAct
from .annotation import Frame
from .corpus import count_words, segment_sentences
from .tagging import Tag, heuristic_tag

REPORT_SCHEMA_VERSION = 1
BLEU_EPSILON = 1e-9
ROUGE_BETA = 1.2
ADHERENCE_OVERLAP = 0.5

_TOKEN = re.compile(r"\w+|[^\w\s]")

STOPWORDS = frozenset(
    """
    a an the and or but if of to in on at by for with about as from into than then that this these those
    is are was were be been being am do does did have has had it its it's i you he she we they me him her
    us them my your his our their not no so too very can could would should will just also there here
    what which who whom whose when where why how all any some such own same other more most s t
    """.split()
)


class MetricError(ValueError):
    pass


def metric_tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: str, reference: str) -> float:
    """Sentence BLEU-4 against a single reference.

    Modified n-gram precisions for n = 1..4 are combined by a geometric mean
    over the orders the candidate is long enough to have; a zero match count
    is replaced by ``1e-9`` so scores stay finite.  Brevity penalty
    ``exp(1 - r/c)`` when the candidate is shorter than the reference.
    """
    cand, ref = metric_tokens(candidate), metric_tokens(reference)
    if not cand or not ref:
        return 0.0
    log_sum = 0.0
    orders = min(4, len(cand))
    for n in range(1, orders + 1):
        c_ng, r_ng = _ngrams(cand, n), _ngrams(ref, n)
        total = sum(c_ng.values())
        match = sum(min(c, r_ng[g]) for g, c in c_ng.items())
        log_sum += math.log(max(match, BLEU_EPSILON) / total)
    bp = 1.0 if len(cand) > len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return bp * math.exp(log_sum / orders)


def lcs_length(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str, beta: float = ROUGE_BETA) -> float:
    """Sentence-level ROUGE-L F-measure: ``(1 + b^2) P R / (R + b^2 P)``."""
    cand, ref = metric_tokens(candidate), metric_tokens(reference)
    if not cand or not ref:
        return 0.0
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(cand), lcs / len(ref)
    return (1 + beta**2) * p * r / (r + beta**2 * p)


def unigram_prf(candidate: str, reference: str) -> tuple[float, float, float]:
    """Multiset unigram overlap as (precision, recall, F1)."""
    cand, ref = Counter(metric_tokens(candidate)), Counter(metric_tokens(reference))
    overlap = sum((cand & ref).values())
    if not overlap:
        return 0.0, 0.0, 0.0
    p = overlap / sum(cand.values())
    r = overlap / sum(ref.values())
    return p, r, 2 * p * r / (p + r)


def distinct_n(corpus: Iterable[str], n: int) -> float:
    """Unique n-grams over total n-grams, pooled across the corpus."""
    seen: set = set()
    total = 0
    for text in corpus:
        grams = _ngrams(metric_tokens(text), n)
        seen.update(grams)
        total += sum(grams.values())
    if total == 0:
        raise MetricError(f"corpus has no {n}-grams")
    return len(seen) / total


# --------------------------------------------------------------------------
# plan adherence


def content_words(text: str) -> set[str]:
    return {t for t in metric_tokens(text) if t.isalnum() and t not in STOPWORDS}


def knowledge_realized(sentence: str, knowledge: str, overlap: float = ADHERENCE_OVERLAP) -> bool:
    """True when the sentence recalls at least ``overlap`` of the knowledge's content words."""
    want = content_words(knowledge)
    if not want:
        return False
    return len(want & content_words(sentence)) / len(want) >= overlap


def adherence_report(
    traces: Sequence[tuple[Frame, str]],
    tagger: Callable[[str], Tag] | Sequence[Tag] = heuristic_tag,
    overlap: float = ADHERENCE_OVERLAP,
    confidence_floor: float = 0.5,
) -> dict:
    """Share of planned acts and knowledge sentences the realized text carries.

    ``tagger`` is a callable or a sequence of tags parallel to ``traces``.
    Frames planned as NoDialogueAct are left out of the act accuracy.
    Knowledge realization is an automatic unigram-recall proxy.
    """
    if not traces:
        raise MetricError("no traces")
    if callable(tagger):
        tags = [tagger(s) for _, s in traces]
    else:
        tags = list(tagger)
        if len(tags) != len(traces):
            raise MetricError(f"{len(tags)} tags for {len(traces)} traces")
    hits = considered = 0
    for (frame, _), tag in zip(traces, tags):
        if frame.da is DialogueAct.NO_DA:
            continue
        got = tag.label if tag.confidence >= confidence_floor else DialogueAct.NO_DA
        considered += 1
        hits += got is frame.da
    if not considered:
        raise MetricError("every planned act is NoDialogueAct; nothing to measure")
    k_frames = [(f, s) for f, s in traces if f.use_knowledge and f.knowledge]
    k_real = None
    if k_frames:
        k_real = sum(knowledge_realized(s, f.knowledge, overlap) for f, s in k_frames) / len(k_frames)
    return {
        "da_acc": hits / considered,
        "da_n": considered,
        "k_real": k_real,
        "k_n": len(k_frames),
        "k_real_method": "automatic unigram-recall proxy",
    }


# --------------------------------------------------------------------------
# corpus report


@dataclass
class EvaluationReport:
    n: int
    bleu4: float
    rouge_l: float
    f1: float
    precision: float
    recall: float
    distinct_1: float | None
    distinct_2: float | None
    avg_words: float
    avg_sentences: float
    da_distribution: dict = field(default_factory=dict)
    adherence: dict | None = None
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_json(self) -> dict:
        return asdict(self)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def evaluate_corpus(
    pairs: Sequence[tuple[str, str]],
    traces: Sequence[tuple[Frame, str]] | None = None,
    overlap: float = ADHERENCE_OVERLAP,
) -> EvaluationReport:
    """Macro-averaged pairwise metrics plus corpus-level diversity of the candidates."""
    if not pairs:
        raise MetricError("no (candidate, reference) pairs")
    cands = [c for c, _ in pairs]
    prf = [unigram_prf(c, r) for c, r in pairs]

    def _distinct(n):
        try:
            return distinct_n(cands, n)
        except MetricError:
            return None

    da_distribution = {}
    adherence = None
    if traces:
        counts = Counter(f.da.value for f, _ in traces)
        total = sum(counts.values())
        da_distribution = {k: counts[k] / total for k in sorted(counts)}
        adherence = adherence_report(traces, overlap=overlap)
    return EvaluationReport(
        n=len(pairs),
        bleu4=_mean([bleu4(c, r) for c, r in pairs]),
        rouge_l=_mean([rouge_l(c, r) for c, r in pairs]),
        f1=_mean([x[2] for x in prf]),
        precision=_mean([x[0] for x in prf]),
        recall=_mean([x[1] for x in prf]),
        distinct_1=_distinct(1),
        distinct_2=_distinct(2),
        avg_words=_mean([count_words(c) for c in cands]),
        avg_sentences=_mean([len(segment_sentences(c)) for c in cands]),
        da_distribution=da_distribution,
        adherence=adherence,
    )

"""Independent reference implementations used by the tests.

Nothing here imports from the package: the point is to recompute the same
quantities a different way.
"""

import math
import re
import unicodedata
from collections import Counter
from functools import lru_cache

import numpy as np


def oracle_tokens(text):
    text = text.lower()
    text = re.sub(r"['‘’]", "", text)
    text = "".join(" " if unicodedata.category(c).startswith("P") else c for c in text)
    return text.split()


def dense_tfidf_scores(docs, context):
    """Cosine of ``context`` against every (id, text) in ``docs`` with dense vectors.

    Vocabulary is the union of corpus and context terms; a term absent from
    the corpus gets the smoothed idf of document frequency zero.
    """
    toks = [oracle_tokens(t) for _, t in docs]
    keep = [i for i, t in enumerate(toks) if t]
    ids = [docs[i][0] for i in keep]
    toks = [toks[i] for i in keep]
    ctx = oracle_tokens(context)
    vocab = sorted(set(w for t in toks for w in t) | set(ctx))
    col = {w: j for j, w in enumerate(vocab)}
    n = len(toks)
    df = np.zeros(len(vocab))
    for t in toks:
        for w in set(t):
            df[col[w]] += 1
    idf = np.log((n + 1) / (df + 1)) + 1
    mat = np.zeros((n, len(vocab)))
    for i, t in enumerate(toks):
        for w, c in Counter(t).items():
            mat[i, col[w]] = c
    mat *= idf
    q = np.zeros(len(vocab))
    for w, c in Counter(ctx).items():
        q[col[w]] = c
    q *= idf
    qn = np.linalg.norm(q)
    if qn == 0:
        return dict(zip(ids, [0.0] * n))
    scores = mat @ q / (np.linalg.norm(mat, axis=1) * qn)
    return dict(zip(ids, scores.tolist()))


def oracle_select(docs, context, threshold=0.2, tol=1e-12):
    scores = dense_tfidf_scores(docs, context)
    best = max(scores.values())
    kid = min(k for k, s in scores.items() if s >= best - tol)
    return kid, scores[kid], scores[kid] >= threshold


def brute_df(docs):
    df = Counter()
    for _, text in docs:
        df.update(set(oracle_tokens(text)))
    return df


def bm25_scores(docs, context, k1=1.2, b=0.75):
    toks = {k: oracle_tokens(t) for k, t in docs if oracle_tokens(t)}
    n = len(toks)
    avgdl = sum(len(t) for t in toks.values()) / n
    df = Counter(w for t in toks.values() for w in set(t))
    out = {}
    for k, t in toks.items():
        tf = Counter(t)
        s = 0.0
        for w in oracle_tokens(context):
            if w not in df:
                continue
            idf = math.log(1 + (n - df[w] + 0.5) / (df[w] + 0.5))
            s += idf * tf[w] * (k1 + 1) / (tf[w] + k1 * (1 - b + b * len(t) / avgdl))
        out[k] = s
    return out


def oracle_metric_tokens(text):
    out, word = [], ""
    for ch in text.lower():
        if ch.isalnum() or ch == "_":
            word += ch
            continue
        if word:
            out.append(word)
            word = ""
        if not ch.isspace():
            out.append(ch)
    if word:
        out.append(word)
    return out


def oracle_bleu(cand, ref, eps=1e-9):
    c, r = oracle_metric_tokens(cand), oracle_metric_tokens(ref)
    if not c or not r:
        return 0.0
    orders = min(4, len(c))
    logs = []
    for n in range(1, orders + 1):
        cg = [tuple(c[i : i + n]) for i in range(len(c) - n + 1)]
        rg = [tuple(r[i : i + n]) for i in range(len(r) - n + 1)]
        pool = list(rg)
        hit = 0
        for g in cg:
            if g in pool:
                pool.remove(g)
                hit += 1
        logs.append(math.log(max(hit, eps) / len(cg)))
    bp = 1.0 if len(c) > len(r) else math.exp(1 - len(r) / len(c))
    return bp * math.exp(sum(logs) / orders)


def oracle_lcs(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def oracle_rouge_l(cand, ref, beta=1.2):
    c, r = oracle_metric_tokens(cand), oracle_metric_tokens(ref)
    lcs = oracle_lcs(tuple(c), tuple(r)) if c and r else 0
    if not lcs:
        return 0.0
    p, rec = lcs / len(c), lcs / len(r)
    return (1 + beta**2) * p * rec / (rec + beta**2 * p)


def oracle_f1(cand, ref):
    c, r = oracle_metric_tokens(cand), oracle_metric_tokens(ref)
    pool = list(r)
    hit = 0
    for t in c:
        if t in pool:
            pool.remove(t)
            hit += 1
    if not hit:
        return 0.0
    return 2 * hit / (len(c) + len(r))

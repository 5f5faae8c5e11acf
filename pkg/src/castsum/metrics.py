"""Summary metrics: smoothed sentence BLEU-4, ROUGE-L, exact-match METEOR, CIDEr.

Every function takes a sequence of ``(hypothesis_tokens, reference_tokens)``
pairs and returns the corpus score as a float in [0, 1] (CIDEr: [0, 10]).
An empty hypothesis scores 0 on every metric.
"""

from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache
from typing import Sequence

Pair = tuple[Sequence[str], Sequence[str]]

ROUGE_BETA = 1.2
METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5


class CorpusTooSmall(ValueError):
    pass


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _mean(values: list[float]) -> float:
    if not values:
        raise ValueError("need at least one pair")
    return sum(values) / len(values)


# -- BLEU ---------------------------------------------------------------------


def sentence_bleu(hyp: Sequence[str], ref: Sequence[str], max_n: int = 4) -> float:
    """BLEU-4 with add-one smoothing on the n >= 2 precisions."""
    if not hyp:
        return 0.0
    log_p = 0.0
    for n in range(1, max_n + 1):
        h, r = _ngrams(hyp, n), _ngrams(ref, n)
        match = sum(min(c, r[g]) for g, c in h.items())
        total = max(len(hyp) - n + 1, 0)
        if n == 1:
            if match == 0:
                return 0.0
            p = match / total
        else:
            p = (match + 1) / (total + 1)
        log_p += math.log(p) / max_n
    c, r = len(hyp), len(ref)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return bp * math.exp(log_p)


def bleu_cn(pairs: Sequence[Pair]) -> float:
    return _mean([sentence_bleu(h, r) for h, r in pairs])


# -- ROUGE-L ------------------------------------------------------------------


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def sentence_rouge_l(hyp: Sequence[str], ref: Sequence[str], beta: float = ROUGE_BETA) -> float:
    if not hyp or not ref:
        return 0.0
    lcs = lcs_length(hyp, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(hyp), lcs / len(ref)
    return (1 + beta**2) * p * r / (r + beta**2 * p)


def rouge_l(pairs: Sequence[Pair]) -> float:
    return _mean([sentence_rouge_l(h, r) for h, r in pairs])


# -- METEOR (exact module only) ---------------------------------------------------


def _chunks(alignment: list[tuple[int, int]]) -> int:
    alignment = sorted(alignment)
    chunks = 0
    prev = None
    for i, j in alignment:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_alignment(hyp: Sequence[str], ref: Sequence[str]) -> tuple[int, int]:
    """(matches, chunks) of a maximum exact-match alignment with fewest chunks."""
    hyp, ref = tuple(hyp), tuple(ref)
    ref_pos: dict[str, list[int]] = {}
    for j, w in enumerate(ref):
        ref_pos.setdefault(w, []).append(j)
    hc, rc = Counter(hyp), Counter(ref)
    m = sum(min(hc[w], rc[w]) for w in hc)
    if m == 0:
        return 0, 0
    # hypothesis words of each type that may stay unmatched
    spare0 = tuple(sorted((w, hc[w] - min(hc[w], rc[w])) for w in hc))
    words = [w for w, _ in spare0]

    @lru_cache(maxsize=None)
    def best(i: int, used: int, prev_j: int, spare: tuple[int, ...]) -> int:
        """Fewest chunks for hyp[i:], given used ref positions and where hyp[i-1] went."""
        if i == len(hyp):
            return 0
        w = hyp[i]
        k = words.index(w)
        options = []
        if spare[k] > 0:
            s = list(spare)
            s[k] -= 1
            options.append(best(i + 1, used, -2, tuple(s)))
        for j in ref_pos.get(w, ()):
            if used >> j & 1:
                continue
            # only a capacity-respecting choice: can't match more than min counts
            cost = 0 if prev_j >= 0 and j == prev_j + 1 else 1
            options.append(cost + best(i + 1, used | (1 << j), j, spare))
        return min(options) if options else math.inf

    chunks = best(0, 0, -2, tuple(s for _, s in spare0))
    best.cache_clear()
    return m, int(chunks)


def sentence_meteor(hyp: Sequence[str], ref: Sequence[str]) -> float:
    if not hyp or not ref:
        return 0.0
    m, ch = meteor_alignment(hyp, ref)
    if m == 0:
        return 0.0
    p, r = m / len(hyp), m / len(ref)
    fmean = p * r / (METEOR_ALPHA * p + (1 - METEOR_ALPHA) * r)
    penalty = METEOR_GAMMA * (ch / m) ** METEOR_BETA
    return fmean * (1 - penalty)


def meteor_exact(pairs: Sequence[Pair]) -> float:
    return _mean([sentence_meteor(h, r) for h, r in pairs])


# -- CIDEr ----------------------------------------------------------------------


def _cider_scores(pairs: Sequence[Pair], max_n: int = 4) -> list[float]:
    N = len(pairs)
    if N < 2:
        raise CorpusTooSmall(f"CIDEr needs at least 2 references, got {N}")
    scores = [0.0] * N
    for n in range(1, max_n + 1):
        df: Counter = Counter()
        ref_grams = [_ngrams(r, n) for _, r in pairs]
        for g in ref_grams:
            df.update(g.keys())
        log_n = math.log(N)

        def vec(grams: Counter) -> dict:
            return {g: c * (log_n - math.log(max(1.0, df[g]))) for g, c in grams.items()}

        for k, (h, _) in enumerate(pairs):
            if not h:
                continue
            vh, vr = vec(_ngrams(h, n)), vec(ref_grams[k])
            dot = sum(v * vr.get(g, 0.0) for g, v in vh.items())
            nh = math.sqrt(sum(v * v for v in vh.values()))
            nr = math.sqrt(sum(v * v for v in vr.values()))
            if nh > 0 and nr > 0:
                scores[k] += dot / (nh * nr) / max_n
    return [10.0 * s for s in scores]


def cider(pairs: Sequence[Pair]) -> float:
    return _mean(_cider_scores(pairs))


# -- report ---------------------------------------------------------------------


def evaluate(pairs: Sequence[Pair], ids: Sequence[str] | None = None) -> dict:
    """All four corpus scores plus the per-example breakdown."""
    pairs = [(list(h), list(r)) for h, r in pairs]
    ids = list(ids) if ids is not None else [str(i) for i in range(len(pairs))]
    cider_each = _cider_scores(pairs) if len(pairs) >= 2 else [None] * len(pairs)
    per = []
    for i, (h, r) in enumerate(pairs):
        per.append(
            {
                "id": ids[i],
                "bleu": sentence_bleu(h, r),
                "rouge_l": sentence_rouge_l(h, r),
                "meteor": sentence_meteor(h, r),
                "cider": cider_each[i],
            }
        )
    report = {
        "n": len(pairs),
        "bleu": _mean([p["bleu"] for p in per]),
        "rouge_l": _mean([p["rouge_l"] for p in per]),
        "meteor": _mean([p["meteor"] for p in per]),
        "cider": _mean(cider_each) if len(pairs) >= 2 else None,
        "per_example": per,
    }
    return report


def percent_view(report: dict) -> dict:
    """BLEU/METEOR/ROUGE-L scaled to percentages; CIDEr left raw."""
    out = {k: v for k, v in report.items() if k != "per_example"}
    for key in ("bleu", "meteor", "rouge_l"):
        out[key] = 100.0 * report[key]
    return out

"""BLEU, intrinsic classifier accuracy, and the cached-vs-naive decoding report."""
from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import classifier as clf
from .decoder import DEFAULT_BEAM, DEFAULT_DISTORTION, DecoderWeights, decode
from .examples import ExtractionStats, generate_corpus_examples
from .phrases import DEFAULT_MAX_LEN


def _tokens(x) -> tuple[str, ...]:
    return tuple(x.split()) if isinstance(x, str) else tuple(x)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hypotheses, references, max_n: int = 4):
    """Clipped n-gram matches, hypothesis n-gram totals, hyp length, ref length."""
    if len(hypotheses) != len(references):
        raise ValueError("hypothesis and reference lists differ in length")
    matches, totals = [0] * max_n, [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hypotheses, references):
        h, r = _tokens(h), _tokens(r)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hc, rc = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(0, len(h) - n + 1)
    return matches, totals, hyp_len, ref_len


def bleu(hypotheses: Sequence, references: Sequence, max_n: int = 4) -> float:
    """Corpus BLEU with a single reference and no smoothing."""
    if not hypotheses:
        raise ValueError("BLEU of an empty corpus is undefined")
    matches, totals, c, r = bleu_stats(hypotheses, references, max_n)
    if c == 0 or any(m == 0 for m in matches):
        return 0.0
    log_prec = sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n
    return math.exp(min(0.0, 1.0 - r / c) + log_prec)


@dataclass
class IntrinsicResult:
    model_accuracy: float
    baseline_accuracy: float
    instances: int
    skipped: int = 0


def intrinsic_accuracy(test, table, model: clf.LinearModel, config,
                       max_len: int = DEFAULT_MAX_LEN,
                       source_filter: Callable[[tuple[str, ...]], bool] | None = None
                       ) -> IntrinsicResult:
    """Classifier vs most-frequent-translation accuracy on gold phrase instances.

    Instances are built like training examples but without leave-one-out and
    with the reference target context.  ``source_filter`` restricts the
    evaluation to selected source phrases.
    """
    model.check(config)
    stats = ExtractionStats()
    n = model_ok = base_ok = 0
    for ex in generate_corpus_examples(test, table, config, max_len, leave_one_out=False,
                                       stats=stats):
        if source_filter is not None and not source_filter(ex.source_phrase):
            continue
        probs = clf.predict_distribution(model, ex.shared_src, ex.shared_tgt,
                                         [c for c, _ in ex.candidates])
        n += 1
        model_ok += int(np.argmax(probs)) == ex.gold_index
        # candidates come in lookup order: most frequent first
        base_ok += ex.gold_index == 0
    if n == 0:
        raise ValueError("no intrinsic evaluation instances")
    return IntrinsicResult(model_ok / n, base_ok / n, n, stats.no_gold + stats.not_in_gen)


@dataclass
class SentenceComparison:
    index: int
    same_output: bool
    score_delta: float
    naive_seconds: float
    cached_seconds: float
    naive_extractions: int
    cached_extractions: int


@dataclass
class CacheReport:
    rows: list[SentenceComparison] = field(default_factory=list)

    @property
    def all_equal(self) -> bool:
        return all(r.same_output for r in self.rows)

    @property
    def max_score_delta(self) -> float:
        return max((r.score_delta for r in self.rows), default=0.0)

    @property
    def speedup(self) -> float:
        cached = sum(r.cached_seconds for r in self.rows)
        return sum(r.naive_seconds for r in self.rows) / cached if cached > 0 else math.inf

    @property
    def extraction_ratio(self) -> float:
        naive = sum(r.naive_extractions for r in self.rows)
        return sum(r.cached_extractions for r in self.rows) / naive if naive else 0.0

    def summary(self) -> dict:
        return {
            "sentences": len(self.rows),
            "equal_outputs": sum(r.same_output for r in self.rows),
            "all_equal": self.all_equal,
            "max_score_delta": self.max_score_delta,
            "naive_seconds": sum(r.naive_seconds for r in self.rows),
            "cached_seconds": sum(r.cached_seconds for r in self.rows),
            "speedup": self.speedup,
            "naive_extractions": sum(r.naive_extractions for r in self.rows),
            "cached_extractions": sum(r.cached_extractions for r in self.rows),
            "extraction_ratio": self.extraction_ratio,
        }

    def to_text(self) -> str:
        lines = ["sent\tequal\tdelta\tnaive_s\tcached_s\tnaive_ext\tcached_ext"]
        for r in self.rows:
            lines.append(f"{r.index}\t{int(r.same_output)}\t{r.score_delta:.3g}\t"
                         f"{r.naive_seconds:.4f}\t{r.cached_seconds:.4f}\t"
                         f"{r.naive_extractions}\t{r.cached_extractions}")
        s = self.summary()
        lines.append(f"# {s['equal_outputs']}/{s['sentences']} identical, "
                     f"max |delta| {s['max_score_delta']:.3g}, speedup {s['speedup']:.2f}x, "
                     f"extraction ratio {s['extraction_ratio']:.3f}")
        return "\n".join(lines) + "\n"

    def write_summary(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for k, v in self.summary().items():
                f.write(f"{k}\t{v}\n")


def cache_equivalence_report(sentences: Iterable, table, lm, model, weights: DecoderWeights,
                             config, beam: int = DEFAULT_BEAM,
                             distortion_limit: int | None = DEFAULT_DISTORTION) -> CacheReport:
    """Decode every sentence with and without the classifier caches."""
    report = CacheReport()
    for i, sent in enumerate(sentences):
        t0 = time.perf_counter()
        naive = decode(sent, table, lm, model, weights, config, beam, distortion_limit, cached=False)
        t1 = time.perf_counter()
        cached = decode(sent, table, lm, model, weights, config, beam, distortion_limit, cached=True)
        t2 = time.perf_counter()
        report.rows.append(SentenceComparison(
            i, naive.words == cached.words, abs(naive.score - cached.score),
            t1 - t0, t2 - t1, naive.stats["extractions"], cached.stats["extractions"]))
    return report

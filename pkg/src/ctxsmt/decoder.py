"""Left-to-right stack decoder with the phrase classifier as a log-linear feature.

The classifier needs the two preceding target words, so its score depends on
the partial hypothesis.  Evaluation goes through :class:`ClassifierScorer`,
which either recomputes everything per query (``cached=False``) or uses the
per-sentence caches:

* source part of every option's score, computed once before search,
* hashed ``T`` features of every option,
* hashed ``S_tgt`` features per decoder state,
* normalized results per (span, state).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import classifier as clf
from .corpus import FactoredWord, Sentence
from .features import (ContextWord, FeatureConfig, TargetContext, extract_source_shared,
                       extract_target_shared, extract_translation)
from .lm import EOS, NGramModel, lm_score
from .phrases import PhraseTable, TranslationOption, lookup, oov_option

Span = tuple[int, int]

FEATURES = ("tm_tgs", "tm_sgt", "lm", "word_penalty", "phrase_penalty", "distortion", "classifier")
DEFAULT_BEAM = 100
DEFAULT_DISTORTION = 6


class DecodingError(RuntimeError):
    pass


@dataclass(frozen=True)
class DecoderWeights:
    tm_tgs: float = 1.0
    tm_sgt: float = 0.5
    lm: float = 1.0
    word_penalty: float = 0.0
    phrase_penalty: float = 0.0
    distortion: float = 0.3
    classifier: float = 1.0

    def __post_init__(self):
        for name in FEATURES:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"weight {name} is not finite")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in FEATURES)

    @classmethod
    def load(cls, path) -> "DecoderWeights":
        values = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                name, w = line.split()
                if name not in FEATURES:
                    raise ValueError(f"unknown feature {name!r} in weights file")
                values[name] = float(w)
        return cls(**values)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for n in FEATURES:
                f.write(f"{n}\t{getattr(self, n)!r}\n")


class DecoderState:
    """Everything stateful features look at: classifier context and LM history."""
    __slots__ = ("context", "lm", "_hash")

    def __init__(self, context: TargetContext, lm: tuple[str, ...]):
        self.context = context
        self.lm = lm
        self._hash = hash((context, lm))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (isinstance(other, DecoderState) and self._hash == other._hash
                and self.lm == other.lm and self.context == other.context)

    def __repr__(self):
        return f"DecoderState({[cw.word.form for cw in self.context.words]}, lm={self.lm})"


# -- translation options and classifier caches ------------------------------------------------

def collect_options(sentence: Sentence, table: PhraseTable, max_len: int | None = None,
                    oov: bool = True) -> dict[Span, list[TranslationOption]]:
    n = len(sentence)
    max_len = max_len or max(table.max_len, 1)
    forms = sentence.forms
    options = {}
    for i in range(n):
        for j in range(i, min(n, i + max_len)):
            opts = lookup(table, forms[i:j + 1])
            if opts:
                options[(i, j)] = opts
        if (i, i) not in options:
            if not oov:
                raise DecodingError(f"untranslatable token {forms[i]!r} at position {i}")
            options[(i, i)] = [oov_option(sentence.words[i])]
    return options


@dataclass
class ClassifierCaches:
    result: dict = field(default_factory=dict)        # (span, context) -> log-probs per option
    state: dict = field(default_factory=dict)         # context -> S_tgt FeatureSet
    translation: dict = field(default_factory=dict)   # (span, k) -> T FeatureSet
    src_score: dict = field(default_factory=dict)     # (span, k) -> source part of the score


@dataclass
class CacheStats:
    extractions: int = 0
    option_scores: int = 0
    hits: int = 0
    misses: int = 0

    def as_dict(self):
        return {"extractions": self.extractions, "option_scores": self.option_scores,
                "hits": self.hits, "misses": self.misses}


def precompute_options(sentence: Sentence, table: PhraseTable, model: clf.LinearModel,
                       config: FeatureConfig, oov: bool = True, max_len: int | None = None,
                       stats: CacheStats | None = None):
    """Options per span plus cached ``T`` hashes and source-part scores."""
    model.check(config)
    stats = stats if stats is not None else CacheStats()
    options = collect_options(sentence, table, max_len, oov)
    return _precompute_from(sentence, options, model, config, stats)


class ClassifierScorer:
    """Normalized classifier log-probability of an option in a decoder state."""

    def __init__(self, sentence: Sentence, options: dict[Span, list[TranslationOption]],
                 model: clf.LinearModel, config: FeatureConfig, cached: bool = True):
        model.check(config)
        self.sentence = sentence
        self.options = options
        self.model = model
        self.config = config
        self.cached = cached
        self.stats = CacheStats()
        if cached:
            _, self.caches = _precompute_from(sentence, options, model, config, self.stats)

    def evaluate(self, span: Span, k: int, state: DecoderState) -> float:
        if self.cached:
            return self._evaluate_cached(span, k, state)
        return self._evaluate_naive(span, k, state)

    def _evaluate_cached(self, span, k, state):
        c = self.caches
        # the classifier only sees the target context part of the state
        ctx = state.context
        key = (span, ctx)
        scores = c.result.get(key)
        if scores is None:
            self.stats.misses += 1
            s_tgt = c.state.get(ctx)
            if s_tgt is None:
                s_tgt = c.state[ctx] = extract_target_shared(ctx, self.config)
                self.stats.extractions += 1
            raw = []
            for kk in range(len(self.options[span])):
                t = c.translation[(span, kk)]
                raw.append(c.src_score[(span, kk)] + clf.target_part(self.model, s_tgt, t))
                self.stats.option_scores += 1
            scores = c.result[key] = clf.log_softmax(raw)
        else:
            self.stats.hits += 1
        if not 0 <= k < len(scores):
            raise DecodingError(f"no option {k} for span {span}")
        return float(scores[k])

    def _evaluate_naive(self, span, k, state):
        opts = self.options[span]
        if not 0 <= k < len(opts):
            raise DecodingError(f"no option {k} for span {span}")
        s_src = extract_source_shared(self.sentence, span, self.config)
        s_tgt = extract_target_shared(state.context, self.config)
        self.stats.extractions += 2
        raw = []
        for opt in opts:
            t = extract_translation(opt, self.config)
            self.stats.extractions += 1
            raw.append(clf.raw_score(self.model, s_src, s_tgt, t))
            self.stats.option_scores += 1
        self.stats.misses += 1
        return float(clf.log_softmax(raw)[k])


def _precompute_from(sentence, options, model, config, stats):
    caches = ClassifierCaches()
    t_by_option: dict = {}
    for span, opts in options.items():
        s_src = extract_source_shared(sentence, span, config)
        stats.extractions += 1
        for k, opt in enumerate(opts):
            t = t_by_option.get(opt)
            if t is None:
                t = t_by_option[opt] = extract_translation(opt, config)
                stats.extractions += 1
            caches.translation[(span, k)] = t
            caches.src_score[(span, k)] = clf.source_part(model, s_src, t)
    return options, caches


# -- future cost -------------------------------------------------------------------------------

def phrase_lm_estimate(lm: NGramModel, forms: Sequence[str]) -> float:
    """Context-free LM score of a phrase (history limited to the phrase itself)."""
    return sum(lm.score_ngram(tuple(forms[:i]), w) for i, w in enumerate(forms))


def option_estimate(opt: TranslationOption, weights: DecoderWeights, lm: NGramModel | None) -> float:
    est = (weights.tm_tgs * opt.logp_tgt_given_src + weights.tm_sgt * opt.logp_src_given_tgt
           - weights.word_penalty * len(opt.target_phrase) + weights.phrase_penalty)
    if lm is not None:
        est += weights.lm * phrase_lm_estimate(lm, opt.target_forms)
    return est


def future_cost(sentence: Sentence, options: dict[Span, list[TranslationOption]],
                weights: DecoderWeights, lm: NGramModel | None = None) -> dict[Span, float]:
    """Best achievable estimate for every span, combining sub-spans by DP."""
    n = len(sentence)
    best = {span: max(option_estimate(o, weights, lm) for o in opts)
            for span, opts in options.items()}
    fc: dict[Span, float] = {}
    for length in range(1, n + 1):
        for i in range(n - length + 1):
            j = i + length - 1
            v = best.get((i, j), -math.inf)
            for k in range(i, j):
                v = max(v, fc[(i, k)] + fc[(k + 1, j)])
            fc[(i, j)] = v
    return fc


def coverage_future(coverage: int, n: int, fc: dict[Span, float]) -> float:
    total, i = 0.0, 0
    while i < n:
        if coverage >> i & 1:
            i += 1
            continue
        j = i
        while j + 1 < n and not coverage >> (j + 1) & 1:
            j += 1
        total += fc[(i, j)]
        i = j + 1
    return total


# -- search ------------------------------------------------------------------------------------

class Hypothesis:
    __slots__ = ("coverage", "end", "state", "score", "future", "feats", "words", "back", "applied")

    def __init__(self, coverage, end, state, score, future, feats, words, back, applied):
        self.coverage = coverage
        self.end = end
        self.state = state
        self.score = score
        self.future = future
        self.feats = feats
        self.words = words
        self.back = back
        self.applied = applied

    @property
    def total(self):
        return self.score + self.future

    def derivation(self):
        out, h = [], self
        while h.back is not None:
            out.append(h.applied)
            h = h.back
        return out[::-1]


@dataclass
class Translation:
    words: tuple[str, ...]
    score: float
    features: dict[str, float]
    derivation: list
    stats: dict = field(default_factory=dict)

    def __str__(self):
        return " ".join(self.words)


def initial_state(lm: NGramModel | None) -> DecoderState:
    return DecoderState(TargetContext(), lm.initial_state() if lm is not None else ())


def advance_state(state: DecoderState, sentence: Sentence, span: Span, opt: TranslationOption,
                  lm: NGramModel | None):
    """State after appending ``opt``; also returns the LM score of its words."""
    aligned: dict[int, list[FactoredWord]] = {}
    for i, j in opt.internal_alignment.sorted():
        aligned.setdefault(j, []).append(sentence.words[span[0] + i])
    ctx = state.context.push([ContextWord(w, tuple(aligned.get(j, ())))
                              for j, w in enumerate(opt.target_phrase)])
    lm_total, lm_state = 0.0, state.lm
    if lm is not None:
        for w in opt.target_forms:
            s, lm_state = lm_score(lm, w, lm_state)
            lm_total += s
    return DecoderState(ctx, lm_state), lm_total


def _better(a: Hypothesis, b: Hypothesis) -> bool:
    if a.score != b.score:
        return a.score > b.score
    return a.words < b.words


def decode(sentence: Sentence, table: PhraseTable, lm: NGramModel | None,
           model: clf.LinearModel | None, weights: DecoderWeights = DecoderWeights(),
           config: FeatureConfig | None = None, beam: int = DEFAULT_BEAM,
           distortion_limit: int | None = DEFAULT_DISTORTION, cached: bool = True,
           oov: bool = True, max_len: int | None = None, recombine: bool = True) -> Translation:
    """Best translation by coverage-cardinality stack search.

    Hypotheses with equal coverage, last source position and decoder state
    are recombined (unless ``recombine`` is off).  ``distortion_limit=None``
    lifts the reordering limit.
    ``model=None`` decodes without the classifier feature.
    """
    n = len(sentence)
    options = collect_options(sentence, table, max_len, oov)
    scorer = None
    if model is not None:
        if config is None:
            raise ValueError("a feature config is required with a classifier model")
        scorer = ClassifierScorer(sentence, options, model, config, cached=cached)
    fc = future_cost(sentence, options, weights, lm)
    w = weights.as_tuple()

    spans_by_start: dict[int, list[Span]] = {}
    for span in sorted(options):
        spans_by_start.setdefault(span[0], []).append(span)

    empty = Hypothesis(0, -1, initial_state(lm), 0.0, coverage_future(0, n, fc),
                       (0.0,) * len(FEATURES), (), None, None)
    stacks: list[dict] = [dict() for _ in range(n + 1)]
    stacks[0][(0, -1, empty.state)] = empty
    full = (1 << n) - 1

    for k in range(n):
        if not stacks[k]:
            continue
        hyps = sorted(stacks[k].values(), key=lambda h: (-h.total, h.words))[:beam]
        for h in hyps:
            first_gap = next(i for i in range(n) if not h.coverage >> i & 1)
            for start in range(n):
                if h.coverage >> start & 1:
                    continue
                dist = abs(start - h.end - 1)
                if distortion_limit is not None and dist > distortion_limit:
                    continue
                for span in spans_by_start.get(start, ()):
                    mask = ((1 << (span[1] + 1)) - 1) ^ ((1 << span[0]) - 1)
                    if h.coverage & mask:
                        break
                    if (distortion_limit is not None and first_gap < start
                            and span[1] + 1 - first_gap > distortion_limit):
                        continue
                    cov = h.coverage | mask
                    fut = coverage_future(cov, n, fc)
                    for oi, opt in enumerate(options[span]):
                        state, lm_delta = advance_state(h.state, sentence, span, opt, lm)
                        cl = scorer.evaluate(span, oi, h.state) if scorer is not None else 0.0
                        delta = (opt.logp_tgt_given_src, opt.logp_src_given_tgt, lm_delta,
                                 -float(len(opt.target_phrase)), 1.0, -float(dist), cl)
                        score = h.score + sum(wi * di for wi, di in zip(w, delta))
                        feats = tuple(a + b for a, b in zip(h.feats, delta))
                        new = Hypothesis(cov, span[1], state, score, fut, feats,
                                         h.words + opt.target_forms, h, (span, oi, opt))
                        stack = stacks[k + span[1] - span[0] + 1]
                        key = (cov, span[1], state) if recombine else len(stack)
                        old = stack.get(key)
                        if old is None or _better(new, old):
                            stack[key] = new

    best = None
    for h in stacks[n].values():
        assert h.coverage == full
        lm_end = lm.score_ngram(h.state.lm, EOS) if lm is not None else 0.0
        final = Hypothesis(h.coverage, h.end, h.state, h.score + w[2] * lm_end, 0.0,
                           h.feats[:2] + (h.feats[2] + lm_end,) + h.feats[3:],
                           h.words, h.back, h.applied)
        if best is None or _better(final, best):
            best = final
    if best is None:
        raise DecodingError("no complete translation found (distortion limit too tight?)")
    stats = scorer.stats.as_dict() if scorer is not None else {}
    return Translation(best.words, best.score, dict(zip(FEATURES, best.feats)),
                       [(span, opt) for span, _, opt in best.derivation()], stats)

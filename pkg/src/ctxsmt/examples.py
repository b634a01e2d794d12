"""Classifier training examples from a word-aligned training corpus."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .classifier import TrainingExample, write_examples_file
from .corpus import AlignedSentencePair
from .features import (ContextWord, FeatureConfig, TargetContext, extract_source_shared,
                       extract_target_shared, extract_translation)
from .phrases import DEFAULT_MAX_LEN, PhraseTable, lookup


@dataclass
class ExtractionStats:
    emitted: int = 0
    no_gold: int = 0
    not_in_gen: int = 0
    leave_one_out: int = 0

    def __iadd__(self, other):
        self.emitted += other.emitted
        self.no_gold += other.no_gold
        self.not_in_gen += other.not_in_gen
        self.leave_one_out += other.leave_one_out
        return self


def context_before(pair: AlignedSentencePair, position: int) -> TargetContext:
    """Reference target words before ``position`` with their aligned source words."""
    src_of = pair.source_links()
    words = [ContextWord(pair.target.words[j], tuple(pair.source.words[i] for i in src_of.get(j, ())))
             for j in range(max(0, position - 2), position)]
    return TargetContext.from_words(words)


def _minimal_target_span(pair: AlignedSentencePair, span):
    s1, s2 = span
    targets = [j for i, j in pair.alignment.links if s1 <= i <= s2]
    if not targets:
        return None
    t1, t2 = min(targets), max(targets)
    if any(t1 <= j <= t2 and not s1 <= i <= s2 for i, j in pair.alignment.links):
        return None
    return t1, t2


def _extensions(pair: AlignedSentencePair, t1: int, t2: int):
    aligned = {j for _, j in pair.alignment.links}
    los = [t1]
    while los[-1] - 1 >= 0 and los[-1] - 1 not in aligned:
        los.append(los[-1] - 1)
    his = [t2]
    while his[-1] + 1 < len(pair.target) and his[-1] + 1 not in aligned:
        his.append(his[-1] + 1)
    spans = [(lo, hi) for lo in los for hi in his]
    spans.sort(key=lambda s: (s[1] - s[0], -s[0]))
    return spans


def gold_translation(pair: AlignedSentencePair, span: tuple[int, int], candidates=None):
    """The reference translation of a source span and the target context before it.

    The minimal alignment-consistent target span is used; when ``candidates``
    is given and lacks that phrase, the span may grow over unaligned target
    words to a phrase that is a candidate.  Returns ``None`` when no
    consistent target span exists.
    """
    minimal = _minimal_target_span(pair, span)
    if minimal is None:
        return None
    tspan = minimal
    if candidates is not None:
        phrases = {c.target_phrase for c in candidates}
        for lo, hi in _extensions(pair, *minimal):
            if pair.target.words[lo:hi + 1] in phrases:
                tspan = (lo, hi)
                break
    return tspan, context_before(pair, tspan[0])


def generate_examples(pair: AlignedSentencePair, table: PhraseTable, config: FeatureConfig,
                      max_len: int = DEFAULT_MAX_LEN, leave_one_out: bool = True,
                      stats: ExtractionStats | None = None, t_cache: dict | None = None
                      ) -> Iterator[TrainingExample]:
    """One example per source span whose gold translation is among its candidates.

    With ``leave_one_out`` the sentence's own occurrence is removed from the
    source, target and pair counts of the gold triple; a span whose count
    drops to zero yields no example.
    """
    stats = stats if stats is not None else ExtractionStats()
    t_cache = t_cache if t_cache is not None else {}
    src = pair.source
    forms = src.forms
    n = len(src)
    for s1 in range(n):
        for s2 in range(s1, min(n, s1 + max_len)):
            cands = lookup(table, forms[s1:s2 + 1])
            if not cands:
                continue
            gold = gold_translation(pair, (s1, s2), cands)
            if gold is None:
                stats.no_gold += 1
                continue
            (t1, t2), ctx = gold
            gold_phrase = pair.target.words[t1:t2 + 1]
            gi = next((k for k, c in enumerate(cands) if c.target_phrase == gold_phrase), None)
            if gi is None:
                stats.not_in_gen += 1
                continue
            g = cands[gi]
            if leave_one_out and min(g.pair_count, g.source_count, g.target_count) - 1 <= 0:
                stats.leave_one_out += 1
                continue
            tsets = []
            for c in cands:
                fs = t_cache.get(c)
                if fs is None:
                    fs = t_cache[c] = extract_translation(c, config)
                tsets.append((fs, 0 if c is g else 1))
            stats.emitted += 1
            yield TrainingExample(
                extract_source_shared(src, (s1, s2), config),
                extract_target_shared(ctx, config),
                tsets, gi,
                source_phrase=forms[s1:s2 + 1],
                candidate_phrases=tuple(c.target_forms for c in cands),
            )


def generate_corpus_examples(corpus: Iterable[AlignedSentencePair], table: PhraseTable,
                             config: FeatureConfig, max_len: int = DEFAULT_MAX_LEN,
                             leave_one_out: bool = True, stats: ExtractionStats | None = None
                             ) -> Iterator[TrainingExample]:
    t_cache: dict = {}
    for pair in corpus:
        yield from generate_examples(pair, table, config, max_len, leave_one_out, stats, t_cache)


def write_examples(stream: Iterable[TrainingExample], path) -> int:
    return write_examples_file(stream, path)

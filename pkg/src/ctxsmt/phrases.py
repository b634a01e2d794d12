"""Phrase pair extraction and the factored phrase table."""
from __future__ import annotations

import bisect
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import TARGET, AlignedSentencePair, AlignmentSet, FactoredWord

DEFAULT_MAX_LEN = 7

TargetPhrase = tuple[FactoredWord, ...]


@dataclass(frozen=True)
class PhrasePairInstance:
    source_span: tuple[int, int]
    target_span: tuple[int, int]
    internal_alignment: AlignmentSet


@dataclass(frozen=True)
class TranslationOption:
    # the source side is keyed by surface forms only
    source_phrase: tuple[str, ...]
    target_phrase: TargetPhrase
    internal_alignment: AlignmentSet
    logp_tgt_given_src: float
    logp_src_given_tgt: float
    pair_count: int
    source_count: int = 0
    target_count: int = 0

    @property
    def target_forms(self) -> tuple[str, ...]:
        return tuple(w.form for w in self.target_phrase)

    def __len__(self):
        return len(self.source_phrase)


def extract_phrase_pairs(pair: AlignedSentencePair, max_len: int = DEFAULT_MAX_LEN
                         ) -> list[PhrasePairInstance]:
    """All alignment-consistent phrase pairs with both sides at most ``max_len``.

    Target spans are grown over unaligned boundary words in every consistent
    way; source spans pick up unaligned words by plain enumeration.
    """
    links = pair.alignment.sorted()
    n, m = len(pair.source), len(pair.target)
    tgt_aligned = [False] * m
    for _, j in links:
        tgt_aligned[j] = True

    out = []
    for s1 in range(n):
        for s2 in range(s1, min(n, s1 + max_len)):
            targets = [j for i, j in links if s1 <= i <= s2]
            if not targets:
                continue
            t1, t2 = min(targets), max(targets)
            if t2 - t1 + 1 > max_len:
                continue
            if any(t1 <= j <= t2 and not s1 <= i <= s2 for i, j in links):
                continue
            lo = t1
            while True:
                hi = t2
                while True:
                    if hi - lo + 1 > max_len:
                        break
                    internal = AlignmentSet(frozenset(
                        (i - s1, j - lo) for i, j in links if s1 <= i <= s2))
                    out.append(PhrasePairInstance((s1, s2), (lo, hi), internal))
                    hi += 1
                    if hi >= m or tgt_aligned[hi]:
                        break
                lo -= 1
                if lo < 0 or tgt_aligned[lo]:
                    break
    return out


class PhraseTable:
    """Source phrase (tuple of forms) -> candidate translations."""

    def __init__(self):
        self.entries: dict[tuple[str, ...], list[TranslationOption]] = {}
        self.source_counts: dict[tuple[str, ...], int] = {}
        self.target_counts: dict[TargetPhrase, int] = {}
        self.max_len = 0

    def __len__(self):
        return sum(len(v) for v in self.entries.values())

    def __contains__(self, source_phrase):
        return tuple(source_phrase) in self.entries

    def add(self, option: TranslationOption) -> None:
        src = option.source_phrase
        bisect.insort(self.entries.setdefault(src, []), option, key=_lookup_order)
        self.source_counts[src] = option.source_count
        self.target_counts[option.target_phrase] = option.target_count
        self.max_len = max(self.max_len, len(src))

    def options(self):
        for src in sorted(self.entries):
            yield from self.entries[src]


def _lookup_order(opt: TranslationOption):
    return (-opt.pair_count, " ".join(opt.target_forms),
            tuple(str(w) for w in opt.target_phrase))


def build_phrase_table(corpus: Iterable[AlignedSentencePair],
                       max_len: int = DEFAULT_MAX_LEN) -> PhraseTable:
    pair_counts: Counter = Counter()
    align_counts: dict = defaultdict(Counter)
    seen = False
    for sp in corpus:
        seen = True
        src_forms = sp.source.forms
        for inst in extract_phrase_pairs(sp, max_len):
            s1, s2 = inst.source_span
            t1, t2 = inst.target_span
            key = (src_forms[s1:s2 + 1], sp.target.words[t1:t2 + 1])
            pair_counts[key] += 1
            align_counts[key][inst.internal_alignment.sorted()] += 1
    if not seen:
        raise ValueError("cannot build a phrase table from an empty corpus")

    src_counts: Counter = Counter()
    tgt_counts: Counter = Counter()
    for (src, tgt), c in pair_counts.items():
        src_counts[src] += c
        tgt_counts[tgt] += c

    table = PhraseTable()
    for (src, tgt), c in pair_counts.items():
        # most frequent internal alignment, ties to the smallest link tuple
        best = min(align_counts[(src, tgt)].items(), key=lambda kv: (-kv[1], kv[0]))[0]
        table.add(TranslationOption(
            src, tgt, AlignmentSet(frozenset(best)),
            math.log(c / src_counts[src]), math.log(c / tgt_counts[tgt]),
            c, src_counts[src], tgt_counts[tgt]))
    return table


def lookup(table: PhraseTable, source_phrase: Sequence) -> list[TranslationOption]:
    """Candidates for a source phrase, most frequent first (ties by target form)."""
    key = tuple(w if isinstance(w, str) else w.form for w in source_phrase)
    return list(table.entries.get(key, ()))


def oov_option(word: FactoredWord) -> TranslationOption:
    """Verbatim copy used for source words the table does not know."""
    tgt = FactoredWord((word.form, word.form, "UNK"), TARGET)
    return TranslationOption((word.form,), (tgt,), AlignmentSet(), 0.0, 0.0, 1, 1, 1)


# -- text format --------------------------------------------------------------

def format_option(opt: TranslationOption) -> str:
    tp = opt.target_phrase
    return " ||| ".join([
        " ".join(opt.source_phrase),
        " ".join(w.form for w in tp),
        " ".join(w.lemma for w in tp),
        " ".join(w.tag for w in tp),
        f"{opt.logp_tgt_given_src!r} {opt.logp_src_given_tgt!r}",
        str(opt.internal_alignment),
        f"{opt.pair_count} {opt.source_count} {opt.target_count}",
    ])


def parse_option(line: str) -> TranslationOption:
    fields = [f.strip() for f in line.rstrip("\n").split("|||")]
    if len(fields) != 7:
        raise ValueError(f"expected 7 fields in phrase table line, got {len(fields)}")
    src = tuple(fields[0].split())
    forms, lemmas, tags = (f.split() for f in fields[1:4])
    if not (len(forms) == len(lemmas) == len(tags)) or not forms or not src:
        raise ValueError(f"inconsistent phrase table line: {line!r}")
    tgt = tuple(FactoredWord((f, l, t), TARGET) for f, l, t in zip(forms, lemmas, tags))
    p1, p2 = (float(x) for x in fields[4].split())
    links = set()
    for pr in fields[5].split():
        i, j = pr.split("-")
        links.add((int(i), int(j)))
    pc, sc, tc = (int(x) for x in fields[6].split())
    return TranslationOption(src, tgt, AlignmentSet(frozenset(links)), p1, p2, pc, sc, tc)


def write_phrase_table(table: PhraseTable, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for opt in table.options():
            f.write(format_option(opt) + "\n")


def read_phrase_table(path) -> PhraseTable:
    table = PhraseTable()
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                table.add(parse_option(line))
    return table

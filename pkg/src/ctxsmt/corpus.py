"""Factored parallel corpora and word alignments.

A token is written as ``factor|factor|...``.  Source tokens carry five
factors (form, lemma, tag, analytical function, parent lemma), target
tokens carry three (form, lemma, tag).  A missing factor is written ``-``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

SEP = "|"
SOURCE = "source"
TARGET = "target"

SCHEMAS = {
    SOURCE: ("form", "lemma", "tag", "afun", "parent"),
    TARGET: ("form", "lemma", "tag"),
}
# one-letter factor abbreviations used by feature templates
FACTOR_LETTERS = {
    SOURCE: {"f": 0, "l": 1, "t": 2, "a": 3, "p": 4},
    TARGET: {"f": 0, "l": 1, "t": 2},
}


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FactoredWord:
    factors: tuple[str, ...]
    side: str = TARGET

    def __post_init__(self):
        if self.side not in SCHEMAS:
            raise CorpusFormatError(f"unknown side {self.side!r}")
        n = len(SCHEMAS[self.side])
        if len(self.factors) != n:
            raise CorpusFormatError(f"expected {n} factors, got {len(self.factors)}")
        for f in self.factors:
            if not f or SEP in f or any(c.isspace() for c in f):
                raise CorpusFormatError(f"invalid factor {f!r}")

    @property
    def form(self) -> str:
        return self.factors[0]

    @property
    def lemma(self) -> str:
        return self.factors[1]

    @property
    def tag(self) -> str:
        return self.factors[2]

    def factor(self, letter: str) -> str:
        return self.factors[FACTOR_LETTERS[self.side][letter]]

    def __str__(self):
        return SEP.join(self.factors)


@dataclass(frozen=True)
class Sentence:
    words: tuple[FactoredWord, ...]
    side: str = TARGET

    def __post_init__(self):
        if not self.words:
            raise CorpusFormatError("empty sentence")
        if any(w.side != self.side for w in self.words):
            raise CorpusFormatError("mixed word schemas in sentence")

    def __len__(self):
        return len(self.words)

    def __getitem__(self, i):
        return self.words[i]

    def __iter__(self):
        return iter(self.words)

    @property
    def forms(self) -> tuple[str, ...]:
        return tuple(w.form for w in self.words)

    def __str__(self):
        return " ".join(str(w) for w in self.words)


@dataclass(frozen=True)
class AlignmentSet:
    links: frozenset[tuple[int, int]] = frozenset()

    def __iter__(self):
        return iter(sorted(self.links))

    def __len__(self):
        return len(self.links)

    def __contains__(self, link):
        return link in self.links

    def sorted(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.links))

    def __str__(self):
        return " ".join(f"{i}-{j}" for i, j in self.sorted())


@dataclass(frozen=True)
class AlignedSentencePair:
    source: Sentence
    target: Sentence
    alignment: AlignmentSet

    def __post_init__(self):
        for i, j in self.alignment.links:
            if not (0 <= i < len(self.source) and 0 <= j < len(self.target)):
                raise CorpusFormatError(f"alignment link {i}-{j} out of bounds")

    def source_links(self) -> dict[int, list[int]]:
        """Map target index -> sorted aligned source indices."""
        out: dict[int, list[int]] = {}
        for i, j in self.alignment.sorted():
            out.setdefault(j, []).append(i)
        return out


def make_word(token: str, side: str) -> FactoredWord:
    return FactoredWord(tuple(token.split(SEP)), side)


def parse_factored_sentence(line: str, schema: str) -> Sentence:
    tokens = line.split()
    if not tokens:
        raise CorpusFormatError("empty sentence")
    n = len(SCHEMAS[schema])
    words = []
    for k, tok in enumerate(tokens):
        factors = tok.split(SEP)
        if len(factors) != n:
            raise CorpusFormatError(f"expected {n} factors, got {len(factors)} at token {k}")
        try:
            words.append(FactoredWord(tuple(factors), schema))
        except CorpusFormatError as e:
            raise CorpusFormatError(f"{e} at token {k}") from None
    return Sentence(tuple(words), schema)


def parse_alignment(line: str, src_len: int, tgt_len: int) -> AlignmentSet:
    links = set()
    for pair in line.split():
        i, dash, j = pair.partition("-")
        if not dash or not i.isdigit() or not j.isdigit():
            raise CorpusFormatError(f"malformed alignment pair {pair!r}")
        i, j = int(i), int(j)
        if i >= src_len or j >= tgt_len:
            raise CorpusFormatError(
                f"alignment link {pair} out of bounds for lengths {src_len}x{tgt_len}")
        links.add((i, j))
    return AlignmentSet(frozenset(links))


def load_parallel_corpus(src_path, tgt_path, align_path) -> Iterator[AlignedSentencePair]:
    with open(src_path, encoding="utf-8") as fs, open(tgt_path, encoding="utf-8") as ft, \
            open(align_path, encoding="utf-8") as fa:
        missing = object()
        for lineno, (s, t, a) in enumerate(
                itertools.zip_longest(fs, ft, fa, fillvalue=missing), start=1):
            if missing in (s, t, a):
                raise CorpusFormatError(f"line count mismatch at line {lineno}")
            src = parse_factored_sentence(s, SOURCE)
            tgt = parse_factored_sentence(t, TARGET)
            yield AlignedSentencePair(src, tgt, parse_alignment(a, len(src), len(tgt)))


def read_sentences(path, schema: str) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return [parse_factored_sentence(line, schema) for line in f]


def write_parallel_corpus(pairs, src_path, tgt_path, align_path) -> None:
    with open(src_path, "w", encoding="utf-8") as fs, open(tgt_path, "w", encoding="utf-8") as ft, \
            open(align_path, "w", encoding="utf-8") as fa:
        for p in pairs:
            fs.write(f"{p.source}\n")
            ft.write(f"{p.target}\n")
            fa.write(f"{p.alignment}\n")

"""Small generated corpora with known answers.

``sense_corpus``
    An ambiguous source word whose translation is fixed by a cue word a few
    positions away.  Senses alternate, so each sense is exactly half.
``agreement_corpus``
    A noun with two equally likely translations of different gender is
    followed by an adjective that must agree with it.  Sentence pairs come in
    twins with identical source sides, so only the target context can tell
    the adjective forms apart.
``toy_grammar``
    A hand-written phrase table with reordering phrases, a trigram LM, and a
    fixed list of short test sentences.
"""
from __future__ import annotations

import math
import random

import numpy as np

from .classifier import LinearModel
from .corpus import SOURCE, TARGET, AlignedSentencePair, AlignmentSet, FactoredWord, Sentence
from .features import FeatureConfig
from .lm import train_lm
from .phrases import PhraseTable, TranslationOption


def src_word(form: str, tag: str = "X", afun: str = "-", parent: str = "-") -> FactoredWord:
    return FactoredWord((form, form, tag, afun, parent), SOURCE)


def tgt_word(form: str, lemma: str | None = None, tag: str = "X") -> FactoredWord:
    return FactoredWord((form, lemma or form, tag), TARGET)


def monotone_pair(src: list[FactoredWord], tgt: list[FactoredWord]) -> AlignedSentencePair:
    assert len(src) == len(tgt)
    return AlignedSentencePair(Sentence(tuple(src), SOURCE), Sentence(tuple(tgt), TARGET),
                               AlignmentSet(frozenset((i, i) for i in range(len(src)))))


FILLERS = {
    "the": "ten", "old": "starý", "we": "my", "saw": "viděli", "near": "u",
    "big": "velký", "this": "tento", "then": "pak", "there": "tam", "is": "je",
}
SENSES = {
    # ambiguous form -> [(translation, cue words)]
    "bank": [("banka", ["money", "loan", "account"]), ("břeh", ["river", "water", "fish"])],
}
CUES = {"money": "peníze", "loan": "půjčka", "account": "účet",
        "river": "řeka", "water": "voda", "fish": "ryba"}
AMBIGUOUS = "bank"

SENSE_CONFIG = """
source_indicator f
source_internal f
source_context f 3
target_indicator f
target_internal l
"""


def sense_corpus(n: int = 500, seed: int = 1) -> list[AlignedSentencePair]:
    rng = random.Random(seed)
    fillers = sorted(FILLERS)
    pairs = []
    for i in range(n):
        translation, cues = SENSES[AMBIGUOUS][i % 2]
        cue = rng.choice(cues)
        gap = rng.randint(0, 2)
        words = [rng.choice(fillers) for _ in range(gap)]
        if rng.random() < 0.5:
            words = [cue] + words + [AMBIGUOUS]
        else:
            words = [AMBIGUOUS] + words + [cue]
        words = [rng.choice(fillers)] + words + [rng.choice(fillers)]
        tgt = [tgt_word(translation, translation, "NN") if w == AMBIGUOUS
               else tgt_word(CUES.get(w) or FILLERS[w]) for w in words]
        pairs.append(monotone_pair([src_word(w) for w in words], tgt))
    return pairs


NOUNS = {
    # source noun -> (neuter translation, masculine translation)
    "car": ("auto", "vůz"), "child": ("dítě", "kluk"), "house": ("stavení", "dům"),
    "window": ("okno", "průzor"), "town": ("město", "hrad"),
}
ADJECTIVES = {
    # source adjective -> (neuter form, masculine form, lemma)
    "red": ("červené", "červený", "červený"), "new": ("nové", "nový", "nový"),
    "small": ("malé", "malý", "malý"), "nice": ("hezké", "hezký", "hezký"),
}
GENDER_TAGS = ("N", "M")

AGREEMENT_SOURCE_CONFIG = """
source_indicator f
source_internal f
source_context f 3
target_indicator f
target_internal l
"""
AGREEMENT_TARGET_CONFIG = AGREEMENT_SOURCE_CONFIG + """
target_context t 2
target_context l 2
"""


def agreement_corpus(n: int = 500, seed: int = 1) -> list[AlignedSentencePair]:
    rng = random.Random(seed)
    nouns, adjs, fillers = sorted(NOUNS), sorted(ADJECTIVES), sorted(FILLERS)
    pairs = []
    for twin in range(math.ceil(n / 2)):
        noun = nouns[twin % len(nouns)]
        adj = rng.choice(adjs)
        pre = [rng.choice(fillers) for _ in range(rng.randint(1, 2))]
        post = [rng.choice(fillers) for _ in range(rng.randint(0, 1))]
        source = [src_word(w) for w in pre] + [src_word(noun, "NN"), src_word(adj, "JJ")] + \
            [src_word(w) for w in post]
        for g in range(2):
            if len(pairs) == n:
                break
            gender = GENDER_TAGS[g]
            n_form = NOUNS[noun][g]
            a_form, lemma = ADJECTIVES[adj][g], ADJECTIVES[adj][2]
            target = [tgt_word(FILLERS[w]) for w in pre] + \
                [tgt_word(n_form, n_form, "NN" + gender), tgt_word(a_form, lemma, "AA" + gender)] + \
                [tgt_word(FILLERS[w]) for w in post]
            pairs.append(monotone_pair(source, target))
    return pairs


def split(pairs, heldout: int = 100):
    return pairs[:-heldout], pairs[-heldout:]


# -- toy grammar for exhaustive-search checks ---------------------------------------------

TOY_CONFIG = """
source_indicator f
source_context f 1
target_context f 2
target_context t 1
bilingual_context f/f 1
target_indicator f
target_internal t
"""

_TOY_RULES = [
    # source, [(target forms, target tags, alignment, p(t|s), p(s|t))]
    ("le", [(["the"], ["D"], [(0, 0)], 0.7, 0.6), (["a"], ["D"], [(0, 0)], 0.3, 0.5)]),
    ("chat", [(["cat"], ["N"], [(0, 0)], 0.8, 0.9), (["kitty"], ["N"], [(0, 0)], 0.2, 0.7)]),
    ("noir", [(["black"], ["A"], [(0, 0)], 0.6, 0.8), (["dark"], ["A"], [(0, 0)], 0.4, 0.6)]),
    ("chat noir", [(["black", "cat"], ["A", "N"], [(0, 1), (1, 0)], 1.0, 0.5)]),
    ("voit", [(["sees"], ["V"], [(0, 0)], 0.9, 0.9), (["watches"], ["V"], [(0, 0)], 0.1, 0.4)]),
    ("chien", [(["dog"], ["N"], [(0, 0)], 1.0, 0.9)]),
    ("le chien", [(["the", "dog"], ["D", "N"], [(0, 0), (1, 1)], 1.0, 0.8)]),
    ("petit", [(["small"], ["A"], [(0, 0)], 0.5, 0.7), (["little"], ["A"], [(0, 0)], 0.5, 0.7)]),
    ("petit chien", [(["puppy"], ["N"], [(0, 0), (1, 0)], 1.0, 0.9)]),
]

TOY_SENTENCES = [
    "chat",
    "le chat",
    "chat noir",
    "le chien voit",
    "le chat noir",
    "le petit chien",
    "le chat voit le chien",
    "le petit chien voit le chat",
    "le chat noir voit le chien",
    "chien voit le petit chat",
]

_TOY_LM_TEXT = [
    "the black cat sees the dog", "the dog sees the cat", "a small dog watches a cat",
    "the puppy sees the black cat", "the little dog", "a dark cat", "the cat sees a puppy",
]


def toy_grammar(hash_bits: int = 12, seed: int = 7):
    """Phrase table, trigram LM, feature config, random classifier and sentences."""
    table = PhraseTable()
    for src, rules in _TOY_RULES:
        for forms, tags, links, ptgs, psgt in rules:
            tgt = tuple(tgt_word(f, f, t) for f, t in zip(forms, tags))
            table.add(TranslationOption(tuple(src.split()), tgt, AlignmentSet(frozenset(links)),
                                        math.log(ptgs), math.log(psgt), 1, 1, 1))
    lm = train_lm([s.split() for s in _TOY_LM_TEXT], order=3)
    config = FeatureConfig.parse(TOY_CONFIG, hash_bits)
    model = LinearModel.zeros(hash_bits, config.fingerprint())
    model.weights[:] = np.random.default_rng(seed).normal(0.0, 0.5, size=1 << hash_bits)
    sentences = [Sentence(tuple(src_word(w) for w in s.split()), SOURCE) for s in TOY_SENTENCES]
    return table, lm, config, model, sentences

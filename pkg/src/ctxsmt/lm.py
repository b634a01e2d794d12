"""Count-based n-gram language model with stupid backoff scoring."""
from __future__ import annotations

import math
from collections import Counter
from typing import Iterable

BOS = "<s>"
EOS = "</s>"

LMState = tuple[str, ...]


class NGramModel:
    """Raw n-gram counts over target surface forms.

    Scores are log10 and not normalized: an unseen n-gram falls back to its
    shorter suffix at a constant ``backoff`` multiplier.  Words never seen in
    training score ``log10(unk_prob)`` flat.
    """

    def __init__(self, order: int, counts=None, backoff: float = 0.4, unk_prob: float = 1e-7):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.backoff = backoff
        self.unk_prob = unk_prob
        self.counts: Counter = Counter(counts or {})
        self._finalize()

    def _finalize(self):
        self.vocab = {ng[0] for ng in self.counts if len(ng) == 1} - {BOS}
        self.total = sum(c for ng, c in self.counts.items() if len(ng) == 1 and ng[0] != BOS)
        self._log_backoff = math.log10(self.backoff)
        self._log_unk = math.log10(self.unk_prob)

    def initial_state(self) -> LMState:
        return (BOS,) * (self.order - 1)

    def score_ngram(self, context: tuple[str, ...], word: str) -> float:
        """Backoff score of ``word`` after ``context`` (any length; truncated to order-1)."""
        if word not in self.vocab:
            return self._log_unk
        context = context[len(context) - self.order + 1:] if self.order > 1 else ()
        penalty = 0.0
        for k in range(len(context), 0, -1):
            ctx = context[len(context) - k:]
            c = self.counts.get(ctx + (word,), 0)
            if c > 0:
                return penalty + math.log10(c / self.counts[ctx])
            penalty += self._log_backoff
        return penalty + math.log10(self.counts[(word,)] / self.total)

    def __repr__(self):
        return f"NGramModel(order={self.order}, ngrams={len(self.counts)})"


def train_lm(target_sentences: Iterable, order: int = 5, backoff: float = 0.4,
             unk_prob: float = 1e-7) -> NGramModel:
    counts: Counter = Counter()
    seen = False
    for sent in target_sentences:
        seen = True
        forms = sent.forms if hasattr(sent, "forms") else tuple(sent)
        padded = (BOS,) * (order - 1) + tuple(forms) + (EOS,)
        for k in range(1, order + 1):
            for i in range(len(padded) - k + 1):
                counts[padded[i:i + k]] += 1
    if not seen:
        raise ValueError("cannot train a language model on an empty corpus")
    return NGramModel(order, counts, backoff, unk_prob)


def lm_score(model: NGramModel, word: str, state: LMState) -> tuple[float, LMState]:
    score = model.score_ngram(state, word)
    new_state = (state + (word,))[1:] if model.order > 1 else ()
    return score, new_state


def score_sentence(model: NGramModel, forms) -> float:
    """Total log10 score of a sentence including the end-of-sentence transition."""
    padded = (BOS,) * (model.order - 1) + tuple(forms) + (EOS,)
    n1 = model.order - 1
    return sum(model.score_ngram(padded[i - n1:i], padded[i]) for i in range(n1, len(padded)))


def write_lm(model: NGramModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"order={model.order} backoff={model.backoff!r}\n")
        for ng in sorted(model.counts, key=lambda g: (len(g), g)):
            f.write(f"{len(ng)}\t{' '.join(ng)}\t{model.counts[ng]}\n")


def read_lm(path, unk_prob: float = 1e-7) -> NGramModel:
    with open(path, encoding="utf-8") as f:
        header = dict(kv.split("=", 1) for kv in f.readline().split())
        counts = {}
        for line in f:
            if not line.strip():
                continue
            k, words, c = line.rstrip("\n").split("\t")
            ng = tuple(words.split(" "))
            if len(ng) != int(k):
                raise ValueError(f"n-gram length mismatch in line {line!r}")
            counts[ng] = int(c)
    return NGramModel(int(header["order"]), counts, float(header["backoff"]), unk_prob)

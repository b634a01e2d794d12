"""Feature templates, namespaces and feature hashing.

Every classifier feature lives in one of three namespaces:

* ``S_SRC`` -- shared features of the source sentence around the phrase,
* ``S_TGT`` -- shared features of the preceding target words (and the source
  words they are aligned to),
* ``T``     -- label-dependent features describing one candidate translation.

Shared features only enter the score crossed with ``T`` features, so the
dot product splits into a source part (fixed per translation option) and a
target part (fixed per decoder state).  The same functions are used to write
training examples and inside the decoder.
"""
from __future__ import annotations

import hashlib
import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import FACTOR_LETTERS, SOURCE, TARGET, FactoredWord, Sentence

S_SRC = "s"
S_TGT = "g"
T = "t"
NAMESPACES = (S_SRC, S_TGT, T)

DEFAULT_HASH_BITS = 22
BOS = "<s>"
EOS = "</s>"
NULL = "NULL"
PAD_WORD = FactoredWord((BOS, BOS, BOS), TARGET)

_KEY_ESCAPES = str.maketrans({"^": "_", "~": "_"})

TEMPLATE_IDS = {
    "source_indicator": "sind",
    "source_internal": "sint",
    "source_context": "sctx",
    "target_context": "tctx",
    "bilingual_context": "bctx",
    "target_indicator": "tind",
    "target_internal": "tint",
}
_CONTEXT_TEMPLATES = {"source_context", "target_context", "bilingual_context"}
MAX_TARGET_CONTEXT = 2


# -- configuration --------------------------------------------------------------

@dataclass(frozen=True)
class Template:
    kind: str
    letters: str
    size: int | None = None

    def __str__(self):
        combo = "+".join(self.letters) if "/" not in self.letters else "/".join(
            "+".join(part) for part in self.letters.split("/"))
        return f"{self.kind} {combo}" + (f" {self.size}" if self.size is not None else "")


@dataclass(frozen=True)
class FeatureConfig:
    templates: tuple[Template, ...]
    hash_bits: int = DEFAULT_HASH_BITS

    def __post_init__(self):
        if not 1 <= self.hash_bits <= 31:
            raise ValueError("hash_bits must be in [1, 31]")
        for t in self.templates:
            _validate_template(t)

    def of_kind(self, kind: str) -> list[Template]:
        return [t for t in self.templates if t.kind == kind]

    @property
    def uses_target_context(self) -> bool:
        return any(t.kind in ("target_context", "bilingual_context") for t in self.templates)

    def to_text(self) -> str:
        return "".join(f"{t}\n" for t in self.templates)

    def fingerprint(self) -> str:
        return hashlib.sha1(self.to_text().encode("utf-8")).hexdigest()[:16]

    def with_bits(self, hash_bits: int) -> "FeatureConfig":
        return FeatureConfig(self.templates, hash_bits)

    @classmethod
    def parse(cls, text: str, hash_bits: int = DEFAULT_HASH_BITS) -> "FeatureConfig":
        """Read ``template factor_combo [context_size]`` lines (``#`` starts a comment)."""
        templates = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"line {lineno}: expected 'template combo [size]'")
            kind, combo = parts[0], parts[1].replace("+", "")
            size = int(parts[2]) if len(parts) == 3 else None
            if kind == "target_context" and size is None:
                size = MAX_TARGET_CONTEXT
            templates.append(Template(kind, combo, size))
        return cls(tuple(templates), hash_bits)

    @classmethod
    def load(cls, path, hash_bits: int = DEFAULT_HASH_BITS) -> "FeatureConfig":
        with open(path, encoding="utf-8") as f:
            return cls.parse(f.read(), hash_bits)


def _validate_template(t: Template) -> None:
    if t.kind not in TEMPLATE_IDS:
        raise ValueError(f"unknown template {t.kind!r}")
    if t.kind == "bilingual_context":
        tgt, sep, src = t.letters.partition("/")
        if not sep:
            raise ValueError("bilingual_context combo must look like 'l+t/l+t'")
        sides = [(tgt, TARGET), (src, SOURCE)]
    else:
        side = SOURCE if t.kind.startswith("source") else TARGET
        sides = [(t.letters, side)]
    for letters, side in sides:
        if not letters or any(c not in FACTOR_LETTERS[side] for c in letters):
            raise ValueError(f"invalid factors {letters!r} for {side} side in {t.kind}")
    if t.kind in _CONTEXT_TEMPLATES:
        if t.size is None or t.size < 1:
            raise ValueError(f"{t.kind} needs a context size >= 1")
        if t.kind != "source_context" and t.size > MAX_TARGET_CONTEXT:
            raise ValueError(f"target-side context size is at most {MAX_TARGET_CONTEXT}")
    elif t.size is not None:
        raise ValueError(f"{t.kind} takes no context size")


# per-language template sets; surface forms and bilingual features are
# left out where they over-fit
PRESETS = {
    "cs": """
        source_indicator f
        source_indicator l
        source_indicator l+t
        source_indicator t
        source_internal f
        source_internal f+a
        source_internal f+p
        source_internal l
        source_internal l+t
        source_internal t
        source_internal a+p
        source_context f 3
        source_context l 3
        source_context t 5
        target_context f 2
        target_context l 2
        target_context t 2
        target_context l+t 2
        target_indicator f
        target_indicator l
        target_indicator t
        target_internal f
        target_internal l
        target_internal l+t
        target_internal t
    """,
    "pl-ro": """
        source_indicator l
        source_indicator t
        source_internal l
        source_internal l+a
        source_internal l+p
        source_internal t
        source_internal a+p
        source_context l 3
        source_context t 5
        target_context l 2
        target_context t 2
        bilingual_context l+t/l+t 2
        target_indicator l
        target_indicator t
        target_internal l
        target_internal t
    """,
}
PRESETS["de"] = PRESETS["cs"] + "bilingual_context l+t/l+t 2\n"


def preset(name: str, hash_bits: int = DEFAULT_HASH_BITS, source_only: bool = False) -> FeatureConfig:
    cfg = FeatureConfig.parse(PRESETS[name], hash_bits)
    if source_only:
        cfg = without_target_context(cfg)
    return cfg


def without_target_context(cfg: FeatureConfig) -> FeatureConfig:
    return FeatureConfig(tuple(t for t in cfg.templates
                               if t.kind not in ("target_context", "bilingual_context")),
                         cfg.hash_bits)


# -- keys and hashing -------------------------------------------------------------

def canonical_key(template_id: str, factor_letters: str, offset: int | None,
                  values: Sequence[str]) -> str:
    if not values:
        raise ValueError("feature key needs at least one value")
    parts = [template_id]
    if factor_letters:
        parts.append(factor_letters)
    if offset is not None:
        parts.append(str(offset))
    parts.append("~".join(v.translate(_KEY_ESCAPES) for v in values))
    return "^".join(parts)


@functools.lru_cache(maxsize=1 << 20)
def _hash64(namespace: str, key: str) -> int:
    # BLAKE2b, 8-byte digest, read little-endian
    digest = hashlib.blake2b(namespace.encode("ascii") + key.encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def hash_feature(namespace: str, key: str, hash_bits: int = DEFAULT_HASH_BITS) -> int:
    if not 1 <= hash_bits <= 31:
        raise ValueError("hash_bits must be in [1, 31]")
    return _hash64(namespace, key) & ((1 << hash_bits) - 1)


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_OFFSET = np.uint64(0x632BE59BD9B4E019)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix_indices(a: np.ndarray, b: np.ndarray, hash_bits: int) -> np.ndarray:
    """Pairwise index mixing: splitmix64 finalizer of ``a * golden + b + offset``.

    ``a`` and ``b`` broadcast; arithmetic wraps modulo 2**64.
    """
    z = np.asarray(a, dtype=np.uint64) * _GOLDEN + np.asarray(b, dtype=np.uint64) + _OFFSET
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    z = z ^ (z >> np.uint64(31))
    return (z & np.uint64((1 << hash_bits) - 1)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Hashed features of one namespace, sorted by index."""
    namespace: str
    indices: np.ndarray
    values: np.ndarray
    hash_bits: int
    keys: tuple[str, ...] | None = field(default=None)

    def __len__(self):
        return len(self.indices)

    def __eq__(self, other):
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return (self.namespace == other.namespace and self.hash_bits == other.hash_bits
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def items(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def __repr__(self):
        return f"FeatureSet({self.namespace!r}, n={len(self)}, bits={self.hash_bits})"


def make_feature_set(namespace: str, keys: Sequence[str], hash_bits: int) -> FeatureSet:
    mask = (1 << hash_bits) - 1
    hashed = sorted((_hash64(namespace, k) & mask, k) for k in keys)
    return FeatureSet(
        namespace,
        np.fromiter((h for h, _ in hashed), dtype=np.int64, count=len(hashed)),
        np.ones(len(hashed)),
        hash_bits,
        tuple(k for _, k in hashed),
    )


def cross(shared: FeatureSet, translation: FeatureSet, hash_bits: int | None = None) -> FeatureSet:
    """Cartesian product of a shared namespace with the translation namespace."""
    if shared.namespace not in (S_SRC, S_TGT) or translation.namespace != T:
        raise ValueError("cross() pairs a shared namespace with the T namespace")
    bits = hash_bits if hash_bits is not None else translation.hash_bits
    idx = mix_indices(shared.indices[:, None], translation.indices[None, :], bits).ravel()
    val = (shared.values[:, None] * translation.values[None, :]).ravel()
    order = np.argsort(idx, kind="stable")
    return FeatureSet(shared.namespace + T, idx[order], val[order], bits)


# -- extraction -----------------------------------------------------------------------

def _vals(word: FactoredWord, letters: str) -> list[str]:
    return [word.factor(c) for c in letters]


def source_keys(sentence: Sentence, span: tuple[int, int], config: FeatureConfig) -> list[str]:
    start, end = span
    if not 0 <= start <= end < len(sentence):
        raise IndexError(f"span {span} outside sentence of length {len(sentence)}")
    words = sentence.words[start:end + 1]
    keys = []
    for t in config.templates:
        if t.kind == "source_indicator":
            keys.append(canonical_key("sind", t.letters, None,
                                      [v for w in words for v in _vals(w, t.letters)]))
        elif t.kind == "source_internal":
            keys.extend(canonical_key("sint", t.letters, None, _vals(w, t.letters)) for w in words)
        elif t.kind == "source_context":
            for off in range(-t.size, t.size + 1):
                if off == 0:
                    continue
                pos = start + off if off < 0 else end + off
                if pos < 0:
                    vals = [BOS] * len(t.letters)
                elif pos >= len(sentence):
                    vals = [EOS] * len(t.letters)
                else:
                    vals = _vals(sentence.words[pos], t.letters)
                keys.append(canonical_key("sctx", t.letters, off, vals))
    return keys


def extract_source_shared(sentence: Sentence, span: tuple[int, int],
                          config: FeatureConfig) -> FeatureSet:
    return make_feature_set(S_SRC, source_keys(sentence, span, config), config.hash_bits)


@dataclass(frozen=True)
class ContextWord:
    word: FactoredWord
    aligned: tuple[FactoredWord, ...] = ()


PAD_CONTEXT_WORD = ContextWord(PAD_WORD, ())


@dataclass(frozen=True)
class TargetContext:
    """The two target words before the current phrase, oldest first."""
    words: tuple[ContextWord, ...] = (PAD_CONTEXT_WORD, PAD_CONTEXT_WORD)

    def __post_init__(self):
        if len(self.words) != MAX_TARGET_CONTEXT:
            raise ValueError(f"target context holds exactly {MAX_TARGET_CONTEXT} words")

    def at(self, offset: int) -> ContextWord:
        """``offset`` is -1 for the immediately preceding word, -2 before that."""
        return self.words[len(self.words) + offset]

    def push(self, words: Sequence[ContextWord]) -> "TargetContext":
        return TargetContext((self.words + tuple(words))[-MAX_TARGET_CONTEXT:])

    @classmethod
    def from_words(cls, words: Sequence[ContextWord]) -> "TargetContext":
        return cls().push(words)


def target_keys(context: TargetContext, config: FeatureConfig) -> list[str]:
    keys = []
    for t in config.templates:
        if t.kind == "target_context":
            for off in range(-1, -t.size - 1, -1):
                keys.append(canonical_key("tctx", t.letters, off,
                                          _vals(context.at(off).word, t.letters)))
        elif t.kind == "bilingual_context":
            tl, sl = t.letters.split("/")
            for off in range(-1, -t.size - 1, -1):
                cw = context.at(off)
                tv = _vals(cw.word, tl)
                if not cw.aligned:
                    keys.append(canonical_key("bctx", tl + sl, off, tv + [NULL]))
                for sw in cw.aligned:
                    keys.append(canonical_key("bctx", tl + sl, off, tv + _vals(sw, sl)))
    return keys


def extract_target_shared(context: TargetContext, config: FeatureConfig) -> FeatureSet:
    return make_feature_set(S_TGT, target_keys(context, config), config.hash_bits)


def translation_keys(option, config: FeatureConfig) -> list[str]:
    words = option.target_phrase
    keys = []
    for t in config.templates:
        if t.kind == "target_indicator":
            keys.append(canonical_key("tind", t.letters, None,
                                      [v for w in words for v in _vals(w, t.letters)]))
        elif t.kind == "target_internal":
            keys.extend(canonical_key("tint", t.letters, None, _vals(w, t.letters)) for w in words)
    # word-to-word translation pairs along the phrase-internal alignment
    for i, j in option.internal_alignment.sorted():
        keys.append(canonical_key("tpair", "", None, [option.source_phrase[i], words[j].lemma]))
    return keys


def extract_translation(option, config: FeatureConfig) -> FeatureSet:
    return make_feature_set(T, translation_keys(option, config), config.hash_bits)

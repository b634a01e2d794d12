"""Global linear phrase-translation classifier.

Scores are ``w . [T, S_src x T, S_tgt x T]`` over hashed indices; the
distribution over a phrase's candidates is the softmax of those scores.
Training reduces the multi-class problem to one binary logistic update per
candidate (gold candidate positive, all others negative), the way a
label-dependent-features cost-sensitive one-against-all learner does it.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .features import S_SRC, S_TGT, T, FeatureConfig, FeatureSet, make_feature_set, mix_indices

log = logging.getLogger(__name__)


class FingerprintMismatch(ValueError):
    pass


@dataclass
class LinearModel:
    weights: np.ndarray
    hash_bits: int
    config_fingerprint: str = ""
    eta0: float = 0.0
    passes_selected: int = 0
    skipped_examples: int = 0

    @classmethod
    def zeros(cls, hash_bits: int, fingerprint: str = "") -> "LinearModel":
        return cls(np.zeros(1 << hash_bits), hash_bits, fingerprint)

    def check(self, config: FeatureConfig) -> None:
        if config.fingerprint() != self.config_fingerprint:
            raise FingerprintMismatch(
                f"model was trained with feature config {self.config_fingerprint}, "
                f"got {config.fingerprint()}")
        if config.hash_bits != self.hash_bits:
            raise FingerprintMismatch(
                f"model has {self.hash_bits} hash bits, config has {config.hash_bits}")

    def copy(self) -> "LinearModel":
        return LinearModel(self.weights.copy(), self.hash_bits, self.config_fingerprint,
                           self.eta0, self.passes_selected, self.skipped_examples)


@dataclass(frozen=True)
class TrainConfig:
    passes: int = 10
    eta0: float = 1.0
    shards: int = 1
    seed: int = 1
    l2: float = 0.0
    hash_bits: int = 22

    def __post_init__(self):
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")


@dataclass
class TrainingExample:
    shared_src: FeatureSet
    shared_tgt: FeatureSet
    candidates: list[tuple[FeatureSet, int]]
    gold_index: int
    # bookkeeping only; not part of the file format
    source_phrase: tuple[str, ...] = field(default=(), compare=False)
    candidate_phrases: tuple = field(default=(), compare=False)

    def __post_init__(self):
        gold = [k for k, (_, loss) in enumerate(self.candidates) if loss == 0]
        if self.candidates and gold != [self.gold_index]:
            raise ValueError("a training example needs exactly one zero-loss candidate "
                             "at gold_index")


# -- scoring ------------------------------------------------------------------------

def _cross_parts(shared: FeatureSet, cand: FeatureSet, bits: int):
    idx = mix_indices(shared.indices[:, None], cand.indices[None, :], bits).ravel()
    val = (shared.values[:, None] * cand.values[None, :]).ravel()
    return idx, val


def _sorted(idx, val):
    order = np.argsort(idx, kind="stable")
    return idx[order], val[order]


def source_features(shared_src: FeatureSet, cand: FeatureSet, bits: int):
    """Active (index, value) arrays of ``T`` plus ``S_src x T``, sorted by index."""
    idx, val = _cross_parts(shared_src, cand, bits)
    return _sorted(np.concatenate([cand.indices, idx]), np.concatenate([cand.values, val]))


def target_features(shared_tgt: FeatureSet, cand: FeatureSet, bits: int):
    """Active (index, value) arrays of ``S_tgt x T``, sorted by index."""
    return _sorted(*_cross_parts(shared_tgt, cand, bits))


def dot(weights: np.ndarray, idx: np.ndarray, val: np.ndarray) -> float:
    return float(np.sum(weights[idx] * val))


def source_part(model: LinearModel, shared_src: FeatureSet, cand: FeatureSet) -> float:
    return dot(model.weights, *source_features(shared_src, cand, model.hash_bits))


def target_part(model: LinearModel, shared_tgt: FeatureSet, cand: FeatureSet) -> float:
    return dot(model.weights, *target_features(shared_tgt, cand, model.hash_bits))


def _check_bits(model: LinearModel, *sets: FeatureSet) -> None:
    for fs in sets:
        if fs.hash_bits != model.hash_bits:
            raise FingerprintMismatch(
                f"feature set hashed to {fs.hash_bits} bits, model has {model.hash_bits}")


def raw_score(model: LinearModel, shared_src: FeatureSet, shared_tgt: FeatureSet,
              candidate: FeatureSet, config: FeatureConfig | None = None) -> float:
    """Unnormalized score; colliding indices accumulate.

    Computed as source part + target part, each summed in index order, so the
    decoder's cached decomposition reproduces it bit for bit.
    """
    if config is not None:
        model.check(config)
    _check_bits(model, shared_src, shared_tgt, candidate)
    return source_part(model, shared_src, candidate) + target_part(model, shared_tgt, candidate)


def log_softmax(scores: Sequence[float]) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    m = s.max()
    z = s - m
    return z - math.log(np.sum(np.exp(z)))


def predict_distribution(model: LinearModel, shared_src: FeatureSet, shared_tgt: FeatureSet,
                         candidates: Sequence[FeatureSet]) -> np.ndarray:
    if not candidates:
        raise ValueError("need at least one candidate")
    scores = [raw_score(model, shared_src, shared_tgt, c) for c in candidates]
    return np.exp(log_softmax(scores))


def heldout_accuracy(model: LinearModel, examples: Iterable[TrainingExample]) -> float:
    total = correct = 0
    for ex in examples:
        if not ex.candidates:
            continue
        probs = predict_distribution(model, ex.shared_src, ex.shared_tgt,
                                     [c for c, _ in ex.candidates])
        total += 1
        correct += int(np.argmax(probs)) == ex.gold_index
    if total == 0:
        raise ValueError("heldout_accuracy needs at least one example")
    return correct / total


# -- logistic loss and SGD ---------------------------------------------------------------

def logistic_loss(weights: np.ndarray, idx: np.ndarray, val: np.ndarray, y: int) -> float:
    """``log(1 + exp(-y * w.x))`` for label ``y`` in {+1, -1}."""
    return float(np.logaddexp(0.0, -y * dot(weights, idx, val)))


def logistic_gradient(weights: np.ndarray, idx: np.ndarray, val: np.ndarray, y: int) -> np.ndarray:
    """Dense gradient of :func:`logistic_loss` with respect to the weights."""
    s = dot(weights, idx, val)
    g = np.zeros_like(weights)
    np.add.at(g, idx, -y * _sigmoid(-y * s) * val)
    return g


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def sgd_step(weights: np.ndarray, idx: np.ndarray, val: np.ndarray, y: int,
             eta: float, l2: float = 0.0) -> None:
    """In-place logistic-loss SGD update on the active indices."""
    s = dot(weights, idx, val)
    coef = -y * _sigmoid(-y * s)
    if l2:
        uniq = np.unique(idx)
        weights[uniq] -= eta * l2 * weights[uniq]
    np.add.at(weights, idx, -eta * coef * val)


@dataclass
class _Prepared:
    idx: np.ndarray
    val: np.ndarray
    y: int


def _prepare(examples: Iterable[TrainingExample], bits: int) -> tuple[list[list[_Prepared]], int]:
    out, skipped = [], 0
    for ex in examples:
        if not ex.candidates:
            skipped += 1
            continue
        cands = []
        for cand, loss in ex.candidates:
            si, sv = source_features(ex.shared_src, cand, bits)
            ti, tv = target_features(ex.shared_tgt, cand, bits)
            cands.append(_Prepared(np.concatenate([si, ti]), np.concatenate([sv, tv]),
                                   1 if loss == 0 else -1))
        out.append(cands)
    if skipped:
        log.warning("skipped %d training examples without candidates", skipped)
    return out, skipped


class _Worker:
    """One SGD learner; keeps its own update counter across passes."""

    def __init__(self, data: list[list[_Prepared]], cfg: TrainConfig):
        self.data = data
        self.cfg = cfg
        self.t = 0

    def run_pass(self, weights: np.ndarray) -> np.ndarray:
        w = weights.copy()
        eta0, l2 = self.cfg.eta0, self.cfg.l2
        for cands in self.data:
            for c in cands:
                self.t += 1
                sgd_step(w, c.idx, c.val, c.y, eta0 / math.sqrt(self.t), l2)
        return w


def _infer_bits(examples, default):
    for ex in examples:
        return ex.shared_src.hash_bits
    return default


def train(examples: Sequence[TrainingExample], heldout: Sequence[TrainingExample],
          cfg: TrainConfig = TrainConfig(), fingerprint: str = "") -> LinearModel:
    """Sequential training: ``cfg.passes`` passes, best held-out pass kept."""
    return _train_shards([examples], heldout, cfg, fingerprint, parallel=False)


def train_sharded(shards: Sequence, heldout: Sequence[TrainingExample],
                  cfg: TrainConfig = TrainConfig(), fingerprint: str = "") -> LinearModel:
    """Data-parallel training with uniform weight averaging after every pass.

    ``shards`` holds example sequences or paths of example files.  Every
    worker starts each pass from the common averaged weights.
    """
    if len(shards) < 1:
        raise ValueError("need at least one shard")
    loaded = [read_examples(s, cfg.hash_bits) if isinstance(s, (str, os.PathLike)) else s
              for s in shards]
    return _train_shards(loaded, heldout, cfg, fingerprint, parallel=True)


def _train_shards(shards, heldout, cfg, fingerprint, parallel):
    heldout = list(heldout)
    if not heldout:
        raise ValueError("held-out set is empty")
    bits = _infer_bits([ex for s in shards for ex in s[:1]], cfg.hash_bits)
    workers, skipped = [], 0
    for k, shard in enumerate(shards):
        data, sk = _prepare(shard, bits)
        skipped += sk
        if not data:
            log.warning("shard %d is empty; excluded from averaging", k)
            continue
        workers.append(_Worker(data, cfg))
    if not workers:
        raise ValueError("no training examples")

    model = LinearModel.zeros(bits, fingerprint)
    model.eta0 = cfg.eta0
    best, best_acc = None, -1.0
    pool = ThreadPoolExecutor(max_workers=len(workers)) if parallel and len(workers) > 1 else None
    try:
        for p in range(1, cfg.passes + 1):
            if pool is None:
                results = [wk.run_pass(model.weights) for wk in workers]
            else:
                # pass-end barrier: wait for every shard before averaging
                results = list(pool.map(lambda wk: wk.run_pass(model.weights), workers))
            avg = results[0]
            for r in results[1:]:
                avg = avg + r
            model.weights = avg / len(results) if len(results) > 1 else avg
            acc = heldout_accuracy(model, heldout)
            log.info("pass %d held-out accuracy %.4f", p, acc)
            if acc > best_acc:
                best_acc, best = acc, model.copy()
                best.passes_selected = p
    finally:
        if pool is not None:
            pool.shutdown()
    best.skipped_examples = skipped
    return best


# -- file formats ----------------------------------------------------------------------------

def write_model(model: LinearModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"bits={model.hash_bits} config={model.config_fingerprint or '-'} "
                f"eta0={model.eta0!r} passes_selected={model.passes_selected}\n")
        for i in np.flatnonzero(model.weights):
            f.write(f"{i}\t{float(model.weights[i])!r}\n")


def read_model(path) -> LinearModel:
    with open(path, encoding="utf-8") as f:
        header = dict(kv.split("=", 1) for kv in f.readline().split())
        bits = int(header["bits"])
        model = LinearModel.zeros(bits, "" if header["config"] == "-" else header["config"])
        model.eta0 = float(header.get("eta0", 0.0))
        model.passes_selected = int(header.get("passes_selected", 0))
        for line in f:
            if line.strip():
                i, w = line.split("\t")
                model.weights[int(i)] = float(w)
    return model


def format_example(ex: TrainingExample) -> str:
    def keys(fs):
        if fs.keys is None:
            raise ValueError("feature set has no keys to serialize")
        return "".join(" " + k for k in fs.keys)

    lines = [f"shared |s{keys(ex.shared_src)}", f"shared_t |g{keys(ex.shared_tgt)}"]
    lines += [f"{loss} |t{keys(c)}" for c, loss in ex.candidates]
    return "\n".join(lines) + "\n"


def parse_example(block: str, hash_bits: int) -> TrainingExample:
    shared_src = shared_tgt = None
    cands = []
    for line in block.strip("\n").split("\n"):
        head, _, rest = line.partition(" |")
        ns, *keys = rest.split(" ")
        if head == "shared" and ns == S_SRC:
            shared_src = make_feature_set(S_SRC, keys, hash_bits)
        elif head == "shared_t" and ns == S_TGT:
            shared_tgt = make_feature_set(S_TGT, keys, hash_bits)
        elif head in ("0", "1") and ns == T:
            cands.append((make_feature_set(T, keys, hash_bits), int(head)))
        else:
            raise ValueError(f"malformed example line {line!r}")
    if shared_src is None or shared_tgt is None:
        raise ValueError("example block lacks shared lines")
    gold = next((k for k, (_, loss) in enumerate(cands) if loss == 0), -1)
    return TrainingExample(shared_src, shared_tgt, cands, gold)


def write_examples_file(examples: Iterable[TrainingExample], path) -> int:
    n = 0
    try:
        with open(path, "w", encoding="utf-8") as f:
            for ex in examples:
                if n:
                    f.write("\n")
                f.write(format_example(ex))
                n += 1
    except OSError as e:
        raise OSError(f"cannot write examples to {path}: {e}") from e
    return n


def iter_examples(path, hash_bits: int):
    with open(path, encoding="utf-8") as f:
        block = []
        for line in f:
            if line.strip():
                block.append(line.rstrip("\n"))
            elif block:
                yield parse_example("\n".join(block), hash_bits)
                block = []
        if block:
            yield parse_example("\n".join(block), hash_bits)


def read_examples(path, hash_bits: int) -> list[TrainingExample]:
    return list(iter_examples(path, hash_bits))

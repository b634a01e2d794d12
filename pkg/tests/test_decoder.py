import math

import numpy as np
import pytest

from ctxsmt import classifier as clf
from ctxsmt import synthetic as syn
from ctxsmt.corpus import SOURCE, AlignmentSet, Sentence
from ctxsmt.decoder import (ClassifierScorer, DecoderState, DecoderWeights, DecodingError,
                            collect_options, coverage_future, decode, future_cost,
                            initial_state, option_estimate, precompute_options)
from ctxsmt.features import (S_TGT, ContextWord, extract_source_shared, extract_translation,
                             make_feature_set)
from ctxsmt.phrases import PhraseTable, TranslationOption
from ctxsmt.synthetic import src_word, tgt_word

from oracles import best_partition, classifier_logprob, enumerate_derivations, span_options

UNLIMITED = dict(beam=10**6, distortion_limit=None)


@pytest.fixture(scope="module")
def toy():
    return syn.toy_grammar()


def sent(text):
    return Sentence(tuple(src_word(w) for w in text.split()), SOURCE)


def test_single_option_sentence(toy):
    table, lm, config, model, _ = toy
    t = PhraseTable()
    t.add(TranslationOption(("chien",), (tgt_word("dog"),), AlignmentSet(frozenset({(0, 0)})),
                            0.0, 0.0, 1, 1, 1))
    out = decode(sent("chien"), t, lm, model, DecoderWeights(), config)
    assert out.words == ("dog",)
    assert out.features["classifier"] == 0.0


def test_oov_copy_and_error(toy):
    table, lm, config, model, _ = toy
    assert decode(sent("le zebre"), table, lm, model, DecoderWeights(), config).words[-1] == "zebre"
    with pytest.raises(DecodingError, match="zebre"):
        decode(sent("le zebre"), table, lm, model, DecoderWeights(), config, oov=False)


def test_precompute(toy):
    table, lm, config, model, _ = toy
    s = sent("chien voit")
    options, caches = precompute_options(s, table, model, config)
    assert set(options) == {(0, 0), (1, 1)}
    zero = clf.LinearModel.zeros(model.hash_bits, model.config_fingerprint)
    _, zcaches = precompute_options(s, table, zero, config)
    assert set(zcaches.src_score.values()) == {0.0}


def test_src_score_matches_raw_score_without_target_context(toy):
    table, lm, config, model, _ = toy
    empty_tgt = make_feature_set(S_TGT, [], config.hash_bits)
    rng = np.random.default_rng(1)
    vocab = ["le", "chat", "noir", "voit", "chien", "petit"]
    checked = 0
    for _ in range(20):
        s = sent(" ".join(rng.choice(vocab, size=6)))
        options, caches = precompute_options(s, table, model, config)
        for (span, k), score in caches.src_score.items():
            t = extract_translation(options[span][k], config)
            expected = clf.raw_score(model, extract_source_shared(s, span, config), empty_tgt, t)
            assert score == pytest.approx(expected, abs=1e-12)
            checked += 1
    assert checked >= 100


def test_cache_semantics(toy):
    table, lm, config, model, sentences = toy
    s = sentences[-2]
    options = collect_options(s, table)
    scorer = ClassifierScorer(s, options, model, config)
    st = initial_state(lm)
    a = scorer.evaluate((1, 1), 0, st)
    misses = scorer.stats.misses
    assert scorer.evaluate((1, 1), 0, st) == a
    assert scorer.stats.misses == misses and scorer.stats.hits == 1
    probs = [math.exp(scorer.evaluate((1, 1), k, st)) for k in range(len(options[(1, 1)]))]
    assert abs(sum(probs) - 1.0) <= 1e-9
    with pytest.raises(DecodingError):
        scorer.evaluate((1, 1), 99, st)


def test_single_option_span_scores_zero(toy):
    table, lm, config, model, _ = toy
    s = sent("le chien")
    scorer = ClassifierScorer(s, collect_options(s, table), model, config)
    assert scorer.evaluate((1, 1), 0, initial_state(lm)) == 0.0


def test_cached_matches_naive_and_oracle_probabilities(toy):
    table, lm, config, model, sentences = toy
    s = sentences[-1]
    options = collect_options(s, table)
    cached = ClassifierScorer(s, options, model, config, cached=True)
    naive = ClassifierScorer(s, options, model, config, cached=False)
    w = tgt_word("the", "the", "D")
    state = DecoderState(initial_state(lm).context.push([ContextWord(w, (s.words[2],))]),
                         ("<s>", "the"))
    oracle_opts = span_options(s, table)
    for span, opts in options.items():
        for k in range(len(opts)):
            a = cached.evaluate(span, k, state)
            assert a == naive.evaluate(span, k, state)
            ref = classifier_logprob(s, span, k, [(w, [s.words[2]])], oracle_opts, model, config)
            assert a == pytest.approx(ref, abs=1e-9)


def test_decode_matches_exhaustive_search(toy):
    table, lm, config, model, sentences = toy
    weights = DecoderWeights(word_penalty=0.2, phrase_penalty=-0.1)
    for s in sentences[:7]:
        out = decode(s, table, lm, model, weights, config, **UNLIMITED)
        results = list(enumerate_derivations(s, table, lm, model, weights, config))
        best = max(score for score, _ in results)
        assert out.score == pytest.approx(best, abs=1e-9)
        assert out.words in {w for score, w in results if score >= best - 1e-9}


def test_recombination_is_safe(toy):
    table, lm, config, model, sentences = toy
    for s in sentences[:7]:
        a = decode(s, table, lm, model, DecoderWeights(), config, **UNLIMITED)
        b = decode(s, table, lm, model, DecoderWeights(), config, recombine=False, **UNLIMITED)
        assert a.score == pytest.approx(b.score, abs=1e-9)


def test_feature_breakdown_reproduces_score(toy):
    table, lm, config, model, sentences = toy
    weights = DecoderWeights(word_penalty=0.3)
    out = decode(sentences[-1], table, lm, model, weights, config)
    total = sum(getattr(weights, k) * v for k, v in out.features.items())
    assert total == pytest.approx(out.score, abs=1e-9)
    assert " ".join(out.words) == str(out)


def test_no_classifier_baseline(toy):
    table, lm, config, model, sentences = toy
    out = decode(sentences[-1], table, lm, None, DecoderWeights())
    assert out.features["classifier"] == 0.0 and out.stats == {}


def test_distortion_limit_zero_is_monotone(toy):
    table, lm, config, model, _ = toy
    out = decode(sent("le chat noir voit le chien"), table, lm, model, DecoderWeights(), config,
                 distortion_limit=0)
    starts = [span[0] for span, _ in out.derivation]
    assert starts == sorted(starts)
    assert out.features["distortion"] == 0.0


def test_future_cost_dp_is_best_partition(toy):
    table, lm, config, model, sentences = toy
    weights = DecoderWeights()
    for s in sentences:
        options = collect_options(s, table)
        fc = future_cost(s, options, weights, lm)
        best = {span: max(option_estimate(o, weights, lm) for o in opts)
                for span, opts in options.items()}
        for (i, j), v in fc.items():
            assert v == pytest.approx(best_partition(best, i, j))
        n = len(s)
        assert coverage_future((1 << n) - 1, n, fc) == 0.0
        assert coverage_future(0, n, fc) == fc[(0, n - 1)]


def test_caches_on_off_random_sentences(toy):
    table, lm, config, model, _ = toy
    rng = np.random.default_rng(0)
    vocab = ["le", "chat", "noir", "voit", "chien", "petit"]
    for _ in range(15):
        s = sent(" ".join(rng.choice(vocab, size=rng.integers(1, 6))))
        a = decode(s, table, lm, model, DecoderWeights(), config, cached=True)
        b = decode(s, table, lm, model, DecoderWeights(), config, cached=False)
        assert a.words == b.words
        assert abs(a.score - b.score) <= 1e-9


def test_weights_file(tmp_path):
    w = DecoderWeights(lm=0.7, classifier=2.0)
    w.save(tmp_path / "w")
    assert DecoderWeights.load(tmp_path / "w") == w
    (tmp_path / "bad").write_text("nope\t1\n")
    with pytest.raises(ValueError):
        DecoderWeights.load(tmp_path / "bad")

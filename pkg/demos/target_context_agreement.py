"""
Target context fixes agreement
==============================

An adjective must agree in gender with the noun chosen just before it.
Both genders come from the same source sentence, so source context cannot
tell them apart; the previous target word's tag can.
"""
from ctxsmt import classifier as clf
from ctxsmt import synthetic as syn
from ctxsmt.evaluation import intrinsic_accuracy
from ctxsmt.examples import generate_corpus_examples
from ctxsmt.features import FeatureConfig
from ctxsmt.phrases import build_phrase_table

train_pairs, test = syn.split(syn.agreement_corpus(500), 100)
for p in test[:2]:
    print(" ".join(p.source.forms), "->", " ".join(p.target.forms))

table = build_phrase_table(train_pairs)


def adjective(phrase):
    return len(phrase) == 1 and phrase[0] in syn.ADJECTIVES


for name, text in [("source only", syn.AGREEMENT_SOURCE_CONFIG),
                   ("with target context", syn.AGREEMENT_TARGET_CONFIG)]:
    config = FeatureConfig.parse(text, 18)
    exs = list(generate_corpus_examples(train_pairs, table, config))
    held = list(generate_corpus_examples(test, table, config, leave_one_out=False))
    model = clf.train(exs, held, clf.TrainConfig(hash_bits=18), config.fingerprint())
    res = intrinsic_accuracy(test, table, model, config, source_filter=adjective)
    print(f"{name:20s} adjective accuracy {res.model_accuracy:.3f}")

# four shards with averaging after every pass land close to sequential training
sharded = clf.train_sharded([exs[k::4] for k in range(4)], held, clf.TrainConfig(hash_bits=18),
                            config.fingerprint())
print("4 shards:", intrinsic_accuracy(test, table, sharded, config,
                                      source_filter=adjective).model_accuracy)

"""
Source context resolves an ambiguous word
=========================================

"bank" translates to "banka" or "břeh" depending on a nearby cue word.
The most-frequent-translation baseline is stuck at chance; a classifier
with source-context features is not.
"""
from ctxsmt import classifier as clf
from ctxsmt import synthetic as syn
from ctxsmt.evaluation import intrinsic_accuracy
from ctxsmt.examples import ExtractionStats, generate_corpus_examples
from ctxsmt.features import FeatureConfig
from ctxsmt.phrases import build_phrase_table

train_pairs, test = syn.split(syn.sense_corpus(500), 100)
print(" ".join(train_pairs[0].source.forms), "->", " ".join(train_pairs[0].target.forms))

table = build_phrase_table(train_pairs)
config = FeatureConfig.parse(syn.SENSE_CONFIG, 18)

# leave-one-out: each example sees counts with its own sentence removed
stats = ExtractionStats()
examples = list(generate_corpus_examples(train_pairs, table, config, stats=stats))
heldout = list(generate_corpus_examples(test, table, config, leave_one_out=False))
print(stats)

model = clf.train(examples, heldout, clf.TrainConfig(hash_bits=18), config.fingerprint())
print("selected pass", model.passes_selected)

res = intrinsic_accuracy(test, table, model, config, source_filter=lambda p: p == ("bank",))
print(f"classifier {res.model_accuracy:.3f}  baseline {res.baseline_accuracy:.3f}  "
      f"({res.instances} instances)")

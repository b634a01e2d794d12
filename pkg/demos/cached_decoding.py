"""
Decoding with classifier caches
===============================

Decode toy sentences with the classifier as a decoder feature, then compare
the cached evaluation with naive per-hypothesis recomputation.
"""
from ctxsmt import synthetic as syn
from ctxsmt.decoder import DecoderWeights, decode
from ctxsmt.evaluation import cache_equivalence_report

table, lm, config, model, sentences = syn.toy_grammar()
weights = DecoderWeights()

for s in sentences:
    t = decode(s, table, lm, model, weights, config)
    print(f"{' '.join(s.forms):30s} -> {t}   ({t.score:.3f})")

# the feature breakdown of one translation reproduces its score
t = decode(sentences[-2], table, lm, model, weights, config)
print({k: round(v, 3) for k, v in t.features.items()})
print(t.stats)

report = cache_equivalence_report(sentences * 3, table, lm, model, weights, config)
print(report.to_text().splitlines()[-1])

"""
Phrase extraction and the phrase table
======================================

Extract phrase pairs from a tiny factored, word-aligned corpus and look at
the resulting translation options.
"""
from ctxsmt.corpus import SOURCE, TARGET, AlignedSentencePair, parse_alignment, \
    parse_factored_sentence
from ctxsmt.phrases import build_phrase_table, extract_phrase_pairs, format_option, lookup

# source words carry form|lemma|tag|afun|parent, target words form|lemma|tag
lines = [
    ("the|the|DT|-|- black|black|JJ|-|- cat|cat|NN|-|-",
     "černá|černý|AA kočka|kočka|NN", "1-0 2-1"),
    ("the|the|DT|-|- cat|cat|NN|-|- sleeps|sleep|VB|-|-",
     "kočka|kočka|NN spí|spát|VB", "1-0 2-1"),
    ("a|a|DT|-|- black|black|JJ|-|- dog|dog|NN|-|-",
     "černý|černý|AA pes|pes|NN", "1-0 2-1"),
]
corpus = []
for s, t, a in lines:
    src = parse_factored_sentence(s, SOURCE)
    tgt = parse_factored_sentence(t, TARGET)
    corpus.append(AlignedSentencePair(src, tgt, parse_alignment(a, len(src), len(tgt))))

# every alignment-consistent box of the first sentence
for inst in extract_phrase_pairs(corpus[0]):
    print(inst.source_span, inst.target_span)

table = build_phrase_table(corpus)
print(len(table), "phrase pairs")

# "black" has two translations; options come most frequent first
for opt in lookup(table, ["black"]):
    print(format_option(opt))

"""Phrase-based translation with a global, context-aware phrase classifier.

Modules: ``corpus`` (factored parallel data), ``phrases`` (extraction and
phrase table), ``lm`` (n-gram LM), ``features`` (hashed feature templates),
``classifier`` (linear model and training), ``examples`` (training-example
generation), ``decoder`` (stack decoding with classifier caches),
``evaluation`` (BLEU, intrinsic accuracy, cache report) and ``cli``.
"""
__version__ = "0.1.0"

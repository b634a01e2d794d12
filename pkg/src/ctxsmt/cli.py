"""Command-line pipeline: ``ctxsmt <subcommand> ...``.

Options may also come from ``--config FILE`` holding ``key=value`` lines
(keys are option names without leading dashes); command-line flags win.
Exit status is 0 on success, 1 on runtime errors and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import random
import sys
from concurrent.futures import ThreadPoolExecutor

from . import classifier as clf
from .corpus import SOURCE, load_parallel_corpus, read_sentences, TARGET
from .decoder import DEFAULT_BEAM, DEFAULT_DISTORTION, DecoderWeights, decode
from .evaluation import bleu, cache_equivalence_report, intrinsic_accuracy
from .examples import ExtractionStats, generate_corpus_examples
from .features import DEFAULT_HASH_BITS, FeatureConfig
from .lm import read_lm, train_lm, write_lm
from .phrases import DEFAULT_MAX_LEN, build_phrase_table, read_phrase_table, write_phrase_table

log = logging.getLogger("ctxsmt")


def _chunks(items, n):
    n = max(1, min(n, len(items)))
    size = -(-len(items) // n)
    return [items[i:i + size] for i in range(0, len(items), size)]


def _pmap(fn, chunks, jobs):
    if jobs <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, chunks))


def _corpus(args):
    return list(load_parallel_corpus(args.src, args.tgt, args.align))


def cmd_extract_phrases(args):
    table = build_phrase_table(_corpus(args), args.max_len)
    write_phrase_table(table, args.out)
    print(f"{len(table)} phrase pairs for {len(table.entries)} source phrases", file=sys.stderr)


def cmd_extract_examples(args):
    corpus = _corpus(args)
    table = read_phrase_table(args.table)
    config = FeatureConfig.load(args.features, args.bits)

    def work(chunk):
        stats = ExtractionStats()
        exs = list(generate_corpus_examples(chunk, table, config, args.max_len,
                                            not args.no_leave_one_out, stats))
        return exs, stats

    examples, stats = [], ExtractionStats()
    for exs, st in _pmap(work, _chunks(corpus, args.jobs), args.jobs):
        examples.extend(exs)
        stats += st
    if args.shards:
        random.Random(args.seed).shuffle(examples)
        for k in range(args.shards):
            clf.write_examples_file(examples[k::args.shards], f"{args.out}.{k}")
    else:
        clf.write_examples_file(examples, args.out)
    print(f"{stats.emitted} examples; skipped: leave-one-out {stats.leave_one_out}, "
          f"gold not in candidates {stats.not_in_gen}, no consistent gold {stats.no_gold}",
          file=sys.stderr)


def cmd_train(args):
    config = FeatureConfig.load(args.features, args.bits)
    cfg = clf.TrainConfig(passes=args.passes, eta0=args.eta0, shards=args.shards or 1,
                          seed=args.seed, l2=args.l2, hash_bits=args.bits)
    files = [clf.read_examples(p, args.bits) for p in args.train]
    heldout = clf.read_examples(args.heldout, args.bits)
    if args.shards is None and len(files) == 1:
        model = clf.train(files[0], heldout, cfg, config.fingerprint())
    else:
        shards = files
        if args.shards is not None:
            merged = [ex for f in files for ex in f]
            shards = [merged[k::args.shards] for k in range(args.shards)]
        model = clf.train_sharded(shards, heldout, cfg, config.fingerprint())
    clf.write_model(model, args.out)
    print(f"selected pass {model.passes_selected}, held-out accuracy "
          f"{clf.heldout_accuracy(model, heldout):.4f}", file=sys.stderr)


def cmd_train_lm(args):
    write_lm(train_lm(read_sentences(args.corpus, TARGET), args.order), args.out)


def _load_system(args):
    table = read_phrase_table(args.table)
    lm = read_lm(args.lm)
    weights = DecoderWeights.load(args.weights) if args.weights else DecoderWeights()
    model = config = None
    if args.model:
        model = clf.read_model(args.model)
        config = FeatureConfig.load(args.features, model.hash_bits)
        model.check(config)
    return table, lm, model, config, weights


def cmd_decode(args):
    table, lm, model, config, weights = _load_system(args)
    sentences = read_sentences(args.input, SOURCE)

    def work(chunk):
        return [decode(s, table, lm, model, weights, config, args.beam, args.distortion,
                       cached=not args.naive) for s in chunk]

    results = [t for part in _pmap(work, _chunks(sentences, args.jobs), args.jobs) for t in part]
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for t in results:
            out.write(" ".join(t.words) + "\n")
    finally:
        if args.out:
            out.close()
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            for i, t in enumerate(results):
                parts = [f"sent={i}", f"total={t.score!r}"]
                parts += [f"{k}={v!r}" for k, v in t.features.items()]
                parts += [f"{k}={v}" for k, v in t.stats.items()]
                f.write("\t".join(parts) + "\n")


def cmd_bleu(args):
    with open(args.hyp, encoding="utf-8") as h, open(args.ref, encoding="utf-8") as r:
        hyps, refs = h.read().splitlines(), r.read().splitlines()
    print(f"BLEU = {100 * bleu(hyps, refs):.2f}")


def cmd_intrinsic_eval(args):
    model = clf.read_model(args.model)
    config = FeatureConfig.load(args.features, model.hash_bits)
    res = intrinsic_accuracy(_corpus(args), read_phrase_table(args.table), model, config,
                             args.max_len)
    print(f"instances\t{res.instances}\nmodel_accuracy\t{res.model_accuracy:.4f}\n"
          f"baseline_accuracy\t{res.baseline_accuracy:.4f}\nskipped\t{res.skipped}")


def cmd_cache_report(args):
    table, lm, model, config, weights = _load_system(args)
    if model is None:
        raise ValueError("cache-report needs --model")
    sentences = read_sentences(args.input, SOURCE)
    report = cache_equivalence_report(sentences, table, lm, model, weights, config,
                                      args.beam, args.distortion)
    sys.stdout.write(report.to_text())
    if args.summary:
        report.write_summary(args.summary)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ctxsmt", description="Phrase-based translation with a context-aware phrase classifier.")
    p.add_argument("--config", help="key=value defaults file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def common(sp, seed=True):
        sp.add_argument("--config", help="key=value defaults file")
        if seed:
            sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    def corpus_args(sp):
        sp.add_argument("--src", required=True)
        sp.add_argument("--tgt", required=True)
        sp.add_argument("--align", required=True)
        sp.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)

    sp = common(sub.add_parser("extract-phrases", help="corpus -> phrase table"))
    corpus_args(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_extract_phrases)

    sp = common(sub.add_parser("extract-examples", help="corpus + table -> training examples"))
    corpus_args(sp)
    sp.add_argument("--table", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--bits", type=int, default=DEFAULT_HASH_BITS)
    sp.add_argument("--shards", type=int, help="write OUT.0 .. OUT.K-1 after shuffling")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--no-leave-one-out", action="store_true")
    sp.set_defaults(func=cmd_extract_examples)

    sp = common(sub.add_parser("train", help="examples -> classifier model"))
    sp.add_argument("--train", nargs="+", required=True, help="example file(s); several = shards")
    sp.add_argument("--heldout", required=True)
    sp.add_argument("--features", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--shards", type=int)
    sp.add_argument("--passes", type=int, default=10)
    sp.add_argument("--eta0", type=float, default=1.0)
    sp.add_argument("--l2", type=float, default=0.0)
    sp.add_argument("--bits", type=int, default=DEFAULT_HASH_BITS)
    sp.set_defaults(func=cmd_train)

    sp = common(sub.add_parser("train-lm", help="target corpus -> n-gram counts"))
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--order", type=int, default=5)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_lm)

    for name, func, help_ in [("decode", cmd_decode, "translate a factored source file"),
                              ("cache-report", cmd_cache_report, "cached vs naive decoding")]:
        sp = common(sub.add_parser(name, help=help_))
        sp.add_argument("--input", required=True)
        sp.add_argument("--table", required=True)
        sp.add_argument("--lm", required=True)
        sp.add_argument("--model")
        sp.add_argument("--features")
        sp.add_argument("--weights")
        sp.add_argument("--beam", type=int, default=DEFAULT_BEAM)
        sp.add_argument("--distortion", type=int, default=DEFAULT_DISTORTION)
        if name == "decode":
            sp.add_argument("--out")
            sp.add_argument("--naive", action="store_true", help="disable classifier caches")
            sp.add_argument("--trace")
            sp.add_argument("--jobs", type=int, default=1)
        else:
            sp.add_argument("--summary")
        sp.set_defaults(func=func)

    sp = common(sub.add_parser("bleu", help="corpus BLEU of a hypothesis file"), seed=False)
    sp.add_argument("--hyp", required=True)
    sp.add_argument("--ref", required=True)
    sp.set_defaults(func=cmd_bleu)

    sp = common(sub.add_parser("intrinsic-eval", help="classifier vs most-frequent accuracy"))
    corpus_args(sp)
    sp.add_argument("--table", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--features", required=True)
    sp.set_defaults(func=cmd_intrinsic_eval)
    return p


def _read_config(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                k, _, v = line.partition("=")
                values[k.strip().replace("-", "_")] = v.strip()
    return values


def _apply_config(parser, argv, args):
    """Re-parse with config-file values as defaults so explicit flags still win."""
    values = _read_config(args.config)
    sp = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in values.items():
        if k not in known:
            parser.error(f"unknown key {k!r} in config file")
        action = known[k]
        if action.nargs in ("+", "*"):
            defaults[k] = v.split()
        elif isinstance(action, argparse._StoreTrueAction):
            defaults[k] = v.lower() in ("1", "true", "yes")
        else:
            defaults[k] = action.type(v) if action.type else v
        action.required = False
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        return _main(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1


def _main(argv) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv) if "--config" not in argv else None
    if args is None:
        # required flags may come from the config file: parse leniently first
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        cmd = next((a for a in argv if a in _commands(parser)), None)
        if cmd is None:
            parser.print_usage(sys.stderr)
            return 2
        args = argparse.Namespace(config=known.config, command=cmd)
        try:
            args = _apply_config(parser, argv, args)
        except OSError as e:
            print(f"ctxsmt: {e}", file=sys.stderr)
            return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "decode" and args.model and not args.features:
        parser.error("decode --model needs --features")
    try:
        args.func(args)
    except OSError as e:
        print(f"ctxsmt: {e}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as e:
        print(f"ctxsmt: error: {e}", file=sys.stderr)
        return 1
    return 0


def _commands(parser):
    return parser._subparsers._group_actions[0].choices


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface for batch experimentation.

Every subcommand is a pure function of its flags and input files: no
clocks, no network, no hidden state.  Exit codes: 0 success, 2 usage
error, 3 data validation error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .candidates import build_candidates
from .documents import read_corpus, validate_document, write_corpus
from .evaluation import (
    evaluate_ensemble,
    learning_curve,
    make_augmentation_fn,
    pretrain_reference_model,
    save_report,
    write_curve_files,
)
from .importance import neighbor_importance
from .keyphrases import (
    human_expert_config,
    infer_config,
    load_config,
    load_human_config,
    merge_configs,
    save_config,
)
from .model import load_checkpoint, save_checkpoint
from .swap import build_pairs, canonical_strategy, generate
from .training import TrainConfig, load_ensemble, pretrain, save_ensemble, train_ensemble

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


class DataError(Exception):
    """Invalid input data or files; maps to exit code 3."""


def _load_spec(ref: str) -> corpus_mod.CorpusSpec:
    builtins = corpus_mod.builtin_specs()
    if ref in builtins:
        return builtins[ref]
    path = Path(ref)
    if not path.exists():
        raise DataError(
            f"spec {ref!r} is neither a built-in name {sorted(builtins)} "
            "nor an existing file"
        )
    try:
        with open(path, encoding="utf-8") as fh:
            return corpus_mod.spec_from_record(json.load(fh))
    except (ValueError, KeyError) as exc:
        raise DataError(f"bad corpus spec {ref!r}: {exc}") from exc


def _read_corpus(path: str):
    if not Path(path).exists():
        raise DataError(f"corpus file not found: {path}")
    try:
        return read_corpus(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _read_corpus_with_schema(path: str, spec_ref: str):
    spec = _load_spec(spec_ref)
    docs = _read_corpus(path)
    violations = []
    for doc in docs:
        violations.extend(validate_document(doc, spec.schema))
    if violations:
        raise DataError(
            f"corpus {path} fails validation against {spec.name}: "
            + "; ".join(violations[:5])
        )
    return docs, spec


def _cmd_gen_corpus(args) -> int:
    spec = _load_spec(args.spec)
    if args.seed is not None:
        spec = corpus_mod.with_seed(spec, args.seed)
    docs = corpus_mod.generate_corpus(spec, args.count)
    write_corpus(docs, args.out)
    print(f"wrote {len(docs)} documents to {args.out}")
    return EXIT_OK


def _cmd_pretrain(args) -> int:
    docs, spec = _read_corpus_with_schema(args.corpus, args.spec)
    config = TrainConfig(seed=args.seed)
    params, log = pretrain(docs, spec.schema, config)
    save_checkpoint(params, args.out)
    final = log[-1] if log else None
    if final:
        print(
            f"pretrained on {len(docs)} docs; "
            f"final val AUC {final.val_auc:.4f} -> {args.out}"
        )
    return EXIT_OK


def _cmd_infer_phrases(args) -> int:
    docs, spec = _read_corpus_with_schema(args.corpus, args.spec)
    params = _load_ckpt(args.ckpt)
    config = infer_config(docs, spec.schema, params, k=args.k, theta=args.theta)
    if args.out:
        save_config(config, args.out)
    for field_name in spec.schema.names():
        ranked = config.field_phrases(field_name)
        shown = ", ".join(f"{text!r} ({imp:.3f})" for text, imp in ranked)
        print(f"{field_name}: {shown if shown else '(no phrases)'}")
    return EXIT_OK


def _load_ckpt(path: str):
    if not Path(path).exists():
        raise DataError(f"checkpoint not found: {path}")
    try:
        return load_checkpoint(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _resolve_config(args, spec, docs, params):
    if args.config:
        if not Path(args.config).exists():
            raise DataError(f"key-phrase config not found: {args.config}")
        config = load_config(args.config)
    else:
        config = infer_config(docs, spec.schema, params, k=args.k, theta=args.theta)
    config = config.with_pairs(
        build_pairs(spec.schema, canonical_strategy(args.strategy))
    )
    if getattr(args, "human", None):
        human = load_human_config(args.human, spec.schema)
        config = merge_configs(config, human)
    return config


def _cmd_augment(args) -> int:
    docs, spec = _read_corpus_with_schema(args.corpus, args.spec)
    params = _load_ckpt(args.ckpt)
    config = _resolve_config(args, spec, docs, params)
    positives = [
        c
        for doc in docs
        for c in build_candidates(doc, spec.schema)
        if c.label_for is not None
    ]
    examples, report = generate(
        positives, config, lambda c: neighbor_importance(c, params), spec.schema
    )
    record = report.to_record()
    record["examples"] = len(examples)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.dump_examples:
        with open(args.dump_examples, "w", encoding="utf-8") as fh:
            for ex in examples:
                fh.write(
                    json.dumps(
                        {
                            "source_doc": ex.source_doc_id,
                            "source_field": ex.swap.source_field,
                            "label_for": ex.label_for,
                            "source_phrase": ex.swap.source_phrase,
                            "target_phrase": ex.swap.target_phrase,
                            "neighbors": [
                                [n.text, n.rel_pos[0], n.rel_pos[1]]
                                for n in ex.candidate.neighbors
                            ],
                        },
                        sort_keys=True,
                    )
                )
                fh.write("\n")
    print(
        f"{len(examples)} synthetic examples "
        f"(no_match {record['totals']['no_match']}, "
        f"unchanged {record['totals']['unchanged']}, "
        f"insufficient {record['totals']['insufficient_slots']}) -> {args.report}"
    )
    return EXIT_OK


def _cmd_train(args) -> int:
    docs, spec = _read_corpus_with_schema(args.corpus, args.spec)
    init = _load_ckpt(args.init)
    config = TrainConfig(
        seed=args.seed,
        disable_downweight=args.no_downweight,
        disable_finetune=args.no_finetune,
    )
    if args.baseline:
        augmentation_fn = None
    else:
        phrase_config = _resolve_config(args, spec, docs, init)
        augmentation_fn = make_augmentation_fn(spec.schema, phrase_config, init)
    ensemble, logs = train_ensemble(
        docs, spec.schema, augmentation_fn, init, config, args.members
    )
    save_ensemble(ensemble, args.out, logs)
    print(f"trained {args.members}-member ensemble on {len(docs)} docs -> {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    docs, spec = _read_corpus_with_schema(args.test, args.spec)
    try:
        ensemble = load_ensemble(args.ensemble)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load ensemble from {args.ensemble}: {exc}") from exc
    result = evaluate_ensemble(ensemble, docs, spec.schema)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(result.to_record(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for field_name, f1 in sorted(result.per_field.items()):
        shown = "excluded (no positives)" if f1 is None else f"{f1:.4f}"
        print(f"{field_name}: {shown}")
    print(f"macro max-F1: {result.macro:.4f}")
    return EXIT_OK


def _cmd_learning_curve(args) -> int:
    spec = _load_spec(args.domain)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    methods = [m for m in args.methods.split(",") if m]
    report = learning_curve(
        spec,
        sizes,
        methods,
        pool_count=args.pool_count,
        test_count=args.test_count,
        pretrain_count=args.pretrain_count,
        n_members=args.members,
        seed=args.seed,
        jobs=args.jobs,
    )
    save_report(report, args.out)
    if args.curves_dir:
        write_curve_files(report, args.curves_dir)
    print(report.table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldswap",
        description="Key-phrase swap augmentation experiments on synthetic form corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic corpus file")
    p.add_argument("--spec", required=True, help="built-in spec name or spec JSON file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_corpus)

    p = sub.add_parser("pretrain", help="train the out-of-domain reference model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--spec", required=True, help="spec (schema) the corpus was generated from")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_pretrain)

    p = sub.add_parser("infer-phrases", help="infer ranked key phrases per field")
    p.add_argument("--corpus", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_infer_phrases)

    p = sub.add_parser("augment", help="dry-run swap generation and report counts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--config", default=None, help="key-phrase config (inferred when omitted)")
    p.add_argument("--strategy", default="t2t", choices=["f2f", "t2t", "a2a"])
    p.add_argument("--ckpt", required=True)
    p.add_argument("--human", default=None)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--report", required=True)
    p.add_argument("--dump-examples", default=None)
    p.set_defaults(fn=_cmd_augment)

    p = sub.add_parser("train", help="train an extraction ensemble")
    p.add_argument("--corpus", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--strategy", default="t2t", choices=["f2f", "t2t", "a2a"])
    p.add_argument("--human", default=None)
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--no-downweight", action="store_true")
    p.add_argument("--no-finetune", action="store_true")
    p.add_argument("--init", required=True, help="pretrained checkpoint")
    p.add_argument("--members", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate an ensemble on a test corpus")
    p.add_argument("--ensemble", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("learning-curve", help="run the median-of-27 grid")
    p.add_argument("--domain", required=True)
    p.add_argument("--sizes", default="10,25,50,100,250")
    p.add_argument("--methods", default="baseline,t2t")
    p.add_argument("--pool-count", type=int, default=None)
    p.add_argument("--test-count", type=int, default=200)
    p.add_argument("--pretrain-count", type=int, default=400)
    p.add_argument("--members", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--curves-dir", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_learning_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

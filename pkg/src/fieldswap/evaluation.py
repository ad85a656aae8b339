"""End-to-end extraction metrics and the learning-curve harness.

A field's score is the maximum F1 along its precision-recall curve over
all candidates of the field's base type; the headline number is the
unweighted macro average across fields (fields without test positives
are excluded and recorded).  The harness repeats every (train size,
method) experiment over 3 document collections x 3 split seeds x 3 init
seeds and reports the median of the 27 macro scores.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path

import numpy as np

from .candidates import build_candidates
from .corpus import CorpusSpec, builtin_specs, generate_corpus, with_seed
from .documents import Document, FieldSchema
from .importance import neighbor_importance
from .keyphrases import KeyPhraseConfig, human_expert_config, infer_config
from .model import ModelParams, featurize
from .swap import build_pairs, generate
from .training import (
    Ensemble,
    TrainConfig,
    derive_seed,
    pretrain,
    train_ensemble,
)

METHOD_NAMES = (
    "baseline",
    "f2f",
    "t2t",
    "a2a",
    "human",
    "t2t_no_downweight",
    "t2t_no_finetune",
)


def max_f1(scores, labels) -> float:
    """Maximum F1 over the precision-recall curve.

    Thresholds sweep the distinct score values; candidates tied at a
    threshold flip together.  Requires at least one positive label.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("max_f1 needs at least one positive instance")
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    tp = np.cumsum(labels[order].astype(np.float64))
    fp = np.cumsum((~labels[order]).astype(np.float64))
    last_of_block = np.append(np.nonzero(np.diff(sorted_scores))[0], len(scores) - 1)
    f1 = 2.0 * tp[last_of_block] / (tp[last_of_block] + fp[last_of_block] + n_pos)
    return float(f1.max())


def macro_f1(per_field: dict[str, float | None]) -> float:
    values = [v for v in per_field.values() if v is not None]
    if not values:
        raise ValueError("macro_f1 over zero included fields")
    return float(np.mean(values))


@dataclass
class EvalResult:
    per_field: dict[str, float | None]
    macro: float
    excluded: tuple[str, ...]

    def to_record(self) -> dict:
        return {
            "per_field": dict(sorted(self.per_field.items())),
            "macro_f1": self.macro,
            "excluded_fields": list(self.excluded),
        }


def evaluate_ensemble(
    ensemble: Ensemble, docs: list[Document], schema: FieldSchema
) -> EvalResult:
    cands = [c for doc in docs for c in build_candidates(doc, schema)]
    probs = ensemble.score_fields(featurize(cands)) if cands else np.zeros((0, 0))
    types = np.array([c.base_type for c in cands]) if cands else np.array([])
    labels = np.array([c.label_for or "" for c in cands]) if cands else np.array([])
    per_field: dict[str, float | None] = {}
    excluded = []
    for spec in schema.fields:
        mask = types == spec.base_type
        field_labels = labels[mask] == spec.name
        if not field_labels.any():
            per_field[spec.name] = None
            excluded.append(spec.name)
            continue
        idx = ensemble.members[0].field_index(spec.name)
        per_field[spec.name] = max_f1(probs[mask, idx], field_labels)
    return EvalResult(per_field, macro_f1(per_field), tuple(excluded))


# ---------------------------------------------------------------------------
# Learning-curve harness.


def method_plan(method: str) -> dict:
    """Strategy / config source / ablation flags for a method name."""
    plans = {
        "baseline": dict(strategy=None, source="none"),
        "f2f": dict(strategy="field_to_field", source="auto"),
        "t2t": dict(strategy="type_to_type", source="auto"),
        "a2a": dict(strategy="all_to_all", source="auto"),
        "human": dict(strategy=None, source="human"),
        "t2t_no_downweight": dict(
            strategy="type_to_type", source="auto", disable_downweight=True
        ),
        "t2t_no_finetune": dict(
            strategy="type_to_type", source="auto", disable_finetune=True
        ),
    }
    if method not in plans:
        raise ValueError(f"unknown method {method!r}; expected one of {METHOD_NAMES}")
    return plans[method]


def make_augmentation_fn(schema: FieldSchema, config: KeyPhraseConfig, importance_model: ModelParams):
    """Augmentation callback for the trainer: positives of the given
    documents swapped per the key-phrase config."""

    def importance(cand):
        return neighbor_importance(cand, importance_model)

    def fn(docs):
        positives = [
            c
            for doc in docs
            for c in build_candidates(doc, schema)
            if c.label_for is not None
        ]
        examples, _ = generate(positives, config, importance, schema)
        return examples

    return fn


@dataclass
class _HarnessContext:
    spec: CorpusSpec
    pool: list[Document]
    test_docs: list[Document]
    pretrained: ModelParams
    base_config: TrainConfig
    auto_configs: dict[tuple[int, int], KeyPhraseConfig]
    human_config: KeyPhraseConfig
    seed: int
    n_members: int


_CTX: _HarnessContext | None = None


def _init_worker(ctx: _HarnessContext) -> None:
    global _CTX
    _CTX = ctx


def _cell_config(ctx, size: int, collection: int, method: str) -> KeyPhraseConfig | None:
    plan = method_plan(method)
    if plan["source"] == "none":
        return None
    if plan["source"] == "human":
        return ctx.human_config
    config = ctx.auto_configs[(size, collection)]
    return config.with_pairs(build_pairs(ctx.spec.schema, plan["strategy"]))


def _run_task(task: tuple[int, str, int, tuple[int, ...]]) -> list[dict]:
    """All 9 (split, init) cells of one (size, method, collection)."""
    ctx = _CTX
    size, method, collection, doc_idx = task
    docs = [ctx.pool[i] for i in doc_idx]
    schema = ctx.spec.schema
    plan = method_plan(method)
    config = _cell_config(ctx, size, collection, method)
    augmentation_fn = (
        make_augmentation_fn(schema, config, ctx.pretrained)
        if config is not None
        else None
    )
    results = []
    for split_axis in range(3):
        for init_axis in range(3):
            cfg = dc_replace(
                ctx.base_config,
                split_seed=derive_seed(ctx.seed, "split", size, collection, split_axis),
                init_seed=derive_seed(ctx.seed, "init", size, collection, init_axis),
                disable_downweight=plan.get("disable_downweight", False),
                disable_finetune=plan.get("disable_finetune", False),
            )
            ensemble, _ = train_ensemble(
                docs, schema, augmentation_fn, ctx.pretrained, cfg, ctx.n_members
            )
            evaluation = evaluate_ensemble(ensemble, ctx.test_docs, schema)
            results.append(
                {
                    "size": size,
                    "method": method,
                    "collection": collection,
                    "split_axis": split_axis,
                    "init_axis": init_axis,
                    "macro_f1": evaluation.macro,
                    "per_field": evaluation.per_field,
                }
            )
    return results


@dataclass
class ExperimentReport:
    domain: str
    sizes: tuple[int, ...]
    methods: tuple[str, ...]
    cells: list[dict]
    medians: dict[str, float]
    per_field_medians: dict[str, dict[str, float | None]]
    meta: dict

    @staticmethod
    def key(size: int, method: str) -> str:
        return f"{size}|{method}"

    def median(self, size: int, method: str) -> float:
        return self.medians[self.key(size, method)]

    def to_record(self) -> dict:
        return {
            "version": "fieldswap-report-v1",
            "domain": self.domain,
            "sizes": list(self.sizes),
            "methods": list(self.methods),
            "cells": self.cells,
            "medians": self.medians,
            "per_field_medians": self.per_field_medians,
            "meta": self.meta,
        }

    def table(self) -> str:
        lines = [f"domain: {self.domain}   (median macro max-F1 over 27 runs)"]
        header = "size  " + "".join(f"{m:>18}" for m in self.methods)
        lines.append(header)
        for size in self.sizes:
            row = f"{size:<6}"
            for method in self.methods:
                row += f"{self.median(size, method):>18.4f}"
            lines.append(row)
        return "\n".join(lines)


def _collections(pool_size: int, size: int, seed: int) -> list[tuple[int, ...]]:
    """Three training collections per size, disjoint when the pool allows."""
    if 3 * size <= pool_size:
        rng = np.random.default_rng(
            np.random.SeedSequence((derive_seed(seed, "collections", size), 0xC0))
        )
        perm = rng.permutation(pool_size)
        return [tuple(int(j) for j in perm[i * size : (i + 1) * size]) for i in range(3)]
    out = []
    for i in range(3):
        rng = np.random.default_rng(
            np.random.SeedSequence((derive_seed(seed, "collections", size, i), 0xC1))
        )
        out.append(tuple(int(j) for j in rng.choice(pool_size, size, replace=False)))
    return out


def learning_curve(
    spec: CorpusSpec,
    sizes: list[int],
    methods: list[str],
    *,
    pool_count: int | None = None,
    test_count: int = 200,
    pretrain_count: int = 400,
    k: int = 3,
    theta: float = 0.2,
    base_config: TrainConfig | None = None,
    n_members: int = 3,
    seed: int = 0,
    jobs: int = 1,
    pretrained: ModelParams | None = None,
) -> ExperimentReport:
    """Median-of-27 learning curve on a held-out test set.

    Deterministic given its arguments; the jobs count only parallelizes
    independent grid cells and never changes results.
    """
    sizes = [int(s) for s in sizes]
    methods = list(methods)
    for method in methods:
        method_plan(method)
    if pool_count is None:
        pool_count = 3 * max(sizes)
    if pool_count < max(sizes):
        raise ValueError(
            f"pool of {pool_count} documents cannot cover train size {max(sizes)}"
        )
    pool = generate_corpus(with_seed(spec, derive_seed(seed, "pool", spec.seed)), pool_count)
    test_docs = generate_corpus(
        with_seed(spec, derive_seed(seed, "test", spec.seed)), test_count
    )
    if pretrained is None:
        pretrained = pretrain_reference_model(seed=seed, count=pretrain_count)

    base = base_config or TrainConfig()
    collections = {size: _collections(pool_count, size, seed) for size in sizes}
    auto_configs: dict[tuple[int, int], KeyPhraseConfig] = {}
    needs_auto = any(method_plan(m)["source"] == "auto" for m in methods)
    for size in sizes:
        for ci, doc_idx in enumerate(collections[size]):
            if needs_auto:
                docs = [pool[i] for i in doc_idx]
                auto_configs[(size, ci)] = infer_config(
                    docs, spec.schema, pretrained, k=k, theta=theta
                )
    ctx = _HarnessContext(
        spec=spec,
        pool=pool,
        test_docs=test_docs,
        pretrained=pretrained,
        base_config=base,
        auto_configs=auto_configs,
        human_config=human_expert_config(spec),
        seed=seed,
        n_members=n_members,
    )
    tasks = [
        (size, method, ci, collections[size][ci])
        for size in sizes
        for method in methods
        for ci in range(3)
    ]
    if jobs <= 1:
        _init_worker(ctx)
        chunks = [_run_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(ctx,)
        ) as pool_exec:
            chunks = list(pool_exec.map(_run_task, tasks))

    cells = [cell for chunk in chunks for cell in chunk]
    cells.sort(
        key=lambda c: (
            c["size"],
            c["method"],
            c["collection"],
            c["split_axis"],
            c["init_axis"],
        )
    )
    medians = {}
    per_field_medians: dict[str, dict[str, float | None]] = {}
    for size in sizes:
        for method in methods:
            group = [
                c for c in cells if c["size"] == size and c["method"] == method
            ]
            key = ExperimentReport.key(size, method)
            medians[key] = float(np.median([c["macro_f1"] for c in group]))
            fields = {}
            for fname in spec.schema.names():
                vals = [
                    c["per_field"][fname]
                    for c in group
                    if c["per_field"].get(fname) is not None
                ]
                fields[fname] = float(np.median(vals)) if vals else None
            per_field_medians[key] = fields
    return ExperimentReport(
        domain=spec.name,
        sizes=tuple(sizes),
        methods=tuple(methods),
        cells=cells,
        medians=medians,
        per_field_medians=per_field_medians,
        meta={
            "pool_count": pool_count,
            "test_count": test_count,
            "n_members": n_members,
            "seed": seed,
            "k": k,
            "theta": theta,
        },
    )


def pretrain_reference_model(
    seed: int = 0, count: int = 1500, max_epochs: int = 60
) -> ModelParams:
    """The out-of-domain pretrained model used for transfer initialization
    and importance measurement.  The pretraining corpus is large relative
    to the few-shot experiments and trains until validation AUC plateaus."""
    ood = builtin_specs()["synth-invoices-ood"]
    docs = generate_corpus(
        with_seed(ood, derive_seed(seed, "pretrain-corpus", ood.seed)), count
    )
    params, _ = pretrain(
        docs,
        ood.schema,
        TrainConfig(seed=derive_seed(seed, "pretrain"), stage2_epochs=max_epochs),
    )
    return params


def save_report(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_record(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_curve_files(report: ExperimentReport, directory) -> None:
    """One CSV per method: train size vs median macro max-F1."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for method in report.methods:
        path = directory / f"curve_{method}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("train_size,median_macro_f1\n")
            for size in report.sizes:
                fh.write(f"{size},{report.median(size, method):.6f}\n")

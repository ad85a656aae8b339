"""Two-stage training schedule with downweighting, early stopping, and
a small output-averaging ensemble.

Stage one trains on original plus synthetic examples (synthetics carry a
reduced loss weight); stage two fine-tunes on the originals only so the
model sheds whatever out-of-distribution habits bad synthetics taught
it.  Both stages stop early on validation AUC-ROC and hand back the best
checkpoint.  With no synthetic examples the schedule collapses to the
stage-two baseline, bit for bit.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np

from .candidates import build_candidates
from .documents import Document, FieldSchema
from .model import (
    CandidateBatch,
    ModelParams,
    featurize,
    init_params,
    load_checkpoint,
    loss_and_grads_arrays,
    predict_logits,
    save_checkpoint,
    transfer_init,
)
from .swap import SyntheticExample

from . import autograd as ag


def derive_seed(*parts) -> int:
    """Stable child seed from ints and strings."""
    entropy = [
        p if isinstance(p, int) else zlib.crc32(str(p).encode("utf-8"))
        for p in parts
    ]
    seq = np.random.SeedSequence(entropy)
    return int(seq.generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    dropout: float = 0.1
    batch_size: int = 128
    downweight: float = 0.4
    stage1_epochs: int = 10
    stage2_epochs: int = 25
    patience: int = 3
    val_fraction: float = 0.2
    optimizer: str = "adam"  # plain "sgd" underfits badly at this rate
    seed: int = 0
    split_seed: int | None = None
    init_seed: int | None = None
    disable_downweight: bool = False
    disable_finetune: bool = False

    def __post_init__(self):
        if not 0.0 < self.downweight <= 1.0:
            raise ValueError("downweight must be in (0, 1]")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def resolved_split_seed(self) -> int:
        return self.split_seed if self.split_seed is not None else derive_seed(self.seed, "split")

    def resolved_init_seed(self) -> int:
        return self.init_seed if self.init_seed is not None else derive_seed(self.seed, "init")


@dataclass(frozen=True)
class LogEntry:
    stage: str
    epoch: int
    train_loss: float
    val_auc: float

    def to_record(self) -> dict:
        return {
            "stage": self.stage,
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_auc": self.val_auc,
        }


# ---------------------------------------------------------------------------
# Training pairs: one row per (candidate, same-type field).


@dataclass
class PairSet:
    batch: CandidateBatch
    field_idx: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    doc_ids: list[str]

    def __len__(self) -> int:
        return len(self.field_idx)

    def subset(self, index) -> "PairSet":
        index = np.asarray(index)
        return PairSet(
            self.batch.subset(index),
            self.field_idx[index],
            self.labels[index],
            self.weights[index],
            [self.doc_ids[i] for i in np.nonzero(index)[0]]
            if index.dtype == bool
            else [self.doc_ids[int(i)] for i in index],
        )

    @staticmethod
    def concat(a: "PairSet", b: "PairSet") -> "PairSet":
        return PairSet(
            CandidateBatch(
                np.concatenate([a.batch.ids, b.batch.ids]),
                np.concatenate([a.batch.rel_ids, b.batch.rel_ids]),
                np.concatenate([a.batch.mask, b.batch.mask]),
                np.concatenate([a.batch.pos, b.batch.pos]),
            ),
            np.concatenate([a.field_idx, b.field_idx]),
            np.concatenate([a.labels, b.labels]),
            np.concatenate([a.weights, b.weights]),
            a.doc_ids + b.doc_ids,
        )


def pairs_from_documents(
    docs: list[Document], schema: FieldSchema, params: ModelParams
) -> PairSet:
    """Candidates crossed with every same-type field; label 1 on the
    candidate's own field."""
    cands = []
    fields = []
    labels = []
    doc_ids = []
    by_type: dict[str, list[int]] = {}
    for i, spec in enumerate(schema.fields):
        by_type.setdefault(spec.base_type, []).append(i)
    for doc in docs:
        for cand in build_candidates(doc, schema):
            for fi in by_type.get(cand.base_type, ()):
                cands.append(cand)
                fields.append(fi)
                labels.append(1.0 if schema.fields[fi].name == cand.label_for else 0.0)
                doc_ids.append(doc.doc_id)
    if not cands:
        return _empty_pairs(params)
    remap = _schema_to_model_index(schema, params)
    return PairSet(
        featurize(cands, params.dims),
        np.array([remap[fi] for fi in fields], dtype=np.int64),
        np.array(labels),
        np.ones(len(labels)),
        doc_ids,
    )


def pairs_from_synthetics(
    synthetics: list[SyntheticExample],
    schema: FieldSchema,
    params: ModelParams,
    weight: float,
) -> PairSet:
    """Synthetic examples enter training as positives of their target
    field only, at the given loss weight."""
    if not synthetics:
        return _empty_pairs(params)
    cands = [s.candidate for s in synthetics]
    field_idx = np.array(
        [params.field_index(s.candidate.label_for) for s in synthetics],
        dtype=np.int64,
    )
    return PairSet(
        featurize(cands, params.dims),
        field_idx,
        np.ones(len(cands)),
        np.full(len(cands), float(weight)),
        [s.source_doc_id for s in synthetics],
    )


def _empty_pairs(params: ModelParams) -> PairSet:
    from .candidates import N_MAX

    return PairSet(
        CandidateBatch(
            np.zeros((0, N_MAX), dtype=np.int64),
            np.zeros((0, N_MAX), dtype=np.int64),
            np.zeros((0, N_MAX), dtype=bool),
            np.zeros((0, 2)),
        ),
        np.zeros(0, dtype=np.int64),
        np.zeros(0),
        np.zeros(0),
        [],
    )


def _schema_to_model_index(schema: FieldSchema, params: ModelParams) -> dict[int, int]:
    return {
        i: params.field_index(spec.name) for i, spec in enumerate(schema.fields)
    }


# ---------------------------------------------------------------------------
# Metrics.


def auc_roc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-statistic AUC with midranks for ties; degenerate label sets
    (single class) score 0.5."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    n_pos = float(labels.sum())
    n_neg = float(len(labels) - labels.sum())
    if n_pos == 0.0 or n_neg == 0.0:
        return 0.5
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(ranks[labels == 1.0].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _validation_auc(params: ModelParams, val: PairSet) -> float:
    if len(val) == 0:
        return 0.5
    logits = predict_logits(val.batch, val.field_idx, params)
    return auc_roc(ag.sigmoid_values(logits), val.labels)


# ---------------------------------------------------------------------------
# Optimization stages.


class _Optimizer:
    """Minibatch update rule over the named parameter arrays."""

    def __init__(self, config: TrainConfig, params: ModelParams):
        self.lr = config.learning_rate
        self.kind = config.optimizer
        if self.kind == "adam":
            self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
            self.t = 0
            self.m = {k: np.zeros_like(v) for k, v in params.arrays().items()}
            self.v = {k: np.zeros_like(v) for k, v in params.arrays().items()}

    def step(self, params: ModelParams, grads: dict) -> None:
        if self.kind == "sgd":
            for name, grad in grads.items():
                getattr(params, name)[...] -= self.lr * grad
            return
        self.t += 1
        scale = self.lr * np.sqrt(1.0 - self.beta2**self.t) / (1.0 - self.beta1**self.t)
        for name, grad in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            getattr(params, name)[...] -= scale * m / (np.sqrt(v) + self.eps)


def _sgd_stage(
    params: ModelParams,
    train: PairSet,
    val: PairSet,
    max_epochs: int,
    config: TrainConfig,
    rng: np.random.Generator,
    stage_name: str,
) -> tuple[ModelParams, list[LogEntry]]:
    """Minibatch training with early stopping on validation AUC-ROC;
    returns the best-epoch checkpoint."""
    log: list[LogEntry] = []
    best = params.copy()
    best_auc = -np.inf
    best_epoch = 0
    if len(train) == 0:
        return best, log
    d_pool = params.dims.d
    optimizer = _Optimizer(config, params)
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(len(train))
        total_loss = 0.0
        total_weight = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            sub = train.subset(idx)
            mask = None
            if config.dropout > 0.0:
                keep = rng.random((len(idx), d_pool)) >= config.dropout
                mask = keep / (1.0 - config.dropout)
            loss, grads = loss_and_grads_arrays(
                sub.batch, sub.field_idx, sub.labels, sub.weights, params, mask
            )
            w = float(sub.weights.sum())
            total_loss += loss * w
            total_weight += w
            optimizer.step(params, grads)
        val_auc = _validation_auc(params, val)
        log.append(
            LogEntry(stage_name, epoch, total_loss / max(total_weight, 1e-12), val_auc)
        )
        if val_auc > best_auc:
            best_auc = val_auc
            best_epoch = epoch
            best = params.copy()
        elif epoch - best_epoch >= config.patience:
            break
    return best, log


def split_documents(
    docs: list[Document], config: TrainConfig
) -> tuple[list[Document], list[Document]]:
    """Seeded train/validation split by document."""
    rng = np.random.default_rng(
        np.random.SeedSequence((config.resolved_split_seed(), 0x5B17))
    )
    order = rng.permutation(len(docs))
    n_val = max(1, int(round(config.val_fraction * len(docs))))
    n_val = min(n_val, len(docs) - 1)
    val_idx = set(int(i) for i in order[:n_val])
    train = [d for i, d in enumerate(docs) if i not in val_idx]
    val = [d for i, d in enumerate(docs) if i in val_idx]
    return train, val


def train_two_stage(
    docs: list[Document],
    schema: FieldSchema,
    augmented: list[SyntheticExample],
    init: ModelParams,
    config: TrainConfig,
) -> tuple[ModelParams, list[LogEntry]]:
    """The full schedule on one train/validation split.

    Synthetic examples sourced from validation documents are dropped so
    nothing derived from validation data is ever trained on.  An empty
    augmentation set skips stage one entirely, which makes the result
    identical to the no-augmentation baseline for the same seeds.
    """
    if len(docs) < 2:
        raise ValueError("need at least 2 documents to hold out validation data")
    train_docs, val_docs = split_documents(docs, config)
    train_doc_ids = {d.doc_id for d in train_docs}
    params = init.copy()
    orig_train = pairs_from_documents(train_docs, schema, params)
    val = pairs_from_documents(val_docs, schema, params)
    kept = [s for s in augmented if s.source_doc_id in train_doc_ids]
    init_seed = config.resolved_init_seed()
    log: list[LogEntry] = []

    if kept:
        weight = 1.0 if config.disable_downweight else config.downweight
        aug = pairs_from_synthetics(kept, schema, params, weight)
        stage1 = PairSet.concat(orig_train, aug)
        rng1 = np.random.default_rng(
            np.random.SeedSequence((derive_seed(init_seed, "stage1"), 0x51))
        )
        params, log1 = _sgd_stage(
            params, stage1, val, config.stage1_epochs, config, rng1, "stage1"
        )
        log.extend(log1)
        if config.disable_finetune:
            return params, log

    rng2 = np.random.default_rng(
        np.random.SeedSequence((derive_seed(init_seed, "stage2"), 0x52))
    )
    params, log2 = _sgd_stage(
        params, orig_train, val, config.stage2_epochs, config, rng2, "stage2"
    )
    log.extend(log2)
    return params, log


def pretrain(
    docs: list[Document], schema: FieldSchema, config: TrainConfig
) -> tuple[ModelParams, list[LogEntry]]:
    """Single-stage training from scratch on an out-of-domain corpus; the
    result seeds both transfer initialization and importance measurement."""
    if not docs:
        raise ValueError("pretraining corpus is empty")
    init = init_params(schema, config.resolved_init_seed())
    return train_two_stage(docs, schema, [], init, config)


# ---------------------------------------------------------------------------
# Ensemble.


@dataclass
class Ensemble:
    members: tuple[ModelParams, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        self.members = tuple(self.members)

    @property
    def field_names(self) -> tuple[str, ...]:
        return self.members[0].field_names

    @property
    def field_types(self) -> tuple[str, ...]:
        return self.members[0].field_types

    def score_fields(self, batch: CandidateBatch) -> np.ndarray:
        """Mean member probability for every field; shape (B, n_fields)."""
        from .model import score_fields

        probs = [score_fields(batch, m) for m in self.members]
        return np.mean(probs, axis=0)


def train_ensemble(
    docs: list[Document],
    schema: FieldSchema,
    augmentation_fn,
    init: ModelParams,
    config: TrainConfig,
    n_members: int = 3,
) -> tuple[Ensemble, list[list[LogEntry]]]:
    """n members trained with member-derived split and init seeds; the
    augmentation function runs once over the full training document list
    and per-member validation filtering happens inside the schedule."""
    if n_members < 1:
        raise ValueError("n_members must be >= 1")
    augmented = list(augmentation_fn(docs)) if augmentation_fn is not None else []
    split_base = config.resolved_split_seed()
    init_base = config.resolved_init_seed()
    members = []
    logs = []
    for i in range(n_members):
        member_config = replace(
            config,
            split_seed=derive_seed(split_base, i),
            init_seed=derive_seed(init_base, i),
        )
        member_init = transfer_init(init, schema, member_config.init_seed)
        params, log = train_two_stage(docs, schema, augmented, member_init, member_config)
        members.append(params)
        logs.append(log)
    return Ensemble(tuple(members)), logs


def save_ensemble(ensemble: Ensemble, directory, logs=None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": "fieldswap-ensemble-v1",
        "members": [],
        "field_names": list(ensemble.field_names),
    }
    for i, member in enumerate(ensemble.members):
        name = f"member_{i}.npz"
        save_checkpoint(member, directory / name)
        manifest["members"].append({"path": name, "seed": member.seed})
    with open(directory / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if logs is not None:
        with open(directory / "training_log.jsonl", "w", encoding="utf-8") as fh:
            for i, log in enumerate(logs):
                for entry in log:
                    fh.write(json.dumps({"member": i, **entry.to_record()}, sort_keys=True))
                    fh.write("\n")


def load_ensemble(directory) -> Ensemble:
    directory = Path(directory)
    with open(directory / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("version") != "fieldswap-ensemble-v1":
        raise ValueError(f"unsupported ensemble manifest in {directory}")
    members = tuple(
        load_checkpoint(directory / m["path"]) for m in manifest["members"]
    )
    return Ensemble(members)

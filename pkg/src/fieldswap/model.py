"""Candidate classifier: neighbor set encoder plus per-field binary heads.

Each neighbor token is embedded by concatenating a hashed text embedding
with an encoding of its position relative to the candidate.  A single
self-attention block with a residual connection contextualizes the set,
max-pooling over non-PAD slots yields the neighborhood encoding, and a
per-field affine head over (neighborhood encoding, candidate position
encoding) produces a probability.  Everything is float64 and fully
deterministic given seeds.
"""

from __future__ import annotations

import io
import json
import zlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import autograd as ag
from .candidates import N_MAX, Candidate
from .documents import FieldSchema
from .textnorm import normalize_token

CHECKPOINT_VERSION = "fieldswap-ckpt-v1"

_PARAM_NAMES = (
    "token_emb", "rel_emb", "wq", "wk", "wv",
    "cand_w", "cand_b", "heads_w", "heads_b",
)

# Relative positions are embedded per displacement bucket rather than
# mapped affinely: locality (same line vs adjacent line, near-left vs
# far-left) must be expressible, and a linear map of raw displacement
# grows with distance instead.
_DX_EDGES = np.array(
    [-0.45, -0.25, -0.12, -0.05, -0.012, 0.012, 0.05, 0.12, 0.25, 0.45]
)
_DY_EDGES = np.array([-0.30, -0.13, -0.055, -0.012, 0.012, 0.055, 0.13, 0.30])

N_POS_BUCKETS = (len(_DX_EDGES) + 1) * (len(_DY_EDGES) + 1)


def position_bucket(rel: np.ndarray) -> np.ndarray:
    """Bucket index for displacement pairs; rel has shape (..., 2)."""
    dx_bin = np.digitize(rel[..., 0], _DX_EDGES)
    dy_bin = np.digitize(rel[..., 1], _DY_EDGES)
    return dx_bin * (len(_DY_EDGES) + 1) + dy_bin


@dataclass(frozen=True)
class ModelDims:
    vocab: int = 2048
    d_text: int = 24
    d_pos: int = 8
    d_cand: int = 8

    @property
    def d(self) -> int:
        return self.d_text + self.d_pos

    @property
    def d_head(self) -> int:
        return self.d + self.d_cand


@dataclass
class ModelParams:
    dims: ModelDims
    field_names: tuple[str, ...]
    field_types: tuple[str, ...]
    seed: int
    token_emb: np.ndarray
    rel_emb: np.ndarray
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    cand_w: np.ndarray
    cand_b: np.ndarray
    heads_w: np.ndarray
    heads_b: np.ndarray
    _field_index: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._field_index = {name: i for i, name in enumerate(self.field_names)}

    def field_index(self, name: str) -> int:
        try:
            return self._field_index[name]
        except KeyError:
            raise KeyError(f"model has no head for field {name!r}") from None

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_NAMES}

    def copy(self) -> "ModelParams":
        return ModelParams(
            dims=self.dims,
            field_names=self.field_names,
            field_types=self.field_types,
            seed=self.seed,
            **{name: getattr(self, name).copy() for name in _PARAM_NAMES},
        )

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays().values())


def hash_token(text: str, vocab: int) -> int:
    """Stable text -> bucket mapping; case and edge punctuation ignored so
    swapped-in phrase tokens hash like their rendered counterparts."""
    return zlib.crc32(normalize_token(text).encode("utf-8")) % vocab


def init_params(
    schema: FieldSchema,
    seed: int,
    dims: ModelDims = ModelDims(),
    head_scale: float = 0.01,
) -> ModelParams:
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x1A17)))
    d = dims.d
    return ModelParams(
        dims=dims,
        field_names=schema.names(),
        field_types=tuple(f.base_type for f in schema.fields),
        seed=seed,
        token_emb=rng.normal(0.0, 0.5, size=(dims.vocab, dims.d_text)),
        rel_emb=rng.normal(0.0, 0.5, size=(N_POS_BUCKETS, dims.d_pos)),
        wq=rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, d)),
        wk=rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, d)),
        wv=rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, d)),
        cand_w=rng.normal(0.0, 1.0, size=(2, dims.d_cand)),
        cand_b=np.zeros(dims.d_cand),
        heads_w=rng.normal(0.0, head_scale, size=(len(schema.fields), dims.d_head)),
        heads_b=np.zeros(len(schema.fields)),
    )


def transfer_init(pretrained: ModelParams, schema: FieldSchema, seed: int) -> ModelParams:
    """Carry the trunk of a pretrained model over to a new schema with
    freshly initialized per-field heads."""
    fresh = init_params(schema, seed, pretrained.dims)
    for name in ("token_emb", "rel_emb", "wq", "wk", "wv", "cand_w", "cand_b"):
        setattr(fresh, name, getattr(pretrained, name).copy())
    return fresh


# ---------------------------------------------------------------------------
# Featurization.


@dataclass
class CandidateBatch:
    """Numeric view of candidates: hashed neighbor ids, displacement
    buckets, PAD mask, and candidate page position."""

    ids: np.ndarray      # (B, N) int
    rel_ids: np.ndarray  # (B, N) int, displacement bucket per slot
    mask: np.ndarray     # (B, N) bool, True = real neighbor
    pos: np.ndarray      # (B, 2)

    def __len__(self) -> int:
        return self.ids.shape[0]

    def subset(self, index) -> "CandidateBatch":
        return CandidateBatch(
            self.ids[index], self.rel_ids[index], self.mask[index], self.pos[index]
        )


def featurize(cands: list[Candidate], dims: ModelDims = ModelDims()) -> CandidateBatch:
    n = len(cands)
    ids = np.zeros((n, N_MAX), dtype=np.int64)
    rel = np.zeros((n, N_MAX, 2))
    mask = np.zeros((n, N_MAX), dtype=bool)
    pos = np.zeros((n, 2))
    for i, cand in enumerate(cands):
        pos[i] = cand.position
        for j, nb in enumerate(cand.neighbors):
            if nb.is_pad:
                continue
            ids[i, j] = hash_token(nb.text, dims.vocab)
            rel[i, j] = nb.rel_pos
            mask[i, j] = True
    return CandidateBatch(ids, position_bucket(rel), mask, pos)


# ---------------------------------------------------------------------------
# Forward graph.


def _param_tensors(params: ModelParams) -> dict[str, ag.Tensor]:
    return {name: ag.Tensor(arr) for name, arr in params.arrays().items()}


def _encoder_forward(pt: dict, batch: CandidateBatch, dims: ModelDims):
    """Shared trunk; returns (per_neighbor, pooled) tensors."""
    emb = ag.embedding(pt["token_emb"], batch.ids)              # (B, N, dt)
    rel_enc = ag.embedding(pt["rel_emb"], batch.rel_ids)        # (B, N, dp)
    x = ag.concat_last(emb, rel_enc)                            # (B, N, d)
    q = ag.linear(x, pt["wq"])
    k = ag.linear(x, pt["wk"])
    v = ag.linear(x, pt["wv"])
    scores = ag.mul_const(ag.bmm(q, ag.transpose_last(k)), 1.0 / np.sqrt(dims.d))
    attn = ag.masked_softmax(scores, batch.mask)
    per_neighbor = ag.add(x, ag.bmm(attn, v))                   # residual
    pooled = ag.masked_max(per_neighbor, batch.mask)            # (B, d)
    return per_neighbor, pooled


def _head_forward(pt: dict, batch: CandidateBatch, pooled, field_idx: np.ndarray):
    cand_enc = ag.add(ag.linear(ag.Tensor(batch.pos), pt["cand_w"]), pt["cand_b"])
    feats = ag.concat_last(pooled, cand_enc)                    # (B, d + dc)
    return ag.rowwise_affine(feats, pt["heads_w"], pt["heads_b"], field_idx)


@dataclass
class NeighborhoodEncoding:
    pooled: np.ndarray        # (d,)
    per_neighbor: np.ndarray  # (N_MAX, d); PAD rows are not meaningful
    mask: np.ndarray          # (N_MAX,) bool


def encode_neighborhood(cand: Candidate, params: ModelParams) -> NeighborhoodEncoding:
    """Post-attention neighbor vectors and their coordinate-wise max over
    non-PAD slots."""
    if cand.non_pad_count() == 0:
        raise ValueError("candidate has an all-PAD neighborhood; nothing to encode")
    batch = featurize([cand], params.dims)
    pt = _param_tensors(params)
    per_neighbor, pooled = _encoder_forward(pt, batch, params.dims)
    return NeighborhoodEncoding(
        pooled=pooled.value[0],
        per_neighbor=per_neighbor.value[0],
        mask=batch.mask[0],
    )


def score(cand: Candidate, field_name: str, params: ModelParams) -> float:
    """P(candidate is an instance of the field), in (0, 1)."""
    idx = params.field_index(field_name)
    if params.field_types[idx] != cand.base_type:
        raise ValueError(
            f"field {field_name!r} has base type {params.field_types[idx]!r} "
            f"but candidate is {cand.base_type!r}"
        )
    return float(score_fields(featurize([cand], params.dims), params)[0, idx])


def score_fields(batch: CandidateBatch, params: ModelParams) -> np.ndarray:
    """Probabilities for every field head at once; shape (B, n_fields)."""
    pt = _param_tensors(params)
    _, pooled = _encoder_forward(pt, batch, params.dims)
    cand_enc = ag.add(ag.linear(ag.Tensor(batch.pos), pt["cand_w"]), pt["cand_b"])
    feats = ag.concat_last(pooled, cand_enc)
    logits = feats.value @ params.heads_w.T + params.heads_b
    return ag.sigmoid_values(logits)


def loss_and_grads(
    batch_items: list[tuple[Candidate, str, int, float]],
    params: ModelParams,
    dropout_mask: np.ndarray | None = None,
):
    """Weighted binary cross-entropy and its gradient for
    (candidate, field, label, weight) items."""
    if not batch_items:
        raise ValueError("empty batch")
    cands = [item[0] for item in batch_items]
    field_idx = np.array(
        [params.field_index(item[1]) for item in batch_items], dtype=np.int64
    )
    labels = np.array([float(item[2]) for item in batch_items])
    weights = np.array([float(item[3]) for item in batch_items])
    batch = featurize(cands, params.dims)
    return loss_and_grads_arrays(
        batch, field_idx, labels, weights, params, dropout_mask
    )


def loss_and_grads_arrays(
    batch: CandidateBatch,
    field_idx: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    params: ModelParams,
    dropout_mask: np.ndarray | None = None,
):
    pt = _param_tensors(params)
    _, pooled = _encoder_forward(pt, batch, params.dims)
    if dropout_mask is not None:
        pooled = ag.mul_const(pooled, dropout_mask)
    logits = _head_forward(pt, batch, pooled, field_idx)
    loss = ag.weighted_bce_with_logits(logits, labels, weights)
    loss.backward()
    grads = {name: pt[name].grad for name in _PARAM_NAMES}
    return float(loss.value), grads


def predict_logits(
    batch: CandidateBatch, field_idx: np.ndarray, params: ModelParams
) -> np.ndarray:
    pt = _param_tensors(params)
    _, pooled = _encoder_forward(pt, batch, params.dims)
    logits = _head_forward(pt, batch, pooled, field_idx)
    return logits.value


# ---------------------------------------------------------------------------
# Checkpoints: npz payload with a JSON metadata entry; exact round-trip.


def save_checkpoint(params: ModelParams, path) -> None:
    meta = {
        "version": CHECKPOINT_VERSION,
        "dims": {
            "vocab": params.dims.vocab,
            "d_text": params.dims.d_text,
            "d_pos": params.dims.d_pos,
            "d_cand": params.dims.d_cand,
        },
        "field_names": list(params.field_names),
        "field_types": list(params.field_types),
        "seed": params.seed,
    }
    buf = io.BytesIO()
    np.savez(buf, meta=np.array(json.dumps(meta, sort_keys=True)), **params.arrays())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> ModelParams:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(
                f"unsupported checkpoint version {meta.get('version')!r} in {path}"
            )
        arrays = {name: data[name] for name in _PARAM_NAMES}
    dims = ModelDims(**meta["dims"])
    return ModelParams(
        dims=dims,
        field_names=tuple(meta["field_names"]),
        field_types=tuple(meta["field_types"]),
        seed=int(meta["seed"]),
        **arrays,
    )

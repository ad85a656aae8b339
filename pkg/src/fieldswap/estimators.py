"""Scikit-learn style wrappers so the pipeline composes with the wider
ecosystem: a fit/transform augmenter and a fit/predict extractor.

X is always a list of Documents.  Hyperparameters follow sklearn
conventions (stored verbatim in __init__, learned state on trailing-
underscore attributes), so ``clone``, ``get_params`` and ``set_params``
behave as expected.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .candidates import build_candidates
from .documents import Document, FieldSchema, validate_document
from .evaluation import evaluate_ensemble, make_augmentation_fn
from .keyphrases import infer_config, load_human_config, merge_configs
from .model import ModelParams, featurize
from .swap import build_pairs, canonical_strategy
from .training import TrainConfig, train_ensemble


class DocumentValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        preview = "; ".join(violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"invalid documents: {preview}{more}")


def check_documents(X, schema: FieldSchema) -> list[Document]:
    """Validate an iterable of documents against a schema; raises
    DocumentValidationError on the first offending batch."""
    docs = list(X)
    violations = []
    for doc in docs:
        if not isinstance(doc, Document):
            raise TypeError(f"expected Document, got {type(doc).__name__}")
        violations.extend(validate_document(doc, schema))
    if violations:
        raise DocumentValidationError(violations)
    return docs


def check_schema(schema) -> FieldSchema:
    if not isinstance(schema, FieldSchema):
        raise TypeError("schema must be a FieldSchema")
    return schema


def _check_fitted(est, attr: str) -> None:
    if not hasattr(est, attr):
        raise NotFittedError(
            f"{type(est).__name__} is not fitted yet; call fit() first"
        )


class FieldSwapAugmenter(BaseEstimator, TransformerMixin):
    """Infers a key-phrase configuration on fit and swaps phrases on
    transform, producing synthetic training examples.

    Parameters
    ----------
    schema : FieldSchema
    importance_model : ModelParams
        Pretrained model used both for phrase inference and for picking
        overflow slots during swaps.
    strategy : one of field_to_field/type_to_type/all_to_all (or
        f2f/t2t/a2a).
    k, theta : top-k cutoff and importance threshold for inference.
    human_config : optional path to a human-expert file merged over the
        automatic configuration.
    """

    def __init__(
        self,
        schema=None,
        importance_model=None,
        strategy="type_to_type",
        k=3,
        theta=0.2,
        human_config=None,
    ):
        self.schema = schema
        self.importance_model = importance_model
        self.strategy = strategy
        self.k = k
        self.theta = theta
        self.human_config = human_config

    def fit(self, X, y=None):
        schema = check_schema(self.schema)
        if not isinstance(self.importance_model, ModelParams):
            raise ValueError("importance_model must be a ModelParams instance")
        docs = check_documents(X, schema)
        strategy = canonical_strategy(self.strategy)
        config = infer_config(
            docs, schema, self.importance_model, k=self.k, theta=self.theta
        )
        config = config.with_pairs(build_pairs(schema, strategy))
        if self.human_config is not None:
            human = load_human_config(self.human_config, schema)
            config = merge_configs(config, human)
        self.config_ = config
        return self

    def transform(self, X):
        _check_fitted(self, "config_")
        docs = check_documents(X, check_schema(self.schema))
        fn = make_augmentation_fn(self.schema, self.config_, self.importance_model)
        return fn(docs)


class FieldExtractor(BaseEstimator):
    """Candidate-based field extraction model with the two-stage swap
    training schedule.

    With ``augmenter=None`` this is the no-augmentation baseline; both
    variants share splits and initialization for a given seed, so score
    differences are attributable to the augmentation alone.
    """

    def __init__(
        self,
        schema=None,
        init_model=None,
        augmenter=None,
        n_members=3,
        learning_rate=0.001,
        dropout=0.1,
        batch_size=128,
        downweight=0.4,
        stage1_epochs=10,
        stage2_epochs=25,
        patience=3,
        val_fraction=0.2,
        disable_downweight=False,
        disable_finetune=False,
        seed=0,
    ):
        self.schema = schema
        self.init_model = init_model
        self.augmenter = augmenter
        self.n_members = n_members
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.batch_size = batch_size
        self.downweight = downweight
        self.stage1_epochs = stage1_epochs
        self.stage2_epochs = stage2_epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.disable_downweight = disable_downweight
        self.disable_finetune = disable_finetune
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            dropout=self.dropout,
            batch_size=self.batch_size,
            downweight=self.downweight,
            stage1_epochs=self.stage1_epochs,
            stage2_epochs=self.stage2_epochs,
            patience=self.patience,
            val_fraction=self.val_fraction,
            seed=self.seed,
            disable_downweight=self.disable_downweight,
            disable_finetune=self.disable_finetune,
        )

    def fit(self, X, y=None):
        schema = check_schema(self.schema)
        if not isinstance(self.init_model, ModelParams):
            raise ValueError(
                "init_model must be a pretrained ModelParams (see pretrain())"
            )
        docs = check_documents(X, schema)
        augmentation_fn = None
        if self.augmenter is not None:
            augmenter = self.augmenter
            if not hasattr(augmenter, "config_"):
                augmenter.fit(docs)
            augmentation_fn = augmenter.transform
        self.ensemble_, self.logs_ = train_ensemble(
            docs,
            schema,
            augmentation_fn,
            self.init_model,
            self._train_config(),
            self.n_members,
        )
        return self

    def predict_proba(self, X):
        """(candidates, probabilities) for all documents; probabilities
        has one column per schema field (same-type fields are the only
        meaningful columns for a candidate)."""
        _check_fitted(self, "ensemble_")
        docs = check_documents(X, check_schema(self.schema))
        cands = [c for doc in docs for c in build_candidates(doc, self.schema)]
        if not cands:
            return [], np.zeros((0, len(self.schema.fields)))
        return cands, self.ensemble_.score_fields(featurize(cands))

    def predict(self, X, threshold=0.5):
        """Extractions as (doc_id, field, token_range, score) tuples for
        candidates scoring at or above the threshold on a same-type field."""
        cands, probs = self.predict_proba(X)
        out = []
        for i, cand in enumerate(cands):
            for j, spec in enumerate(self.schema.fields):
                if spec.base_type != cand.base_type:
                    continue
                if probs[i, j] >= threshold:
                    out.append((cand.doc_id, spec.name, cand.value_range, float(probs[i, j])))
        return out

    def score(self, X, y=None):
        """Macro max-F1 over the given annotated documents."""
        _check_fitted(self, "ensemble_")
        docs = check_documents(X, check_schema(self.schema))
        return evaluate_ensemble(self.ensemble_, docs, self.schema).macro

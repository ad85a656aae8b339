"""Key-phrase swap augmentation for form-field extraction."""

from .candidates import Candidate, Neighbor, annotate, build_candidates
from .corpus import CorpusSpec, TemplateSpec, builtin_specs, generate_corpus
from .documents import (
    Box,
    Document,
    FieldSchema,
    FieldSpan,
    FieldSpec,
    Token,
    read_corpus,
    validate_document,
    write_corpus,
)
from .estimators import FieldExtractor, FieldSwapAugmenter, check_documents
from .evaluation import (
    ExperimentReport,
    evaluate_ensemble,
    learning_curve,
    macro_f1,
    max_f1,
)
from .importance import important_phrases, neighbor_importance
from .keyphrases import KeyPhraseConfig, infer_config, merge_configs
from .model import (
    ModelDims,
    ModelParams,
    encode_neighborhood,
    init_params,
    load_checkpoint,
    save_checkpoint,
    score,
)
from .sparsemax import sparsemax
from .swap import SyntheticExample, build_pairs, generate, replace_phrase
from .training import (
    Ensemble,
    TrainConfig,
    pretrain,
    train_ensemble,
    train_two_stage,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Candidate",
    "CorpusSpec",
    "Document",
    "Ensemble",
    "ExperimentReport",
    "FieldExtractor",
    "FieldSchema",
    "FieldSpan",
    "FieldSpec",
    "FieldSwapAugmenter",
    "KeyPhraseConfig",
    "ModelDims",
    "ModelParams",
    "Neighbor",
    "SyntheticExample",
    "TemplateSpec",
    "Token",
    "TrainConfig",
    "annotate",
    "build_candidates",
    "build_pairs",
    "builtin_specs",
    "check_documents",
    "encode_neighborhood",
    "evaluate_ensemble",
    "generate",
    "generate_corpus",
    "important_phrases",
    "infer_config",
    "init_params",
    "learning_curve",
    "load_checkpoint",
    "macro_f1",
    "max_f1",
    "merge_configs",
    "neighbor_importance",
    "pretrain",
    "read_corpus",
    "replace_phrase",
    "save_checkpoint",
    "score",
    "sparsemax",
    "train_ensemble",
    "train_two_stage",
    "validate_document",
    "write_corpus",
]

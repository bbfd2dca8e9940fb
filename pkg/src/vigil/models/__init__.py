"""Regression stack: scaling, fusion, SVR, CCRF and CCNF."""
from .bundle import from_bundle, load_bundle, save_bundle, to_bundle
from .crf import (CcnfModel, CcrfModel, CrfRegularization, ccnf_infer, ccnf_train,
                  ccrf_infer, ccrf_train)
from .estimators import ModelConfig, ModelKind, train_model
from .scaling import MinMaxStats, fuse, normalize_fit_apply
from .sequences import SequenceBatch, chunk_sequences
from .svr import SvrHyperParams, SvrModel, svr_fit, svr_predict, svr_train

__all__ = [
    "CcnfModel", "CcrfModel", "CrfRegularization", "MinMaxStats", "ModelConfig", "ModelKind",
    "SequenceBatch", "SvrHyperParams", "SvrModel", "ccnf_infer", "ccnf_train", "ccrf_infer",
    "ccrf_train", "chunk_sequences", "from_bundle", "fuse", "load_bundle", "normalize_fit_apply",
    "save_bundle", "svr_fit", "svr_predict", "svr_train", "to_bundle", "train_model",
]

"""JSON model bundles with base64 little-endian float64 arrays."""
from __future__ import annotations

import base64
import hashlib
import json

import numpy as np

from .._version import __version__
from ..errors import DataError
from .crf import CcnfModel, CcrfModel, CrfRegularization
from .estimators import CcnfEstimator, CcrfEstimator, ModelKind, SvrEstimator
from .scaling import MinMaxStats
from .svr import SvrHyperParams, SvrModel

BUNDLE_VERSION = 1


def encode_array(a) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(obj) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(obj["shape"])


def names_hash(names) -> str:
    return hashlib.sha256("\n".join(names).encode()).hexdigest()[:16]


def _svr_parts(svr: SvrModel):
    hyper = {"c": svr.params.c, "g": svr.params.g, "epsilon": svr.params.epsilon}
    params = {"support_vectors": encode_array(svr.support_vectors),
              "dual_coef": encode_array(svr.dual_coef), "rho": svr.rho}
    return hyper, params


def _svr_from(hyper, params, norm) -> SvrModel:
    return SvrModel(decode_array(params["support_vectors"]), decode_array(params["dual_coef"]),
                    float(params["rho"]), SvrHyperParams(hyper["c"], hyper["g"], hyper["epsilon"]),
                    norm)


def _reg(r: CrfRegularization) -> dict:
    return {"lambda_alpha": r.lambda_alpha, "lambda_beta": r.lambda_beta, "lambda_theta": r.theta}


def to_bundle(est, feature_names, extra: dict | None = None) -> dict:
    feature_names = list(feature_names)
    scaling = est.scaling if isinstance(est, CcnfEstimator) else est.svr.scaling
    doc = {
        "model_type": est.kind.value,
        "version": __version__,
        "bundle_version": BUNDLE_VERSION,
        "feature_manifest_hash": names_hash(feature_names),
        "feature_names": feature_names,
        "normalization": {"lo": encode_array(scaling.lo), "hi": encode_array(scaling.hi)},
    }
    if isinstance(est, CcnfEstimator):
        doc["hyperparameters"] = {"k1": est.crf.k1, "seq_len": est.seq_len, **_reg(est.crf.reg)}
        doc["parameters"] = {"alpha": encode_array(est.crf.alpha), "beta": est.crf.beta,
                             "theta": encode_array(est.crf.theta)}
    else:
        hyper, params = _svr_parts(est.svr)
        if isinstance(est, CcrfEstimator):
            hyper.update({"seq_len": est.seq_len, **_reg(est.crf.reg)})
            params.update({"alpha": encode_array(est.crf.alpha), "beta": est.crf.beta})
        doc["hyperparameters"] = hyper
        doc["parameters"] = params
    if extra:
        doc.update(extra)
    return doc


def from_bundle(doc: dict):
    try:
        kind = ModelKind(doc["model_type"])
        norm = MinMaxStats(decode_array(doc["normalization"]["lo"]), decode_array(doc["normalization"]["hi"]))
        hyper, params = doc["hyperparameters"], doc["parameters"]
        if kind is ModelKind.CCNF:
            reg = CrfRegularization(hyper["lambda_alpha"], hyper["lambda_beta"], hyper["lambda_theta"])
            crf = CcnfModel(decode_array(params["alpha"]), float(params["beta"]),
                            decode_array(params["theta"]), reg)
            return CcnfEstimator(norm, crf, int(hyper["seq_len"]))
        svr = _svr_from(hyper, params, norm)
        if kind is ModelKind.SVR:
            return SvrEstimator(svr)
        reg = CrfRegularization(hyper["lambda_alpha"], hyper["lambda_beta"], hyper["lambda_theta"])
        crf = CcrfModel(decode_array(params["alpha"]), float(params["beta"]), reg)
        return CcrfEstimator(svr, crf, int(hyper["seq_len"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model bundle: {exc}") from exc


def save_bundle(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_bundle(path) -> dict:
    with open(path) as fh:
        return json.load(fh)

"""Versioned JSON model container with bit-exact float round-trip.

Every real number is written as float.hex() so deserialization reproduces
the exact bit pattern; keys are sorted and separators fixed, making equal
models serialize to identical bytes. Loading validates the magic string,
format version, and the orthonormality of every stored feature matrix.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DataError
from .inference import DrkmModel, OneVsAllModel
from .kernels import KernelSpec
from .model import DrkmState, HeadLssvm, HeadMlp, LevelConfig
from .stiefel import FEASIBILITY_TOL, feasibility_error

MAGIC = "drkm-model"
FORMAT_VERSION = 1


def _enc_real(v: float) -> str:
    return float(v).hex()


def _dec_real(s) -> float:
    try:
        return float.fromhex(s)
    except (TypeError, ValueError) as exc:
        raise DataError(f"bad real value {s!r} in model file") from exc


def _enc_mat(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": [v.hex() for v in a.ravel().tolist()]}


def _dec_mat(obj) -> np.ndarray:
    try:
        shape = tuple(obj["shape"])
        flat = np.array([float.fromhex(s) for s in obj["data"]], dtype=np.float64)
        return flat.reshape(shape)
    except (TypeError, KeyError, ValueError) as exc:
        raise DataError(f"malformed matrix in model file: {exc}") from exc


def _enc_kernel(k: KernelSpec) -> dict:
    return {"kind": k.kind, "sigma": None if k.sigma is None else _enc_real(k.sigma)}


def _dec_kernel(obj) -> KernelSpec:
    sigma = obj.get("sigma")
    return KernelSpec(obj["kind"], None if sigma is None else _dec_real(sigma))


def _enc_head(head) -> dict:
    if isinstance(head, HeadLssvm):
        return {"kind": "lssvm", "w": _enc_mat(head.w), "b": _enc_real(head.b),
                "lambda": _enc_real(head.lam), "eta": _enc_real(head.eta)}
    return {"kind": "mlp", "w1": _enc_mat(head.w1), "b1": _enc_mat(head.b1),
            "w2": _enc_mat(head.w2), "b2": _enc_mat(head.b2),
            "lambda": _enc_real(head.lam), "eta": _enc_real(head.eta)}


def _dec_head(obj):
    if obj["kind"] == "lssvm":
        return HeadLssvm(w=_dec_mat(obj["w"]), b=_dec_real(obj["b"]),
                         lam=_dec_real(obj["lambda"]), eta=_dec_real(obj["eta"]))
    if obj["kind"] == "mlp":
        return HeadMlp(w1=_dec_mat(obj["w1"]), b1=_dec_mat(obj["b1"]),
                       w2=_dec_mat(obj["w2"]), b2=_dec_mat(obj["b2"]),
                       lam=_dec_real(obj["lambda"]), eta=_dec_real(obj["eta"]))
    raise DataError(f"unknown head kind {obj['kind']!r} in model file")


def _enc_state(state: DrkmState) -> dict:
    return {
        "levels": [{"s": cfg.s, "kernel": _enc_kernel(cfg.kernel),
                    "eta": _enc_real(cfg.eta)} for cfg in state.levels],
        "hs": [_enc_mat(h) for h in state.hs],
        "head": _enc_head(state.head),
    }


def _dec_state(obj) -> DrkmState:
    levels = tuple(
        LevelConfig(int(lv["s"]), _dec_kernel(lv["kernel"]), _dec_real(lv["eta"]))
        for lv in obj["levels"]
    )
    hs = [_dec_mat(h) for h in obj["hs"]]
    for j, h in enumerate(hs):
        err = feasibility_error(h)
        if err > FEASIBILITY_TOL:
            raise DataError(
                f"stored feature matrix {j} violates orthonormality "
                f"({err:.3e} > {FEASIBILITY_TOL}); file corrupt or truncated"
            )
    return DrkmState(levels, hs, _dec_head(obj["head"]))


def _enc_binary(model: DrkmModel, shared: bool) -> dict:
    out = _enc_state(model.state)
    out["sigma_tilde"] = _enc_real(model.sigma_tilde)
    if not shared:
        out["X"] = _enc_mat(model.X)
        out["scaler_mean"] = None if model.scaler_mean is None else _enc_mat(model.scaler_mean)
        out["scaler_std"] = None if model.scaler_std is None else _enc_mat(model.scaler_std)
    return out


def serialize_model(model: DrkmModel | OneVsAllModel, path) -> None:
    """Write the model as a canonical JSON document (sorted keys, hex reals)."""
    doc = {"magic": MAGIC, "format_version": FORMAT_VERSION}
    if isinstance(model, OneVsAllModel):
        first = model.models[0]
        doc["kind"] = "one_vs_all"
        doc["label_names"] = model.label_names or first.label_names
        doc["X"] = _enc_mat(first.X)
        doc["scaler_mean"] = None if first.scaler_mean is None else _enc_mat(first.scaler_mean)
        doc["scaler_std"] = None if first.scaler_std is None else _enc_mat(first.scaler_std)
        doc["models"] = [_enc_binary(m, shared=True) for m in model.models]
    else:
        doc["kind"] = "single"
        doc["label_names"] = model.label_names
        doc.update(_enc_binary(model, shared=False))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def deserialize_model(path) -> DrkmModel | OneVsAllModel:
    """Load and validate a serialized model; raises DataError on any damage."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != MAGIC:
        raise DataError(f"{path} is not a model file (magic string missing)")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(
            f"model format version {version!r} unsupported (expected {FORMAT_VERSION})"
        )
    try:
        label_names = doc.get("label_names")
        if doc["kind"] == "single":
            return DrkmModel(
                state=_dec_state(doc),
                X=_dec_mat(doc["X"]),
                sigma_tilde=_dec_real(doc["sigma_tilde"]),
                scaler_mean=None if doc["scaler_mean"] is None else _dec_mat(doc["scaler_mean"]),
                scaler_std=None if doc["scaler_std"] is None else _dec_mat(doc["scaler_std"]),
                label_names=label_names,
            )
        if doc["kind"] == "one_vs_all":
            X = _dec_mat(doc["X"])
            mean = None if doc["scaler_mean"] is None else _dec_mat(doc["scaler_mean"])
            std = None if doc["scaler_std"] is None else _dec_mat(doc["scaler_std"])
            models = [
                DrkmModel(state=_dec_state(m), X=X,
                          sigma_tilde=_dec_real(m["sigma_tilde"]),
                          scaler_mean=mean, scaler_std=std, label_names=label_names)
                for m in doc["models"]
            ]
            return OneVsAllModel(models=models, label_names=label_names)
        raise DataError(f"unknown model kind {doc['kind']!r}")
    except KeyError as exc:
        raise DataError(f"model file {path} is missing field {exc}") from exc

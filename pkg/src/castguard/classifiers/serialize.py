"""Versioned binary serialization of trained models.

Blob layout (little-endian):

    bytes 0-3  magic ``CGM1``
    byte  4    format version, currently 0x01
    byte  5    kind byte, the index of the model kind in KINDS order
    bytes 6-9  u32 payload length
    then       payload: an uncompressed .npz archive holding the fitted
               arrays plus a ``meta`` JSON string (spec, scalars, shapes)

Stability across package versions is not promised; the version byte
exists so old blobs fail loudly instead of deserializing garbage.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from ..errors import DataFormatError
from ..mlp import MlpArchitecture, MlpModel
from . import (
    KINDS,
    AdaBoostModel,
    ClassifierSpec,
    GaussianNbModel,
    GpModel,
    KnnModel,
    LinearSvmModel,
    MlpClassifier,
    RandomForestModel,
    RbfSvmModel,
)
from .adaboost import Stump
from .base import Standardizer, TrainedModel
from .gaussian_process import GpConfig, GpPosterior
from .tree import DecisionTree, _Node

MAGIC = b"CGM1"
VERSION = 1


def _tree_to_arrays(tree: DecisionTree) -> dict:
    nodes = []

    def walk(node) -> int:
        idx = len(nodes)
        nodes.append([node.feature, node.threshold, -1, -1, node.p_defect])
        if not node.is_leaf:
            nodes[idx][2] = walk(node.left)
            nodes[idx][3] = walk(node.right)
        return idx

    walk(tree.root)
    arr = np.asarray(nodes, dtype=np.float64)
    return {
        "feature": arr[:, 0].astype(np.int64),
        "threshold": arr[:, 1],
        "left": arr[:, 2].astype(np.int64),
        "right": arr[:, 3].astype(np.int64),
        "p_defect": arr[:, 4],
    }


def _tree_from_arrays(arrays: dict, n_features: int) -> DecisionTree:
    tree = DecisionTree()
    tree.n_features = n_features

    def build(idx: int) -> _Node:
        node = _Node(
            p_defect=float(arrays["p_defect"][idx]),
            feature=int(arrays["feature"][idx]),
            threshold=float(arrays["threshold"][idx]),
        )
        if arrays["left"][idx] >= 0:
            node.left = build(int(arrays["left"][idx]))
            node.right = build(int(arrays["right"][idx]))
        return node

    tree.root = build(0)
    return tree


def _pack_state(model: TrainedModel) -> tuple[dict, dict]:
    """(arrays, extra_meta) for the model's kind."""
    if isinstance(model, KnnModel):
        return {"features": model.features, "labels": model.labels}, {"k": model.k}
    if isinstance(model, GaussianNbModel):
        return (
            {
                "priors": model.priors,
                "means": model.means,
                "variances": model.variances,
                "classes": model.classes,
            },
            {},
        )
    if isinstance(model, GpModel):
        post = model.posterior
        return (
            {
                "scaler_mean": model.scaler.mean,
                "scaler_scale": model.scaler.scale,
                "train_features": post.train_features,
                "resid": post.resid,
                "sqrt_w": post.sqrt_w,
                "chol_b": post.chol_b,
            },
            {
                "gp_config": {
                    "length_scale": post.config.length_scale,
                    "jitter": post.config.jitter,
                    "max_newton_iters": post.config.max_newton_iters,
                    "newton_tol": post.config.newton_tol,
                },
                "n_iters": post.n_iters,
            },
        )
    if isinstance(model, LinearSvmModel):
        return (
            {"scaler_mean": model.scaler.mean, "scaler_scale": model.scaler.scale, "w": model.w},
            {"b": model.b},
        )
    if isinstance(model, RbfSvmModel):
        return (
            {
                "scaler_mean": model.scaler.mean,
                "scaler_scale": model.scaler.scale,
                "train_features": model.train_features,
                "dual_signed": model.dual_signed,
            },
            {"sigma": model.sigma},
        )
    if isinstance(model, RandomForestModel):
        arrays = {}
        for t, tree in enumerate(model.trees):
            for name, arr in _tree_to_arrays(tree).items():
                arrays[f"tree{t}_{name}"] = arr
        return arrays, {"n_trees": len(model.trees)}
    if isinstance(model, AdaBoostModel):
        return (
            {
                "stump_features": np.asarray([s.feature for s in model.stumps], dtype=np.int64),
                "stump_thresholds": np.asarray([s.threshold for s in model.stumps]),
                "stump_polarities": np.asarray([s.polarity for s in model.stumps], dtype=np.int64),
                "alphas": np.asarray(model.alphas),
            },
            {},
        )
    if isinstance(model, MlpClassifier):
        arrays = {"scaler_mean": model.scaler.mean, "scaler_scale": model.scaler.scale}
        for i, (w, b) in enumerate(zip(model.model.weights, model.model.biases)):
            arrays[f"w{i}"] = w
            arrays[f"b{i}"] = b
        return arrays, {
            "layer_sizes": list(model.model.architecture.layer_sizes),
            "arch_seed": model.model.architecture.seed,
            "training_log": list(model.model.training_log),
        }
    raise DataFormatError(f"cannot serialize model of type {type(model).__name__}")


def save_model(model: TrainedModel, path) -> None:
    arrays, extra = _pack_state(model)
    meta = {
        "kind": model.kind,
        "spec_params": _jsonable(model.spec.params),
        "seed": model.spec.seed,
        "input_dim": model.input_dim,
        **extra,
    }
    buf = io.BytesIO()
    np.savez(buf, meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8), **arrays)
    payload = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION, KINDS.index(model.kind)]))
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    return value


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 10 or blob[:4] != MAGIC:
        raise DataFormatError(f"{path}: not a castguard model blob")
    version, kind_byte = blob[4], blob[5]
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported model blob version {version}")
    if kind_byte >= len(KINDS):
        raise DataFormatError(f"{path}: unknown kind byte {kind_byte}")
    (payload_len,) = struct.unpack_from("<I", blob, 6)
    payload = blob[10 : 10 + payload_len]
    if len(payload) != payload_len:
        raise DataFormatError(f"{path}: truncated model blob")
    archive = np.load(io.BytesIO(payload), allow_pickle=False)
    meta = json.loads(bytes(archive["meta"]).decode("utf-8"))
    kind = KINDS[kind_byte]
    if meta["kind"] != kind:
        raise DataFormatError(f"{path}: kind byte {kind} disagrees with metadata {meta['kind']}")
    params = meta["spec_params"]
    if kind == "mlp":
        params = dict(params, hidden_sizes=tuple(params["hidden_sizes"]))
    spec = ClassifierSpec(kind=kind, params=params, seed=meta["seed"])

    if kind == "knn":
        return KnnModel(spec, archive["features"], archive["labels"], k=meta["k"])
    if kind == "gaussian_nb":
        return GaussianNbModel(
            spec,
            input_dim=meta["input_dim"],
            priors=archive["priors"],
            means=archive["means"],
            variances=archive["variances"],
            classes=archive["classes"],
        )
    scaler = None
    if "scaler_mean" in archive:
        scaler = Standardizer(mean=archive["scaler_mean"], scale=archive["scaler_scale"])
    if kind == "gaussian_process":
        cfg = GpConfig(**meta["gp_config"])
        post = GpPosterior(
            train_features=archive["train_features"],
            resid=archive["resid"],
            sqrt_w=archive["sqrt_w"],
            chol_b=archive["chol_b"],
            config=cfg,
            n_iters=meta["n_iters"],
        )
        return GpModel(spec, scaler, post)
    if kind == "linear_svm":
        return LinearSvmModel(spec, scaler, archive["w"], float(meta["b"]))
    if kind == "rbf_svm":
        return RbfSvmModel(
            spec, scaler, archive["train_features"], archive["dual_signed"], float(meta["sigma"])
        )
    if kind == "random_forest":
        trees = []
        for t in range(meta["n_trees"]):
            arrays = {
                name: archive[f"tree{t}_{name}"]
                for name in ("feature", "threshold", "left", "right", "p_defect")
            }
            trees.append(_tree_from_arrays(arrays, n_features=meta["input_dim"]))
        return RandomForestModel(spec, input_dim=meta["input_dim"], trees=trees)
    if kind == "adaboost":
        stumps = [
            Stump(feature=int(f), threshold=float(t), polarity=int(p))
            for f, t, p in zip(
                archive["stump_features"], archive["stump_thresholds"], archive["stump_polarities"]
            )
        ]
        return AdaBoostModel(
            spec,
            input_dim=meta["input_dim"],
            stumps=stumps,
            alphas=[float(a) for a in archive["alphas"]],
        )
    if kind == "mlp":
        arch = MlpArchitecture(layer_sizes=tuple(meta["layer_sizes"]), seed=meta["arch_seed"])
        n_layers = len(meta["layer_sizes"]) - 1
        inner = MlpModel(
            architecture=arch,
            weights=tuple(archive[f"w{i}"] for i in range(n_layers)),
            biases=tuple(archive[f"b{i}"] for i in range(n_layers)),
            training_log=tuple(meta["training_log"]),
        )
        return MlpClassifier(spec, scaler, inner)
    raise DataFormatError(f"{path}: unhandled kind {kind}")

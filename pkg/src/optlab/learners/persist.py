"""Versioned JSON model artifacts.

Layout::

    {
      "format": "optlab-model",
      "version": 1,
      "estimator": "<class name>",
      "params": {...get_params()...},
      "schema": {"features": [...], "n_features": 5},
      "state": {...fitted attributes...},
      "metadata": {...}
    }

Arrays inside ``state`` are stored as ``{"__ndarray__": <base64 of the raw
little-endian buffer>, "dtype": ..., "shape": [...]}`` so floats round-trip
bit-exactly.
"""
import base64
import json

import numpy as np

from .._util import atomic_write
from ..dataset import Standardizer
from ..exceptions import DataError
from .boosting import ObliviousBoostingRegressor
from .forest import ForestRegressor
from .formula import BlackScholesPricer, HestonPricer
from .mlp import MLPRegressor

FORMAT = "optlab-model"
VERSION = 1

_STATE = {
    "MLPRegressor": ("coefs_", "intercepts_", "scaler_", "loss_curve_", "n_epochs_", "train_mse_"),
    "ForestRegressor": ("tree_offsets_", "tree_feature_", "tree_threshold_", "tree_left_",
                        "tree_right_", "tree_value_"),
    "ObliviousBoostingRegressor": ("bin_thresholds_", "base_score_", "split_features_",
                                   "split_thresholds_", "leaf_values_", "train_loss_", "n_iter_"),
    "BlackScholesPricer": (),
    "HestonPricer": (),
}
_CLASSES = {cls.__name__: cls for cls in (MLPRegressor, ForestRegressor, ObliviousBoostingRegressor,
                                          BlackScholesPricer, HestonPricer)}


def _encode(obj):
    if isinstance(obj, np.ndarray):
        arr = np.ascontiguousarray(obj, dtype=obj.dtype.newbyteorder("<"))
        return {"__ndarray__": base64.b64encode(arr.tobytes()).decode(), "dtype": arr.dtype.str,
                "shape": list(arr.shape)}
    if isinstance(obj, Standardizer):
        return {"__standardizer__": {"mean_": _encode(obj.mean_), "scale_": _encode(obj.scale_),
                                     "constant_columns_": obj.constant_columns_}}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            raw = base64.b64decode(obj["__ndarray__"])
            return np.frombuffer(raw, dtype=np.dtype(obj["dtype"])).reshape(obj["shape"]).copy()
        if "__standardizer__" in obj:
            body = obj["__standardizer__"]
            sc = Standardizer()
            sc.mean_, sc.scale_ = _decode(body["mean_"]), _decode(body["scale_"])
            sc.constant_columns_ = body["constant_columns_"]
            sc.n_features_in_ = sc.mean_.size
            return sc
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def _params_json(params):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


def dumps_model(model, metadata=None) -> str:
    name = type(model).__name__
    if name not in _STATE:
        raise DataError(f"cannot serialise estimator {name}")
    names = getattr(model, "feature_names_in_", None)
    body = {
        "format": FORMAT,
        "version": VERSION,
        "estimator": name,
        "params": _params_json(model.get_params()),
        "schema": {
            "features": None if names is None else [str(c) for c in names],
            "n_features": int(getattr(model, "n_features_in_", 0)),
        },
        "state": {attr: _encode(getattr(model, attr)) for attr in _STATE[name]},
        "metadata": metadata or {},
    }
    return json.dumps(body, sort_keys=True, separators=(",", ":")) + "\n"


def loads_model(text: str):
    """Rebuild an estimator from :func:`dumps_model` output; returns ``(model, metadata)``."""
    body = json.loads(text)
    if body.get("format") != FORMAT:
        raise DataError("not an optlab model artifact")
    if body.get("version") != VERSION:
        raise DataError(f"unsupported artifact version {body.get('version')}")
    cls = _CLASSES[body["estimator"]]
    params = body["params"]
    if isinstance(params.get("hidden_layer_sizes"), list):
        params["hidden_layer_sizes"] = tuple(params["hidden_layer_sizes"])
    model = cls(**params)
    for attr, value in body["state"].items():
        setattr(model, attr, _decode(value))
    schema = body["schema"]
    model.n_features_in_ = schema["n_features"]
    if schema["features"] is not None:
        model.feature_names_in_ = np.asarray(schema["features"], dtype=object)
    if cls is ObliviousBoostingRegressor:
        model.bin_thresholds_ = [np.asarray(t) for t in model.bin_thresholds_]
    return model, body["metadata"]


def save_model(model, path, metadata=None):
    return atomic_write(path, dumps_model(model, metadata))


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())

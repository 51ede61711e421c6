"""Model files: versioned, key-sorted JSON.

Floats are written with ``repr``-precision decimals, which round-trip
exactly, so save -> load -> save reproduces the file byte for byte.
Bootstrap membership is training-time state and is not stored.
"""

from __future__ import annotations

import json

import numpy as np

from .cluster import ClusterDetector
from .ensemble import EnsembleModel, ModelSpec, member_kind
from .significance import li_ma_significance
from .table import DataError
from .tree import SigTree

FORMAT_VERSION = 1


class ModelFileError(DataError):
    """Unreadable, truncated or inconsistent model file."""


class FormatVersionError(ModelFileError):
    pass


class SchemaMismatchError(ModelFileError):
    pass


def _tree_to_dict(tree: SigTree):
    return {
        "type": "tree",
        "criterion": tree.criterion,
        "alpha": tree.alpha,
        "max_depth": tree.max_depth,
        "n_features": tree.n_features,
        "seed": tree.seed,
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "n_on": tree.n_on.tolist(),
        "n_off": tree.n_off.tolist(),
        "depth": tree.depth.tolist(),
    }


def _tree_from_dict(d):
    n_on = np.array(d["n_on"], dtype=np.float64)
    n_off = np.array(d["n_off"], dtype=np.float64)
    lengths = {len(d[k]) for k in ("feature", "threshold", "left", "right", "n_on", "n_off",
                                   "depth")}
    if len(lengths) != 1 or 0 in lengths:
        raise ModelFileError("tree arrays have inconsistent lengths")
    sigma = np.asarray(li_ma_significance(n_on, n_off, d["alpha"]), dtype=np.float64)
    tree = SigTree(
        feature=np.array(d["feature"], dtype=np.int32),
        threshold=np.array(d["threshold"], dtype=np.float64),
        left=np.array(d["left"], dtype=np.int32),
        right=np.array(d["right"], dtype=np.int32),
        n_on=n_on,
        n_off=n_off,
        sigma=sigma,
        label=(sigma > 0).astype(np.uint8),
        depth=np.array(d["depth"], dtype=np.int32),
        n_features=int(d["n_features"]),
        max_depth=int(d["max_depth"]),
        criterion=d["criterion"],
        alpha=float(d["alpha"]),
        seed=int(d["seed"]),
    )
    m = tree.n_nodes
    inner = tree.feature >= 0
    if (np.any(tree.feature >= tree.n_features)
            or np.any((tree.left[inner] <= 0) | (tree.left[inner] >= m))
            or np.any((tree.right[inner] <= 0) | (tree.right[inner] >= m))):
        raise ModelFileError("tree node references out of range")
    return tree


def _cluster_to_dict(det: ClusterDetector):
    return {
        "type": "cluster",
        "n_features": det.n_features,
        "seed": det.seed,
        "centroids": det.centroids.tolist(),
        "assignment": det.assignment.tolist(),
        "feature_subset": det.feature_subset.tolist(),
    }


def _cluster_from_dict(d):
    centroids = np.array(d["centroids"], dtype=np.float64)
    assignment = np.array(d["assignment"], dtype=np.uint8)
    subset = np.array(d["feature_subset"], dtype=np.int64)
    n_features = int(d["n_features"])
    if (centroids.ndim != 2 or centroids.shape != (assignment.size, subset.size)
            or np.any(assignment > 1) or np.any((subset < 0) | (subset >= n_features))):
        raise ModelFileError("cluster detector arrays are inconsistent")
    return ClusterDetector(centroids, assignment, subset, n_features, int(d["seed"]))


def model_to_dict(model: EnsembleModel):
    encode = {"tree": _tree_to_dict, "cluster": _cluster_to_dict}
    return {
        "format_version": FORMAT_VERSION,
        "base_kind": model.base_kind,
        "hyperparameters": model.spec.hyperparameters,
        "seed": model.seed,
        "threshold": float(model.threshold),
        "feature_schema": {"count": model.n_features, "names": list(model.feature_names)},
        "members": [encode[member_kind(m)](m) for m in model.members],
    }


def model_from_dict(d):
    if not isinstance(d, dict) or "format_version" not in d:
        raise ModelFileError("not a model file: format_version missing")
    if d["format_version"] != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported model format_version {d['format_version']!r} "
                                 f"(this build reads {FORMAT_VERSION})")
    try:
        spec = ModelSpec(**d["hyperparameters"])
        schema = d["feature_schema"]
        names = tuple(schema["names"])
        if len(names) != schema["count"]:
            raise ModelFileError("feature schema count does not match its names")
        decode = {"tree": _tree_from_dict, "cluster": _cluster_from_dict}
        members = tuple(decode[m["type"]](m) for m in d["members"])
        if not members:
            raise ModelFileError("model has no members")
        if any(m.n_features != schema["count"] for m in members):
            raise ModelFileError("member dimensionality differs from the feature schema")
        return EnsembleModel(members, float(d["threshold"]), spec, int(d["seed"]),
                             int(schema["count"]), names)
    except ModelFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"corrupt model file: {exc!r}") from None


def dumps_model(model: EnsembleModel):
    return json.dumps(model_to_dict(model), sort_keys=True, indent=1) + "\n"


def loads_model(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"corrupt model file: {exc}") from None
    return model_from_dict(d)


def save_model(model: EnsembleModel, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())


def check_schema(model: EnsembleModel, feature_names):
    """Raise unless ``feature_names`` matches the model's training schema."""
    names = tuple(feature_names)
    if names != model.feature_names:
        raise SchemaMismatchError(f"feature schema mismatch: model expects "
                                  f"{list(model.feature_names)}, data has {list(names)}")

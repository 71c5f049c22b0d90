"""Pluggable binary classifiers emitting posterior probabilities.

Three reference implementations stand in for the external kernel-SVM the
full system would use:

* LogisticRef - L2-regularized logistic regression on standardized
  features, fitted by gradient descent with backtracking (loss never
  increases between iterations).
* Knn - k-nearest neighbours on standardized features; the posterior is
  the positive fraction among the k nearest.
* Ncc - normalized cross-correlation (cosine) against per-class centroids
  of standardized features; emits hard 0/1 posteriors.

All three standardize with the training split's per-dimension mean and
standard deviation. Models serialize to JSON:
{"kind", "dims", "standardization": {"mean": [...], "std": [...]},
 "parameters": {...}}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)
        return cls(mean=mean, std=std)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


def _validate_training_set(features, labels):
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise TrainingError("features must be (N, dims) with one label per row")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise TrainingError("training set needs at least one example per class")
    return x, np.where(y > 0, 1.0, -1.0)


def _identity_standardizer(dims: int) -> Standardizer:
    return Standardizer(mean=np.zeros(dims), std=np.ones(dims))


class LogisticRef:
    kind = "logistic"

    def __init__(self, standardizer, weights, bias):
        self.standardizer = standardizer
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)

    @classmethod
    def train(
        cls,
        features,
        labels,
        l2: float = 1e-3,
        learning_rate: float = 1.0,
        tolerance: float = 1e-8,
        max_iterations: int = 5000,
    ) -> "LogisticRef":
        x, y = _validate_training_set(features, labels)
        scaler = Standardizer.fit(x)
        xs = scaler.apply(x)
        n, dims = xs.shape
        w = np.zeros(dims)
        b = 0.0

        def loss_and_grad(w, b):
            margin = y * (xs @ w + b)
            # log(1 + exp(-m)) via logaddexp for numerical stability
            loss = float(np.mean(np.logaddexp(0.0, -margin))) + l2 * float(w @ w)
            s = -y / (1.0 + np.exp(margin))
            grad_w = xs.T @ s / n + 2.0 * l2 * w
            grad_b = float(np.mean(s))
            return loss, grad_w, grad_b

        loss, grad_w, grad_b = loss_and_grad(w, b)
        lr = learning_rate
        for _ in range(max_iterations):
            new_w = w - lr * grad_w
            new_b = b - lr * grad_b
            new_loss, new_grad_w, new_grad_b = loss_and_grad(new_w, new_b)
            if new_loss > loss:
                lr *= 0.5
                if lr < 1e-12:
                    break
                continue
            improved = loss - new_loss
            w, b, loss, grad_w, grad_b = new_w, new_b, new_loss, new_grad_w, new_grad_b
            if improved < tolerance:
                break
        return cls(scaler, w, b)

    def classify(self, f) -> float:
        z = float(self.standardizer.apply(f) @ self.weights + self.bias)
        return 1.0 / (1.0 + np.exp(-z))

    def parameters(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}


class Knn:
    """k nearest neighbours with majority vote.

    Cityblock (L1) distance by default; "l2" selects Euclidean. An exact
    vote tie (possible for even k) resolves to the nearest neighbour's
    class, reflected in the posterior as the tied fraction nudged half a
    vote toward that side.
    """

    kind = "knn"

    def __init__(self, standardizer, train_x, train_y, k, metric="l1"):
        self.standardizer = standardizer
        self.train_x = np.asarray(train_x, dtype=np.float64)
        self.train_y = np.asarray(train_y, dtype=np.float64)
        self.k = int(k)
        if metric not in ("l1", "l2"):
            raise TrainingError(f"metric must be 'l1' or 'l2', got {metric!r}")
        self.metric = metric

    @classmethod
    def train(
        cls, features, labels, k: int = 4, metric: str = "l1", standardize: bool = True
    ) -> "Knn":
        x, y = _validate_training_set(features, labels)
        if not 1 <= k <= x.shape[0]:
            raise TrainingError(f"k must lie in [1, {x.shape[0]}], got {k}")
        scaler = Standardizer.fit(x) if standardize else _identity_standardizer(x.shape[1])
        return cls(scaler, scaler.apply(x), y, k, metric)

    def classify(self, f) -> float:
        fs = self.standardizer.apply(f)
        if self.metric == "l1":
            dists = np.abs(self.train_x - fs).sum(axis=1)
        else:
            dists = np.linalg.norm(self.train_x - fs, axis=1)
        nearest = np.argsort(dists, kind="stable")[: self.k]
        votes = self.train_y[nearest]
        positive = float(np.sum(votes > 0))
        if 2.0 * positive == self.k:
            positive += 0.5 if votes[0] > 0 else -0.5
        return positive / self.k

    def parameters(self) -> dict:
        return {
            "k": self.k,
            "metric": self.metric,
            "train_x": self.train_x.tolist(),
            "train_y": self.train_y.tolist(),
        }


class Ncc:
    """Normalized cross-correlation classifier with hard 0/1 posteriors.

    "centroid" mode correlates against the two class centroids; "template"
    mode correlates against every training exemplar (zero-normalized, i.e.
    each vector has its own mean removed) and takes the label of the best
    match.
    """

    kind = "ncc"

    def __init__(self, standardizer, centroid_pos, centroid_neg, templates=None, template_labels=None, mode="centroid"):
        self.standardizer = standardizer
        self.centroid_pos = np.asarray(centroid_pos, dtype=np.float64)
        self.centroid_neg = np.asarray(centroid_neg, dtype=np.float64)
        self.templates = None if templates is None else np.asarray(templates, dtype=np.float64)
        self.template_labels = (
            None if template_labels is None else np.asarray(template_labels, dtype=np.float64)
        )
        if mode not in ("centroid", "template"):
            raise TrainingError(f"mode must be 'centroid' or 'template', got {mode!r}")
        if mode == "template" and self.templates is None:
            raise TrainingError("template mode requires stored templates")
        self.mode = mode

    @classmethod
    def train(cls, features, labels, mode: str = "centroid", standardize: bool = True) -> "Ncc":
        x, y = _validate_training_set(features, labels)
        scaler = Standardizer.fit(x) if standardize else _identity_standardizer(x.shape[1])
        xs = scaler.apply(x)
        return cls(
            scaler,
            xs[y > 0].mean(axis=0),
            xs[y < 0].mean(axis=0),
            templates=xs if mode == "template" else None,
            template_labels=y if mode == "template" else None,
            mode=mode,
        )

    @staticmethod
    def _correlation(a, b):
        na = np.linalg.norm(a)
        nb = np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            return 0.0
        return float(a @ b / (na * nb))

    def classify(self, f) -> float:
        fs = self.standardizer.apply(f)
        if self.mode == "template":
            t = self.templates - self.templates.mean(axis=1, keepdims=True)
            q = fs - fs.mean()
            norms = np.linalg.norm(t, axis=1) * (np.linalg.norm(q) + 1e-300)
            corr = (t @ q) / np.where(norms > 0, norms, 1.0)
            return 1.0 if self.template_labels[int(np.argmax(corr))] > 0 else 0.0
        pos = self._correlation(fs, self.centroid_pos)
        neg = self._correlation(fs, self.centroid_neg)
        return 1.0 if pos >= neg else 0.0

    def parameters(self) -> dict:
        params = {
            "mode": self.mode,
            "centroid_pos": self.centroid_pos.tolist(),
            "centroid_neg": self.centroid_neg.tolist(),
        }
        if self.templates is not None:
            params["templates"] = self.templates.tolist()
            params["template_labels"] = self.template_labels.tolist()
        return params


_KINDS = {"logistic": LogisticRef, "knn": Knn, "ncc": Ncc}


def train_classifier(kind: str, features, labels, **params):
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise TrainingError(f"unknown classifier kind: {kind}") from None
    return cls.train(features, labels, **params)


def save_classifier(clf, path) -> None:
    model = {
        "kind": clf.kind,
        "dims": int(clf.standardizer.mean.size),
        "standardization": {
            "mean": clf.standardizer.mean.tolist(),
            "std": clf.standardizer.std.tolist(),
        },
        "parameters": clf.parameters(),
    }
    Path(path).write_text(json.dumps(model, indent=2) + "\n", encoding="utf-8")


def load_classifier(path):
    model = json.loads(Path(path).read_text(encoding="utf-8"))
    scaler = Standardizer(
        mean=np.asarray(model["standardization"]["mean"], dtype=np.float64),
        std=np.asarray(model["standardization"]["std"], dtype=np.float64),
    )
    kind = model["kind"]
    params = model["parameters"]
    if kind == "logistic":
        return LogisticRef(scaler, params["weights"], params["bias"])
    if kind == "knn":
        return Knn(
            scaler,
            params["train_x"],
            params["train_y"],
            params["k"],
            params.get("metric", "l1"),
        )
    if kind == "ncc":
        return Ncc(
            scaler,
            params["centroid_pos"],
            params["centroid_neg"],
            templates=params.get("templates"),
            template_labels=params.get("template_labels"),
            mode=params.get("mode", "centroid"),
        )
    raise TrainingError(f"unknown classifier kind in model file: {kind}")

"""Trainable score functions s(z) and g(z) behind one interface.

Two model kinds: a random forest (scikit-learn under the hood) and a small
feed-forward network written directly in numpy so its training-loss gradients
are analytically checkable. Both honor the same contract:

* ``score(model, z)`` is in [0, 1], larger = more novelty-like;
* training consumes the dataset as an unordered multiset per label block --
  rows are lexicographically sorted within each block before fitting, so any
  row permutation yields a bitwise-identical fitted model;
* fixed (data multiset, hyperparameters, seed) => identical score function.

Hard-label access goes through :class:`DecisionFn`, which thresholds the
score at 0.5.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .errors import DegenerateTrainingError, InvalidInputError

__all__ = [
    "MODEL_KINDS",
    "LabeledDataset",
    "RandomForestHyper",
    "NeuralNetHyper",
    "LearnerConfig",
    "ScoreModel",
    "DecisionFn",
    "train_score_function",
    "train_from_config",
    "score",
    "score_batch",
    "decide",
    "decide_batch",
    "nn_loss_and_grads",
    "save_model",
    "load_model",
]

MODEL_KINDS = ("random_forest", "neural_net")


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix plus binary labels; the unit every learner trains on."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if X.ndim != 2:
            raise InvalidInputError("features must be a 2-D matrix")
        if y.shape != (X.shape[0],):
            raise InvalidInputError("labels must be one per feature row")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("features contain NaN or infinite entries")
        if y.size and not np.isin(y, (0, 1)).all():
            raise InvalidInputError("labels must be 0 or 1")

    @property
    def d(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class RandomForestHyper:
    n_trees: int = 100
    criterion: str = "gini"
    max_depth: int | None = None
    bootstrap: bool = True
    max_features: str | int | float = "sqrt"


@dataclass(frozen=True)
class NeuralNetHyper:
    hidden: int = 64
    learning_rate: float = 0.05
    epochs: int = 300


_HYPER_TYPES = {"random_forest": RandomForestHyper, "neural_net": NeuralNetHyper}


@dataclass(frozen=True)
class LearnerConfig:
    """Model family, hyperparameters, and training seed, bundled for callers
    (attack schemes, experiment runner) that pass learners around declaratively."""

    kind: str = "random_forest"
    hyper: RandomForestHyper | NeuralNetHyper | Mapping | None = None
    train_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise InvalidInputError(f"unknown model kind {self.kind!r}")
        # canonicalize so configs built from mappings (or None) compare equal
        # to configs built from hyperparameter dataclasses
        object.__setattr__(self, "hyper", _coerce_hyper(self.kind, self.hyper))


@dataclass(frozen=True)
class ScoreModel:
    """A fitted score function; immutable, safe to share across threads."""

    model_kind: str
    hyper: RandomForestHyper | NeuralNetHyper
    train_seed: int
    d: int
    state: object = field(repr=False)

    def score_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != self.d:
            raise InvalidInputError(
                f"expected feature matrix with {self.d} columns, got shape {Z.shape}"
            )
        if self.model_kind == "random_forest":
            return self.state.predict_proba(Z)[:, 1]
        return _nn_forward(self.state, Z)


@dataclass(frozen=True)
class DecisionFn:
    """Hard-label view of a score model: decide(z) = 1 iff score(z) >= 0.5."""

    underlying: ScoreModel
    threshold: float = 0.5


def _coerce_hyper(kind: str, hyper) -> RandomForestHyper | NeuralNetHyper:
    cls = _HYPER_TYPES[kind]
    if hyper is None:
        hp = cls()
    elif isinstance(hyper, cls):
        hp = hyper
    elif isinstance(hyper, Mapping):
        try:
            hp = cls(**hyper)
        except TypeError as exc:
            raise InvalidInputError(f"bad hyperparameters for {kind}: {exc}") from exc
    else:
        raise InvalidInputError(f"bad hyperparameters for {kind}: {hyper!r}")
    _check_hyper(kind, hp)
    return hp


def _check_hyper(kind: str, hp) -> None:
    def positive_int(name, value, allow_none=False):
        if allow_none and value is None:
            return
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
            raise InvalidInputError(f"{kind} hyperparameter {name} must be a positive int, got {value!r}")

    if kind == "random_forest":
        positive_int("n_trees", hp.n_trees)
        positive_int("max_depth", hp.max_depth, allow_none=True)
        if hp.criterion not in ("gini", "entropy", "log_loss"):
            raise InvalidInputError(f"unknown split criterion {hp.criterion!r}")
        if not isinstance(hp.bootstrap, bool):
            raise InvalidInputError(f"bootstrap must be a bool, got {hp.bootstrap!r}")
    else:
        positive_int("hidden", hp.hidden)
        positive_int("epochs", hp.epochs)
        lr = hp.learning_rate
        if not isinstance(lr, (int, float, np.floating)) or isinstance(lr, bool) or not lr > 0:
            raise InvalidInputError(f"learning_rate must be positive, got {lr!r}")


def _canonicalize(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lexicographic row sort within each label block, label-0 block first.

    Any permutation of rows (within or across blocks) maps to the same output,
    so downstream fitting sees the dataset purely as a per-label multiset.
    """
    parts_X, parts_y = [], []
    for label in (0, 1):
        block = X[y == label]
        if block.shape[0]:
            order = np.lexsort(block.T[::-1])
            block = block[order]
        parts_X.append(block)
        parts_y.append(np.full(block.shape[0], label, dtype=np.int64))
    return np.concatenate(parts_X, axis=0), np.concatenate(parts_y)


def train_score_function(
    data: LabeledDataset,
    kind: str,
    hyper=None,
    seed: int = 0,
) -> ScoreModel:
    """Fit a score function of the given kind on the labeled data."""
    if kind not in MODEL_KINDS:
        raise InvalidInputError(f"unknown model kind {kind!r}")
    classes = np.unique(data.labels)
    if classes.size < 2:
        raise DegenerateTrainingError(
            f"training data has a single class ({classes.tolist()})"
        )
    hp = _coerce_hyper(kind, hyper)
    X, y = _canonicalize(data.features, data.labels)
    if kind == "random_forest":
        forest = RandomForestClassifier(
            n_estimators=hp.n_trees,
            criterion=hp.criterion,
            max_depth=hp.max_depth,
            bootstrap=hp.bootstrap,
            max_features=hp.max_features,
            n_jobs=1,
            random_state=int(np.uint32(seed)),
        )
        forest.fit(X, y)
        state = forest
    else:
        state = _nn_train(X, y.astype(np.float64), hp, seed)
    return ScoreModel(model_kind=kind, hyper=hp, train_seed=int(seed), d=data.d, state=state)


def train_from_config(data: LabeledDataset, cfg: LearnerConfig) -> ScoreModel:
    return train_score_function(data, cfg.kind, cfg.hyper, seed=cfg.train_seed)


def score(model: ScoreModel, z: np.ndarray) -> float:
    """Score a single feature vector; in [0, 1], larger = more novelty-like."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.d,):
        raise InvalidInputError(
            f"expected feature vector of length {model.d}, got shape {z.shape}"
        )
    return float(model.score_batch(z[None, :])[0])


def score_batch(model: ScoreModel, Z: np.ndarray) -> np.ndarray:
    return model.score_batch(Z)


def decide(fn: DecisionFn, z: np.ndarray) -> int:
    return int(score(fn.underlying, z) >= fn.threshold)


def decide_batch(fn: DecisionFn, Z: np.ndarray) -> np.ndarray:
    return (fn.underlying.score_batch(Z) >= fn.threshold).astype(np.int64)


# ------------------------------------------------------------------ network

# Parameters: W1 (d, h), b1 (h,), W2 (h,), b2 (). Hidden ReLU, sigmoid output,
# mean binary cross-entropy loss, full-batch gradient descent. Full-batch plus
# the canonical row sort makes training bitwise order-invariant.


def _nn_init(d: int, hidden: int, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    return {
        "W1": rng.normal(0.0, np.sqrt(2.0 / d), size=(d, hidden)),
        "b1": np.zeros(hidden),
        "W2": rng.normal(0.0, np.sqrt(2.0 / hidden), size=hidden),
        "b2": np.zeros(()),
    }


def _nn_logits(params: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    hidden = np.maximum(X @ params["W1"] + params["b1"], 0.0)
    return hidden @ params["W2"] + params["b2"]


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _nn_forward(params: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    return _sigmoid(_nn_logits(params, X))


def nn_loss_and_grads(
    params: dict[str, np.ndarray], X: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean binary cross-entropy of the network on (X, y) and its analytic
    gradients with respect to every parameter."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    pre = X @ params["W1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params["W2"] + params["b2"]
    # BCE via softplus(logits) - y*logits, stable for large |logits|
    loss = float(
        np.mean(np.maximum(logits, 0.0) - y * logits + np.log1p(np.exp(-np.abs(logits))))
    )
    dlogits = (_sigmoid(logits) - y) / n
    dhidden = np.outer(dlogits, params["W2"])
    dpre = dhidden * (pre > 0.0)
    grads = {
        "W1": X.T @ dpre,
        "b1": dpre.sum(axis=0),
        "W2": hidden.T @ dlogits,
        "b2": np.asarray(dlogits.sum()),
    }
    return loss, grads


def _nn_train(
    X: np.ndarray, y: np.ndarray, hp: NeuralNetHyper, seed: int
) -> dict[str, np.ndarray]:
    params = _nn_init(X.shape[1], hp.hidden, seed)
    for _ in range(hp.epochs):
        _, grads = nn_loss_and_grads(params, X, y)
        for key in params:
            params[key] = params[key] - hp.learning_rate * grads[key]
    return params


# ------------------------------------------------------------------ dump/load

_FORMAT_VERSION = 1


def save_model(model: ScoreModel, path) -> None:
    """Dump a fitted model to an internal binary blob; round-trip exact."""
    blob = {
        "format_version": _FORMAT_VERSION,
        "model_kind": model.model_kind,
        "hyper": model.hyper,
        "train_seed": model.train_seed,
        "d": model.d,
        "state": model.state,
    }
    with open(path, "wb") as fh:
        pickle.dump(blob, fh)


def load_model(path) -> ScoreModel:
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    if blob.get("format_version") != _FORMAT_VERSION:
        raise InvalidInputError(
            f"unsupported model blob version {blob.get('format_version')!r}"
        )
    return ScoreModel(
        model_kind=blob["model_kind"],
        hyper=blob["hyper"],
        train_seed=blob["train_seed"],
        d=blob["d"],
        state=blob["state"],
    )

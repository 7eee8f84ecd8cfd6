"""Split construction: synthetic samplers and CSV ingestion for real data.

Three synthetic families produce i.i.d. nulls from ``P0`` and novelties from
``P1`` so that the null-exchangeability the detector relies on holds by
construction:

- ``independent_gaussian``: nulls N(0, I_d); novelties shift the first five
  coordinates by ``sqrt(2 log d)``.
- ``non_gaussian_beta``: first two coordinates Beta(5,5) under the null vs
  Beta(1,3) under the alternative; remaining coordinates Beta(1,1) for both.
- ``exchangeable_gaussian``: equicorrelated covariance ``c 11' + (b^2 - c) I``
  with null mean ``a 1`` and novelty mean ``(a + delta) 1``.

Real datasets arrive as headered, comma-separated, UTF-8 CSV files; a spec
names the label column, the rule deciding which raw labels count as null, and
whether to standardize features (statistics fit on training nulls only).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .detector import DataSplit
from .errors import DatasetFormatError, DatasetSizeError, InvalidInputError

__all__ = [
    "FAMILIES",
    "BUNDLED_DATASETS",
    "SyntheticSpec",
    "RealDatasetSpec",
    "generate_split",
    "load_real_split",
    "bundled_data_path",
    "bundled_dataset_spec",
]

FAMILIES = ("independent_gaussian", "non_gaussian_beta", "exchangeable_gaussian")

# Beta-family shape parameters: (null first-two, novelty first-two, all other
# coordinates). Beta(1,1) is uniform background noise.
_BETA_NULL = (5.0, 5.0)
_BETA_ALT = (1.0, 3.0)
_BETA_BACKGROUND = (1.0, 1.0)

_GAUSSIAN_SHIFTED_COORDS = 5


@dataclass(frozen=True)
class SyntheticSpec:
    """Which family to sample from, its dimension, and its free parameters.

    ``shift`` (independent Gaussian) defaults to ``sqrt(2 log d)``;
    ``delta`` (exchangeable mean shift) defaults to ``sqrt(2 log d) / 2``.
    The equicorrelation parameters keep the covariance positive definite
    whenever ``b2 > c > -b2 / (d - 1)``.
    """

    family: str = "independent_gaussian"
    d: int = 20
    shift: float | None = None
    a: float = 0.0
    b2: float = 1.0
    c: float = 0.3
    delta: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown synthetic family {self.family!r}")
        if self.family == "independent_gaussian" and self.d < _GAUSSIAN_SHIFTED_COORDS:
            raise InvalidInputError(
                f"independent_gaussian needs d >= {_GAUSSIAN_SHIFTED_COORDS} "
                f"(the shift touches the first {_GAUSSIAN_SHIFTED_COORDS} coordinates), got d={self.d}"
            )
        if self.family == "non_gaussian_beta" and self.d < 2:
            raise InvalidInputError(f"non_gaussian_beta needs d >= 2, got d={self.d}")
        if self.d < 1:
            raise InvalidInputError(f"dimension must be positive, got d={self.d}")
        if self.family == "exchangeable_gaussian":
            lo = -self.b2 / (self.d - 1) if self.d > 1 else -math.inf
            if not (self.b2 > self.c > lo):
                raise InvalidInputError(
                    "exchangeable covariance is not positive definite: "
                    f"need b2 > c > -b2/(d-1), got b2={self.b2}, c={self.c}, d={self.d}"
                )
        if self.shift is not None and not self.shift > 0:
            raise InvalidInputError(f"shift must be positive, got {self.shift}")
        if self.delta is not None and not self.delta > 0:
            raise InvalidInputError(f"delta must be positive, got {self.delta}")

    @property
    def resolved_shift(self) -> float:
        if self.shift is not None:
            return float(self.shift)
        return math.sqrt(2.0 * math.log(self.d))

    @property
    def resolved_delta(self) -> float:
        if self.delta is not None:
            return float(self.delta)
        return math.sqrt(2.0 * math.log(self.d)) / 2.0


def _check_sizes(n: int, m: int, k: int, m0: int) -> None:
    for name, value in (("n", n), ("m", m), ("k", k), ("m0", m0)):
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise InvalidInputError(f"{name} must be an integer, got {value!r}")
    if k < 1 or k >= n:
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    if m < 1:
        raise InvalidInputError(f"need m >= 1, got m={m}")
    if not 0 <= m0 <= m:
        raise InvalidInputError(f"need 0 <= m0 <= m, got m0={m0}, m={m}")


def _sample_nulls(spec: SyntheticSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    d = spec.d
    if spec.family == "independent_gaussian":
        return rng.standard_normal((count, d))
    if spec.family == "non_gaussian_beta":
        X = rng.beta(*_BETA_BACKGROUND, size=(count, d))
        X[:, :2] = rng.beta(*_BETA_NULL, size=(count, 2))
        return X
    return _sample_equicorrelated(spec, count, rng, mean=spec.a)


def _sample_novelties(spec: SyntheticSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    d = spec.d
    if spec.family == "independent_gaussian":
        X = rng.standard_normal((count, d))
        X[:, :_GAUSSIAN_SHIFTED_COORDS] += spec.resolved_shift
        return X
    if spec.family == "non_gaussian_beta":
        X = rng.beta(*_BETA_BACKGROUND, size=(count, d))
        X[:, :2] = rng.beta(*_BETA_ALT, size=(count, 2))
        return X
    return _sample_equicorrelated(spec, count, rng, mean=spec.a + spec.resolved_delta)


def _sample_equicorrelated(
    spec: SyntheticSpec, count: int, rng: np.random.Generator, mean: float
) -> np.ndarray:
    d = spec.d
    cov = spec.c * np.ones((d, d)) + (spec.b2 - spec.c) * np.eye(d)
    L = np.linalg.cholesky(cov)
    return rng.standard_normal((count, d)) @ L.T + mean


def generate_split(
    spec: SyntheticSpec, n: int, m: int, k: int, m0: int, seed: int | None = None
) -> DataSplit:
    """Draw a full detection split: n i.i.d. nulls (k train, n-k calibration)
    plus a test block of m0 nulls followed by m-m0 novelties, with ground
    truth recorded. ``seed=None`` falls back to ``spec.seed``."""
    _check_sizes(n, m, k, m0)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    nulls = _sample_nulls(spec, n + m0, rng)
    novel = _sample_novelties(spec, m - m0, rng)
    test = np.concatenate([nulls[n:], novel])
    is_novel = np.r_[np.zeros(m0, dtype=bool), np.ones(m - m0, dtype=bool)]
    return DataSplit(nulls[:k], nulls[k:n], test, is_novel)


# ----------------------------------------------------------------- real data


@dataclass(frozen=True)
class RealDatasetSpec:
    """How to turn a labeled CSV into a detection split.

    ``null_class_rule`` decides which raw label strings count as null: either
    a collection of null label values, or a callable mapping one raw label
    string to a bool (collections keep specs serializable for config files).
    """

    path: str
    label_column: str
    null_class_rule: object
    feature_columns: tuple[str, ...] | None = None
    standardize: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not str(self.path):
            raise InvalidInputError("dataset path must be non-empty")
        if not str(self.label_column):
            raise InvalidInputError("label column name must be non-empty")
        rule = self.null_class_rule
        if not callable(rule):
            if isinstance(rule, str) or not isinstance(rule, Sequence):
                raise InvalidInputError(
                    "null_class_rule must be a callable or a sequence of label values, "
                    f"got {rule!r}"
                )
            object.__setattr__(self, "null_class_rule", tuple(str(v) for v in rule))
        if self.feature_columns is not None:
            object.__setattr__(self, "feature_columns", tuple(self.feature_columns))

    def null_mask(self, raw_labels: Sequence[str]) -> np.ndarray:
        rule = self.null_class_rule
        if callable(rule):
            return np.fromiter((bool(rule(v)) for v in raw_labels), dtype=bool)
        values = set(rule)
        return np.fromiter((v in values for v in raw_labels), dtype=bool)


def _read_csv(path: str, label_column: str, feature_columns):
    """Parse a headered, comma-separated, UTF-8 CSV into (features, labels)."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DatasetFormatError(f"{path}: file is empty (a header row is required)")
            header = [h.strip() for h in header]
            rows = [row for row in reader if row]
    except UnicodeDecodeError as exc:
        raise DatasetFormatError(f"{path}: not valid UTF-8 ({exc})") from exc

    if label_column not in header:
        raise DatasetFormatError(
            f"{path}: label column {label_column!r} not in header {header}"
        )
    if feature_columns is None:
        feature_columns = tuple(h for h in header if h != label_column)
    missing = [c for c in feature_columns if c not in header]
    if missing:
        raise DatasetFormatError(f"{path}: feature columns {missing} not in header")
    if not feature_columns:
        raise DatasetFormatError(f"{path}: no feature columns besides the label")

    label_pos = header.index(label_column)
    feature_pos = [header.index(c) for c in feature_columns]
    width = len(header)
    features = np.empty((len(rows), len(feature_pos)))
    labels = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DatasetFormatError(
                f"{path}: row {i + 2} has {len(row)} fields, expected {width}"
            )
        for j, pos in enumerate(feature_pos):
            cell = row[pos].strip()
            try:
                features[i, j] = float(cell)
            except ValueError:
                raise DatasetFormatError(
                    f"{path}: row {i + 2}, column {feature_columns[j]!r}: "
                    f"could not parse {cell!r} as a number"
                ) from None
        labels.append(row[label_pos].strip())
    return features, labels


def load_real_split(
    spec: RealDatasetSpec, n: int, m: int, k: int, m0: int, seed: int | None = None
) -> DataSplit:
    """Subsample a labeled CSV into a detection split: n nulls for
    train/calibration plus m0 nulls and m-m0 novelties for test, drawn
    uniformly without replacement. Standardization statistics, when enabled,
    are fit on the k training nulls only."""
    _check_sizes(n, m, k, m0)
    features, labels = _read_csv(str(spec.path), spec.label_column, spec.feature_columns)
    is_null = spec.null_mask(labels)
    null_pool = np.flatnonzero(is_null)
    novel_pool = np.flatnonzero(~is_null)
    m1 = m - m0
    if null_pool.size < n + m0:
        raise DatasetSizeError(
            f"{spec.path}: requested {n + m0} null rows but only {null_pool.size} available"
        )
    if novel_pool.size < m1:
        raise DatasetSizeError(
            f"{spec.path}: requested {m1} novelty rows but only {novel_pool.size} available"
        )

    rng = np.random.default_rng(spec.seed if seed is None else seed)
    null_pick = rng.choice(null_pool, size=n + m0, replace=False)
    novel_pick = rng.choice(novel_pool, size=m1, replace=False)

    train = features[null_pick[:k]]
    cal = features[null_pick[k:n]]
    test = np.concatenate([features[null_pick[n:]], features[novel_pick]])
    if spec.standardize:
        center = train.mean(axis=0)
        scale = train.std(axis=0)
        scale[scale == 0.0] = 1.0
        train = (train - center) / scale
        cal = (cal - center) / scale
        test = (test - center) / scale
    is_novel = np.r_[np.zeros(m0, dtype=bool), np.ones(m1, dtype=bool)]
    return DataSplit(train, cal, test, is_novel)


# ---------------------------------------------------------- bundled excerpts

# Small excerpt files shipped with the package so the full pipeline runs
# offline; scripts/fetch_datasets.py replaces them with the real thing.
BUNDLED_DATASETS = ("shuttle", "creditcard", "kddcup99", "mammography")

_BUNDLED_RULES: Mapping[str, tuple[str, object]] = {
    # dataset -> (label column, null rule)
    "shuttle": ("class", ("1",)),
    "creditcard": ("Class", ("0",)),
    "kddcup99": ("label", ("normal",)),
    "mammography": ("class", ("-1",)),
}


def bundled_data_path(name: str) -> Path:
    """Filesystem path of a bundled dataset excerpt."""
    if name not in BUNDLED_DATASETS:
        raise InvalidInputError(
            f"unknown bundled dataset {name!r}; choose from {BUNDLED_DATASETS}"
        )
    return Path(resources.files("fdrbench").joinpath(f"data/{name}.csv"))


def bundled_dataset_spec(name: str, standardize: bool = True, seed: int = 0) -> RealDatasetSpec:
    """A ready-to-load spec for a bundled excerpt (label column and null rule
    filled in: Shuttle class 1 is null, classes 2-7 are novelties; Credit Card
    class 0 is null; KDDCup99 'normal' traffic is null; Mammography class -1
    is null)."""
    label_column, rule = _BUNDLED_RULES[name] if name in _BUNDLED_RULES else (None, None)
    if label_column is None:
        raise InvalidInputError(
            f"unknown bundled dataset {name!r}; choose from {BUNDLED_DATASETS}"
        )
    return RealDatasetSpec(
        path=str(bundled_data_path(name)),
        label_column=label_column,
        null_class_rule=rule,
        standardize=standardize,
        seed=seed,
    )

"""Attack orchestration under three threat models.

Each scheme decides who trains the attacker's score function g(z), which test
rows enter the attack set, and what the detector sees afterwards:

* oracle    -- the attacker holds every row with its true label and attacks a
               fixed set of known-null test rows; the worst case that the FDR
               upper bound α + m_a·E[1/(R̃∨1)] speaks to.
* surrogate -- the attacker holds only the test rows plus a one-shot label
               query against the deployed detector, and trains a surrogate on
               the returned pseudo-labels.
* direct    -- the attacker holds the training data and the detector's full
               configuration but no test labels, reproduces the detection
               locally, and targets the unrejected rows closest to the
               rejection threshold.

Common mechanics: the attack set is chosen by a size rule (fixed count or an
intensity fraction of the unrejected rows) and a selection rule; each selected
row is perturbed by a hard-label attack against the attacker's own decision
function (the perturbation flips that decision, whichever side it starts on);
non-attacked rows pass through bitwise-unchanged; finally the user's detector
re-runs on the attacked test block. A failed perturbation leaves the original
row in place but still counts toward the attack size in the bound accounting,
which can only loosen the estimated bound.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .attacks import AttackOutcome, AttackParams, attack_point
from .detector import (
    DataSplit,
    DetectionResult,
    DetectorConfig,
    build_pu_dataset,
    detect_from_scores,
    ground_truth_mask,
    run_detector,
)
from .errors import DegenerateSurrogateError, InvalidInputError
from .learners import (
    DecisionFn,
    LabeledDataset,
    LearnerConfig,
    decide_batch,
    score_batch,
    train_from_config,
    train_score_function,
)

__all__ = [
    "SCHEMES",
    "SELECTION_RULES",
    "SizeRule",
    "AttackPlan",
    "SchemeResult",
    "smallest_value_order",
    "run_oracle_scheme",
    "run_surrogate_scheme",
    "run_direct_scheme",
]

SCHEMES = ("oracle", "surrogate", "direct")

# Selection rules, by the scheme that uses them:
#   fixed_null_indices             oracle default: first m_a true-null rows
#   boundary_nulls                 oracle, opt-in: nulls nearest g's boundary
#   smallest_pvalues_unrejected    direct default: closest to the BH threshold
#   closest_to_boundary_unrejected surrogate default: |g - 0.5| ascending
#   random_unrejected              surrogate/direct, opt-in: uniform subset
SELECTION_RULES = (
    "fixed_null_indices",
    "smallest_pvalues_unrejected",
    "random_unrejected",
    "boundary_nulls",
    "closest_to_boundary_unrejected",
)

# Sub-stream tag so the random selection rule never shares draws with the
# per-point attack streams (which hash (seed, point_index)).
_SELECTION_STREAM = 104_729

# Initialization candidates are pre-sorted by distance attacker-side and
# truncated; the attack picks the closest candidate that decides 1, so
# truncating to the nearest rows yields the same starting point while
# charging fewer oracle queries.
_INIT_POOL_CAP = 64


# ------------------------------------------------------------------- types


@dataclass(frozen=True)
class SizeRule:
    """How many rows to attack: a fixed count or a fraction of the unrejected.

    ``fixed(m_a)`` asks for exactly ``m_a`` rows (clamped, with a warning,
    when fewer are available); ``intensity(gamma)`` asks for
    ``floor(gamma * available)`` with ``gamma`` in (0, 1].
    """

    kind: str
    m_a: int | None = None
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "fixed":
            if self.gamma is not None:
                raise InvalidInputError("fixed size rule takes no intensity")
            if self.m_a is None or int(self.m_a) != self.m_a or self.m_a < 0:
                raise InvalidInputError("fixed size rule needs an integer m_a >= 0")
            object.__setattr__(self, "m_a", int(self.m_a))
        elif self.kind == "intensity":
            if self.m_a is not None:
                raise InvalidInputError("intensity size rule takes no fixed count")
            if self.gamma is None or not 0.0 < float(self.gamma) <= 1.0:
                raise InvalidInputError("attack intensity must lie in (0, 1]")
            object.__setattr__(self, "gamma", float(self.gamma))
        else:
            raise InvalidInputError(f"unknown size rule {self.kind!r}")

    @staticmethod
    def fixed(m_a: int) -> "SizeRule":
        return SizeRule(kind="fixed", m_a=m_a)

    @staticmethod
    def intensity(gamma: float) -> "SizeRule":
        return SizeRule(kind="intensity", gamma=gamma)

    def resolve(self, available: int) -> int:
        """Attack-set size given how many rows are eligible."""
        if available < 0:
            raise InvalidInputError("available count cannot be negative")
        if self.kind == "fixed":
            return min(self.m_a, available)
        return int(np.floor(self.gamma * available))


@dataclass(frozen=True)
class AttackPlan:
    """Which test rows were attacked, and under what rules."""

    scheme: str
    attack_set: np.ndarray
    size_rule: SizeRule
    selection_rule: str
    n_test: int

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")
        if self.selection_rule not in SELECTION_RULES:
            raise InvalidInputError(f"unknown selection rule {self.selection_rule!r}")
        idx = np.asarray(self.attack_set, dtype=np.int64).ravel()
        object.__setattr__(self, "attack_set", idx)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_test):
            raise InvalidInputError("attack set indices must lie in [0, n_test)")
        if np.unique(idx).size != idx.size:
            raise InvalidInputError("attack set indices must be unique")
        if self.size_rule.kind == "fixed" and idx.size > self.size_rule.m_a:
            raise InvalidInputError("attack set exceeds the fixed size rule")

    @property
    def size(self) -> int:
        return int(self.attack_set.size)


@dataclass(frozen=True)
class SchemeResult:
    """Attacked test block, the plan that produced it, per-point outcomes,
    and the user's re-run detection on the attacked data."""

    attacked_test: np.ndarray
    plan: AttackPlan
    per_point: tuple[AttackOutcome, ...]
    post_detection: DetectionResult
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        attacked = np.asarray(self.attacked_test, dtype=np.float64)
        object.__setattr__(self, "attacked_test", attacked)
        object.__setattr__(self, "per_point", tuple(self.per_point))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if attacked.ndim != 2 or attacked.shape[0] != self.plan.n_test:
            raise InvalidInputError("attacked test block must keep one row per test point")
        if len(self.per_point) != self.plan.size:
            raise InvalidInputError("need exactly one attack outcome per attacked row")

    @property
    def n_attacked(self) -> int:
        """Attack-set size for the bound accounting (failed attacks included)."""
        return self.plan.size

    @property
    def n_flipped(self) -> int:
        return sum(1 for out in self.per_point if out.success)

    @property
    def queries_used(self) -> int:
        return sum(out.queries_used for out in self.per_point)


# ----------------------------------------------------------------- helpers


def smallest_value_order(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` smallest entries, ascending, ties by index."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if count < 0 or count > values.size:
        raise InvalidInputError("count must lie in [0, len(values)]")
    return np.argsort(values, kind="stable")[:count].astype(np.int64)


class _InvertedDecision:
    """Hard-label view with 0 and 1 swapped, for targets that start on the
    decided-1 side: the attack machinery always walks a 0-decided point toward
    the 1-decided region, so flipping 1 -> 0 runs against the inverted oracle."""

    def __init__(self, inner: DecisionFn):
        self._inner = inner

    def decide_batch(self, Z: np.ndarray) -> np.ndarray:
        return 1 - decide_batch(self._inner, Z)


def _nearest_rows(pool: np.ndarray, x: np.ndarray, cap: int = _INIT_POOL_CAP) -> np.ndarray:
    distances = np.linalg.norm(pool - x[None, :], axis=1)
    order = np.argsort(distances, kind="stable")[:cap]
    return pool[order]


def _empty_plan(scheme: str, size_rule: SizeRule, selection: str, m: int) -> AttackPlan:
    return AttackPlan(
        scheme=scheme,
        attack_set=np.empty(0, dtype=np.int64),
        size_rule=size_rule,
        selection_rule=selection,
        n_test=m,
    )


def _random_subset(candidates: np.ndarray, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([int(np.uint64(seed)), _SELECTION_STREAM])
    return rng.choice(candidates, size=count, replace=False).astype(np.int64)


def _attack_rows(
    test: np.ndarray,
    targets: np.ndarray,
    decision: DecisionFn,
    candidates: np.ndarray,
    atk: AttackParams,
    seed: int,
) -> tuple[np.ndarray, tuple[AttackOutcome, ...], list[str]]:
    """Attack the selected rows against ``decision``; everything else passes
    through bitwise-unchanged.

    ``candidates`` are the rows the attacker may start from (restricted by the
    scheme's threat model). They are split by their hard label once, attacker
    side; each target is then attacked toward the side opposite its own
    decision, seeded per point index so outcomes are order-independent.
    ``atk.seed`` is superseded by ``seed`` to keep the whole scheme
    reproducible from one argument.
    """
    attacked = test.copy()
    outcomes: list[AttackOutcome] = []
    notes: list[str] = []
    if targets.size == 0:
        return attacked, tuple(outcomes), notes

    candidates = np.asarray(candidates, dtype=np.float64)
    cand_decisions = decide_batch(decision, candidates)
    pools = {1: candidates[cand_decisions == 1], 0: candidates[cand_decisions == 0]}
    target_decisions = decide_batch(decision, test[targets])
    missing_sides: set[int] = set()

    for i, d0 in zip(targets.tolist(), target_decisions.tolist()):
        row = test[i]
        pool = pools[1 - d0]
        if pool.shape[0] == 0:
            outcomes.append(
                AttackOutcome(perturbed=row.copy(), success=False, queries_used=0, final_l2=0.0)
            )
            missing_sides.add(1 - d0)
            continue
        oracle = decision if d0 == 0 else _InvertedDecision(decision)
        params = replace(atk, seed=seed, init_targets=_nearest_rows(pool, row))
        outcome = attack_point(row, oracle, params, point_index=int(i))
        outcomes.append(outcome)
        attacked[i] = outcome.perturbed
    for side in sorted(missing_sides):
        notes.append(
            f"no initialization candidates decide {side}; those attacks were "
            "recorded as failed no-ops"
        )
    return attacked, tuple(outcomes), notes


# ----------------------------------------------------------------- schemes


def run_oracle_scheme(
    split: DataSplit,
    m_a: int,
    user_cfg: DetectorConfig,
    attacker_cfg: LearnerConfig,
    atk: AttackParams,
    seed: int = 0,
    selection: str = "fixed_null_indices",
) -> SchemeResult:
    """Full-knowledge attack: g is trained on the true labels and a fixed set
    of m_a known-null test rows is pushed across g's decision boundary.

    The attack set is the first ``m_a`` null rows in test order (a fixed,
    data-independent choice); ``selection="boundary_nulls"`` instead picks the
    nulls whose g-scores sit closest to the 0.5 threshold.
    """
    is_novel = ground_truth_mask(split)
    m0 = int(np.count_nonzero(~is_novel))
    if not 0 <= m_a <= m0:
        raise InvalidInputError(f"m_a must lie in [0, {m0}], got {m_a}")
    if selection not in ("fixed_null_indices", "boundary_nulls"):
        raise InvalidInputError(f"oracle scheme does not support selection {selection!r}")

    size_rule = SizeRule.fixed(m_a)
    if m_a == 0:
        return SchemeResult(
            attacked_test=split.test.copy(),
            plan=_empty_plan("oracle", size_rule, selection, split.m),
            per_point=(),
            post_detection=run_detector(split, user_cfg),
        )

    labeled = LabeledDataset(
        features=np.concatenate([split.train_null, split.calibration_null, split.test]),
        labels=np.concatenate(
            [np.zeros(split.n, dtype=np.int64), is_novel.astype(np.int64)]
        ),
    )
    g = train_from_config(labeled, attacker_cfg)
    decision = DecisionFn(g)

    null_indices = np.flatnonzero(~is_novel)
    if selection == "fixed_null_indices":
        targets = null_indices[:m_a]
    else:
        gap = np.abs(score_batch(g, split.test[null_indices]) - decision.threshold)
        targets = null_indices[smallest_value_order(gap, m_a)]

    attacked, outcomes, notes = _attack_rows(
        split.test, targets, decision, labeled.features, atk, seed
    )
    return SchemeResult(
        attacked_test=attacked,
        plan=AttackPlan(
            scheme="oracle",
            attack_set=targets,
            size_rule=size_rule,
            selection_rule=selection,
            n_test=split.m,
        ),
        per_point=outcomes,
        post_detection=run_detector(split.with_test(attacked), user_cfg),
        warnings=tuple(notes),
    )


def run_surrogate_scheme(
    test_only: np.ndarray,
    query,
    size_rule: SizeRule,
    attacker_cfg: LearnerConfig,
    atk: AttackParams,
    seed: int = 0,
    selection: str = "closest_to_boundary_unrejected",
) -> SchemeResult:
    """Query-only attack: the attacker sees the m test rows and one label
    query, trains a surrogate g on the pseudo-labels, and attacks unrejected
    rows. By construction this function receives no training rows and no
    ground truth.

    ``query`` must expose ``query_labels() -> 0/1 per test row`` (the single
    attacker-facing call) and ``rerun(attacked_test) -> DetectionResult`` (the
    user's own re-analysis, invoked once at the end).
    """
    test = np.asarray(test_only, dtype=np.float64)
    if test.ndim != 2 or test.shape[0] == 0:
        raise InvalidInputError("test_only must be a non-empty 2-D matrix")
    if selection not in ("closest_to_boundary_unrejected", "random_unrejected"):
        raise InvalidInputError(f"surrogate scheme does not support selection {selection!r}")
    m = test.shape[0]

    pseudo = np.asarray(query.query_labels(), dtype=np.int64)
    if pseudo.shape != (m,) or not np.isin(pseudo, (0, 1)).all():
        raise InvalidInputError("label query must return one 0/1 label per test row")
    if pseudo.min() == pseudo.max():
        raise DegenerateSurrogateError(
            f"pseudo-labels are all {int(pseudo[0])}; a surrogate needs both classes"
        )

    g = train_from_config(LabeledDataset(features=test, labels=pseudo), attacker_cfg)
    decision = DecisionFn(g)

    unrejected = np.flatnonzero(pseudo == 0)
    count = size_rule.resolve(unrejected.size)
    notes: list[str] = []
    if size_rule.kind == "fixed" and count < size_rule.m_a:
        notes.append(
            f"attack size clamped from {size_rule.m_a} to the {count} unrejected rows"
        )
    if selection == "closest_to_boundary_unrejected":
        gap = np.abs(score_batch(g, test[unrejected]) - decision.threshold)
        targets = unrejected[smallest_value_order(gap, count)]
    else:
        targets = _random_subset(unrejected, count, seed)

    attacked, outcomes, attack_notes = _attack_rows(test, targets, decision, test, atk, seed)
    notes.extend(attack_notes)
    return SchemeResult(
        attacked_test=attacked,
        plan=AttackPlan(
            scheme="surrogate",
            attack_set=targets,
            size_rule=size_rule,
            selection_rule=selection,
            n_test=m,
        ),
        per_point=outcomes,
        post_detection=query.rerun(attacked),
        warnings=tuple(notes),
    )


def run_direct_scheme(
    split: DataSplit,
    user_cfg: DetectorConfig,
    atk: AttackParams,
    size_rule: SizeRule,
    seed: int = 0,
    selection: str = "smallest_pvalues_unrejected",
) -> SchemeResult:
    """Data-and-algorithm attack without test labels: the attacker reruns the
    detection pipeline locally (ties on the calibration side counted against
    the test point), then attacks the unrejected rows with the smallest local
    p-values against the local score's own 0.5 decision.
    """
    if selection not in ("smallest_pvalues_unrejected", "random_unrejected"):
        raise InvalidInputError(f"direct scheme does not support selection {selection!r}")

    local_model = train_score_function(
        build_pu_dataset(split), user_cfg.learner_kind, user_cfg.hyper, seed=user_cfg.train_seed
    )
    calibration_scores = score_batch(local_model, split.calibration_null)
    test_scores = score_batch(local_model, split.test)
    local = detect_from_scores(
        calibration_scores, test_scores, alpha=user_cfg.alpha, comparator=">="
    )

    unrejected = np.flatnonzero(local.labels == 0)
    if unrejected.size == 0:
        return SchemeResult(
            attacked_test=split.test.copy(),
            plan=_empty_plan("direct", size_rule, selection, split.m),
            per_point=(),
            post_detection=run_detector(split, user_cfg),
            warnings=(
                "the local detection rejected every hypothesis; nothing to attack",
            ),
        )

    count = size_rule.resolve(unrejected.size)
    notes: list[str] = []
    if size_rule.kind == "fixed" and count < size_rule.m_a:
        notes.append(
            f"attack size clamped from {size_rule.m_a} to the {count} unrejected rows"
        )
    if selection == "smallest_pvalues_unrejected":
        local_pvalues = local.pvalues.to_floats()[unrejected]
        targets = unrejected[smallest_value_order(local_pvalues, count)]
    else:
        targets = _random_subset(unrejected, count, seed)

    candidates = np.concatenate([split.train_null, split.calibration_null, split.test])
    attacked, outcomes, attack_notes = _attack_rows(
        split.test, targets, DecisionFn(local_model), candidates, atk, seed
    )
    notes.extend(attack_notes)
    return SchemeResult(
        attacked_test=attacked,
        plan=AttackPlan(
            scheme="direct",
            attack_set=targets,
            size_rule=size_rule,
            selection_rule=selection,
            n_test=split.m,
        ),
        per_point=outcomes,
        post_detection=run_detector(split.with_test(attacked), user_cfg),
        warnings=tuple(notes),
    )

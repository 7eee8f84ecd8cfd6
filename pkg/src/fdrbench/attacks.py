"""Decision-based perturbation search against a hard-label oracle.

Two algorithms behind one entry point, both using only 0/1 decisions (never
scores): a HopSkipJump-style iteration (boundary multisection, Monte Carlo
normal-direction estimate from hard-label probes, geometrically decaying step
search) and a Boundary-style random walk (orthogonal perturbation on the
sphere around the original, contraction toward it, multiplicative step-size
adaptation targeting ~50% acceptance).

Both start from the closest supplied adversarial candidate and first bisect
along the segment to the original, so even a tiny budget yields a reasonable
boundary point. A failed attack (budget exhausted before any decision flip is
confirmed) returns the original unchanged.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AttackInitializationError, InvalidInputError
from .learners import DecisionFn, decide_batch

__all__ = [
    "ALGORITHMS",
    "HsjaParams",
    "BoundaryParams",
    "AttackParams",
    "AttackOutcome",
    "CallableDecision",
    "CountingOracle",
    "BoundaryWalkState",
    "attack_point",
    "hopskipjump_step",
    "boundary_step",
    "bisect_to_boundary",
]

ALGORITHMS = ("hopskipjump", "boundary")


@dataclass(frozen=True)
class HsjaParams:
    """Step/annealing constants for the HopSkipJump-style algorithm."""

    iterations: int = 40
    probes_base: int = 100  # probe count at iteration t is ceil(probes_base * sqrt(t))
    bsearch_tol: float = 1e-3  # relative bracket width for boundary multisection
    grid: int = 15  # interior points per multisection round
    step_halvings: int = 10

    def __post_init__(self) -> None:
        if self.probes_base < 1:
            raise InvalidInputError("probes_base must be positive")
        if not 0 < self.bsearch_tol < 1:
            raise InvalidInputError("bsearch_tol must be in (0, 1)")


@dataclass(frozen=True)
class BoundaryParams:
    """Step/annealing constants for the Boundary-style random walk."""

    steps: int = 3000
    spherical_step: float = 1e-2
    source_step: float = 1e-2
    adapt_every: int = 10
    window: int = 50
    step_adaptation: float = 1.1

    def __post_init__(self) -> None:
        if self.spherical_step <= 0 or self.source_step <= 0:
            raise InvalidInputError("step sizes must be positive")
        if not self.step_adaptation > 1:
            raise InvalidInputError("step_adaptation must exceed 1")


@dataclass(frozen=True)
class AttackParams:
    algorithm: str
    init_targets: np.ndarray
    max_queries: int = 25_000
    hsja: HsjaParams = field(default_factory=HsjaParams)
    boundary: BoundaryParams = field(default_factory=BoundaryParams)
    norm: str = "l2"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidInputError(f"unknown attack algorithm {self.algorithm!r}")
        if self.norm != "l2":
            raise InvalidInputError("only the l2 norm is supported")
        if self.max_queries < 100:
            raise InvalidInputError("max_queries must be at least 100")
        if self.init_targets is None:
            raise AttackInitializationError("no starting adversarial candidates supplied")
        targets = np.asarray(self.init_targets, dtype=np.float64)
        object.__setattr__(self, "init_targets", targets)
        if targets.ndim != 2 or targets.shape[0] == 0:
            raise AttackInitializationError("init_targets must be a non-empty 2-D matrix")


@dataclass(frozen=True)
class AttackOutcome:
    perturbed: np.ndarray
    success: bool
    queries_used: int
    final_l2: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "perturbed", np.asarray(self.perturbed, dtype=np.float64))
        if self.queries_used < 0 or self.final_l2 < 0:
            raise InvalidInputError("queries_used and final_l2 must be non-negative")


@dataclass(frozen=True)
class CallableDecision:
    """Adapter turning a plain (q, d) -> {0,1}^q function into a hard-label oracle."""

    fn: Callable[[np.ndarray], np.ndarray]

    def decide_batch(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(Z, dtype=np.float64)), dtype=np.int64)


class _BudgetExhausted(Exception):
    """Internal: the next batch would exceed max_queries."""


class CountingOracle:
    """Wraps a hard-label oracle with exact query accounting and a hard budget.

    A batch that would push the count past the budget is refused before any
    evaluation, so ``used`` never exceeds ``max_queries``.
    """

    def __init__(self, oracle, max_queries: int):
        if isinstance(oracle, DecisionFn):
            self._call = lambda Z: decide_batch(oracle, Z)
        elif hasattr(oracle, "decide_batch"):
            self._call = oracle.decide_batch
        elif callable(oracle):
            self._call = lambda Z: np.asarray(oracle(Z), dtype=np.int64)
        else:
            raise InvalidInputError(f"not a hard-label oracle: {oracle!r}")
        self.max_queries = int(max_queries)
        self.used = 0

    def decide_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim != 2:
            raise InvalidInputError("oracle queries must be a 2-D batch")
        if self.used + Z.shape[0] > self.max_queries:
            raise _BudgetExhausted
        self.used += Z.shape[0]
        return np.asarray(self._call(Z), dtype=np.int64)


def bisect_to_boundary(
    oracle: CountingOracle,
    original: np.ndarray,
    adversarial: np.ndarray,
    tol: float = 1e-3,
    grid: int = 15,
) -> np.ndarray:
    """Shrink an adversarial point toward the original along their segment.

    Batched multisection on the mixing weight: each round queries ``grid``
    interior points at once and keeps the bracket [last 0-decision, first
    1-decision]. Returns the adversarial-side endpoint once the bracket is
    narrower than ``tol`` (relative to the full segment).
    """
    lo, hi = 0.0, 1.0
    direction = adversarial - original
    while hi - lo > tol:
        weights = lo + (hi - lo) * np.arange(1, grid + 1) / (grid + 1)
        labels = oracle.decide_batch(original + weights[:, None] * direction)
        ones = np.flatnonzero(labels == 1)
        if ones.size:
            first = ones[0]
            hi = weights[first]
            lo = weights[first - 1] if first > 0 else lo
        else:
            lo = weights[-1]
    return original + hi * direction


def hopskipjump_step(
    current: np.ndarray,
    original: np.ndarray,
    oracle: CountingOracle,
    rng: np.random.Generator,
    params: HsjaParams,
    t: int = 1,
) -> np.ndarray:
    """One outer HopSkipJump iteration; returns the next iterate (decision 1,
    no farther from the original than ``current``) or ``current`` unchanged
    when no improving move is confirmed."""
    d = current.size
    dist = float(np.linalg.norm(current - original))
    if dist == 0.0:
        return current

    # Monte Carlo direction estimate from hard-label probes on a small sphere,
    # baseline-corrected so a lopsided label mix does not bias the average.
    n_probes = int(np.ceil(params.probes_base * np.sqrt(t)))
    probes = rng.normal(size=(n_probes, d))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    delta = dist / d
    signs = 2.0 * oracle.decide_batch(current + delta * probes) - 1.0
    direction = (signs - signs.mean()) @ probes
    if np.linalg.norm(direction) < 1e-12:
        direction = signs @ probes
    norm = np.linalg.norm(direction)
    if norm < 1e-12:
        return current
    direction /= norm

    # geometric step search: largest surviving step among xi * 2^{-j}, one batch
    xi = dist / np.sqrt(t)
    scales = xi * 0.5 ** np.arange(params.step_halvings)
    candidates = current + scales[:, None] * direction
    labels = oracle.decide_batch(candidates)
    ones = np.flatnonzero(labels == 1)
    if ones.size == 0:
        return current
    moved = candidates[ones[0]]

    projected = bisect_to_boundary(
        oracle, original, moved, tol=params.bsearch_tol, grid=params.grid
    )
    if np.linalg.norm(projected - original) <= dist:
        return projected
    return current


_EMERGENCY_FACTOR = 1.1
_EMERGENCY_BAND = (0.3, 0.7)


def _adapt_step(
    step: float, window: deque, trials: int, params: BoundaryParams, cap: float
) -> float:
    """Multiplicative step-size control toward ~50% acceptance.

    A gentle factor applies every ``adapt_every`` trials; once the window is
    full, a stronger per-trial correction kicks in whenever the trailing rate
    leaves the inner band, so regime shifts (e.g. hitting the projection
    point) cannot drag the trailing acceptance far out of [0.2, 0.8] before
    the step size catches up.
    """
    rate = sum(window) / len(window)
    if len(window) == window.maxlen and rate < _EMERGENCY_BAND[0]:
        step /= _EMERGENCY_FACTOR
    elif len(window) == window.maxlen and rate > _EMERGENCY_BAND[1]:
        step *= _EMERGENCY_FACTOR
    elif trials % params.adapt_every == 0 and len(window) >= params.adapt_every:
        factor = params.step_adaptation if rate > 0.5 else 1.0 / params.step_adaptation
        step *= factor
    return float(np.clip(step, 1e-9, cap))


@dataclass
class BoundaryWalkState:
    """Mutable controller state for the Boundary-style walk.

    The orthogonal (spherical) move and the contraction toward the original
    carry separate step sizes, each adapted multiplicatively toward ~50%
    acceptance from its own trailing window. A shared factor would pin their
    ratio and stall the walk: the contraction penalty would permanently
    exceed the largest orthogonal margin gain.
    """

    spherical_step: float
    source_step: float
    spherical_window: deque = field(default_factory=lambda: deque(maxlen=30))
    source_window: deque = field(default_factory=lambda: deque(maxlen=30))
    spherical_trials: int = 0
    source_trials: int = 0

    @classmethod
    def from_params(cls, params: BoundaryParams) -> "BoundaryWalkState":
        return cls(
            spherical_step=params.spherical_step,
            source_step=params.source_step,
            spherical_window=deque(maxlen=params.window),
            source_window=deque(maxlen=params.window),
        )

    def record_spherical(self, accepted: bool, params: BoundaryParams) -> None:
        self.spherical_window.append(bool(accepted))
        self.spherical_trials += 1
        self.spherical_step = _adapt_step(
            self.spherical_step, self.spherical_window, self.spherical_trials, params, 1.0
        )

    def record_source(self, accepted: bool, params: BoundaryParams) -> None:
        self.source_window.append(bool(accepted))
        self.source_trials += 1
        self.source_step = _adapt_step(
            self.source_step, self.source_window, self.source_trials, params, 0.5
        )

    @property
    def trailing_acceptance(self) -> float:
        """Trailing acceptance of the orthogonal controller (its target is 50%)."""
        if not self.spherical_window:
            return 0.0
        return sum(self.spherical_window) / len(self.spherical_window)


def boundary_step(
    current: np.ndarray,
    original: np.ndarray,
    oracle: CountingOracle,
    rng: np.random.Generator,
    params: BoundaryParams,
    state: BoundaryWalkState | None = None,
) -> np.ndarray:
    """One Boundary-walk step, two phases with at most two hard-label queries:
    an orthogonal move along the sphere around the original (distance kept
    equal), then a contraction toward the original (distance strictly
    reduced). Each phase advances only if its candidate stays decision 1, so
    the distance trace is nonincreasing."""
    if state is None:
        state = BoundaryWalkState.from_params(params)
    dist = float(np.linalg.norm(current - original))
    if dist == 0.0:
        return current
    radial = (current - original) / dist

    eta = rng.normal(size=current.size)
    eta -= (eta @ radial) * radial
    eta_norm = np.linalg.norm(eta)
    if eta_norm < 1e-12:
        state.record_spherical(False, params)
        return current
    eta *= state.spherical_step * dist / eta_norm

    offset = current + eta - original
    spherical = original + offset * (dist / np.linalg.norm(offset))
    spherical_ok = oracle.decide_batch(spherical[None, :])[0] == 1
    state.record_spherical(spherical_ok, params)
    if not spherical_ok:
        return current

    contracted = original + (1.0 - state.source_step) * (spherical - original)
    source_ok = oracle.decide_batch(contracted[None, :])[0] == 1
    state.record_source(source_ok, params)
    return contracted if source_ok else spherical


def attack_point(
    original: np.ndarray,
    oracle,
    params: AttackParams,
    point_index: int = 0,
) -> AttackOutcome:
    """Flip the oracle's decision on ``original`` with near-minimal l2 change.

    The randomness stream is derived from (params.seed, point_index), so
    attacks on distinct points are order-independent. On budget exhaustion the
    best confirmed adversarial point so far is returned; if none was confirmed
    the attack is a no-op (original passed through, success False).
    """
    x0 = np.asarray(original, dtype=np.float64).ravel()
    if params.init_targets.shape[1] != x0.size:
        raise InvalidInputError("init_targets dimension does not match the point")
    counting = CountingOracle(oracle, params.max_queries)
    rng = np.random.default_rng([int(np.uint64(params.seed)), int(point_index)])

    best: np.ndarray | None = None
    try:
        if counting.decide_batch(x0[None, :])[0] != 0:
            raise InvalidInputError("original point is already decided 1")
        labels = counting.decide_batch(params.init_targets)
        hits = np.flatnonzero(labels == 1)
        if hits.size == 0:
            return AttackOutcome(
                perturbed=x0.copy(),
                success=False,
                queries_used=counting.used,
                final_l2=0.0,
            )
        distances = np.linalg.norm(params.init_targets[hits] - x0, axis=1)
        best = params.init_targets[hits[np.argmin(distances)]].copy()

        hsja = params.hsja
        best = bisect_to_boundary(
            counting, x0, best, tol=hsja.bsearch_tol, grid=hsja.grid
        )
        if params.algorithm == "hopskipjump":
            for t in range(1, hsja.iterations + 1):
                best = hopskipjump_step(best, x0, counting, rng, hsja, t=t)
        else:
            walk = params.boundary
            state = BoundaryWalkState.from_params(walk)
            for _ in range(walk.steps):
                best = boundary_step(best, x0, counting, rng, walk, state)
    except _BudgetExhausted:
        pass

    if best is None:
        return AttackOutcome(
            perturbed=x0.copy(), success=False, queries_used=counting.used, final_l2=0.0
        )
    return AttackOutcome(
        perturbed=best,
        success=True,
        queries_used=counting.used,
        final_l2=float(np.linalg.norm(best - x0)),
    )

"""Explicit decompositions that bound the guessing probability from below.

Any convex decomposition of the observed behavior into valid behaviors is a
strategy the adversary could use, so its guessing value can never exceed the
SDP upper bound.  These checks are built from elementary operations only and
share no code with the relaxation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .bell import Behavior, SettingsDistribution, all_deterministic_behaviors

WEIGHT_SUM_TOL = 1e-10
MIX_TOL = 1e-9
REMAINDER_TOL = 1e-9
SANDWICH_TOL = 1e-6


class SandwichError(AssertionError):
    """A lower bound exceeded the certified upper bound: assembly or solver bug."""


@dataclass(frozen=True, eq=False)
class ExplicitDecomposition:
    terms: tuple[tuple[float, Behavior], ...]
    target: Behavior
    complete: bool = False  # every term deterministic

    def __post_init__(self):
        terms = tuple((float(w), b) for w, b in self.terms)
        if not terms:
            raise ValueError("a decomposition needs at least one term")
        weights = np.array([w for w, _ in terms])
        if np.any(weights < 0):
            raise ValueError("decomposition weights must be nonnegative")
        if abs(weights.sum() - 1) > WEIGHT_SUM_TOL:
            raise ValueError(f"decomposition weights sum to {weights.sum():.17g}")
        for _, b in terms:
            sums = b.table.sum(axis=(0, 1))
            if b.table.min() < -MIX_TOL or np.abs(sums - 1).max() > MIX_TOL:
                raise ValueError("decomposition term is not a normalized probability table")
        object.__setattr__(self, "terms", terms)
        err = np.abs(self.mixture() - self.target.table).max()
        if err > MIX_TOL:
            raise ValueError(f"decomposition misses the target by {err:.3g}")

    def mixture(self) -> np.ndarray:
        return sum(w * b.table for w, b in self.terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])


def decomposition_guess_value(d: ExplicitDecomposition, dist: SettingsDistribution) -> float:
    """sum_terms w * sum_xy p(xy) max_ab P_term(ab|xy)."""
    value = 0.0
    for w, b in d.terms:
        best = b.table.max(axis=(0, 1))  # (x, y)
        value += w * float(np.sum(dist.weights * best))
    return value


def trivial_decomposition(b: Behavior) -> ExplicitDecomposition:
    return ExplicitDecomposition(((1.0, b),), b)


def _deterministic_tables() -> np.ndarray:
    return np.stack([d.table for d in all_deterministic_behaviors()])


def greedy_local_extraction(b: Behavior) -> ExplicitDecomposition:
    """Peel deterministic behaviors off ``b`` in lexicographic order.

    Each deterministic point takes the largest weight that keeps the residue
    entry-wise nonnegative.  A single pass can leave a residue even for local
    behaviors, so a nonnegative combination of the 16 points reproducing the
    residue (or, failing that, the whole behavior) is then sought with a
    linear program.  If the residue vanishes
    the result is all-deterministic; otherwise the normalized residue is kept
    as one remainder term.
    """
    table = b.table
    points = _deterministic_tables()
    residue = table.copy()
    weights = np.zeros(len(points))
    for k, d in enumerate(points):
        mask = d > 0
        w = max(0.0, float(residue[mask].min()))
        if w > 0:
            weights[k] = w
            residue = residue - w * d
    mass = 1.0 - weights.sum()

    if mass > REMAINDER_TOL:
        # greedy weights can push the residue out of the local cone, hence the second try from scratch
        extra = _complete_locally(residue, points)
        candidate = weights + extra if extra is not None else _complete_locally(table, points)
        if candidate is not None:
            weights = candidate
            residue = table - np.einsum("k,kabxy->abxy", weights, points)
            mass = 1.0 - weights.sum()

    dets = all_deterministic_behaviors()
    if np.abs(residue).max() <= REMAINDER_TOL:
        kept = [(w, dets[k]) for k, w in enumerate(weights) if w > 0]
        total = sum(w for w, _ in kept)
        return ExplicitDecomposition(tuple((w / total, d) for w, d in kept), b, complete=True)

    rest = np.clip(residue, 0.0, None)
    remainder = Behavior(rest / rest.sum(axis=(0, 1)))
    kept = [(w, dets[k]) for k, w in enumerate(weights) if w > 0]
    return ExplicitDecomposition((*kept, (mass, remainder)), b, complete=False)


def _complete_locally(residue: np.ndarray, points: np.ndarray) -> np.ndarray | None:
    """Nonnegative weights q with sum_k q_k D_k equal to the residue, if any exist."""
    a_eq = points.reshape(len(points), -1).T
    fit = scipy.optimize.linprog(
        np.zeros(len(points)), A_eq=a_eq, b_eq=residue.ravel(), bounds=(0, None), method="highs"
    )
    if fit.status != 0:
        return None
    q = np.clip(fit.x, 0.0, None)
    if np.abs(a_eq @ q - residue.ravel()).max() > REMAINDER_TOL:
        return None
    return q


@dataclass(frozen=True)
class SandwichReport:
    lower: float
    upper: float
    trivial: float
    greedy: float | None

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def sandwich_check(spec, result) -> SandwichReport:
    """Compare the certified upper bound with the best explicit lower bound.

    The greedy extraction only counts when it is complete: a partial one ends
    in a residue that need not be quantum-realizable.  Raises
    :class:`SandwichError` if lower > upper + 1e-6.
    """
    dist = spec.settings_distribution
    trivial = decomposition_guess_value(trivial_decomposition(spec.observed), dist)
    greedy_dec = greedy_local_extraction(spec.observed)
    greedy = decomposition_guess_value(greedy_dec, dist) if greedy_dec.complete else None
    lower = max(trivial, greedy if greedy is not None else -np.inf)
    upper = result.guessing_upper
    if lower > upper + SANDWICH_TOL:
        raise SandwichError(f"explicit decomposition reaches {lower:.12g} above the certified bound {upper:.12g}")
    return SandwichReport(lower, upper, trivial, greedy)


def random_local_mixture(rng: np.random.Generator, support: int | None = None) -> Behavior:
    """Random convex mixture of deterministic behaviors (Dirichlet weights)."""
    points = _deterministic_tables()
    idx = np.arange(len(points)) if support is None else rng.choice(len(points), size=support, replace=False)
    w = rng.dirichlet(np.ones(len(idx)))
    return Behavior(np.einsum("k,kabxy->abxy", w, points[idx]))


__all__ = [
    "ExplicitDecomposition",
    "SandwichError",
    "SandwichReport",
    "decomposition_guess_value",
    "greedy_local_extraction",
    "random_local_mixture",
    "sandwich_check",
    "trivial_decomposition",
]

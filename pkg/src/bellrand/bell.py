"""Behaviors, Bell expressions and exact locality tests for the 2222 scenario.

Tables are stored as numpy arrays indexed ``[a, b, x, y]``.  Outcome index 0
stands for the eigenvalue +1 and index 1 for -1; ``OUTCOME_SIGN`` is the only
place that convention lives.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-12
NO_SIGNALING_TOL = 1e-10
FACET_TOL = 1e-10

OUTCOME_SIGN = np.array([1.0, -1.0])

# Order of the nine physical quantities used for correlator-form vectors.
QUANTITIES = ("1", "A0", "A1", "B0", "B1", "A0B0", "A0B1", "A1B0", "A1B1")


@dataclass(frozen=True)
class Scenario:
    inputs_a: int = 2
    inputs_b: int = 2
    outputs_a: int = 2
    outputs_b: int = 2

    def __post_init__(self):
        sizes = (self.inputs_a, self.inputs_b, self.outputs_a, self.outputs_b)
        if sizes != (2, 2, 2, 2):
            raise ValueError(f"only the 2222 scenario is supported, got {sizes}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.outputs_a, self.outputs_b, self.inputs_a, self.inputs_b)


SCENARIO_2222 = Scenario()


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Behavior:
    """Conditional distribution P(ab|xy), stored as ``table[a, b, x, y]``.

    Construction only checks shape and finiteness so that inconsistent data
    can still be represented and reported on by :func:`validate_behavior`.
    """

    table: np.ndarray
    scenario: Scenario = SCENARIO_2222

    def __post_init__(self):
        table = _frozen(self.table)
        if table.shape != self.scenario.shape:
            raise ValueError(f"behavior table must have shape {self.scenario.shape}, got {table.shape}")
        if not np.all(np.isfinite(table)):
            raise ValueError("behavior table has non-finite entries")
        object.__setattr__(self, "table", table)

    def prob(self, a: int, b: int, x: int, y: int) -> float:
        return float(self.table[a, b, x, y])

    def correlator(self, x: int, y: int) -> float:
        return float(OUTCOME_SIGN @ self.table[:, :, x, y] @ OUTCOME_SIGN)

    def marginal_a(self, x: int, y: int | None = None) -> float:
        """<A_x>; averaged over Bob's settings unless ``y`` is given."""
        ys = range(2) if y is None else (y,)
        return float(np.mean([OUTCOME_SIGN @ self.table[:, :, x, yy].sum(axis=1) for yy in ys]))

    def marginal_b(self, y: int, x: int | None = None) -> float:
        xs = range(2) if x is None else (x,)
        return float(np.mean([self.table[:, :, xx, y].sum(axis=0) @ OUTCOME_SIGN for xx in xs]))

    def expectations(self) -> np.ndarray:
        """Correlator-form vector in ``QUANTITIES`` order (first entry is 1)."""
        return np.array(
            [
                1.0,
                self.marginal_a(0),
                self.marginal_a(1),
                self.marginal_b(0),
                self.marginal_b(1),
                self.correlator(0, 0),
                self.correlator(0, 1),
                self.correlator(1, 0),
                self.correlator(1, 1),
            ]
        )

    @classmethod
    def from_expectations(cls, values: Sequence[float]) -> "Behavior":
        """Inverse of :meth:`expectations` for no-signaling behaviors."""
        one, a0, a1, b0, b1, *corr = values
        marg_a, marg_b = (a0, a1), (b0, b1)
        table = np.empty((2, 2, 2, 2))
        for a, b, x, y in itertools.product(range(2), repeat=4):
            sa, sb = OUTCOME_SIGN[a], OUTCOME_SIGN[b]
            table[a, b, x, y] = (one + sa * marg_a[x] + sb * marg_b[y] + sa * sb * corr[2 * x + y]) / 4
        return cls(table)

    def to_text(self) -> str:
        lines = ["# behavior 2 2 2 2"]
        for x, y, a, b in itertools.product(range(2), repeat=4):
            lines.append(f"{x} {y} {a} {b} {self.table[a, b, x, y]:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Behavior":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].split() != ["#", "behavior", "2", "2", "2", "2"]:
            raise ValueError("missing '# behavior 2 2 2 2' header")
        table = np.full((2, 2, 2, 2), np.nan)
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(f"line {lineno}: expected 'x y a b value'")
            x, y, a, b = (int(p) for p in parts[:4])
            table[a, b, x, y] = float(parts[4])
        if np.isnan(table).any():
            raise ValueError("behavior text does not define all 16 entries")
        return cls(table)


@dataclass(frozen=True, eq=False)
class BellExpression:
    """Linear functional sum_{abxy} c(ab|xy) P(ab|xy)."""

    coefficients: np.ndarray
    classical_bound: float | None = None
    scenario: Scenario = SCENARIO_2222

    def __post_init__(self):
        coeffs = _frozen(self.coefficients)
        if coeffs.shape != self.scenario.shape:
            raise ValueError(f"coefficients must have shape {self.scenario.shape}")
        object.__setattr__(self, "coefficients", coeffs)

    def correlator_form(self) -> np.ndarray:
        """Coefficients on (1, <A_x>, <B_y>, <A_xB_y>) in ``QUANTITIES`` order.

        For no-signaling behaviors, ``expr(P) == correlator_form() @ P.expectations()``.
        """
        c = self.coefficients
        s = OUTCOME_SIGN
        out = np.empty(9)
        out[0] = c.sum() / 4
        out[1:3] = np.einsum("abxy,a->x", c, s) / 4
        out[3:5] = np.einsum("abxy,b->y", c, s) / 4
        out[5:9] = np.einsum("abxy,a,b->xy", c, s, s).ravel() / 4
        return out

    @classmethod
    def from_correlators(cls, values: Sequence[float], classical_bound: float | None = None) -> "BellExpression":
        """Build an expression from coefficients in ``QUANTITIES`` order.

        Marginal terms are spread evenly over the other party's settings.
        """
        const, a0, a1, b0, b1, *corr = values
        s = OUTCOME_SIGN
        coeffs = np.empty((2, 2, 2, 2))
        for a, b, x, y in itertools.product(range(2), repeat=4):
            coeffs[a, b, x, y] = (
                const / 4 + s[a] * (a0, a1)[x] / 2 + s[b] * (b0, b1)[y] / 2 + s[a] * s[b] * corr[2 * x + y]
            )
        return cls(coeffs, classical_bound)

    def __call__(self, behavior: Behavior) -> float:
        return evaluate_bell(self, behavior)


@dataclass(frozen=True, eq=False)
class SettingsDistribution:
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.shape != (2, 2):
            raise ValueError("settings weights must have shape (2, 2)")
        if np.any(w < 0) or abs(w.sum() - 1) > NORMALIZATION_TOL:
            raise ValueError("settings weights must be nonnegative and sum to 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, x0: int, y0: int) -> "SettingsDistribution":
        w = np.zeros((2, 2))
        w[x0, y0] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls) -> "SettingsDistribution":
        return cls(np.full((2, 2), 0.25))

    @property
    def support(self) -> list[tuple[int, int]]:
        return [(x, y) for x, y in itertools.product(range(2), repeat=2) if self.weights[x, y] > 0]

    def is_uniform(self) -> bool:
        return bool(np.allclose(self.weights, 0.25, rtol=0, atol=NORMALIZATION_TOL))


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_behavior(b: Behavior) -> ValidationReport:
    t = b.table
    found: list[Violation] = []
    for a, bb, x, y in itertools.product(range(2), repeat=4):
        v = t[a, bb, x, y]
        if v < -NORMALIZATION_TOL or v > 1 + NORMALIZATION_TOL:
            found.append(Violation("range", f"P({a}{bb}|{x}{y})", float(max(-v, v - 1))))
    for x, y in itertools.product(range(2), repeat=2):
        err = abs(t[:, :, x, y].sum() - 1)
        if err > NORMALIZATION_TOL:
            found.append(Violation("normalization", f"xy={x}{y}", float(err)))
    for x in range(2):
        err = np.abs(t[:, :, x, 0].sum(axis=1) - t[:, :, x, 1].sum(axis=1)).max()
        if err > NO_SIGNALING_TOL:
            found.append(Violation("no-signaling", f"Alice marginal x={x}", float(err)))
    for y in range(2):
        err = np.abs(t[:, :, 0, y].sum(axis=0) - t[:, :, 1, y].sum(axis=0)).max()
        if err > NO_SIGNALING_TOL:
            found.append(Violation("no-signaling", f"Bob marginal y={y}", float(err)))
    return ValidationReport(tuple(found))


def evaluate_bell(expr: BellExpression, b: Behavior) -> float:
    if expr.scenario != b.scenario:
        raise ValueError("Bell expression and behavior belong to different scenarios")
    return float(np.sum(expr.coefficients * b.table))


def chsh_expression(minus_at: tuple[int, int] = (1, 1), sign: float = 1.0) -> BellExpression:
    """CHSH with the minus sign on the correlator ``minus_at``.

    The defaults give <A0B0> + <A0B1> + <A1B0> - <A1B1> <= 2.
    """
    corr = np.ones(4)
    corr[2 * minus_at[0] + minus_at[1]] = -1.0
    return BellExpression.from_correlators([0, 0, 0, 0, 0, *(sign * corr)], classical_bound=2.0)


def deterministic_behavior(fa: Sequence[int] | Mapping[int, int], fb: Sequence[int] | Mapping[int, int]) -> Behavior:
    table = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product(range(2), repeat=2):
        table[fa[x], fb[y], x, y] = 1.0
    return Behavior(table)


def deterministic_strategies() -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """All 16 (fa, fb) pairs in lexicographic order."""
    return [((a0, a1), (b0, b1)) for a0, a1, b0, b1 in itertools.product(range(2), repeat=4)]


def all_deterministic_behaviors() -> list[Behavior]:
    return [deterministic_behavior(fa, fb) for fa, fb in deterministic_strategies()]


def mix(behaviors: Iterable[tuple[float, Behavior]]) -> Behavior:
    pairs = list(behaviors)
    if not pairs:
        raise ValueError("cannot mix an empty list")
    weights = np.array([w for w, _ in pairs], dtype=float)
    if np.any(weights < 0):
        raise ValueError("mixing weights must be nonnegative")
    if abs(weights.sum() - 1) > NORMALIZATION_TOL:
        raise ValueError(f"mixing weights sum to {weights.sum():.17g}, not 1")
    scenario = pairs[0][1].scenario
    if any(b.scenario != scenario for _, b in pairs):
        raise ValueError("cannot mix behaviors from different scenarios")
    table = np.einsum("i,iabxy->abxy", weights, np.stack([b.table for _, b in pairs]))
    return Behavior(table, scenario)


def uniform_behavior() -> Behavior:
    return Behavior(np.full((2, 2, 2, 2), 0.25))


@dataclass(frozen=True)
class LocalityResult:
    local: bool
    max_facet_value: float
    minus_at: tuple[int, int]
    sign: int

    def __bool__(self) -> bool:
        return self.local


def chsh_symmetrizations() -> list[tuple[tuple[int, int], int, BellExpression]]:
    """The eight CHSH facets: choice of the minus-signed term times a global sign."""
    out = []
    for minus_at in itertools.product(range(2), repeat=2):
        for sign in (1, -1):
            out.append((minus_at, sign, chsh_expression(minus_at, sign)))
    return out


def is_local_2222(b: Behavior) -> LocalityResult:
    """Exact membership test for the 2222 local polytope of a valid behavior.

    Positivity and no-signaling are assumed (see :func:`validate_behavior`);
    the eight CHSH facets then complete the description.
    """
    best = (-math.inf, (0, 0), 1)
    for minus_at, sign, expr in chsh_symmetrizations():
        value = evaluate_bell(expr, b)
        if value > best[0]:
            best = (value, minus_at, sign)
    value, minus_at, sign = best
    return LocalityResult(value <= 2 + FACET_TOL, value, minus_at, sign)

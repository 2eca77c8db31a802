"""Guessing-probability programs and their dual Bell-expression certificates.

An adversary who knows which component of a convex decomposition of the
observed behavior is realized in each round guesses the outcome pair with the
most likely value.  Refining components so that each carries one
deterministic guess per setting pair turns the optimum over decompositions into
a single SDP: one moment block per guessing strategy, each block holding a
subnormalized moment vector, with the blocks summing to the observed data.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import sdp
from .bell import (
    QUANTITIES,
    Behavior,
    BellExpression,
    SettingsDistribution,
    chsh_expression,
    evaluate_bell,
    validate_behavior,
)
from .moments import MomentStructure, build_structure, expectation_rows, probability_row

CERTIFICATE_TOL = 1e-9
TIE_TOL = 1e-6
ACCURACY_GAP = 1e-6


class CertificationError(RuntimeError):
    """The guessing program could not be solved for the given data."""


class Mode(str, enum.Enum):
    CASE1 = "case1_chsh_only"
    CASE2 = "case2_fixed_full"
    CASE3 = "case3_all_full"

    @classmethod
    def from_case(cls, case_id: int) -> "Mode":
        try:
            return {1: cls.CASE1, 2: cls.CASE2, 3: cls.CASE3}[int(case_id)]
        except KeyError:
            raise ValueError(f"case must be 1, 2 or 3, got {case_id!r}") from None

    @property
    def case_id(self) -> int:
        return {Mode.CASE1: 1, Mode.CASE2: 2, Mode.CASE3: 3}[self]

    @property
    def fixed(self) -> bool:
        return self is not Mode.CASE3

    def __str__(self) -> str:
        return self.value


Outcome = tuple[int, int]
Setting = tuple[int, int]


@dataclass(frozen=True)
class GuessingStrategy:
    guess: tuple[tuple[Setting, Outcome], ...]

    def __getitem__(self, setting: Setting) -> Outcome:
        for s, outcome in self.guess:
            if s == tuple(setting):
                return outcome
        raise KeyError(setting)

    @property
    def support(self) -> tuple[Setting, ...]:
        return tuple(s for s, _ in self.guess)


@dataclass(frozen=True, eq=False)
class ProgramSpec:
    mode: Mode
    observed: Behavior
    fixed_settings: Setting | None = None
    settings_distribution: SettingsDistribution | None = None

    def __post_init__(self):
        mode = Mode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode.fixed:
            if self.fixed_settings is None:
                raise ValueError(f"{mode} needs fixed_settings (x0, y0)")
            x0, y0 = (int(v) for v in self.fixed_settings)
            if x0 not in (0, 1) or y0 not in (0, 1):
                raise ValueError(f"fixed_settings must be in {{0,1}}^2, got {self.fixed_settings}")
            object.__setattr__(self, "fixed_settings", (x0, y0))
            expected = SettingsDistribution.point_mass(x0, y0)
        else:
            if self.fixed_settings is not None:
                raise ValueError("case 3 uses all settings; fixed_settings must be None")
            expected = SettingsDistribution.uniform()
        dist = self.settings_distribution or expected
        if not np.array_equal(dist.weights, expected.weights):
            raise ValueError(f"settings distribution inconsistent with {mode}")
        object.__setattr__(self, "settings_distribution", dist)

    @property
    def chsh_value(self) -> float:
        return evaluate_bell(chsh_expression(), self.observed)


@dataclass(frozen=True, eq=False)
class GuessingProgram:
    spec: ProgramSpec
    strategies: tuple[GuessingStrategy, ...]
    problem: sdp.BlockProblem
    row_labels: tuple[str, ...]
    quantity_rows: np.ndarray  # (p, 9): each equality row in the QUANTITIES basis
    objective_rows: np.ndarray  # (num_blocks, k)
    structure: MomentStructure

    @property
    def num_blocks(self) -> int:
        return len(self.strategies)

    def block_moments(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y).reshape(self.num_blocks, self.structure.num_monomials)


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Statement G <= expression(P) + offset, with optional per-block Gram matrices."""

    expression: BellExpression
    offset: float
    gram: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    @property
    def coefficients(self) -> np.ndarray:
        """The eight marginal/correlator coefficients (``QUANTITIES[1:]`` order)."""
        return self.expression.correlator_form()[1:]

    def bound(self, behavior: Behavior) -> float:
        return evaluate_bell(self.expression, behavior) + self.offset

    def with_offset(self, offset: float, keep_gram: bool = True) -> "DualCertificate":
        return DualCertificate(self.expression, offset, self.gram if keep_gram else None)

    def polynomial(self, structure: MomentStructure | None = None) -> np.ndarray:
        """Coefficients over canonical monomials of expression + offset."""
        s = structure or build_structure()
        vec = self.expression.correlator_form()
        vec[0] += self.offset
        return vec @ expectation_rows(s)


@dataclass(frozen=True, eq=False)
class CertifiedResult:
    guessing_upper: float
    hmin_bits: float
    dual: DualCertificate
    gap: float
    status: str
    primal: float
    spec: ProgramSpec = field(repr=False)
    report: sdp.SolveReport = field(repr=False)
    program: GuessingProgram | None = field(default=None, repr=False)
    source: str = "solver"  # or "pooled": a certificate carried over from a related program

    @property
    def settings(self) -> Setting | None:
        return self.spec.fixed_settings


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    margin: float
    bound: float
    sound_bound: float
    block_margins: tuple[float, ...]

    def __bool__(self) -> bool:
        return self.ok


def enumerate_strategies(spec: ProgramSpec) -> list[GuessingStrategy]:
    support = spec.settings_distribution.support
    outcomes = list(itertools.product(range(2), repeat=2))
    return [
        GuessingStrategy(tuple(zip(support, choice)))
        for choice in itertools.product(outcomes, repeat=len(support))
    ]


def _objective_row(strategy: GuessingStrategy, dist: SettingsDistribution, s: MomentStructure) -> np.ndarray:
    row = np.zeros(s.num_monomials)
    for (x, y), (a, b) in strategy.guess:
        row += dist.weights[x, y] * probability_row(a, b, x, y, s)
    return row


def assemble(spec: ProgramSpec) -> GuessingProgram:
    s = build_structure()
    strategies = tuple(enumerate_strategies(spec))
    n_blocks = len(strategies)
    k = s.num_monomials
    if spec.mode is Mode.CASE1:
        chsh = chsh_expression().correlator_form()
        quantity_rows = np.stack([np.eye(9)[0], chsh])
        rhs = np.array([1.0, spec.chsh_value])
        labels = ("1", "CHSH")
    else:
        quantity_rows = np.eye(9)
        rhs = spec.observed.expectations()
        labels = QUANTITIES
    rows = quantity_rows @ expectation_rows(s)
    objective_rows = np.stack([_objective_row(st, spec.settings_distribution, s) for st in strategies])
    zeros = np.zeros((s.size, s.size))
    blocks = tuple(sdp.Block(s.size, np.arange(e * k, (e + 1) * k), s.basis, zeros) for e in range(n_blocks))
    problem = sdp.BlockProblem(n_blocks * k, blocks, objective_rows.ravel(), np.tile(rows, (1, n_blocks)), rhs)
    return GuessingProgram(spec, strategies, problem, labels, quantity_rows, objective_rows, s)


def extract_dual_bell(program: GuessingProgram, report: sdp.SolveReport) -> DualCertificate:
    vec = report.eq_duals @ program.quantity_rows
    expression = BellExpression.from_correlators([0.0, *vec[1:]])
    gram = tuple(np.array(z) for z in report.dual_matrices)
    return DualCertificate(expression, float(vec[0]), gram)


def certify(spec: ProgramSpec, tol: float = sdp.DEFAULT_TOL) -> CertifiedResult:
    report_ok = validate_behavior(spec.observed)
    if not report_ok:
        raise CertificationError(f"observed behavior is invalid: {report_ok.violations}")
    program = assemble(spec)
    report = sdp.solve(program.problem, tol=tol)
    if report.status is sdp.Status.INFEASIBLE:
        raise CertificationError(f"guessing program infeasible ({report.message}); observed data inconsistent")
    if not (np.isfinite(report.primal_objective) and np.isfinite(report.dual_objective)):
        raise CertificationError(f"solver failed: {report.message}")
    # the verified bound is sound whatever the primal residual, so it is the reported value
    dual, upper = _repaired(program, extract_dual_bell(program, report), spec.observed)
    if not np.isfinite(upper):
        raise CertificationError(f"solver returned an unusable dual certificate: {report.message}")
    if upper <= 0:
        raise CertificationError(f"solver returned a non-positive guessing probability {upper}")
    status = report.status.value
    if report.status is sdp.Status.OPTIMAL and report.gap > ACCURACY_GAP:
        status = sdp.Status.NEAR_OPTIMAL.value
    return CertifiedResult(
        guessing_upper=min(1.0, upper),
        hmin_bits=hmin_from_guess(min(1.0, upper)),
        dual=dual,
        gap=report.gap,
        status=status,
        primal=report.primal_objective,
        spec=spec,
        report=report,
        program=program,
    )


def _repaired(program: GuessingProgram, cert: DualCertificate, observed: Behavior) -> tuple[DualCertificate, float]:
    """Raise the offset so the certificate verifies with a nonnegative margin.

    Returns the adjusted certificate and its bound on ``observed``.
    """
    check = _verify(program, cert, observed, CERTIFICATE_TOL)
    if not np.isfinite(check.margin):
        return cert, math.inf
    if check.margin >= 0:
        return cert, check.bound
    lift = -check.margin
    n = program.structure.size
    gram = None if cert.gram is None else tuple(g + lift * np.eye(n) for g in cert.gram)
    fixed = DualCertificate(cert.expression, cert.offset + n * lift, gram)
    return fixed, fixed.bound(observed)


def improve_with(result: CertifiedResult, candidates) -> CertifiedResult:
    """Replace the certificate of ``result`` by a lower-bounding candidate, if any.

    Candidates are dual certificates for the same program (Gram matrices in
    block order); each is verified before use, so a bad candidate is simply
    ignored.
    """
    program = result.program or assemble(result.spec)
    best_cert, best = None, result.guessing_upper
    for cand in candidates:
        if cand is None or cand.gram is None or len(cand.gram) != program.num_blocks:
            continue
        if not _expression_allowed(program, cand):
            continue
        cert, upper = _repaired(program, cand, result.spec.observed)
        if upper < best:
            best_cert, best = cert, upper
    if best_cert is None:
        return result
    g = min(1.0, best)
    return replace(result, guessing_upper=g, hmin_bits=hmin_from_guess(g), dual=best_cert,
                               program=program, source="pooled")


def _expression_allowed(program: GuessingProgram, cert: DualCertificate) -> bool:
    """Whether the certificate only uses quantities the program constrains."""
    vec = cert.expression.correlator_form()
    vec[0] += cert.offset
    basis = program.quantity_rows
    coef, *_ = np.linalg.lstsq(basis.T, vec, rcond=None)
    return bool(np.abs(basis.T @ coef - vec).max() <= 1e-12 * (1 + np.abs(vec).max()))


def hmin_from_guess(g: float) -> float:
    return max(0.0, -math.log2(g))


def best_fixed_settings(mode: Mode | int, observed: Behavior, tol: float = sdp.DEFAULT_TOL) -> tuple[Setting, CertifiedResult]:
    """Certify at every (x0, y0) and keep the highest min-entropy."""
    mode = Mode.from_case(mode) if isinstance(mode, int) else Mode(mode)
    if not mode.fixed:
        raise ValueError("best_fixed_settings applies to cases 1 and 2 only")
    runs = {
        setting: certify(ProgramSpec(mode, observed, setting), tol)
        for setting in itertools.product(range(2), repeat=2)
    }
    return pick_best(runs)


def pick_best(runs: dict[Setting, CertifiedResult]) -> tuple[Setting, CertifiedResult]:
    """Highest min-entropy; values within ``TIE_TOL`` of it tie and the first setting wins."""
    top = max(r.hmin_bits for r in runs.values())
    for setting in sorted(runs):
        if runs[setting].hmin_bits >= top - TIE_TOL:
            return setting, runs[setting]
    raise AssertionError("unreachable")


def _block_targets(program: GuessingProgram, cert: DualCertificate) -> np.ndarray:
    """Required <E_m, Z_e> for every block: the SOS residual of cert minus objective."""
    return cert.polynomial(program.structure)[None, :] - program.objective_rows


def _project_gram(s: MomentStructure, gram: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Nearest matrix to ``gram`` (Frobenius) whose moment pairing equals ``target``."""
    correction = (target - s.adjoint_map(gram)) / s.class_sizes
    return gram + correction[s.positions]


def verify_certificate(
    cert: DualCertificate,
    spec: ProgramSpec,
    tol: float = CERTIFICATE_TOL,
) -> VerificationResult:
    """Check G <= cert.bound(observed) by per-block positive semidefiniteness.

    For every strategy block the operator polynomial cert - objective must
    admit a PSD Gram matrix in the moment basis.  When the certificate carries
    Gram matrices they are projected onto the exact affine constraint and
    their smallest eigenvalue is the block's margin; otherwise the largest
    achievable smallest eigenvalue is computed with a small SDP per block.
    ``sound_bound`` raises the offset just enough to absorb a negative margin
    (the identity-word class is the identity matrix, so raising the offset by
    d lifts every Gram spectrum by d/25).
    """
    return _verify(assemble(spec), cert, spec.observed, tol)


def _verify(program: GuessingProgram, cert: DualCertificate, observed: Behavior, tol: float) -> VerificationResult:
    s = program.structure
    targets = _block_targets(program, cert)
    if cert.gram is not None and len(cert.gram) == program.num_blocks:
        grams = np.stack([_project_gram(s, np.asarray(g), t) for g, t in zip(cert.gram, targets)])
        margins = np.linalg.eigvalsh((grams + grams.transpose(0, 2, 1)) / 2)[:, 0]
    else:
        margins = _best_gram_margins(s, targets)
    margin = float(margins.min())
    bound = cert.bound(observed)
    return VerificationResult(
        ok=margin >= -tol,
        margin=margin,
        bound=bound,
        sound_bound=bound + s.size * max(0.0, -margin),
        block_margins=tuple(float(m) for m in margins),
    )


def _gram_kernel(s: MomentStructure) -> tuple[np.ndarray, np.ndarray]:
    """Basis of symmetric matrices with zero moment pairing, plus slot weights."""
    n = s.size
    slots: dict[int, list[tuple[int, int]]] = {}
    for i in range(n):
        for j in range(i, n):
            slots.setdefault(int(s.positions[i, j]), []).append((i, j))
    kernel = []
    for members in slots.values():
        base = _slot_matrix(n, *members[0])
        for i, j in members[1:]:
            kernel.append(_slot_matrix(n, i, j) - base)
    return np.array(kernel), np.array([len(m) for m in slots.values()])


def _slot_matrix(n: int, i: int, j: int) -> np.ndarray:
    """Symmetric unit pattern on (i, j), scaled so its moment pairing is 1."""
    m = np.zeros((n, n))
    if i == j:
        m[i, i] = 1.0
    else:
        m[i, j] = m[j, i] = 0.5
    return m


def _best_gram_margins(s: MomentStructure, targets: np.ndarray) -> np.ndarray:
    kernel, _ = _gram_kernel(s)
    n = s.size
    basis = np.concatenate([-np.eye(n)[None], kernel])  # variable 0 is the eigenvalue floor t
    k = len(basis)
    blocks = []
    for e, target in enumerate(targets):
        z0 = (target / s.class_sizes)[s.positions]
        blocks.append(sdp.Block(n, np.arange(e * k, (e + 1) * k), basis, z0))
    n_vars = len(targets) * k
    objective = np.zeros(n_vars)
    objective[::k] = 1.0
    report = sdp.solve(sdp.BlockProblem(n_vars, tuple(blocks), objective, np.zeros((0, n_vars)), np.zeros(0)))
    if report.status is sdp.Status.INFEASIBLE:
        return np.full(len(targets), -np.inf)
    # Re-derive each margin from the returned Gram matrix rather than trusting t.
    margins = []
    for blk in blocks:
        gram = blk.evaluate(report.x) + report.x[blk.variables[0]] * np.eye(n)
        margins.append(np.linalg.eigvalsh(gram)[0])
    return np.array(margins)

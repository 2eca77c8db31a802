"""Certification of one behavior under all three settings models.

Results are shared between related programs.  A certificate for the
CHSH-only program at given settings also bounds the fully constrained program
there.  Relabeling symmetries carry certificates between setting pairs.  A
weighted sum of fixed-setting certificates bounds the averaged program.
Every shared certificate is verified against the program it is used for, so
sharing can only lower a bound that is already sound.

Sharing matters most where the observed behavior is extremal and the
programs have no strictly feasible point: there the solver's own
certificates are accurate to about 1e-5 only, and pooling keeps the three
cases consistent with each other.
"""
from __future__ import annotations

import itertools

from . import sdp
from .bell import Behavior
from .guessing import CertifiedResult, Mode, ProgramSpec, certify, improve_with, pick_best
from .symmetry import average_certificate, relabelings_between, transport_certificate

SETTINGS = tuple(itertools.product(range(2), repeat=2))


def _pool(runs: dict, donors: list[dict]) -> dict:
    """Improve every run with certificates transported from ``donors``."""
    out = {}
    for target, result in runs.items():
        candidates = []
        for donor in donors:
            for source, other in donor.items():
                for r in relabelings_between(source, target):
                    candidates.append(transport_certificate(other.dual, r, other.program, result.program))
        out[target] = improve_with(result, candidates)
    return out


def certify_settings(mode: Mode, observed: Behavior, tol: float = sdp.DEFAULT_TOL, earlier: dict | None = None) -> dict:
    """Pooled results at all four fixed settings pairs."""
    runs = {s: certify(ProgramSpec(mode, observed, s), tol) for s in SETTINGS}
    return _pool(runs, [runs] + ([earlier] if earlier else []))


def certify_cases(observed: Behavior, cases=(1, 2, 3), tol: float = sdp.DEFAULT_TOL) -> dict[int, CertifiedResult]:
    """Best-settings results for cases 1 and 2 and the uniform case-3 result.

    Lower cases are always computed when a higher one is requested, so a
    result never depends on which other cases were asked for.
    """
    wanted = {int(c) for c in cases}
    if not wanted <= {1, 2, 3}:
        raise ValueError(f"cases must be drawn from 1, 2, 3; got {sorted(wanted)}")
    top = max(wanted)
    out: dict[int, CertifiedResult] = {}
    runs1 = certify_settings(Mode.CASE1, observed, tol)
    out[1] = pick_best(runs1)[1]
    if top >= 2:
        runs2 = certify_settings(Mode.CASE2, observed, tol, earlier=runs1)
        out[2] = pick_best(runs2)[1]
    if top >= 3:
        result = certify(ProgramSpec(Mode.CASE3, observed), tol)
        parts = {s: (r.program, r.dual) for s, r in runs2.items()}
        out[3] = improve_with(result, [average_certificate(result.program, parts)])
    return {c: out[c] for c in sorted(wanted)}


def certify_point(observed: Behavior, case: int, settings=None, tol: float = sdp.DEFAULT_TOL) -> CertifiedResult:
    """One case, at the best settings unless ``settings`` fixes them (cases 1 and 2)."""
    mode = Mode.from_case(case)
    if not mode.fixed:
        if settings is not None:
            raise ValueError("case 3 averages over all settings; --settings does not apply")
        return certify_cases(observed, (3,), tol)[3]
    runs = certify_settings(Mode.CASE1, observed, tol)
    if mode is Mode.CASE2:
        runs = certify_settings(Mode.CASE2, observed, tol, earlier=runs)
    if settings is None:
        return pick_best(runs)[1]
    return runs[tuple(int(v) for v in settings)]

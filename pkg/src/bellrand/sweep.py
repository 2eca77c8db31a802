"""Noise sweeps written as CSV rows, and the ratio comparison between noises."""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bell import chsh_expression, evaluate_bell
from .guessing import CertificationError
from .pipeline import certify_cases
from .quantum import behavior_from_model, noise_model

log = logging.getLogger(__name__)

NOISE_KINDS = ("white", "dephasing")
COLUMNS = ("noise", "param", "case", "chsh", "g_upper", "hmin_bits", "gap", "status", "settings", "ratio")
DEFAULT_GRID = "0:0.025:1"
RATIO_FLOOR = 1e-6  # case-1 min-entropy below this leaves the ratio cell empty


@dataclass(frozen=True)
class SweepRow:
    noise: str
    param: float
    case: int
    chsh: float
    g_upper: float
    hmin_bits: float
    gap: float
    status: str
    settings: str
    ratio: float | None = None

    def cells(self) -> list[str]:
        return [
            self.noise,
            _num(self.param),
            str(self.case),
            _num(self.chsh),
            _num(self.g_upper),
            _num(self.hmin_bits),
            _num(self.gap),
            self.status,
            self.settings,
            "" if self.ratio is None else _num(self.ratio),
        ]


def _num(v: float) -> str:
    if v is None or not math.isfinite(v):
        return ""
    out = f"{v:.12g}"
    return "0" if out == "-0" else out


def parse_grid(text: str) -> list[float]:
    """``start:step:end`` (inclusive) or a single value; values stay in [0, 1]."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"grid must be start:step:end, got {text!r}") from None
    if len(nums) == 1:
        values = nums
    elif len(nums) == 3:
        start, step, end = nums
        if step <= 0:
            raise ValueError("grid step must be positive")
        if end < start:
            raise ValueError("grid end lies before its start")
        count = int(math.floor((end - start) / step + 1e-9)) + 1
        values = [round(start + k * step, 12) for k in range(count)]
    else:
        raise ValueError(f"grid must be start:step:end, got {text!r}")
    if any(not 0 <= v <= 1 for v in values) or any(not math.isfinite(v) for v in values):
        raise ValueError("grid values must lie in [0, 1]")
    return values


def certify_sweep_point(noise: str, param: float, cases: tuple[int, ...]) -> dict | None:
    """Results for cases 1..max(cases) at one parameter value, or None on failure."""
    observed = behavior_from_model(noise_model(noise, param))
    try:
        return certify_cases(observed, tuple(range(1, max(cases) + 1)))
    except (CertificationError, np.linalg.LinAlgError) as exc:
        log.warning("%s %s: %s", noise, param, exc)
        return None


def point_rows(noise: str, param: float, cases: tuple[int, ...], results: dict | None) -> list[SweepRow]:
    chsh = evaluate_bell(chsh_expression(), behavior_from_model(noise_model(noise, param)))
    if results is None:
        return [SweepRow(noise, param, c, chsh, math.nan, math.nan, math.nan, "failed", "") for c in cases]
    base = results[1].hmin_bits
    rows = []
    for c in cases:
        r = results[c]
        settings = "all" if r.settings is None else "{},{}".format(*r.settings)
        ratio = r.hmin_bits / base if base >= RATIO_FLOOR else None
        rows.append(SweepRow(noise, param, c, chsh, r.guessing_upper, r.hmin_bits, r.gap, r.status, settings, ratio))
    return rows


def sweep_point(noise: str, param: float, cases: tuple[int, ...]) -> list[SweepRow]:
    """All requested cases at one parameter value."""
    return point_rows(noise, param, cases, certify_sweep_point(noise, param, cases))


def run_sweep(noise: str, grid: list[float], cases=(1, 2, 3), jobs: int = 1) -> list[SweepRow]:
    if noise not in NOISE_KINDS:
        raise ValueError(f"noise must be one of {NOISE_KINDS}, got {noise!r}")
    cases = tuple(sorted({int(c) for c in cases}))
    if not cases or not set(cases) <= {1, 2, 3}:
        raise ValueError("cases must be a nonempty subset of 1, 2, 3")
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(sweep_point, [noise] * len(grid), grid, [cases] * len(grid)))
    else:
        chunks = []
        for param in grid:
            log.info("%s param=%s", noise, param)
            chunks.append(sweep_point(noise, param, cases))
    rows = [row for chunk in chunks for row in chunk]
    return sorted(rows, key=lambda r: (r.param, r.case))


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def read_csv(text: str) -> list[SweepRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames[: len(COLUMNS) - 1]) != COLUMNS[:-1]:
        raise ValueError("not a sweep CSV: unexpected header")

    def num(cell: str) -> float:
        return float(cell) if cell else math.nan

    return [
        SweepRow(
            d["noise"], float(d["param"]), int(d["case"]), num(d["chsh"]), num(d["g_upper"]),
            num(d["hmin_bits"]), num(d["gap"]), d["status"], d["settings"],
            float(d["ratio"]) if d.get("ratio") else None,
        )
        for d in reader
    ]


@dataclass(frozen=True)
class RatioComparison:
    param: float
    white: float
    dephasing: float

    @property
    def difference(self) -> float:
        return self.dephasing - self.white


def compare_ratios(white: list[SweepRow], dephasing: list[SweepRow], case: int = 2,
                   lo: float = 0.75, hi: float = 0.95) -> list[RatioComparison]:
    """Case-``case`` over case-1 ratios of both noises at shared parameter values."""
    def table(rows):
        return {r.param: r.ratio for r in rows if r.case == case and r.ratio is not None and lo <= r.param <= hi}

    w, d = table(white), table(dephasing)
    return [RatioComparison(p, w[p], d[p]) for p in sorted(set(w) & set(d))]


def comparison_csv(items: list[RatioComparison]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("param", "white_ratio", "dephasing_ratio", "difference"))
    for it in items:
        writer.writerow((_num(it.param), _num(it.white), _num(it.dephasing), _num(it.difference)))
    return buf.getvalue()

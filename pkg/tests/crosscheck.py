"""Independent solve of SDPA sparse files with cvxopt.

The reader here is deliberately separate from ``bellrand.sdpa``: it parses the
text itself and hands the blocks to cvxopt's conic solver.  Run as a script
to refresh the recorded fixture::

    python3 tests/crosscheck.py tests/fixtures/cross_solver.json
"""
from __future__ import annotations

import json
import re
import sys
from pathlib import Path

import numpy as np

INSTANCES = (
    ("white", 0.8, 1),
    ("white", 0.9, 2),
    ("white", 0.85, 2),
    ("dephasing", 0.6, 1),
    ("dephasing", 0.6, 2),
    ("dephasing", 0.8, 2),
)
SETTINGS = (0, 0)
TOL = 1e-9


def read_blocks(text: str):
    """(c, sizes, {(block, var): dense matrix}, equality info) from SDPA text."""
    eq = None
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line[0] in "*\"":
            hit = re.search(r"paired-equalities\s+block\s+(\d+)\s+rows\s+(\d+)", line)
            if hit:
                eq = (int(hit.group(1)), int(hit.group(2)))
            continue
        rows.append(line)
    m = int(rows[0])
    sizes = [int(t) for t in rows[2].split()]
    c = np.array([float(t) for t in rows[3].split()])
    mats: dict[tuple[int, int], np.ndarray] = {}
    for line in rows[4:]:
        v, b, i, j, val = line.split()
        v, b, i, j = int(v), int(b), int(i) - 1, int(j) - 1
        d = abs(sizes[b - 1])
        mat = mats.setdefault((b, v), np.zeros((d, d)))
        mat[i, j] = mat[j, i] = float(val)
    return m, c, sizes, mats, eq


def solve_sdpa(text: str) -> float:
    """Optimal value of the SDPA minimization stated in ``text``."""
    import cvxopt
    from cvxopt import solvers

    m, c, sizes, mats, eq = read_blocks(text)
    g_list, h_list = [], []
    a_rows, b_vals = None, None
    for b, size in enumerate(sizes, start=1):
        d = abs(size)
        if eq is not None and b == eq[0]:
            p = eq[1]
            a_rows = np.zeros((p, m))
            b_vals = np.zeros(p)
            for (bb, v), mat in mats.items():
                if bb != b:
                    continue
                if v == 0:
                    b_vals = np.diag(mat)[:p].copy()
                else:
                    a_rows[:, v - 1] = np.diag(mat)[:p]
            continue
        # sum_i x_i F_i - F_0 = S  ->  -vec(F_i) x + S = -vec(F_0)
        g = np.zeros((d * d, m))
        h = np.zeros(d * d)
        for (bb, v), mat in mats.items():
            if bb != b:
                continue
            if v == 0:
                h = -mat.ravel(order="F")
            else:
                g[:, v - 1] = -mat.ravel(order="F")
        g_list.append(cvxopt.matrix(g))
        h_list.append(cvxopt.matrix(h.reshape(d, d, order="F")))
    solvers.options.update({"show_progress": False, "abstol": TOL, "reltol": TOL, "feastol": TOL, "maxiters": 200})
    kwargs = {}
    if a_rows is not None:
        kwargs = {"A": cvxopt.matrix(a_rows), "b": cvxopt.matrix(b_vals)}
    sol = solvers.sdp(cvxopt.matrix(c), Gs=g_list, hs=h_list, **kwargs)
    if sol["status"] not in ("optimal", "unknown"):
        raise RuntimeError(f"cvxopt status {sol['status']}")
    return float(sol["primal objective"])


def instance_text(noise: str, param: float, case: int) -> str:
    from bellrand.guessing import Mode, ProgramSpec, assemble
    from bellrand.quantum import behavior_from_model, noise_model
    from bellrand.sdpa import export_sdpa

    spec = ProgramSpec(Mode.from_case(case), behavior_from_model(noise_model(noise, param)), SETTINGS)
    return export_sdpa(assemble(spec).problem)


def record(path: Path) -> dict:
    out = {}
    for noise, param, case in INSTANCES:
        value = solve_sdpa(instance_text(noise, param, case))
        out[f"{noise}:{param}:{case}"] = {"external_min": value, "solver": "cvxopt.solvers.sdp"}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return out


if __name__ == "__main__":
    print(json.dumps(record(Path(sys.argv[1])), indent=2))

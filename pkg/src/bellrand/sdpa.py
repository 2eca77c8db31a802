"""SDPA sparse text format (.dat-s) for :class:`~bellrand.sdp.BlockProblem`.

SDPA states problems as ``minimize c @ x  s.t.  sum_i x_i F_i - F_0 ⪰ 0``.
A maximization ``c @ y  s.t.  F_0 + sum_i y_i F_i ⪰ 0`` maps onto it with the
objective and the constant matrices negated.  Equalities ``A @ y = rhs`` become
one diagonal block of size 2p holding ``A y - rhs >= 0`` in its first p slots
and ``rhs - A y >= 0`` in the last p.  A header comment names that block so
:func:`import_sdpa` can fold it back into equalities.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .sdp import Block, BlockProblem

EQUALITY_TAG = "paired-equalities"
_TAG_RE = re.compile(rf"{EQUALITY_TAG}\s+block\s+(\d+)\s+rows\s+(\d+)")


class SDPAParseError(ValueError):
    def __init__(self, line: int | None, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_sdpa(problem: BlockProblem) -> str:
    """Deterministic SDPA sparse text for ``problem`` (see module docstring)."""
    m = problem.num_vars
    p = problem.num_eq
    sizes = [str(b.size) for b in problem.blocks]
    if p:
        sizes.append(str(-2 * p))
    lines = [
        "* SDPA sparse format, minimization: c @ x with sum_i x_i F_i - F_0 PSD",
        "* source problem maximizes -c @ x; F_0 holds the negated block constants",
    ]
    if p:
        eq_block = len(problem.blocks) + 1
        lines.append(f"* {EQUALITY_TAG} block {eq_block} rows {p}: slots 1..p give A x - b >= 0, p+1..2p give b - A x >= 0")
    lines += [str(m), str(len(sizes)), " ".join(sizes), " ".join(_fmt(-v + 0.0) for v in problem.objective)]

    entries: list[tuple[int, int, int, int, float]] = []
    for bi, blk in enumerate(problem.blocks, start=1):
        iu, ju = np.triu_indices(blk.size)
        for i, j in zip(iu, ju):
            if blk.constant[i, j] != 0:
                entries.append((0, bi, i + 1, j + 1, -blk.constant[i, j]))
        for var, mat in zip(blk.variables, blk.matrices):
            for i, j in zip(iu, ju):
                if mat[i, j] != 0:
                    entries.append((int(var) + 1, bi, i + 1, j + 1, mat[i, j]))
    if p:
        a, rhs = problem.eq_matrix, problem.eq_rhs
        for k in range(p):
            if rhs[k] != 0:
                entries.append((0, eq_block, k + 1, k + 1, rhs[k]))
                entries.append((0, eq_block, p + k + 1, p + k + 1, -rhs[k]))
            for var in np.flatnonzero(a[k]):
                entries.append((int(var) + 1, eq_block, k + 1, k + 1, a[k, var]))
                entries.append((int(var) + 1, eq_block, p + k + 1, p + k + 1, -a[k, var]))
    entries.sort(key=lambda e: e[:4])
    lines += [f"{v} {b} {i} {j} {_fmt(x)}" for v, b, i, j, x in entries]
    return "\n".join(lines) + "\n"


def _numbers(text: str, lineno: int, kind=float) -> list:
    tokens = [t for t in re.split(r"[\s,{}()]+", text) if t]
    try:
        return [kind(t) if kind is float else int(t) for t in tokens]
    except ValueError:
        raise SDPAParseError(lineno, f"expected numbers, got {text.strip()!r}") from None


def import_sdpa(text: str) -> BlockProblem:
    """Parse SDPA sparse text back into a maximization BlockProblem.

    Without an equality tag every diagonal block is kept as an ordinary block
    of the stated size.
    """
    eq_tag = None
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line[0] in "\"*":
            found = _TAG_RE.search(line)
            if found:
                eq_tag = (int(found.group(1)), int(found.group(2)))
            continue
        body.append((lineno, line))
    if len(body) < 4:
        raise SDPAParseError(body[-1][0] if body else None, "incomplete header (need variables, blocks, sizes, objective)")

    (ln_m, m_text), (ln_nb, nb_text), (ln_sz, sz_text), (ln_c, c_text) = body[:4]
    m = _single_int(m_text, ln_m)
    nblocks = _single_int(nb_text, ln_nb)
    sizes = _numbers(sz_text, ln_sz, int)
    if len(sizes) != nblocks or any(s == 0 for s in sizes):
        raise SDPAParseError(ln_sz, f"expected {nblocks} nonzero block sizes, got {sz_text!r}")
    c = np.array(_numbers(c_text, ln_c), dtype=float)
    if c.shape != (m,):
        raise SDPAParseError(ln_c, f"expected {m} objective entries, got {len(c)}")

    dims = [abs(s) for s in sizes]
    mats = [np.zeros((m + 1, d, d)) for d in dims]
    for lineno, line in body[4:]:
        fields = line.split()
        if len(fields) != 5:
            raise SDPAParseError(lineno, f"expected 'var block i j value', got {line!r}")
        try:
            var, blk, i, j = (int(f) for f in fields[:4])
            value = float(fields[4])
        except ValueError:
            raise SDPAParseError(lineno, f"malformed entry {line!r}") from None
        if not 0 <= var <= m:
            raise SDPAParseError(lineno, f"variable index {var} outside 0..{m}")
        if not 1 <= blk <= nblocks:
            raise SDPAParseError(lineno, f"block index {blk} outside 1..{nblocks}")
        d = dims[blk - 1]
        if not (1 <= i <= d and 1 <= j <= d):
            raise SDPAParseError(lineno, f"entry ({i}, {j}) outside block {blk} of size {d}")
        if i > j:
            raise SDPAParseError(lineno, f"entry ({i}, {j}) is below the diagonal; only the upper triangle is allowed")
        if sizes[blk - 1] < 0 and i != j:
            raise SDPAParseError(lineno, f"off-diagonal entry in diagonal block {blk}")
        mats[blk - 1][var, i - 1, j - 1] = value
        mats[blk - 1][var, j - 1, i - 1] = value

    eq_matrix = np.zeros((0, m))
    eq_rhs = np.zeros(0)
    keep = list(range(nblocks))
    if eq_tag is not None:
        eq_block, p = eq_tag
        if not 1 <= eq_block <= nblocks or sizes[eq_block - 1] != -2 * p:
            raise SDPAParseError(None, f"equality block {eq_block} does not have size -{2 * p}")
        diag = np.diagonal(mats[eq_block - 1], axis1=1, axis2=2)  # (m + 1, 2p)
        upper, lower = diag[:, :p], diag[:, p:]
        if not np.array_equal(upper, -lower):
            raise SDPAParseError(None, "equality block halves are not negatives of each other")
        eq_matrix = upper[1:].T.copy()
        eq_rhs = upper[0].copy()
        keep.remove(eq_block - 1)

    shared: dict[bytes, np.ndarray] = {}
    blocks = []
    for bi in keep:
        full = mats[bi]
        used = np.flatnonzero(np.any(full[1:] != 0, axis=(1, 2)))
        basis = np.ascontiguousarray(full[1:][used])
        basis = shared.setdefault(basis.tobytes() + bytes(str(basis.shape), "ascii"), basis)
        blocks.append(Block(dims[bi], used, basis, -full[0] + 0.0))
    return BlockProblem(m, tuple(blocks), -c + 0.0, eq_matrix, eq_rhs)


def _single_int(text: str, lineno: int) -> int:
    values = _numbers(text, lineno, int)
    if len(values) != 1 or values[0] < 0:
        raise SDPAParseError(lineno, f"expected one nonnegative integer, got {text.strip()!r}")
    return values[0]


@dataclass(frozen=True)
class _Dense:
    constants: tuple[np.ndarray, ...]
    maps: tuple[np.ndarray, ...]


def _dense(problem: BlockProblem) -> _Dense:
    maps = []
    for blk in problem.blocks:
        full = np.zeros((problem.num_vars, blk.size, blk.size))
        full[blk.variables] = blk.matrices
        maps.append(full)
    return _Dense(tuple(b.constant for b in problem.blocks), tuple(maps))


def problems_equal(p: BlockProblem, q: BlockProblem) -> bool:
    """Entry-wise equality of the affine maps, objectives and equalities.

    Variables whose basis matrix is zero in a block are not distinguished from
    variables absent from that block.
    """
    if p.num_vars != q.num_vars or p.block_sizes != q.block_sizes:
        return False
    if not (np.array_equal(p.objective, q.objective) and np.array_equal(p.eq_matrix, q.eq_matrix)
            and np.array_equal(p.eq_rhs, q.eq_rhs)):
        return False
    dp, dq = _dense(p), _dense(q)
    return all(np.array_equal(a, b) for a, b in zip(dp.constants, dq.constants)) and all(
        np.array_equal(a, b) for a, b in zip(dp.maps, dq.maps)
    )

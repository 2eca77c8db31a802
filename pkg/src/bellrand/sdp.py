"""Primal-dual interior-point solver for block-diagonal LMI problems.

Problem form (maximization)::

    maximize    c @ y
    subject to  S_b(y) = F_b0 + sum_i y_i F_bi  ⪰ 0   for every block b
                A @ y = rhs

and its dual::

    minimize    rhs @ lam + sum_b <F_b0, Z_b>
    subject to  A.T @ lam - F*(Z) = c,   Z_b ⪰ 0,   F*(Z)_i = sum_b <F_bi, Z_b>

The method is an infeasible-start path-following scheme using the Nesterov-Todd
search direction with a Mehrotra predictor-corrector.  Blocks that reference the same
basis-matrix array are processed as one stacked "family", and when every
variable belongs to exactly one block the Schur complement is block diagonal
and the equality multipliers are found from a small reduced system.
"""
from __future__ import annotations

import enum
import functools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
_CHUNK = 16
_MAX_REFINE = 8
NEAR_OPTIMAL_TOL = 1e-4  # best-iterate merit accepted as near_optimal


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_TROUBLE = "numerical_trouble"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, eq=False)
class Block:
    """One LMI block: ``constant + sum_j y[variables[j]] * matrices[j]``."""

    size: int
    variables: np.ndarray
    matrices: np.ndarray
    constant: np.ndarray

    def __post_init__(self):
        n = self.size
        variables = np.asarray(self.variables, dtype=np.intp)
        matrices = np.asarray(self.matrices, dtype=float)
        constant = np.asarray(self.constant, dtype=float)
        if matrices.shape != (len(variables), n, n) or constant.shape != (n, n):
            raise ValueError("block matrix dimensions are inconsistent with the block size")
        if len(set(variables.tolist())) != len(variables):
            raise ValueError("a variable appears twice in one block")
        if not np.array_equal(matrices, matrices.transpose(0, 2, 1)) or not np.array_equal(constant, constant.T):
            raise ValueError("block basis matrices must be symmetric")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "constant", constant)

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        return self.constant + np.tensordot(np.asarray(y)[self.variables], self.matrices, axes=1)

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        """<F_j, Z> for each of the block's basis matrices."""
        return self.matrices.reshape(len(self.variables), -1) @ np.asarray(z).ravel()


@dataclass(frozen=True, eq=False)
class BlockProblem:
    num_vars: int
    blocks: tuple[Block, ...]
    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        a = np.asarray(self.eq_matrix, dtype=float).reshape(-1, self.num_vars)
        rhs = np.asarray(self.eq_rhs, dtype=float)
        if c.shape != (self.num_vars,):
            raise ValueError("objective length differs from the number of variables")
        if rhs.shape != (a.shape[0],):
            raise ValueError("equality right-hand side length differs from the number of rows")
        for blk in self.blocks:
            if len(blk.variables) and (blk.variables.min() < 0 or blk.variables.max() >= self.num_vars):
                raise ValueError("block references a variable out of range")
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", a)
        object.__setattr__(self, "eq_rhs", rhs)

    @property
    def num_eq(self) -> int:
        return self.eq_matrix.shape[0]

    @property
    def block_sizes(self) -> list[int]:
        return [b.size for b in self.blocks]

    def scaled(self, factor: float) -> "BlockProblem":
        return BlockProblem(self.num_vars, self.blocks, factor * self.objective, self.eq_matrix, self.eq_rhs)


@dataclass(eq=False)
class SolveReport:
    primal_objective: float
    dual_objective: float
    gap: float
    status: Status
    x: np.ndarray
    eq_duals: np.ndarray
    dual_matrices: list[np.ndarray]
    slack_matrices: list[np.ndarray]
    iterations: int
    primal_residual: float
    dual_residual: float
    message: str = ""
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.NEAR_OPTIMAL)


class _Family:
    """Blocks of equal size sharing one basis array, stacked along axis 0."""

    def __init__(self, blocks: list[tuple[int, Block]]):
        self.positions = [pos for pos, _ in blocks]
        first = blocks[0][1]
        self.n = first.size
        self.k = len(first.variables)
        self.F = first.matrices
        self.F_flat = self.F.reshape(self.k, -1)
        self.F_rows = self.F.reshape(self.k * self.n, self.n)
        self.var_idx = np.stack([b.variables for _, b in blocks]) if self.k else np.zeros((len(blocks), 0), np.intp)
        self.F0 = np.stack([b.constant for _, b in blocks])
        self.gram_pinv = np.linalg.pinv(self.F_flat @ self.F_flat.T) if self.k else np.zeros((0, 0))

    @property
    def count(self) -> int:
        return len(self.positions)

    def apply(self, y_local: np.ndarray) -> np.ndarray:
        """sum_j y_local[b, j] F_j for every block b."""
        return (y_local @ self.F_flat).reshape(-1, self.n, self.n)

    def adjoint(self, mats: np.ndarray) -> np.ndarray:
        return mats.reshape(self.count, -1) @ self.F_flat.T

    def project_adjoint(self, mats: np.ndarray, target: np.ndarray) -> np.ndarray:
        """Least-norm change of ``mats`` making ``adjoint(mats) == target``."""
        residual = target - self.adjoint(mats)
        return mats + self.apply(residual @ self.gram_pinv)

    def scaled_basis(self, g: np.ndarray) -> np.ndarray:
        """Rows svec(G_b^T F_i G_b) for every block, shape (B, k, n(n+1)/2).

        svec keeps the upper triangle with off-diagonal entries scaled by
        sqrt(2), so row inner products equal trace inner products.
        """
        n, k = self.n, self.k
        out = np.empty((self.count, k, self.svec_index.shape[1]))
        for lo in range(0, self.count, _CHUNK):
            hi = min(lo + _CHUNK, self.count)
            cols = g[lo:hi].transpose(1, 0, 2).reshape(n, -1)
            # (F_i G_b)[r, q] for all i, b in one product, regrouped to (b, r, (i, q))
            right = (self.F_rows @ cols).reshape(k, n, hi - lo, n).transpose(2, 1, 0, 3).reshape(hi - lo, n, k * n)
            full = (g[lo:hi].transpose(0, 2, 1) @ right).reshape(hi - lo, n, k, n).transpose(0, 2, 1, 3)
            flat = full.reshape(hi - lo, k, n * n)
            out[lo:hi] = np.take(flat, self.svec_index[0], axis=2) * self.svec_weight
        return out

    @functools.cached_property
    def svec_index(self) -> np.ndarray:
        iu, ju = np.triu_indices(self.n)
        return (iu * self.n + ju)[None, :]

    @functools.cached_property
    def svec_weight(self) -> np.ndarray:
        iu, ju = np.triu_indices(self.n)
        return np.where(iu == ju, 1.0, np.sqrt(2.0))


def _families(problem: BlockProblem) -> list[_Family]:
    groups: dict[tuple, list[tuple[int, Block]]] = {}
    for pos, blk in enumerate(problem.blocks):
        groups.setdefault((blk.size, id(blk.matrices)), []).append((pos, blk))
    return [_Family(members) for members in groups.values()]


def _is_separable(problem: BlockProblem) -> bool:
    seen = np.zeros(problem.num_vars, dtype=int)
    for blk in problem.blocks:
        seen[blk.variables] += 1
    return bool(np.all(seen == 1))


def _presolve(a: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    """Indices of a maximal independent row subset, and whether the dropped rows are consistent."""
    p = a.shape[0]
    if p == 0:
        return np.arange(0), True
    _, r, piv = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > 1e-10 * max(diag.max(), 1.0)))
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(p), keep)
    if not len(drop):
        return keep, True
    w, *_ = np.linalg.lstsq(a[keep].T, a[drop].T, rcond=None)
    consistent = np.abs(rhs[drop] - w.T @ rhs[keep]).max() <= 1e-9 * (1 + np.abs(rhs).max())
    return keep, bool(consistent)


def _chol_inverse(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factors and their inverses for a stack of SPD matrices."""
    chol = np.linalg.cholesky(mats)
    return chol, np.linalg.inv(chol)


def _nt_scaling(s_chol: np.ndarray, z_chol: np.ndarray, z_chol_inv: np.ndarray):
    """Scaling G with G^T S G = G^-1 Z G^-T = diag(v), plus G^-1, v and W = G G^T."""
    u, v, _ = np.linalg.svd(z_chol.transpose(0, 2, 1) @ s_chol)
    root = np.sqrt(v)
    g = (z_chol @ u) / root[:, None, :]
    g_inv = root[:, :, None] * (u.transpose(0, 2, 1) @ z_chol_inv)
    return g, g_inv, v, g @ g.transpose(0, 2, 1)


def _max_step(chol_inv: np.ndarray, direction: np.ndarray) -> float:
    """Largest alpha with X + alpha*D ⪰ 0, given inverse Cholesky factors of X."""
    scaled = chol_inv @ direction @ chol_inv.transpose(0, 2, 1)
    scaled = (scaled + scaled.transpose(0, 2, 1)) / 2
    lowest = np.linalg.eigvalsh(scaled)[:, 0].min() if len(scaled) else 0.0
    return np.inf if lowest >= 0 else -1.0 / lowest


def _initial_point(families: list[_Family], c: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Multiples of the identity sized to the data (the SDPT3 heuristic)."""
    S, Z = [], []
    for f in families:
        root = np.sqrt(f.n)
        norms = np.linalg.norm(f.F_flat, axis=1) if f.k else np.zeros(0)
        cost = np.abs(c[f.var_idx]).max(axis=0) if f.k else np.zeros(0)
        z0 = max(10.0, root, root * float(np.max((1 + cost) / (1 + norms), initial=0.0)))
        s0 = max(10.0, root, float(np.max(norms, initial=0.0)), float(np.linalg.norm(f.F0.reshape(f.count, -1), axis=1).max()))
        eye = np.eye(f.n)
        S.append(np.broadcast_to(s0 * eye, (f.count, f.n, f.n)).copy())
        Z.append(np.broadcast_to(z0 * eye, (f.count, f.n, f.n)).copy())
    return S, Z


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.transpose(0, 2, 1)) / 2


class _KKTSolver:
    """Solves [[M, A^T], [A, 0]] [dy; dlam] = [r1; r2] with M = Q Q^T blockwise.

    Separable problems never form M: each block's triangular factor comes
    from a QR decomposition of Q^T, which keeps the condition number of the
    factor at cond(Q) rather than cond(Q)^2.
    """

    def __init__(self, problem: BlockProblem, families: list[_Family], a: np.ndarray, separable: bool):
        self.problem = problem
        self.families = families
        self.a = a
        self.separable = separable
        self.a_loc = [a[:, f.var_idx].transpose(1, 2, 0) for f in families]  # (B, k, p)
        self.aat = a @ a.T

    def factor(self, scaled: list[np.ndarray]) -> None:
        p = self.a.shape[0]
        self.scaled = scaled
        if self.separable:
            # M_b = R_b^T R_b and H_b = R_b^-T A_b^T; the reduced matrix A M^-1 A^T = H^T H
            # is factored by a QR of the stacked H_b for the same reason.
            self.r_inv, self.half = [], []
            for q, a_loc in zip(scaled, self.a_loc):
                r_inv = _triangular_inverse(_schur_factor(q))
                self.r_inv.append(r_inv)
                self.half.append(r_inv.transpose(0, 2, 1) @ a_loc)
            if p:
                stacked = np.concatenate([h.reshape(-1, p) for h in self.half])
                self.q_red, self.r_red = np.linalg.qr(stacked)
        else:
            n = self.problem.num_vars
            m_full = np.zeros((n, n))
            for fam, q in zip(self.families, scaled):
                m = q @ q.transpose(0, 2, 1)
                for b in range(fam.count):
                    idx = fam.var_idx[b]
                    m_full[np.ix_(idx, idx)] += m[b]
            self.kkt = np.block([[m_full, self.a.T], [self.a, np.zeros((p, p))]])

    def _apply(self, dy: np.ndarray, dlam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out = np.zeros(self.problem.num_vars)
        for fam, q in zip(self.families, self.scaled):
            t = dy[fam.var_idx][:, None, :] @ q
            np.add.at(out, fam.var_idx, (q @ t.transpose(0, 2, 1))[..., 0])
        return out + self.a.T @ dlam, self.a @ dy

    def _solve_once(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = self.a.shape[0]
        if not self.separable:
            sol = _robust_solve(self.kkt, np.concatenate([r1, r2]))
            return sol[: len(r1)], sol[len(r1):]
        # with h_b = R_b^-T r1_b: dlam solves H^T H dlam = H^T h - r2, dy_b = R_b^-1 (h_b - H_b dlam)
        hs = [(r_inv.transpose(0, 2, 1) @ r1[fam.var_idx][..., None])[..., 0]
              for fam, r_inv in zip(self.families, self.r_inv)]
        if p:
            h = np.concatenate([x.ravel() for x in hs])
            rhs = self.q_red.T @ h - _triangular_solve(self.r_red.T, r2, lower=True)
            dlam = _triangular_solve(self.r_red, rhs, lower=False)
        else:
            dlam = np.zeros(0)
        dy = np.zeros(self.problem.num_vars)
        for fam, r_inv, half, x in zip(self.families, self.r_inv, self.half, hs):
            dy[fam.var_idx] = (r_inv @ (x - half @ dlam)[..., None])[..., 0]
        return dy, dlam

    def solve(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dy, dlam = self._solve_once(r1, r2)
        # iterative refinement; near degenerate optima a single pass is not enough
        floor = 1e-15 * (1.0 + np.abs(r1).max(initial=0.0) + np.abs(r2).max(initial=0.0))
        previous = np.inf
        for _ in range(_MAX_REFINE):
            e1, e2 = self._apply(dy, dlam)
            e1, e2 = r1 - e1, r2 - e2
            size = max(np.abs(e1).max(initial=0.0), np.abs(e2).max(initial=0.0))
            if size <= floor or size > 0.5 * previous:
                break
            previous = size
            ddy, ddlam = self._solve_once(e1, e2)
            dy, dlam = dy + ddy, dlam + ddlam
        if len(dlam):
            # keep A dy = r2 exact so primal equality residuals cannot drift
            dy += self.a.T @ _robust_solve(self.aat, r2 - self.a @ dy)
        return dy, dlam


def _schur_factor(q: np.ndarray) -> np.ndarray:
    """Upper-triangular R_b with R_b^T R_b = Q_b Q_b^T, from a QR of Q_b^T."""
    return np.linalg.qr(q.transpose(0, 2, 1), mode="r")


def _triangular_inverse(r: np.ndarray) -> np.ndarray:
    """Inverses of a stack of upper-triangular matrices (LAPACK trtri)."""
    out = np.empty_like(r)
    for b in range(len(r)):
        inv, info = scipy.linalg.lapack.dtrtri(r[b], lower=0)
        if info != 0:
            raise np.linalg.LinAlgError("singular triangular factor")
        out[b] = inv
    return out


def _triangular_solve(r: np.ndarray, rhs: np.ndarray, lower: bool) -> np.ndarray:
    try:
        return scipy.linalg.solve_triangular(r, rhs, lower=lower, check_finite=False)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(r, rhs, rcond=None)[0]


def _robust_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        sol = np.linalg.solve(mat, rhs)
        if np.all(np.isfinite(sol)):
            return sol
    except np.linalg.LinAlgError:
        pass
    return np.linalg.lstsq(mat, rhs, rcond=None)[0]


def solve(
    problem: BlockProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    debug: bool = False,
) -> SolveReport:
    """Solve ``problem`` to relative duality gap ``tol``.

    The starting point is y = 0, lam = 0 and scaled identities for S_b and
    Z_b.  Runs are deterministic for a given input.  With ``debug=True``
    every iterate is checked against the residual-corrected weak-duality
    identity.
    """
    if tol < 1e-10:
        raise ValueError("tol must be at least 1e-10")
    c = problem.objective
    keep, consistent = _presolve(problem.eq_matrix, problem.eq_rhs)
    a = problem.eq_matrix[keep]
    rhs = problem.eq_rhs[keep]
    p = len(keep)
    families = _families(problem)
    if not consistent:
        return _report_infeasible(problem, families, "equality constraints are inconsistent")
    kkt = _KKTSolver(problem, families, a, _is_separable(problem))

    n_total = sum(b.size for b in problem.blocks)
    y = np.zeros(problem.num_vars)
    lam = np.zeros(p)
    S, Z = _initial_point(families, c)
    scale_p = 1.0 + max([np.abs(rhs).max() if p else 0.0] + [np.abs(f.F0).max() for f in families])
    scale_d = 1.0 + (np.abs(c).max() if len(c) else 0.0)

    best = None
    history: list[dict] = []
    status = Status.NUMERICAL_TROUBLE
    message = "iteration limit reached"
    stalls = 0
    it = 0
    for it in range(max_iter + 1):
        try:
            factors = [_chol_inverse(s) for s in S]
            z_factors = [_chol_inverse(z) for z in Z]
        except np.linalg.LinAlgError:
            message = "lost positive definiteness"
            break
        rp = [f.F0 + f.apply(y[f.var_idx]) - s for f, s in zip(families, S)]
        fz = np.zeros(problem.num_vars)
        for f, z in zip(families, Z):
            np.add.at(fz, f.var_idx, f.adjoint(z))
        r_d = c + fz - (a.T @ lam if p else 0.0)
        r_eq = rhs - a @ y if p else np.zeros(0)
        pobj = float(c @ y)
        dobj = float(rhs @ lam) + sum(float(np.sum(f.F0 * z)) for f, z in zip(families, Z))
        comp = sum(float(np.sum(s * z)) for s, z in zip(S, Z))
        mu = comp / n_total
        pinf = max([np.abs(r).max() for r in rp] + [np.abs(r_eq).max() if p else 0.0]) / scale_p
        dinf = (np.abs(r_d).max() if len(r_d) else 0.0) / scale_d
        gap = dobj - pobj
        rel_gap = abs(gap) / (1 + abs(pobj))
        history.append(dict(iteration=it, primal=pobj, dual=dobj, gap=gap, pinf=pinf, dinf=dinf, mu=mu))
        log.debug("it %3d  p %.10e  d %.10e  gap %.2e  pinf %.2e  dinf %.2e", it, pobj, dobj, gap, pinf, dinf)
        if debug:
            slack = abs(rhs @ r_eq if p else 0.0) + sum(abs(float(np.sum(z * r))) for z, r in zip(Z, rp))
            slack += abs(float(r_d @ y))
            assert gap >= -1e-12 * (1 + abs(pobj)) - slack - 1e-9 * abs(comp), "weak duality violated"
            assert comp >= 0

        # the raw gap can cross zero while iterates are still infeasible, so <S, Z> counts too
        merit = max(rel_gap, comp / (1 + abs(pobj)), pinf, dinf)
        if not np.isfinite(merit):
            message = "non-finite iterate"
            break
        if best is None or merit < best[0]:
            best = (merit, it, y.copy(), lam.copy(), [s.copy() for s in S], [z.copy() for z in Z], pobj, dobj, pinf, dinf)
        if rel_gap <= tol and pinf <= tol and dinf <= tol:
            status, message = Status.OPTIMAL, "converged"
            break
        blowup = max(np.abs(y).max() if len(y) else 0.0, np.abs(lam).max() if p else 0.0,
                     max(float(np.trace(zz, axis1=1, axis2=2).max()) for zz in Z))
        if blowup > 1e11:
            status, message = Status.INFEASIBLE, "iterates diverge (infeasibility certificate)"
            break
        if it == max_iter or stalls >= 5:
            if stalls >= 5:
                message = "step length stalled"
            break

        scalings = [_nt_scaling(sf[0], zf[0], zf[1]) for sf, zf in zip(factors, z_factors)]
        try:
            kkt.factor([f.scaled_basis(sc[0]) for f, sc in zip(families, scalings)])
        except np.linalg.LinAlgError:
            message = "Schur complement factorization failed"
            break

        def direction(target_mu, affine=None):
            hs = []
            for i, (g, g_inv, v, w) in enumerate(scalings):
                rhat = np.zeros((len(v), v.shape[1], v.shape[1]))
                idx = np.arange(v.shape[1])
                rhat[:, idx, idx] = target_mu - v**2
                if affine is not None:
                    dz_hat = g_inv @ affine[1][i] @ g_inv.transpose(0, 2, 1)
                    ds_hat = g.transpose(0, 2, 1) @ affine[0][i] @ g
                    rhat -= _sym(dz_hat @ ds_hat)
                t = 2 * rhat / (v[:, :, None] + v[:, None, :])
                hs.append(g @ t @ g.transpose(0, 2, 1))
            grad = np.zeros(problem.num_vars)
            for f, hm, r, sc in zip(families, hs, rp, scalings):
                np.add.at(grad, f.var_idx, f.adjoint(hm - sc[3] @ r @ sc[3]))
            dy, dlam = kkt.solve(r_d + grad, r_eq)
            ds, dz = [], []
            dual_target = (a.T @ dlam) - r_d
            for f, hm, r, sc in zip(families, hs, rp, scalings):
                dsf = f.apply(dy[f.var_idx]) + r
                ds.append(dsf)
                dzf = _sym(hm - sc[3] @ dsf @ sc[3])
                if kkt.separable:
                    dzf = f.project_adjoint(dzf, dual_target[f.var_idx])
                dz.append(dzf)
            return dy, dlam, ds, dz

        def steps(ds, dz):
            ap = min(_max_step(fi[1], d) for fi, d in zip(factors, ds))
            ad = min(_max_step(zi[1], d) for zi, d in zip(z_factors, dz))
            return ap, ad

        dy, dlam, ds, dz = direction(0.0)
        ap, ad = steps(ds, dz)
        ap_a, ad_a = min(1.0, ap), min(1.0, ad)
        comp_aff = sum(float(np.sum((s + ap_a * d1) * (z + ad_a * d2))) for s, z, d1, d2 in zip(S, Z, ds, dz))
        sigma = min(1.0, max(0.0, comp_aff / comp)) ** 3 if comp > 0 else 0.0
        dy, dlam, ds2, dz2 = direction(sigma * mu, (ds, dz))
        ap, ad = steps(ds2, dz2)
        gamma = 0.9 + 0.09 * min(ap_a, ad_a)
        ap, ad = min(1.0, gamma * ap), min(1.0, gamma * ad)
        if not (np.isfinite(ap) and np.isfinite(ad)):
            message = "non-finite step"
            break
        history[-1].update(step_primal=ap, step_dual=ad, sigma=sigma)
        stalls = stalls + 1 if max(ap, ad) < 1e-8 else 0
        y = y + ap * dy
        S = [s + ap * d for s, d in zip(S, ds2)]
        S = [_sym(s) for s in S]
        lam = lam + ad * dlam
        Z = [_sym(z + ad * d) for z, d in zip(Z, dz2)]

    if status is not Status.OPTIMAL and status is not Status.INFEASIBLE and best is not None:
        merit, it_best, y, lam, S, Z, pobj, dobj, pinf, dinf = best
        if merit <= NEAR_OPTIMAL_TOL:
            status = Status.NEAR_OPTIMAL
    return _build_report(problem, families, keep, status, message, it, y, lam, S, Z, pobj, dobj, pinf, dinf, history)


def _unstack(problem: BlockProblem, families: list[_Family], stacks: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = [None] * len(problem.blocks)  # type: ignore[list-item]
    for f, stack in zip(families, stacks):
        for j, pos in enumerate(f.positions):
            out[pos] = stack[j]
    return out


def _build_report(problem, families, keep, status, message, it, y, lam, S, Z, pobj, dobj, pinf, dinf, history):
    duals = np.zeros(problem.num_eq)
    duals[keep] = lam
    return SolveReport(
        primal_objective=pobj,
        dual_objective=dobj,
        gap=dobj - pobj,
        status=status,
        x=y,
        eq_duals=duals,
        dual_matrices=_unstack(problem, families, Z),
        slack_matrices=_unstack(problem, families, S),
        iterations=it,
        primal_residual=pinf,
        dual_residual=dinf,
        message=message,
        history=history,
    )


def _report_infeasible(problem, families, message):
    eye = [np.broadcast_to(np.eye(f.n), (f.count, f.n, f.n)).copy() for f in families]
    return _build_report(problem, families, np.arange(0), Status.INFEASIBLE, message, 0,
                         np.zeros(problem.num_vars), np.zeros(0), eye, eye, np.nan, np.nan, np.inf, np.inf, [])

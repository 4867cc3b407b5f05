"""Interior-point solver for block-structured conic programs.

Solves
    minimize    c . x
    subject to  A x = b,   x = (svec(X_1), ..., svec(X_r), u, v)

with X_b positive semidefinite, u componentwise nonnegative and v free.
The method is a primal-dual path-following iteration with Nesterov-Todd
scaling and Mehrotra predictor-corrector steps.  The Schur complement is
assembled block by block (dense per-block kernels, sparse accumulation) and
free variables enter through an augmented system solved by a second, small
Schur complement with static diagonal regularization.

Symmetric matrices travel in scaled vector form ("svec"): the lower triangle
read row by row with off-diagonal entries multiplied by sqrt(2), so that the
Frobenius inner product becomes the ordinary dot product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure

__all__ = [
    "SdpProblem",
    "SdpSolution",
    "SdpBuilder",
    "solve",
    "svec",
    "smat",
    "dump_problem",
    "load_problem",
]

_FRAC_TO_BOUNDARY = 0.99
_STATIC_REG = 1e-9
_PIVOT_TOL = 1e-10       # presolve rank-revealing pivot threshold
_PRESOLVE_DENSE_MAX = 2000   # largest row count for the rank-revealing pass
_STAGNATION_WINDOW = 30


@lru_cache(maxsize=None)
def _svec_index(k: int):
    P, Q = np.tril_indices(k)
    s = np.where(P == Q, 1.0, np.sqrt(2.0))
    return P, Q, s


def svec_dim(k: int) -> int:
    return k * (k + 1) // 2


def svec(mat: np.ndarray) -> np.ndarray:
    """Lower triangle, off-diagonals scaled by sqrt(2)."""
    P, Q, s = _svec_index(mat.shape[0])
    return s * mat[P, Q]


def smat(vec: np.ndarray, k: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    P, Q, s = _svec_index(k)
    out = np.zeros((k, k))
    out[P, Q] = vec / s
    out[Q, P] = out[P, Q]
    return out


def _svec_pos(i: int, j: int) -> int:
    # position of (i, j), i >= j, in the row-by-row lower triangle
    return i * (i + 1) // 2 + j


@dataclass(frozen=True)
class SdpProblem:
    """Conic program data.  Columns are ordered psd blocks, nonneg, free."""
    psd_dims: tuple[int, ...]
    nonneg_dim: int
    free_dim: int
    a_cone: sp.csr_matrix          # m x (sum svec_dim + nonneg_dim)
    a_free: sp.csr_matrix          # m x free_dim
    b: np.ndarray
    c_cone: np.ndarray
    c_free: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    def block_slices(self) -> list[slice]:
        out = []
        ofs = 0
        for k in self.psd_dims:
            out.append(slice(ofs, ofs + svec_dim(k)))
            ofs += svec_dim(k)
        return out

    @property
    def nonneg_slice(self) -> slice:
        ofs = sum(svec_dim(k) for k in self.psd_dims)
        return slice(ofs, ofs + self.nonneg_dim)


@dataclass
class SdpSolution:
    status: str                    # solved | primal_infeasible | dual_infeasible |
                                   # iteration_limit | numerical_trouble
    objective: float
    psd: list[np.ndarray]
    nonneg: np.ndarray
    free: np.ndarray
    y: np.ndarray
    z_cone: np.ndarray
    iterations: int
    residuals: dict[str, float] = field(default_factory=dict)
    dropped_rows: tuple[int, ...] = ()

    @property
    def solved(self) -> bool:
        return self.status == "solved"


class SdpBuilder:
    """Incremental construction of an :class:`SdpProblem`.

    PSD coefficients are given against the symmetric matrix inner product:
    ``set_psd(r, b, i, j, c)`` adds c * (X_ij + X_ji) for i != j and c * X_ii
    on the diagonal (0-based i >= j).
    """

    def __init__(self):
        self.psd_dims: list[int] = []
        self.nonneg_dim = 0
        self.free_dim = 0
        self._rows: list[float] = []
        self._cone_coo: list[tuple[int, int, float]] = []
        self._free_coo: list[tuple[int, int, float]] = []
        self._obj_cone: dict[int, float] = {}
        self._obj_free: dict[int, float] = {}

    # -- variables ----------------------------------------------------
    def add_psd_block(self, k: int) -> int:
        self.psd_dims.append(int(k))
        return len(self.psd_dims) - 1

    def add_nonneg(self, count: int = 1) -> int:
        first = self.nonneg_dim
        self.nonneg_dim += count
        return first

    def add_free(self, count: int = 1) -> int:
        first = self.free_dim
        self.free_dim += count
        return first

    # -- offsets (valid once all blocks are declared) -------------------
    def _psd_offset(self, block: int) -> int:
        return sum(svec_dim(k) for k in self.psd_dims[:block])

    def _nonneg_offset(self) -> int:
        return sum(svec_dim(k) for k in self.psd_dims)

    # -- rows -----------------------------------------------------------
    def new_row(self, rhs: float) -> int:
        self._rows.append(float(rhs))
        return len(self._rows) - 1

    def set_psd(self, row: int, block: int, i: int, j: int, coeff: float):
        if i < j:
            i, j = j, i
        col = self._psd_offset(block) + _svec_pos(i, j)
        val = coeff if i == j else np.sqrt(2.0) * coeff
        self._cone_coo.append((row, col, float(val)))

    def set_nonneg(self, row: int, idx: int, coeff: float):
        self._cone_coo.append((row, self._nonneg_offset() + idx, float(coeff)))

    def set_free(self, row: int, idx: int, coeff: float):
        self._free_coo.append((row, idx, float(coeff)))

    # -- objective --------------------------------------------------------
    def obj_psd(self, block: int, i: int, j: int, coeff: float):
        if i < j:
            i, j = j, i
        col = self._psd_offset(block) + _svec_pos(i, j)
        val = coeff if i == j else np.sqrt(2.0) * coeff
        self._obj_cone[col] = self._obj_cone.get(col, 0.0) + val

    def obj_nonneg(self, idx: int, coeff: float):
        col = self._nonneg_offset() + idx
        self._obj_cone[col] = self._obj_cone.get(col, 0.0) + coeff

    def obj_free(self, idx: int, coeff: float):
        self._obj_free[idx] = self._obj_free.get(idx, 0.0) + coeff

    def build(self) -> SdpProblem:
        m = len(self._rows)
        n_cone = self._nonneg_offset() + self.nonneg_dim
        rows = np.array([r for r, _, _ in self._cone_coo], dtype=np.int64)
        cols = np.array([c for _, c, _ in self._cone_coo], dtype=np.int64)
        vals = np.array([v for _, _, v in self._cone_coo])
        a_cone = sp.csr_matrix((vals, (rows, cols)), shape=(m, n_cone))
        rows = np.array([r for r, _, _ in self._free_coo], dtype=np.int64)
        cols = np.array([c for _, c, _ in self._free_coo], dtype=np.int64)
        vals = np.array([v for _, _, v in self._free_coo])
        a_free = sp.csr_matrix((vals, (rows, cols)), shape=(m, self.free_dim))
        c_cone = np.zeros(n_cone)
        for col, val in self._obj_cone.items():
            c_cone[col] = val
        c_free = np.zeros(self.free_dim)
        for col, val in self._obj_free.items():
            c_free[col] = val
        return SdpProblem(
            psd_dims=tuple(self.psd_dims),
            nonneg_dim=self.nonneg_dim,
            free_dim=self.free_dim,
            a_cone=a_cone,
            a_free=a_free,
            b=np.array(self._rows),
            c_cone=c_cone,
            c_free=c_free,
        )


# ======================================================================
# solver internals
# ======================================================================

def _sym_kron(w: np.ndarray) -> np.ndarray:
    """Matrix of V |-> svec(W V W) in svec coordinates."""
    k = w.shape[0]
    P, Q, s = _svec_index(k)
    wp = w[P]
    wq = w[Q]
    h = wp[:, P] * wq[:, Q] + wp[:, Q] * wq[:, P]
    return 0.5 * (s[:, None] * s[None, :]) * h


_SYMKRON_MAX_DIM = 4200   # largest svec dimension for an explicit operator


def _schur_block_chunked(a_sub: sp.csr_matrix, w_mat: np.ndarray,
                         chunk: int = 192) -> np.ndarray:
    """A_b (W (x)s W) A_b^T for blocks too large to build the operator.

    Processes constraint rows in chunks: reconstruct the symmetric
    coefficient matrices, sandwich them with W, svec back and multiply by
    the sparse A_b.  Memory stays bounded by the chunk size.
    """
    k = w_mat.shape[0]
    P, Q, s = _svec_index(k)
    m_b = a_sub.shape[0]
    out = np.empty((m_b, m_b))
    for lo in range(0, m_b, chunk):
        hi = min(lo + chunk, m_b)
        vals = np.asarray(a_sub[lo:hi].todense()) / s
        mats = np.zeros((hi - lo, k, k))
        mats[:, P, Q] = vals
        mats[:, Q, P] = vals
        sandwiched = w_mat @ mats @ w_mat
        ah = s * sandwiched[:, P, Q]             # (chunk, sk)
        out[:, lo:hi] = np.asarray(a_sub @ ah.T)
    return 0.5 * (out + out.T)


class _ConeState:
    """Per-iteration Nesterov-Todd scaling data."""

    def __init__(self, problem: SdpProblem):
        self.dims = problem.psd_dims
        self.slices = problem.block_slices()
        self.nn_slice = problem.nonneg_slice
        self.nu = problem.nonneg_dim + sum(problem.psd_dims)
        # per block: R, Rinv, lam; nonneg: d, lam
        self.r: list[np.ndarray] = []
        self.rinv: list[np.ndarray] = []
        self.lam: list[np.ndarray] = []
        self.d = np.zeros(0)
        self.lam_nn = np.zeros(0)

    def update(self, w: np.ndarray, z: np.ndarray):
        self.r.clear()
        self.rinv.clear()
        self.lam.clear()
        for k, sl in zip(self.dims, self.slices):
            x_mat = smat(w[sl], k)
            z_mat = smat(z[sl], k)
            lx = np.linalg.cholesky(x_mat)
            lz = np.linalg.cholesky(z_mat)
            u_svd, sig, vt = np.linalg.svd(lz.T @ lx)
            sig_i = 1.0 / np.sqrt(sig)
            r = lx @ vt.T * sig_i[None, :]
            rinv = (vt.T * np.sqrt(sig)[None, :]).T @ sla.solve_triangular(
                lx, np.eye(k), lower=True
            )
            self.r.append(r)
            self.rinv.append(rinv)
            self.lam.append(sig)
        wn = w[self.nn_slice]
        zn = z[self.nn_slice]
        self.d = np.sqrt(wn / zn)
        self.lam_nn = np.sqrt(wn * zn)

    # scaling operator H = W (x)s W on the cone vector
    def apply_h(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        for k, sl, r in zip(self.dims, self.slices, self.r):
            w_mat = r @ r.T
            out[sl] = svec(w_mat @ smat(v[sl], k) @ w_mat)
        out[self.nn_slice] = (self.d ** 2) * v[self.nn_slice]
        return out

    def max_step(self, v: np.ndarray, dv: np.ndarray, dual: bool) -> float:
        """Largest alpha with v + alpha dv staying in the cone."""
        alpha = np.inf
        for k, sl, r, rinv, lam in zip(self.dims, self.slices, self.r, self.rinv, self.lam):
            d_mat = smat(dv[sl], k)
            if dual:
                d_scaled = r.T @ d_mat @ r
            else:
                d_scaled = rinv @ d_mat @ rinv.T
            rootlam = np.sqrt(lam)
            bmat = d_scaled / rootlam[:, None] / rootlam[None, :]
            emin = np.linalg.eigvalsh(bmat)[0]
            if emin < 0:
                alpha = min(alpha, -1.0 / emin)
        vn = v[self.nn_slice]
        dn = dv[self.nn_slice]
        neg = dn < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-vn[neg] / dn[neg])))
        return alpha

    def combined_rhs(self, sigma_mu: float, dw_a: np.ndarray, dz_a: np.ndarray) -> np.ndarray:
        """Scaled-space Mehrotra right-hand side for the complementarity rows.

        In scaled coordinates both iterates equal diag(lam); the corrector
        solves lam o h = sigma*mu*I - lam^2 - (dw_s o dz_s) and maps back.
        The affine pass is the special case dw_a = dz_a = 0, sigma_mu = 0,
        where this reduces to -w.
        """
        out = np.empty_like(dw_a)
        for k, sl, r, rinv, lam in zip(self.dims, self.slices, self.r, self.rinv, self.lam):
            dx_s = rinv @ smat(dw_a[sl], k) @ rinv.T
            dz_s = r.T @ smat(dz_a[sl], k) @ r
            dmat = -0.5 * (dx_s @ dz_s + dz_s @ dx_s)
            np.fill_diagonal(dmat, dmat.diagonal() + sigma_mu - lam ** 2)
            h = dmat / (0.5 * (lam[:, None] + lam[None, :]))
            out[sl] = svec(r @ h @ r.T)
        lam_nn = self.lam_nn
        dws = dw_a[self.nn_slice] / np.where(self.d > 0, self.d, 1.0)
        dzs = dz_a[self.nn_slice] * self.d
        d_vec = sigma_mu - lam_nn ** 2 - dws * dzs
        out[self.nn_slice] = self.d * (d_vec / np.where(lam_nn > 0, lam_nn, 1.0))
        return out


class _Kkt:
    """One iteration's augmented system

        [ A_c H A_c^T   A_f ] [dy]   [r1]
        [ A_f^T        -d I ] [du] = [r2]

    factored as a whole (dense LU with partial pivoting, or sparse LU when
    the Schur complement is block-sparse).  Pivoting across the free columns
    keeps the solve usable even when A_c H A_c^T turns nearly singular close
    to a degenerate optimum; iterative refinement against the unregularized
    operator removes the static-regularization bias.
    """

    def __init__(self, a_cone: sp.csr_matrix, a_free: sp.csr_matrix, block_rows,
                 block_subs, cones: _ConeState, m: int, f_dim: int):
        contribs = []
        for rows_b, a_sub, r in zip(block_rows, block_subs, cones.r):
            w_mat = r @ r.T
            if a_sub.shape[1] <= _SYMKRON_MAX_DIM:
                h = _sym_kron(w_mat)
                ah = np.asarray(a_sub @ h)        # (m_b, sk) dense
                contribs.append((rows_b, np.asarray(a_sub @ ah.T)))
            else:
                contribs.append((rows_b, _schur_block_chunked(a_sub, w_mat)))
        nn = a_cone[:, cones.nn_slice]
        d2 = cones.d ** 2
        nn_contrib = (nn.multiply(d2[None, :])) @ nn.T if nn.shape[1] else None

        self.m = m
        self.f_dim = f_dim
        self.a_free = a_free
        self.last_quality = 0.0
        fill = sum(rows.size ** 2 for rows, _ in contribs)
        use_dense = (m + f_dim) <= 1500 or fill >= 0.25 * m * m

        if use_dense:
            schur = np.zeros((m, m))
            for rows_b, blockmat in contribs:
                schur[np.ix_(rows_b, rows_b)] += blockmat
            if nn_contrib is not None:
                schur += nn_contrib.toarray()
            self.delta = _STATIC_REG
            kmat = np.zeros((m + f_dim, m + f_dim))
            kmat[:m, :m] = schur
            kmat[np.diag_indices(m)] += self.delta
            if f_dim:
                fd = a_free.toarray()
                kmat[:m, m:] = fd
                kmat[m:, :m] = fd.T
                kmat[m + np.arange(f_dim), m + np.arange(f_dim)] = -self.delta
            self.m_op = kmat[:m, :m]              # regularized Schur block
            self._lu = sla.lu_factor(kmat, check_finite=False)
            self._solve_once = lambda rhs: sla.lu_solve(self._lu, rhs, check_finite=False)
        else:
            data, ii, jj = [], [], []
            for rows_b, blockmat in contribs:
                ii.append(np.repeat(rows_b, rows_b.size))
                jj.append(np.tile(rows_b, rows_b.size))
                data.append(blockmat.ravel())
            schur = sp.csc_matrix(
                (np.concatenate(data) if data else np.zeros(0),
                 (np.concatenate(ii) if ii else np.zeros(0, dtype=np.int64),
                  np.concatenate(jj) if jj else np.zeros(0, dtype=np.int64))),
                shape=(m, m),
            )
            if nn_contrib is not None:
                schur = schur + nn_contrib.tocsc()
            self.delta = _STATIC_REG
            schur_reg = schur + self.delta * sp.identity(m, format="csc")
            if f_dim:
                kmat = sp.bmat(
                    [[schur_reg, a_free],
                     [a_free.T, -self.delta * sp.identity(f_dim)]],
                    format="csc",
                )
            else:
                kmat = schur_reg.tocsc()
            self.m_op = schur_reg
            lu = spla.splu(kmat)
            self._solve_once = lu.solve

    def _true_residual(self, dy, du, r1, r2):
        # products against the unregularized operator
        res1 = r1 - (self.m_op @ dy - self.delta * dy)
        if self.f_dim:
            res1 -= self.a_free @ du
            res2 = r2 - self.a_free.T @ dy
        else:
            res2 = np.zeros(0)
        return res1, res2

    def solve(self, r1: np.ndarray, r2: np.ndarray, refine: int = 6):
        rhs = np.concatenate([r1, r2]) if self.f_dim else r1
        x = self._solve_once(rhs)
        dy, du = x[:self.m], x[self.m:]
        scale = 1.0 + np.linalg.norm(rhs)
        best = None
        for _ in range(refine):
            res1, res2 = self._true_residual(dy, du, r1, r2)
            err = np.linalg.norm(res1) + np.linalg.norm(res2)
            if best is None or err < best[0]:
                best = (err, dy, du)
            if err <= 1e-14 * scale:
                self.last_quality = err / scale
                return dy, du
            dx = self._solve_once(np.concatenate([res1, res2]) if self.f_dim else res1)
            dy = dy + dx[:self.m]
            du = du + dx[self.m:]
        res1, res2 = self._true_residual(dy, du, r1, r2)
        err = np.linalg.norm(res1) + np.linalg.norm(res2)
        if best is not None and best[0] < err:
            err, dy, du = best
        self.last_quality = err / scale
        return dy, du


def _cone_dist(problem: SdpProblem, v: np.ndarray) -> float:
    """Distance of a cone-space vector from the cone (negative part norm)."""
    dist2 = 0.0
    for k, sl in zip(problem.psd_dims, problem.block_slices()):
        eig = np.linalg.eigvalsh(smat(v[sl], k))
        dist2 += float(np.sum(np.minimum(eig, 0.0) ** 2))
    neg = np.minimum(v[problem.nonneg_slice], 0.0)
    dist2 += float(neg @ neg)
    return np.sqrt(dist2)


def _presolve(problem: SdpProblem, report: dict):
    """Equilibrate rows and drop numerically dependent ones."""
    a_all = sp.hstack([problem.a_cone, problem.a_free], format="csr")
    norms = np.sqrt(np.asarray(a_all.multiply(a_all).sum(axis=1)).ravel())
    keep = norms > 0
    # zero row with nonzero rhs: flag infeasible immediately
    bad = (~keep) & (np.abs(problem.b) > 0)
    if np.any(bad):
        report["infeasible_row"] = int(np.nonzero(bad)[0][0])
    scale = np.where(keep, 1.0 / np.where(keep, norms, 1.0), 1.0)

    m = problem.n_rows
    dropped = list(np.nonzero(~keep)[0])
    if m <= _PRESOLVE_DENSE_MAX and m > 0:
        d_scale = sp.diags(scale)
        a_s = d_scale @ a_all
        gram = np.asarray((a_s @ a_s.T).todense())
        c_fac, piv, rank, _ = sla.lapack.dpstrf(gram, tol=_PIVOT_TOL ** 2, lower=1)
        piv = piv - 1
        redundant = sorted(set(piv[rank:]) - set(dropped))
        dropped = sorted(set(dropped) | set(redundant))
    keep_idx = np.array([i for i in range(m) if i not in set(dropped)], dtype=np.int64)
    report["dropped_rows"] = tuple(int(i) for i in dropped)
    return keep_idx, scale


def solve(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 200,
          verbose: bool = False, presolve: bool = True) -> SdpSolution:
    """Run the interior-point iteration.

    On status "solved" the primal residual, dual residual and objective gap
    all satisfy their tol-relative bounds.  Infeasibility is reported through
    the status field (no exception), detected from approximate Farkas
    certificates once residuals stagnate.
    """
    m_orig = problem.n_rows
    report: dict = {}
    if presolve and m_orig:
        keep_idx, scale = _presolve(problem, report)
        if "infeasible_row" in report:
            return SdpSolution(
                status="primal_infeasible", objective=np.nan,
                psd=[], nonneg=np.zeros(0), free=np.zeros(0),
                y=np.zeros(m_orig), z_cone=np.zeros_like(problem.c_cone),
                iterations=0, residuals={},
                dropped_rows=report.get("dropped_rows", ()),
            )
    else:
        keep_idx = np.arange(m_orig)
        scale = np.ones(m_orig)
        report["dropped_rows"] = ()

    row_scale = scale[keep_idx]
    a_cone = sp.diags(row_scale) @ problem.a_cone[keep_idx]
    a_cone = a_cone.tocsr()
    a_free = (sp.diags(row_scale) @ problem.a_free[keep_idx]).tocsr()
    b = problem.b[keep_idx] * row_scale
    c_cone, c_free = problem.c_cone, problem.c_free
    m = b.shape[0]
    f_dim = problem.free_dim

    cones = _ConeState(problem)
    slices = problem.block_slices()
    nn_slice = problem.nonneg_slice
    nu = max(cones.nu, 1)

    # per-block constraint sub-matrices (rows actually touching the block)
    block_rows = []
    block_subs = []
    for sl in slices:
        sub = a_cone[:, sl].tocsc()
        rows_b = np.unique(sub.indices)
        block_rows.append(rows_b)
        block_subs.append(sub.tocsr()[rows_b, :])

    # interior start
    tau = 1.0 + (float(np.max(np.abs(b))) if m else 0.0)
    w = np.zeros(problem.c_cone.shape[0])
    z = np.zeros_like(w)
    for k, sl in zip(problem.psd_dims, slices):
        eye = svec(np.eye(k))
        w[sl] = tau * eye
        z[sl] = tau * eye
    w[nn_slice] = tau
    z[nn_slice] = tau
    u = np.zeros(f_dim)
    y = np.zeros(m)

    norm_b = 1.0 + np.linalg.norm(b)
    norm_c = 1.0 + np.linalg.norm(np.concatenate([c_cone, c_free]))

    best_score = np.inf
    best_pack = None       # iterate with the smallest max residual so far
    stagnant = 0
    status = "iteration_limit"
    iters = 0

    def residuals():
        rp = b - a_cone @ w - (a_free @ u if f_dim else 0.0)
        rd_c = c_cone - a_cone.T @ y - z
        rd_f = c_free - a_free.T @ y if f_dim else np.zeros(0)
        return rp, rd_c, rd_f

    for iteration in range(max_iter):
        iters = iteration
        rp, rd_c, rd_f = residuals()
        pobj = float(c_cone @ w + (c_free @ u if f_dim else 0.0))
        dobj = float(b @ y)
        mu = float(w @ z) / nu

        res_p = np.linalg.norm(rp) / norm_b
        res_d = np.sqrt(np.linalg.norm(rd_c) ** 2 + np.linalg.norm(rd_f) ** 2) / norm_c
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        if verbose:
            print(f"iter {iteration:3d}  mu={mu:9.2e}  rp={res_p:9.2e} "
                  f"rd={res_d:9.2e}  gap={gap:9.2e}  pobj={pobj:+.9e}")
        if res_p <= tol and res_d <= tol and gap <= tol:
            status = "solved"
            break

        # Farkas-style infeasibility certificates
        if dobj > 0 and np.linalg.norm(y) > 1e4:
            infeas = (_cone_dist(problem, -(a_cone.T @ y))
                      + (np.linalg.norm(a_free.T @ y) if f_dim else 0.0))
            if infeas <= 1e-8 * dobj:
                status = "primal_infeasible"
                break
        cobj = float(c_cone @ w + (c_free @ u if f_dim else 0.0))
        if cobj < 0 and np.linalg.norm(np.concatenate([w, u])) > 1e5:
            ray = np.linalg.norm(a_cone @ w + (a_free @ u if f_dim else 0.0))
            if ray <= 1e-8 * (-cobj):
                status = "dual_infeasible"
                break

        score = max(res_p, res_d, gap)
        if best_pack is None or score < best_pack[0]:
            best_pack = (score, w.copy(), u.copy(), y.copy(), z.copy())
        if score < 0.9 * best_score:
            best_score = score
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= _STAGNATION_WINDOW:
                status = "numerical_trouble"
                if res_p > 100 * tol and res_d <= tol:
                    status = "primal_infeasible"
                elif res_d > 100 * tol and res_p <= tol:
                    status = "dual_infeasible"
                break

        try:
            cones.update(w, z)
            kkt = _Kkt(a_cone, a_free, block_rows, block_subs, cones, m, f_dim)
        except np.linalg.LinAlgError:
            status = "numerical_trouble"
            break

        def direction(rhs4):
            r1 = rp - a_cone @ (rhs4 - cones.apply_h(rd_c))
            dy, du = kkt.solve(r1, rd_f)
            dz = rd_c - a_cone.T @ dy
            dw = rhs4 - cones.apply_h(dz)
            return dw, du, dy, dz

        # the factorization is exhausted once refinement cannot reach the
        # solve accuracy the remaining duality gap would require
        if mu < 1e-14 * (1.0 + abs(pobj)):
            status = "numerical_trouble"
            break

        # predictor
        zero = np.zeros_like(w)
        dw_a, du_a, dy_a, dz_a = direction(cones.combined_rhs(0.0, zero, zero))
        if kkt.last_quality > 1e-8:
            status = "numerical_trouble"
            break
        ap = min(1.0, cones.max_step(w, dw_a, dual=False))
        ad = min(1.0, cones.max_step(z, dz_a, dual=True))
        mu_aff = float((w + ap * dw_a) @ (z + ad * dz_a)) / nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector
        rhs4 = cones.combined_rhs(sigma * mu, dw_a, dz_a)
        dw, du, dy, dz = direction(rhs4)

        ap = _FRAC_TO_BOUNDARY * cones.max_step(w, dw, dual=False)
        ad = _FRAC_TO_BOUNDARY * cones.max_step(z, dz, dual=True)
        ap = min(1.0, ap)
        ad = min(1.0, ad)
        if not np.isfinite(ap) or not np.isfinite(ad) or ap <= 0 or ad <= 0:
            status = "numerical_trouble"
            break

        w = w + ap * dw
        u = u + ap * du if f_dim else u
        y = y + ad * dy
        z = z + ad * dz
    else:
        iters = max_iter

    if status in ("iteration_limit", "numerical_trouble") and best_pack is not None:
        # report the best iterate seen, not the one the stall ended on
        rp, rd_c, rd_f = residuals()
        pobj = float(c_cone @ w + (c_free @ u if f_dim else 0.0))
        dobj = float(b @ y)
        cur = max(np.linalg.norm(rp) / norm_b,
                  np.sqrt(np.linalg.norm(rd_c) ** 2 + np.linalg.norm(rd_f) ** 2) / norm_c,
                  abs(pobj - dobj) / (1.0 + abs(pobj)))
        if best_pack[0] < cur:
            _, w, u, y, z = best_pack

    # final residuals against the original (unscaled, undropped) rows
    y_full = np.zeros(m_orig)
    y_full[keep_idx] = y * row_scale
    rp_full = problem.b - problem.a_cone @ w - (problem.a_free @ u if f_dim else 0.0)
    rd_c = problem.c_cone - problem.a_cone.T @ y_full - z
    rd_f = problem.c_free - problem.a_free.T @ y_full if f_dim else np.zeros(0)
    pobj = float(problem.c_cone @ w + (problem.c_free @ u if f_dim else 0.0))
    dobj = float(problem.b @ y_full)
    res = {
        "primal": float(np.linalg.norm(rp_full) / norm_b),
        "dual": float(np.sqrt(np.linalg.norm(rd_c) ** 2 + np.linalg.norm(rd_f) ** 2) / norm_c),
        "gap": float(abs(pobj - dobj) / (1.0 + abs(pobj))),
        "mu": float(w @ z) / nu,
    }
    if status == "solved" and not (res["primal"] <= 10 * tol and res["dual"] <= 10 * tol):
        status = "numerical_trouble"
    elif status in ("numerical_trouble", "iteration_limit") and (
        res["primal"] <= tol and res["dual"] <= tol and res["gap"] <= tol
    ):
        status = "solved"

    psd_mats = [smat(w[sl], k) for k, sl in zip(problem.psd_dims, slices)]
    return SdpSolution(
        status=status,
        objective=pobj,
        psd=psd_mats,
        nonneg=w[nn_slice].copy(),
        free=u.copy(),
        y=y_full,
        z_cone=z.copy(),
        iterations=iters + 1,
        residuals=res,
        dropped_rows=report.get("dropped_rows", ()),
    )


# ======================================================================
# plain-text problem dump
# ======================================================================
# Layout (documented here; see also README):
#   line 1:   "wtensor-sdp 1"
#   line 2:   "psd k1 k2 ..."          (omitted when there is no PSD block)
#   line 3:   "nonneg p" / "free f" / "rows m"
#   then one entry per line:  row col block i j value
#     row:   0 for the objective, 1..m for constraints, -1 for the rhs
#     col:   1-based flat column index (svec blocks, nonneg, free), 0 for rhs
#     block: 1-based PSD block id, 0 for the nonneg part, -1 for free columns,
#            and 0 for rhs lines
#     i, j:  1-based matrix position (i >= j) inside a PSD block; for nonneg
#            and free entries i is the 1-based index within the part and j=0;
#            for rhs lines i is the constraint row and j=0.
#   PSD values are the svec coefficients (off-diagonals carry sqrt(2)).

def dump_problem(problem: SdpProblem, path) -> None:
    sl = problem.block_slices()
    nn_ofs = problem.nonneg_slice.start
    n_cone = problem.c_cone.shape[0]

    def classify(col):
        for bi, s in enumerate(sl):
            if s.start <= col < s.stop:
                k = problem.psd_dims[bi]
                p = col - s.start
                P, Q, _ = _svec_index(k)
                return bi + 1, int(P[p]) + 1, int(Q[p]) + 1
        return 0, col - nn_ofs + 1, 0

    with open(path, "w") as fh:
        fh.write("wtensor-sdp 1\n")
        if problem.psd_dims:
            fh.write("psd " + " ".join(map(str, problem.psd_dims)) + "\n")
        fh.write(f"nonneg {problem.nonneg_dim}\n")
        fh.write(f"free {problem.free_dim}\n")
        fh.write(f"rows {problem.n_rows}\n")

        def emit(row, col, block, i, j, val):
            fh.write(f"{row} {col} {block} {i} {j} {val!r}\n")

        for col in np.nonzero(problem.c_cone)[0]:
            block, i, j = classify(int(col))
            emit(0, int(col) + 1, block, i, j, float(problem.c_cone[col]))
        for col in np.nonzero(problem.c_free)[0]:
            emit(0, n_cone + int(col) + 1, -1, int(col) + 1, 0, float(problem.c_free[col]))
        coo = problem.a_cone.tocoo()
        for r, col, v in zip(coo.row, coo.col, coo.data):
            block, i, j = classify(int(col))
            emit(int(r) + 1, int(col) + 1, block, i, j, float(v))
        coo = problem.a_free.tocoo()
        for r, col, v in zip(coo.row, coo.col, coo.data):
            emit(int(r) + 1, n_cone + int(col) + 1, -1, int(col) + 1, 0, float(v))
        for r in range(problem.n_rows):
            if problem.b[r] != 0.0:
                emit(-1, 0, 0, r + 1, 0, float(problem.b[r]))


def load_problem(path) -> SdpProblem:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("wtensor-sdp"):
        raise SolverFailure(f"{path}: not a problem dump")
    psd_dims: tuple[int, ...] = ()
    nonneg = free = m = 0
    at = 1
    while at < len(lines):
        parts = lines[at].split()
        if parts[0] == "psd":
            psd_dims = tuple(int(x) for x in parts[1:])
        elif parts[0] == "nonneg":
            nonneg = int(parts[1])
        elif parts[0] == "free":
            free = int(parts[1])
        elif parts[0] == "rows":
            m = int(parts[1])
            at += 1
            break
        at += 1

    n_cone = sum(svec_dim(k) for k in psd_dims) + nonneg
    cone_coo: list[tuple[int, int, float]] = []
    free_coo: list[tuple[int, int, float]] = []
    c_cone = np.zeros(n_cone)
    c_free = np.zeros(free)
    b = np.zeros(m)
    for ln in lines[at:]:
        row_s, col_s, block_s, i_s, j_s, val_s = ln.split()
        row, col, block, val = int(row_s), int(col_s), int(block_s), float(val_s)
        if row == -1:
            b[int(i_s) - 1] = val
        elif row == 0:
            if block == -1:
                c_free[col - n_cone - 1] = val
            else:
                c_cone[col - 1] = val
        else:
            if block == -1:
                free_coo.append((row - 1, col - n_cone - 1, val))
            else:
                cone_coo.append((row - 1, col - 1, val))

    def to_csr(coo, ncols):
        if coo:
            r, c, v = zip(*coo)
        else:
            r, c, v = (), (), ()
        return sp.csr_matrix((np.array(v), (np.array(r, dtype=np.int64),
                                            np.array(c, dtype=np.int64))),
                             shape=(m, ncols))

    return SdpProblem(
        psd_dims=psd_dims,
        nonneg_dim=nonneg,
        free_dim=free,
        a_cone=to_csr(cone_coo, n_cone),
        a_free=to_csr(free_coo, free),
        b=b,
        c_cone=c_cone,
        c_free=c_free,
    )

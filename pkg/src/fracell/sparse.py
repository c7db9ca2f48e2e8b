"""Compressed-row symmetric matrices and a preconditioned CG solver.

``spmv`` and ``cg_solve`` dispatch to a numba kernel or a vectorized numpy
kernel depending on :mod:`fracell._accel`. Both kernels are kept public
(``*_numba`` / ``*_numpy``) so they can be compared directly.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import BreakdownError, DimensionMismatch, NotConverged, ValidationError

DEFAULT_TOL = 1e-10

# kernel status codes
_OK, _MAXITER, _BREAKDOWN = 0, 1, 2


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro = np.ascontiguousarray(self.row_offsets, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        va = np.ascontiguousarray(self.values, dtype=np.float64)
        if len(ro) != self.n + 1 or ro[0] != 0 or ro[-1] != len(va) or len(ci) != len(va):
            raise ValidationError("inconsistent CSR arrays")
        if np.any(np.diff(ro) < 0):
            raise ValidationError("row offsets must be monotone")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n):
            raise ValidationError("column index out of range")
        # within each row, columns strictly increase
        same_row = np.repeat(np.arange(self.n), np.diff(ro))
        step = np.diff(ci)[np.diff(same_row) == 0] if len(ci) > 1 else ci[:0]
        if np.any(step <= 0):
            raise ValidationError("column indices must be sorted and unique within each row")
        for arr in (ro, ci, va):
            arr.setflags(write=False)
        object.__setattr__(self, "row_offsets", ro)
        object.__setattr__(self, "col_indices", ci)
        object.__setattr__(self, "values", va)

    @property
    def nnz(self):
        return len(self.values)

    @property
    def shape(self):
        return (self.n, self.n)

    def row_index(self):
        """Row number of every stored entry."""
        return np.repeat(np.arange(self.n), np.diff(self.row_offsets))

    def diagonal(self):
        rows = self.row_index()
        d = np.zeros(self.n)
        on = rows == self.col_indices
        d[rows[on]] = self.values[on]
        return d

    def to_dense(self):
        out = np.zeros((self.n, self.n))
        out[self.row_index(), self.col_indices] = self.values
        return out

    def __matmul__(self, x):
        return spmv(self, x)

    def quad(self, x, y=None):
        """Bilinear form ``x^T A y`` (``y`` defaults to ``x``)."""
        x = np.asarray(x, dtype=np.float64)
        return float(x @ spmv(self, x if y is None else y))


def from_coo(rows, cols, vals, n):
    """Build CSR from triplets; duplicate (row, col) entries are summed."""
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=np.float64).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise DimensionMismatch("triplet arrays differ in length")
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise DimensionMismatch("triplet index out of range")
    keys = rows * n + cols
    uniq, inverse = np.unique(keys, return_inverse=True)
    summed = np.bincount(inverse.ravel(), weights=vals, minlength=len(uniq))
    urows = uniq // n
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(urows, minlength=n), out=offsets[1:])
    return SparseMatrix(n, offsets, uniq % n, summed)


def from_dense(a, drop_zeros=True):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("square matrix required")
    r, c = np.nonzero(a) if drop_zeros else np.indices(a.shape).reshape(2, -1)
    return from_coo(r, c, a[r, c], a.shape[0])


def identity(n):
    idx = np.arange(n)
    return SparseMatrix(n, np.arange(n + 1), idx, np.ones(n))


def check_symmetric(a, rtol=1e-12):
    """True when the pattern and values are symmetric to ``rtol`` relative."""
    dense = a.to_dense()
    scale = max(np.abs(dense).max(), np.finfo(float).tiny)
    return bool(np.abs(dense - dense.T).max() <= rtol * scale)


# --- spmv -------------------------------------------------------------------


@_accel.njit
def spmv_numba(row_offsets, col_indices, values, x):
    n = row_offsets.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(row_offsets[i], row_offsets[i + 1]):
            acc += values[k] * x[col_indices[k]]
        y[i] = acc
    return y


def spmv_numpy(row_offsets, col_indices, values, x):
    n = len(row_offsets) - 1
    rows = np.repeat(np.arange(n), np.diff(row_offsets))
    return np.bincount(rows, weights=values * x[col_indices], minlength=n)


def spmv(a, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise DimensionMismatch(f"vector of length {x.shape} for matrix of size {a.n}")
    if _accel.USE_NUMBA:
        return spmv_numba(a.row_offsets, a.col_indices, a.values, x)
    return spmv_numpy(a.row_offsets, a.col_indices, a.values, x)


def add_scaled(a, alpha, b, beta):
    """``alpha*A + beta*B`` on the union sparsity pattern."""
    if a.n != b.n:
        raise DimensionMismatch(f"sizes {a.n} and {b.n} differ")
    if np.array_equal(a.row_offsets, b.row_offsets) and np.array_equal(
        a.col_indices, b.col_indices
    ):
        return SparseMatrix(
            a.n, a.row_offsets, a.col_indices, alpha * a.values + beta * b.values
        )
    rows = np.concatenate([a.row_index(), b.row_index()])
    cols = np.concatenate([a.col_indices, b.col_indices])
    vals = np.concatenate([alpha * a.values, beta * b.values])
    return from_coo(rows, cols, vals, a.n)


# --- conjugate gradients ----------------------------------------------------


@dataclass(frozen=True)
class CgReport:
    iterations: int
    residual: float  # ||b - Ax|| / ||b||
    converged: bool


@_accel.njit
def cg_numba(row_offsets, col_indices, values, b, x, inv_diag, tol, max_iter):
    n = b.shape[0]
    r = b - spmv_numba(row_offsets, col_indices, values, x)
    bnorm = np.sqrt(np.dot(b, b))
    res = np.sqrt(np.dot(r, r)) / bnorm
    if res <= tol:
        return x, 0, res, 0
    z = inv_diag * r
    p = z.copy()
    rz = np.dot(r, z)
    q = np.zeros(n)
    for it in range(1, max_iter + 1):
        for i in range(n):
            acc = 0.0
            for k in range(row_offsets[i], row_offsets[i + 1]):
                acc += values[k] * p[col_indices[k]]
            q[i] = acc
        pq = np.dot(p, q)
        if pq <= 0.0:
            return x, it, res, 2
        step = rz / pq
        rr = 0.0
        for i in range(n):
            x[i] += step * p[i]
            r[i] -= step * q[i]
            rr += r[i] * r[i]
        res = np.sqrt(rr) / bnorm
        if res <= tol:
            return x, it, res, 0
        rz_new = 0.0
        for i in range(n):
            z[i] = inv_diag[i] * r[i]
            rz_new += r[i] * z[i]
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    return x, max_iter, res, 1


def cg_numpy(row_offsets, col_indices, values, b, x, inv_diag, tol, max_iter):
    n = len(b)
    rows = np.repeat(np.arange(n), np.diff(row_offsets))

    def matvec(v):
        return np.bincount(rows, weights=values * v[col_indices], minlength=n)

    r = b - matvec(x)
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return x, 0, res, _OK
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        q = matvec(p)
        pq = p @ q
        if pq <= 0.0:
            return x, it, res, _BREAKDOWN
        step = rz / pq
        x += step * p
        r -= step * q
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, it, res, _OK
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, res, _MAXITER


def cg_solve(a, b, tol=DEFAULT_TOL, max_iter=None, x0=None, precondition=True):
    """Solve ``A x = b`` for SPD ``A`` by (Jacobi-preconditioned) CG.

    Returns ``(x, CgReport)``. Stops when ``||b - A x|| / ||b|| <= tol``.
    Raises ``NotConverged`` (carrying the report and last iterate) when the
    budget ``max_iter`` (default ``10 n``) runs out, and ``BreakdownError``
    when a search direction has ``p^T A p <= 0``.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (a.n,):
        raise DimensionMismatch(f"rhs of length {b.shape} for matrix of size {a.n}")
    if not 0.0 < tol < 1.0:
        raise ValidationError("tol must lie in (0, 1)")
    if max_iter is None:
        max_iter = 10 * a.n
    if not np.any(b):
        return np.zeros(a.n), CgReport(0, 0.0, True)
    x = np.zeros(a.n) if x0 is None else np.array(x0, dtype=np.float64)
    if precondition:
        d = a.diagonal()
        if np.any(d <= 0.0):
            raise BreakdownError("non-positive diagonal entry; matrix is not SPD")
        inv_diag = 1.0 / d
    else:
        inv_diag = np.ones(a.n)

    kernel = cg_numba if _accel.USE_NUMBA else cg_numpy
    x, iters, res, status = kernel(
        a.row_offsets, a.col_indices, a.values, b, x, inv_diag, float(tol), int(max_iter)
    )
    report = CgReport(int(iters), float(res), status == _OK)
    if status == _BREAKDOWN:
        raise BreakdownError(f"p^T A p <= 0 at iteration {iters}; matrix is not SPD")
    if status == _MAXITER:
        raise NotConverged(
            f"CG stopped after {iters} iterations at relative residual {res:.3e}",
            report=report,
            x=x,
        )
    return x, report


def dump_matrix(a, path):
    """Debug dump in a MatrixMarket-like coordinate format (1 entry per line)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"%%MatrixMarket-like symmetric {a.n} {a.n} {a.nnz}\n")
        for i, j, v in zip(a.row_index().tolist(), a.col_indices.tolist(), a.values.tolist()):
            fh.write(f"{i} {j} {v:.17g}\n")

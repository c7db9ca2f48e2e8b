"""Dense spectral reference for ``A_h^{-alpha} f``.

The pencil ``(K, M)`` is reduced with ``M = L L^T`` to the symmetric matrix
``C = L^{-1} K L^{-T}``, which is diagonalized by cyclic Jacobi rotations.
``Phi = L^{-T} Q`` then has M-orthonormal columns and the discrete fractional
power is a diagonal scaling in that basis. O(n^3); meant for checking the
time stepper on small meshes, not for production solves.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import _accel
from .errors import CholeskyFailure, DimensionMismatch, JacobiNotConverged, ValidationError

MAX_DIM = 4000
MAX_SWEEPS = 50
OFF_RTOL = 1e-14


@dataclass(frozen=True)
class SpectralDecomposition:
    lambdas: np.ndarray  # ascending
    modes: np.ndarray  # columns, Phi^T M Phi = I
    sweeps: int = 0


# --- Jacobi kernels ---------------------------------------------------------


@_accel.njit
def jacobi_numba(a, tol, max_sweeps):
    """Row-cyclic Jacobi on a symmetric matrix (overwritten)."""
    n = a.shape[0]
    v = np.eye(n)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i, j] * a[i, j]
    thresh = tol * np.sqrt(total)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        off = np.sqrt(2.0 * off)
        if off <= thresh:
            return a, v, sweep, off
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sgn = 1.0 if theta >= 0.0 else -1.0
                t = sgn / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return a, v, max_sweeps, off


def _round_robin(m):
    """Pairings for ``m - 1`` rounds in which every pair meets once (m even)."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        half = m // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_numpy(a, tol, max_sweeps):
    """Jacobi with round-robin ordering; each round applies n/2 disjoint rotations at once."""
    n = a.shape[0]
    m = n + (n % 2)
    if m != n:  # pad with a decoupled dummy row/column
        padded = np.zeros((m, m))
        padded[:n, :n] = a
        a = padded
    v = np.eye(m)
    rounds = _round_robin(m)
    thresh = tol * np.linalg.norm(a)
    off = np.inf
    for sweep in range(max_sweeps + 1):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= thresh:
            break
        if sweep == max_sweeps:
            break
        for p, q in rounds:
            apq = a[p, q]
            nz = apq != 0.0
            with np.errstate(over="ignore"):
                theta = np.where(nz, (a[q, q] - a[p, p]) / (2.0 * np.where(nz, apq, 1.0)), 0.0)
            sgn = np.where(theta >= 0.0, 1.0, -1.0)
            t = np.where(nz, sgn / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ap, aq = a[:, p].copy(), a[:, q]
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :].copy(), a[q, :]
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            vp, vq = v[:, p].copy(), v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    return a[:n, :n], v[:n, :n], sweep, off


def jacobi_eigh(a, tol=OFF_RTOL, max_sweeps=MAX_SWEEPS):
    """Eigenvalues (ascending, stable tie-break) and orthonormal eigenvectors."""
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("square matrix required")
    a = 0.5 * (a + a.T)
    kernel = jacobi_numba if _accel.USE_NUMBA else jacobi_numpy
    d, v, sweeps, off = kernel(a, tol, max_sweeps)
    if off > tol * np.linalg.norm(a):
        raise JacobiNotConverged(
            f"Jacobi left off-diagonal norm {off:.3e} after {sweeps} sweeps"
        )
    lam = np.diag(d).copy()
    order = np.argsort(lam, kind="stable")
    return lam[order], v[:, order], sweeps


# --- public API -------------------------------------------------------------


def dense_generalized_eig(K, M):
    """Full M-orthonormal eigenbasis of ``K phi = lambda M phi``."""
    if K.n != M.n:
        raise DimensionMismatch(f"K is {K.n}x{K.n}, M is {M.n}x{M.n}")
    if K.n > MAX_DIM:
        raise ValidationError(f"oracle is limited to {MAX_DIM} unknowns, got {K.n}")
    try:
        L = np.linalg.cholesky(M.to_dense())
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(f"mass matrix is not SPD: {exc}") from None
    Kd = K.to_dense()
    X = solve_triangular(L, Kd, lower=True)
    C = solve_triangular(L, X.T, lower=True)  # L^{-1} K L^{-T}
    lam, Q, sweeps = jacobi_eigh(C)
    modes = solve_triangular(L.T, Q, lower=False)
    return SpectralDecomposition(lam, modes, sweeps)


def fractional_apply(dec, M, f, alpha, sign=-1):
    """``sum_i lambda_i^(sign alpha) (phi_i^T M f) phi_i``."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (M.n,) or dec.modes.shape[0] != M.n:
        raise DimensionMismatch("f, M and the decomposition must share a dimension")
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    coeff = dec.modes.T @ (M @ f)
    return dec.modes @ (dec.lambdas ** (sign * alpha) * coeff)


@dataclass(frozen=True)
class ErrorRecord:
    m_norm: float
    relative: float
    max_abs: float


def compare(u, u_ref, M):
    u = np.asarray(u, dtype=np.float64)
    u_ref = np.asarray(u_ref, dtype=np.float64)
    if u.shape != u_ref.shape or u.shape != (M.n,):
        raise DimensionMismatch(f"shapes {u.shape}, {u_ref.shape} vs size {M.n}")
    diff = u - u_ref
    err = float(np.sqrt(max(M.quad(diff), 0.0)))
    ref = float(np.sqrt(M.quad(u_ref)))
    return ErrorRecord(err, err / ref if ref > 0 else np.inf, float(np.abs(diff).max()))

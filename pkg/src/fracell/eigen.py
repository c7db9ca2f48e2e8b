"""Smallest generalized eigenpair of ``K v = lambda M v`` and the delta policy."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DeltaTooLarge, DimensionMismatch, NotConverged, ValidationError
from .sparse import cg_solve


@dataclass(frozen=True)
class EigenResult:
    lambda_min: float
    eigenvector: np.ndarray  # M-normalized, positive mean
    iterations: int
    residual: float  # ||K v - lambda M v|| / ||K v||


def min_eigen(K, M, tol=1e-10, max_iter=1000, inner_tol=1e-12):
    """Inverse power iteration on the pencil ``(K, M)`` from the all-ones vector.

    Each sweep solves ``K y = M v`` by CG, M-normalizes ``y`` and takes the
    Rayleigh quotient; it stops once the eigen-residual drops below ``tol``.
    """
    if K.n != M.n:
        raise DimensionMismatch(f"K is {K.n}x{K.n}, M is {M.n}x{M.n}")
    v = np.ones(K.n)
    v /= np.sqrt(M.quad(v))
    y = None
    res = np.inf
    lam = np.nan
    for it in range(max_iter + 1):
        Kv = K @ v
        Mv = M @ v
        lam = float(v @ Kv)
        res = float(np.linalg.norm(Kv - lam * Mv) / np.linalg.norm(Kv))
        if res <= tol:
            break
        if it == max_iter:
            raise NotConverged(
                f"inverse iteration stopped at residual {res:.3e} after {it} steps",
                report=EigenResult(lam, v, it, res),
                x=v,
            )
        x0 = None if y is None else v / lam
        y, _ = cg_solve(K, Mv, tol=inner_tol, x0=x0)
        v = y / np.sqrt(M.quad(y))
    if v.sum() < 0:
        v = -v
    return EigenResult(lam, v, it, res)


@dataclass(frozen=True)
class DeltaPolicy:
    """How the shift ``delta`` is chosen: ``computed``, ``scaled`` or ``fixed``."""

    mode: str = "computed"
    value: Optional[float] = None  # factor for "scaled", delta for "fixed"

    def __post_init__(self):
        if self.mode == "computed":
            return
        if self.mode not in ("scaled", "fixed"):
            raise ValidationError(f"unknown delta mode {self.mode!r}")
        if self.value is None or not self.value > 0.0:
            raise ValidationError(f"delta {self.mode} value must be > 0, got {self.value}")

    @classmethod
    def computed(cls):
        return cls("computed")

    @classmethod
    def scaled(cls, factor):
        return cls("scaled", float(factor))

    @classmethod
    def fixed(cls, value):
        return cls("fixed", float(value))

    def describe(self):
        if self.mode == "computed":
            return "computed"
        return f"{self.mode}({self.value:g})"


def resolve_delta(policy, eig=None):
    """Turn a policy into a number, refusing anything above ``lambda_min``."""
    if policy.mode == "fixed":
        delta = policy.value
    else:
        if eig is None:
            raise ValidationError(f"delta policy {policy.mode!r} needs an eigenvalue estimate")
        delta = eig.lambda_min if policy.mode == "computed" else policy.value * eig.lambda_min
    if eig is not None and delta > eig.lambda_min * (1.0 + 1e-8):
        raise DeltaTooLarge(
            f"delta={delta:.6g} exceeds lambda_min={eig.lambda_min:.6g}; K - delta M is indefinite"
        )
    return float(delta)

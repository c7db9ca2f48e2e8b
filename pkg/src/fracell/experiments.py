"""Parameter sweeps and temporal convergence studies against the oracle."""

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .eigen import DeltaPolicy, min_eigen
from .errors import FracellError, ValidationError
from .fem import ProblemSpec, assemble, l2_project
from .oracle import compare, dense_generalized_eig, fractional_apply
from .stepper import SchemeConfig, run

MAX_RUNS = 500


def observed_orders(ns, errors):
    """``log(e_i / e_{i+1}) / log(N_{i+1} / N_i)`` for consecutive entries."""
    out = []
    for (n0, e0), (n1, e1) in zip(zip(ns, errors), zip(ns[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(n1 / n0))
        else:
            out.append(float("nan"))
    return out


@dataclass
class ConvergenceRow:
    steps: int
    m_norm: float
    relative: float
    max_abs: float
    order: Optional[float] = None  # w.r.t. the previous row


@dataclass
class ConvergenceStudy:
    rows: List[ConvergenceRow]
    identity_residual: Optional[float]  # |u*^T K u* - f^T M f| / f^T M f, alpha = 1/2 only
    u_ref: np.ndarray
    bound_ok: bool

    @property
    def final_order(self):
        return self.rows[-1].order


def temporal_convergence(mesh, spec, sigma, steps_list, policy=None):
    """M-norm error of ``w_N`` against the dense spectral solution for each N."""
    system = assemble(mesh, spec)
    eig = min_eigen(system.K, system.M)
    dec = dense_generalized_eig(system.K, system.M)
    p = l2_project(system, spec.f)
    u_ref = fractional_apply(dec, system.M, p, spec.alpha, sign=-1)
    identity = None
    if spec.alpha == 0.5:
        fMf = system.M.quad(p)
        identity = abs(system.K.quad(u_ref) - fMf) / fMf
    rows, bound_ok = [], True
    for n in steps_list:
        res = run(mesh, spec, SchemeConfig(sigma=sigma, steps=n), policy, system=system, eig=eig)
        bound_ok &= res.u_norm <= res.bound() * (1 + 1e-8)
        e = compare(res.u, u_ref, system.M)
        rows.append(ConvergenceRow(n, e.m_norm, e.relative, e.max_abs))
    orders = observed_orders([r.steps for r in rows], [r.m_norm for r in rows])
    for row, order in zip(rows[1:], orders):
        row.order = order
    return ConvergenceStudy(rows, identity, u_ref, bool(bound_ok))


@dataclass(frozen=True)
class SweepPlan:
    steps: List[int]
    alphas: List[float]
    sigmas: List[float]
    mus: List[float]
    mesh: str = "cut:16"
    k: float = 1.0
    c: float = 0.0
    policy: DeltaPolicy = field(default_factory=DeltaPolicy.computed)

    def __post_init__(self):
        for name in ("steps", "alphas", "sigmas", "mus"):
            if not getattr(self, name):
                raise ValidationError(f"sweep list {name!r} is empty")
        if self.size > MAX_RUNS:
            raise ValidationError(f"sweep has {self.size} runs, limit is {MAX_RUNS}")
        for s in self.sigmas:
            SchemeConfig(sigma=s)
        for n in self.steps:
            SchemeConfig(steps=n)
        for a in self.alphas:
            ProblemSpec(alpha=a)
        for m in self.mus:
            ProblemSpec(mu=m)

    @property
    def size(self):
        return len(self.steps) * len(self.alphas) * len(self.sigmas) * len(self.mus)

    def runs(self):
        """(mu, alpha, sigma, N) in a fixed nested order."""
        return itertools.product(self.mus, self.alphas, self.sigmas, sorted(self.steps))


@dataclass
class SweepRow:
    steps: int
    alpha: float
    sigma: float
    mu: float
    delta: Optional[float] = None
    vmax: Optional[float] = None
    err_vs_finest: Optional[float] = None
    status: str = "ok"
    history: list = field(default_factory=list)


def run_sweep(mesh, plan):
    """Run every point of the plan; failures are recorded, not raised."""
    rows = []
    cache = {}
    for mu, alpha, sigma, n in plan.runs():
        row = SweepRow(n, alpha, sigma, mu)
        try:
            if mu not in cache:
                spec0 = ProblemSpec(k=plan.k, c=plan.c, mu=mu)
                system = assemble(mesh, spec0)
                cache[mu] = (system, min_eigen(system.K, system.M))
            system, eig = cache[mu]
            spec = ProblemSpec(k=plan.k, c=plan.c, mu=mu, alpha=alpha)
            res = run(mesh, spec, SchemeConfig(sigma=sigma, steps=n), plan.policy, system, eig)
            row.delta, row.vmax, row.history = res.config.delta, res.vmax, res.history
        except FracellError as exc:
            row.status = f"error: {type(exc).__name__}: {exc}"
        rows.append(row)
    finest = max(plan.steps)
    ref = {
        (r.mu, r.alpha, r.sigma): r.vmax for r in rows if r.steps == finest and r.vmax is not None
    }
    for r in rows:
        key = (r.mu, r.alpha, r.sigma)
        if r.vmax is not None and key in ref:
            r.err_vs_finest = abs(r.vmax - ref[key])
    return rows


def ratio_band(sigma):
    """Expected error reduction per N-doubling: first order, or second at sigma = 1/2."""
    return (3.2, 4.8) if sigma == 0.5 else (1.6, 2.4)


def sweep_checks(plan, rows):
    """Order-ratio and alpha-monotonicity checks on a finished sweep.

    The error of each run is measured against the finest N of its family, so
    pairs whose larger N exceeds a quarter of the finest are skipped (the
    reference error would dominate there).
    """
    finest = max(plan.steps)
    checks = []
    by_family = {}
    for r in rows:
        by_family.setdefault((r.mu, r.alpha, r.sigma), []).append(r)
    for (mu, alpha, sigma), fam in by_family.items():
        fam = [r for r in sorted(fam, key=lambda r: r.steps) if r.err_vs_finest is not None]
        usable = [r for r in fam if r.steps * 4 <= finest]
        lo, hi = ratio_band(sigma)
        for a, b in zip(usable, usable[1:]):
            if a.err_vs_finest <= 0 or b.err_vs_finest <= 0:
                continue
            order = math.log(a.err_vs_finest / b.err_vs_finest) / math.log(b.steps / a.steps)
            ratio = 2.0**order
            checks.append(
                ("order_ratio", f"mu={mu:g} alpha={alpha:g} sigma={sigma:g} N={a.steps}->{b.steps}",
                 ratio, lo <= ratio <= hi)
            )
    groups = {}
    for r in rows:
        if r.vmax is not None:
            groups.setdefault((r.mu, r.sigma, r.steps), []).append((r.alpha, r.vmax))
    for (mu, sigma, n), vals in groups.items():
        if len(vals) < 2:
            continue
        vals.sort()
        ok = all(v0 > v1 for (_, v0), (_, v1) in zip(vals, vals[1:]))
        checks.append(
            ("alpha_monotone", f"mu={mu:g} sigma={sigma:g} N={n}", float(len(vals)), ok)
        )
    for r in rows:
        if r.status != "ok":
            checks.append(("run_status", f"mu={r.mu:g} alpha={r.alpha:g} sigma={r.sigma:g} N={r.steps}", float("nan"), False))
    return checks

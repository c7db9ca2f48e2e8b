"""Two-level weighted time stepping for the pseudo-parabolic problem.

With ``D = K - delta M`` the solution ``u = A^{-alpha} f`` is ``w(1)`` where

    (t D + delta M) w' + alpha D w = 0,    w(0) = delta^{-alpha} f.

One step of the sigma-weighted scheme from ``t_n`` to ``t_{n+1} = t_n + tau``
solves

    [(t_s + alpha sigma tau) D + delta M] w_{n+1}
        = [(t_s - alpha (1 - sigma) tau) D + delta M] w_n,

with ``t_s = sigma t_{n+1} + (1 - sigma) t_n``. For ``sigma >= 1/2`` the left
matrix is SPD and ``||w_n||_M`` cannot grow.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .eigen import DeltaPolicy, min_eigen, resolve_delta
from .errors import StabilityMonitorViolation, ValidationError
from .fem import assemble, l2_project, nodal_values
from .sparse import DEFAULT_TOL, add_scaled, cg_solve

NORM_RTOL = 1e-10
ENERGY_RTOL = 1e-8
BOUND_RTOL = 1e-8


@dataclass(frozen=True)
class SchemeConfig:
    sigma: float = 0.5
    steps: int = 100
    alpha: Optional[float] = None
    delta: Optional[float] = None
    cg_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not 0.5 <= self.sigma <= 1.0:
            raise ValidationError(
                f"sigma must lie in [0.5, 1] for unconditional stability, got {self.sigma}"
            )
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.delta is not None and not self.delta > 0.0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")

    @property
    def tau(self):
        return 1.0 / self.steps


@dataclass(frozen=True)
class StepRecord:
    n: int
    t: float
    norm: float  # ||w_n||_M
    energy: float  # delta ||w_n||_M^2 + 2 alpha t_n w_n^T D w_n
    vmax: float
    cg_iterations: int = 0


@dataclass
class EvolutionState:
    w: np.ndarray
    n: int
    t: float
    history: List[StepRecord] = field(default_factory=list)
    cg_iterations: int = 0


@dataclass(frozen=True)
class SolveResult:
    u: np.ndarray
    history: List[StepRecord]
    cg_total_iterations: int
    config: SchemeConfig
    lambda_min: float
    f_norm: float  # ||f||_M of the projected right-hand side

    @property
    def vmax(self):
        return float(self.u.max())

    @property
    def u_norm(self):
        return self.history[-1].norm

    def bound(self):
        """A priori bound ``delta^{-alpha} ||f||_M`` on ``||u||_M``."""
        return self.config.delta ** (-self.config.alpha) * self.f_norm


def _d_quad(system, w, delta):
    return system.K.quad(w) - delta * system.M.quad(w)


def monitor_energy(state, system, config):
    """``delta ||w||_M^2 + 2 alpha t w^T D w`` at the state's time level."""
    m2 = system.M.quad(state.w)
    if state.t == 0.0:
        return config.delta * m2
    return config.delta * m2 + 2.0 * config.alpha * state.t * _d_quad(system, state.w, config.delta)


def _record(state, system, config, iters=0):
    m2 = system.M.quad(state.w)
    return StepRecord(
        n=state.n,
        t=state.t,
        norm=float(np.sqrt(m2)),
        energy=float(monitor_energy(state, system, config)),
        vmax=float(state.w.max()),
        cg_iterations=iters,
    )


def init_state(system, spec, config):
    """Layer 0: ``w_0 = delta^{-alpha} P f`` with ``P`` the L2 projection."""
    alpha = config.alpha if config.alpha is not None else spec.alpha
    if config.delta is None:
        raise ValidationError("delta must be resolved before initialisation")
    f = spec.f
    if callable(f):
        raise ValidationError("interpolate callable f at the nodes before init_state")
    w0 = config.delta ** (-alpha) * l2_project(system, f)
    state = EvolutionState(w=w0, n=0, t=0.0)
    state.history.append(_record(state, system, replace(config, alpha=alpha)))
    return state


def step_matrices(system, config, n):
    """Left matrix and right-hand matrix of step ``n -> n+1``."""
    tau, sigma, alpha, delta = config.tau, config.sigma, config.alpha, config.delta
    t_s = (n + sigma) * tau
    lhs_d = t_s + alpha * sigma * tau
    rhs_d = t_s - alpha * (1.0 - sigma) * tau
    # c D + delta M = c K + delta (1 - c) M
    lhs = add_scaled(system.K, lhs_d, system.M, delta * (1.0 - lhs_d))
    rhs = add_scaled(system.K, rhs_d, system.M, delta * (1.0 - rhs_d))
    return lhs, rhs


def step(state, system, config, check=True):
    """Advance one layer in place and return the state."""
    if state.n >= config.steps:
        raise ValidationError(f"already at the final layer n={state.n}")
    lhs, rhs = step_matrices(system, config, state.n)
    b = rhs @ state.w
    w_new, report = cg_solve(lhs, b, tol=config.cg_tol, x0=state.w)
    prev = state.history[-1]
    state.w = w_new
    state.n += 1
    state.t = state.n * config.tau
    state.cg_iterations += report.iterations
    rec = _record(state, system, config, report.iterations)
    state.history.append(rec)
    if check and config.sigma >= 0.5 and rec.norm > prev.norm * (1.0 + NORM_RTOL):
        raise StabilityMonitorViolation(
            f"||w||_M grew from {prev.norm:.15g} to {rec.norm:.15g} at step {state.n}"
        )
    return state


def run(mesh, spec, config=None, policy=None, system=None, eig=None, check=True):
    """Assemble, pick delta, and integrate from t=0 to t=1; ``u = w(1)``."""
    config = config or SchemeConfig()
    policy = policy or DeltaPolicy.computed()
    if system is None:
        system = assemble(mesh, spec)
    if eig is None:
        eig = min_eigen(system.K, system.M)
    delta = resolve_delta(policy, eig) if config.delta is None else config.delta
    if delta > eig.lambda_min * (1.0 + 1e-8):
        raise ValidationError(f"delta={delta} exceeds lambda_min={eig.lambda_min}")
    config = replace(config, delta=delta, alpha=spec.alpha if config.alpha is None else config.alpha)

    f = spec.f
    if callable(f) or np.ndim(f) > 0:
        f = nodal_values(mesh, f)
        spec = replace(spec, f=f)

    state = init_state(system, spec, config)
    f_norm = state.history[0].norm * delta**config.alpha
    for _ in range(config.steps):
        step(state, system, config, check=check)

    result = SolveResult(
        u=state.w,
        history=state.history,
        cg_total_iterations=state.cg_iterations,
        config=config,
        lambda_min=eig.lambda_min,
        f_norm=f_norm,
    )
    if check and result.u_norm > result.bound() * (1.0 + BOUND_RTOL):
        raise StabilityMonitorViolation(
            f"||u||_M = {result.u_norm:.12g} exceeds delta^-alpha ||f||_M = {result.bound():.12g}"
        )
    return result


def energy_nonincreasing(history, rtol=ENERGY_RTOL):
    e = np.array([r.energy for r in history])
    return bool(np.all(np.diff(e) <= rtol * e[0]))


def norms_nonincreasing(history, rtol=NORM_RTOL):
    m = np.array([r.norm for r in history])
    return bool(np.all(m[1:] <= m[:-1] * (1.0 + rtol)))

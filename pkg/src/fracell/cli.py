"""Command-line front end.

    fracell solve --mesh cut:16 --mu 10 --alpha 0.5 --sigma 0.5 --steps 100
    fracell eig --mesh cut:32 --mu 1
    fracell sweep --steps 5,10,25,50,100 --sigma 1 --out runs/
    fracell oracle-check --mesh square:8 --sigma 0.5 --steps 8,16,32,64
    fracell mesh-gen --mesh cut:16 --out meshes/

Settings come from defaults, then an optional ``--config`` file of
``key = value`` lines, then flags. Exit codes: 0 ok, 2 usage, 3 validation,
4 numerical failure, 5 I/O.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import _accel
from .eigen import DeltaPolicy, min_eigen
from .errors import FracellError, NumericalError, ParseError, ValidationError
from .experiments import SweepPlan, run_sweep, sweep_checks, temporal_convergence
from .fem import ProblemSpec, assemble
from .io import TRACE_HEADER, trace_rows, write_csv, write_vtk
from .mesh import mesh_from_source, mesh_stats, write_mesh
from .stepper import SchemeConfig, run

log = logging.getLogger("fracell")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4, 5


class UsageError(Exception):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


DEFAULTS = {
    "mesh": "cut:16",
    "mu": "10",
    "k": "1",
    "c": "0",
    "alpha": "0.5",
    "sigma": "0.5",
    "steps": "100",
    "delta_scale": None,
    "delta_fixed": None,
    "out": "out",
    "strict": "false",
    "vtk": "true",
}

SWEEP_DEFAULTS = {"steps": "5,10,25,50,100"}
ORACLE_DEFAULTS = {"mesh": "square:8", "steps": "8,16,32,64"}


@dataclass(frozen=True)
class RunConfig:
    mesh: str
    mu: float
    k: float
    c: float
    alpha: float
    sigma: float
    steps: int
    policy: DeltaPolicy
    out: Path
    strict: bool = False
    vtk: bool = True

    def problem(self, alpha=None, mu=None):
        return ProblemSpec(
            k=self.k,
            c=self.c,
            mu=self.mu if mu is None else mu,
            alpha=self.alpha if alpha is None else alpha,
        )

    def scheme(self):
        return SchemeConfig(sigma=self.sigma, steps=self.steps)


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}", "expected 'key = value'")
        key = key.strip().replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(key, f"unknown config key in {path}:{lineno}")
        values[key] = value.strip()
    return values


def _merge(args, defaults):
    values = dict(DEFAULTS)
    values.update(defaults)
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


def _float(values, key):
    try:
        return float(values[key])
    except (TypeError, ValueError):
        raise UsageError(key, f"expected a number, got {values[key]!r}") from None


def _floats(values, key):
    try:
        return [float(v) for v in str(values[key]).split(",") if v.strip()]
    except ValueError:
        raise UsageError(key, f"expected comma-separated numbers, got {values[key]!r}") from None


def _ints(values, key):
    try:
        return [int(v) for v in str(values[key]).split(",") if v.strip()]
    except ValueError:
        raise UsageError(key, f"expected comma-separated integers, got {values[key]!r}") from None


def _bool(values, key):
    v = values[key]
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(key, f"expected a boolean, got {v!r}")


def _policy(values):
    scale, fixed = values.get("delta_scale"), values.get("delta_fixed")
    if scale is not None and fixed is not None:
        raise UsageError("delta_scale", "cannot be combined with delta_fixed")
    if scale is not None:
        return DeltaPolicy.scaled(_float(values, "delta_scale"))
    if fixed is not None:
        return DeltaPolicy.fixed(_float(values, "delta_fixed"))
    return DeltaPolicy.computed()


def _mesh_source(values):
    src = str(values["mesh"])
    kind, sep, arg = src.partition(":")
    if not sep or kind not in ("square", "cut", "file") or not arg:
        raise UsageError("mesh", f"expected square:n, cut:n or file:path, got {src!r}")
    if kind != "file":
        try:
            int(arg)
        except ValueError:
            raise UsageError("mesh", f"mesh size must be an integer, got {arg!r}") from None
    return src


def parse_config(args, defaults=None):
    """Validated :class:`RunConfig` from parsed flags (and ``--config`` file)."""
    values = _merge(args, defaults or {})
    steps = _ints(values, "steps")
    if len(steps) != 1:
        raise UsageError("steps", "expected a single integer")
    cfg = RunConfig(
        mesh=_mesh_source(values),
        mu=_float(values, "mu"),
        k=_float(values, "k"),
        c=_float(values, "c"),
        alpha=_float(values, "alpha"),
        sigma=_float(values, "sigma"),
        steps=steps[0],
        policy=_policy(values),
        out=Path(values["out"]),
        strict=_bool(values, "strict"),
        vtk=_bool(values, "vtk"),
    )
    cfg.problem()
    cfg.scheme()
    return cfg


def parse_sweep(args):
    values = _merge(args, SWEEP_DEFAULTS)
    plan = SweepPlan(
        steps=_ints(values, "steps"),
        alphas=_floats(values, "alpha"),
        sigmas=_floats(values, "sigma"),
        mus=_floats(values, "mu"),
        mesh=_mesh_source(values),
        k=_float(values, "k"),
        c=_float(values, "c"),
        policy=_policy(values),
    )
    ProblemSpec(k=plan.k, c=plan.c)
    return plan, Path(values["out"]), _bool(values, "strict")


# --- commands ---------------------------------------------------------------

SUMMARY_HEADER = [
    "mesh", "nodes", "k", "c", "mu", "alpha", "sigma", "steps", "delta_policy",
    "lambda_min", "delta", "v_max", "u_norm_M", "bound", "cg_total_iterations",
]


def cmd_solve(cfg):
    mesh = mesh_from_source(cfg.mesh)
    res = run(mesh, cfg.problem(), cfg.scheme(), cfg.policy)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.out / "trace.csv", TRACE_HEADER, trace_rows(res.history))
    write_csv(
        cfg.out / "summary.csv",
        SUMMARY_HEADER,
        [[
            cfg.mesh, mesh.n_nodes, cfg.k, cfg.c, cfg.mu, cfg.alpha, cfg.sigma, cfg.steps,
            cfg.policy.describe(), res.lambda_min, res.config.delta, res.vmax, res.u_norm,
            res.bound(), res.cg_total_iterations,
        ]],
    )
    if cfg.vtk:
        write_vtk(mesh, res.u, cfg.out / "solution.vtk")
    print(f"v_max = {res.vmax:.6g}")
    return EXIT_OK


def cmd_eig(cfg):
    mesh = mesh_from_source(cfg.mesh)
    system = assemble(mesh, cfg.problem())
    eig = min_eigen(system.K, system.M)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(
        cfg.out / "eig.csv",
        ["mesh", "nodes", "k", "c", "mu", "lambda_min", "iterations", "residual"],
        [[cfg.mesh, mesh.n_nodes, cfg.k, cfg.c, cfg.mu, eig.lambda_min, eig.iterations, eig.residual]],
    )
    print(f"{eig.lambda_min:.12g}")
    return EXIT_OK


def cmd_sweep(plan, out, strict):
    mesh = mesh_from_source(plan.mesh)
    rows = run_sweep(mesh, plan)
    out.mkdir(parents=True, exist_ok=True)
    for i, r in enumerate(rows):
        if r.history:
            d = out / f"run_{i:03d}"
            d.mkdir(exist_ok=True)
            write_csv(d / "trace.csv", TRACE_HEADER, trace_rows(r.history))
    write_csv(
        out / "sweep_summary.csv",
        ["run", "N", "alpha", "sigma", "mu", "delta", "v_max", "err_vs_finest_N", "status"],
        [[f"run_{i:03d}", r.steps, r.alpha, r.sigma, r.mu, r.delta, r.vmax, r.err_vs_finest, r.status]
         for i, r in enumerate(rows)],
    )
    checks = sweep_checks(plan, rows)
    write_csv(out / "sweep_checks.csv", ["check", "case", "value", "passed"],
              [[name, case, value, str(ok).lower()] for name, case, value, ok in checks])
    failed = [c for c in checks if not c[3]]
    for name, case, value, _ in failed:
        log.warning("check %s failed for %s (value %.4g)", name, case, value)
    print(f"{len(rows)} runs, {len(checks) - len(failed)}/{len(checks)} checks passed")
    if strict and failed:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_oracle_check(cfg, steps_list, strict):
    mesh = mesh_from_source(cfg.mesh)
    study = temporal_convergence(mesh, cfg.problem(), cfg.sigma, steps_list, cfg.policy)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(
        cfg.out / "convergence.csv",
        ["N", "error_M", "relative_error_M", "max_error", "observed_order"],
        [[r.steps, r.m_norm, r.relative, r.max_abs, r.order] for r in study.rows],
    )
    write_csv(
        cfg.out / "oracle_summary.csv",
        ["mesh", "nodes", "mu", "alpha", "sigma", "final_order", "identity_residual"],
        [[cfg.mesh, mesh.n_nodes, cfg.mu, cfg.alpha, cfg.sigma, study.final_order,
          study.identity_residual]],
    )
    for r in study.rows:
        order = "" if r.order is None else f"{r.order:.4f}"
        print(f"N={r.steps:5d}  rel_err={r.relative:.6e}  order={order}")
    if study.identity_residual is not None:
        print(f"identity residual = {study.identity_residual:.3e}")
    ok = study.bound_ok
    if study.final_order is not None:
        if cfg.sigma == 0.5:
            ok &= study.final_order >= 1.8
        elif cfg.sigma == 1.0:
            ok &= 0.9 <= study.final_order <= 1.1
    if study.identity_residual is not None:
        ok &= study.identity_residual <= 1e-8
    if strict and not ok:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_mesh_gen(cfg):
    mesh = mesh_from_source(cfg.mesh)
    cfg.out.mkdir(parents=True, exist_ok=True)
    name = cfg.mesh.replace(":", "_").replace("/", "_")
    write_mesh(mesh, cfg.out / f"{name}.mesh")
    if cfg.vtk:
        write_vtk(mesh, mesh.nodes[:, 0] * 0.0, cfg.out / f"{name}.vtk", name="zero")
    s = mesh_stats(mesh)
    print(
        f"{s.node_count} nodes, {s.triangle_count} triangles, {s.boundary_edge_count} boundary edges, "
        f"min angle {s.min_angle:.2f} deg, h_max {s.h_max:.4g}"
    )
    return EXIT_OK


# --- argument parsing -------------------------------------------------------


def _add_common(p, lists=False):
    kind = "comma-separated list" if lists else "value"
    p.add_argument("--mesh", help="square:n, cut:n or file:path")
    p.add_argument("--mu", help=f"Robin coefficient ({kind})")
    p.add_argument("--k", help="diffusion coefficient")
    p.add_argument("--c", help="reaction coefficient")
    p.add_argument("--alpha", help=f"fractional exponent in (0, 1) ({kind})")
    p.add_argument("--sigma", help=f"scheme weight in [0.5, 1] ({kind})")
    p.add_argument("--steps", help=f"number of time steps N ({kind})")
    p.add_argument("--delta-scale", dest="delta_scale", help="delta = factor * lambda_min")
    p.add_argument("--delta-fixed", dest="delta_fixed", help="delta = value (must be <= lambda_min)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--strict", action="store_const", const="true", help="enforce checks via exit code")
    p.add_argument("--vtk", dest="vtk", action="store_const", const="true")
    p.add_argument("--no-vtk", dest="vtk", action="store_const", const="false")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracell", description="Fractional powers of elliptic operators by pseudo-time stepping"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("solve", help="integrate to t=1 and write solution/trace/summary"))
    _add_common(sub.add_parser("eig", help="smallest generalized eigenvalue (delta)"))
    _add_common(sub.add_parser("sweep", help="Cartesian parameter sweep"), lists=True)
    _add_common(sub.add_parser("oracle-check", help="temporal convergence vs dense oracle"), lists=True)
    _add_common(sub.add_parser("mesh-gen", help="write a generated mesh"))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    log.info("kernel backend: %s", _accel.backend())
    try:
        if args.command == "sweep":
            plan, out, strict = parse_sweep(args)
            return cmd_sweep(plan, out, strict)
        if args.command == "oracle-check":
            values = _merge(args, ORACLE_DEFAULTS)
            steps_list = _ints(values, "steps")
            if len(steps_list) < 2:
                raise UsageError("steps", "oracle-check needs at least two step counts")
            args.steps = str(steps_list[0])
            cfg = parse_config(args, ORACLE_DEFAULTS)
            for n in steps_list:
                SchemeConfig(steps=n)
            return cmd_oracle_check(cfg, steps_list, cfg.strict)
        cfg = parse_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "eig":
            return cmd_eig(cfg)
        return cmd_mesh_gen(cfg)
    except UsageError as exc:
        print(f"fracell: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"fracell: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"fracell: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ParseError) as exc:
        print(f"fracell: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, FracellError) as exc:
        print(f"fracell: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

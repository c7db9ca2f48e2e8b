"""Compare the numba and numpy kernel paths.

    python benchmarks/bench_kernels.py [--mesh cut:32] [--repeat 5]

Times sparse mat-vec, one CG solve, the dense Jacobi eigensolver and a full
baseline solve under each backend, after a warm-up call so that numba
compilation is excluded. Also reports the largest difference between the
two backends' results.
"""

import argparse
import time

import numpy as np

from fracell import _accel
from fracell.fem import ProblemSpec, assemble
from fracell.mesh import mesh_from_source
from fracell.oracle import jacobi_eigh
from fracell.sparse import cg_solve, spmv
from fracell.stepper import SchemeConfig, run


def best_of(fn, repeat):
    fn()  # warm-up (JIT compile / cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mesh", default="cut:32")
    parser.add_argument("--oracle-mesh", default="cut:16")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    mesh = mesh_from_source(args.mesh)
    spec = ProblemSpec(mu=10.0)
    system = assemble(mesh, spec)
    x = np.linspace(0.0, 1.0, system.n)
    small = assemble(mesh_from_source(args.oracle_mesh), spec).K.to_dense()

    cases = {
        f"spmv ({system.n} rows)": lambda: spmv(system.K, x),
        "cg_solve K x = M 1": lambda: cg_solve(system.K, system.M @ np.ones(system.n))[0],
        f"jacobi_eigh ({len(small)}x{len(small)})": lambda: jacobi_eigh(small)[0],
        "solve N=100 sigma=0.5": lambda: run(mesh, spec, SchemeConfig(sigma=0.5, steps=100)).u,
    }
    if not _accel.HAVE_NUMBA:
        print("numba not installed; only the numpy path is available")
    print(f"{'kernel':34s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases.items():
        results = {}
        for be in ("numba", "numpy"):
            if be == "numba" and not _accel.HAVE_NUMBA:
                continue
            _accel.set_backend(be)
            results[be] = best_of(fn, args.repeat)
        t_np, out_np = results["numpy"]
        if "numba" in results:
            t_nb, out_nb = results["numba"]
            diff = float(np.max(np.abs(out_nb - out_np)))
            print(f"{name:34s} {t_nb:11.5f} {t_np:11.5f} {t_np / t_nb:8.1f} {diff:11.2e}")
        else:
            print(f"{name:34s} {'-':>11s} {t_np:11.5f}")


if __name__ == "__main__":
    main()

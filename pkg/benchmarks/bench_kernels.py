"""Compiled vs pure-Python radial sweeps, raw and inside green_apply.

Run:  python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from gcinverse import kernels
from gcinverse.bukhgeim import SpectralParam, green_apply, resolved_disc
from gcinverse.fields import MatrixField


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t)
    return min(ts)


def raw_sweeps(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for S, K, B in [(64, 128, 1), (256, 512, 1), (256, 512, 4)]:
        ratio = rng.uniform(0.5, 1.0, (S, K))
        local = rng.standard_normal((S, K, B)) + 1j * rng.standard_normal((S, K, B))
        ref = kernels.sweep_inner(ratio, local, backend="python")
        out = {}
        for be in ("python", "cython"):
            out[be] = best_of(lambda: (kernels.sweep_inner(ratio, local, backend=be),
                                       kernels.sweep_outer(ratio, local, backend=be)), repeat)
        err = float(np.abs(kernels.sweep_inner(ratio, local, backend="cython") - ref).max())
        rows.append((f"sweeps S={S} K={K} B={B}", out["python"], out["cython"], err))
    return rows


def green(repeat):
    rows = []
    for lam in (25.0, 100.0):
        g = resolved_disc(1.0, lam, 0.1, breaks=(0.0, 0.5, 1.0))
        u = MatrixField(g, (1.0 + 0.5 * g.interior_nodes)[:, None, None])
        p = SpectralParam(0.1, lam)
        saved = kernels.BACKEND
        out, vals = {}, {}
        try:
            for be in ("python", "cython"):
                kernels.BACKEND = be
                out[be] = best_of(lambda: green_apply(u, p), repeat)
                vals[be] = green_apply(u, p).values
        finally:
            kernels.BACKEND = saved
        err = float(np.abs(vals["python"] - vals["cython"]).max())
        rows.append((f"green_apply |lam|={lam:g} N={g.N}", out["python"], out["cython"], err))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels._ext is None:
        print("compiled extension not available; only the Python backend can run")
        return
    print(f"{'case':36s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, tp, tc, err in raw_sweeps(args.repeat) + green(args.repeat):
        print(f"{name:36s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {err:10.1e}")


if __name__ == "__main__":
    main()

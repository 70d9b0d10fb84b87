"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--h 1/64 1/128 1/256] [--repeat 5]

Prints one row per (kernel, grid) with the best-of-N time for each backend,
the speed-up, and the max difference between the two outputs.
"""

import argparse
import timeit
from fractions import Fraction

import numpy as np

from heispmc import kernels
from heispmc.grid import GridDomain


def _setup(h):
    d = GridDomain.build("disk:1", h)
    rng = np.random.default_rng(0)
    u = np.ascontiguousarray(np.sin(3 * d.X) * d.Y + 0.01 * rng.normal(size=d.X.shape))
    return d, u


def _pd_args(d):
    vm = d.vertex_mask()
    xv, yv = d.vertex_coords()
    shape_v = vm.shape
    u8 = lambda m: np.ascontiguousarray(m, dtype=np.uint8)  # noqa: E731
    state = [np.zeros((d.nx, d.ny)), np.zeros((d.nx, d.ny)), np.zeros(shape_v), np.zeros(shape_v), np.zeros(shape_v)]
    fixed = [u8(d.inside), u8(vm), u8(d.boundary_cells),
             np.ascontiguousarray(np.where(vm, -yv, 0.0)), np.ascontiguousarray(np.where(vm, xv, 0.0)),
             np.where(d.inside, 0.3, 0.0), np.where(d.inside, 0.1 * d.X, 0.0),
             np.where(d.boundary_cells, 0.01, 0.0)]
    return state, fixed


def bench(h, repeat, pd_steps):
    d, u = _setup(h)
    mods = {"python": kernels.get_backend("python")}
    try:
        mods["cython"] = kernels.get_backend("cython")
    except ImportError:
        pass
    rows = []

    def timed(fn):
        return min(timeit.repeat(fn, number=1, repeat=repeat))

    out, t = {}, {}
    for name, m in mods.items():
        t[name] = timed(lambda: m.face_fluxes(u, 0.5, 1.0, d.h, d.x0, d.y0))
        out[name] = np.asarray(m.face_fluxes(u, 0.5, 1.0, d.h, d.x0, d.y0)[0])
    rows.append(("face_fluxes", t, out))

    phix, _, _, phiy, _, _ = mods["python"].face_fluxes(u, 0.5, 1.0, d.h, d.x0, d.y0)
    phix, phiy = np.ascontiguousarray(phix), np.ascontiguousarray(phiy)
    out, t = {}, {}
    for name, m in mods.items():
        t[name] = timed(lambda: m.flux_divergence(phix, phiy, d.h))
        out[name] = np.nan_to_num(np.asarray(m.flux_divergence(phix, phiy, d.h)))
    rows.append(("flux_divergence", t, out))

    out, t = {}, {}
    for name, m in mods.items():
        state, fixed = _pd_args(d)

        def run():
            m.pd_iterate(*state, *fixed, 0.5, 0.2, 0.9, 1.0, d.h, pd_steps)

        t[name] = timed(run) / pd_steps
        state, fixed = _pd_args(d)
        m.pd_iterate(*state, *fixed, 0.5, 0.2, 0.9, 1.0, d.h, pd_steps)
        out[name] = state[0]
    rows.append(("pd_iterate (per step)", t, out))
    return d, rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", nargs="+", default=["1/64", "1/128", "1/256"])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--pd-steps", type=int, default=20)
    args = ap.parse_args(argv)
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'kernel':24s} {'grid':>9s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s} {'max diff':>9s}")
    for hs in args.h:
        d, rows = bench(float(Fraction(hs)), args.repeat, args.pd_steps)
        for name, t, out in rows:
            tp = t["python"] * 1e3
            if "cython" in t:
                tc = t["cython"] * 1e3
                diff = float(np.max(np.abs(out["python"] - out["cython"])))
                print(f"{name:24s} {d.nx:4d}x{d.ny:<4d} {tp:12.3f} {tc:12.3f} {tp / tc:8.1f}x {diff:9.1e}")
            else:
                print(f"{name:24s} {d.nx:4d}x{d.ny:<4d} {tp:12.3f} {'n/a':>12s}")


if __name__ == "__main__":
    main()

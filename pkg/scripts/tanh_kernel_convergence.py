"""Kernel error of the fitted approximation for q = tanh x against the closed form.

Fits K_N for each order, evaluates the per-x L2(-x, x) error and the
entrywise sup error over the triangle against diag(K_cosh, K_sech), fits the
log-log slope of the worst per-x L2 error and writes one CSV row per order.

Usage: python3 scripts/tanh_kernel_convergence.py [--orders 4 6 8 10] [--solver normal] [--out out/tanh_convergence.csv]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from transmute.basis import PotentialSpec
from transmute.fit import fit_kernel, kernel_l2_error, kernel_sup_error
from transmute.grid import Grid
from transmute.oracle import tanh_kernel_matrix


class CachedReference:
    """Memoise the (slow, quadrature based) closed-form kernel on repeated point sets."""

    def __init__(self, fn):
        self.fn = fn
        self.cache = {}

    def __call__(self, x, t):
        key = (x.shape, x.tobytes(), t.tobytes())
        if key not in self.cache:
            self.cache[key] = self.fn(x, t)
        return self.cache[key]


def tanh_potential(b: float = 1.0) -> PotentialSpec:
    return PotentialSpec(lambda x: 0.0, np.tanh, b, label="q=tanh(x)")


def convergence_table(orders, b=1.0, M=2000, solver="normal", xs=None, nodes=24, nt=21):
    pot = tanh_potential(b)
    grid = Grid(b, M)
    xs = np.linspace(b / 12, b, 12) if xs is None else xs
    ref = CachedReference(tanh_kernel_matrix)
    rows = []
    for N in orders:
        ka = fit_kernel(pot, N, grid, solver=solver)
        l2 = kernel_l2_error(ka, ref, xs, nodes=nodes)
        sup = kernel_sup_error(ka, ref, xs, nt=nt)
        rows.append((N, ka.residual, ka.ridge, float(np.max(l2)), sup))
    n = np.log([r[0] for r in rows])
    e = np.log([r[3] for r in rows])
    slope = float(np.polyfit(n, e, 1)[0]) if len(rows) > 1 else float("nan")
    return rows, slope


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--orders", type=int, nargs="+", default=[4, 6, 8, 10])
    ap.add_argument("--solver", choices=("normal", "qr"), default="normal")
    ap.add_argument("--grid", type=int, default=2000)
    ap.add_argument("--out", default="out/tanh_convergence.csv")
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    rows, slope = convergence_table(args.orders, M=args.grid, solver=args.solver)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        fh.write("order,residual,ridge,max_l2_error,sup_error\n")
        for r in rows:
            fh.write(f"{r[0]},{r[1]:.17g},{r[2]:.17g},{r[3]:.17g},{r[4]:.17g}\n")
    for N, res, ridge, l2, sup in rows:
        print(f"N={N:2d}  residual={res:.3e}  ridge={ridge:g}  max L2 error={l2:.3e}  sup error={sup:.3e}")
    print(f"log-log slope of max L2 error: {slope:.2f}  ({time.perf_counter() - t0:.1f} s) -> {args.out}")


if __name__ == "__main__":
    main()

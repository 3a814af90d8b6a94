"""Generate the shooting-oracle eigenvalue table for the rotated benchmark.

The rotated system on [0, 1] with the left condition y1(0) = 0 and the right
condition cos(1/4) y1(1) + sin(1/4) y2(1) = 0 is integrated with DOP853 and its
eigenvalues are refined by false position. A handful of eigenvalues is then
re-checked against the unrotated system B Z' + diag(-x, 1) Z = lambda Z with
u(0) = u(1) = 0, which must share the spectrum.

Usage: python3 scripts/rotated_eigen_reference.py [--out tests/data/rotated_reference.csv]
"""

from __future__ import annotations

import argparse
import time

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from transmute.basis import PotentialSpec
from transmute.oracle import shooting_eigenvalues
from transmute.solve import index_roots

LAM_RANGE = (-320.0, 320.0)


def rotated_potential() -> PotentialSpec:
    phi = lambda x: x * (x - 2) / 4  # noqa: E731
    return PotentialSpec(
        lambda x: -(x + 1) / 2 * np.cos(2 * phi(x)),
        lambda x: (x + 1) / 2 * np.sin(2 * phi(x)),
        1.0,
        label="rotated",
    )


def unrotated_u1(lam: float) -> float:
    """u(1) for B Z' + diag(-x, 1) Z = lam Z with Z(0) = (0, 1)."""

    # Z' = B (Q - lam) Z with B = [[0, 1], [-1, 0]]:  u' = (1 - lam) v,  v' = (x + lam) u
    def rhs(x, z):
        return [(1.0 - lam) * z[1], (x + lam) * z[0]]

    sol = solve_ivp(rhs, (0.0, 1.0), [0.0, 1.0], method="DOP853", rtol=1e-13, atol=1e-16)
    return sol.y[0, -1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="tests/data/rotated_reference.csv")
    ap.add_argument("--step", type=float, default=np.pi / 4)
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    lam = shooting_eigenvalues(rotated_potential(), (0.0, 1.0), (np.cos(0.25), np.sin(0.25)), *LAM_RANGE, args.step)
    elapsed = time.perf_counter() - t0
    idx = index_roots(lam)

    worst = 0.0
    for k in np.nonzero(np.abs(idx) <= 5)[0]:
        h = 0.05
        root = brentq(unrotated_u1, lam[k] - h, lam[k] + h, xtol=1e-14, rtol=1e-15)
        worst = max(worst, abs(root - lam[k]))

    with open(args.out, "w", newline="") as fh:
        fh.write("index,lambda\n")
        for n, v in zip(idx, lam):
            fh.write(f"{int(n)},{v:.17g}\n")
    print(f"{lam.size} eigenvalues in [{LAM_RANGE[0]}, {LAM_RANGE[1]}] in {elapsed:.1f} s -> {args.out}")
    print(f"max deviation from the unrotated system for |n| <= 5: {worst:.3e}")


if __name__ == "__main__":
    main()

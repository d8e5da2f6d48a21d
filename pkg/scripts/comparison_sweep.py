"""Constant boundary shifts against the Lipschitz constant in y.

For X2 = X1 + delta the difference hypothesis holds only when L = 0; the sweep
shows the hypothesis status next to the measured A-order violation.
"""
import argparse

from vrbdsde_lab.analysis import Problem, compare
from vrbdsde_lab.coefficients import affine_diffusion, linear_drift, ramp_boundary
from vrbdsde_lab.scene import TimeGrid, build_lattice


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--horizon", type=float, default=0.25)
    args = p.parse_args()
    m = build_lattice(TimeGrid(args.horizon, args.steps))
    g = affine_diffusion(0.1)
    print(f"{'L':>6} {'delta':>6} {'status':>18} {'A2 - A1 max':>12} {'Y1 - Y2 max':>12}")
    for L in (0.0, 0.05, 0.1, 0.2):
        f = linear_drift(0.0, 1.0, L)
        for delta in (0.05, 0.1, 0.2):
            rep = compare(m, Problem(f, g, ramp_boundary()), Problem(f, g, ramp_boundary().shifted(delta)))
            print(f"{L:6.2f} {delta:6.2f} {rep.status:>18} {rep.a_order_violation:12.3e} {rep.y_order_violation:12.3e}")


if __name__ == "__main__":
    main()

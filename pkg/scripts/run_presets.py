"""Solve every preset scenario and print one summary row each."""
import argparse

from vrbdsde_lab.coefficients import contraction_constant
from vrbdsde_lab.scenarios import PRESET_SCENARIOS
from vrbdsde_lab.vrbdsde import solve


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--steps", type=int, default=None, help="override N for every scenario")
    args = p.parse_args()
    print(f"{'scenario':22} {'N':>3} {'c':>8} {'iters':>5} {'max ratio':>10} {'Y0':>12} {'sup A':>10} {'checks':>6}")
    for name, sc in PRESET_SCENARIOS.items():
        m = sc.model(args.steps)
        sol = solve(m, sc.f, sc.g, sc.X)
        ratio = max(sol.ratios, default=0.0)
        sup_a = max(float(abs(a).max()) for a in sol.A)
        print(
            f"{name:22} {m.steps:3d} {contraction_constant(sc.f, sc.g, sc.horizon):8.4f} {sol.iterations:5d} "
            f"{ratio:10.4f} {float(sol.Y[0].ravel()[0]):12.8f} {sup_a:10.5f} {'ok' if sol.ok else 'FAIL':>6}"
        )


if __name__ == "__main__":
    main()

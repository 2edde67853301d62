"""Observed convergence orders of the radial and 2D Fefferman solvers.

usage: python3 scripts/convergence_study.py
"""

from kahlerspec.fefferman import radial_convergence_order, reinhardt_self_convergence
from kahlerspec.reinhardt import ReinhardtDomain


def main():
    for n in (1, 2, 3):
        out = radial_convergence_order(n, grids=(65, 129, 257, 513))
        errs = " ".join(f"{e:.2e}" for e in out["errors"])
        orders = " ".join(f"{o:.2f}" for o in out["orders"])
        print(f"radial n={n}: errors {errs}; orders {orders}")
    for eps in (0.05, 0.1, 0.2):
        out = reinhardt_self_convergence(ReinhardtDomain.perturbed(eps), sizes=(33, 65, 129))
        diffs = " ".join(f"{d:.2e}" for d in out["differences"])
        orders = " ".join(f"{o:.2f}" for o in out["orders"])
        print(f"2D perturbed {eps}: differences {diffs}; orders {orders}")


if __name__ == "__main__":
    main()

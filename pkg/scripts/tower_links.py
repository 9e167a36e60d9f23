"""Tower height thresholds and link quality.

Part one asks, for several eps, how tall an invariant tower on the bilateral
shift has to be before the construction stops refusing, then builds it at
exactly that height and reports the measured links.  Part two runs the
zero-sum rotation towers on a fixed circle grid and compares the worst link
against the 2*pi/n budget as n grows.
"""

import math

from orbitforge import (
    BilateralShift,
    MultiplicationGrid,
    PreconditionError,
    rokhlin_tower,
    rotation_tower,
)

GRID_NODES = 4096


def minimal_height(op, eps):
    try:
        rokhlin_tower(op, 2, eps)
        return 2
    except PreconditionError as exc:
        return exc.minimal_n


def main():
    s = BilateralShift()
    print("minimal tower heights, bilateral shift")
    print("eps,minimal_n")
    for eps in (1.0, 0.5, 0.25, 0.1, 0.05):
        print(f"{eps},{minimal_height(s, eps)}")

    print()
    print("invariant towers built at minimal height")
    print("eps,n,max_link,gram_defect,mean_defect")
    for eps in (0.5, 0.25):  # eps=0.1 needs ~1e8 stored entries, skip
        n = minimal_height(s, eps)
        tower = rokhlin_tower(s, n, eps)
        print(
            f"{eps},{n},{max(tower.link_residuals):.3e},"
            f"{tower.gram_defect:.3e},{tower.mean_defect:.3e}"
        )

    grid = MultiplicationGrid(GRID_NODES)
    print()
    print(f"rotation towers, grid of {GRID_NODES} nodes")
    print("n,max_link,budget_2pi_over_n,sum_defect")
    for n in (8, 32, 128, 512, 1024):
        tower = rotation_tower(grid, n)
        print(
            f"{n},{max(tower.link_residuals):.6e},"
            f"{2 * math.pi / n:.6e},{tower.sum_defect:.3e}"
        )


if __name__ == "__main__":
    main()

"""Divergence of the discrete projection under grid doubling on the disk and annulus.

Prints, per resolution, sup |div P y| (all nodes and interior nodes) relative to
the surrogate norm of y, and the reduction factor from the previous level.
"""
from ahtlab import calculus as calc
from ahtlab.geometry import Domain, make_grid
from ahtlab.leray import interior_sup, leray_project
from ahtlab.presets import random_smooth


def study(domain, levels, n_theta=None, seed=7):
    prev = None
    for n in levels:
        grid = make_grid(domain, (n, n_theta or 2 * n))
        y = random_smooth(grid, seed, kmax=3)
        u, _ = leray_project(y)
        yn = calc.surrogate_norm(grid, y.values)
        d = calc.div(grid, u.values)
        full = float(abs(d).max()) / yn
        inner = interior_sup(grid, d) / yn
        factor = "" if prev is None else f"{prev / full:6.2f}x"
        print(f"{domain.kind:8s} {grid.resolution!s:12s} {full:10.3e} {inner:10.3e} {factor}")
        prev = full


if __name__ == "__main__":
    print("domain   resolution   div(all)   div(int)   factor")
    study(Domain.disk(), (16, 32, 64, 128))
    study(Domain.annulus(), (16, 32, 64), n_theta=128)

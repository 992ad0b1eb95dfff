"""Convergence of the solver against the series solution of the ball.

Solves the benchmark problem (eps_i = 2.25 dielectric unit sphere, plane
wave along e_z polarized along e_x) at increasing spectral degree and prints
the relative L2 far-field error measured on a quadrature grid of directions.
"""

import time

import numpy as np

from dielshape import Material, PlaneWave, far_field, solve, sphere
from dielshape.grid import ReferenceGrid
from dielshape.oracle import mie_far_field


def main():
    mat = Material(eps_i=2.25)
    wave = PlaneWave()
    g = ReferenceGrid.get(8, 18)
    dirs, w = g.nodes, g.weights
    ref = mie_far_field(mat, 1.0, wave, dirs)
    ref_norm = np.sqrt(np.sum(w[:, None] * np.abs(ref) ** 2))

    print(f"{'L':>3} {'nquad':>5} {'rel L2 error':>14} {'seconds':>8}")
    for L in (4, 6, 8, 10, 12):
        nquad = 2 * L + 2
        t0 = time.perf_counter()
        sol = solve(sphere(1.0, L, nquad), mat, wave)
        F = far_field(sol, dirs)
        dt = time.perf_counter() - t0
        err = np.sqrt(np.sum(w[:, None] * np.abs(F - ref) ** 2)) / ref_norm
        print(f"{L:>3} {nquad:>5} {err:>14.3e} {dt:>8.1f}")


if __name__ == "__main__":
    main()

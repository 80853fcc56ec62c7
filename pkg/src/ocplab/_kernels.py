"""Numba-compiled inner loops for the Metropolis chain.

The chain itself lives in sampler.py; this module only holds the tight loop
over a pre-generated block of random numbers, so the per-step cost is a single
O(N) pass with no Python overhead.
"""

import math

import numba
import numpy as np

HALF_PI = 0.5 * math.pi


@numba.njit(cache=True, nogil=True)
def metropolis_block(pts, radius, beta, scale, idx, normals, unif):
    """Run len(idx) single-particle Metropolis updates in place.

    Proposals are Gaussian displacements of width `scale`; anything landing
    outside the confinement disk of the given radius is rejected outright.
    The point-background delta uses the in-disk potential, which is quadratic
    in |x|, and the pair delta is an O(N) scan.

    Returns (accept_count, accumulated_energy_delta).
    """
    n = pts.shape[0]
    r2max = radius * radius
    acc = 0
    dsum = 0.0
    for s in range(idx.size):
        i = idx[s]
        ox = pts[i, 0]
        oy = pts[i, 1]
        nx = ox + scale * normals[s, 0]
        ny = oy + scale * normals[s, 1]
        if nx * nx + ny * ny > r2max:
            continue
        dpp = 0.0
        hit = False
        for j in range(n):
            if j == i:
                continue
            dxo = ox - pts[j, 0]
            dyo = oy - pts[j, 1]
            dxn = nx - pts[j, 0]
            dyn = ny - pts[j, 1]
            dn2 = dxn * dxn + dyn * dyn
            if dn2 <= 0.0:
                hit = True
                break
            dpp += 0.5 * (math.log(dxo * dxo + dyo * dyo) - math.log(dn2))
        if hit:
            continue
        delta = dpp + HALF_PI * (nx * nx + ny * ny - ox * ox - oy * oy)
        bd = beta * delta
        if bd <= 0.0 or unif[s] < math.exp(-bd):
            pts[i, 0] = nx
            pts[i, 1] = ny
            dsum += delta
            acc += 1
    return acc, dsum


@numba.njit(cache=True, nogil=True)
def field_point_sum(nodes, pts, eta2, out):
    """Accumulate the truncated point-charge fields onto out.

    Returns the number of evaluations that landed exactly on a point whose
    truncation radius is zero (singular; the caller raises).
    """
    singular = 0
    for i in range(nodes.shape[0]):
        ax = 0.0
        ay = 0.0
        for k in range(pts.shape[0]):
            dx = nodes[i, 0] - pts[k, 0]
            dy = nodes[i, 1] - pts[k, 1]
            d2 = dx * dx + dy * dy
            if d2 >= eta2[k]:
                if d2 == 0.0:
                    singular += 1
                else:
                    ax -= dx / d2
                    ay -= dy / d2
        out[i, 0] += ax
        out[i, 1] += ay
    return singular

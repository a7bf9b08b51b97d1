"""Slow, direct reference implementations of the collision sums.

These deliberately share no code with the production kernels: plain loops over
node pairs and sphere nodes, with their own interpolation arithmetic.  They
exist to cross-validate the fast path on tiny grids and are quadratic in the
node count; keep them to n_per_axis <= 8.
"""
from __future__ import annotations

import numpy as np

from .velocity_space import SphereQuadrature, VelocityGrid


def _stencil(grid: VelocityGrid, point: np.ndarray):
    """Trilinear stencil of one point: list of (flat node index or -1, weight)."""
    n = grid.n_per_axis
    rel = point / grid.dv - 0.5 + n / 2.0
    base = np.floor(rel).astype(int)
    frac = rel - base
    entries = []
    for cx in (0, 1):
        wx = frac[0] if cx else 1.0 - frac[0]
        for cy in (0, 1):
            wy = frac[1] if cy else 1.0 - frac[1]
            for cz in (0, 1):
                wz = frac[2] if cz else 1.0 - frac[2]
                ix, iy, iz = base[0] + cx, base[1] + cy, base[2] + cz
                inside = 0 <= ix < n and 0 <= iy < n and 0 <= iz < n
                entries.append(((ix * n + iy) * n + iz if inside else -1, wx * wy * wz))
    return entries


def _interp(grid: VelocityGrid, values: np.ndarray, point: np.ndarray, fill: float) -> float:
    return sum(w * (values[idx] if idx >= 0 else fill) for idx, w in _stencil(grid, point))


def naive_q_bilinear(grid: VelocityGrid, sphere: SphereQuadrature, kernel,
                     G: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Direct evaluation of the gain-minus-loss collision sum."""
    out = np.zeros(grid.size)
    w = grid.maxwellian_weights
    for i in range(grid.size):
        vi = grid.nodes[i]
        for j in range(grid.size):
            vj = grid.nodes[j]
            mid = 0.5 * (vi + vj)
            radius = 0.5 * float(np.linalg.norm(vi - vj))
            acc = 0.0
            for k in range(sphere.size):
                sigma = sphere.nodes[k]
                b = float(kernel.evaluate(vi - vj, sigma))
                gp = _interp(grid, G, mid + radius * sigma, 1.0)
                kq = _interp(grid, K, mid - radius * sigma, 1.0)
                acc += sphere.weights[k] * b * (gp * kq - G[i] * K[j])
            out[i] += acc * w[j]
    return out


def naive_linearized_matrix(grid: VelocityGrid, sphere: SphereQuadrature, kernel) -> np.ndarray:
    """Dense matrix of the symmetric weak-form linearized operator, assembled
    triple by triple from the coefficient vectors of q = g + g* - g' - g'*."""
    N = grid.size
    w = grid.maxwellian_weights
    mat = np.zeros((N, N))
    for i in range(N):
        vi = grid.nodes[i]
        for j in range(N):
            vj = grid.nodes[j]
            mid = 0.5 * (vi + vj)
            radius = 0.5 * float(np.linalg.norm(vi - vj))
            for k in range(sphere.size):
                sigma = sphere.nodes[k]
                mu = 0.25 * float(kernel.evaluate(vi - vj, sigma)) * sphere.weights[k] * w[i] * w[j]
                if mu == 0.0:
                    continue
                coeffs: dict[int, float] = {}
                coeffs[i] = coeffs.get(i, 0.0) + 1.0
                coeffs[j] = coeffs.get(j, 0.0) + 1.0
                for idx, wgt in _stencil(grid, mid + radius * sigma):
                    if idx >= 0:
                        coeffs[idx] = coeffs.get(idx, 0.0) - wgt
                for idx, wgt in _stencil(grid, mid - radius * sigma):
                    if idx >= 0:
                        coeffs[idx] = coeffs.get(idx, 0.0) - wgt
                items = list(coeffs.items())
                for p, cp in items:
                    for q, cq in items:
                        mat[p, q] += mu * cp * cq
    return mat / w[:, None]


def naive_dissipation(grid: VelocityGrid, sphere: SphereQuadrature, kernel,
                      G: np.ndarray) -> float:
    """Direct (1/4) <<(G'G'* - GG*) log(G'G'*/GG*)>>."""
    w = grid.maxwellian_weights
    total = 0.0
    for i in range(grid.size):
        vi = grid.nodes[i]
        for j in range(grid.size):
            vj = grid.nodes[j]
            mid = 0.5 * (vi + vj)
            radius = 0.5 * float(np.linalg.norm(vi - vj))
            for k in range(sphere.size):
                sigma = sphere.nodes[k]
                b = float(kernel.evaluate(vi - vj, sigma))
                gain = (_interp(grid, G, mid + radius * sigma, 1.0)
                        * _interp(grid, G, mid - radius * sigma, 1.0))
                loss = G[i] * G[j]
                if gain > 0.0 and loss > 0.0 and gain != loss:
                    total += 0.25 * b * sphere.weights[k] * w[i] * w[j] * (
                        (gain - loss) * np.log(gain / loss))
    return total


def naive_double_bracket(grid: VelocityGrid, sphere: SphereQuadrature, kernel, phi) -> float:
    """Direct triple sum of phi(v, v*, sigma) against b dsigma M* dv* M dv."""
    w = grid.maxwellian_weights
    total = 0.0
    for i in range(grid.size):
        vi = grid.nodes[i]
        for j in range(grid.size):
            vj = grid.nodes[j]
            for k in range(sphere.size):
                sigma = sphere.nodes[k]
                b = float(kernel.evaluate(vi - vj, sigma))
                val = np.asarray(
                    phi(vi[None, None, :], vj[None, None, :], sigma[None, None, :]))
                total += w[i] * w[j] * sphere.weights[k] * b * float(val.reshape(-1)[0])
    return total

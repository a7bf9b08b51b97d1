"""Truncated velocity lattice, sphere quadrature, and the two weighted averages
over M dv and over b dsigma M* dv* M dv that every other module consumes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

GAUSS_NORM = (2.0 * np.pi) ** (-1.5)


def maxwellian(v: np.ndarray) -> float | np.ndarray:
    """Unit Gaussian equilibrium density (2*pi)^(-3/2) exp(-|v|^2/2).

    Accepts a single 3-vector or an (..., 3) array of velocities.
    """
    v = np.asarray(v, dtype=float)
    sq = np.sum(v * v, axis=-1)
    return GAUSS_NORM * np.exp(-0.5 * sq)


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centered cubic velocity lattice with Gaussian weights.

    Nodes sit at (i + 1/2 - n/2) * dv per axis, so the lattice is symmetric
    under v -> -v and contains no node on the truncation boundary.
    """

    n_per_axis: int
    v_max: float
    nodes: np.ndarray           # (N, 3)
    cell_volume: float
    maxwellian_weights: np.ndarray  # (N,)
    renormalized: bool
    axis_coords: np.ndarray = field(repr=False)  # (n_per_axis,)

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_per_axis

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def shape3(self) -> tuple[int, int, int]:
        n = self.n_per_axis
        return (n, n, n)

    def flat_index(self, ix: int, iy: int, iz: int) -> int:
        n = self.n_per_axis
        return (ix * n + iy) * n + iz

    def invariants(self) -> np.ndarray:
        """Columns 1, v1, v2, v3, |v|^2 tabulated on the lattice, shape (N, 5)."""
        cols = np.empty((self.size, 5))
        cols[:, 0] = 1.0
        cols[:, 1:4] = self.nodes
        cols[:, 4] = np.sum(self.nodes**2, axis=1)
        return cols


@dataclass(frozen=True)
class SphereQuadrature:
    """Unit-sphere quadrature with total weight 1 and antipodally paired nodes.

    Node k + size/2 is exactly -node k; ``antipode`` maps each index to its
    opposite, which downstream code uses to reuse interpolation stencils.
    """

    nodes: np.ndarray    # (K, 3)
    weights: np.ndarray  # (K,)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def antipode(self) -> np.ndarray:
        half = self.size // 2
        return (np.arange(self.size) + half) % self.size


_PHI = (1.0 + np.sqrt(5.0)) / 2.0


def _half_octahedron() -> np.ndarray:
    return np.eye(3)


def _half_icosahedron() -> np.ndarray:
    # Cyclic permutations of (0, +-1, phi); one representative per antipodal pair.
    base = []
    for s in (1.0, -1.0):
        base.append((0.0, s, _PHI))
        base.append((s, _PHI, 0.0))
        base.append((_PHI, 0.0, s))
    return np.array(base) / np.sqrt(1.0 + _PHI**2)


def _half_dodecahedron() -> np.ndarray:
    base = [(1.0, s1, s2) for s1 in (1.0, -1.0) for s2 in (1.0, -1.0)]
    inv = 1.0 / _PHI
    for s in (1.0, -1.0):
        base.append((0.0, s * inv, _PHI))
        base.append((s * inv, _PHI, 0.0))
        base.append((_PHI, 0.0, s * inv))
    return np.array(base) / np.sqrt(3.0)


_SPHERE_FAMILIES: dict[int, Callable[[], np.ndarray]] = {
    6: _half_octahedron,
    12: _half_icosahedron,
    20: _half_dodecahedron,
    32: lambda: np.vstack([_half_icosahedron(), _half_dodecahedron()]),
}


def sphere_quadrature(n_nodes: int = 32) -> SphereQuadrature:
    """Antipodally symmetric polyhedral design with uniform weights 1/n_nodes.

    Supported sizes: 6 (octahedron), 12 (icosahedron), 20 (dodecahedron),
    32 (icosahedron plus dodecahedron; icosahedral symmetry makes the rule
    exact through polynomial degree 5).
    """
    if n_nodes not in _SPHERE_FAMILIES:
        raise ValueError(
            f"unsupported sphere quadrature size {n_nodes}; "
            f"choose one of {sorted(_SPHERE_FAMILIES)}"
        )
    half = _SPHERE_FAMILIES[n_nodes]()
    nodes = np.vstack([half, -half])
    nodes /= np.linalg.norm(nodes, axis=1)[:, None]
    weights = np.full(n_nodes, 1.0 / n_nodes)
    return SphereQuadrature(nodes=nodes, weights=weights)


def build_grid(n_per_axis: int, v_max: float, renormalize: bool = True) -> VelocityGrid:
    """Build the truncated velocity lattice carrying the discrete measure M dv.

    ``n_per_axis`` must be even (odd counts would place a node at v = 0 with
    no -v partner on the cell-centered lattice offsets used here, breaking the
    exact +-v pairing) and at least 4.  With ``renormalize`` the weights are
    scaled so they sum to exactly 1.
    """
    if n_per_axis % 2 != 0 or n_per_axis < 4:
        raise ValueError(f"n_per_axis must be even and >= 4, got {n_per_axis}")
    if v_max <= 0:
        raise ValueError(f"v_max must be positive, got {v_max}")
    n = n_per_axis
    dv = 2.0 * v_max / n
    coords = (np.arange(n) + 0.5 - n / 2) * dv
    gx, gy, gz = np.meshgrid(coords, coords, coords, indexing="ij")
    nodes = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    weights = maxwellian(nodes) * dv**3
    if renormalize:
        weights = weights / weights.sum()
    return VelocityGrid(
        n_per_axis=n,
        v_max=float(v_max),
        nodes=nodes,
        cell_volume=dv**3,
        maxwellian_weights=weights,
        renormalized=renormalize,
        axis_coords=coords,
    )


def bracket(grid: VelocityGrid, xi: Callable[[np.ndarray], np.ndarray] | Sequence[float] | np.ndarray) -> float:
    """Average of xi(v) over the discrete measure M dv: sum_i xi(v_i) w_i."""
    if callable(xi):
        values = np.asarray(xi(grid.nodes), dtype=float)
    else:
        values = np.asarray(xi, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(
            f"integrand tabulation has shape {values.shape}, expected ({grid.size},)"
        )
    return float(values @ grid.maxwellian_weights)


def double_bracket(
    grid: VelocityGrid,
    sphere: SphereQuadrature,
    kernel,
    phi: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
) -> float:
    """Integral of phi(v, v*, sigma) over b dsigma M* dv* M dv.

    ``phi`` must accept broadcast arrays of shape (N, K, 3) for v*, sigma and
    (1, 1, 3) for v and return values of shape (N, K).  It is evaluated at the
    exact pre-collision pairs; no interpolation is involved.
    """
    w = grid.maxwellian_weights
    sw = sphere.weights
    total = 0.0
    vstar = grid.nodes[:, None, :]                       # (N, 1, 3)
    sig = sphere.nodes[None, :, :]                       # (1, K, 3)
    for i in range(grid.size):
        v = grid.nodes[i][None, None, :]
        b = kernel.evaluate(v - vstar, sig)              # (N, K)
        vals = np.asarray(phi(v, vstar, sig), dtype=float)
        total += w[i] * float(np.einsum("jk,jk,j,k->", vals, b, w, sw))
    return total

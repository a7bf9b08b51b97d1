"""Bilinear collision operator, its linearized form, and the precomputed
interpolation table both share.

The table exploits the uniform lattice: the post-collision points for the node
pair (i, j) are v_i + u(d, sigma) with d = j - i, so one trilinear stencil per
(difference, sphere-node) serves every pair with that difference.  Values are
gathered from padded arrays whose halo encodes the equilibrium extension
(relative density 1, fluctuation 0) outside the truncation box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _accel
from .velocity_space import SphereQuadrature, VelocityGrid


# ---------------------------------------------------------------------------
# collision kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollisionKernel:
    """Nonnegative weight b(z, sigma) = b(|z|, zhat.sigma) with a reported
    quadratic-growth bound b <= bound_constant * (1 + |z|^2)."""

    name: str
    sigma_independent: bool
    bound_constant: float

    def evaluate(self, z: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class MaxwellMolecule(CollisionKernel):
    b0: float = 1.0

    def evaluate(self, z, sigma):
        z = np.asarray(z, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        shape = np.broadcast_shapes(z.shape[:-1], sigma.shape[:-1])
        return np.full(shape, self.b0)


@dataclass(frozen=True)
class HardSphere(CollisionKernel):
    c: float = 1.0

    def evaluate(self, z, sigma):
        z = np.asarray(z, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        zn = np.linalg.norm(z, axis=-1)
        out = self.c * zn
        return np.broadcast_to(out, np.broadcast_shapes(z.shape[:-1], sigma.shape[:-1])).copy()


@dataclass(frozen=True)
class TabulatedKernel(CollisionKernel):
    """Bilinear interpolation of b over a rectangular (|z|, cos angle) table."""

    z_grid: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    cos_grid: np.ndarray = field(default_factory=lambda: np.array([-1.0, 1.0]))
    values: np.ndarray = field(default_factory=lambda: np.ones((2, 2)))

    def evaluate(self, z, sigma):
        z = np.asarray(z, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        zn = np.linalg.norm(z, axis=-1)
        safe = np.where(zn > 0.0, zn, 1.0)
        cos = np.sum(z * sigma, axis=-1) / safe
        cos = np.where(zn > 0.0, cos, 0.0)
        zi = np.clip(np.searchsorted(self.z_grid, zn) - 1, 0, len(self.z_grid) - 2)
        ci = np.clip(np.searchsorted(self.cos_grid, cos) - 1, 0, len(self.cos_grid) - 2)
        dz = self.z_grid[zi + 1] - self.z_grid[zi]
        dc = self.cos_grid[ci + 1] - self.cos_grid[ci]
        fz = np.clip((zn - self.z_grid[zi]) / dz, 0.0, 1.0)
        fc = np.clip((cos - self.cos_grid[ci]) / dc, 0.0, 1.0)
        v = self.values
        out = ((1 - fz) * (1 - fc) * v[zi, ci] + (1 - fz) * fc * v[zi, ci + 1]
               + fz * (1 - fc) * v[zi + 1, ci] + fz * fc * v[zi + 1, ci + 1])
        return np.broadcast_to(out, np.broadcast_shapes(z.shape[:-1], sigma.shape[:-1])).copy()


def maxwell_molecule(b0: float = 1.0) -> MaxwellMolecule:
    if b0 <= 0:
        raise ValueError("maxwell_molecule requires b0 > 0")
    return MaxwellMolecule(name="maxwell_molecule", sigma_independent=True,
                           bound_constant=b0, b0=b0)


def hard_sphere(c: float = 1.0) -> HardSphere:
    if c <= 0:
        raise ValueError("hard_sphere requires c > 0")
    # |z| <= 1 + |z|^2, so the quadratic bound holds with constant c.
    return HardSphere(name="hard_sphere", sigma_independent=True,
                      bound_constant=c, c=c)


def tabulated_kernel(z_grid, cos_grid, values) -> TabulatedKernel:
    z_grid = np.asarray(z_grid, dtype=float)
    cos_grid = np.asarray(cos_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(z_grid), len(cos_grid)):
        raise ValueError("tabulated kernel values must have shape (len(z_grid), len(cos_grid))")
    if np.any(values < 0):
        raise ValueError("tabulated kernel values must be nonnegative")
    denom = 1.0 + z_grid**2
    bound = float(np.max(values / denom[:, None]))
    return TabulatedKernel(name="tabulated", sigma_independent=False,
                           bound_constant=bound, z_grid=z_grid,
                           cos_grid=cos_grid, values=values)


# ---------------------------------------------------------------------------
# elastic collision geometry
# ---------------------------------------------------------------------------

def post_collision(v: np.ndarray, v_star: np.ndarray, sigma: np.ndarray):
    """Post-collision pair on the sigma-parametrized elastic sphere:
    v' = (v+v*)/2 + (|v-v*|/2) sigma and v'* = (v+v*)/2 - (|v-v*|/2) sigma."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mid = 0.5 * (v + v_star)
    radius = 0.5 * np.linalg.norm(v - v_star, axis=-1)
    offset = radius[..., None] * sigma if radius.ndim else radius * sigma
    return mid + offset, mid - offset


# ---------------------------------------------------------------------------
# precomputed table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollisionTable:
    grid: VelocityGrid
    sphere: SphereQuadrature
    kernel: CollisionKernel
    halo: int
    corner: np.ndarray                    # (8,) flat padded corner offsets
    b_of_d: np.ndarray                    # (nd^3,) kernel per difference (isotropic)
    in_box_fraction: float                # both post-collision points inside hull
    in_box_fraction_single: float         # v' alone inside hull
    in_box_fraction_weighted: float       # as above, weighted by M M* dv dv*
    in_box_fraction_single_weighted: float
    nbytes: int
    sbase: Optional[np.ndarray] = None    # (nd^3, K) flat padded stencil bases
    sweights: Optional[np.ndarray] = None  # (nd^3, K, 8)
    bvals: Optional[np.ndarray] = None    # (nd^3, K)

    @property
    def has_stencils(self) -> bool:
        return self.sbase is not None

    @property
    def antipode(self) -> np.ndarray:
        return self.sphere.antipode.astype(np.int64)

    @property
    def bounds(self) -> np.ndarray:
        # Strict upper half of the difference axis; d = 0 contributes exactly
        # zero and d < 0 is reached through the folded pair update.
        nd3 = (2 * self.grid.n_per_axis - 1) ** 3
        return _accel.chunk_bounds((nd3 - 1) // 2 + 1, nd3)

    def collision_rate_bound(self) -> float:
        """Upper bound on the loss-side relaxation rate 2 sup Q^- / G."""
        return 2.0 * float(self.b_of_d.max() if self.bvals is None else self.bvals.max())

    def pad(self, values: np.ndarray, fill: float) -> np.ndarray:
        n = self.grid.n_per_axis
        npad = n + 2 * self.halo
        out = np.full((npad, npad, npad), fill)
        h = self.halo
        out[h:h + n, h:h + n, h:h + n] = np.asarray(values, dtype=float).reshape(n, n, n)
        return out.ravel()

    def stencil(self, i: int, j: int, k: int):
        """Interpolation stencil of v'(i, j, sigma_k): node indices (-1 marks a
        halo corner outside the box), weights, and the in-box flag."""
        if not self.has_stencils:
            raise ValueError("table was built without stored stencils")
        n = self.grid.n_per_axis
        npad = n + 2 * self.halo
        i3 = np.array(np.unravel_index(i, (n, n, n)))
        j3 = np.array(np.unravel_index(j, (n, n, n)))
        d3 = j3 - i3
        dd = int(np.ravel_multi_index(tuple(d3 + n - 1), (2 * n - 1,) * 3))
        ip = np.ravel_multi_index(tuple(i3 + self.halo), (npad,) * 3)
        flat = ip + self.sbase[dd, k] + self.corner
        px, py, pz = np.unravel_index(flat, (npad,) * 3)
        ux, uy, uz = px - self.halo, py - self.halo, pz - self.halo
        inside = ((0 <= ux) & (ux < n) & (0 <= uy) & (uy < n) & (0 <= uz) & (uz < n))
        nodes = np.where(inside, (ux * n + uy) * n + uz, -1)
        weights = self.sweights[dd, k].copy()
        in_box = bool(inside.all() or np.all(weights[~inside] == 0.0))
        return nodes, weights, in_box


def _stencil_geometry(n: int, sphere: SphereQuadrature):
    """Relative trilinear stencils per (lattice difference, sphere node)."""
    nd = 2 * n - 1
    axis = np.arange(nd) - (n - 1)
    dx, dy, dz = np.meshgrid(axis, axis, axis, indexing="ij")
    d3 = np.stack([dx.ravel(), dy.ravel(), dz.ravel()], axis=1).astype(float)
    dlen = np.linalg.norm(d3, axis=1)
    rel = 0.5 * d3[:, None, :] + 0.5 * dlen[:, None, None] * sphere.nodes[None, :, :]
    base = np.floor(rel)
    frac = rel - base
    return d3, dlen, rel, base.astype(np.int64), frac


def build_table(
    grid: VelocityGrid,
    sphere: SphereQuadrature,
    kernel: CollisionKernel,
    store_stencils: bool | None = None,
    memory_budget_mb: float = 1536.0,
) -> CollisionTable:
    """Precompute stencils and kernel values for the collision sums.

    The stored-table footprint is reported up front; explicitly requesting
    stencils beyond ``memory_budget_mb`` raises, while ``store_stencils=None``
    silently falls back to the on-the-fly evaluation path (supported for the
    linearized operator with sigma-independent kernels).
    """
    n = grid.n_per_axis
    K = sphere.size
    nd = 2 * n - 1
    d3, dlen, rel, base, frac = _stencil_geometry(n, sphere)

    est_bytes = nd**3 * K * (8 + 8 * 8 + 8) + nd**3 * 8
    if store_stencils is None:
        store_stencils = est_bytes <= memory_budget_mb * 2**20
    if store_stencils and est_bytes > memory_budget_mb * 2**20:
        raise MemoryError(
            f"collision table needs {est_bytes / 2**20:.0f} MiB, "
            f"budget is {memory_budget_mb:.0f} MiB"
        )

    # Halo so every gather base + corner lands inside the padded cube.
    bmin = int(base.min())
    bmax = int(base.max())
    halo = max(-bmin, bmax + 1, 1)
    npad = n + 2 * halo

    z = -grid.dv * d3                                   # z = v_i - v_j for j = i + d
    if kernel.sigma_independent:
        b_of_d = np.ascontiguousarray(kernel.evaluate(z[:, None, :], sphere.nodes[:1][None, :, :])[:, 0])
    else:
        b_of_d = np.zeros(nd**3)

    # Exact in-box accounting per (d, k): the set of i with the interpolation
    # point inside the node hull is a product of per-axis integer ranges.
    lo_pair = np.maximum(0, -d3).astype(np.int64)            # (nd^3, 3)
    hi_pair = (n - 1 - np.maximum(0, d3)).astype(np.int64)
    lo_in = np.ceil(-rel).astype(np.int64)                   # (nd^3, K, 3)
    hi_in = np.floor(n - 1 - rel).astype(np.int64)
    anti = sphere.antipode

    def _count(lo, hi):
        span = np.clip(hi - lo + 1, 0, None)
        return span.prod(axis=-1)

    pair_counts = _count(lo_pair, hi_pair)
    lo_single = np.maximum(lo_in, lo_pair[:, None, :])
    hi_single = np.minimum(hi_in, hi_pair[:, None, :])
    lo_both = np.maximum(np.maximum(lo_in, lo_in[:, anti, :]), lo_pair[:, None, :])
    hi_both = np.minimum(np.minimum(hi_in, hi_in[:, anti, :]), hi_pair[:, None, :])
    total = float(pair_counts.sum()) * K
    frac_single = float(_count(lo_single, hi_single).sum()) / total
    frac_both = float(_count(lo_both, hi_both).sum()) / total

    # Measure-weighted fractions: the Gaussian pair weight factorizes per axis,
    # so each (d, k) range contributes a product of 1D partial sums.
    wx = np.exp(-0.5 * grid.axis_coords**2)
    wx = wx / wx.sum()
    prefix = np.zeros((nd, n + 1))
    for idx, da in enumerate(range(-(n - 1), n)):
        lo_p, hi_p = max(0, -da), n - 1 - max(0, da)
        prods = np.zeros(n)
        ii = np.arange(lo_p, hi_p + 1)
        prods[ii] = wx[ii] * wx[ii + da]
        prefix[idx, 1:] = np.cumsum(prods)
    d_idx = (d3 + (n - 1)).astype(np.int64)   # (nd^3, 3)

    def _wsum(lo, hi):
        lo_c = np.clip(lo, 0, n)
        hi_c = np.clip(hi, -1, n - 1)
        vals = np.ones(lo.shape[:-1])
        for ax in range(3):
            da_ax = d_idx[:, ax]
            if lo.ndim == 3:
                da_ax = da_ax[:, None]
            s = prefix[da_ax, hi_c[..., ax] + 1] - prefix[da_ax, lo_c[..., ax]]
            vals = vals * np.where(hi_c[..., ax] >= lo_c[..., ax], s, 0.0)
        return vals

    total_w = float(_wsum(lo_pair, hi_pair).sum()) * K
    frac_single_w = float(_wsum(lo_single, hi_single).sum()) / total_w
    frac_both_w = float(_wsum(lo_both, hi_both).sum()) / total_w

    sbase = sweights = bvals = None
    if store_stencils:
        sbase = np.ascontiguousarray(
            (base[..., 0] * npad + base[..., 1]) * npad + base[..., 2]
        )
        fx, fy, fz = frac[..., 0], frac[..., 1], frac[..., 2]
        sweights = np.empty((nd**3, K, 8))
        ci = 0
        for ax in (0, 1):
            px = fx if ax else 1.0 - fx
            for ay in (0, 1):
                py = fy if ay else 1.0 - fy
                for az in (0, 1):
                    pz = fz if az else 1.0 - fz
                    sweights[..., ci] = px * py * pz
                    ci += 1
        sweights = np.ascontiguousarray(sweights)
        bvals = np.ascontiguousarray(
            kernel.evaluate(z[:, None, :], sphere.nodes[None, :, :])
        )
    elif not kernel.sigma_independent:
        raise MemoryError(
            f"collision table needs {est_bytes / 2**20:.0f} MiB for a "
            "sigma-dependent kernel; raise memory_budget_mb"
        )

    corner = np.array([(ax * npad + ay) * npad + az
                       for ax in (0, 1) for ay in (0, 1) for az in (0, 1)],
                      dtype=np.int64)
    return CollisionTable(
        grid=grid, sphere=sphere, kernel=kernel, halo=halo, corner=corner,
        b_of_d=b_of_d, in_box_fraction=frac_both,
        in_box_fraction_single=frac_single,
        in_box_fraction_weighted=frac_both_w,
        in_box_fraction_single_weighted=frac_single_w,
        nbytes=est_bytes if store_stencils else nd**3 * 8,
        sbase=sbase, sweights=sweights, bvals=bvals,
    )


def _require_stencils(table: CollisionTable, op: str) -> None:
    if not table.has_stencils:
        raise ValueError(f"{op} requires a table built with stored stencils")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def q_bilinear(table: CollisionTable, G: np.ndarray, K: np.ndarray | None = None) -> np.ndarray:
    """Collision sum Q(G, K)(v_i) = sum_{j,k} (G'K'* - G K*) b w_k wM_j.

    Returns the raw gain-minus-loss values; compose with ``conservation_fix``
    to restore the exactly vanishing invariant moments.  ``K=None`` selects
    the symmetric Q(G, G) path.
    """
    _require_stencils(table, "q_bilinear")
    grid = table.grid
    G = np.asarray(G, dtype=float)
    if G.shape != (grid.size,):
        raise ValueError(f"G must have shape ({grid.size},)")
    if K is None:
        return _accel.q_sym(
            table.pad(G, 1.0), G, grid.maxwellian_weights,
            table.sbase, table.sweights, table.bvals, table.corner,
            table.sphere.weights, table.antipode,
            grid.n_per_axis, table.halo, table.bounds,
        )
    K = np.asarray(K, dtype=float)
    if K.shape != (grid.size,):
        raise ValueError(f"K must have shape ({grid.size},)")
    return _accel.q_bilin(
        table.pad(G, 1.0), table.pad(K, 1.0), G, K, grid.maxwellian_weights,
        table.sbase, table.sweights, table.bvals, table.corner,
        table.sphere.weights, table.antipode,
        grid.n_per_axis, table.halo, table.bounds,
    )


def conservation_fix(grid: VelocityGrid, values: np.ndarray) -> np.ndarray:
    """Remove the weighted-orthogonal projection onto span{1, v, |v|^2} so all
    five invariant moments of the result vanish to machine precision."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(f"values must have shape ({grid.size},)")
    phi = grid.invariants()
    w = grid.maxwellian_weights
    gram = phi.T @ (w[:, None] * phi)
    if np.linalg.cond(gram) > 1e12:
        raise np.linalg.LinAlgError("invariant Gram matrix is ill-conditioned")
    moments = phi.T @ (w * values)
    return values - phi @ np.linalg.solve(gram, moments)


def linearized_collision(table: CollisionTable, g: np.ndarray) -> np.ndarray:
    """Apply the linearized operator via the symmetric quadrature of its
    integrand g + g* - g' - g'*; self-adjoint and nonnegative definite."""
    grid = table.grid
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.size,):
        raise ValueError(f"g must have shape ({grid.size},)")
    winv = 1.0 / grid.maxwellian_weights
    if table.has_stencils:
        return _accel.l_apply(
            table.pad(g, 0.0), g, grid.maxwellian_weights, winv,
            table.sbase, table.sweights, table.bvals, table.corner,
            table.sphere.weights, table.antipode,
            grid.n_per_axis, table.halo, table.bounds,
        )
    if not table.kernel.sigma_independent:
        raise ValueError("on-the-fly application requires a sigma-independent kernel")
    return _accel.l_apply_otf(
        table.pad(g, 0.0), g, grid.maxwellian_weights, winv,
        table.sphere.nodes, table.sphere.weights, table.b_of_d,
        grid.n_per_axis, table.halo, table.bounds,
    )


def q_squared_bracket(table: CollisionTable, g: np.ndarray) -> float:
    """(1/4) <<q^2>> for q = g' + g'* - g - g*; equals <g, Lg> identically."""
    _require_stencils(table, "q_squared_bracket")
    grid = table.grid
    g = np.asarray(g, dtype=float)
    return float(_accel.q2_bracket(
        table.pad(g, 0.0), g, grid.maxwellian_weights,
        table.sbase, table.sweights, table.bvals, table.corner,
        table.sphere.weights, table.antipode,
        grid.n_per_axis, table.halo, table.bounds,
    ))


def quadratic_part(table: CollisionTable, g: np.ndarray) -> np.ndarray:
    """Pure quadratic gain-loss form of the fluctuation, g' g'* - g g*, with
    zero extension outside the box; the collision operator of G = 1 + g splits
    exactly as Q(G, G) = -(linear part) + this term by bilinearity."""
    _require_stencils(table, "quadratic_part")
    grid = table.grid
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.size,):
        raise ValueError(f"g must have shape ({grid.size},)")
    return _accel.q_sym(
        table.pad(g, 0.0), g, grid.maxwellian_weights,
        table.sbase, table.sweights, table.bvals, table.corner,
        table.sphere.weights, table.antipode,
        grid.n_per_axis, table.halo, table.bounds,
    )


def consistent_collision_rate(table: CollisionTable, g: np.ndarray,
                              with_dissipation: bool = False) -> tuple[np.ndarray, float]:
    """Collision rate of G = 1 + g discretized so its linearization at
    equilibrium is exactly the symmetric weak-form operator:
    -(linearized_collision g) + quadratic_part(g), fused in one pass.

    Returns the raw rate (compose with conservation_fix) and, when requested,
    the entropy dissipation sum of G.
    """
    _require_stencils(table, "consistent_collision_rate")
    grid = table.grid
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.size,):
        raise ValueError(f"g must have shape ({grid.size},)")
    rate, r_v = _accel.consistent_rate(
        table.pad(g, 0.0), g, grid.maxwellian_weights,
        1.0 / grid.maxwellian_weights,
        table.sbase, table.sweights, table.bvals, table.corner,
        table.sphere.weights, table.antipode,
        grid.n_per_axis, table.halo, table.bounds, with_dissipation,
    )
    return rate, float(r_v)


def q_with_dissipation(table: CollisionTable, G: np.ndarray) -> tuple[np.ndarray, float]:
    """Q(G, G) and the velocity-space dissipation sum in one fused pass."""
    _require_stencils(table, "q_with_dissipation")
    grid = table.grid
    G = np.asarray(G, dtype=float)
    out, r = _accel.q_sym_with_dissipation(
        table.pad(G, 1.0), G, grid.maxwellian_weights,
        table.sbase, table.sweights, table.bvals, table.corner,
        table.sphere.weights, table.antipode,
        grid.n_per_axis, table.halo, table.bounds,
    )
    return out, float(r)


def dissipation_rate_v(table: CollisionTable, G: np.ndarray) -> float:
    """Velocity-space dissipation (1/4) <<(G'G'* - GG*) log(G'G'*/GG*)>>."""
    _require_stencils(table, "dissipation_rate_v")
    grid = table.grid
    G = np.asarray(G, dtype=float)
    if np.any(G <= 0.0):
        raise ValueError("dissipation rate requires strictly positive G")
    return float(_accel.dissipation_sum(
        table.pad(G, 1.0), G, grid.maxwellian_weights,
        table.sbase, table.sweights, table.bvals, table.corner,
        table.sphere.weights, table.antipode,
        grid.n_per_axis, table.halo, table.bounds,
    ))


def scaled_integrand(table: CollisionTable, G: np.ndarray, eps: float) -> np.ndarray:
    """Dense (N, N, K) array of (G'G'* - G G*)/eps; intended for small grids."""
    _require_stencils(table, "scaled_integrand")
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = table.grid
    G = np.asarray(G, dtype=float)
    need = grid.size**2 * table.sphere.size * 8
    if need > 512 * 2**20:
        raise MemoryError(f"dense integrand needs {need / 2**20:.0f} MiB; "
                          "use the reduction helpers instead")
    return _accel.scaled_integrand_dense(
        table.pad(G, 1.0), G, 1.0 / eps,
        table.sbase, table.sweights, table.corner, table.antipode,
        grid.n_per_axis, table.halo,
    )


def scaled_integrand_normalized(table: CollisionTable, G: np.ndarray, eps: float) -> np.ndarray:
    """scaled_integrand divided pointwise by N_eps = (2 + G)/3 at the output node."""
    q = scaled_integrand(table, G, eps)
    n_eps = (2.0 + np.asarray(G, dtype=float)) / 3.0
    return q / n_eps[:, None, None]


def q_gap_l1(table: CollisionTable, G: np.ndarray, g_ref: np.ndarray, eps: float) -> float:
    """L1(d mu) gap between the normalized scaled integrand for G = 1 + eps g
    and the linearized integrand built from g_ref on the same stencils."""
    _require_stencils(table, "q_gap_l1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = table.grid
    G = np.asarray(G, dtype=float)
    g_ref = np.asarray(g_ref, dtype=float)
    n_inv = 3.0 / (2.0 + G)
    return float(_accel.q_gap_l1(
        table.pad(G, 1.0), G, table.pad(g_ref, 0.0), g_ref,
        grid.maxwellian_weights, n_inv, 1.0 / eps,
        table.sbase, table.sweights, table.bvals, table.corner,
        table.sphere.weights, table.antipode,
        grid.n_per_axis, table.halo, table.bounds,
    ))

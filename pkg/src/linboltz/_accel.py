"""Compiled inner loops for the collision machinery.

Post-collision points factor as v' = v_i + u(d, sigma_k) with d = j - i the
lattice difference, so trilinear stencils depend on (d, k) only.  All kernels
iterate (d, k) in the outer loops, reuse one stencil across the whole lattice,
and run contiguous inner loops over i.  Out-of-box evaluation is handled by
padded arrays whose halo carries the equilibrium extension (1 for relative
densities, 0 for fluctuations), so the hot loops are branch-free.

The quadruple (i,j,k), (j,i,k), (i,j,kbar), (j,i,kbar) with sigma_kbar =
-sigma_k shares one stencil pair, one gain product, and one symmetric
integrand; kernels fold it into a single iteration using
b(v_j - v_i, sigma) = b(v_i - v_j, -sigma), which is exact for every kernel of
(|z|, zhat.sigma).  Work is split over fixed chunks of the d-axis with
per-chunk accumulators merged in a fixed order, so results are bit-identical
for any thread count.
"""
from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange

N_CHUNKS = 8


def chunk_bounds(lo: int, hi: int) -> np.ndarray:
    """Fixed chunking of [lo, hi); folded kernels receive the strict upper
    half of the difference axis, whose mirror images they update in place."""
    bounds = np.linspace(lo, hi, N_CHUNKS + 1).astype(np.int64)
    bounds[0] = lo
    bounds[-1] = hi
    return bounds


@njit(cache=True, fastmath=True, parallel=True)
def q_sym(
    G_pad, G, wM,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds,
):
    """Gain-minus-loss collision sum for Q(G, G), folded 4-to-1."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    N = n * n * n
    out_c = np.zeros((bounds.size - 1, N))
    for ci in prange(bounds.size - 1):
        out = np.zeros(N)
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            for k in range(nk // 2):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                fi = sig_w[k] * b1 + sig_w[kb] * b2
                fj = sig_w[k] * b2 + sig_w[kb] * b1
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * G_pad[pa + corner[0]] + a1_ * G_pad[pa + corner[1]]
                                  + a2_ * G_pad[pa + corner[2]] + a3 * G_pad[pa + corner[3]]
                                  + a4 * G_pad[pa + corner[4]] + a5 * G_pad[pa + corner[5]]
                                  + a6 * G_pad[pa + corner[6]] + a7 * G_pad[pa + corner[7]])
                            gq = (c0 * G_pad[pb + corner[0]] + c1_ * G_pad[pb + corner[1]]
                                  + c2_ * G_pad[pb + corner[2]] + c3 * G_pad[pb + corner[3]]
                                  + c4 * G_pad[pb + corner[4]] + c5 * G_pad[pb + corner[5]]
                                  + c6 * G_pad[pb + corner[6]] + c7 * G_pad[pb + corner[7]])
                            gain = gp * gq
                            loss = G[i] * G[j]
                            out[i] += fi * wM[j] * (gain - loss)
                            out[j] += fj * wM[i] * (gain - loss)
        out_c[ci] = out
    return out_c.sum(axis=0)


@njit(cache=True, fastmath=True, parallel=True)
def q_sym_with_dissipation(
    G_pad, G, wM,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds,
):
    """q_sym fused with the entropy dissipation sum (shared gathers)."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    N = n * n * n
    out_c = np.zeros((bounds.size - 1, N))
    r_c = np.zeros(bounds.size - 1)
    for ci in prange(bounds.size - 1):
        out = out_c[ci]
        rtot = 0.0
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            for k in range(nk // 2):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                fi = sig_w[k] * b1 + sig_w[kb] * b2
                fj = sig_w[k] * b2 + sig_w[kb] * b1
                rw = 0.25 * (fi + fj)
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * G_pad[pa + corner[0]] + a1_ * G_pad[pa + corner[1]]
                                  + a2_ * G_pad[pa + corner[2]] + a3 * G_pad[pa + corner[3]]
                                  + a4 * G_pad[pa + corner[4]] + a5 * G_pad[pa + corner[5]]
                                  + a6 * G_pad[pa + corner[6]] + a7 * G_pad[pa + corner[7]])
                            gq = (c0 * G_pad[pb + corner[0]] + c1_ * G_pad[pb + corner[1]]
                                  + c2_ * G_pad[pb + corner[2]] + c3 * G_pad[pb + corner[3]]
                                  + c4 * G_pad[pb + corner[4]] + c5 * G_pad[pb + corner[5]]
                                  + c6 * G_pad[pb + corner[6]] + c7 * G_pad[pb + corner[7]])
                            gain = gp * gq
                            loss = G[i] * G[j]
                            diff = gain - loss
                            out[i] += fi * wM[j] * diff
                            out[j] += fj * wM[i] * diff
                            if gain > 0.0 and loss > 0.0 and gain != loss:
                                rtot += rw * wM[i] * wM[j] * diff * np.log(gain / loss)
        out_c[ci] = out
        r_c[ci] = rtot
    return out_c.sum(axis=0), r_c.sum()


@njit(cache=True, fastmath=True, parallel=True)
def q_bilin(
    G_pad, K_pad, G, K, wM,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds,
):
    """Gain-minus-loss sum for Q(G, K) with G != K; folded over the pair swap
    only (the antipodal fold would exchange the roles of G and K)."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    N = n * n * n
    out_c = np.zeros((bounds.size - 1, N))
    for ci in prange(bounds.size - 1):
        out = np.zeros(N)
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            for k in range(nk):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                fi = sig_w[k] * b1
                fj = sig_w[k] * b2
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * G_pad[pa + corner[0]] + a1_ * G_pad[pa + corner[1]]
                                  + a2_ * G_pad[pa + corner[2]] + a3 * G_pad[pa + corner[3]]
                                  + a4 * G_pad[pa + corner[4]] + a5 * G_pad[pa + corner[5]]
                                  + a6 * G_pad[pa + corner[6]] + a7 * G_pad[pa + corner[7]])
                            kq = (c0 * K_pad[pb + corner[0]] + c1_ * K_pad[pb + corner[1]]
                                  + c2_ * K_pad[pb + corner[2]] + c3 * K_pad[pb + corner[3]]
                                  + c4 * K_pad[pb + corner[4]] + c5 * K_pad[pb + corner[5]]
                                  + c6 * K_pad[pb + corner[6]] + c7 * K_pad[pb + corner[7]])
                            gain = gp * kq
                            out[i] += fi * wM[j] * (gain - G[i] * K[j])
                            out[j] += fj * wM[i] * (gain - G[j] * K[i])
        out_c[ci] = out
    return out_c.sum(axis=0)


@njit(cache=True, fastmath=True, parallel=True)
def l_apply(
    g_pad, g, wM, winv,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds,
):
    """Linearized collision operator in its symmetric weak form.

    Implements (1/w_i) * (1/4) * sum over triples of mu * q * dq/dg_i with
    q = g + g* - g' - g'*, which is self-adjoint and nonnegative definite in
    the weighted inner product by construction.
    """
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    npad3 = npad * npad * npad
    out_c = np.zeros((bounds.size - 1, npad3))
    for ci in prange(bounds.size - 1):
        out = np.zeros(npad3)
        buf = np.zeros(n + 2)
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            djp = (dx * npad + dy) * npad + dz
            for k in range(nk // 2):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                bw = 0.25 * ((sig_w[k] + sig_w[kb]) * (b1 + b2))
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        # buf holds mq shifted by one with zero sentinels so
                        # the z-adjacent corner pair folds into one stream.
                        buf[iz0] = 0.0
                        buf[iz1 + 2] = 0.0
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * g_pad[pa + corner[0]] + a1_ * g_pad[pa + corner[1]]
                                  + a2_ * g_pad[pa + corner[2]] + a3 * g_pad[pa + corner[3]]
                                  + a4 * g_pad[pa + corner[4]] + a5 * g_pad[pa + corner[5]]
                                  + a6 * g_pad[pa + corner[6]] + a7 * g_pad[pa + corner[7]])
                            gq = (c0 * g_pad[pb + corner[0]] + c1_ * g_pad[pb + corner[1]]
                                  + c2_ * g_pad[pb + corner[2]] + c3 * g_pad[pb + corner[3]]
                                  + c4 * g_pad[pb + corner[4]] + c5 * g_pad[pb + corner[5]]
                                  + c6 * g_pad[pb + corner[6]] + c7 * g_pad[pb + corner[7]])
                            buf[iz + 1] = bw * wM[i] * wM[j] * (g[i] + g[j] - gp - gq)
                        for iz in range(iz0, iz1 + 1):
                            mq = buf[iz + 1]
                            ip = rowp + iz
                            out[ip] += mq
                            out[ip + djp] += mq
                        for m in range(4):
                            we = wa[2 * m]
                            wo = wa[2 * m + 1]
                            oa = rowp + o0 + corner[2 * m]
                            for t in range(iz0, iz1 + 2):
                                out[oa + t] -= we * buf[t + 1] + wo * buf[t]
                        for m in range(4):
                            we = wb[2 * m]
                            wo = wb[2 * m + 1]
                            ob = rowp + o1 + corner[2 * m]
                            for t in range(iz0, iz1 + 2):
                                out[ob + t] -= we * buf[t + 1] + wo * buf[t]
        out_c[ci] = out
    acc = out_c.sum(axis=0)
    res = np.empty(n * n * n)
    for ix in range(n):
        for iy in range(n):
            row = (ix * n + iy) * n
            rowp = ((ix + halo) * npad + iy + halo) * npad + halo
            for iz in range(n):
                i = row + iz
                res[i] = acc[rowp + iz] * winv[i]
    return res


@njit(cache=True, fastmath=True, parallel=True)
def q2_bracket(
    g_pad, g, wM,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds,
):
    """(1/4) <<q^2>> with q = g' + g'* - g - g* on the interpolation stencils."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    acc = np.zeros(bounds.size - 1)
    for ci in prange(bounds.size - 1):
        total = 0.0
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            for k in range(nk // 2):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                bw = 0.25 * ((sig_w[k] + sig_w[kb]) * (b1 + b2))
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * g_pad[pa + corner[0]] + a1_ * g_pad[pa + corner[1]]
                                  + a2_ * g_pad[pa + corner[2]] + a3 * g_pad[pa + corner[3]]
                                  + a4 * g_pad[pa + corner[4]] + a5 * g_pad[pa + corner[5]]
                                  + a6 * g_pad[pa + corner[6]] + a7 * g_pad[pa + corner[7]])
                            gq = (c0 * g_pad[pb + corner[0]] + c1_ * g_pad[pb + corner[1]]
                                  + c2_ * g_pad[pb + corner[2]] + c3 * g_pad[pb + corner[3]]
                                  + c4 * g_pad[pb + corner[4]] + c5 * g_pad[pb + corner[5]]
                                  + c6 * g_pad[pb + corner[6]] + c7 * g_pad[pb + corner[7]])
                            q = gp + gq - g[i] - g[j]
                            total += bw * wM[i] * wM[j] * q * q
        acc[ci] = total
    return acc.sum()


@njit(cache=True, fastmath=True, parallel=True)
def dissipation_sum(
    G_pad, G, wM,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds,
):
    """(1/4) <<(G'G'* - G G*) log(G'G'*/(G G*))>>; every term is nonnegative."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    acc = np.zeros(bounds.size - 1)
    for ci in prange(bounds.size - 1):
        total = 0.0
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            for k in range(nk // 2):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                bw = 0.25 * ((sig_w[k] + sig_w[kb]) * (b1 + b2))
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * G_pad[pa + corner[0]] + a1_ * G_pad[pa + corner[1]]
                                  + a2_ * G_pad[pa + corner[2]] + a3 * G_pad[pa + corner[3]]
                                  + a4 * G_pad[pa + corner[4]] + a5 * G_pad[pa + corner[5]]
                                  + a6 * G_pad[pa + corner[6]] + a7 * G_pad[pa + corner[7]])
                            gq = (c0 * G_pad[pb + corner[0]] + c1_ * G_pad[pb + corner[1]]
                                  + c2_ * G_pad[pb + corner[2]] + c3 * G_pad[pb + corner[3]]
                                  + c4 * G_pad[pb + corner[4]] + c5 * G_pad[pb + corner[5]]
                                  + c6 * G_pad[pb + corner[6]] + c7 * G_pad[pb + corner[7]])
                            gain = gp * gq
                            loss = G[i] * G[j]
                            if gain > 0.0 and loss > 0.0 and gain != loss:
                                total += bw * wM[i] * wM[j] * (gain - loss) * np.log(gain / loss)
        acc[ci] = total
    return acc.sum()


@njit(cache=True, fastmath=True, parallel=True)
def q_gap_l1(
    G_pad, G, r_pad, r, wM, Ninv, eps_inv,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds,
):
    """L1(d mu) distance between q_eps/N_eps and the reference integrand
    r' + r'* - r - r* built from the same stencils."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    acc = np.zeros(bounds.size - 1)
    for ci in prange(bounds.size - 1):
        total = 0.0
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            for k in range(nk // 2):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                fi = sig_w[k] * b1 + sig_w[kb] * b2
                fj = sig_w[k] * b2 + sig_w[kb] * b1
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * G_pad[pa + corner[0]] + a1_ * G_pad[pa + corner[1]]
                                  + a2_ * G_pad[pa + corner[2]] + a3 * G_pad[pa + corner[3]]
                                  + a4 * G_pad[pa + corner[4]] + a5 * G_pad[pa + corner[5]]
                                  + a6 * G_pad[pa + corner[6]] + a7 * G_pad[pa + corner[7]])
                            gq = (c0 * G_pad[pb + corner[0]] + c1_ * G_pad[pb + corner[1]]
                                  + c2_ * G_pad[pb + corner[2]] + c3 * G_pad[pb + corner[3]]
                                  + c4 * G_pad[pb + corner[4]] + c5 * G_pad[pb + corner[5]]
                                  + c6 * G_pad[pb + corner[6]] + c7 * G_pad[pb + corner[7]])
                            rp = (a0 * r_pad[pa + corner[0]] + a1_ * r_pad[pa + corner[1]]
                                  + a2_ * r_pad[pa + corner[2]] + a3 * r_pad[pa + corner[3]]
                                  + a4 * r_pad[pa + corner[4]] + a5 * r_pad[pa + corner[5]]
                                  + a6 * r_pad[pa + corner[6]] + a7 * r_pad[pa + corner[7]])
                            rq = (c0 * r_pad[pb + corner[0]] + c1_ * r_pad[pb + corner[1]]
                                  + c2_ * r_pad[pb + corner[2]] + c3 * r_pad[pb + corner[3]]
                                  + c4 * r_pad[pb + corner[4]] + c5 * r_pad[pb + corner[5]]
                                  + c6 * r_pad[pb + corner[6]] + c7 * r_pad[pb + corner[7]])
                            q_eps = eps_inv * (gp * gq - G[i] * G[j])
                            q_ref = rp + rq - r[i] - r[j]
                            total += wM[i] * wM[j] * (
                                fi * abs(q_eps * Ninv[i] - q_ref)
                                + fj * abs(q_eps * Ninv[j] - q_ref))
        acc[ci] = total
    return acc.sum()


@njit(cache=True, fastmath=True)
def scaled_integrand_dense(
    G_pad, G, eps_inv,
    sbase, sweights, corner, antipode,
    n, halo,
):
    """Materialize (G'G'* - G G*)/eps for every (i, j, k); small grids only."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = antipode.size
    N = n * n * n
    out = np.zeros((N, N, nk))
    for dd in range(nd * nd * nd):
        dx = dd // (nd * nd) - (n - 1)
        dy = (dd // nd) % nd - (n - 1)
        dz = dd % nd - (n - 1)
        if dx == 0 and dy == 0 and dz == 0:
            continue
        ix0 = max(0, -dx)
        ix1 = n - 1 - max(0, dx)
        iy0 = max(0, -dy)
        iy1 = n - 1 - max(0, dy)
        iz0 = max(0, -dz)
        iz1 = n - 1 - max(0, dz)
        djf = (dx * n + dy) * n + dz
        for k in range(nk):
            kb = antipode[k]
            o0 = sbase[dd, k]
            o1 = sbase[dd, kb]
            wa = sweights[dd, k]
            wb = sweights[dd, kb]
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    row = (ix * n + iy) * n
                    rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                    for iz in range(iz0, iz1 + 1):
                        i = row + iz
                        ip = rowp + iz
                        j = i + djf
                        pa = ip + o0
                        pb = ip + o1
                        gp = 0.0
                        gq = 0.0
                        for c in range(8):
                            gp += wa[c] * G_pad[pa + corner[c]]
                            gq += wb[c] * G_pad[pb + corner[c]]
                        out[i, j, k] = eps_inv * (gp * gq - G[i] * G[j])
    return out


@njit(cache=True, fastmath=True, parallel=True)
def l_apply_otf(
    g_pad, g, wM, winv, sigma, sig_w, b_of_d,
    n, halo, bounds,
):
    """On-the-fly variant of l_apply for grids too large to hold a stencil
    table.  ``b_of_d`` tabulates the kernel per lattice difference (kernels
    with genuine sigma dependence require the table path)."""
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    npad3 = npad * npad * npad
    half = nk // 2
    out_c = np.zeros((bounds.size - 1, npad3))
    for ci in prange(bounds.size - 1):
        out = np.zeros(npad3)
        buf = np.zeros(n + 2)
        wgt = np.empty((2, 8))
        off = np.empty((2, 8), dtype=np.int64)
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            if dx == 0 and dy == 0 and dz == 0:
                continue
            b = b_of_d[dd]
            if b == 0.0:
                continue
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            djp = (dx * npad + dy) * npad + dz
            dnorm = 0.5 * np.sqrt(float(dx * dx + dy * dy + dz * dz))
            for k in range(half):
                kb = k + half
                bw = 0.5 * b * (sig_w[k] + sig_w[kb])
                for side in range(2):
                    sgn = 1.0 if side == 0 else -1.0
                    rx = 0.5 * dx + sgn * dnorm * sigma[k, 0]
                    ry = 0.5 * dy + sgn * dnorm * sigma[k, 1]
                    rz = 0.5 * dz + sgn * dnorm * sigma[k, 2]
                    cx = np.floor(rx)
                    cy = np.floor(ry)
                    cz = np.floor(rz)
                    fx = rx - cx
                    fy = ry - cy
                    fz = rz - cz
                    base = (np.int64(cx) * npad + np.int64(cy)) * npad + np.int64(cz)
                    cidx = 0
                    for ax in range(2):
                        px = fx if ax == 1 else 1.0 - fx
                        for ay in range(2):
                            py = fy if ay == 1 else 1.0 - fy
                            for az in range(2):
                                pz = fz if az == 1 else 1.0 - fz
                                wgt[side, cidx] = px * py * pz
                                off[side, cidx] = base + (ax * npad + ay) * npad + az
                                cidx += 1
                a0, a1_, a2_, a3 = wgt[0, 0], wgt[0, 1], wgt[0, 2], wgt[0, 3]
                a4, a5, a6, a7 = wgt[0, 4], wgt[0, 5], wgt[0, 6], wgt[0, 7]
                c0, c1_, c2_, c3 = wgt[1, 0], wgt[1, 1], wgt[1, 2], wgt[1, 3]
                c4, c5, c6, c7 = wgt[1, 4], wgt[1, 5], wgt[1, 6], wgt[1, 7]
                u0, u1, u2, u3 = off[0, 0], off[0, 1], off[0, 2], off[0, 3]
                u4, u5, u6, u7 = off[0, 4], off[0, 5], off[0, 6], off[0, 7]
                e0, e1, e2, e3 = off[1, 0], off[1, 1], off[1, 2], off[1, 3]
                e4, e5, e6, e7 = off[1, 4], off[1, 5], off[1, 6], off[1, 7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        buf[iz0] = 0.0
                        buf[iz1 + 2] = 0.0
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            gp = (a0 * g_pad[ip + u0] + a1_ * g_pad[ip + u1]
                                  + a2_ * g_pad[ip + u2] + a3 * g_pad[ip + u3]
                                  + a4 * g_pad[ip + u4] + a5 * g_pad[ip + u5]
                                  + a6 * g_pad[ip + u6] + a7 * g_pad[ip + u7])
                            gq = (c0 * g_pad[ip + e0] + c1_ * g_pad[ip + e1]
                                  + c2_ * g_pad[ip + e2] + c3 * g_pad[ip + e3]
                                  + c4 * g_pad[ip + e4] + c5 * g_pad[ip + e5]
                                  + c6 * g_pad[ip + e6] + c7 * g_pad[ip + e7])
                            buf[iz + 1] = bw * wM[i] * wM[j] * (g[i] + g[j] - gp - gq)
                        for iz in range(iz0, iz1 + 1):
                            mq = buf[iz + 1]
                            ip = rowp + iz
                            out[ip] += mq
                            out[ip + djp] += mq
                        for m in range(4):
                            we = wgt[0, 2 * m]
                            wo = wgt[0, 2 * m + 1]
                            pc = rowp + off[0, 2 * m]
                            for t in range(iz0, iz1 + 2):
                                out[pc + t] -= we * buf[t + 1] + wo * buf[t]
                        for m in range(4):
                            we = wgt[1, 2 * m]
                            wo = wgt[1, 2 * m + 1]
                            pc = rowp + off[1, 2 * m]
                            for t in range(iz0, iz1 + 2):
                                out[pc + t] -= we * buf[t + 1] + wo * buf[t]
        out_c[ci] = out
    acc = out_c.sum(axis=0)
    res = np.empty(n * n * n)
    for ix in range(n):
        for iy in range(n):
            row = (ix * n + iy) * n
            rowp = ((ix + halo) * npad + iy + halo) * npad + halo
            for iz in range(n):
                i = row + iz
                res[i] = acc[rowp + iz] * winv[i]
    return res


@njit(cache=True, fastmath=True, parallel=True)
def consistent_rate(
    g_pad, g, wM, winv,
    sbase, sweights, bvals, corner, sig_w, antipode,
    n, halo, bounds, with_r,
):
    """Collision rate for G = 1 + g whose linear part is exactly the
    symmetric weak-form operator: -L g plus the pure quadratic gain-loss part
    of the fluctuation (zero extension), optionally fused with the entropy
    dissipation sum of G.
    """
    npad = n + 2 * halo
    nd = 2 * n - 1
    nk = sig_w.size
    npad3 = npad * npad * npad
    out_c = np.zeros((bounds.size - 1, npad3))
    r_c = np.zeros(bounds.size - 1)
    for ci in prange(bounds.size - 1):
        out = np.zeros(npad3)
        buf = np.zeros(n + 2)
        rtot = 0.0
        for dd in range(bounds[ci], bounds[ci + 1]):
            dx = dd // (nd * nd) - (n - 1)
            dy = (dd // nd) % nd - (n - 1)
            dz = dd % nd - (n - 1)
            ix0 = max(0, -dx)
            ix1 = n - 1 - max(0, dx)
            iy0 = max(0, -dy)
            iy1 = n - 1 - max(0, dy)
            iz0 = max(0, -dz)
            iz1 = n - 1 - max(0, dz)
            djf = (dx * n + dy) * n + dz
            djp = (dx * npad + dy) * npad + dz
            for k in range(nk // 2):
                kb = antipode[k]
                b1 = bvals[dd, k]
                b2 = bvals[dd, kb]
                if b1 == 0.0 and b2 == 0.0:
                    continue
                fi = sig_w[k] * b1 + sig_w[kb] * b2
                fj = sig_w[k] * b2 + sig_w[kb] * b1
                bw = 0.25 * (fi + fj)
                o0 = sbase[dd, k]
                o1 = sbase[dd, kb]
                wa = sweights[dd, k]
                wb = sweights[dd, kb]
                a0, a1_, a2_, a3 = wa[0], wa[1], wa[2], wa[3]
                a4, a5, a6, a7 = wa[4], wa[5], wa[6], wa[7]
                c0, c1_, c2_, c3 = wb[0], wb[1], wb[2], wb[3]
                c4, c5, c6, c7 = wb[4], wb[5], wb[6], wb[7]
                for ix in range(ix0, ix1 + 1):
                    for iy in range(iy0, iy1 + 1):
                        row = (ix * n + iy) * n
                        rowp = ((ix + halo) * npad + iy + halo) * npad + halo
                        buf[iz0] = 0.0
                        buf[iz1 + 2] = 0.0
                        for iz in range(iz0, iz1 + 1):
                            i = row + iz
                            ip = rowp + iz
                            j = i + djf
                            pa = ip + o0
                            pb = ip + o1
                            gp = (a0 * g_pad[pa + corner[0]] + a1_ * g_pad[pa + corner[1]]
                                  + a2_ * g_pad[pa + corner[2]] + a3 * g_pad[pa + corner[3]]
                                  + a4 * g_pad[pa + corner[4]] + a5 * g_pad[pa + corner[5]]
                                  + a6 * g_pad[pa + corner[6]] + a7 * g_pad[pa + corner[7]])
                            gq = (c0 * g_pad[pb + corner[0]] + c1_ * g_pad[pb + corner[1]]
                                  + c2_ * g_pad[pb + corner[2]] + c3 * g_pad[pb + corner[3]]
                                  + c4 * g_pad[pb + corner[4]] + c5 * g_pad[pb + corner[5]]
                                  + c6 * g_pad[pb + corner[6]] + c7 * g_pad[pb + corner[7]])
                            mu = wM[i] * wM[j]
                            q = g[i] + g[j] - gp - gq
                            quad = gp * gq - g[i] * g[j]
                            mq = bw * mu * q
                            buf[iz + 1] = mq
                            out[ip] += fi * mu * quad - mq
                            out[ip + djp] += fj * mu * quad - mq
                            if with_r:
                                gain = 1.0 + gp + gq + gp * gq
                                loss = 1.0 + g[i] + g[j] + g[i] * g[j]
                                if gain > 0.0 and loss > 0.0 and gain != loss:
                                    rtot += bw * mu * (gain - loss) * np.log(gain / loss)
                        for m in range(4):
                            we = wa[2 * m]
                            wo = wa[2 * m + 1]
                            oa = rowp + o0 + corner[2 * m]
                            for t in range(iz0, iz1 + 2):
                                out[oa + t] += we * buf[t + 1] + wo * buf[t]
                        for m in range(4):
                            we = wb[2 * m]
                            wo = wb[2 * m + 1]
                            ob = rowp + o1 + corner[2 * m]
                            for t in range(iz0, iz1 + 2):
                                out[ob + t] += we * buf[t + 1] + wo * buf[t]
        out_c[ci] = out
        r_c[ci] = rtot
    acc = out_c.sum(axis=0)
    res = np.empty(n * n * n)
    for ix in range(n):
        for iy in range(n):
            row = (ix * n + iy) * n
            rowp = ((ix + halo) * npad + iy + halo) * npad + halo
            for iz in range(n):
                i = row + iz
                res[i] = acc[rowp + iz] * winv[i]
    return res, r_c.sum()


def set_threads(n_threads: int) -> None:
    numba.set_num_threads(max(1, n_threads))

"""Compiled inner loops for the samplers.

All randomness is drawn by the caller (numpy ``Generator``) and passed in, so
the kernels are deterministic functions of their inputs.  Colors are 0-based;
``alpha``, ``tau`` and ``center`` are length-K with the reference color last
(zero entries).
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def count_concordant(cells, edges):
    s = 0
    for e in range(edges.shape[0]):
        if cells[edges[e, 0]] == cells[edges[e, 1]]:
            s += 1
    return s


@njit(cache=True, nogil=True)
def site_log_ratio(cells, nbr, alpha, beta, tau, center, counts, i, new):
    """Log acceptance numerator for recoloring site ``i`` to ``new``."""
    old = cells[i]
    ds = 0
    for q in range(nbr.shape[1]):
        j = nbr[i, q]
        if j >= 0:
            c = cells[j]
            if c == new:
                ds += 1
            if c == old:
                ds -= 1
    logr = alpha[new] - alpha[old] + beta * ds
    # (a-1)^2 - a^2 = 1 - 2a for the color losing a cell, (a+1)^2 - a^2 = 2a + 1 for the gaining one
    logr -= tau[old] * (1.0 - 2.0 * (counts[old] - center[old]))
    logr -= tau[new] * (2.0 * (counts[new] - center[new]) + 1.0)
    return logr, ds


@njit(cache=True, nogil=True)
def gibbs_sweep(cells, nbr, alpha, beta, tau, center, counts, offsets, uniforms):
    """One raster-order sweep; returns the change in ``S``."""
    k_colors = alpha.shape[0]
    total_ds = 0
    for i in range(cells.shape[0]):
        old = cells[i]
        new = (old + offsets[i]) % k_colors
        logr, ds = site_log_ratio(cells, nbr, alpha, beta, tau, center, counts, i, new)
        if logr >= 0.0 or uniforms[i] < np.exp(logr):
            cells[i] = new
            counts[old] -= 1
            counts[new] += 1
            total_ds += ds
    return total_ds


@njit(cache=True, nogil=True)
def heat_bath_sweep(cells, nbr, alpha, beta, tau, center, counts, uniforms):
    """One raster-order sweep drawing each site from its full conditional; returns the change in ``S``."""
    k_colors = alpha.shape[0]
    logw = np.empty(k_colors)
    nc = np.zeros(k_colors, dtype=np.int64)
    total_ds = 0
    for i in range(cells.shape[0]):
        old = cells[i]
        nc[:] = 0
        for q in range(nbr.shape[1]):
            j = nbr[i, q]
            if j >= 0:
                nc[cells[j]] += 1
        top = -np.inf
        for l in range(k_colors):
            w = alpha[l] + beta * nc[l]
            if l != old:
                w -= tau[old] * (1.0 - 2.0 * (counts[old] - center[old]))
                w -= tau[l] * (2.0 * (counts[l] - center[l]) + 1.0)
            logw[l] = w
            if w > top:
                top = w
        total = 0.0
        for l in range(k_colors):
            logw[l] = np.exp(logw[l] - top)
            total += logw[l]
        target = uniforms[i] * total
        new = k_colors - 1
        acc = 0.0
        for l in range(k_colors):
            acc += logw[l]
            if target < acc:
                new = l
                break
        if new != old:
            cells[i] = new
            counts[old] -= 1
            counts[new] += 1
            total_ds += nc[new] - nc[old]
    return total_ds


@njit(cache=True, nogil=True)
def swap_log_odds(alpha, tau, center, counts, perm):
    log_odds = 0.0
    for k in range(counts.shape[0]):
        new = 0
        for q in range(perm.shape[0]):
            if perm[q] == k:
                new = counts[q]
        a = counts[k] - center[k]
        b = new - center[k]
        log_odds += alpha[k] * (new - counts[k]) - tau[k] * (b * b - a * a)
    return log_odds


@njit(cache=True, nogil=True)
def symmetric_swap(cells, alpha, tau, center, counts, perm, u, metropolis):
    """Relabel every color ``k`` as ``perm[k]`` if accepted; returns acceptance."""
    log_odds = swap_log_odds(alpha, tau, center, counts, perm)
    if metropolis:
        accept = log_odds >= 0.0 or u < np.exp(log_odds)
    else:
        accept = log_odds >= 0.0
    if accept:
        for i in range(cells.shape[0]):
            cells[i] = perm[cells[i]]
        old = counts.copy()
        for k in range(counts.shape[0]):
            counts[perm[k]] = old[k]
    return accept


@njit(cache=True, nogil=True)
def gibbs_chain(cells, nbr, alpha, beta, tau, center, counts, state_s,
                offsets, uniforms, perms, swap_u, metropolis, heat_bath,
                start, burn_in, thinning, out_t, out_s, out_cells, keep_grids, out_pos):
    """Run ``uniforms.shape[0]`` iterations of sweep + swap, recording retained draws.

    ``offsets`` is only read by the Metropolis site update.  ``state_s`` and
    ``out_pos`` are one-element arrays carried between blocks.
    """
    for j in range(uniforms.shape[0]):
        if heat_bath:
            state_s[0] += heat_bath_sweep(cells, nbr, alpha, beta, tau, center, counts,
                                          uniforms[j])
        else:
            state_s[0] += gibbs_sweep(cells, nbr, alpha, beta, tau, center, counts,
                                      offsets[j], uniforms[j])
        symmetric_swap(cells, alpha, tau, center, counts, perms[j], swap_u[j], metropolis)
        it = start + j
        if it >= burn_in and (it - burn_in + 1) % thinning == 0:
            p = out_pos[0]
            out_t[p, :] = counts
            out_s[p] = state_s[0]
            if keep_grids:
                out_cells[p, :] = cells
            out_pos[0] = p + 1


@njit(cache=True, nogil=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True, nogil=True)
def swendsen_wang_step(cells, edges, alpha, p_bond, edge_u, site_u, parent, csize):
    """Bond percolation on concordant edges, then cluster recoloring.

    Each cluster ``C`` takes color ``k`` with probability proportional to
    ``exp(alpha[k] * |C|)``; the draw uses ``site_u`` at the cluster root.
    """
    m = cells.shape[0]
    k_colors = alpha.shape[0]
    for i in range(m):
        parent[i] = i
        csize[i] = 1
    for e in range(edges.shape[0]):
        a = edges[e, 0]
        b = edges[e, 1]
        if cells[a] == cells[b] and edge_u[e] < p_bond:
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                if csize[ra] < csize[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                csize[ra] += csize[rb]
    weights = np.empty(k_colors)
    for i in range(m):
        r = _find(parent, i)
        if r == i:
            n = csize[r]
            top = -np.inf
            for k in range(k_colors):
                weights[k] = alpha[k] * n
                if weights[k] > top:
                    top = weights[k]
            total = 0.0
            for k in range(k_colors):
                weights[k] = np.exp(weights[k] - top)
                total += weights[k]
            target = site_u[r] * total
            color = k_colors - 1
            acc = 0.0
            for k in range(k_colors):
                acc += weights[k]
                if target < acc:
                    color = k
                    break
            # roots are visited before being overwritten, so stash the color in csize
            csize[r] = -1 - color
    for i in range(m):
        r = _find(parent, i)
        cells[i] = -1 - csize[r]


@njit(cache=True, nogil=True)
def swendsen_wang_chain(cells, edges, alpha, p_bond, counts, edge_u, site_u, parent, csize,
                        start, burn_in, thinning, out_t, out_s, out_cells, keep_grids, out_pos):
    k_colors = alpha.shape[0]
    for j in range(edge_u.shape[0]):
        swendsen_wang_step(cells, edges, alpha, p_bond, edge_u[j], site_u[j], parent, csize)
        it = start + j
        if it >= burn_in and (it - burn_in + 1) % thinning == 0:
            for k in range(k_colors):
                counts[k] = 0
            for i in range(cells.shape[0]):
                counts[cells[i]] += 1
            p = out_pos[0]
            out_t[p, :] = counts
            out_s[p] = count_concordant(cells, edges)
            if keep_grids:
                out_cells[p, :] = cells
            out_pos[0] = p + 1

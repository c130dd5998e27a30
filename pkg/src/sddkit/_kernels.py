"""Compiled inner loops.

Everything here works on plain arrays: a graph is passed as its CSR
adjacency ``(indptr, nbr, eid)`` plus a per-edge ``length`` array.
"""

import heapq

import numpy as np
from numba import njit


@njit(cache=True)
def dijkstra(indptr, nbr, eid, length, n, source):
    """Single-source shortest paths; ties settle the lowest vertex id first."""
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    pred_edge = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    k = 0
    dist[source] = 0.0
    heap = [(0.0, source)]
    while len(heap) > 0:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        order[k] = x
        k += 1
        for p in range(indptr[x], indptr[x + 1]):
            y = nbr[p]
            if done[y]:
                continue
            nd = d + length[eid[p]]
            if nd < dist[y]:
                dist[y] = nd
                pred[y] = x
                pred_edge[y] = eid[p]
                heapq.heappush(heap, (nd, y))
    return dist, pred, pred_edge, order[:k]


@njit(cache=True)
def star_decomposition_tree(indptr, nbr, eid, length, n, root, cone_frac):
    """Spanning tree by recursive ball/cone (star) decomposition.

    Each piece is split into a ball around its center, with radius picked
    in ``[rho/3, 2*rho/3]`` to minimise cut/volume, and cones grown from
    the ball's shell in the reduced-cost metric ``len + d(a) - d(b)``.
    Cone radii are limited to ``cone_frac * rho``.  Every cone is joined to
    the ball by the shortest-path edge into its apex.  Returns the ids of
    the ``n - 1`` tree edges.
    """
    label = np.zeros(n, dtype=np.int64)
    assign = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    pred_edge = np.full(n, -1, dtype=np.int64)
    dstamp = np.zeros(n, dtype=np.int64)
    cd = np.full(n, np.inf)
    cseen = np.zeros(n, dtype=np.int64)
    cdone = np.zeros(n, dtype=np.int64)
    corder = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    buf = np.arange(n)
    tmp = np.empty(n, dtype=np.int64)
    tree = np.empty(max(n - 1, 0), dtype=np.int64)
    nt = 0
    next_label = 1
    stamp = 0
    stack = [(0, n, root)]
    while len(stack) > 0:
        s, e, c = stack.pop()
        size = e - s
        if size <= 1:
            continue
        lab = next_label
        next_label += 1
        for k in range(s, e):
            label[buf[k]] = lab
            assign[buf[k]] = -1

        # shortest paths from the center inside the piece
        stamp += 1
        dist[c] = 0.0
        dstamp[c] = stamp
        pred[c] = -1
        heap = [(0.0, c)]
        k = 0
        while len(heap) > 0:
            d, x = heapq.heappop(heap)
            if cdone[x] == -stamp:
                continue
            cdone[x] = -stamp
            order[k] = x
            k += 1
            for p in range(indptr[x], indptr[x + 1]):
                y = nbr[p]
                if label[y] != lab or cdone[y] == -stamp:
                    continue
                nd = d + length[eid[p]]
                if dstamp[y] != stamp or nd < dist[y]:
                    dstamp[y] = stamp
                    dist[y] = nd
                    pred[y] = x
                    pred_edge[y] = eid[p]
                    heapq.heappush(heap, (nd, y))
        rho = dist[order[size - 1]]

        # ball: prefix of the settle order at a strict distance increase
        cut = 0
        vol = 0
        best_k = -1
        best_score = np.inf
        fb_k = 1
        fb_gap = np.inf
        for k in range(size - 1):
            x = order[k]
            assign[x] = 0
            for p in range(indptr[x], indptr[x + 1]):
                y = nbr[p]
                if label[y] != lab:
                    continue
                vol += 1
                if assign[y] == 0:
                    cut -= 1
                else:
                    cut += 1
            r = dist[x]
            if dist[order[k + 1]] > r:
                if r >= rho / 3.0 and r <= 2.0 * rho / 3.0:
                    score = cut / (vol + 1.0)
                    if score < best_score:
                        best_score = score
                        best_k = k + 1
                gap = abs(r - rho / 2.0)
                if gap < fb_gap:
                    fb_gap = gap
                    fb_k = k + 1
        ball = best_k if best_k > 0 else fb_k
        for k in range(ball, size - 1):
            assign[order[k]] = -1

        # cones from the shell, in settle order
        centers = [c]
        delta = cone_frac * rho
        ncones = 0
        for k in range(ball, size):
            x = order[k]
            if assign[x] != -1 or assign[pred[x]] != 0:
                continue
            ncones += 1
            stamp += 1
            cd[x] = 0.0
            cseen[x] = stamp
            heap = [(0.0, x)]
            nc = 0
            while len(heap) > 0:
                d, y = heapq.heappop(heap)
                if cdone[y] == stamp:
                    continue
                if d > delta and nc > 0:
                    break
                cdone[y] = stamp
                corder[nc] = y
                nc += 1
                for p in range(indptr[y], indptr[y + 1]):
                    z = nbr[p]
                    if label[z] != lab or assign[z] != -1 or cdone[z] == stamp:
                        continue
                    red = length[eid[p]] + dist[y] - dist[z]
                    if red < 0.0:
                        red = 0.0
                    nd = d + red
                    if cseen[z] != stamp or nd < cd[z]:
                        cseen[z] = stamp
                        cd[z] = nd
                        heapq.heappush(heap, (nd, z))
            # radius: strict boundary minimising cut / volume
            cut = 0
            vol = 0
            best_k = nc
            best_score = np.inf
            for j in range(nc):
                y = corder[j]
                assign[y] = ncones
                for p in range(indptr[y], indptr[y + 1]):
                    z = nbr[p]
                    if label[z] != lab:
                        continue
                    a = assign[z]
                    if a == ncones:
                        cut -= 1
                        vol += 1
                    elif a == -1:
                        cut += 1
                        vol += 1
                if j == nc - 1 or cd[corder[j + 1]] > cd[y]:
                    score = cut / (vol + 1.0)
                    if score < best_score:
                        best_score = score
                        best_k = j + 1
            for j in range(best_k, nc):
                assign[corder[j]] = -1
            centers.append(x)
            tree[nt] = pred_edge[x]
            nt += 1

        # anything left hangs off its shortest-path parent's piece
        for k in range(ball, size):
            x = order[k]
            if assign[x] == -1:
                assign[x] = assign[pred[x]]

        # regroup the segment by sub-piece and recurse
        nsub = ncones + 1
        counts = np.zeros(nsub + 1, dtype=np.int64)
        for k in range(s, e):
            counts[assign[buf[k]] + 1] += 1
        for j in range(nsub):
            counts[j + 1] += counts[j]
        pos = counts.copy()
        for k in range(s, e):
            x = buf[k]
            tmp[pos[assign[x]]] = x
            pos[assign[x]] += 1
        for k in range(size):
            buf[s + k] = tmp[k]
        for j in range(nsub):
            stack.append((s + counts[j], s + counts[j + 1], centers[j]))
    return tree[:nt]


@njit(cache=True)
def _find(uf, x):
    r = x
    while uf[r] != r:
        r = uf[r]
    while uf[x] != r:
        nxt = uf[x]
        uf[x] = r
        x = nxt
    return r


@njit(cache=True)
def tree_order(n, root, child_ptr, child_idx):
    """Preorder of a rooted tree given as children CSR."""
    order = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[0] = root
    top = 1
    k = 0
    while top > 0:
        top -= 1
        x = stack[top]
        order[k] = x
        k += 1
        for p in range(child_ptr[x + 1] - 1, child_ptr[x] - 1, -1):
            stack[top] = child_idx[p]
            top += 1
    return order[:k]


@njit(cache=True)
def prefix_resistance(order, parent, step):
    """Root-to-vertex sums of ``step`` with compensated (two-sum) error terms."""
    n = len(parent)
    hi = np.zeros(n)
    lo = np.zeros(n)
    for k in range(1, len(order)):
        x = order[k]
        p = parent[x]
        a = hi[p]
        b = step[x]
        s = a + b
        bb = s - a
        err = (a - (s - bb)) + (b - bb)
        hi[x] = s
        lo[x] = lo[p] + err
    return hi, lo


@njit(cache=True)
def offline_lca(n, root, parent, child_ptr, child_idx, indptr, nbr, eid, m):
    """Tarjan's offline LCA for every graph edge, one union-find pass."""
    uf = np.arange(n)
    rank = np.zeros(n, dtype=np.int64)
    anc = np.arange(n)
    black = np.zeros(n, dtype=np.bool_)
    it = child_ptr[:-1].copy()
    lca = np.full(m, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    stack[0] = root
    top = 1
    while top > 0:
        x = stack[top - 1]
        if it[x] < child_ptr[x + 1]:
            ch = child_idx[it[x]]
            it[x] += 1
            stack[top] = ch
            top += 1
            continue
        top -= 1
        black[x] = True
        for p in range(indptr[x], indptr[x + 1]):
            y = nbr[p]
            if black[y] and lca[eid[p]] < 0:
                lca[eid[p]] = anc[_find(uf, y)]
        if x != root:
            px = parent[x]
            a = _find(uf, px)
            b = _find(uf, x)
            if a != b:
                if rank[a] < rank[b]:
                    a, b = b, a
                uf[b] = a
                if rank[a] == rank[b]:
                    rank[a] += 1
            anc[_find(uf, px)] = px
    return lca


@njit(cache=True)
def forward_substitution(c, piv, u1, u2, a1, a2):
    """Apply the unit lower factor's inverse in place (pivot order)."""
    for k in range(len(piv)):
        x = c[piv[k]]
        c[u1[k]] += a1[k] * x
        if u2[k] >= 0:
            c[u2[k]] += a2[k] * x


@njit(cache=True)
def backward_substitution(x, ctop, piv, u1, u2, a1, a2, dinv):
    """Recover eliminated coordinates in reverse pivot order, in place."""
    for k in range(len(piv) - 1, -1, -1):
        val = ctop[k] * dinv[k] + a1[k] * x[u1[k]]
        if u2[k] >= 0:
            val += a2[k] * x[u2[k]]
        x[piv[k]] = val


@njit(cache=True)
def csr_matvec(indptr, indices, data, x):
    n = len(indptr) - 1
    y = np.empty(n)
    for i in range(n):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * x[indices[p]]
        y[i] = s
    return y


@njit(cache=True)
def chain_solve(level, b, t, depth, nv, ip_off, nz_off, indptr, indices, data,
                pv_off, piv, u1, u2, a1, a2, dinv, sv_off, surv,
                scale, lmin, lmax, t_inner, term, calls, iters):
    """Recursive preconditioned Chebyshev over a packed chain.

    Level ``i`` owns ``indptr[ip_off[i]:ip_off[i+1]]`` (its Laplacian CSR,
    entries at ``nz_off[i]``), pivots ``pv_off[i]:pv_off[i+1]`` and
    survivors ``sv_off[i]:sv_off[i+1]``.  Level ``depth`` is solved with
    the dense pseudo-inverse ``term``.
    """
    calls[level] += 1
    n = nv[level]
    bb = b - b.mean()
    if level == depth:
        x = term @ bb
        return x - x.mean()
    ip = indptr[ip_off[level]:ip_off[level + 1]]
    ix = indices[nz_off[level]:nz_off[level + 1]]
    dv = data[nz_off[level]:nz_off[level + 1]]
    p0, p1 = pv_off[level], pv_off[level + 1]
    lp, lu1, lu2 = piv[p0:p1], u1[p0:p1], u2[p0:p1]
    la1, la2, ldinv = a1[p0:p1], a2[p0:p1], dinv[p0:p1]
    sv = surv[sv_off[level]:sv_off[level + 1]]
    sc = scale[level]
    t_next = t_inner[level + 1]
    d = 0.5 * (lmax[level] + lmin[level])
    c = 0.5 * (lmax[level] - lmin[level])
    x = np.zeros(n)
    s = np.zeros(n)
    r = bb.copy()
    alpha = 0.0
    for i in range(1, t + 1):
        work = r - r.mean()
        forward_substitution(work, lp, lu1, lu2, la1, la2)
        ctop = work[lp]
        y = chain_solve(level + 1, work[sv], t_next, depth, nv, ip_off, nz_off, indptr, indices,
                        data, pv_off, piv, u1, u2, a1, a2, dinv, sv_off, surv,
                        scale, lmin, lmax, t_inner, term, calls, iters)
        z = np.empty(n)
        z[sv] = y
        backward_substitution(z, ctop, lp, lu1, lu2, la1, la2, ldinv)
        z = sc * (z - z.mean())
        if i == 1:
            s[:] = z
            alpha = 1.0 / d
        else:
            if i == 2:
                beta = 0.5 * (c * alpha) ** 2
            else:
                beta = (c * alpha / 2.0) ** 2
            alpha = 1.0 / (d - beta / alpha)
            s = z + beta * s
        x += alpha * s
        x -= x.mean()
        r = bb - csr_matvec(ip, ix, dv, x)
        iters[level] += 1
    return x

"""Compiled inner loops for the per-step update and metric accumulation.

No fastmath: results must be bit-reproducible run to run.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def knn_rows(x, y, k, out):
    """Exact k nearest by (squared distance, id); same ordering as topology.knn."""
    n = x.shape[0]
    best = np.empty(k)
    for i in range(n):
        m = 0
        for j in range(n):
            if j == i:
                continue
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            dd = dx * dx + dy * dy
            if m == k and not dd < best[k - 1]:
                continue
            # insert after every entry with distance <= dd (earlier ids win ties)
            p = m if m < k else k - 1
            while p > 0 and best[p - 1] > dd:
                best[p] = best[p - 1]
                out[i, p] = out[i, p - 1]
                p -= 1
            best[p] = dd
            out[i, p] = j
            if m < k:
                m += 1


@njit(cache=True)
def agent_velocities(
    x, y, vx, vy, a_R, tx, ty, radius, r, k,
    omega, c, d, gain, delta, a_min, a_max, eps,
    f, nbrs, sx, sy, a_next, coincident,
):
    """Objective, neighbours, N_best, PSO + repulsion velocity and next a_R for every agent.

    Writes into the output arrays; coincident neighbour pairs are flagged and
    skipped so the caller can add their keyed push.
    """
    n = x.shape[0]
    r2 = radius * radius
    for i in range(n):
        dx = x[i] - tx
        dy = y[i] - ty
        f[i] = -1 if dx * dx + dy * dy <= r2 else 0
    knn_rows(x, y, k, nbrs)
    for i in range(n):
        bx = x[i]
        by = y[i]
        seen = f[i] == -1
        if not seen:
            for s in range(k):
                j = nbrs[i, s]
                if f[j] == -1:
                    bx = x[j]
                    by = y[j]
                    seen = True
                    break
        cr = c * r[i]
        px = omega * vx[i] + cr * (bx - x[i])
        py = omega * vy[i] + cr * (by - y[i])
        scale = gain * a_R[i]
        qx = 0.0
        qy = 0.0
        coincident[i] = False
        for s in range(k):
            j = nbrs[i, s]
            rx = x[j] - x[i]
            ry = y[j] - y[i]
            dist = np.sqrt(rx * rx + ry * ry)
            if dist < eps:
                coincident[i] = True
                continue
            w = (scale / dist) ** d / dist
            qx -= w * rx
            qy -= w * ry
        sx[i] = px + qx
        sy[i] = py + qy
        if seen:
            a_next[i] = max(a_R[i] - delta, a_min)
        else:
            a_next[i] = min(a_R[i] + delta, a_max)


@njit(cache=True)
def limit_and_move(x, y, sx, sy, v_max, L, divide, nx, ny, nvx, nvy):
    n = x.shape[0]
    for i in range(n):
        ux = sx[i]
        uy = sy[i]
        if divide:
            ux = ux / v_max[i]
            uy = uy / v_max[i]
        else:
            speed = np.sqrt(ux * ux + uy * uy)
            if speed > v_max[i]:
                g = v_max[i] / speed
                ux = ux * g
                uy = uy * g
        px = x[i] + ux
        py = y[i] + uy
        if px < 0.0:
            px = 0.0
            ux = 0.0
        elif px > L:
            px = L
            ux = 0.0
        if py < 0.0:
            py = 0.0
            uy = 0.0
        elif py > L:
            py = L
            uy = 0.0
        nx[i] = px
        ny[i] = py
        nvx[i] = ux
        nvy[i] = uy


@njit(cache=True)
def fold_metrics(vx, vy, x, y, tx, ty, bins, counts, phi, norm_mode):
    """Add one step's heading-bearing samples to ``counts``; return the fluctuation sum."""
    n = vx.shape[0]
    mx = 0.0
    my = 0.0
    for i in range(n):
        mx += vx[i]
        my += vy[i]
    mx /= n
    my /= n
    total = 0.0
    ux_sum = 0.0
    uy_sum = 0.0
    for i in range(n):
        ux = vx[i] - mx
        uy = vy[i] - my
        if norm_mode:
            total += np.sqrt(ux * ux + uy * uy)
        else:
            ux_sum += ux
            uy_sum += uy
        speed = np.sqrt(vx[i] * vx[i] + vy[i] * vy[i])
        bx = tx - x[i]
        by = ty - y[i]
        bn = np.sqrt(bx * bx + by * by)
        p = 0.0
        if speed > 0.0 and bn > 0.0:
            p = (vx[i] * (bx / bn) + vy[i] * (by / bn)) / speed
            if p > 1.0:
                p = 1.0
            elif p < -1.0:
                p = -1.0
        phi[i] = p
        b = int(np.floor((p + 1.0) * (bins / 2.0)))
        if b > bins - 1:
            b = bins - 1
        counts[b] += 1
    if not norm_mode:
        total = np.sqrt(ux_sum * ux_sum + uy_sum * uy_sum)
    return total

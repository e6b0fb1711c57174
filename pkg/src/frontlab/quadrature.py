"""Gauss-Legendre helpers shared by the integration code.

Besides plain tensor rules this module integrates densities with a jump
across the singular set.  A quadrature cell cut by Sigma is integrated as an
iterated integral whose inner direction is transversal to Sigma: the inner
lines are split at the roots of lambda and the outer interval is split where
Sigma crosses the cell edges parallel to it, so every piece is smooth and the
Gauss rule keeps its high order.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_nodes(n):
    """Nodes and weights of the n-point rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_nodes(a, b, panels, n):
    """Nodes and weights of a composite n-point rule with equal panels on [a, b]."""
    x, w = gauss_nodes(n)
    edges = np.linspace(a, b, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def breakpoints_nodes(breaks, n):
    """Composite rule over consecutive breakpoints (one panel per interval)."""
    breaks = np.asarray(breaks, float)
    x, w = gauss_nodes(n)
    h = np.diff(breaks)
    nodes = (breaks[:-1, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_smooth(func, domain, cells, nodes=6, block=64):
    """Tensor Gauss quadrature of a smooth density ``func(u, v)`` over the domain.

    Returns (value, error estimate).  The estimate is the summed absolute
    difference between the n-node and the embedded n/2-node results per cell,
    which is conservative for smooth integrands.
    """
    lo_n = max(1, nodes // 2)
    (u0, u1), (v0, v1) = domain.u_range, domain.v_range
    uh, uw = composite_nodes(u0, u1, cells, nodes)
    ul, ulw = composite_nodes(u0, u1, cells, lo_n)
    vh, vw = composite_nodes(v0, v1, cells, nodes)
    vl, vlw = composite_nodes(v0, v1, cells, lo_n)
    total = 0.0
    err = 0.0
    for start in range(0, cells, block):
        stop = min(cells, start + block)
        rows_h = slice(start * nodes, stop * nodes)
        rows_l = slice(start * lo_n, stop * lo_n)
        U, V = np.meshgrid(uh, vh[rows_h], indexing="xy")
        Fh = func(U, V) * vw[rows_h, None] * uw[None, :]
        U, V = np.meshgrid(ul, vl[rows_l], indexing="xy")
        Fl = func(U, V) * vlw[rows_l, None] * ulw[None, :]
        ch = Fh.reshape(stop - start, nodes, cells, nodes).sum(axis=(1, 3))
        cl = Fl.reshape(stop - start, lo_n, cells, lo_n).sum(axis=(1, 3))
        total += float(ch.sum())
        err += float(np.abs(ch - cl).sum())
    return total, err


# cells cut by the zero set of lambda ----------------------------------------


def _bisect(f, a, b, fa_pos, iters=55):
    """Vectorized bisection for sign changes of f between a and b (arrays of points)."""
    for _ in range(iters):
        m = 0.5 * (a + b)
        same = (f(m) > 0) == fa_pos
        a = np.where(same[..., None], m, a)
        b = np.where(same[..., None], b, m)
    return 0.5 * (a + b)


def edge_crossings(lam, p0, p1, q=8):
    """Zeros of lam on segments p0 -> p1 (arrays (k, 2)), sampled at q + 1 points.

    Returns (segment index, crossing point) arrays.
    """
    t = np.linspace(0.0, 1.0, q + 1)
    pts = p0[:, None, :] + t[None, :, None] * (p1 - p0)[:, None, :]
    L = lam(pts[..., 0], pts[..., 1])
    pos = L > 0
    k, j = np.nonzero(pos[:, :-1] != pos[:, 1:])
    if len(k) == 0:
        return k, np.zeros((0, 2))
    a, b = pts[k, j], pts[k, j + 1]
    root = _bisect(lambda m: lam(m[..., 0], m[..., 1]), a, b, pos[k, j])
    return k, root


def points_in_cells(points, cells):
    """(cell index, point index) pairs with the point inside the closed cell."""
    order = np.argsort(points[:, 0], kind="stable")
    pu = points[order, 0]
    lo = np.searchsorted(pu, cells[:, 0], side="left")
    hi = np.searchsorted(pu, cells[:, 1], side="right")
    counts = hi - lo
    if counts.sum() == 0:
        return np.zeros(0, int), np.zeros(0, int)
    ci = np.repeat(np.arange(len(cells)), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    pi = order[np.repeat(lo, counts) + offs]
    v = points[pi, 1]
    ok = (v >= cells[ci, 2]) & (v <= cells[ci, 3])
    return ci[ok], pi[ok]


class CutCellIntegrator:
    """Integral of sgn(lambda) * density over a union of rectangular cells.

    ``lam(u, v)`` gives lambda, ``grad(u, v)`` its gradient (..., 2),
    ``density(u, v)`` the smooth factor.  ``curve_points`` are known points of
    Sigma (traced samples) used to detect cut cells and to pick the inner
    direction.
    """

    ratio = 0.3
    max_depth = 4

    def __init__(self, lam, grad, density, nodes=6, curve_points=None, samples=16):
        self.lam = lam
        self.grad = grad
        self.density = density
        self.nodes = nodes
        self.samples = samples
        self.curve_points = np.zeros((0, 2)) if curve_points is None else np.asarray(curve_points, float)

    # -- helpers
    def _tensor(self, cells, n, block=2048):
        x, w = gauss_nodes(n)
        out = np.zeros(len(cells))
        for b in range(0, len(cells), block):
            u0, u1, v0, v1 = cells[b:b + block].T
            du, dv = u1 - u0, v1 - v0
            U = u0[:, None, None] + du[:, None, None] * x[None, None, :]
            V = v0[:, None, None] + dv[:, None, None] * x[None, :, None]
            U, V = np.broadcast_arrays(U, V)
            f = self.density(U, V) * np.sign(self.lam(U, V))
            out[b:b + block] = np.einsum("kij,i,j->k", f, w, w) * du * dv
        return out

    def _classify(self, cells):
        """Per cell: 0 uncut, 1 inner v, 2 inner u, 3 needs subdivision; plus edge crossings."""
        k = len(cells)
        u0, u1, v0, v1 = cells.T
        corners = [np.stack([u0, v0], -1), np.stack([u1, v0], -1), np.stack([u1, v1], -1), np.stack([u0, v1], -1)]
        # candidates: corner signs differ or a known point of Sigma lies in the cell
        cpos = np.stack([self.lam(c[:, 0], c[:, 1]) > 0 for c in corners], -1)
        cand = np.any(cpos != cpos[:, :1], axis=1)
        ci = pi = np.zeros(0, int)
        if len(self.curve_points):
            ci, pi = points_in_cells(self.curve_points, cells)
            cand[ci] = True
        sel = np.nonzero(cand)[0]
        ks = len(sel)
        # edges: 0 bottom, 1 right, 2 top, 3 left
        seg0 = np.concatenate([corners[0][sel], corners[1][sel], corners[3][sel], corners[0][sel]])
        seg1 = np.concatenate([corners[1][sel], corners[2][sel], corners[2][sel], corners[3][sel]])
        if ks:
            idx, pts = edge_crossings(self.lam, seg0, seg1, self.samples)
        else:
            idx, pts = np.zeros(0, int), np.zeros((0, 2))
        cell_of = sel[idx % max(ks, 1)]
        edge_of = idx // max(ks, 1)
        cut = np.zeros(k, bool)
        cut[cell_of] = True
        cut[ci] = True
        ratio_u = np.full(k, np.inf)
        ratio_v = np.full(k, np.inf)
        check_pts, check_cell = [pts], [cell_of]
        if len(ci):
            check_pts.append(self.curve_points[pi])
            check_cell.append(ci)
        allp = np.concatenate(check_pts)
        allc = np.concatenate(check_cell)
        if len(allp):
            g = self.grad(allp[:, 0], allp[:, 1])
            gn = np.maximum(np.linalg.norm(g, axis=-1), 1e-300)
            np.minimum.at(ratio_u, allc, np.abs(g[:, 0]) / gn)
            np.minimum.at(ratio_v, allc, np.abs(g[:, 1]) / gn)
        kind = np.zeros(k, int)
        good_v = ratio_v > self.ratio
        good_u = ratio_u > self.ratio
        pick_v = good_v & (~good_u | (ratio_v >= ratio_u))
        kind[cut & pick_v] = 1
        kind[cut & ~pick_v & good_u] = 2
        kind[cut & ~good_u & ~good_v] = 3
        return kind, cell_of, edge_of, pts, np.maximum(ratio_u, ratio_v)

    def _lines(self, cells, kind_axis, cell_of, edge_of, pts, n):
        """Iterated integral over cut cells with inner axis ``kind_axis`` (1: v inner, 0: u inner)."""
        k = len(cells)
        if kind_axis == 1:
            a0, a1, b0, b1 = cells.T  # outer u in [a0, a1], inner v in [b0, b1]
            par_edges = (0, 2)  # bottom/top edges are crossed by the inner lines' ends
            oc = 0
        else:
            b0, b1, a0, a1 = cells.T
            par_edges = (1, 3)
            oc = 1
        ic = 1 - oc
        x, w = gauss_nodes(n)
        # outer pieces
        breaks = [[a0[i], a1[i]] for i in range(k)]
        for c, e, p in zip(cell_of, edge_of, pts):
            if e in par_edges:
                breaks[c].append(p[oc])
        piece_cell, piece_a, piece_b = [], [], []
        for i in range(k):
            br = np.unique(np.clip(breaks[i], a0[i], a1[i]))
            for lo, hi in zip(br[:-1], br[1:]):
                if hi > lo:
                    piece_cell.append(i)
                    piece_a.append(lo)
                    piece_b.append(hi)
        piece_cell = np.array(piece_cell, int)
        pa, pb = np.array(piece_a), np.array(piece_b)
        line_cell = np.repeat(piece_cell, n)
        line_o = (pa[:, None] + (pb - pa)[:, None] * x[None, :]).ravel()
        line_w = ((pb - pa)[:, None] * w[None, :]).ravel()
        lo, hi = b0[line_cell], b1[line_cell]
        # roots of lambda on each inner line
        m = self.samples
        t = np.linspace(0.0, 1.0, m + 1)
        inner = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        outer = np.broadcast_to(line_o[:, None], inner.shape)

        def pt(o, i):
            return (o, i) if oc == 0 else (i, o)

        L = self.lam(*pt(outer, inner))
        pos = L > 0
        li, j = np.nonzero(pos[:, :-1] != pos[:, 1:])
        roots = np.zeros(0)
        if len(li):
            ra = np.stack([line_o[li], inner[li, j]], -1)
            rb = np.stack([line_o[li], inner[li, j + 1]], -1)
            r = _bisect(lambda q: self.lam(*pt(q[..., 0], q[..., 1])), ra, rb, pos[li, j])
            roots = r[:, 1]
        # inner sub-intervals
        cuts = [[lo[i], hi[i]] for i in range(len(line_o))]
        for i, r in zip(li, roots):
            cuts[i].append(r)
        sub_line, sub_a, sub_b = [], [], []
        for i, cl in enumerate(cuts):
            br = np.sort(cl)
            for s0, s1 in zip(br[:-1], br[1:]):
                if s1 > s0:
                    sub_line.append(i)
                    sub_a.append(s0)
                    sub_b.append(s1)
        sub_line = np.array(sub_line, int)
        sa, sb = np.array(sub_a), np.array(sub_b)
        I = (sa[:, None] + (sb - sa)[:, None] * x[None, :])
        O = np.broadcast_to(line_o[sub_line][:, None], I.shape)
        mid_sign = np.sign(self.lam(*pt(line_o[sub_line], 0.5 * (sa + sb))))
        vals = self.density(*pt(O, I)) @ w * (sb - sa) * mid_sign
        line_val = np.bincount(sub_line, vals, minlength=len(line_o))
        return np.bincount(line_cell, line_val * line_w, minlength=k)

    def cell_values(self, cells, n):
        """Integral over each cell with n-node rules (recursive subdivision where needed)."""
        cells = np.asarray(cells, float).reshape(-1, 4)
        out = np.zeros(len(cells))
        kind, cell_of, edge_of, pts, _ = self._classify(cells)
        depth_cells = [(cells, np.arange(len(cells)), kind, cell_of, edge_of, pts)]
        for depth in range(self.max_depth + 1):
            nxt = []
            for cs, owner, kd, co, eo, pp in depth_cells:
                m0 = kd == 0
                if np.any(m0):
                    np.add.at(out, owner[m0], self._tensor(cs[m0], n))
                for axis_kind, axis in ((1, 1), (2, 0)):
                    msk = kd == axis_kind
                    if np.any(msk):
                        sel = np.nonzero(msk)[0]
                        remap = -np.ones(len(cs), int)
                        remap[sel] = np.arange(len(sel))
                        keep = msk[co]
                        vals = self._lines(cs[sel], axis, remap[co[keep]], eo[keep], pp[keep], n)
                        np.add.at(out, owner[sel], vals)
                m3 = kd == 3
                if np.any(m3):
                    sub = cs[m3]
                    own = owner[m3]
                    if depth == self.max_depth:
                        # give up on direction quality: smallest cells, best available axis
                        np.add.at(out, own, self._tensor(sub, 2 * n))
                        continue
                    um = 0.5 * (sub[:, 0] + sub[:, 1])
                    vm = 0.5 * (sub[:, 2] + sub[:, 3])
                    quads = np.concatenate([
                        np.stack([sub[:, 0], um, sub[:, 2], vm], -1),
                        np.stack([um, sub[:, 1], sub[:, 2], vm], -1),
                        np.stack([sub[:, 0], um, vm, sub[:, 3]], -1),
                        np.stack([um, sub[:, 1], vm, sub[:, 3]], -1),
                    ])
                    qown = np.concatenate([own] * 4)
                    kd2, co2, eo2, pp2, _ = self._classify(quads)
                    nxt.append((quads, qown, kd2, co2, eo2, pp2))
            depth_cells = nxt
            if not depth_cells:
                break
        return out

    def integrate(self, cells):
        """(value, error estimate) with n and n/2 node rules compared per cell."""
        hi = self.cell_values(cells, self.nodes)
        lo = self.cell_values(cells, max(2, self.nodes // 2))
        return float(hi.sum()), float(np.abs(hi - lo).sum())


def grid_cells(domain, cells):
    us = np.linspace(domain.u_range[0], domain.u_range[1], cells + 1)
    vs = np.linspace(domain.v_range[0], domain.v_range[1], cells + 1)
    U0, V0 = np.meshgrid(us[:-1], vs[:-1])
    U1, V1 = np.meshgrid(us[1:], vs[1:])
    return np.stack([U0.ravel(), U1.ravel(), V0.ravel(), V1.ravel()], -1)

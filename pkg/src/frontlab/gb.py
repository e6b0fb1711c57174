"""Integrals over frontals split by Sigma, Euler characteristics and the
local and global Gauss-Bonnet checks."""

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import geodesic_curvature, singular_curvature_at
from .errors import EndpointDivergence, ErrorBudgetExceeded, HypothesisViolation, NonCompactDomain
from .quadrature import CutCellIntegrator, breakpoints_nodes, composite_nodes, gauss_nodes, grid_cells, integrate_smooth
from .singular import Tolerances, analyze, area_density, nearest_on_sigma

TWO_PI = 2 * math.pi


# -- 2-forms ------------------------------------------------------------------

def _curve_points(sset):
    if not sset or not sset.curves:
        return np.zeros((0, 2))
    pts = np.concatenate([c.points for c in sset.curves])
    u, v = sset.view.domain.wrap(pts[:, 0], pts[:, 1])
    return np.stack([u, v], -1)


def integrate_2form(view, sset, form, cells=64, nodes=6):
    """(value, error estimate) of the integral of K dA-hat ("KdAhat") or K dA ("KdA").

    K dA-hat has the smooth density K lambda.  K dA = sgn(lambda) K lambda du dv
    jumps across Sigma, so cells cut by Sigma are integrated along lines
    broken at their crossings with Sigma.
    """
    dom = view.domain
    if form == "KdAhat":
        return integrate_smooth(view.klam, dom, cells, nodes)
    if form == "KdA":
        integ = CutCellIntegrator(view.lam, lambda u, v: area_density(view, u, v)[1], view.klam,
                                  nodes=nodes, curve_points=_curve_points(sset))
        return integ.integrate(grid_cells(dom, cells))
    if form == "domega":
        return integrate_smooth(view.klam_frame, dom, cells, nodes)
    raise ValueError("form must be 'KdA', 'KdAhat' or 'domega'")


# -- singular curvature measure -------------------------------------------------

def _density(view, curve, s):
    """kappa_s dtau/ds along ``curve`` at parameters s (finite at peaks)."""
    h, dh = curve._hermite(np.asarray(s, float))
    # derivative of the projection h -> h - lambda g / |g|^2 onto Sigma
    j = view.lam_jet(h[:, 0], h[:, 1], 2)
    lam, g, H = j.value, j.grad(), j.hessian()
    gg = np.sum(g * g, -1)[:, None]
    Hdh = np.einsum("...ij,...j->...i", H, dh)
    dq = Hdh / gg - 2 * g * np.sum(g * Hdh, -1)[:, None] / gg**2
    dp = dh - np.sum(g * dh, -1)[:, None] * g / gg - lam[:, None] * dq
    p = curve.point_at(np.asarray(s, float))[0]
    _, dens, _ = singular_curvature_at(view, p[:, 0], p[:, 1], dp)
    return dens * np.linalg.norm(dp, axis=-1)


def endpoint_limit(view, curve, s_end, direction, h, levels=12):
    """Limit of kappa_s dtau/ds approaching s_end from inside the arc.

    s is arclength in the (u, v) plane: the density is evaluated at points
    of Sigma (trace samples projected onto lambda = 0) with the exact unit
    tangent of Sigma, so it is a smooth function of position up to the peak.
    Samples at s_end - direction * h * 2^-k and returns (limit, residual,
    values); the residual is the largest change over the last three dyadic
    refinements.  Raises EndpointDivergence when these changes do not shrink.
    """
    s = s_end - direction * h * 2.0 ** -np.arange(levels)
    p, dp = curve.point_at(s)
    _, vals, _ = singular_curvature_at(view, p[:, 0], p[:, 1], dp)
    diffs = np.abs(np.diff(vals))
    residual = float(diffs[-3:].max())
    scale = 1.0 + float(np.max(np.abs(vals)))
    if not np.all(np.isfinite(vals)) or (residual > 1e-3 * scale and diffs[-1] >= diffs[-3]):
        raise EndpointDivergence("kappa_s density does not settle at s=%g: %s" % (s_end, vals.tolist()))
    return float(vals[-1]), residual, vals


def curve_density_integral(view, curve, s0, s1, nodes=8, panel=None):
    """(integral of kappa_s dtau along ``curve`` for s in [s0, s1], error estimate).

    Panels end at the trace samples (the interpolant is only C1 there) and
    are at most ``panel`` long; the estimate compares n and n/2 node rules.
    """
    if s1 < s0:
        s0, s1 = s1, s0
    if s1 - s0 <= 0:
        return 0.0, 0.0
    panel = panel or (s1 - s0)
    knots = curve.s
    if curve.closed:
        reps = range(int(math.floor(s0 / curve.length)) - 1, int(s1 // curve.length) + 2)
        knots = np.concatenate([knots[:-1] + j * curve.length for j in reps])
    inner = knots[(knots > s0) & (knots < s1)]
    breaks = np.concatenate([[s0], inner, [s1]])
    breaks = np.concatenate([np.linspace(x, y, max(1, int(math.ceil((y - x) / panel))) + 1)[:-1]
                             for x, y in zip(breaks[:-1], breaks[1:])] + [[s1]])
    sh, wh = breakpoints_nodes(breaks, nodes)
    sl, wl = breakpoints_nodes(breaks, max(2, nodes // 2))
    hi = float(np.sum(_density(view, curve, sh) * wh))
    lo = float(np.sum(_density(view, curve, sl) * wl))
    return hi, abs(hi - lo)


def integrate_singular_curvature(sset, nodes=8, panel=None):
    """(integral of kappa_s dtau over Sigma, error estimate, per-arc values).

    Composite Gauss rules in the trace parameter of each arc.  Gauss nodes
    never touch the arc ends, where the density only has a limit; at peaks
    the small gap left by the tracer is closed with the extrapolated end
    value of the density.
    """
    view = sset.view
    panel = panel or 2 * sset.scales.cell
    total, err, per_arc = 0.0, 0.0, []
    for a in sset.arcs:
        c = sset.curves[a.curve]
        L = a.s1 - a.s0
        if L <= 0:
            per_arc.append(0.0)
            continue
        hi, e = curve_density_integral(view, c, a.s0, a.s1, nodes, panel)
        gap = 0.0
        for s_end, direction, vi in ((a.s0, -1.0, a.start), (a.s1, 1.0, a.end)):
            if vi is None or sset.vertices[vi].kind != "peak":
                continue
            if s_end not in (0.0, c.length) or c.closed:
                continue  # peak inside a traced curve: no gap
            end_pt = c.points[0] if s_end == 0.0 else c.points[-1]
            dist = float(np.linalg.norm(view.domain.delta(sset.vertices[vi].point, end_pt)))
            if dist > 0:
                lim, _, _ = endpoint_limit(view, c, s_end, direction, min(0.25 * L, sset.scales.cell))
                gap += lim * dist
        per_arc.append(hi + gap)
        total += hi + gap
        err += e
    return total, err, per_arc


# -- Euler characteristics ------------------------------------------------------

@dataclass
class EulerData:
    chi_plus: int
    chi_minus: int
    chi_sigma: int
    chi_sigma_peaks: int
    chi_sigma_closed: int
    chi_M: int
    m: dict
    counts: dict
    consistent: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {k: getattr(self, k) for k in ("chi_plus", "chi_minus", "chi_sigma", "chi_sigma_peaks",
                                              "chi_sigma_closed", "chi_M", "counts", "consistent", "notes")} | {
            "m": {str(k): v for k, v in self.m.items()}}


def _complex_chi(mask, periodic):
    """V - E + F of the cubical complex spanned by the marked grid nodes."""
    if periodic:
        ex = mask & np.roll(mask, -1, 1)
        ey = mask & np.roll(mask, -1, 0)
        sq = ex & np.roll(ex, -1, 0)
    else:
        ex = mask[:, :-1] & mask[:, 1:]
        ey = mask[:-1, :] & mask[1:, :]
        sq = ex[:-1, :] & ex[1:, :]
    V, E, F = int(mask.sum()), int(ex.sum() + ey.sum()), int(sq.sum())
    return V - E + F, (V, E, F)


def _boundary_arcs(mask):
    """Number of maximal runs of marked nodes along the perimeter (-1 for the whole loop)."""
    ring = np.concatenate([mask[0, :], mask[1:, -1], mask[-1, -2::-1], mask[-2:0:-1, 0]])
    if ring.all():
        return -1
    return int(np.sum(ring & ~np.roll(ring, 1)))


def euler_characteristics(view, sset, n=None, exclude_cells=4):
    """Euler data of M+, M- and Sigma.

    M+ and M- are approximated by the cubical complexes of grid nodes with
    lambda > 0 and lambda < 0; nodes within ``exclude_cells`` cells of a peak
    are left out, which keeps sectors meeting at a peak apart (a region
    touching the peak keeps its homotopy type, an isolated peak punctures its
    region).  On a rectangle the values are Euler characteristics with
    compact support (the part of the region on the outer boundary counts as
    open arcs), which is what makes chi(M+) + chi(M-) + chi(Sigma) = 1.
    Sigma is the traced graph; its closed-up version pairs the boundary ends.
    """
    dom = view.domain
    n = n or 2 * sset.grid
    periodic = dom.compact
    us, vs = dom.grid(n)
    U, V = np.meshgrid(us, vs)
    L = view.lam(U, V)
    excl = np.zeros(L.shape, bool)
    radius = exclude_cells * max((us[-1] - us[0]) / (len(us) - 1), (vs[-1] - vs[0]) / (len(vs) - 1))
    peak_vertices = [vi for vi, v in enumerate(sset.vertices) if v.kind == "peak"]
    for vi in peak_vertices:
        p = sset.vertices[vi].point
        d = dom.delta(np.broadcast_to(p, U.shape + (2,)), np.stack([U, V], -1)) if periodic else \
            np.stack([U - p[0], V - p[1]], -1)
        excl |= np.linalg.norm(d, axis=-1) < radius
    chis, counts = {}, {}
    for key, mask in (("plus", (L > 0) & ~excl), ("minus", (L < 0) & ~excl)):
        chi, cnt = _complex_chi(mask, periodic)
        if not periodic:
            arcs = _boundary_arcs(mask)
            chi -= 0 if arcs == -1 else arcs
        chis[key], counts[key] = chi, cnt
    # Sigma as a graph
    kinds = [v.kind for v in sset.vertices]
    used = set()
    for a in sset.arcs:
        used.update(x for x in (a.start, a.end) if x is not None)
    Vg = sum(1 for vi, k in enumerate(kinds) if k != "boundary" and (k == "peak" or vi in used))
    b = sum(1 for k in kinds if k == "boundary")
    Eg = sum(1 for a in sset.arcs if a.start is not None)
    chi_sigma = Vg + b - Eg
    chi_closed = Vg - (Eg - b // 2)
    m = {}
    for vi in peak_vertices:
        m[vi] = len(sset.incident(vi)) // 2
    chi_peaks = sum(1 - mm for mm in m.values())
    chi_M = 0 if periodic else 1
    notes = []
    if b % 2:
        notes.append("odd number of boundary ends (%d)" % b)
    if chi_closed != chi_peaks:
        notes.append("chi(Sigma) by the graph (%d) differs from the peak formula (%d)" % (chi_closed, chi_peaks))
    if chis["plus"] + chis["minus"] + chi_sigma != chi_M:
        notes.append("chi(M+) + chi(M-) + chi(Sigma) = %d, expected %d"
                     % (chis["plus"] + chis["minus"] + chi_sigma, chi_M))
    counts["sigma"] = (Vg + b, Eg)
    return EulerData(chis["plus"], chis["minus"], chi_sigma, chi_peaks, chi_closed, chi_M, m, counts,
                     not notes, notes)


# -- global Gauss-Bonnet ----------------------------------------------------------

@dataclass
class GBReport:
    int_KdA: float
    int_KdAhat: float
    int_kappa_s: float
    chi_E: float
    n_pos: int
    n_neg: int
    n_null: int
    euler: EulerData
    residual_A: float
    residual_B: float
    errors: dict
    budget_A: float
    budget_B: float
    chi_E_omega: float = None
    peaks: list = field(default_factory=list)
    passed: bool = False
    label: str = "theorem-as-oracle: residuals validate the implementation given the theorem"

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("int_KdA", "int_KdAhat", "int_kappa_s", "chi_E", "chi_E_omega",
                                           "n_pos", "n_neg", "n_null", "residual_A", "residual_B",
                                           "errors", "budget_A", "budget_B", "passed", "label")}
        d["euler"] = self.euler.to_dict()
        d["peaks"] = self.peaks
        return d

    def require(self):
        if not self.passed:
            raise ErrorBudgetExceeded(max(self.budget_A, self.budget_B), max(self.residual_A, self.residual_B))
        return self


def verify_global_GB(view, n=129, cells=128, nodes=6, tol=None, sset=None, omega_cells=None):
    """Both global identities on a compact domain.

    A: 2 pi chi(M) = int K dA + 2 int kappa_s dtau.
    B: chi_E = (1/2 pi) int K dA-hat = chi(M+) - chi(M-) + #P+ - #P-.
    """
    from .sectors import sector_angles, verify_theorem_A

    if not view.domain.compact:
        raise NonCompactDomain("the global identities need a closed surface (flat torus domain)")
    tol = tol or Tolerances()
    sset = sset or analyze(view, n, tol)
    bad = [r.point for r in sset.points if not r.is_peak]
    if bad:
        raise HypothesisViolation(bad)
    kda, e_kda = integrate_2form(view, sset, "KdA", cells, nodes)
    kdah, e_kdah = integrate_2form(view, sset, "KdAhat", cells, nodes)
    iks, e_iks = integrate_singular_curvature(sset)[:2] if sset.arcs else (0.0, 0.0)
    peaks, signs = [], []
    for vi, v in enumerate(sset.vertices):
        if v.kind != "peak":
            continue
        rep = sset.points[v.report]
        sec = sector_angles(view, rep, sset.scales, tol)
        verify_theorem_A(sec)
        signs.append(sec.sign)
        peaks.append({"point": [float(x) for x in rep.point], "verdict": rep.verdict, "sign": sec.sign})
    eu = euler_characteristics(view, sset)
    chi_E = kdah / TWO_PI
    n_pos, n_neg = signs.count("positive"), signs.count("negative")
    res_A = abs(TWO_PI * eu.chi_M - kda - 2 * iks)
    res_B = abs(chi_E - (eu.chi_plus - eu.chi_minus + n_pos - n_neg))
    budget_A = max(1e-3, 10 * (e_kda + 2 * e_iks))
    budget_B = max(1e-3, 10 * e_kdah / TWO_PI)
    chi_omega = None
    if omega_cells:
        chi_omega = integrate_2form(view, sset, "domega", omega_cells, nodes)[0] / TWO_PI
    passed = (res_A <= budget_A and res_B <= budget_B and abs(chi_E - round(chi_E)) <= 0.05
              and eu.consistent)
    return GBReport(kda, kdah, iks, chi_E, n_pos, n_neg, signs.count("null"), eu, res_A, res_B,
                    {"KdA": e_kda, "KdAhat": e_kdah, "kappa_s": e_iks}, budget_A, budget_B,
                    chi_omega, peaks, passed)


# -- local Gauss-Bonnet -----------------------------------------------------------

@dataclass
class Edge:
    """Boundary arc of a triangle: a straight segment or a piece of Sigma.

    For Sigma edges ``curve`` is the traced curve and the arc runs from
    parameter s0 to s1 (either order).
    """

    kind: str
    p0: np.ndarray
    p1: np.ndarray
    curve: object = None
    s0: float = None
    s1: float = None

    def point(self, t):
        t = np.asarray(t, float)
        if self.kind == "line":
            return self.p0 + t[..., None] * (self.p1 - self.p0)
        return self.curve.point_at(self.s0 + t * (self.s1 - self.s0))[0]

    def polyline(self, n=400):
        cache = self.__dict__.setdefault("_polylines", {})
        if n not in cache:
            cache[n] = self.point(np.linspace(0.0, 1.0, 2 if self.kind == "line" else n))
        return cache[n]


@dataclass
class LocalGBReport:
    angles: list
    angle_sum: float
    boundary: float
    area: float
    interior_sigma: float
    residual: float
    error: float
    budget: float
    passed: bool
    singular_vertices: list

    def to_dict(self):
        return dict(self.__dict__)


def _locate_on_curves(sset, p, tol):
    """(curve index, parameter) of the point of Sigma at p, or None if none lies within tol."""
    hit = nearest_on_sigma(sset, p)
    if hit is None or hit[2] > tol:
        return None
    return hit[0], hit[1]


def _winding_inside(poly, q, eps):
    """Points q (m, 2) strictly inside the closed polygon (crossing number), and away from it by eps."""
    a, b = poly, np.roll(poly, -1, 0)
    x, y = q[:, 0:1], q[:, 1:2]
    cond = (a[None, :, 1] > y) != (b[None, :, 1] > y)
    xs = a[None, :, 0] + (y - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / np.where(
        b[None, :, 1] == a[None, :, 1], 1.0, b[None, :, 1] - a[None, :, 1])
    inside = (np.sum(cond & (x < xs), -1) % 2) == 1
    seg = b - a
    rel = q[:, None, :] - a[None]
    t = np.clip(np.sum(rel * seg, -1) / np.maximum(np.sum(seg * seg, -1), 1e-300), 0, 1)
    dist = np.min(np.linalg.norm(rel - t[..., None] * seg, axis=-1), -1)
    return inside & (dist > eps)


def _into_window(dom, q, poly):
    """On a torus, move points q (m, 2) to the periodic image in the window starting at the polygon's corner."""
    if not dom.compact:
        return q
    lo = poly.min(axis=0)
    per = np.array(dom.periods)
    return q - per * np.floor((q - lo) / per)


def _graded(breaks, panels, levels=10):
    """Panel boundaries on [breaks[0], breaks[-1]], uniform plus geometric grading at every break."""
    out = []
    for x, y in zip(breaks[:-1], breaks[1:]):
        h = y - x
        pts = list(np.linspace(x, y, panels + 1))
        first = h / panels
        pts += [x + first * 2.0**-k for k in range(1, levels)] + [y - first * 2.0**-k for k in range(1, levels)]
        out.append(np.unique(pts))
    return np.unique(np.concatenate(out))


class TriangleIntegrator:
    """Quadrature over a curvilinear triangle split by Sigma (scanlines in u, outer rule in v)."""

    samples = 24

    def __init__(self, view, edges, sset, nodes=8, panels=4):
        self.view = view
        self.edges = edges
        self.sset = sset
        self.nodes = nodes
        self.panels = panels
        self.poly = np.concatenate([e.polyline()[:-1] for e in edges])
        self.scale = float(np.max(np.ptp(self.poly, axis=0)))
        self.tol = 1e-13 * max(1.0, self.scale)

    def _lam(self, u, v):
        return self.view.lam(u, v)

    def _sigma_u(self, u, v):
        """Newton in u onto Sigma along the scanline."""
        for _ in range(40):
            j = self.view.lam_jet(u, v, 1)
            du = j.value / np.where(j.coef[..., 1] == 0, 1.0, j.coef[..., 1])
            u = u - du
            if np.all(np.abs(du) < self.tol):
                break
        return u

    def crossings(self, v):
        """Sorted u-values where the scanline v meets the boundary."""
        xs = []
        for e in self.edges:
            if e.kind == "line":
                (u0, v0), (u1, v1) = e.p0, e.p1
                if v1 != v0 and min(v0, v1) <= v <= max(v0, v1):
                    xs.append(u0 + (v - v0) * (u1 - u0) / (v1 - v0))
            else:
                pl = e.polyline()
                k = np.nonzero((pl[:-1, 1] - v) * (pl[1:, 1] - v) <= 0)[0]
                for i in k:
                    a, b = pl[i], pl[i + 1]
                    if a[1] == b[1]:
                        continue
                    u0 = a[0] + (v - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                    xs.append(float(self._sigma_u(np.array(u0), np.array(v))))
        xs = np.sort(np.array(xs))
        # merge duplicates at vertices shared by two edges
        keep = np.concatenate([[True], np.diff(xs) > 1e-12 * max(1.0, self.scale)]) if len(xs) else xs
        xs = xs[keep] if len(xs) else xs
        return xs

    def _roots(self, segs):
        """Zeros of lambda inside the scanline segments (rows u0, u1, v): list of lists.

        Sign changes between samples are refined by a bisection
        that runs on all brackets at once.
        """
        m = self.samples
        u0, u1, v = segs[:, 0:1], segs[:, 1:2], segs[:, 2:3]
        # samples reach to within 1e-7 of the ends (which may lie on Sigma)
        us = u0 + (u1 - u0) * np.linspace(1e-7, 1 - 1e-7, m)
        lam = self._lam(us, np.broadcast_to(v, us.shape))
        row, col = np.nonzero(np.sign(lam[:, :-1]) * np.sign(lam[:, 1:]) < 0)
        a, b = us[row, col], us[row, col + 1]
        vv = segs[row, 2]
        pos = lam[row, col] > 0
        for _ in range(60):
            c = 0.5 * (a + b)
            same = (self._lam(c, vv) > 0) == pos
            a, b = np.where(same, c, a), np.where(same, b, c)
        roots = [[] for _ in range(len(segs))]
        for r, x in zip(row, 0.5 * (a + b)):
            roots[r].append(x)
        return roots

    def integral(self, vs, ws, n):
        """Sum over scanlines v (weights ws) of the inner n-point integral of sgn(lambda) K lambda du."""
        segs = []
        for v, w in zip(vs, ws):
            xs = self.crossings(v)
            segs += [(a, b, v, w) for a, b in zip(xs[0::2], xs[1::2])]
        if not segs:
            return 0.0
        segs = np.array(segs)
        roots = self._roots(segs[:, :3])
        U, W = [], []
        for (a, b, v, w), r in zip(segs, roots):
            br = np.concatenate([[a], sorted(r), [b]])
            br = np.concatenate([np.linspace(x, y, self.panels + 1)[:-1] for x, y in zip(br[:-1], br[1:])] + [[b]])
            us, wu = breakpoints_nodes(br, n)
            U.append(np.stack([us, np.full(len(us), v)], -1))
            W.append(wu * w)
        U, W = np.concatenate(U), np.concatenate(W)
        return float(np.sum(np.sign(self._lam(U[:, 0], U[:, 1])) * self.view.klam(U[:, 0], U[:, 1]) * W))

    def v_breaks(self):
        """Outer breakpoints: vertex levels, Sigma/edge crossings and horizontal tangents of Sigma."""
        vs = [e.p0[1] for e in self.edges]
        lo, hi = min(vs), max(vs)
        if any(e.kind == "sigma" for e in self.edges):
            pl = np.concatenate([e.polyline() for e in self.edges if e.kind == "sigma"])
            lo, hi = min(lo, pl[:, 1].min()), max(hi, pl[:, 1].max())
        pts = list(vs)
        def at(m):
            return _into_window(self.view.domain, c.point_at(np.array([m]))[0], self.poly)[0]

        for c in (self.sset.curves if self.sset else []):
            P = _into_window(self.view.domain, c.points, self.poly)
            # horizontal tangents of Sigma: zeros of d lambda / du along the curve
            gu = area_density(self.view, P[:, 0], P[:, 1])[1][:, 0]
            for k in np.nonzero(gu[:-1] * gu[1:] < 0)[0]:
                a, b, fa = c.s[k], c.s[k + 1], gu[k]
                for _ in range(60):
                    m = 0.5 * (a + b)
                    q = c.point_at(np.array([m]))[0]
                    fm = area_density(self.view, q[:, 0], q[:, 1])[1][0, 0]
                    if (fm > 0) == (fa > 0):
                        a, fa = m, fm
                    else:
                        b = m
                pts.append(float(at(0.5 * (a + b))[1]))
            # crossings with straight edges
            for e in self.edges:
                if e.kind != "line":
                    continue
                d = e.p1 - e.p0
                nrm = np.array([-d[1], d[0]])
                f = (P - e.p0) @ nrm
                for k in np.nonzero(f[:-1] * f[1:] < 0)[0]:
                    a, b, fa = c.s[k], c.s[k + 1], f[k]
                    for _ in range(60):
                        m = 0.5 * (a + b)
                        fm = (at(m) - e.p0) @ nrm
                        if (fm > 0) == (fa > 0):
                            a, fa = m, fm
                        else:
                            b = m
                    pts.append(float(at(0.5 * (a + b))[1]))
        for e in self.edges:
            if e.kind == "sigma":
                pl = e.polyline()
                k = int(np.argmin(pl[:, 1])), int(np.argmax(pl[:, 1]))
                pts += [pl[k[0], 1], pl[k[1], 1]]
        pts = np.array([p for p in pts if lo <= p <= hi] + [lo, hi])
        pts = np.unique(np.round(pts, 14))
        return pts

    def area(self):
        """(integral of K dA over the triangle, error estimate)."""
        breaks = _graded(self.v_breaks(), self.panels)
        res = []
        for n in (self.nodes, max(2, self.nodes // 2)):
            vs, ws = breakpoints_nodes(breaks, n)
            res.append(self.integral(vs, ws, n))
        return res[0], abs(res[0] - res[1])


def _edge_kappa(view, e, nodes, panels, min_speed=0.0):
    """(integral of kappa-tilde_g dtau along a straight edge, error): breaks where it crosses Sigma.

    An edge that crosses Sigma in a null direction (|psi(d)| <= min_speed)
    is not admissible: its image has a cusp there.
    """
    from .errors import NotAdmissible

    d = e.p1 - e.p0
    m = 64
    t = (np.arange(m) + 0.5) / m
    pts = e.point(t)
    lam = view.lam(pts[:, 0], pts[:, 1])
    breaks = [0.0, 1.0]
    for k in np.nonzero(np.sign(lam[:-1]) * np.sign(lam[1:]) < 0)[0]:
        a, b, fa = t[k], t[k + 1], lam[k]
        for _ in range(60):
            c = 0.5 * (a + b)
            p = e.point(np.array(c))
            fc = float(view.lam(p[0], p[1]))
            if (fc > 0) == (fa > 0):
                a, fa = c, fc
            else:
                b = c
        c = 0.5 * (a + b)
        P = view.psi_matrix(*e.point(np.array(c)))
        if np.linalg.norm(P @ d) <= min_speed * np.linalg.norm(d):
            raise NotAdmissible("edge from %s to %s crosses Sigma in the null direction"
                                % (tuple(e.p0), tuple(e.p1)))
        breaks.append(c)
    breaks = _graded(np.unique(breaks), panels)
    out = []
    for n in (nodes, max(2, nodes // 2)):
        ts, ws = breakpoints_nodes(breaks, n)
        p = e.point(ts)
        dp = np.broadcast_to(d, p.shape)
        _, kt, speed = geodesic_curvature(view, p, dp, np.zeros_like(p))
        out.append(float(np.sum(kt * speed * ws)))
    return out[0], abs(out[0] - out[1])


def _edge_direction(e, at_start):
    """Unit tangent of the edge leaving the vertex at its start (or at its end)."""
    if e.kind == "line":
        d = e.p1 - e.p0
        d = d if at_start else -d
        return d / np.linalg.norm(d)
    s_v, s_o = (e.s0, e.s1) if at_start else (e.s1, e.s0)
    _, dp = e.curve.point_at(np.array([s_v]))
    d = dp[0] * np.sign(s_o - s_v)
    return d / np.linalg.norm(d)


def triangle_from_spec(view, spec, sset=None, n=129):
    """Edges from {"vertices": [[u, v] x 3], "edges": ["line" | "sigma", ...]} (edge i joins vertex i to i + 1).

    Vertices are reordered counter-clockwise when needed.
    """
    from .errors import NotAdmissible

    V = [np.asarray(p, float) for p in spec["vertices"]]
    kinds = list(spec.get("edges", ["line"] * 3))
    if len(V) != 3 or len(kinds) != 3:
        raise NotAdmissible("a triangle needs three vertices and three edges")
    area = (V[1] - V[0])[0] * (V[2] - V[0])[1] - (V[1] - V[0])[1] * (V[2] - V[0])[0]
    if area < 0:
        V = [V[0], V[2], V[1]]
        kinds = [kinds[2], kinds[1], kinds[0]]
    if "sigma" in kinds and sset is None:
        sset = analyze(view, n)
    edges = []
    for i, kind in enumerate(kinds):
        a, b = V[i], V[(i + 1) % 3]
        if kind == "line":
            edges.append(Edge("line", a, b))
        elif kind == "sigma":
            tol = 1e-7 * max(1.0, view.domain.scale)
            la, lb = _locate_on_curves(sset, a, tol), _locate_on_curves(sset, b, tol)
            if la is None or lb is None or la[0] != lb[0]:
                raise NotAdmissible("edge %d is not a piece of one traced singular curve" % i)
            edges.append(Edge("sigma", a, b, sset.curves[la[0]], la[1], lb[1]))
        else:
            raise NotAdmissible("unknown edge kind %r" % kind)
    return edges, sset


def verify_local_GB(view, triangle, sset=None, n=129, nodes=8, panels=4, tol=None):
    """Residual of the local Gauss-Bonnet formula on an admissible triangle.

    ``triangle`` is a spec dict (see :func:`triangle_from_spec`).  The
    residual is angle sum - pi - (boundary term + area term + 2 * interior
    singular curvature).
    """
    from .errors import NotAdmissible
    from .sectors import ray_initial_vector

    tol = tol or Tolerances()
    edges, sset = triangle_from_spec(view, triangle, sset, n)
    if sset is None:
        sset = analyze(view, n, tol)
    poly = np.concatenate([e.polyline()[:-1] for e in edges])
    scale = float(np.max(np.ptp(poly, axis=0)))
    for v in sset.vertices:
        if v.kind == "peak" and _winding_inside(poly, v.point[None], 1e-9 * scale)[0]:
            raise NotAdmissible("peak %s lies inside the triangle" % (tuple(v.point),))
    lam_scale = sset.scales.lam
    peaks = [v for v in sset.vertices if v.kind == "peak"]
    on_peak = [i for i, e in enumerate(edges)
               if any(np.linalg.norm(view.domain.delta(e.p0, v.point)) < 1e-7 * max(1.0, scale) for v in peaks)]
    if len(on_peak) > 1:
        raise NotAdmissible("more than one vertex is a peak")
    for i in range(3):
        # g-interior angle (flat chart metric): turn from the outgoing to the incoming edge, ccw
        a, b = _edge_direction(edges[i], True), _edge_direction(edges[(i - 1) % 3], False)
        ang = math.atan2(a[0] * b[1] - a[1] * b[0], a @ b) % (2 * math.pi)
        if not 0.0 < ang < math.pi:
            raise NotAdmissible("interior angle at vertex %s is %.6g, not in (0, pi)" % (tuple(edges[i].p0), ang))
    # vertex angles
    angles, singular = [], []
    for i in range(3):
        A = edges[i].p0
        d_out = _edge_direction(edges[i], True)          # towards the next vertex
        d_in = _edge_direction(edges[(i - 1) % 3], False)  # towards the previous vertex
        is_sing = abs(float(view.lam(A[0], A[1]))) <= 1e3 * tol.on_curve * lam_scale
        singular.append(bool(is_sing))
        ref = view.reference_axis(np.array(A[0]), np.array(A[1]))
        if is_sing:
            psi = []
            for e, d, start in ((edges[i], d_out, True), (edges[(i - 1) % 3], d_in, False)):
                if e.kind == "sigma":
                    # initial vector along the singular arc: limit of psi(tangent) approaching A
                    s_v, s_o = (e.s0, e.s1) if start else (e.s1, e.s0)
                    ss = s_v + (s_o - s_v) * 2.0 ** -np.arange(8, 20)
                    pts, dps = e.curve.point_at(ss)
                    dps = dps * np.sign(s_o - s_v)
                    P = view.psi_matrix(pts[:, 0], pts[:, 1], ref=ref)
                    X = np.einsum("...ij,...j->...i", P, dps)
                    X /= np.linalg.norm(X, axis=-1, keepdims=True)
                    psi.append(2 * X[-1] - X[-2])
                else:
                    psi.append(ray_initial_vector(view, A, d, ref))
            angles.append(math.pi if psi[0] @ psi[1] < 0 else 0.0)
        else:
            P = view.psi_matrix(np.array(A[0]), np.array(A[1]))
            I = P.T @ P
            c = (d_out @ I @ d_in) / math.sqrt((d_out @ I @ d_out) * (d_in @ I @ d_in))
            angles.append(math.acos(max(-1.0, min(1.0, c))))
    # boundary term
    bnd, bnd_err = 0.0, 0.0
    for e in edges:
        if e.kind == "line":
            val, err = _edge_kappa(view, e, nodes, panels, 1e3 * tol.nondeg * sset.scales.psi)
        else:
            val, err = curve_density_integral(view, e.curve, e.s0, e.s1, nodes,
                                              abs(e.s1 - e.s0) / panels)
        bnd += val
        bnd_err += err
    # area term
    area, area_err = TriangleIntegrator(view, edges, sset, nodes, panels).area()
    # singular curvature on Sigma inside the triangle
    interior, int_err = 0.0, 0.0
    eps = 1e-13 * scale
    for c in sset.curves:
        own = [e for e in edges if e.kind == "sigma" and e.curve is c]
        ss = np.linspace(0.0, c.length, max(400, 8 * len(c.s)))
        pts = _into_window(view.domain, c.point_at(ss)[0], poly)
        ins = _winding_inside(poly, pts, eps)
        for e in own:
            lo_s, hi_s = sorted((e.s0, e.s1))
            ins &= ~((ss >= lo_s) & (ss <= hi_s))
        if not ins.any():
            continue
        # maximal runs of inside samples, ends refined by bisection
        edges_k = np.nonzero(np.diff(ins.astype(int)))[0]

        def refine(a, b, inside_at_a):
            for _ in range(60):
                m = 0.5 * (a + b)
                q = _into_window(view.domain, c.point_at(np.array([m]))[0], poly)
                if _winding_inside(poly, q, eps)[0] == inside_at_a:
                    a = m
                else:
                    b = m
            return 0.5 * (a + b)

        starts = [0.0] if ins[0] else []
        stops = []
        for k in edges_k:
            x = refine(ss[k], ss[k + 1], bool(ins[k]))
            (stops if ins[k] else starts).append(x)
        if ins[-1]:
            stops.append(c.length)
        for a, b in zip(starts, stops):
            val, err = curve_density_integral(view, c, a, b, nodes, (b - a) / panels)
            interior += val
            int_err += err
    lhs = sum(angles) - math.pi
    rhs = bnd + area + 2 * interior
    err = bnd_err + area_err + 2 * int_err
    budget = max(1e-4, 10 * err)
    residual = lhs - rhs
    return LocalGBReport(angles, sum(angles), bnd, area, interior, residual, err, budget,
                         abs(residual) < budget, singular)

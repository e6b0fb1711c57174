"""The singular set: signed area density, tracing of {lambda = 0}, null
directions and classification of singular points.

Conventions.  Along a traced curve the parameter runs in the direction of the
field ``tau = J grad(lambda) / |grad(lambda)|`` with ``J(a, b) = (-b, a)``, so
M+ lies on the left.  The transversality function is
``T = det(tau, eta) = -dlambda(eta) / |grad(lambda)|`` for a unit null vector
field ``eta``; it vanishes exactly where the null direction is tangent to the
singular curve.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import jet as J
from .errors import NewtonDivergence, RankZero, ResolutionError

VERDICTS = ("A2", "A3", "NonDegeneratePeak", "DegeneratePeak", "IsolatedPeak", "Unclassified")
PEAK_VERDICTS = ("A3", "NonDegeneratePeak", "DegeneratePeak", "IsolatedPeak")


@dataclass
class Tolerances:
    """Thresholds for the open/closed conditions of the classification.

    ``nondeg`` is relative to the grid median of |dlambda|, ``rank`` to the
    grid median of the norm of the psi matrix and ``on_curve`` to the largest
    |lambda| on the grid.  The others are absolute.
    """

    nondeg: float = 1e-6
    transv: float = 1e-6
    a3: float = 1e-6
    rank: float = 1e-8
    on_curve: float = 1e-10
    angle: float = 1e-6

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class Scales:
    cell: float
    length: float
    lam: float
    grad: float
    psi: float

    @classmethod
    def from_grid(cls, view, n):
        us, vs = view.domain.grid(n)
        U, V = np.meshgrid(us, vs)
        loc = view.local(U, V, 1)
        lam = loc.lam
        g = np.hypot(lam.coef[..., 1], lam.coef[..., 2])
        P = np.stack([[x.value for x in row] for row in loc.P])
        pn = np.sqrt(np.sum(P * P, axis=(0, 1)))
        cell = min(us[1] - us[0], vs[1] - vs[0])
        pos = g[g > 0]
        return cls(
            cell=float(cell),
            length=float(view.domain.scale),
            lam=float(np.max(np.abs(lam.value))) or 1.0,
            grad=float(np.median(pos)) if pos.size else 1.0,
            psi=float(np.median(pn)) or 1.0,
        )


# pointwise quantities -----------------------------------------------------


def _pt(u, v):
    return np.asarray(u, float), np.asarray(v, float)


def area_density(view, u, v):
    """(lambda, dlambda) at the given point(s); dlambda has a trailing axis of length 2."""
    j = view.lam_jet(*_pt(u, v), 1)
    return j.value, j.grad()


def _select(mask, a, b):
    return J.Jet2._make(np.where(mask[..., None], a.coef, b.coef), a.order)


def null_field(P):
    """Unit vector field spanning the kernel of the psi matrix on Sigma, as order-k jets.

    Built from the first fundamental form (E, F, G): (G, -F) or (-F, E),
    whichever has the larger diagonal entry, then normalized.  Both are
    kernel vectors wherever E G - F^2 = 0 and the field is smooth nearby.
    """
    E = P[0][0] * P[0][0] + P[1][0] * P[1][0]
    F = P[0][0] * P[0][1] + P[1][0] * P[1][1]
    G = P[0][1] * P[0][1] + P[1][1] * P[1][1]
    big = G.value >= E.value
    a = _select(big, G, -F)
    b = _select(big, -F, E)
    n = J.sqrt(a * a + b * b)
    return a / n, b / n


@dataclass
class CurveFrame:
    """Pointwise data along Sigma for the direction field tau (vectorized)."""

    lam: np.ndarray
    grad: np.ndarray
    tau: np.ndarray
    eta: np.ndarray
    T: np.ndarray
    dTds: np.ndarray
    branch: np.ndarray  # which formula of null_field was used (for the FD cross-check)


def curve_frame(view, u, v, branch=None):
    """tau, a unit null vector eta, T = det(tau, eta) and dT/ds at points on Sigma."""
    u, v = np.broadcast_arrays(*_pt(u, v))
    loc = view.local(u, v, 2)
    P = [[x.truncate(1) for x in row] for row in loc.P]
    if branch is not None:
        E = P[0][0] * P[0][0] + P[1][0] * P[1][0]
        F = P[0][0] * P[0][1] + P[1][0] * P[1][1]
        G = P[0][1] * P[0][1] + P[1][1] * P[1][1]
        big = np.broadcast_to(branch, u.shape)
        a = _select(big, G, -F)
        b = _select(big, -F, E)
        n = J.sqrt(a * a + b * b)
        eu, ev = a / n, b / n
    else:
        E = P[0][0].value ** 2 + P[1][0].value ** 2
        G = P[0][1].value ** 2 + P[1][1].value ** 2
        big = G >= E
        eu, ev = null_field(P)
    lu, lv = loc.lam.diff(0), loc.lam.diff(1)
    gn = J.sqrt(lu * lu + lv * lv)
    T = -(lu * eu + lv * ev) / gn
    grad = np.stack([lu.value, lv.value], -1)
    tau = np.stack([-lv.value, lu.value], -1) / gn.value[..., None]
    dTds = T.coef[..., 1] * tau[..., 0] + T.coef[..., 2] * tau[..., 1]
    eta = np.stack([eu.value, ev.value], -1)
    return CurveFrame(loc.lam.value, grad, tau, eta, T.value, dTds, big)


def transversality_fd(view, p, tau, branch, h=1e-4):
    """Central difference of T along tau at p, with the null-field formula pinned."""
    p = np.asarray(p, float)
    q = np.stack([p + h * tau, p - h * tau])
    cf = curve_frame(view, q[:, 0], q[:, 1], branch=np.array([branch, branch]))
    return (cf.T[0] - cf.T[1]) / (2 * h)


def psi_singular_values(view, u, v):
    return np.linalg.svd(view.psi_matrix(*_pt(u, v)), compute_uv=False)


def null_direction(view, u, v, tangent=None, scales=None, tol=None):
    """Unit kernel vector of the psi matrix at a point of Sigma.

    Oriented so that det(tangent, eta) > 0 when a curve tangent is given,
    otherwise so that its first nonzero component is positive.
    """
    tol = tol or Tolerances()
    P = view.psi_matrix(*_pt(u, v))
    _, s, vt = np.linalg.svd(P)
    ref = scales.psi if scales is not None else max(1.0, float(s[0]))
    if s[0] < tol.rank * ref:
        raise RankZero((float(u), float(v)))
    eta = vt[-1]
    if tangent is not None:
        if tangent[0] * eta[1] - tangent[1] * eta[0] < 0:
            eta = -eta
    else:
        k = 0 if abs(eta[0]) > 1e-14 else 1
        if eta[k] < 0:
            eta = -eta
    return eta


# tracing --------------------------------------------------------------------


class _Degenerate(Exception):
    pass


@dataclass
class SingularCurve:
    """A traced arc of Sigma, parametrized by chord length ``s`` in the (u, v) plane.

    Samples lie on Sigma to the on-curve tolerance.  ``start``/``end`` are
    tags: "boundary", "loop" or "peak" (the peak index is filled in by
    :func:`analyze`).  Per-sample data (eta, T, kappa_s, ...) are set by
    :meth:`annotate`.
    """

    points: np.ndarray
    s: np.ndarray
    tangents: np.ndarray
    lam: np.ndarray
    closed: bool
    start: dict
    end: dict
    view: object = field(repr=False, default=None)
    tol_lam: float = 0.0
    eta: np.ndarray = None
    T: np.ndarray = None
    dTds: np.ndarray = None
    dlam_eta: np.ndarray = None
    kappa_s: np.ndarray = None
    dtau_ds: np.ndarray = None

    @property
    def length(self):
        return float(self.s[-1])

    def __len__(self):
        return len(self.s)

    def _hermite(self, s):
        s = np.asarray(s, float)
        if self.closed:
            s = np.mod(s, self.length)
        s = np.clip(s, 0.0, self.length)
        k = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        d = self.s[k + 1] - self.s[k]
        x = ((s - self.s[k]) / d)[..., None]
        p0, p1 = self.points[k], self.points[k + 1]
        t0, t1 = self.tangents[k] * d[..., None], self.tangents[k + 1] * d[..., None]
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        p = h00 * p0 + h10 * t0 + h01 * p1 + h11 * t1
        dp = ((6 * x**2 - 6 * x) * p0 + (3 * x**2 - 4 * x + 1) * t0
              + (-6 * x**2 + 6 * x) * p1 + (3 * x**2 - 2 * x) * t1) / d[..., None]
        return p, dp

    def point_at(self, s, correct=True):
        """(points on Sigma, d point/ds) at parameter values ``s``.

        Hermite interpolation between samples followed by Newton projection
        onto Sigma.  The speed |d point/ds| is close to 1.
        """
        p, dp = self._hermite(s)
        if correct and self.view is not None:
            p = project_to_sigma(self.view, p, self.tol_lam)
        return p, dp

    def annotate(self, view=None):
        """Fill eta, T, dT/ds and dlambda(eta) per sample.

        ``T`` and ``dTds`` use a null field oriented continuously along the
        curve (so T changes sign at an A3 point), while the stored ``eta`` is
        flipped per sample so that {tangent, eta} is positively oriented.
        """
        view = view or self.view
        cf = curve_frame(view, self.points[:, 0], self.points[:, 1])
        sgn = np.ones(len(cf.T))
        for k in range(1, len(sgn)):
            if (cf.eta[k] @ cf.eta[k - 1]) * sgn[k - 1] < 0:
                sgn[k] = -1.0
        T = cf.T * sgn
        if np.sum(T) < 0:
            sgn, T = -sgn, -T
        self.T = T
        self.dTds = cf.dTds * sgn
        pos = np.where(T < 0, -1.0, 1.0)
        self.eta = cf.eta * (sgn * pos)[:, None]
        self.dlam_eta = np.sum(cf.grad * self.eta, -1)
        return self

    def reversed(self):
        """The same arc traversed backwards (tangents and eta flip)."""
        L = self.length
        out = SingularCurve(
            points=self.points[::-1].copy(), s=(L - self.s[::-1]).copy(),
            tangents=-self.tangents[::-1], lam=self.lam[::-1].copy(), closed=self.closed,
            start=dict(self.end), end=dict(self.start), view=self.view, tol_lam=self.tol_lam,
        )
        return out


def project_to_sigma(view, p, tol_lam, iters=12):
    """Vectorized Newton projection p <- p - lambda grad / |grad|^2."""
    p = np.array(p, float)
    for _ in range(iters):
        lam, g = area_density(view, p[..., 0], p[..., 1])
        gg = np.sum(g * g, -1)
        if np.all(np.abs(lam) <= tol_lam):
            break
        step = np.where(gg > 0, lam / np.where(gg > 0, gg, 1.0), 0.0)
        p = p - step[..., None] * g
    return p


def _perp(g):
    return np.array([-g[1], g[0]])


class Tracer:
    """Predictor-corrector continuation of {lambda = 0}.

    Predictor: a step along tau.  Corrector: Newton along grad(lambda).  The
    step is capped by the grid cell, by 0.5 |grad| / |Hessian estimate| (so
    steps shrink geometrically when approaching a degenerate point) and is
    halved whenever the tangent turns by more than ``max_turn`` degrees.
    """

    max_turn = 10.0

    def __init__(self, view, scales, tol, max_steps=200000):
        self.view = view
        self.dom = view.domain
        self.h_max = scales.cell
        self.tol_lam = tol.on_curve * scales.lam
        self.tol_grad = tol.nondeg * scales.grad
        self.h_min = 1e-13 * scales.length
        self.max_steps = max_steps

    def eval(self, p):
        j = self.view.lam_jet(np.array(p[0]), np.array(p[1]), 1)
        return float(j.value), np.array([float(j.coef[1]), float(j.coef[2])])

    def newton(self, p, lam=None, g=None, iters=10):
        p = np.array(p, float)
        for _ in range(iters):
            if lam is None:
                lam, g = self.eval(p)
            gg = g @ g
            if gg < self.tol_grad**2:
                raise _Degenerate()
            if abs(lam) <= self.tol_lam:
                return p, lam, g
            p = p - lam * g / gg
            lam = None
        lam, g = self.eval(p)
        if abs(lam) <= self.tol_lam:
            return p, lam, g
        raise NewtonDivergence(tuple(p))

    def _boundary_newton(self, q, axis, value):
        """1-D Newton on the boundary line {coordinate ``axis`` = value}."""
        q = np.array(q, float)
        q[axis] = value
        free = 1 - axis
        lo, hi = (self.dom.u_range, self.dom.v_range)[free]
        for _ in range(30):
            lam, g = self.eval(q)
            if abs(lam) <= self.tol_lam:
                return q, lam, g
            if abs(g[free]) < self.tol_grad:
                break
            q[free] = min(max(q[free] - lam / g[free], lo), hi)
        raise NewtonDivergence(tuple(q))

    def _exit(self, p, d):
        """Largest a in (0, 1] with p + a d inside the rectangle, and the boundary hit."""
        a, hit = 1.0, None
        for axis, (lo, hi) in enumerate((self.dom.u_range, self.dom.v_range)):
            x = p[axis] + d[axis]
            if x > hi:
                b = (hi - p[axis]) / d[axis]
                if b < a:
                    a, hit = b, (axis, hi)
            elif x < lo:
                b = (lo - p[axis]) / d[axis]
                if b < a:
                    a, hit = b, (axis, lo)
        return max(a, 0.0), hit

    def march(self, p0, sigma, start=None):
        """Follow the branch from p0 in direction sigma * tau.  Returns (points, end tag)."""
        lam, g = self.eval(p0)
        p = np.array(p0, float)
        pts = [p.copy()]
        h = 0.25 * self.h_max
        G_est = 0.0
        travelled = 0.0
        start = np.array(p0 if start is None else start, float)
        t_start = sigma * _perp(g) / np.linalg.norm(g)
        for _ in range(self.max_steps):
            gn = np.linalg.norm(g)
            t = sigma * _perp(g) / gn
            hh = min(h, self.h_max)
            if G_est > 0:
                hh = min(hh, 0.5 * gn / G_est)
            while True:
                if hh < self.h_min:
                    raise NewtonDivergence(tuple(p))
                hit = None
                d = hh * t
                if not self.dom.compact:
                    a, hit = self._exit(p, d)
                    if hit is not None:
                        d = a * d
                q_pred = p + d
                try:
                    if hit is not None:
                        q, lq, gq = self._boundary_newton(q_pred, *hit)
                    else:
                        q, lq, gq = self.newton(q_pred)
                        if not self.dom.compact and not self.dom.contains(q[0], q[1]):
                            a, hit = self._exit(p, q - p)
                            if hit is None:
                                raise NewtonDivergence(tuple(q))
                            q, lq, gq = self._boundary_newton(p + a * (q - p), *hit)
                except _Degenerate:
                    if gn < 1e3 * self.tol_grad or hh < 1e-9 * self.h_max:
                        return pts, {"kind": "degenerate"}
                    hh *= 0.5
                    continue
                except NewtonDivergence:
                    hh *= 0.5
                    continue
                step = np.linalg.norm(q - p)
                if step == 0.0:
                    if hit is not None:
                        return pts, {"kind": "boundary"}
                    hh *= 0.5
                    continue
                tq = sigma * _perp(gq) / np.linalg.norm(gq)
                cos_turn = float(np.clip(t @ tq, -1, 1))
                if math.degrees(math.acos(cos_turn)) > self.max_turn or np.linalg.norm(q - q_pred) > 0.5 * hh:
                    hh *= 0.5
                    continue
                break
            # loop closure against the start point (nearest periodic image)
            if travelled > 2 * self.h_max:
                s0 = p + self.dom.delta(p, start)
                seg = q - p
                a = float(np.clip((s0 - p) @ seg / (seg @ seg), 0.0, 1.0))
                dist = np.linalg.norm(p + a * seg - s0)
                sag = 0.5 * step * np.linalg.norm(tq - t)  # chord sag is at most step * turn / 8
                if 0.0 < a and dist < max(1e-3 * step + sag, 1e3 * self.tol_lam / gn) and tq @ t_start > 0:
                    pts.append(s0)
                    return pts, {"kind": "loop"}
            G_est = np.linalg.norm(gq - g) / step
            travelled += step
            p, lam, g = q, lq, gq
            pts.append(p.copy())
            if hit is not None:
                return pts, {"kind": "boundary"}
            if np.linalg.norm(g) < self.tol_grad:
                return pts, {"kind": "degenerate"}
            h = min(self.h_max, 1.5 * hh)
        raise ResolutionError("branch did not terminate after %d steps" % self.max_steps)

    def trace(self, seed):
        """Trace the whole branch through a seed; returns a SingularCurve (parameter along +tau)."""
        lam, g = self.eval(seed)
        seed, lam, g = self.newton(seed, lam, g)
        fwd, end = self.march(seed, +1.0)
        if end["kind"] == "loop":
            pts, start, closed = fwd, {"kind": "loop"}, True
        else:
            bwd, start = self.march(seed, -1.0)
            pts, closed = bwd[::-1] + fwd[1:], False
        return self.make_curve(np.array(pts), start, end, closed)

    def make_curve(self, pts, start, end, closed):
        lam, grad = area_density(self.view, pts[:, 0], pts[:, 1])
        tang = np.stack([-grad[:, 1], grad[:, 0]], -1)
        tang /= np.linalg.norm(tang, axis=-1, keepdims=True)
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=-1))])
        return SingularCurve(points=pts, s=s, tangents=tang, lam=lam, closed=closed,
                             start=start, end=end, view=self.view, tol_lam=self.tol_lam)


def _segment_distance(q, pts, dom):
    """Distance from points q (m, 2) to the polyline pts (n, 2), using nearest periodic images."""
    if len(pts) < 2:
        return np.linalg.norm(dom.delta(pts[0], q), axis=-1)
    a = pts[:-1]
    seg = pts[1:] - a
    rel = dom.delta(a[None, :, :], q[:, None, :])
    ll = np.maximum(np.sum(seg * seg, -1), 1e-300)
    t = np.clip(np.sum(rel * seg[None], -1) / ll[None], 0.0, 1.0)
    d = rel - t[..., None] * seg[None]
    return np.min(np.linalg.norm(d, axis=-1), axis=1)


def grid_seeds(view, n):
    """Bisected sign changes of lambda along the edges of the n x n sampling grid."""
    us, vs = view.domain.grid(n)
    U, V = np.meshgrid(us, vs)
    L = view.lam(U, V)
    pos = L > 0
    pairs = []
    if view.domain.compact:
        pu, pv = view.domain.periods
        U2 = np.concatenate([U, U[:, :1] + pu], axis=1)
        V2 = np.concatenate([V, V[:, :1]], axis=1)
        pos2 = np.concatenate([pos, pos[:, :1]], axis=1)
        pairs.append((U2[:, :-1], V2[:, :-1], U2[:, 1:], V2[:, 1:], pos2[:, :-1] != pos2[:, 1:]))
        U3 = np.concatenate([U, U[:1, :]], axis=0)
        V3 = np.concatenate([V, V[:1, :] + pv], axis=0)
        pos3 = np.concatenate([pos, pos[:1, :]], axis=0)
        pairs.append((U3[:-1], V3[:-1], U3[1:], V3[1:], pos3[:-1] != pos3[1:]))
    else:
        pairs.append((U[:, :-1], V[:, :-1], U[:, 1:], V[:, 1:], pos[:, :-1] != pos[:, 1:]))
        pairs.append((U[:-1], V[:-1], U[1:], V[1:], pos[:-1] != pos[1:]))
    a_list, b_list = [], []
    for ua, va, ub, vb, mask in pairs:
        a_list.append(np.stack([ua[mask], va[mask]], -1))
        b_list.append(np.stack([ub[mask], vb[mask]], -1))
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)
    if len(a) == 0:
        return np.zeros((0, 2)), (U, V, L)
    pa = view.lam(a[:, 0], a[:, 1]) > 0
    for _ in range(60):
        m = 0.5 * (a + b)
        pm = view.lam(m[:, 0], m[:, 1]) > 0
        same = pm == pa
        a = np.where(same[:, None], m, a)
        b = np.where(same[:, None], b, m)
    seeds = 0.5 * (a + b)
    order = np.lexsort((seeds[:, 0], seeds[:, 1]))
    return seeds[order], (U, V, L)


def trace_singular_set(view, n=129, scales=None, tol=None):
    """Trace all branches of {lambda = 0} seeded from an n x n grid.

    Returns (curves, degenerate candidate points).  The candidates are
    branch endpoints where |dlambda| fell below tol_nondeg and seeds that
    were already degenerate.
    """
    tol = tol or Tolerances()
    scales = scales or Scales.from_grid(view, n)
    tracer = Tracer(view, scales, tol)
    seeds, _ = grid_seeds(view, n)
    alive = np.ones(len(seeds), bool)
    curves, candidates = [], []
    if len(seeds):
        _, g = area_density(view, seeds[:, 0], seeds[:, 1])
        weak = np.linalg.norm(g, axis=-1) < 1e-3 * scales.grad
        for q in seeds[weak]:
            candidates.append(q)
        alive &= ~weak
    for i in range(len(seeds)):
        if not alive[i]:
            continue
        try:
            c = tracer.trace(seeds[i])
        except _Degenerate:
            candidates.append(seeds[i])
            alive[i] = False
            continue
        curves.append(c)
        for tag, pt in ((c.start, c.points[0]), (c.end, c.points[-1])):
            if tag["kind"] == "degenerate":
                candidates.append(pt)
        rest = np.nonzero(alive)[0]
        d = _segment_distance(seeds[rest], c.points, view.domain)
        alive[rest[d < 0.25 * scales.cell]] = False
        alive[i] = False
    _check_separation(curves, scales, view.domain)
    return curves, candidates


def _check_separation(curves, scales, dom):
    """Two different branches closer than a tenth of a cell away from their ends mean under-resolution."""
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            a, b = curves[i], curves[j]
            inner = a.points[1:-1]
            if len(inner) == 0 or len(b.points) < 2:
                continue
            d = _segment_distance(inner, b.points, dom)
            ends = np.concatenate([a.points[[0, -1]], b.points[[0, -1]]])
            far = np.min(np.linalg.norm(dom.delta(ends[None], inner[:, None]), axis=-1), axis=1) > 3 * scales.cell
            if np.any((d < 0.1 * scales.cell) & far):
                k = np.nonzero((d < 0.1 * scales.cell) & far)[0][0]
                raise ResolutionError(
                    "two branches pass within %.3g of each other near %s; refine the grid"
                    % (d[k], tuple(np.round(inner[k], 6))))


# classification -------------------------------------------------------------


@dataclass
class SingularPointReport:
    """Verdict and evidence for one singular point."""

    point: tuple
    verdict: str
    lam: float
    grad_norm: float
    rank: int
    singular_values: tuple
    transversality: float = None
    dT_ds: float = None
    dT_ds_fd: float = None
    branches: int = None
    branch_counts: tuple = ()
    note: str = ""
    curve: int = None
    s: float = None

    @property
    def is_peak(self):
        return self.verdict in PEAK_VERDICTS

    def to_dict(self):
        d = dict(self.__dict__)
        d["point"] = [float(x) for x in self.point]
        d["singular_values"] = [float(x) for x in self.singular_values]
        d["branch_counts"] = list(self.branch_counts)
        return d


def circle_crossings(view, p, r, n=720, refine=40):
    """Angles in [0, 2 pi) where lambda changes sign on the circle of radius r about p."""
    th = 2 * np.pi * np.arange(n) / n
    lam = view.lam(p[0] + r * np.cos(th), p[1] + r * np.sin(th))
    pos = lam > 0
    k = np.nonzero(pos != np.roll(pos, -1))[0]
    if len(k) == 0:
        return np.zeros(0), lam
    a = th[k]
    b = a + 2 * np.pi / n
    pa = pos[k]
    for _ in range(refine):
        m = 0.5 * (a + b)
        pm = view.lam(p[0] + r * np.cos(m), p[1] + r * np.sin(m)) > 0
        same = pm == pa
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    return np.sort(np.mod(0.5 * (a + b), 2 * np.pi)), lam


def branch_radius(scales):
    return 0.25 * scales.cell


def count_branches(view, p, r):
    """Sign changes of lambda on circles of radius r, r/2 and r/4 about p."""
    counts = tuple(len(circle_crossings(view, p, r * 2.0**-k)[0]) for k in range(3))
    return counts


def refine_critical_point(view, p, scales, iters=60):
    """Newton iteration on grad(lambda) = 0 (pseudo-inverse of the Hessian)."""
    p = np.array(p, float)
    for _ in range(iters):
        j = view.lam_jet(np.array(p[0]), np.array(p[1]), 2)
        g = j.grad()
        H = j.hessian()
        step = np.linalg.lstsq(H, g, rcond=1e-12)[0]
        if np.linalg.norm(step) > 2 * scales.cell:
            step *= 2 * scales.cell / np.linalg.norm(step)
        p = p - step
        if np.linalg.norm(step) < 1e-15 * scales.length:
            break
    return p


def classify(view, p, scales=None, tol=None, n=129):
    """Verdict for a point p of Sigma from the intrinsic criteria.

    Non-degenerate points: A2 when eta is transversal to Sigma, A3 when it is
    tangent and d/ds(det(gamma', eta)) does not vanish, otherwise a
    non-degenerate peak.  Degenerate points: branch count on small circles;
    none means an isolated peak (lambda sign-definite around p).
    """
    tol = tol or Tolerances()
    scales = scales or Scales.from_grid(view, n)
    p = np.asarray(p, float)
    lam, g = area_density(view, p[0], p[1])
    lam, g = float(lam), np.asarray(g, float)
    gn = float(np.linalg.norm(g))
    sv = tuple(float(x) for x in psi_singular_values(view, p[0], p[1]))
    rank = int(sum(x > tol.rank * scales.psi for x in sv))
    rep = SingularPointReport(point=tuple(float(x) for x in p), verdict="Unclassified", lam=lam,
                              grad_norm=gn, rank=rank, singular_values=sv)
    if rank == 0:
        rep.note = "psi vanishes (rank 0)"
        return rep
    if rank == 2:
        rep.note = "psi has full rank: not a singular point"
        return rep
    if gn > tol.nondeg * scales.grad:
        cf = curve_frame(view, p[0], p[1])
        T, dT = float(cf.T), float(cf.dTds)
        rep.transversality = abs(T)
        rep.dT_ds = abs(dT)
        rep.dT_ds_fd = abs(float(transversality_fd(view, p, cf.tau, bool(cf.branch))))
        rep.branches = 2
        if abs(T) > tol.transv:
            rep.verdict = "A2"
        elif abs(dT) > tol.a3:
            rep.verdict = "A3"
        else:
            rep.verdict = "NonDegeneratePeak"
        return rep
    counts = count_branches(view, p, branch_radius(scales))
    rep.branch_counts = counts
    if len(set(counts)) != 1:
        rep.note = "branch count not stable under shrinking radius: %s" % (counts,)
        return rep
    rep.branches = counts[0]
    if counts[0] == 0:
        rep.verdict = "IsolatedPeak"
    elif counts[0] % 2 == 0:
        rep.verdict = "DegeneratePeak"
    else:
        rep.note = "odd branch count %d" % counts[0]
    return rep


def _scan_curve(view, curve, scales, tol):
    """Points on a traced curve where eta becomes tangent: sign changes of T and
    zero minima of |T|, refined by bisection in the curve parameter."""
    T, dT = curve.T, curve.dTds
    # the continuously oriented null field behind T
    eta_c = curve.eta * np.where(
        (curve.tangents[:, 0] * curve.eta[:, 1] - curve.tangents[:, 1] * curve.eta[:, 0]) * T < 0,
        -1.0, 1.0)[:, None]

    def T_at(s, k):
        p, _ = curve.point_at(np.array([s]))
        cf = curve_frame(view, p[:, 0], p[:, 1])
        sg = 1.0 if cf.eta[0] @ eta_c[k] >= 0 else -1.0
        return float(cf.T[0]) * sg, float(cf.dTds[0]) * sg, p[0]

    def bisect(k, which):
        a, b = curve.s[k], curve.s[k + 1]
        fa = (T if which == 0 else dT)[k]
        for _ in range(60):
            m = 0.5 * (a + b)
            fm = T_at(m, k)[which]
            if fm == 0:
                a = b = m
                break
            if (fm > 0) == (fa > 0):
                a, fa = m, fm
            else:
                b = m
        m = 0.5 * (a + b)
        return m, T_at(m, k)

    found = []
    n = len(T)
    for k in range(n - 1):
        if T[k] == 0 or T[k] * T[k + 1] < 0:
            found.append(bisect(k, 0))
        elif dT[k] * dT[k + 1] < 0 and min(abs(T[k]), abs(T[k + 1])) < 0.1:
            m, (Tm, dTm, pm) = bisect(k, 1)
            if abs(Tm) <= tol.transv:
                found.append((m, (Tm, dTm, pm)))
    out = []
    L = curve.length
    for s, (Tm, dTm, pm) in found:
        if any(min(abs(s - s2), L - abs(s - s2) if curve.closed else np.inf) < 1e-9 * scales.length
               for s2, _ in out):
            continue
        out.append((s, pm))
    return out


@dataclass
class Vertex:
    kind: str  # "peak", "boundary" or "unclassified"
    point: np.ndarray
    report: int = None  # index into SingularSet.points


@dataclass
class Arc:
    curve: int
    s0: float
    s1: float
    start: int = None  # vertex index (None: closed loop without vertices)
    end: int = None


@dataclass
class SingularSet:
    view: object
    scales: Scales
    tol: Tolerances
    curves: list
    points: list
    vertices: list
    arcs: list
    grid: int

    @property
    def peaks(self):
        return [r for r in self.points if r.is_peak]

    @property
    def unclassified(self):
        return [r for r in self.points if r.verdict == "Unclassified"]

    def incident(self, vertex):
        """(arc index, end) pairs with end 0 for the arc start and 1 for its end."""
        out = []
        for i, a in enumerate(self.arcs):
            if a.start == vertex:
                out.append((i, 0))
            if a.end == vertex:
                out.append((i, 1))
        return out

    def m(self, report_index):
        for vi, v in enumerate(self.vertices):
            if v.report == report_index:
                return len(self.incident(vi)) // 2
        return 0


def nearest_on_sigma(sset, p, window=None):
    """(curve index, parameter, distance) of the point of the traced Sigma nearest to p.

    The nearest sample is refined by golden-section search of the distance
    over the two adjacent sample intervals.  Returns None when Sigma has no
    curves or the nearest sample is farther than ``window`` (default two
    grid cells).
    """
    p = np.asarray(p, float)
    window = 2 * sset.scales.cell if window is None else window
    dom = sset.view.domain
    best = None
    for ci, c in enumerate(sset.curves):
        d = np.linalg.norm(dom.delta(p, c.points), axis=-1)
        k = int(np.argmin(d))
        if best is None or d[k] < best[0]:
            best = (d[k], ci, k)
    if best is None or best[0] > window:
        return None
    _, ci, k = best
    c = sset.curves[ci]

    def dist(s):
        return float(np.linalg.norm(dom.delta(p, c.point_at(np.array([s]))[0][0])))

    a, b = c.s[max(k - 1, 0)], c.s[min(k + 1, len(c.s) - 1)]
    g = (np.sqrt(5.0) - 1) / 2
    x1, x2 = b - g * (b - a), a + g * (b - a)
    d1, d2 = dist(x1), dist(x2)
    for _ in range(60):
        if d1 < d2:
            b, x2, d2 = x2, x1, d1
            x1 = b - g * (b - a)
            d1 = dist(x1)
        else:
            a, x1, d1 = x1, x2, d2
            x2 = a + g * (b - a)
            d2 = dist(x2)
    s = 0.5 * (a + b)
    return ci, float(s), dist(s)


def _cluster(points, radius, dom):
    clusters = []
    for q in points:
        for c in clusters:
            if np.linalg.norm(dom.delta(c[0], q)) < radius:
                c.append(q)
                break
        else:
            clusters.append([np.asarray(q, float)])
    out = []
    for c in clusters:
        base = c[0]
        out.append(base + np.mean([dom.delta(base, q) for q in c], axis=0))
    return out


def _isolated_candidates(view, grid):
    U, V, L = grid
    A = np.abs(L)
    pos = L > 0
    cands = []
    ny, nx = L.shape
    compact = view.domain.compact
    for i in range(ny):
        for j in range(nx):
            if not compact and (i in (0, ny - 1) or j in (0, nx - 1)):
                continue
            nb = [((i + di) % ny, (j + dj) % nx) for di in (-1, 0, 1) for dj in (-1, 0, 1)
                  if (di, dj) != (0, 0)]
            if all(A[i, j] <= A[k] for k in nb) and all(pos[k] == pos[nb[0]] for k in nb):
                cands.append(np.array([U[i, j], V[i, j]]))
    return cands


def analyze(view, n=129, tol=None):
    """Trace Sigma, find and classify its special points and build the graph."""
    tol = tol or Tolerances()
    scales = Scales.from_grid(view, n)
    dom = view.domain
    curves, cands = trace_singular_set(view, n, scales, tol)
    for c in curves:
        c.annotate(view)
    points, vertices = [], []

    def add_point(rep, kind):
        points.append(rep)
        vertices.append(Vertex(kind, np.array(rep.point), len(points) - 1))
        return len(vertices) - 1

    # degenerate points: clustered trace endpoints and weak seeds
    for q in _cluster(cands, 2 * scales.cell, dom):
        p = refine_critical_point(view, q, scales)
        rep = classify(view, p, scales, tol)
        add_point(rep, "peak" if rep.is_peak else "unclassified")
    # isolated zeros of lambda
    us, vs = dom.grid(n)
    U, V = np.meshgrid(us, vs)
    L = view.lam(U, V)
    for q in _isolated_candidates(view, (U, V, L)):
        if any(np.linalg.norm(dom.delta(v.point, q)) < 2 * scales.cell for v in vertices):
            continue
        p = refine_critical_point(view, q, scales)
        lam = float(view.lam(p[0], p[1]))
        if abs(lam) > 1e3 * tol.on_curve * scales.lam:
            continue
        rep = classify(view, p, scales, tol)
        if rep.verdict in ("IsolatedPeak", "Unclassified"):
            add_point(rep, "peak" if rep.is_peak else "unclassified")
    # tangency points along traced curves
    cuts = {}
    for ci, c in enumerate(curves):
        cuts[ci] = []
        for s, pm in _scan_curve(view, c, scales, tol):
            rep = classify(view, pm, scales, tol)
            rep.curve, rep.s = ci, float(s)
            if rep.verdict == "A2":
                continue
            vi = add_point(rep, "peak" if rep.is_peak else "unclassified")
            cuts[ci].append((float(s), vi))
    # graph
    arcs = []

    def end_vertex(c, which):
        tag = c.start if which == 0 else c.end
        pt = c.points[0] if which == 0 else c.points[-1]
        if tag["kind"] == "boundary":
            vertices.append(Vertex("boundary", pt.copy()))
            return len(vertices) - 1
        best, bd = None, np.inf
        for vi, v in enumerate(vertices):
            if v.kind == "boundary":
                continue
            d = np.linalg.norm(dom.delta(v.point, pt))
            if d < bd:
                best, bd = vi, d
        if best is None or bd > 3 * scales.cell:
            from .errors import GraphInconsistency

            raise GraphInconsistency("branch endpoint %s has no matching singular point" % (tuple(pt),))
        tag["vertex"] = best
        return best

    for ci, c in enumerate(curves):
        inner = sorted(cuts[ci])
        if c.closed:
            if not inner:
                arcs.append(Arc(ci, 0.0, c.length))
                continue
            for k, (s, vi) in enumerate(inner):
                s2, v2 = inner[(k + 1) % len(inner)]
                if k + 1 == len(inner):
                    s2 += c.length
                arcs.append(Arc(ci, s, s2, vi, v2))
            continue
        v0 = end_vertex(c, 0)
        v1 = end_vertex(c, 1)
        knots = [(0.0, v0)] + inner + [(c.length, v1)]
        for (sa, va), (sb, vb) in zip(knots[:-1], knots[1:]):
            arcs.append(Arc(ci, sa, sb, va, vb))
    sset = SingularSet(view, scales, tol, curves, points, vertices, arcs, n)
    for ri, rep in enumerate(points):
        if rep.verdict == "DegeneratePeak":
            m2 = 2 * sset.m(ri)
            if m2 != rep.branches:
                rep.note = "traced arcs (%d) disagree with circle count (%d)" % (m2, rep.branches)
    return sset

"""Singular sectors at peaks: initial vectors, upper/lower classes and
interior angles.

Everything is expressed in the bundle frame at the peak p, with the
reference axis of the frame pinned at p so that frame components of nearby
points are comparable.  The auxiliary metric g is constant (the flat chart
metric by default), so the g-coordinate axes at p are the eigenvectors of
I_p = G^-1 P^T P: e_u spans the kernel and e_v completes a positive basis.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoLimit, SnapFailure, TangentAmbiguity, TheoremAViolation
from .singular import Tolerances, branch_radius, circle_crossings

TWO_PI = 2 * math.pi


@dataclass
class EInitialVector:
    psi: np.ndarray
    tangent: np.ndarray
    residual: float
    sequence: list = field(default_factory=list)

    def to_dict(self):
        return {"psi": self.psi.tolist(), "tangent": self.tangent.tolist(),
                "residual": float(self.residual)}


@dataclass
class PeakSectorReport:
    point: tuple
    e_u: np.ndarray
    e_v: np.ndarray
    branches: list
    sectors: list
    alpha_plus: float
    alpha_minus: float
    sign: str
    m: int

    def to_dict(self):
        return {
            "point": [float(x) for x in self.point],
            "e_u": self.e_u.tolist(),
            "e_v": self.e_v.tolist(),
            "branches": [{k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in b.items()}
                         for b in self.branches],
            "sectors": self.sectors,
            "alpha_plus": self.alpha_plus,
            "alpha_minus": self.alpha_minus,
            "sign": self.sign,
            "m": self.m,
        }


def _frame_psi(view, pts, dirs, ref):
    """psi(d) in the bundle frame with pinned reference axis, for points (k, 2) and directions (k, 2)."""
    P = view.psi_matrix(pts[..., 0], pts[..., 1], ref=ref)
    return np.einsum("...ij,...j->...i", P, dirs)


def _unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def angle_between_initial_vectors(a, b, snap=False, tol=1e-6):
    """Angle in [0, pi] between unit vectors; with ``snap`` it must be 0 or pi within tol."""
    cross = abs(a[0] * b[1] - a[1] * b[0])
    ang = math.atan2(cross, float(a @ b))
    if not snap:
        return ang
    if ang <= tol:
        return 0.0
    if math.pi - ang <= tol:
        return math.pi
    raise SnapFailure("angle %.3g is neither 0 nor pi within %.1g" % (ang, tol))


def g_frame(view, p, metric=None, ref=None):
    """(e_u, e_v): kernel and complementary eigenvectors of G^-1 P^T P, det[e_u, e_v] > 0."""
    P = view.psi_matrix(np.array(p[0]), np.array(p[1]), ref=ref)
    G = np.eye(2) if metric is None else np.asarray(metric, float)
    I = np.linalg.solve(G, P.T @ P)
    w, vec = np.linalg.eig(I)
    order = np.argsort(np.abs(w))
    e_u = np.real(vec[:, order[0]])
    e_v = np.real(vec[:, order[1]])
    e_u /= np.linalg.norm(e_u)
    e_v /= np.linalg.norm(e_v)
    k = 0 if abs(e_u[0]) > 1e-12 else 1
    if e_u[k] < 0:
        e_u = -e_u
    if e_u[0] * e_v[1] - e_u[1] * e_v[0] < 0:
        e_v = -e_v
    return e_u, e_v


def _track_branches(view, p, r, levels):
    """Crossing points of every branch on circles r * 2^-k, matched by angle."""
    th0, _ = circle_crossings(view, p, r)
    tracks = [[th] for th in th0]
    for k in range(1, levels):
        th, _ = circle_crossings(view, p, r * 2.0**-k)
        if len(th) != len(th0):
            raise NoLimit({"reason": "branch count changes with radius", "radius": r * 2.0**-k,
                           "counts": (len(th0), len(th))})
        for t in tracks:
            d = np.abs(np.angle(np.exp(1j * (th - t[-1]))))
            t.append(float(th[np.argmin(d)]))
    return tracks


def initial_vector(view, p, angles, radii, ref=None, tol=None):
    """E-initial vector of the singular branch crossing the circles radii[k] at angles[k].

    Uses the outward unit tangent of Sigma at each crossing point, maps it by
    psi, normalizes and extrapolates the sequence (Richardson, first order).
    """
    tol = tol or Tolerances()
    p = np.asarray(p, float)
    angles, radii = np.asarray(angles), np.asarray(radii)
    q = p + radii[:, None] * np.stack([np.cos(angles), np.sin(angles)], -1)
    lj = view.lam_jet(q[:, 0], q[:, 1], 1)
    g = lj.grad()
    tau = _unit(np.stack([-g[:, 1], g[:, 0]], -1))
    outward = np.sign(np.sum(tau * (q - p), -1))
    tau *= outward[:, None]
    psi = _unit(_frame_psi(view, q, tau, ref))
    rich = 2 * psi[1:] - psi[:-1]
    tang = _unit(q - p)
    trich = 2 * tang[1:] - tang[:-1]
    residual = float(np.linalg.norm(rich[-1] - rich[-2]))
    if not residual < tol.angle:
        raise NoLimit({"residual": residual, "last": psi[-1].tolist()})
    return EInitialVector(_unit(rich[-1]), _unit(trich[-1]), residual, [x.tolist() for x in psi])


def ray_initial_vector(view, p, direction, ref=None):
    """E-initial vector of the straight ray from p in a non-null direction."""
    d = np.asarray(direction, float)
    return _unit(_frame_psi(view, np.asarray(p, float), d, ref))


def sector_angles(view, report, scales, tol=None, metric=None, levels=12, rays=8, null_gap_deg=5.0):
    """Branches, classes and interior angles at a peak (``report`` from singular.classify)."""
    tol = tol or Tolerances()
    p = np.asarray(report.point, float)
    ref = view.reference_axis(np.array(p[0]), np.array(p[1]))
    e_u, e_v = g_frame(view, p, metric, ref)
    P0 = view.psi_matrix(np.array(p[0]), np.array(p[1]), ref=ref)
    image = P0 @ e_v
    r = branch_radius(scales)
    radii = r * 2.0 ** -np.arange(levels)
    tracks = _track_branches(view, p, r, levels)
    branches = []
    for t in tracks:
        iv = initial_vector(view, p, t, radii, ref, tol)
        cls = "upper" if iv.psi @ image > 0 else "lower"
        branches.append({"angle": float(t[-1]), "tangent": iv.tangent, "psi": iv.psi,
                         "class": cls, "residual": iv.residual})
    branches.sort(key=lambda b: math.atan2(b["tangent"][1], b["tangent"][0]) % TWO_PI)
    for a in range(len(branches)):
        for b in range(a + 1, len(branches)):
            if np.linalg.norm(branches[a]["tangent"] - branches[b]["tangent"]) < 1e-8:
                raise TangentAmbiguity("two branches share the initial tangent %s" % branches[a]["tangent"])

    def tangent_angle(b):
        return math.atan2(b["tangent"][1], b["tangent"][0]) % TWO_PI

    def lam_sign(theta):
        q = p + r * np.array([math.cos(theta), math.sin(theta)])
        return 1 if view.lam(q[0], q[1]) > 0 else -1

    def ray_chain(th0, th1):
        """Directions strictly inside (th0, th1) (ccw), away from the null line."""
        span = (th1 - th0) % TWO_PI or TWO_PI
        out = []
        for j in range(1, rays + 1):
            th = th0 + span * j / (rays + 1)
            d = np.array([math.cos(th), math.sin(th)])
            if abs(d @ e_u) > math.cos(math.radians(null_gap_deg)):
                continue
            out.append(d)
        return out

    sectors = []
    n = len(branches)
    classes = [b["class"] for b in branches]
    if n:
        changes = sum(classes[i] != classes[(i + 1) % n] for i in range(n))
        if changes not in (0, 2):
            raise TangentAmbiguity("branch classes are not contiguous: %s" % classes)
    for i in range(max(n, 1)):
        if n == 0:
            th0, th1 = 0.0, TWO_PI
            psis = []
        else:
            a, b = branches[i], branches[(i + 1) % n]
            th0, th1 = tangent_angle(a), tangent_angle(b)
            if n == 1:
                th1 = th0 + TWO_PI
            psis = [a["psi"]]
        # sign from the circle of radius r, between the crossing angles
        if n == 0:
            sgn = lam_sign(0.0)
        else:
            c0, c1 = branches[i]["angle"], branches[(i + 1) % n]["angle"]
            span = (c1 - c0) % TWO_PI or TWO_PI
            sgn = lam_sign(c0 + 0.5 * span)
        dirs = ray_chain(th0, th1)
        chain = psis + [ray_initial_vector(view, p, d, ref) for d in dirs]
        if n == 0:
            chain.append(chain[0])
        else:
            chain.append(branches[(i + 1) % n]["psi"])
        raw = [angle_between_initial_vectors(x, y) for x, y in zip(chain[:-1], chain[1:])]
        snapped = sum(angle_between_initial_vectors(x, y, snap=True, tol=tol.angle)
                      for x, y in zip(chain[:-1], chain[1:]))
        # rule from the classes of the bounding branches
        if n == 0:
            rule = TWO_PI
        else:
            ca, cb = classes[i], classes[(i + 1) % n]
            if ca != cb:
                rule = math.pi
            elif changes == 0:
                target = -e_v if ca == "upper" else e_v
                ang = math.atan2(target[1], target[0]) % TWO_PI
                inside = (ang - th0) % TWO_PI < ((th1 - th0) % TWO_PI or TWO_PI)
                rule = TWO_PI if inside else 0.0
            else:
                rule = 0.0
        sectors.append({"from": float(th0), "to": float(th1 % TWO_PI), "sign": "+" if sgn > 0 else "-",
                        "angle": rule, "raw_angle": float(sum(raw)), "interpolated_angle": float(snapped)})
    ap = sum(s["interpolated_angle"] for s in sectors if s["sign"] == "+")
    am = sum(s["interpolated_angle"] for s in sectors if s["sign"] == "-")
    diff = ap - am
    sign = "positive" if diff > 1e-9 else ("negative" if diff < -1e-9 else "null")
    return PeakSectorReport(point=tuple(p), e_u=e_u, e_v=e_v, branches=branches, sectors=sectors,
                            alpha_plus=ap, alpha_minus=am, sign=sign, m=n // 2)


def verify_theorem_A(report):
    """Residual of alpha_+ + alpha_- = 2 pi and the value of alpha_+ - alpha_-.

    Sector angles are sums of snapped multiples of pi, so a correct report
    gives an exact zero residual.  Disagreement between the class rule and
    the interpolating-curve angle is also a violation.
    """
    for s in report.sectors:
        if abs(s["angle"] - s["interpolated_angle"]) > 1e-12:
            raise TheoremAViolation("sector angle by classes (%g) differs from interpolation (%g)"
                                    % (s["angle"], s["interpolated_angle"]))
    res = report.alpha_plus + report.alpha_minus - TWO_PI
    diff = report.alpha_plus - report.alpha_minus
    if abs(res) > 1e-12 or min(abs(diff - k * TWO_PI) for k in (-1, 0, 1)) > 1e-12:
        raise TheoremAViolation("alpha+ = %g, alpha- = %g" % (report.alpha_plus, report.alpha_minus))
    return {"eq_sum_residual": abs(res), "diff": diff}

"""Catalog of example frontals with machine-checkable expectations.

Each entry builds its surface from closed-form expressions and lists
expectations as (description, provenance, predicate).  Predicates use only
the public operations of the other modules and return (ok, observed).
Provenance tags: PAPER (asserted in the source), TRIVIAL (immediate from the
formulas), DERIVED (from an independent oracle or the theorem itself).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import singular_curvature
from .errors import ExpectationFailed
from .gb import integrate_singular_curvature, verify_global_GB
from .sectors import sector_angles, verify_theorem_A
from .singular import analyze, classify, nearest_on_sigma, null_direction
from .surface import FrontalSurface, ParamDomain

WINDOW = ParamDomain.rectangle((-1, 1), (-1, 1))
TORUS = ParamDomain.flat_torus(2 * math.pi, 2 * math.pi)


@dataclass
class GalleryEntry:
    name: str
    build: object  # callable returning the FrontalSurface
    expectations: list = field(default_factory=list)
    grid: int = 129
    note: str = ""

    def surface(self):
        return self.build()


def _normalized(components):
    """nu components divided by the norm of the given (unnormalized) expressions."""
    n = "sqrt(%s)" % "+".join("(%s)^2" % c for c in components)
    return ["(%s)/%s" % (c, n) for c in components]


def cuspidal_edge():
    return FrontalSurface(["u^2", "u^3", "v"], _normalized(["3*u", "-2", "0"]), WINDOW, "cuspidal-edge")


def swallowtail():
    return FrontalSurface(["3*u^4+u^2*v", "4*u^3+2*u*v", "v"], _normalized(["1", "-u", "u^2"]),
                          WINDOW, "swallowtail")


def cuspidal_crosscap():
    return FrontalSurface(["u", "v^2", "u*v^3"], _normalized(["-2*v^3", "-3*u*v", "2"]),
                          WINDOW, "cuspidal-crosscap")


def double_swallowtail():
    return FrontalSurface(["2*u^3-u*v^2", "3*u^4-u^2*v^2", "v"], _normalized(["-2*u", "1", "-2*u^2*v"]),
                          WINDOW, "double-swallowtail")


def cuspidal_lips():
    return FrontalSurface(["u^3+u*v^2", "3*u^4+2*u^2*v^2", "v"], _normalized(["4*u", "-1", "-4*u^2*v"]),
                          WINDOW, "cuspidal-lips")


def scherbak():
    return FrontalSurface(["u^3+u^2*v", "6*u^5+5*u^4*v", "v"], _normalized(["10*u^2", "-1", "-5*u^4"]),
                          WINDOW, "scherbak")


def tangent_developable():
    return FrontalSurface(["u^3+3*v", "u^4+4*u*v", "u^5+5*u^2*v"], _normalized(["10*u^2", "-15*u", "6"]),
                          WINDOW, "tangent-developable-345")


def torus_immersed():
    """Round torus R = 2, r = 1 with the outward normal; u runs along the core so lambda > 0."""
    return FrontalSurface(["(2+cos(v))*cos(u)", "(2+cos(v))*sin(u)", "sin(v)"],
                          ["cos(v)*cos(u)", "cos(v)*sin(u)", "sin(v)"], TORUS, "torus-immersed")


def parallel_torus():
    """Parallel surface at distance 8 of a torus of revolution with an egg-shaped meridian.

    Meridian (2 cos u + 0.3 cos 2u, sin u + 0.15 cos 2u) about an axis at
    distance 12, offset inward.  The meridian has no mirror symmetry, so the
    integrals in the global identity are not forced to vanish, and its radius
    of curvature reaches 8 at exactly two values of u: Sigma is two circles.
    """
    w = "sqrt((cos(u)-0.3*sin(2*u))^2+(2*sin(u)+0.6*sin(2*u))^2)"
    nx = "(cos(u)-0.3*sin(2*u))/%s" % w
    nz = "(2*sin(u)+0.6*sin(2*u))/%s" % w
    r = "(12+2*cos(u)+0.3*cos(2*u)-8*%s)" % nx
    return FrontalSurface(["%s*cos(v)" % r, "%s*sin(v)" % r, "sin(u)+0.15*cos(2*u)-8*%s" % nz],
                          ["%s*cos(v)" % nx, "%s*sin(v)" % nx, nz], TORUS, "parallel-torus")


def wavy_parallel_torus():
    """Tube of radius 2 about the ellipse (3 cos v, 2 sin v, 0); its focal distance varies along the core."""
    w = "sqrt(9*sin(v)^2+4*cos(v)^2)"
    return FrontalSurface(["3*cos(v)-4*cos(u)*cos(v)/%s" % w, "2*sin(v)-6*cos(u)*sin(v)/%s" % w, "2*sin(u)"],
                          ["-2*cos(u)*cos(v)/%s" % w, "-3*cos(u)*sin(v)/%s" % w, "sin(u)"],
                          TORUS, "wavy-parallel-torus")


# -- expectation predicates -------------------------------------------------------
#
# A predicate receives a GalleryRun (lazy cache of the analysis) and returns
# (ok, observed).


class GalleryRun:
    """Lazily computed analysis of one entry, shared by its expectations."""

    def __init__(self, entry):
        self.entry = entry
        self.view = entry.surface()
        self._sset = None
        self._sectors = {}
        self._gb = None

    @property
    def sset(self):
        if self._sset is None:
            self._sset = analyze(self.view, self.entry.grid)
        return self._sset

    def peak_at(self, p, radius=1e-6):
        for rep in self.sset.points:
            if np.hypot(rep.point[0] - p[0], rep.point[1] - p[1]) < radius:
                return rep
        return None

    def sectors(self, rep):
        key = rep.point
        if key not in self._sectors:
            self._sectors[key] = sector_angles(self.view, rep, self.sset.scales)
        return self._sectors[key]

    def gb(self):
        if self._gb is None:
            self._gb = verify_global_GB(self.view, n=self.entry.grid, cells=64, sset=self.sset)
        return self._gb


def sigma_is(F, grad, tol=1e-6):
    """Hausdorff distance between the traced Sigma and {F = 0} is below tol.

    One direction uses the first-order distance |F| / |grad F| at dense
    points of the traced curves, the other the distance from exact zeros of
    F on vertical lines to the nearest traced point.
    """

    def pred(run):
        curves = run.sset.curves
        if not curves:
            return False, "no singular curves"
        worst = 0.0
        for c in curves:
            p = c.point_at(np.linspace(0.0, c.length, 4 * len(c.s)))[0]
            u, v = p[:, 0], p[:, 1]
            g = np.hypot(*grad(u, v))
            worst = max(worst, float(np.max(np.abs(F(u, v)) / np.maximum(g, 1e-300))))
        # coverage: exact zeros of F on grid lines (bisection) must lie on the traced Sigma
        dom = run.view.domain
        gap, hits = 0.0, 0
        for axis in (0, 1):
            lo, hi = (dom.u_range, dom.v_range)[axis], (dom.v_range, dom.u_range)[axis]
            for x in np.linspace(lo[0], lo[1], 21)[1:-1]:

                def G(y):
                    return F(np.full_like(y, x), y) if axis == 0 else F(y, np.full_like(y, x))

                ys = hi[0] + (hi[1] - hi[0]) * (np.arange(400) + 0.5) / 400
                f = G(ys)
                for k in np.nonzero(f[:-1] * f[1:] < 0)[0]:
                    a, b, fa = ys[k], ys[k + 1], f[k]
                    for _ in range(60):
                        m = 0.5 * (a + b)
                        fm = G(np.array(m))
                        if (fm > 0) == (fa > 0):
                            a, fa = m, fm
                        else:
                            b = m
                    q = (x, 0.5 * (a + b)) if axis == 0 else (0.5 * (a + b), x)
                    hit = nearest_on_sigma(run.sset, q)
                    gap = max(gap, np.inf if hit is None else hit[2])
                    hits += 1
        if not hits:
            return False, "no zeros of F found on the grid lines"
        ok = worst < tol and gap < tol
        return ok, "distance %.2e, coverage gap %.2e" % (worst, gap)

    return pred


def sigma_empty(run):
    n = len(run.sset.curves) + len(run.sset.points)
    return n == 0, "%d curves, %d points" % (len(run.sset.curves), len(run.sset.points))


def circle_count(k):
    def pred(run):
        closed = [c for c in run.sset.curves if c.closed]
        return len(closed) == k and len(run.sset.curves) == k, "%d curves (%d closed)" % (
            len(run.sset.curves), len(closed))

    return pred


def all_a2(samples=7):
    """No special points, and classify() says A2 at sample points of every curve."""

    def pred(run):
        verdicts = set()
        for c in run.sset.curves:
            for s in np.linspace(0.0, c.length, samples + 2)[1:-1]:
                p = c.point_at(np.array([s]))[0][0]
                verdicts.add(classify(run.view, p, run.sset.scales).verdict)
        special = [r.verdict for r in run.sset.points]
        return verdicts == {"A2"} and not special, "samples %s, special points %s" % (sorted(verdicts), special)

    return pred


def null_direction_is(d, samples=7, tol=1e-9):
    d = np.asarray(d, float) / np.linalg.norm(d)

    def pred(run):
        worst = 0.0
        for c in run.sset.curves:
            for s in np.linspace(0.0, c.length, samples + 2)[1:-1]:
                p = c.point_at(np.array([s]))[0][0]
                eta = null_direction(run.view, p[0], p[1], scales=run.sset.scales)
                worst = max(worst, abs(eta[0] * d[1] - eta[1] * d[0]))
        return worst < tol, "max |eta x d| = %.2e" % worst

    return pred


def kappa_s_zero(tol=1e-9):
    def pred(run):
        total, err, _ = integrate_singular_curvature(run.sset)
        worst = 0.0
        for c in run.sset.curves:
            k, _ = singular_curvature(run.view, c)
            worst = max(worst, float(np.max(np.abs(k))))
        return worst < tol and abs(total) < tol, "max |kappa_s| %.2e, integral %.2e" % (worst, total)

    return pred


def point_verdict(p, verdict):
    def pred(run):
        rep = run.peak_at(p)
        if rep is None:
            rep = classify(run.view, np.asarray(p, float), run.sset.scales)
            where = "classify"
        else:
            where = "analyze"
        return rep.verdict == verdict, "%s via %s" % (rep.verdict, where)

    return pred


def peak_count(verdict, k):
    def pred(run):
        got = [r for r in run.sset.points if r.verdict == verdict]
        return len(got) == k, "%d %s (%s)" % (len(got), verdict, [r.verdict for r in run.sset.points])

    return pred


def sectors_are(p, angles, alpha_plus, alpha_minus, sign):
    """Sector angles (as a multiset), alpha_+, alpha_- and the peak sign at p."""

    def pred(run):
        rep = run.peak_at(p)
        if rep is None:
            return False, "no singular point at %s" % (p,)
        rpt = run.sectors(rep)
        got = sorted(s["interpolated_angle"] for s in rpt.sectors)
        ok = (len(got) == len(angles)
              and all(abs(a - b) < 1e-12 for a, b in zip(got, sorted(angles)))
              and abs(rpt.alpha_plus - alpha_plus) < 1e-12 and abs(rpt.alpha_minus - alpha_minus) < 1e-12
              and rpt.sign == sign)
        return ok, "angles %s, alpha+ %.6g, alpha- %.6g, %s" % (
            [round(a, 6) for a in got], rpt.alpha_plus, rpt.alpha_minus, rpt.sign)

    return pred


def theorem_a_all(run):
    out = []
    for rep in run.sset.peaks:
        r = verify_theorem_A(run.sectors(rep))
        out.append((rep.verdict, r["eq_sum_residual"], r["diff"]))
    ok = bool(out) and all(res == 0.0 for _, res, _ in out)
    return ok, "%d peaks, residuals %s" % (len(out), [x[1] for x in out])


def global_gb_passes(run):
    rep = run.gb()
    return bool(rep.passed), "res_A %.2e (budget %.1e), res_B %.2e (budget %.1e), chi_E %.6f" % (
        rep.residual_A, rep.budget_A, rep.residual_B, rep.budget_B, rep.chi_E)


def frontal_check(run):
    run.view.check_frontal()  # raises FrontalViolation
    return True, "|nu| = 1 and <df, nu> = 0 on a 33 x 33 grid"


def _ex(desc, prov, pred):
    return (desc, prov, pred)


ENTRIES = [
    GalleryEntry("cuspidal-edge", cuspidal_edge, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("Sigma is the v-axis", "PAPER", sigma_is(lambda u, v: u, lambda u, v: (np.ones_like(u), np.zeros_like(u)))),
        _ex("all points of Sigma are A2", "PAPER", all_a2()),
        _ex("null direction is d/du", "PAPER", null_direction_is((1, 0))),
        _ex("kappa_s vanishes identically", "TRIVIAL", kappa_s_zero()),
    ], note="nu derived: f_u x f_v = u (3u, -2, 0), normalized after removing u"),
    GalleryEntry("swallowtail", swallowtail, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("Sigma is 6u^2 + v = 0", "PAPER", sigma_is(lambda u, v: 6 * u**2 + v, lambda u, v: (12 * u, np.ones_like(u)))),
        _ex("origin is an A3 point", "PAPER", point_verdict((0.0, 0.0), "A3")),
        _ex("positive peak with alpha_+ = 2 pi", "PAPER",
            sectors_are((0.0, 0.0), [0.0, 2 * math.pi], 2 * math.pi, 0.0, "positive")),
    ], note="nu sign of the middle component corrected so that <df, nu> = 0"),
    GalleryEntry("cuspidal-crosscap", cuspidal_crosscap, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("Sigma is the u-axis", "TRIVIAL", sigma_is(lambda u, v: v, lambda u, v: (np.zeros_like(u), np.ones_like(u)))),
        _ex("origin is an A2 point under the intrinsic test", "PAPER", point_verdict((0.0, 0.0), "A2")),
    ]),
    GalleryEntry("double-swallowtail", double_swallowtail, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("Sigma is v = +-sqrt(6) u", "PAPER",
            sigma_is(lambda u, v: v**2 - 6 * u**2, lambda u, v: (-12 * u, 2 * v))),
        _ex("origin is a degenerate peak", "PAPER", point_verdict((0.0, 0.0), "DegeneratePeak")),
        _ex("sector angles (0, 0, pi, pi), alpha_+ = 0, alpha_- = 2 pi", "PAPER",
            sectors_are((0.0, 0.0), [0.0, 0.0, math.pi, math.pi], 0.0, 2 * math.pi, "negative")),
    ]),
    GalleryEntry("cuspidal-lips", cuspidal_lips, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("origin is an isolated peak", "PAPER", point_verdict((0.0, 0.0), "IsolatedPeak")),
        _ex("Sigma is the origin only", "PAPER",
            lambda run: (not run.sset.curves and len(run.sset.points) == 1,
                         "%d curves, %d points" % (len(run.sset.curves), len(run.sset.points)))),
        _ex("interior angle 2 pi", "PAPER", sectors_are((0.0, 0.0), [2 * math.pi], 2 * math.pi, 0.0, "positive")),
    ], note="f and nu corrected to a frontal pair with the same singular set"),
    GalleryEntry("scherbak", scherbak, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("Sigma is {u = 0} and {3u + 2v = 0}", "PAPER",
            sigma_is(lambda u, v: u * (3 * u + 2 * v), lambda u, v: (6 * u + 2 * v, 2 * u))),
        _ex("origin is a degenerate peak", "DERIVED", point_verdict((0.0, 0.0), "DegeneratePeak")),
        _ex("alpha_+ + alpha_- = 2 pi at the peak", "DERIVED", theorem_a_all),
    ]),
    GalleryEntry("tangent-developable-345", tangent_developable, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("origin is a non-degenerate peak, not A3", "PAPER", point_verdict((0.0, 0.0), "NonDegeneratePeak")),
        _ex("alpha_+ + alpha_- = 2 pi at the peak", "DERIVED", theorem_a_all),
    ], note="nu derived from f_t x f_u after removing the factor vanishing on Sigma"),
    GalleryEntry("torus-immersed", torus_immersed, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("Sigma is empty", "TRIVIAL", sigma_empty),
        _ex("global Gauss-Bonnet identities", "TRIVIAL", global_gb_passes),
    ], grid=65),
    GalleryEntry("parallel-torus", parallel_torus, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("Sigma is two circles", "DERIVED", circle_count(2)),
        _ex("all points of Sigma are A2", "DERIVED", all_a2()),
        _ex("global Gauss-Bonnet identities", "DERIVED", global_gb_passes),
    ], note="egg-shaped meridian instead of the round torus at t = 4 (see the decisions ledger)"),
    GalleryEntry("wavy-parallel-torus", wavy_parallel_torus, [
        _ex("<df, nu> = 0", "TRIVIAL", frontal_check),
        _ex("four A3 points", "DERIVED", peak_count("A3", 4)),
        _ex("alpha_+ + alpha_- = 2 pi at every peak", "DERIVED", theorem_a_all),
        _ex("global Gauss-Bonnet identities", "DERIVED", global_gb_passes),
    ], note="tube of radius 2 about an ellipse; peaks are found by the classifier"),
]

_BY_NAME = {e.name: e for e in ENTRIES}


def gallery_list():
    return [e.name for e in ENTRIES]


def gallery_entry(name):
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError("unknown gallery entry %r (known: %s)" % (name, ", ".join(_BY_NAME))) from None


def gallery_surface(name):
    return gallery_entry(name).surface()


def gallery_run(name, strict=False):
    """Evaluate every expectation of an entry: list of dicts (description, provenance, passed, observed).

    With ``strict`` the first failure raises ExpectationFailed.
    """
    entry = gallery_entry(name)
    run = GalleryRun(entry)
    results = []
    for desc, prov, pred in entry.expectations:
        try:
            ok, observed = pred(run)
        except Exception as exc:  # a raised error is a failed expectation, reported as observed
            ok, observed = False, "%s: %s" % (type(exc).__name__, exc)
        results.append({"description": desc, "provenance": prov, "passed": bool(ok), "observed": observed})
        if strict and not ok:
            raise ExpectationFailed(name, desc, observed)
    return results

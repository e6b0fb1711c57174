"""The ten acceptance criteria, one test each; every test prints one PASS/FAIL line."""

import math
import time

import numpy as np

from frontlab.curvature import singular_curvature_at
from frontlab.expr import Expression
from frontlab.gallery import GalleryRun, gallery_entry, gallery_list
from frontlab.gb import endpoint_limit, verify_global_GB, verify_local_GB
from frontlab.sectors import sector_angles, verify_theorem_A
from frontlab.singular import analyze
from frontlab.surface import ReversedCoorientation, SwappedView, check_compatibility, gauss_map_degree, to_frame_form

from conftest import acceptance_line, singular_set, surface

TWO_PI = 2 * math.pi


def test_criterion_1_gallery_classification():
    t0 = time.perf_counter()
    failures, count = [], 0
    for name in gallery_list():
        entry = gallery_entry(name)
        run = GalleryRun(entry)
        for desc, prov, pred in entry.expectations:
            if prov != "PAPER":
                continue
            count += 1
            ok, observed = pred(run)
            if not ok:
                failures.append("%s: %s (%s)" % (name, desc, observed))
    elapsed = time.perf_counter() - t0
    ok = not failures and count >= 12 and elapsed < 30
    acceptance_line(1, "%d [PAPER] gallery expectations, %d failed, %.1f s" % (count, len(failures), elapsed), ok)
    assert ok, failures


def test_criterion_2_theorem_a():
    peaks, bad = 0, []
    for name in gallery_list():
        entry = gallery_entry(name)
        ss = singular_set(name, entry.grid)
        for rep in ss.peaks:
            peaks += 1
            sec = sector_angles(surface(name), rep, ss.scales, ss.tol)
            verify_theorem_A(sec)
            raw_ok = all(abs(s["raw_angle"] - s["interpolated_angle"]) <= 1e-6 for s in sec.sectors)
            if not (sec.alpha_plus + sec.alpha_minus == TWO_PI
                    and sec.alpha_plus - sec.alpha_minus in (-TWO_PI, 0.0, TWO_PI) and raw_ok):
                bad.append((name, rep.point, sec.alpha_plus, sec.alpha_minus))
    wavy = len(singular_set("wavy-parallel-torus", gallery_entry("wavy-parallel-torus").grid).peaks)
    ok = not bad and wavy > 0
    acceptance_line(2, "alpha+ + alpha- = 2 pi exactly at %d peaks (%d on wavy-parallel-torus)" % (peaks, wavy), ok)
    assert ok, bad


def test_criterion_3_torus_immersed():
    t0 = time.perf_counter()
    rep = verify_global_GB(surface("torus-immersed"), n=128, cells=128)
    elapsed = time.perf_counter() - t0
    ok = abs(rep.int_KdA) < 1e-7 and abs(rep.chi_E) < 1e-7 and elapsed < 10
    acceptance_line(3, "torus-immersed int K dA = %.1e, chi_E = %.1e, %.1f s at grid 128"
                    % (rep.int_KdA, rep.chi_E, elapsed), ok)
    assert ok


def test_criterion_4_parallel_torus():
    view = surface("parallel-torus")
    t0 = time.perf_counter()
    ss = analyze(view, 256)
    rep = verify_global_GB(view, n=256, cells=256, sset=ss)
    elapsed = time.perf_counter() - t0
    budget = max(1e-3, 10 * (rep.errors["KdA"] + 2 * rep.errors["kappa_s"]))
    # refinement of the 3-node rule, where the residual is above round-off
    res = [verify_global_GB(view, n=256, cells=c, nodes=3, sset=ss).residual_A for c in (4, 8, 16, 32)]
    ratios = [a / b for a, b in zip(res[:-1], res[1:])]
    ok = rep.residual_A < budget and all(r >= 4 for r in ratios) and elapsed < 120
    acceptance_line(4, "parallel-torus residual %.1e < %.1e in %.1f s; refinement ratios %s"
                    % (rep.residual_A, budget, elapsed, ", ".join("%.1f" % r for r in ratios)), ok)
    assert ok


def test_criterion_5_wavy_parallel_torus():
    view = surface("wavy-parallel-torus")
    rep = verify_global_GB(view, n=129, sset=singular_set("wavy-parallel-torus", 129))
    eu = rep.euler
    rhs = eu.chi_plus - eu.chi_minus + rep.n_pos - rep.n_neg
    deg = gauss_map_degree(view)[0]
    ok = (abs(rep.chi_E - round(rep.chi_E)) <= 0.05 and round(rep.chi_E) == rhs
          and abs(rep.chi_E - 2 * deg) <= 0.05)
    acceptance_line(5, "chi_E = %.2e, chi(M+) - chi(M-) + #P+ - #P- = %d - %d + %d - %d = %d, 2 deg(nu) = %.2e"
                    % (rep.chi_E, eu.chi_plus, eu.chi_minus, rep.n_pos, rep.n_neg, rhs, 2 * deg), ok)
    assert ok


LOCAL_TRIANGLES = [
    ("cuspidal-edge", [[0.2, -0.3], [0.7, -0.2], [0.4, 0.4]], ["line"] * 3),
    ("cuspidal-edge", [[0, 0], [0.5, -0.3], [0.5, 0.4]], ["line"] * 3),
    ("cuspidal-edge", [[0, 0.4], [0, -0.4], [0.5, 0]], ["sigma", "line", "line"]),
    ("cuspidal-edge", [[-0.4, -0.3], [0.5, -0.1], [0.1, 0.5]], ["line"] * 3),
    ("swallowtail", [[0, 0], [0.3, -0.54], [0.05, -0.6]], ["sigma", "line", "line"]),
    ("swallowtail", [[0.2, -0.24], [0.4, -0.96], [0.6, -0.5]], ["sigma", "line", "line"]),
    ("swallowtail", [[0, 0], [0.3, -0.9], [-0.3, -0.9]], ["line"] * 3),
    ("swallowtail", [[-0.4, -0.6], [0.4, -0.4], [0, -0.2]], ["line"] * 3),
]


def test_criterion_6_local_gb():
    ROUNDOFF = 1e-12
    worst, bad = 0.0, []
    for name, verts, edges in LOCAL_TRIANGLES:
        tri = {"vertices": verts, "edges": edges}
        reps = [verify_local_GB(surface(name), tri, sset=singular_set(name), nodes=n, panels=p)
                for n, p in ((3, 1), (4, 2), (8, 4))]
        res = [abs(r.residual) for r in reps]
        fine = reps[-1]
        decreasing = all(b < a or b < ROUNDOFF for a, b in zip(res[:-1], res[1:]))
        if not (abs(fine.residual) < max(1e-4, 10 * fine.error) and decreasing):
            bad.append((name, verts, res))
        worst = max(worst, res[-1])
    ok = not bad and len(LOCAL_TRIANGLES) >= 6
    acceptance_line(6, "%d triangles on f_C and f_SW, worst residual %.1e, decreasing under refinement"
                    % (len(LOCAL_TRIANGLES), worst), ok)
    assert ok, bad


def test_criterion_7_kappa_s_invariance():
    view = surface("swallowtail")
    (c,) = singular_set("swallowtail").curves
    p, tan = c.points, c.tangents
    base = singular_curvature_at(view, p[:, 0], p[:, 1], tan)[0]
    swapped = singular_curvature_at(SwappedView(view), p[:, 1], p[:, 0], tan[:, ::-1])[0]
    flipped = singular_curvature_at(ReversedCoorientation(view), p[:, 0], p[:, 1], tan)[0]
    r = c.reversed()
    reversed_ = singular_curvature_at(view, r.points[:, 0], r.points[:, 1], r.tangents)[0][::-1]
    diffs = [np.max(np.abs(x - base)) for x in (swapped, flipped, reversed_)]
    ok = max(diffs) <= 1e-9
    acceptance_line(7, "kappa_s changes by %.1e (swap u, v), %.1e (co-orientation), %.1e (reversed curve) on %d samples"
                    % (*diffs, len(base)), ok)
    assert ok


def test_criterion_8_bounded_measure():
    view = surface("swallowtail")
    ss = singular_set("swallowtail")
    (c,) = ss.curves
    (peak,) = ss.peaks
    lims, res, growth = [], [], True
    for direction in (1.0, -1.0):
        lim, residual, _ = endpoint_limit(view, c, peak.s, direction, 0.05)
        lims.append(lim)
        res.append(residual)
        s = peak.s - direction * 0.05 * 2.0 ** -np.arange(8)
        q, dq = c.point_at(s)
        kmax = np.abs(singular_curvature_at(view, q[:, 0], q[:, 1], dq)[0])
        growth &= bool(np.all(np.diff(kmax) > 0)) and kmax[-1] > 64 * kmax[0]
    ok = max(res) < 1e-5 and all(np.isfinite(lims)) and growth
    acceptance_line(8, "kappa_s dtau/ds limits %.7f, %.7f (Cauchy residual %.1e); |kappa_s| grows monotonically"
                    % (lims[0], lims[1], max(res)), ok)
    assert ok


def test_criterion_9_intrinsic_parity():
    worst, compat, same = 0.0, 0.0, True
    for name in ("cuspidal-edge", "swallowtail"):
        ext = surface(name)
        ctb = to_frame_form(ext)
        compat = max(compat, check_compatibility(ctb))
        us, vs = ext.domain.grid(41)
        U, V = np.meshgrid(us, vs)
        worst = max(worst, np.max(np.abs(ctb.lam(U, V) - ext.lam(U, V))))
        se, si = analyze(ext, 129), analyze(ctb, 129)
        same &= [r.verdict for r in se.points] == [r.verdict for r in si.points]
        same &= all(np.allclose(a.point, b.point, atol=1e-7) for a, b in zip(se.points, si.points))
        same &= len(se.curves) == len(si.curves)
        for c in se.curves:
            k_e = singular_curvature_at(ext, c.points[:, 0], c.points[:, 1], c.tangents)[0]
            k_i = singular_curvature_at(ctb, c.points[:, 0], c.points[:, 1], c.tangents)[0]
            worst = max(worst, np.max(np.abs(k_e - k_i)))
    ok = worst <= 1e-7 and compat < 1e-7 and same
    acceptance_line(9, "frame form vs extrinsic: max difference %.1e (lambda, kappa_s), compatibility %.1e, "
                    "classifications %s" % (worst, compat, "equal" if same else "differ"), ok)
    assert ok


UNARY = ["sin", "cos", "atan", "exp", "sqrt1", "log2"]


def random_expression(rng, depth):
    """Random expression over u, v whose values stay moderate on [-1, 1]^2."""
    if depth == 0 or rng.random() < 0.2:
        return rng.choice(["u", "v", "%.3f" % rng.uniform(-2, 2)])
    kind = rng.integers(4)
    a = random_expression(rng, depth - 1)
    if kind == 0:
        f = rng.choice(UNARY)
        if f == "sqrt1":
            return "sqrt(1+(%s)^2)" % a
        if f == "log2":
            return "log(2+sin(%s))" % a
        if f == "exp":
            return "exp(sin(%s))" % a
        return "%s(%s)" % (f, a)
    b = random_expression(rng, depth - 1)
    if kind == 1:
        return "(%s)%s(%s)" % (a, rng.choice(["+", "-", "*"]), b)
    if kind == 2:
        return "(%s)/(2+cos(%s))" % (a, b)
    return "(%s)^%d" % (a, rng.integers(2, 4))


def python_function(text):
    """Independent evaluator: the same text as a Python expression over the math module."""
    code = compile(text.replace("^", "**"), "<expr>", "eval")
    names = {k: getattr(math, k) for k in ("sin", "cos", "atan", "exp", "sqrt", "log")}
    return lambda u, v: eval(code, {"__builtins__": {}}, dict(names, u=u, v=v))


def fd_coefficients(text, u, v, h=1e-3):
    """Order 1 and 2 Taylor coefficients by central differences, Richardson-extrapolated in h."""
    g = python_function(text)

    def at(hh):
        f = lambda a, b: g(u + a, v + b)
        f0 = f(0, 0)
        cu = (f(hh, 0) - f(-hh, 0)) / (2 * hh)
        cv = (f(0, hh) - f(0, -hh)) / (2 * hh)
        cuu = (f(hh, 0) - 2 * f0 + f(-hh, 0)) / hh**2 / 2
        cvv = (f(0, hh) - 2 * f0 + f(0, -hh)) / hh**2 / 2
        cuv = (f(hh, hh) - f(hh, -hh) - f(-hh, hh) + f(-hh, -hh)) / (4 * hh * hh)
        return np.array([cu, cv, cuu, cuv, cvv])
    return (4 * at(h / 2) - at(h)) / 3


def test_criterion_10_jets():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(100):
        text = random_expression(rng, 3)
        u, v = (float(x) for x in rng.uniform(-1, 1, 2))
        e = Expression(text)
        j = e.jet(u, v, 2)
        ad = np.array([j[1, 0], j[0, 1], j[2, 0], j[1, 1], j[0, 2]], float)
        worst = max(worst, float(np.max(np.abs(ad - fd_coefficients(text, u, v)))))
    ok = worst <= 1e-6
    acceptance_line(10, "AD vs central differences on 100 random expressions: max difference %.1e" % worst, ok)
    assert ok

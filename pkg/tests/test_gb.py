import math

import numpy as np
import pytest

from frontlab.errors import NonCompactDomain, NotAdmissible
from frontlab.gb import (curve_density_integral, euler_characteristics, integrate_2form,
                         integrate_singular_curvature, verify_global_GB, verify_local_GB)
from frontlab.singular import analyze
from frontlab.surface import FrontalSurface, IntrinsicCTB, ParamDomain

from conftest import singular_set, surface

TORUS = ParamDomain.flat_torus(2 * math.pi, 2 * math.pi)


def swallowtail_kappa_s_oracle():
    """Integral of kappa_s dtau along the image of gamma(u) = (u, -6u^2), |u| <= 1/sqrt(6)."""
    x, w = np.polynomial.legendre.leggauss(60)
    total = 0.0
    for lo, hi in ((-1 / math.sqrt(6), 0.0), (0.0, 1 / math.sqrt(6))):
        u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        c1 = np.stack([-12 * u**3, -24 * u**2, -12 * u], -1)
        c2 = np.stack([-36 * u**2, -48 * u, -12 + 0 * u], -1)
        nu = np.stack([1 + 0 * u, -u, u**2], -1) / np.sqrt(1 + u**2 + u**4)[:, None]
        # kappa_s dtau = det(c', c'', nu) / |c'|^2 du; the sign is that of kappa_s (negative here)
        dens = np.sum(np.cross(c1, c2) * nu, -1) / np.sum(c1 * c1, -1)
        total += 0.5 * (hi - lo) * np.sum(w * dens)
    return -abs(total)


# -- 2-forms -----------------------------------------------------------------------

def test_torus_total_curvature():
    s = surface("torus-immersed")
    ss = singular_set("torus-immersed", 65)
    hat, err = integrate_2form(s, ss, "KdAhat", cells=32)
    plain, _ = integrate_2form(s, ss, "KdA", cells=32)
    assert abs(hat) < 1e-8 and abs(plain - hat) < 1e-12


def test_flat_intrinsic_torus():
    ctb = IntrinsicCTB([["1", "0"], ["0", "1"]], ["0", "0"], TORUS)
    ss = analyze(ctb, 17)
    assert integrate_2form(ctb, ss, "KdAhat", cells=8)[0] == 0.0
    assert integrate_2form(ctb, ss, "KdA", cells=8)[0] == 0.0


def test_sphere_area_integral():
    # a chart of the unit sphere: the integral of K dA over it is its area
    s = FrontalSurface(["cos(u)*cos(v)", "cos(u)*sin(v)", "sin(u)"],
                       ["-cos(u)*cos(v)", "-cos(u)*sin(v)", "-sin(u)"],
                       ParamDomain.rectangle((-1.0, 1.0), (0.0, 2.0)))
    ss = analyze(s, 33)
    val, err = integrate_2form(s, ss, "KdA", cells=16)
    assert val == pytest.approx(2.0 * 2 * math.sin(1.0), abs=1e-10)


# -- singular curvature measure ---------------------------------------------------

def test_cuspidal_edge_kappa_s_integral_zero():
    total, err, per_arc = integrate_singular_curvature(singular_set("cuspidal-edge"))
    assert abs(total) < 1e-12


def test_swallowtail_kappa_s_integral():
    total, err, per_arc = integrate_singular_curvature(singular_set("swallowtail"))
    assert total == pytest.approx(swallowtail_kappa_s_oracle(), abs=1e-9)
    assert total == pytest.approx(-1.4000650062370295, abs=1e-9)
    assert len(per_arc) == 2 and per_arc[0] == pytest.approx(per_arc[1], abs=1e-9)


def test_kappa_s_integral_orientation_free():
    s = surface("swallowtail")
    for c in singular_set("swallowtail").curves:
        a, _ = curve_density_integral(s, c, 0.0, c.length)
        r = c.reversed()
        b, _ = curve_density_integral(s, r, 0.0, r.length)
        assert a == pytest.approx(b, abs=1e-12)


def test_parallel_torus_kappa_s_converges():
    ss = singular_set("parallel-torus", 65)
    coarse = integrate_singular_curvature(ss, panel=4 * ss.scales.cell)[0]
    fine = integrate_singular_curvature(ss, panel=2 * ss.scales.cell)[0]
    assert math.isfinite(fine) and abs(fine - coarse) < 1e-6


# -- Euler characteristics ----------------------------------------------------------

def test_euler_torus_immersed():
    eu = euler_characteristics(surface("torus-immersed"), singular_set("torus-immersed", 65))
    assert (eu.chi_plus, eu.chi_minus, eu.chi_sigma, eu.chi_M) == (0, 0, 0, 0) and eu.consistent


def test_euler_parallel_torus():
    eu = euler_characteristics(surface("parallel-torus"), singular_set("parallel-torus", 65))
    assert eu.chi_sigma == 0 and eu.chi_plus + eu.chi_minus == 0 and eu.consistent


def test_euler_double_swallowtail():
    eu = euler_characteristics(surface("double-swallowtail"), singular_set("double-swallowtail"))
    assert list(eu.m.values()) == [2]
    assert eu.chi_sigma_peaks == -1 and eu.chi_sigma_closed == -1
    assert eu.chi_plus + eu.chi_minus + eu.chi_sigma == 1 and eu.consistent


# -- global identities ---------------------------------------------------------------

def test_global_gb_torus_immersed():
    rep = verify_global_GB(surface("torus-immersed"), n=65, cells=32, sset=singular_set("torus-immersed", 65))
    assert rep.passed and rep.residual_A < 1e-8 and rep.residual_B < 1e-8
    assert rep.n_pos == rep.n_neg == 0


def test_global_gb_needs_torus():
    with pytest.raises(NonCompactDomain):
        verify_global_GB(surface("swallowtail"), sset=singular_set("swallowtail"))


# -- local identity -------------------------------------------------------------------

LINES = ["line"] * 3
# (surface, vertices, edge kinds); comments give the configuration
TRIANGLES = {
    "fc-plus": ("cuspidal-edge", [[0.2, -0.3], [0.7, -0.2], [0.4, 0.4]], LINES),  # inside M+
    "fc-vertex-on-sigma": ("cuspidal-edge", [[0, 0], [0.5, -0.3], [0.5, 0.4]], LINES),
    "fc-edge-on-sigma": ("cuspidal-edge", [[0, 0.4], [0, -0.4], [0.5, 0]], ["sigma", "line", "line"]),
    "fc-straddle": ("cuspidal-edge", [[-0.4, -0.3], [0.5, -0.1], [0.1, 0.5]], LINES),  # Sigma crosses the interior
    "fc-vertex-straddle": ("cuspidal-edge", [[0, -0.5], [0.5, 0.3], [-0.4, 0.2]], LINES),
    "sw-peak-sigma-edge": ("swallowtail", [[0, 0], [0.3, -0.54], [0.05, -0.6]], ["sigma", "line", "line"]),
    "sw-sigma-edge": ("swallowtail", [[0.2, -0.24], [0.4, -0.96], [0.6, -0.5]], ["sigma", "line", "line"]),
    "sw-minus": ("swallowtail", [[-0.3, -0.8], [0.3, -0.8], [0.1, -0.1]], LINES),
    "sw-peak-vertex": ("swallowtail", [[0, 0], [0.3, -0.9], [-0.3, -0.9]], LINES),
    "sw-interior-sigma": ("swallowtail", [[-0.4, -0.6], [0.4, -0.4], [0, -0.2]], LINES),
}


@pytest.mark.parametrize("key", sorted(TRIANGLES))
def test_local_gb_regression(key):
    name, verts, edges = TRIANGLES[key]
    rep = verify_local_GB(surface(name), {"vertices": verts, "edges": edges}, sset=singular_set(name))
    assert rep.passed and abs(rep.residual) < max(1e-4, 10 * rep.error)
    assert abs(rep.residual) < 1e-9


def test_local_gb_refinement_decreases():
    name, verts, edges = TRIANGLES["fc-straddle"]
    tri = {"vertices": verts, "edges": edges}
    res = [abs(verify_local_GB(surface(name), tri, sset=singular_set(name), nodes=n, panels=p).residual)
           for n, p in ((2, 1), (3, 1), (8, 4))]
    assert res[0] > res[1] > res[2]


def test_interior_sigma_term():
    name, verts, edges = TRIANGLES["sw-interior-sigma"]
    rep = verify_local_GB(surface(name), {"vertices": verts, "edges": edges}, sset=singular_set(name))
    assert rep.interior_sigma == pytest.approx(-0.1058, abs=1e-3)


def test_peak_vertex_angle():
    name, verts, edges = TRIANGLES["sw-peak-vertex"]
    rep = verify_local_GB(surface(name), {"vertices": verts, "edges": edges}, sset=singular_set(name))
    assert rep.singular_vertices[0] and rep.angles[0] in (0.0, math.pi)


def test_sphere_octant():
    n = "sqrt(u^2+v^2+(1-u-v)^2)"
    comps = ["u/%s" % n, "v/%s" % n, "(1-u-v)/%s" % n]
    s = FrontalSurface(comps, comps, ParamDomain.rectangle((-0.2, 1.2), (-0.2, 1.2)), "sphere")
    rep = verify_local_GB(s, {"vertices": [[0, 0], [1, 0], [0, 1]], "edges": LINES})
    assert np.allclose(rep.angles, math.pi / 2, atol=1e-12)
    assert rep.area == pytest.approx(math.pi / 2, abs=1e-10)
    assert abs(rep.boundary) < 1e-10 and rep.passed


def test_edge_along_null_direction_not_admissible():
    # a horizontal edge crosses the v-axis along eta = d/du: its image has a cusp
    tri = {"vertices": [[-0.4, -0.3], [0.5, -0.3], [0.1, 0.5]], "edges": LINES}
    with pytest.raises(NotAdmissible):
        verify_local_GB(surface("cuspidal-edge"), tri, sset=singular_set("cuspidal-edge"))


def test_peak_inside_not_admissible():
    tri = {"vertices": [[-0.5, -0.3], [0.4, -0.6], [0.3, 0.5]], "edges": LINES}
    with pytest.raises(NotAdmissible):
        verify_local_GB(surface("scherbak"), tri, sset=singular_set("scherbak"))

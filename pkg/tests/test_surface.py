import math

import numpy as np
import pytest

from frontlab.errors import FrontalViolation, SpecError
from frontlab.gallery import gallery_surface
from frontlab.surface import (FrontalSurface, IntrinsicCTB, ParamDomain, ReversedCoorientation, SwappedView,
                              check_compatibility, compatibility_residual, gauss_map_degree, load_spec,
                              to_frame_form)

CUSPIDAL_EDGE = b"""# cuspidal edge
[surface]
name = fc
domain = rectangle
u_range = -1, 1
v_range = -1, 1
x = u^2
y = u^3
z = v
nu_x = 3*u/sqrt(9*u^2+4)
nu_y = -2/sqrt(9*u^2+4)
nu_z = 0
"""

IDENTITY_CTB = """[ctb]
domain = flat_torus
u_period = 2*pi
v_period = 2*pi
p11 = 1
p12 = 0
p21 = 0
p22 = 1
omega_u = 0
omega_v = 0
"""


def test_load_frontal_cuspidal_edge():
    s = load_spec(CUSPIDAL_EDGE)
    assert isinstance(s, FrontalSurface) and s.name == "fc"
    # lambda = det(f_u, f_v, nu) = u sqrt(9u^2 + 4)
    u = np.array([-0.5, 0.0, 0.3])
    assert np.allclose(s.lam(u, 0.2 * np.ones(3)), u * np.sqrt(9 * u**2 + 4), atol=1e-14)


def test_nonunit_normal_rejected():
    text = CUSPIDAL_EDGE.replace(b"3*u/sqrt(9*u^2+4)", b"1").replace(b"-2/sqrt(9*u^2+4)", b"1")
    with pytest.raises(FrontalViolation):
        load_spec(text)


def test_identity_ctb():
    ctb = load_spec(IDENTITY_CTB)
    assert isinstance(ctb, IntrinsicCTB) and ctb.domain.compact
    assert ctb.domain.periods == pytest.approx((2 * math.pi, 2 * math.pi))
    us, vs = ctb.domain.grid(9)
    U, V = np.meshgrid(us, vs)
    assert np.all(ctb.lam(U, V) == 1.0)
    assert check_compatibility(ctb) == 0.0


@pytest.mark.parametrize("edit,message", [
    (lambda t: t.replace("domain = flat_torus", "domain = sphere"), "domain"),
    (lambda t: t + "p11 = 2\n", "duplicate"),
    (lambda t: t + "colour = red\n", "unknown key"),
    (lambda t: t.replace("omega_v = 0\n", ""), "missing"),
    (lambda t: t.replace("p12 = 0", "p12 = 0 +"), "syntax error at byte 3"),
    (lambda t: t.replace("u_period = 2*pi", "u_period = u"), "constant"),
])
def test_spec_errors(edit, message):
    with pytest.raises(SpecError) as err:
        load_spec(edit(IDENTITY_CTB))
    assert message in str(err.value)


def test_spec_round_trip():
    s = gallery_surface("swallowtail")
    t = load_spec(s.to_spec())
    us = np.linspace(-0.9, 0.9, 7)
    assert np.array_equal(s.lam(us, us[::-1]), t.lam(us, us[::-1]))


def test_compatibility_detects_bad_connection():
    dom = ParamDomain.rectangle((-1, 1), (-1, 1))
    bad = IntrinsicCTB([["1", "0"], ["0", "1"]], ["v", "0"], dom, check=False)
    # residual = |omega_u J psi(d_v)| = |v| for the identity frame matrix
    assert compatibility_residual(bad, np.array(0.5), np.array(0.25)) == pytest.approx(0.25, abs=1e-15)
    assert check_compatibility(bad) > 1e-7
    with pytest.raises(SpecError):
        IntrinsicCTB([["1", "0"], ["0", "1"]], ["v", "0"], dom)


@pytest.mark.parametrize("name", ["cuspidal-edge", "swallowtail", "double-swallowtail", "cuspidal-crosscap"])
def test_frame_form_compatible(name):
    ctb = to_frame_form(gallery_surface(name), check=False)
    assert check_compatibility(ctb) <= 1e-7


def test_frame_form_needs_global_axis():
    # the torus Gauss map is onto the sphere, so no fixed axis stays away from nu
    with pytest.raises(SpecError):
        to_frame_form(gallery_surface("torus-immersed"))


def test_first_fundamental_form_matches_extrinsic():
    s = gallery_surface("swallowtail")
    u, v = np.array([0.3, -0.2]), np.array([0.1, -0.5])
    I = s.first_fundamental_form(u, v)
    F = s.f_jets(u, v, 1)
    fu = np.stack([x.partial(1, 0) for x in F], -1)
    fv = np.stack([x.partial(0, 1) for x in F], -1)
    want = np.stack([np.stack([np.sum(fu * fu, -1), np.sum(fu * fv, -1)], -1),
                     np.stack([np.sum(fv * fu, -1), np.sum(fv * fv, -1)], -1)], -2)
    assert np.allclose(I, want, atol=1e-13)


def test_gauss_map_degree_torus():
    deg, err = gauss_map_degree(gallery_surface("torus-immersed"), cells=32)
    assert abs(deg) < 1e-10


def test_gauss_map_degree_constant_normal():
    dom = ParamDomain.flat_torus(2 * math.pi, 2 * math.pi)
    s = FrontalSurface(["cos(u)", "sin(v)", "0"], ["0", "0", "1"], dom)
    assert gauss_map_degree(s, cells=8)[0] == 0.0


def test_gauss_map_degree_parallel_torus_matches_base():
    # nu is shared by parallel surfaces: compare with brute force det(nu_u, nu_v, nu) on a fine grid
    s = gallery_surface("parallel-torus")
    deg = gauss_map_degree(s, cells=32)[0]
    n = 400
    us, vs = s.domain.grid(n)
    U, V = np.meshgrid(us, vs)
    N = s.nu_jets(U, V, 1)
    nu = np.stack([x.value for x in N], -1)
    nu_u = np.stack([x.partial(1, 0) for x in N], -1)
    nu_v = np.stack([x.partial(0, 1) for x in N], -1)
    brute = np.sum(np.cross(nu_u, nu_v) * nu) * (2 * math.pi / n) ** 2 / (4 * math.pi)
    assert abs(deg) < 1e-9 and abs(brute) < 1e-9


def test_swapped_and_reversed_views():
    s = gallery_surface("swallowtail")
    u, v = np.array([0.2, -0.4]), np.array([0.3, 0.1])
    assert np.allclose(SwappedView(s).lam(v, u), -s.lam(u, v), atol=1e-15)
    assert np.allclose(ReversedCoorientation(s).lam(u, v), -s.lam(u, v), atol=1e-15)
    # the first fundamental form does not depend on the co-orientation
    assert np.allclose(ReversedCoorientation(s).first_fundamental_form(u, v), s.first_fundamental_form(u, v))


def test_candidate_normal_off_sigma():
    s = gallery_surface("cuspidal-edge")
    u, v = np.array(0.4), np.array(0.2)
    cand = np.asarray(s.candidate_normal(u, v), float).reshape(-1)
    nu = np.array([x.value for x in s.nu_jets(u, v, 0)], float).reshape(-1)
    assert abs(abs(cand @ nu) - 1) < 1e-12

import pytest

from frontlab.errors import ExpectationFailed
from frontlab.gallery import (GalleryRun, gallery_entry, gallery_list, gallery_run, point_verdict, sectors_are,
                              sigma_is)

NAMES = ["cuspidal-edge", "swallowtail", "cuspidal-crosscap", "double-swallowtail", "cuspidal-lips", "scherbak",
         "tangent-developable-345", "torus-immersed", "parallel-torus", "wavy-parallel-torus"]


def test_list():
    assert gallery_list() == NAMES


def test_unknown_entry():
    with pytest.raises(KeyError):
        gallery_entry("klein-bottle")


def test_every_entry_is_tagged_and_frontal_checked():
    for name in NAMES:
        e = gallery_entry(name)
        assert e.expectations
        assert all(prov in ("PAPER", "DERIVED", "TRIVIAL") for _, prov, _ in e.expectations)
        assert e.expectations[0][0] == "<df, nu> = 0"


@pytest.mark.parametrize("name", ["double-swallowtail", "torus-immersed", "cuspidal-crosscap", "cuspidal-edge"])
def test_run_passes(name):
    res = gallery_run(name)
    assert res and all(r["passed"] for r in res), res


def test_predicates_can_fail():
    run = GalleryRun(gallery_entry("swallowtail"))
    assert point_verdict((0.0, 0.0), "A2")(run)[0] is False
    wrong = sigma_is(lambda u, v: 5 * u**2 + v, lambda u, v: (10 * u, 1 + 0 * u))
    assert wrong(run)[0] is False
    assert sectors_are((0.0, 0.0), [0.0, 6.283185307179586], 0.0, 6.283185307179586, "negative")(run)[0] is False


def test_strict_raises():
    e = gallery_entry("cuspidal-edge")
    saved = list(e.expectations)
    try:
        e.expectations.append(("origin is A3", "TRIVIAL", point_verdict((0.0, 0.0), "A3")))
        res = gallery_run("cuspidal-edge")
        assert res[-1]["passed"] is False
        with pytest.raises(ExpectationFailed):
            gallery_run("cuspidal-edge", strict=True)
    finally:
        e.expectations[:] = saved

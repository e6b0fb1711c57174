"""Serialization: JSON reports, CSV singular curves, OBJ meshes.

JSON output is deterministic: keys are sorted, numpy values are converted
to plain floats, and non-finite values are written as null.
"""

import io
import json
import math

import numpy as np

from .curvature import gaussian_density, singular_curvature_at
from .errors import SpecError
from .gb import integrate_singular_curvature

REPORT_VERSION = 1

CSV_COLUMNS = ["branch", "t", "u", "v", "lambda", "eta_u", "eta_v", "d_lambda_eta", "kappa_s", "dtau_dt"]


def plain(obj):
    """Recursively convert numpy scalars and arrays, tuples and dataclass reports to JSON types."""
    if hasattr(obj, "to_dict"):
        return plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj):
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


def curve_summary(c):
    return {
        "closed": bool(c.closed),
        "length": c.length,
        "samples": len(c.s),
        "start": c.points[0],
        "end": c.points[-1],
        "start_kind": c.start.get("kind"),
        "end_kind": c.end.get("kind"),
    }


def analysis_report(sset, sectors=None):
    """Report of a singular-set analysis: curves, special points, graph and kappa_s integrals.

    ``sectors`` maps peak indices (into sset.points) to PeakSectorReport.
    """
    view = sset.view
    total, err, per_arc = integrate_singular_curvature(sset)
    return {
        "format": "frontlab-report",
        "version": REPORT_VERSION,
        "kind": "analysis",
        "surface": view.name,
        "domain": view.domain.to_dict(),
        "grid": sset.grid,
        "tolerances": sset.tol.to_dict(),
        "scales": dict(sset.scales.__dict__),
        "curves": [curve_summary(c) for c in sset.curves],
        "points": [r.to_dict() for r in sset.points],
        "vertices": [{"kind": v.kind, "point": v.point, "report": v.report} for v in sset.vertices],
        "arcs": [dict(a.__dict__) for a in sset.arcs],
        "kappa_s": {"integral": total, "error": err, "per_arc": per_arc},
        "sectors": {str(k): v.to_dict() for k, v in sorted((sectors or {}).items())},
    }


def curve_rows(sset):
    """Rows of the singular-curve CSV, one block per arc of the singular graph."""
    view = sset.view
    rows = []
    for bi, arc in enumerate(sset.arcs):
        c = sset.curves[arc.curve]
        if c.eta is None:
            c.annotate(view)
        s = c.s
        if c.closed and arc.s1 > c.length:
            s = np.concatenate([s, s + c.length])
        keep = np.nonzero((s >= arc.s0) & (s <= arc.s1))[0]
        if c.closed and arc.s1 > c.length:
            idx = keep % len(c.s)
        else:
            idx = keep
        pts = c.points[idx]
        with np.errstate(all="ignore"):
            kappa, _, speed = singular_curvature_at(view, pts[:, 0], pts[:, 1], c.tangents[idx])
        for j, k in enumerate(idx):
            rows.append([bi, s[keep[j]] - arc.s0, pts[j, 0], pts[j, 1], c.lam[k], c.eta[k, 0], c.eta[k, 1],
                         c.dlam_eta[k], kappa[j], speed[j]])
    return rows


def curves_csv(sset):
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in curve_rows(sset):
        out.write("%d," % r[0] + ",".join(repr(float(x)) for x in r[1:]) + "\n")
    return out.getvalue()


def mesh_obj(view, n=200):
    """Wavefront OBJ of f on an n x n parameter grid.

    Each vertex line is followed by an extension comment ``#@ lambda K``
    (K is nan where lambda vanishes).  On a torus the faces wrap around.
    """
    if not hasattr(view, "f_jets"):
        raise SpecError("mesh export needs an extrinsic surface ([surface] spec)")
    dom = view.domain
    if dom.compact:
        us = dom.u_range[0] + dom.periods[0] * np.arange(n) / n
        vs = dom.v_range[0] + dom.periods[1] * np.arange(n) / n
    else:
        us = np.linspace(dom.u_range[0], dom.u_range[1], n)
        vs = np.linspace(dom.v_range[0], dom.v_range[1], n)
    U, V = np.meshgrid(us, vs, indexing="ij")
    F = np.stack([j.value for j in view.f_jets(U, V, 0)], -1)
    K, _, _ = gaussian_density(view, U, V)
    lam = view.lam(U, V)
    out = io.StringIO()
    out.write("# frontlab mesh of %s, %d x %d vertices\n" % (view.name or "surface", n, n))
    out.write("# each vertex is followed by '#@ lambda K'\n")
    for i in range(n):
        for j in range(n):
            x = F[i, j]
            out.write("v %.12g %.12g %.12g\n#@ %.12g %.12g\n" % (x[0], x[1], x[2], lam[i, j], K[i, j]))
    m = n if dom.compact else n - 1
    for i in range(m):
        for j in range(m):
            a = i * n + j + 1
            b = ((i + 1) % n) * n + j + 1
            c = ((i + 1) % n) * n + (j + 1) % n + 1
            d = i * n + (j + 1) % n + 1
            out.write("f %d %d %d\nf %d %d %d\n" % (a, b, c, a, c, d))
    return out.getvalue()

"""Command-line front end.

    frontlab analyze SOURCE [--grid N] [--format json|csv] [-o FILE] [--plot DIR]
    frontlab gb SOURCE (--global | --local TRIANGLE.json) [--refine K] [-o FILE] [--plot DIR]
    frontlab export SOURCE {mesh,singular-curves,report,spec} [-o FILE] [--mesh-n N]
    frontlab gallery list | run [NAME ...] | spec NAME

SOURCE is a surface-spec file or ``gallery:NAME``.  Exit codes: 0 pass,
1 input error, 2 theorem check failed, 3 hypothesis violation.  The
environment variable FRONTLAB_THREADS sets the number of worker processes
used by ``gallery run`` (results are always reported in catalog order).
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import export
from .errors import FrontlabError, HypothesisViolation, NotAdmissible
from .gallery import gallery_entry, gallery_list, gallery_run
from .gb import triangle_from_spec, verify_global_GB, verify_local_GB
from .sectors import sector_angles
from .singular import Tolerances, analyze
from .surface import load_spec

EXIT_PASS, EXIT_INPUT, EXIT_FAIL, EXIT_HYPOTHESIS = 0, 1, 2, 3


class InputError(FrontlabError):
    exit_code = EXIT_INPUT


def load_source(source):
    if source.startswith("gallery:"):
        name = source.split(":", 1)[1]
        try:
            return gallery_entry(name).surface()
        except KeyError as err:
            raise InputError(err.args[0]) from None
    try:
        with open(source, "rb") as fh:
            data = fh.read()
    except OSError as err:
        raise InputError("cannot read %s: %s" % (source, err.strerror)) from None
    return load_spec(data)


def tolerances(args):
    tol = Tolerances()
    for flag, field in (("tol_nondeg", "nondeg"), ("tol_angle", "angle")):
        val = getattr(args, flag, None)
        if val is not None:
            if not val > 0:
                raise InputError("--%s must be positive" % flag.replace("_", "-"))
            setattr(tol, field, val)
    return tol


def threads():
    raw = os.environ.get("FRONTLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError("FRONTLAB_THREADS must be an integer, got %r" % raw) from None
    return max(1, n)


def emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _sectors(view, sset):
    out = {}
    for i, rep in enumerate(sset.points):
        if rep.is_peak:
            out[i] = sector_angles(view, rep, sset.scales, sset.tol)
    return out


def cmd_analyze(args):
    view = load_source(args.source)
    sset = analyze(view, args.grid, tolerances(args))
    if args.format == "csv":
        emit(export.curves_csv(sset), args.output)
    else:
        emit(export.dumps(export.analysis_report(sset, _sectors(view, sset))), args.output)
    if args.plot:
        from .plotting import render_all

        render_all(args.plot, sset=sset)
    return EXIT_HYPOTHESIS if sset.unclassified else EXIT_PASS


def cmd_gb(args):
    view = load_source(args.source)
    tol = tolerances(args)
    k = args.refine
    if args.local:
        try:
            with open(args.local) as fh:
                tri = json.load(fh)
        except (OSError, ValueError) as err:
            raise InputError("cannot read triangle file %s: %s" % (args.local, err)) from None
        sset = analyze(view, args.grid, tol)
        rep = verify_local_GB(view, tri, sset=sset, nodes=8, panels=4 * 2**k, tol=tol)
        body = {"format": "frontlab-report", "version": export.REPORT_VERSION, "kind": "local-gb",
                "surface": view.name, "triangle": tri, "result": rep.to_dict(),
                "verdict": "PASS" if rep.passed else "FAIL"}
        plots = {"report": rep, "triangle": triangle_from_spec(view, tri, sset)[0], "sset": sset}
    else:
        sset = analyze(view, args.grid, tol)
        rep = verify_global_GB(view, n=args.grid, cells=64 * 2**k, tol=tol, sset=sset)
        body = {"format": "frontlab-report", "version": export.REPORT_VERSION, "kind": "global-gb",
                "surface": view.name, "result": rep.to_dict(), "verdict": "PASS" if rep.passed else "FAIL"}
        plots = {"report": rep, "sset": sset}
    emit(export.dumps(body), args.output)
    if args.plot:
        from .plotting import render_all

        render_all(args.plot, **plots)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_export(args):
    view = load_source(args.source)
    if args.what == "mesh":
        emit(export.mesh_obj(view, args.mesh_n), args.output)
    elif args.what == "spec":
        emit(view.to_spec(), args.output)
    else:
        sset = analyze(view, args.grid, tolerances(args))
        if args.what == "singular-curves":
            emit(export.curves_csv(sset), args.output)
        else:
            emit(export.dumps(export.analysis_report(sset, _sectors(view, sset))), args.output)
    return EXIT_PASS


def _run_one(name):
    return name, gallery_run(name)


def cmd_gallery(args):
    if args.action == "list":
        lines = []
        for name in gallery_list():
            e = gallery_entry(name)
            lines.append(name + ("  (%s)" % e.note if e.note else ""))
            lines += ["    [%s] %s" % (prov, desc) for desc, prov, _ in e.expectations]
        emit("\n".join(lines) + "\n", args.output)
        return EXIT_PASS
    if args.action == "spec":
        if len(args.names) != 1:
            raise InputError("gallery spec takes exactly one name")
        emit(load_source("gallery:" + args.names[0]).to_spec(), args.output)
        return EXIT_PASS
    names = args.names or gallery_list()
    for n in names:
        try:
            gallery_entry(n)
        except KeyError as err:
            raise InputError(err.args[0]) from None
    workers = min(threads(), len(names))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, names))
    else:
        results = [_run_one(n) for n in names]
    ok = all(r["passed"] for _, res in results for r in res)
    if args.format == "json":
        emit(export.dumps({"format": "frontlab-report", "version": export.REPORT_VERSION, "kind": "gallery",
                           "entries": {n: res for n, res in results}, "verdict": "PASS" if ok else "FAIL"}),
             args.output)
    else:
        lines = []
        for name, res in results:
            for r in res:
                lines.append("%s %s [%s] %s: %s" % ("PASS" if r["passed"] else "FAIL", name, r["provenance"],
                                                     r["description"], r["observed"]))
        emit("\n".join(lines) + "\n", args.output)
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="frontlab", description="Singularities and Gauss-Bonnet checks for frontals.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=False):
        sp.add_argument("--grid", type=int, default=129, help="seed/trace grid resolution (>= 8)")
        sp.add_argument("--tol-nondeg", type=float, default=None)
        sp.add_argument("--tol-angle", type=float, default=None)
        sp.add_argument("-o", "--output", default=None, help="output file (default stdout)")
        if fmt:
            sp.add_argument("--format", choices=["json", "csv"], default="json")

    a = sub.add_parser("analyze", help="trace Sigma, classify its points, kappa_s profiles")
    a.add_argument("source")
    common(a, fmt=True)
    a.add_argument("--plot", metavar="DIR", default=None, help="write figures to DIR")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("gb", help="verify the local or global Gauss-Bonnet formula")
    g.add_argument("source")
    mode = g.add_mutually_exclusive_group(required=True)
    mode.add_argument("--local", metavar="TRIANGLE", help="triangle JSON file")
    mode.add_argument("--global", dest="global_", action="store_true")
    common(g)
    g.add_argument("--refine", type=int, default=0, help="refinement level k (cells or panels times 2^k)")
    g.add_argument("--plot", metavar="DIR", default=None)
    g.set_defaults(func=cmd_gb)

    e = sub.add_parser("export", help="export mesh (OBJ), singular curves (CSV), report (JSON) or spec")
    e.add_argument("source")
    e.add_argument("what", choices=["mesh", "singular-curves", "report", "spec"])
    common(e)
    e.add_argument("--mesh-n", type=int, default=200)
    e.set_defaults(func=cmd_export)

    y = sub.add_parser("gallery", help="list, run or export the example catalog")
    y.add_argument("action", choices=["list", "run", "spec"])
    y.add_argument("names", nargs="*")
    y.add_argument("--format", choices=["text", "json"], default="text")
    y.add_argument("-o", "--output", default=None)
    y.set_defaults(func=cmd_gallery)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    if getattr(args, "grid", 129) < 8:
        sys.stderr.write("frontlab: --grid must be at least 8\n")
        return EXIT_INPUT
    try:
        return args.func(args)
    except HypothesisViolation as err:
        sys.stderr.write("frontlab: hypothesis violation: %s\n" % err)
        return EXIT_HYPOTHESIS
    except NotAdmissible as err:
        sys.stderr.write("frontlab: triangle not admissible: %s\n" % err)
        return EXIT_HYPOTHESIS
    except FrontlabError as err:
        sys.stderr.write("frontlab: %s: %s\n" % (type(err).__name__, err))
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Matplotlib figures for reports, written to files (Agg backend)."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .export import curve_rows  # noqa: E402

_MARKERS = {"A3": ("o", "tab:red"), "DegeneratePeak": ("s", "tab:purple"), "IsolatedPeak": ("D", "tab:green"),
            "NonDegeneratePeak": ("^", "tab:orange"), "A2": ("x", "tab:gray"), "Unclassified": ("*", "black")}


def _domain_grid(view, n=201):
    dom = view.domain
    if dom.compact:
        us = dom.u_range[0] + dom.periods[0] * np.linspace(0, 1, n)
        vs = dom.v_range[0] + dom.periods[1] * np.linspace(0, 1, n)
    else:
        us = np.linspace(*dom.u_range, n)
        vs = np.linspace(*dom.v_range, n)
    return np.meshgrid(us, vs)


def plot_singular_set(sset, path, title=None):
    """Sign of lambda, traced Sigma and classified points in the parameter domain."""
    view = sset.view
    U, V = _domain_grid(view)
    L = view.lam(U, V)
    fig, ax = plt.subplots(figsize=(6, 5.5))
    ax.contourf(U, V, np.sign(L), levels=[-1.5, 0, 1.5], colors=["#dde7f5", "#f7e3d4"])
    for c in sset.curves:
        p = np.stack(view.domain.wrap(c.points[:, 0], c.points[:, 1]), -1)
        jump = np.nonzero(np.linalg.norm(np.diff(p, axis=0), axis=1) > 10 * sset.scales.cell)[0] + 1
        for piece in np.split(p, jump):
            ax.plot(piece[:, 0], piece[:, 1], color="black", lw=1.2)
    seen = set()
    for r in sset.points:
        m, col = _MARKERS.get(r.verdict, ("*", "black"))
        ax.plot(r.point[0], r.point[1], m, color=col, ms=8, label=None if r.verdict in seen else r.verdict)
        seen.add(r.verdict)
    if seen:
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_aspect("equal")
    ax.set_title(title or "%s: lambda > 0 (orange), lambda < 0 (blue)" % (view.name or "surface"), fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_kappa_s(sset, path):
    """kappa_s dtau/dt along every arc of Sigma (finite at peaks) and kappa_s itself."""
    rows = np.array(curve_rows(sset), float) if sset.arcs else np.zeros((0, 10))
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6.5, 6), sharex=True)
    for b in np.unique(rows[:, 0]) if len(rows) else []:
        r = rows[rows[:, 0] == b]
        a1.plot(r[:, 1], r[:, 8] * r[:, 9], lw=1, label="arc %d" % b)
        a2.plot(r[:, 1], r[:, 8], lw=1)
    a1.set_ylabel("kappa_s dtau/dt")
    a2.set_ylabel("kappa_s")
    a2.set_xlabel("arclength along the arc in (u, v)")
    if len(rows):
        a1.legend(fontsize=7)
        lim = np.nanpercentile(np.abs(rows[:, 8]), 95) * 3 + 1e-12
        a2.set_ylim(-lim, lim)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_gb_terms(report, path):
    """Bar chart of the terms of a global or local Gauss-Bonnet report."""
    d = report.to_dict()
    if "int_KdA" in d:
        names = ["int K dA", "2 int kappa_s", "int K dA-hat", "2 pi chi_E"]
        vals = [d["int_KdA"], 2 * d["int_kappa_s"], d["int_KdAhat"], 2 * np.pi * d["chi_E"]]
        title = "global: residual A %.2e, residual B %.2e" % (d["residual_A"], d["residual_B"])
    else:
        names = ["angles - pi", "boundary", "area", "2 int kappa_s"]
        vals = [d["angle_sum"] - np.pi, d["boundary"], d["area"], 2 * d["interior_sigma"]]
        title = "local: residual %.2e (budget %.1e)" % (d["residual"], d["budget"])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, vals, color=["tab:blue", "tab:orange", "tab:green", "tab:red"])
    ax.axhline(0, color="black", lw=0.8)
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_triangle(view, edges, sset, path):
    """The triangle of a local check over the sign of lambda and Sigma."""
    U, V = _domain_grid(view)
    fig, ax = plt.subplots(figsize=(6, 5.5))
    ax.contourf(U, V, np.sign(view.lam(U, V)), levels=[-1.5, 0, 1.5], colors=["#dde7f5", "#f7e3d4"])
    for c in sset.curves:
        ax.plot(c.points[:, 0], c.points[:, 1], color="black", lw=1)
    for e in edges:
        p = e.polyline()
        ax.plot(p[:, 0], p[:, 1], color="tab:red", lw=2)
    ax.set_aspect("equal")
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_all(dirname, sset=None, report=None, triangle=None):
    """Write the figures that apply; returns the list of file paths."""
    os.makedirs(dirname, exist_ok=True)
    out = []
    if sset is not None:
        out.append(plot_singular_set(sset, os.path.join(dirname, "singular_set.png")))
        out.append(plot_kappa_s(sset, os.path.join(dirname, "kappa_s.png")))
    if report is not None:
        out.append(plot_gb_terms(report, os.path.join(dirname, "gb_terms.png")))
    if triangle is not None and sset is not None:
        out.append(plot_triangle(sset.view, triangle, sset, os.path.join(dirname, "triangle.png")))
    return out

"""Input models: extrinsic frontals (f, nu) and intrinsic coherent tangent bundles.

Both models expose the same local data through :meth:`CTBView.local`:
the matrix ``P`` of psi in a positive orthonormal frame {e1, e2} of the
bundle (columns are psi(d/du), psi(d/dv)), the connection form
``omega = omega_u du + omega_v dv`` of that frame, and the signed area
density ``lam``.  All of it comes back as jets, so derivatives are exact.

Frame conventions for a frontal: e1 is the normalized projection of a
coordinate axis onto nu-perp (the axis least aligned with nu at the
evaluation point unless pinned with ``ref``), e2 = nu x e1, and the
co-orientation is mu(X, Y) = det(X, Y, nu).  Then det P = det(f_u, f_v, nu).
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import jet as J
from .errors import ExprSyntaxError, FrontalViolation, NonCompactDomain, SpecError, UnknownIdentifier
from .expr import Expression, is_constant, parse, eval_jet

TOL_UNIT = 1e-9
TOL_PERP = 1e-9
TOL_COMPAT = 1e-7


@dataclass(frozen=True)
class ParamDomain:
    kind: str  # "rectangle" or "flat_torus"
    u_range: tuple
    v_range: tuple
    closed: bool = True

    def __post_init__(self):
        for lo, hi in (self.u_range, self.v_range):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise SpecError("domain ranges must be finite with positive length")
        if self.kind not in ("rectangle", "flat_torus"):
            raise SpecError("unknown domain kind %r" % self.kind)

    @classmethod
    def rectangle(cls, u_range, v_range, closed=True):
        return cls("rectangle", tuple(map(float, u_range)), tuple(map(float, v_range)), closed)

    @classmethod
    def flat_torus(cls, u_period, v_period):
        return cls("flat_torus", (0.0, float(u_period)), (0.0, float(v_period)))

    @property
    def compact(self):
        return self.kind == "flat_torus"

    @property
    def periods(self):
        return (self.u_range[1] - self.u_range[0], self.v_range[1] - self.v_range[0])

    @property
    def scale(self):
        return math.hypot(*self.periods)

    def contains(self, u, v, pad=0.0):
        if self.compact:
            return np.ones(np.broadcast(u, v).shape, dtype=bool)
        u = np.asarray(u)
        v = np.asarray(v)
        return ((u >= self.u_range[0] - pad) & (u <= self.u_range[1] + pad)
                & (v >= self.v_range[0] - pad) & (v <= self.v_range[1] + pad))

    def wrap(self, u, v):
        if not self.compact:
            return u, v
        pu, pv = self.periods
        return (np.mod(np.asarray(u) - self.u_range[0], pu) + self.u_range[0],
                np.mod(np.asarray(v) - self.v_range[0], pv) + self.v_range[0])

    def delta(self, a, b):
        """Displacement b - a, reduced to the nearest periodic image on a torus."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.compact:
            p = np.array(self.periods)
            d = d - p * np.round(d / p)
        return d

    def grid(self, n):
        """Deterministic n x n grid of nodes (row-major); torus grids omit the duplicate seam."""
        if self.compact:
            us = self.u_range[0] + self.periods[0] * np.arange(n) / n
            vs = self.v_range[0] + self.periods[1] * np.arange(n) / n
        else:
            us = np.linspace(*self.u_range, n)
            vs = np.linspace(*self.v_range, n)
        return us, vs

    def to_dict(self):
        if self.compact:
            return {"kind": self.kind, "u_period": self.periods[0], "v_period": self.periods[1]}
        return {"kind": self.kind, "u_range": list(self.u_range), "v_range": list(self.v_range)}


@dataclass
class Local:
    """Jets of the frame data at a batch of points."""

    P: list  # 2x2 nested list of Jet2, P[i][j] = <psi(d_j), e_i>
    lam: J.Jet2
    omega: list = None  # [omega_u, omega_v], one order below P
    f: list = None
    nu: list = None
    e1: list = None
    e2: list = None


def _matrix(P):
    return np.stack([np.stack([P[0][0].value, P[0][1].value], -1),
                     np.stack([P[1][0].value, P[1][1].value], -1)], -2)


class CTBView:
    """Uniform accessor over both input models."""

    domain = None
    name = ""

    def local(self, u, v, order, ref=None):
        raise NotImplementedError

    def lam_jet(self, u, v, order=0):
        return self.local(u, v, order).lam

    def lam(self, u, v):
        return self.lam_jet(u, v, 0).value

    def psi_matrix(self, u, v, ref=None):
        return _matrix(self.local(u, v, 0, ref).P)

    def first_fundamental_form(self, u, v):
        P = self.psi_matrix(u, v)
        return np.swapaxes(P, -1, -2) @ P

    def klam(self, u, v):
        """The smooth density K * lambda of dω = K dÂ."""
        raise NotImplementedError

    def klam_frame(self, u, v):
        """K * lambda as the curl of the connection form of the frame."""
        loc = self.local(u, v, 2)
        wu, wv = loc.omega
        return wv.diff(0).value - wu.diff(1).value

    def reference_axis(self, u, v):
        return None


def _vec_jets(exprs, u, v, order):
    return [e.jet(u, v, order) for e in exprs]


def frame_from_normal(nu, ref):
    """Orthonormal frame (e1, e2) of nu-perp from per-point reference axes ``ref`` (..., 3)."""
    r = [ref[..., i] for i in range(3)]
    rn = nu[0] * r[0] + nu[1] * r[1] + nu[2] * r[2]
    proj = [r[i] - rn * nu[i] for i in range(3)]
    norm = J.sqrt(J.dot(proj, proj))
    e1 = [p / norm for p in proj]
    e2 = J.cross(nu, e1)
    return e1, e2


def least_aligned_axis(nu_values):
    """Coordinate axis least aligned with nu, per point, as one-hot vectors."""
    idx = np.argmin(np.abs(nu_values), axis=-1)
    return np.eye(3)[idx]


class FrontalSurface(CTBView):
    def __init__(self, f, nu, domain, name="", check=True):
        self.f = [Expression(e) for e in f]
        self.nu = [Expression(e) for e in nu]
        self.domain = domain
        self.name = name
        if len(self.f) != 3 or len(self.nu) != 3:
            raise SpecError("f and nu need three components each")
        if check:
            self.check_frontal()

    def f_jets(self, u, v, order):
        return _vec_jets(self.f, u, v, order)

    def nu_jets(self, u, v, order):
        return _vec_jets(self.nu, u, v, order)

    def check_frontal(self, n=33):
        """Spot-check |nu| = 1 and nu . f_u = nu . f_v = 0 on an n x n grid."""
        us, vs = self.domain.grid(n)
        U, V = np.meshgrid(us, vs, indexing="xy")
        F = self.f_jets(U, V, 1)
        N = [j.value for j in self.nu_jets(U, V, 0)]
        checks = [
            ("unit normal", np.abs(np.sqrt(sum(x * x for x in N)) - 1.0), TOL_UNIT),
            ("nu . f_u", np.abs(sum(N[i] * F[i].partial(1, 0) for i in range(3))), TOL_PERP),
            ("nu . f_v", np.abs(sum(N[i] * F[i].partial(0, 1) for i in range(3))), TOL_PERP),
        ]
        for which, err, tol in checks:
            k = np.unravel_index(np.argmax(err), err.shape)
            if err[k] > tol:
                raise FrontalViolation((float(U[k]), float(V[k])), which, float(err[k]))

    def reference_axis(self, u, v):
        N = np.stack([j.value for j in self.nu_jets(u, v, 0)], -1)
        return least_aligned_axis(N)

    def lam_jet(self, u, v, order=0):
        """det(f_u, f_v, nu) without building the frame (the tracer's hot path)."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        F = self.f_jets(u, v, order + 1)
        N = self.nu_jets(u, v, order)
        return J.det3([x.diff(0) for x in F], [x.diff(1) for x in F], N)

    def local(self, u, v, order, ref=None):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        F = self.f_jets(u, v, order + 1)
        N = self.nu_jets(u, v, order)
        fu = [x.diff(0) for x in F]
        fv = [x.diff(1) for x in F]
        if ref is None:
            ref = least_aligned_axis(np.stack([x.value for x in N], -1))
        else:
            ref = np.broadcast_to(np.asarray(ref, float), u.shape + (3,))
        e1, e2 = frame_from_normal(N, ref)
        P = [[J.dot(fu, e1), J.dot(fv, e1)], [J.dot(fu, e2), J.dot(fv, e2)]]
        lam = J.det3(fu, fv, N)
        omega = None
        if order >= 1:
            omega = [-J.dot([x.diff(a) for x in e1], [y.truncate(order - 1) for y in e2])
                     for a in (0, 1)]
        return Local(P=P, lam=lam, omega=omega, f=F, nu=N, e1=e1, e2=e2)

    def klam(self, u, v):
        N = self.nu_jets(u, v, 1)
        nu0 = [x.value for x in N]
        nuu = [x.partial(1, 0) for x in N]
        nuv = [x.partial(0, 1) for x in N]
        c = np.cross(np.stack(nuu, -1), np.stack(nuv, -1))
        return np.sum(c * np.stack(nu0, -1), -1)

    def candidate_normal(self, u, v):
        """Normalized f_u x f_v; only meaningful where f is an immersion. Never auto-accepted."""
        F = self.f_jets(u, v, 1)
        fu = np.stack([x.partial(1, 0) for x in F], -1)
        fv = np.stack([x.partial(0, 1) for x in F], -1)
        n = np.cross(fu, fv)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def to_spec(self):
        d = self.domain.to_dict()
        lines = ["[surface]", "name = %s" % (self.name or "surface"), "domain = %s" % d["kind"]]
        if self.domain.compact:
            lines += ["u_period = %r" % d["u_period"], "v_period = %r" % d["v_period"]]
        else:
            lines += ["u_range = %r, %r" % tuple(d["u_range"]), "v_range = %r, %r" % tuple(d["v_range"])]
        for key, e in zip(("x", "y", "z", "nu_x", "nu_y", "nu_z"), self.f + self.nu):
            lines.append("%s = %s" % (key, e.text))
        return "\n".join(lines) + "\n"


class IntrinsicCTB(CTBView):
    """Bundle given by the frame matrix of psi and the connection form.

    ``P`` entries and ``omega`` entries are expressions, or any object with a
    ``jet(u, v, order)`` method (used by :func:`to_frame_form`).
    """

    def __init__(self, P, omega, domain, name="", check=True):
        def field_(x):
            return x if hasattr(x, "jet") and not isinstance(x, str) else Expression(x)

        self.P = [[field_(P[0][0]), field_(P[0][1])], [field_(P[1][0]), field_(P[1][1])]]
        self.omega = [field_(omega[0]), field_(omega[1])]
        self.domain = domain
        self.name = name
        if check:
            res = check_compatibility(self)
            if res > TOL_COMPAT:
                raise SpecError("compatibility condition fails: residual %.3g > %.1g" % (res, TOL_COMPAT))

    def local(self, u, v, order, ref=None):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        P = [[x.jet(u, v, order) for x in row] for row in self.P]
        lam = P[0][0] * P[1][1] - P[0][1] * P[1][0]
        omega = None
        if order >= 1:
            omega = [w.jet(u, v, order - 1) for w in self.omega]
        return Local(P=P, lam=lam, omega=omega)

    def klam(self, u, v):
        wu = self.omega[0].jet(u, v, 1)
        wv = self.omega[1].jet(u, v, 1)
        return wv.partial(1, 0) - wu.partial(0, 1)

    klam_frame = klam

    def to_spec(self):
        d = self.domain.to_dict()
        lines = ["[ctb]", "name = %s" % (self.name or "ctb"), "domain = %s" % d["kind"]]
        if self.domain.compact:
            lines += ["u_period = %r" % d["u_period"], "v_period = %r" % d["v_period"]]
        else:
            lines += ["u_range = %r, %r" % tuple(d["u_range"]), "v_range = %r, %r" % tuple(d["v_range"])]
        keys = ("p11", "p12", "p21", "p22", "omega_u", "omega_v")
        vals = [self.P[0][0], self.P[0][1], self.P[1][0], self.P[1][1]] + self.omega
        for key, e in zip(keys, vals):
            if not isinstance(e, Expression):
                raise SpecError("derived fields cannot be written as a spec file")
            lines.append("%s = %s" % (key, e.text))
        return "\n".join(lines) + "\n"


class _FrameEntry:
    """One scalar field of the frame form of a frontal with a pinned reference axis."""

    def __init__(self, surface, ref, key):
        self.surface = surface
        self.ref = np.asarray(ref, float)
        self.key = key

    def jet(self, u, v, order):
        if self.key[0] == "P":
            loc = self.surface.local(u, v, order, self.ref)
            return loc.P[self.key[1]][self.key[2]]
        loc = self.surface.local(u, v, order + 1, self.ref)
        return loc.omega[self.key[1]]


def to_frame_form(surface, ref=None, check=True):
    """Convert a frontal to an :class:`IntrinsicCTB` using one fixed reference axis.

    The reference axis must stay away from nu on the whole domain; by default
    it is the axis least aligned with nu at the domain center.
    """
    if ref is None:
        cu = 0.5 * sum(surface.domain.u_range)
        cv = 0.5 * sum(surface.domain.v_range)
        ref = surface.reference_axis(np.array(cu), np.array(cv))
    us, vs = surface.domain.grid(33)
    U, V = np.meshgrid(us, vs)
    N = np.stack([x.value for x in surface.nu_jets(U, V, 0)], -1)
    proj = np.sqrt(np.maximum(0.0, 1.0 - (N @ np.asarray(ref, float)) ** 2))
    if proj.min() <= 0.1:
        raise SpecError("reference axis too close to nu (|proj| = %.3g)" % proj.min())
    P = [[_FrameEntry(surface, ref, ("P", i, j)) for j in range(2)] for i in range(2)]
    omega = [_FrameEntry(surface, ref, ("w", a)) for a in range(2)]
    return IntrinsicCTB(P, omega, surface.domain, name=surface.name + "[frame]", check=check)


def _rotate(s):
    """J s = (-s2, s1), rotation by +90 degrees in the frame."""
    return [-s[1], s[0]]


def compatibility_residual(ctb, u, v):
    loc = ctb.local(u, v, 1)
    P, (wu, wv) = loc.P, loc.omega
    cu = [P[0][0], P[1][0]]
    cv = [P[0][1], P[1][1]]
    Jcu = _rotate([x.value for x in cu])
    Jcv = _rotate([x.value for x in cv])
    res = [cv[i].partial(1, 0) - cu[i].partial(0, 1) - wu.value * Jcv[i] + wv.value * Jcu[i]
           for i in range(2)]
    return np.hypot(res[0], res[1])


def check_compatibility(ctb, n=33):
    """Max over an n x n grid of |D_u psi(d_v) - D_v psi(d_u)| (zero bracket of coordinate fields)."""
    us, vs = ctb.domain.grid(n)
    U, V = np.meshgrid(us, vs)
    return float(np.max(compatibility_residual(ctb, U, V)))


def gauss_map_degree(surface, cells=64, nodes=6):
    """(1 / 4 pi) times the integral of det(nu_u, nu_v, nu) over a flat torus."""
    if not surface.domain.compact:
        raise NonCompactDomain("the Gauss map degree needs a compact (flat torus) domain")
    from .quadrature import integrate_smooth

    val, err = integrate_smooth(surface.klam, surface.domain, cells, nodes)
    return val / (4 * math.pi), err / (4 * math.pi)


# spec files --------------------------------------------------------------

_SURFACE_KEYS = {"name", "domain", "u_range", "v_range", "u_period", "v_period",
                 "x", "y", "z", "nu_x", "nu_y", "nu_z"}
_CTB_KEYS = {"name", "domain", "u_range", "v_range", "u_period", "v_period",
             "p11", "p12", "p21", "p22", "omega_u", "omega_v"}


def _constant(key, text):
    try:
        tree = parse(text)
    except (ExprSyntaxError, UnknownIdentifier) as err:
        raise SpecError("%s: %s" % (key, err)) from err
    if not is_constant(tree):
        raise SpecError("%s must be a constant expression" % key)
    return float(eval_jet(tree, (0.0, 0.0), 0).value)


def _expression(key, text):
    try:
        return Expression(text)
    except ExprSyntaxError as err:
        raise SpecError("%s: syntax error at byte %d, expected %s"
                        % (key, err.offset, " or ".join(err.expected))) from err
    except UnknownIdentifier as err:
        raise SpecError("%s: unknown identifier %r" % (key, err.name)) from err


def parse_spec_text(text):
    """Return (section, {key: value}) of a surface-spec file."""
    section = None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            if section is not None:
                raise SpecError("line %d: only one section per file" % lineno)
            section = m.group(1)
            if section not in ("surface", "ctb"):
                raise SpecError("line %d: unknown section [%s]" % (lineno, section))
            continue
        if "=" not in line:
            raise SpecError("line %d: expected 'key = value'" % lineno)
        if section is None:
            raise SpecError("line %d: key before section header" % lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        allowed = _SURFACE_KEYS if section == "surface" else _CTB_KEYS
        if key not in allowed:
            raise SpecError("line %d: unknown key %r" % (lineno, key))
        if key in values:
            raise SpecError("line %d: duplicate key %r" % (lineno, key))
        values[key] = val
    if section is None:
        raise SpecError("missing [surface] or [ctb] section")
    return section, values


def _domain(values):
    kind = values.get("domain")
    if kind == "rectangle":
        for key in ("u_range", "v_range"):
            if key not in values:
                raise SpecError("missing field %r" % key)
        rng = []
        for key in ("u_range", "v_range"):
            parts = [p.strip() for p in values[key].split(",")]
            if len(parts) != 2:
                raise SpecError("%s must be 'lo, hi'" % key)
            rng.append(tuple(_constant(key, p) for p in parts))
        return ParamDomain.rectangle(*rng)
    if kind == "flat_torus":
        for key in ("u_period", "v_period"):
            if key not in values:
                raise SpecError("missing field %r" % key)
        return ParamDomain.flat_torus(_constant("u_period", values["u_period"]),
                                      _constant("v_period", values["v_period"]))
    raise SpecError("domain must be 'rectangle' or 'flat_torus'")


def load_spec(data):
    """Parse and validate a surface-spec file (bytes or str)."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as err:
            raise SpecError("spec file is not UTF-8") from err
    section, values = parse_spec_text(data)
    domain = _domain(values)
    name = values.get("name", "")
    if section == "surface":
        keys = ("x", "y", "z", "nu_x", "nu_y", "nu_z")
        missing = [k for k in keys if k not in values]
        if missing:
            raise SpecError("missing field(s) %s" % ", ".join(missing))
        ex = [_expression(k, values[k]) for k in keys]
        return FrontalSurface(ex[:3], ex[3:], domain, name=name)
    keys = ("p11", "p12", "p21", "p22", "omega_u", "omega_v")
    missing = [k for k in keys if k not in values]
    if missing:
        raise SpecError("missing field(s) %s" % ", ".join(missing))
    ex = [_expression(k, values[k]) for k in keys]
    return IntrinsicCTB([[ex[0], ex[1]], [ex[2], ex[3]]], ex[4:], domain, name=name)


# orientation changes --------------------------------------------------------


class SwappedView(CTBView):
    """The same bundle in the coordinates (u', v') = (v, u): reverses the domain orientation."""

    def __init__(self, base):
        self.base = base
        d = base.domain
        self.domain = ParamDomain(d.kind, d.v_range, d.u_range, d.closed)
        self.name = base.name + "[swapped]"

    def local(self, u, v, order, ref=None):
        loc = self.base.local(v, u, order, ref)
        P = [[J.swap(loc.P[0][1]), J.swap(loc.P[0][0])], [J.swap(loc.P[1][1]), J.swap(loc.P[1][0])]]
        omega = None if loc.omega is None else [J.swap(loc.omega[1]), J.swap(loc.omega[0])]
        return Local(P=P, lam=-J.swap(loc.lam), omega=omega)

    def lam_jet(self, u, v, order=0):
        return -J.swap(self.base.lam_jet(v, u, order))

    def klam(self, u, v):
        return -self.base.klam(v, u)


class ReversedCoorientation(CTBView):
    """The same bundle with mu replaced by -mu (frame {e1, -e2})."""

    def __init__(self, base):
        self.base = base
        self.domain = base.domain
        self.name = base.name + "[-mu]"

    def local(self, u, v, order, ref=None):
        loc = self.base.local(u, v, order, ref)
        P = [loc.P[0], [-loc.P[1][0], -loc.P[1][1]]]
        omega = None if loc.omega is None else [-loc.omega[0], -loc.omega[1]]
        return Local(P=P, lam=-loc.lam, omega=omega)

    def lam_jet(self, u, v, order=0):
        return -self.base.lam_jet(u, v, order)

    def klam(self, u, v):
        return -self.base.klam(u, v)

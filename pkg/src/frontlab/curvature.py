"""Curvatures of a coherent tangent bundle.

Covariant derivative in a positive orthonormal frame: for a section with
components s, ``D_X s = X(s) - omega(X) J s`` with ``J(a, b) = (-b, a)``.
All quantities come from jets of the frame data, so no finite differences
are involved.
"""

import numpy as np

from . import jet as J
from .errors import NotA2, OnSingularSet
from .singular import Tolerances, curve_frame


def _pt(u, v):
    return np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))


def gaussian_density(view, u, v, tol_sing=1e-8):
    """(K, K lambda, near_singular).

    K lambda is the smooth density of K dA-hat: det(nu_u, nu_v, nu) for a
    frontal, the curl of omega for an intrinsic bundle.  K itself is NaN where
    |lambda| <= tol_sing (flagged in ``near_singular``).
    """
    u, v = _pt(u, v)
    klam = np.asarray(view.klam(u, v), float)
    lam = np.asarray(view.lam(u, v), float)
    near = np.abs(lam) <= tol_sing
    K = np.where(near, np.nan, klam / np.where(near, 1.0, lam))
    return K, klam, near


def connection_form(view, u, v):
    """(omega_u, omega_v) of the frame used by ``view`` at the given points."""
    u, v = _pt(u, v)
    loc = view.local(u, v, 1)
    return loc.omega[0].value, loc.omega[1].value


def _apply(P, d):
    """psi(d) for jets P and direction jets or arrays d (components in the frame)."""
    return [P[i][0] * d[0] + P[i][1] * d[1] for i in range(2)]


def _along(x, d):
    """Derivative of the jet x in direction d (value arrays)."""
    return x.coef[..., 1] * d[0] + x.coef[..., 2] * d[1]


def _signed_mu_derivative(X, DX):
    return X[0] * DX[1] - X[1] * DX[0]


def singular_curvature_at(view, u, v, direction=None, route="frame"):
    """kappa_s at points of Sigma, with the curve direction ``direction`` (default tau).

    Returns (kappa_s, kappa_s * dtau/ds, dtau/ds) where s is arclength in the
    (u, v) plane and dtau/ds = |psi(gamma')|.  ``route="extrinsic"`` uses
    det(gamma^', gamma^'', nu) of the image curve (frontals only).
    """
    u, v = _pt(u, v)
    loc = view.local(u, v, 2)
    lu, lv = loc.lam.diff(0), loc.lam.diff(1)
    gn = J.sqrt(lu * lu + lv * lv)
    t = [-lv / gn, lu / gn]
    if direction is not None:
        direction = np.asarray(direction, float)
        sigma = np.sign(direction[..., 0] * t[0].value + direction[..., 1] * t[1].value)
        sigma = np.where(sigma == 0, 1.0, sigma)
        t = [t[0] * sigma, t[1] * sigma]
    tv = [t[0].value, t[1].value]
    # sign of dlambda(eta) with eta positive with respect to the direction
    cf = curve_frame(view, u, v)
    eta = cf.eta
    orient = np.sign(tv[0] * eta[..., 1] - tv[1] * eta[..., 0])
    eta = eta * np.where(orient == 0, 1.0, orient)[..., None]
    sgn = np.sign(cf.grad[..., 0] * eta[..., 0] + cf.grad[..., 1] * eta[..., 1])
    if route == "frame":
        P = [[x.truncate(1) for x in row] for row in loc.P]
        X = _apply(P, t)
        Xv = [X[0].value, X[1].value]
        w = loc.omega[0].value * tv[0] + loc.omega[1].value * tv[1]
        DX = [_along(X[0], tv) + w * Xv[1], _along(X[1], tv) - w * Xv[0]]
        det = _signed_mu_derivative(Xv, DX)
        speed = np.hypot(*Xv)
    elif route == "extrinsic":
        fu = [x.diff(0).truncate(1) for x in loc.f]
        fv = [x.diff(1).truncate(1) for x in loc.f]
        X = [fu[i] * t[0] + fv[i] * t[1] for i in range(3)]
        Xv = np.stack([x.value for x in X], -1)
        dX = np.stack([_along(x, tv) for x in X], -1)
        nu = np.stack([x.value for x in loc.nu], -1)
        det = np.sum(np.cross(Xv, dX) * nu, -1)
        speed = np.linalg.norm(Xv, axis=-1)
    else:
        raise ValueError("route must be 'frame' or 'extrinsic'")
    kappa = sgn * det / speed**3
    return kappa, sgn * det / speed**2, speed


def singular_curvature(view, curve, route="frame", tol=None):
    """Per-sample kappa_s and kappa_s * dtau/ds along a traced curve (stored on the curve).

    Raises NotA2 when a sample fails the A2 transversality test.
    """
    tol = tol or Tolerances()
    if curve.T is None:
        curve.annotate(view)
    u, v = curve.points[:, 0], curve.points[:, 1]
    kappa, dens, speed = singular_curvature_at(view, u, v, curve.tangents, route)
    bad = np.abs(curve.T) <= tol.transv
    if np.any(bad):
        k = int(np.nonzero(bad)[0][0])
        raise NotA2("sample %d at %s is not an A2 point" % (k, tuple(curve.points[k])))
    curve.kappa_s = kappa
    curve.dtau_ds = speed
    return kappa, dens


def geodesic_curvature(view, p, dp, ddp, tol_sing=0.0):
    """kappa-hat_g, kappa-tilde_g and |psi(gamma')| along a curve off Sigma.

    ``p``, ``dp``, ``ddp`` are the points and first and second derivatives
    (any parameter).  kappa-hat_g = mu(psi(gamma'), D psi(gamma')) / |psi(gamma')|^3
    and kappa-tilde_g = sgn(lambda) kappa-hat_g.
    """
    p, dp, ddp = (np.asarray(a, float) for a in (p, dp, ddp))
    loc = view.local(p[..., 0], p[..., 1], 1)
    lam = loc.lam.value
    if np.any(np.abs(lam) <= tol_sing):
        k = np.unravel_index(np.argmin(np.abs(lam)), lam.shape)
        raise OnSingularSet("curve meets the singular set at %s" % (tuple(p[k]),))
    d = [dp[..., 0], dp[..., 1]]
    dd = [ddp[..., 0], ddp[..., 1]]
    Xv = [loc.P[i][0].value * d[0] + loc.P[i][1].value * d[1] for i in range(2)]
    w = loc.omega[0].value * d[0] + loc.omega[1].value * d[1]
    DX = []
    for i in range(2):
        dPd = _along(loc.P[i][0], d) * d[0] + _along(loc.P[i][1], d) * d[1]
        DX.append(dPd + loc.P[i][0].value * dd[0] + loc.P[i][1].value * dd[1])
    DX = [DX[0] + w * Xv[1], DX[1] - w * Xv[0]]
    speed = np.hypot(*Xv)
    khat = _signed_mu_derivative(Xv, DX) / speed**3
    return khat, np.sign(lam) * khat, speed

"""Analytic evaluators for the anisotropically self-similar convex solution.

The solution u is determined by a boundary profile g through

    u(x1, x2) = |x2|^((gamma+1)/gamma) * g(x1 / |x2|^(1/gamma))

on the chart |x1|^gamma <= |x2| and through the matched profile g~ via

    u(x1, x2) = |x1|^(gamma+1) * g~(x2 / |x1|^gamma)

elsewhere.  It satisfies u(x) = u(A_r x)/r for the anisotropic dilations
A_r, and det D^2 u is invariant under A_r (so discontinuous at the
origin).  ``PerturbedRHS`` replaces det D^2 u inside the rectangle Q_r by
a separable, continuous product that matches it on the boundary of Q_r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profile import BoundaryProfile, F_op, F_tilde_op


class OriginSingularityError(ValueError):
    """Evaluation requested at the origin where the quantity is undefined."""


def _as_points(x):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 2:
        raise ValueError(f"expected points of shape (..., 2), got {pts.shape}")
    return pts, single


@dataclass(frozen=True)
class ScalingMap:
    """Anisotropic dilation (x1, x2) -> (r^(1/(g+1)) x1, r^(g/(g+1)) x2)."""

    r: float
    gamma: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("scaling factor r must be positive")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")

    @property
    def sx(self):
        return self.r ** (1.0 / (self.gamma + 1.0))

    @property
    def sy(self):
        return self.r ** (self.gamma / (self.gamma + 1.0))

    def inverse(self):
        return ScalingMap(1.0 / self.r, self.gamma)


def apply_scaling(map: ScalingMap, x):
    pts, single = _as_points(x)
    out = np.empty_like(pts)
    out[:, 0] = map.sx * pts[:, 0]
    out[:, 1] = map.sy * pts[:, 1]
    return out[0] if single else out


@dataclass(frozen=True)
class AnisoRect:
    """Axis-aligned rectangle Q_r, the image of [-1,1]^2 under A_r."""

    r: float
    gamma: float

    @property
    def half_width(self):
        return self.r ** (1.0 / (self.gamma + 1.0))

    @property
    def half_height(self):
        return self.r ** (self.gamma / (self.gamma + 1.0))

    @property
    def area(self):
        return 4.0 * self.r

    def contains(self, x):
        pts, single = _as_points(x)
        m = (np.abs(pts[:, 0]) <= self.half_width) & (np.abs(pts[:, 1]) <= self.half_height)
        return bool(m[0]) if single else m


@dataclass(frozen=True)
class ModelSolution:
    """Pure evaluators for u, its derivatives and f = det D^2 u."""

    profile: BoundaryProfile

    @property
    def gamma(self):
        return self.profile.gamma

    def _charts(self, pts):
        """Split points into the two representation charts.

        Returns (xa, ya, g_mask) where the g-chart applies when
        |x1|^gamma <= |x2| (both coordinates taken in absolute value).
        """
        xa = np.abs(pts[:, 0])
        ya = np.abs(pts[:, 1])
        g_mask = xa**self.gamma <= ya
        return xa, ya, g_mask


def eval_u(ms: ModelSolution, x):
    pts, single = _as_points(x)
    gm = ms.gamma
    xa, ya, gmask = ms._charts(pts)
    out = np.zeros(pts.shape[0])
    if np.any(gmask):
        yv = ya[gmask]
        t = np.divide(xa[gmask], yv ** (1.0 / gm), out=np.zeros_like(yv), where=yv > 0)
        g0 = ms.profile.g_trio(t)[0]
        out[gmask] = yv ** ((gm + 1.0) / gm) * g0
    tmask = ~gmask
    if np.any(tmask):
        xv = xa[tmask]
        tt = ya[tmask] / xv**gm  # xv > 0 on this chart
        gt0 = ms.profile.g_tilde_trio(tt)[0]
        out[tmask] = xv ** (gm + 1.0) * gt0
    return float(out[0]) if single else out


def eval_Du(ms: ModelSolution, x):
    """Gradient of u; the origin returns (0, 0), the subgradient at the minimum."""
    pts, single = _as_points(x)
    gm = ms.gamma
    xa, ya, gmask = ms._charts(pts)
    s1 = np.sign(pts[:, 0])
    s2 = np.sign(pts[:, 1])
    out = np.zeros_like(pts)
    origin = (xa == 0) & (ya == 0)
    gmask = gmask & ~origin
    if np.any(gmask):
        yv = ya[gmask]
        t = xa[gmask] / yv ** (1.0 / gm)
        g0, g1, _ = ms.profile.g_trio(t)
        out[gmask, 0] = s1[gmask] * yv * g1
        out[gmask, 1] = s2[gmask] * yv ** (1.0 / gm) * ((gm + 1) * g0 - t * g1) / gm
    tmask = ~gmask & ~origin
    if np.any(tmask):
        xv = xa[tmask]
        tt = ya[tmask] / xv**gm
        gt0, gt1, _ = ms.profile.g_tilde_trio(tt)
        out[tmask, 0] = s1[tmask] * xv**gm * ((gm + 1) * gt0 - gm * tt * gt1)
        out[tmask, 1] = s2[tmask] * xv * gt1
    return out[0] if single else out


def eval_D2u(ms: ModelSolution, x):
    """Hessian of u away from the origin (where it is unbounded)."""
    pts, single = _as_points(x)
    gm = ms.gamma
    xa, ya, gmask = ms._charts(pts)
    if np.any((xa == 0) & (ya == 0)):
        raise OriginSingularityError("Hessian unbounded at origin")
    s12 = np.sign(pts[:, 0]) * np.sign(pts[:, 1])
    out = np.zeros((pts.shape[0], 2, 2))
    if np.any(gmask):
        yv = ya[gmask]
        t = xa[gmask] / yv ** (1.0 / gm)
        g0, g1, g2 = ms.profile.g_trio(t)
        d11 = yv ** ((gm - 1.0) / gm) * g2
        d12 = s12[gmask] * (g1 - t * g2 / gm)
        d22 = yv ** ((1.0 - gm) / gm) * ((gm + 1) * g0 - (gm + 1) * t * g1 + t * t * g2) / gm**2
        out[gmask, 0, 0] = d11
        out[gmask, 0, 1] = out[gmask, 1, 0] = d12
        out[gmask, 1, 1] = d22
    tmask = ~gmask
    if np.any(tmask):
        xv = xa[tmask]
        tt = ya[tmask] / xv**gm
        gt0, gt1, gt2 = ms.profile.g_tilde_trio(tt)
        d11 = gm * xv ** (gm - 1.0) * ((gm + 1) * gt0 - (gm + 1) * tt * gt1 + gm * tt * tt * gt2)
        d12 = s12[tmask] * (gt1 - gm * tt * gt2)
        d22 = xv ** (1.0 - gm) * gt2
        out[tmask, 0, 0] = d11
        out[tmask, 0, 1] = out[tmask, 1, 0] = d12
        out[tmask, 1, 1] = d22
    return out[0] if single else out


def eval_f(ms: ModelSolution, x):
    """det D^2 u; invariant under the anisotropic dilations, undefined at 0."""
    pts, single = _as_points(x)
    gm = ms.gamma
    xa, ya, gmask = ms._charts(pts)
    if np.any((xa == 0) & (ya == 0)):
        raise OriginSingularityError("f discontinuous at origin")
    out = np.empty(pts.shape[0])
    if np.any(gmask):
        t = xa[gmask] / ya[gmask] ** (1.0 / gm)
        out[gmask] = F_op(ms.profile, t)
    tmask = ~gmask
    if np.any(tmask):
        tt = ya[tmask] / xa[tmask] ** gm
        out[tmask] = F_tilde_op(ms.profile, tt)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class PerturbedRHS:
    """Right-hand side equal to f outside Q_r and a separable smoothing inside.

    Inside Q_r the value is F(x1/w) * F~(x2/h) / F~(1) with (w, h) the
    half-sizes of Q_r; the normalization makes it match f continuously on
    the boundary of Q_r, and the family transforms as
    f_r(A_k x) = f_{r/k}(x).
    """

    profile: BoundaryProfile
    r: float

    def __post_init__(self):
        if not 0 < self.r:
            raise ValueError("r must be positive")

    @property
    def gamma(self):
        return self.profile.gamma

    @property
    def rect(self):
        return AnisoRect(self.r, self.gamma)

    @property
    def F_tilde_at_1(self):
        return F_tilde_op(self.profile, 1.0)


def eval_fr(p: PerturbedRHS, x):
    pts, single = _as_points(x)
    rect = p.rect
    inside = rect.contains(pts)
    out = np.empty(pts.shape[0])
    if np.any(inside):
        xi1 = pts[inside, 0] / rect.half_width
        xi2 = pts[inside, 1] / rect.half_height
        out[inside] = F_op(p.profile, xi1) * F_tilde_op(p.profile, xi2) / p.F_tilde_at_1
    if np.any(~inside):
        out[~inside] = eval_f(ModelSolution(p.profile), pts[~inside])
    return float(out[0]) if single else out

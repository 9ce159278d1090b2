"""Even convex boundary profiles with controlled Monge-Ampere determinant.

A profile g determines a convex function on the plane that is invariant
under anisotropic dilations (see :mod:`malab.model`).  The construction
goes through stages:

* ``g0``   -- pure power law, determinant degenerate at the axis,
* ``g1``   -- parabola surgery on [-t0, t0] making the determinant
              strictly positive near zero,
* ``g2``   -- matched-tail surgery (a parabola in reciprocal coordinates
              on [-t0_tilde, t0_tilde]) making the determinant bounded,
* ``mollified`` -- seam jumps of g'' removed by a localized mollification,
              so the induced right-hand side is C^1 away from the origin.

Two first-order operators measure the induced determinant on horizontal
and vertical boundary lines; ``rhs_bounds`` audits their positivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

STAGES = ("g0", "g1", "g2", "mollified")

_BUMP_MASS = 0.4439938161680794  # integral of exp(-1/(1-s^2)) over [-1, 1]


class ProfileError(ValueError):
    pass


class SeamDerivativeError(ProfileError):
    """Second derivative requested exactly at a seam of a non-mollified stage."""


class PositivityError(ProfileError):
    """The induced right-hand side fails to be strictly positive."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def _bump(s):
    """Smooth unit-mass bump supported on [-1, 1]."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(-1.0 / (1.0 - si * si)) / _BUMP_MASS
    return out


def _bump_scalar(s: float) -> float:
    if abs(s) >= 1.0:
        return 0.0
    return math.exp(-1.0 / (1.0 - s * s)) / _BUMP_MASS


def _smoothstep_scalar(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    a = math.exp(-1.0 / x)
    b = math.exp(-1.0 / (1.0 - x))
    return a / (a + b)


def _smoothstep_scalar_d1(x: float, eps: float = 1e-6) -> float:
    return (_smoothstep_scalar(x + eps) - _smoothstep_scalar(x - eps)) / (2 * eps)


def _smoothstep_scalar_d2(x: float, eps: float = 1e-5) -> float:
    return (
        _smoothstep_scalar(x + eps) - 2 * _smoothstep_scalar(x) + _smoothstep_scalar(x - eps)
    ) / eps**2


def _smoothstep(x):
    """C-infinity transition: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    out[mid] = a / (a + b)
    return out


def _smoothstep_d1(x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    return (_smoothstep(x + eps) - _smoothstep(x - eps)) / (2 * eps)


def _smoothstep_d2(x, eps=1e-5):
    x = np.asarray(x, dtype=float)
    return (_smoothstep(x + eps) - 2 * _smoothstep(x) + _smoothstep(x - eps)) / eps**2


@dataclass(frozen=True)
class ProfileParams:
    """Parameters of the profile construction.

    gamma        anisotropy exponent, > 1
    t0           half-width of the near-zero parabola surgery
    t0_tilde     half-width of the tail surgery, in reciprocal coordinates
    moll_eps     mollification radius (0 disables smoothing)
    cutoff_width support half-width of the cutoff around each seam
    stage        construction stage to stop at
    """

    gamma: float
    t0: float = 0.05
    t0_tilde: float = 0.05
    moll_eps: float = 1e-3
    cutoff_width: float = 0.02
    stage: str = "mollified"

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ProfileError(f"gamma must exceed 1, got {self.gamma}")
        if self.stage not in STAGES:
            raise ProfileError(f"unknown stage {self.stage!r}")
        if self.stage == "g0":
            return
        if not 0.0 < self.t0 < 1.0:
            raise ProfileError(f"t0 must lie in (0, 1), got {self.t0}")
        if self.stage == "g1":
            return
        if not 0.0 < self.t0_tilde < 1.0:
            raise ProfileError(f"t0_tilde must lie in (0, 1), got {self.t0_tilde}")
        outer = self.t0_tilde ** (-1.0 / self.gamma)
        if self.t0 >= outer:
            raise ProfileError(
                f"surgery regions overlap: t0={self.t0} >= t0_tilde^(-1/gamma)={outer:g}"
            )
        if self.stage == "g2":
            return
        if self.moll_eps < 0.0:
            raise ProfileError("moll_eps must be nonnegative")
        gap = 0.5 * min(2.0 * self.t0, outer - self.t0)
        if not self.moll_eps < self.cutoff_width < gap:
            raise ProfileError(
                f"need moll_eps < cutoff_width < {gap:g} "
                f"(half the minimal seam gap); got moll_eps={self.moll_eps}, "
                f"cutoff_width={self.cutoff_width}"
            )

    @property
    def outer_seam(self):
        return self.t0_tilde ** (-1.0 / self.gamma)


@dataclass(frozen=True)
class _SeamTable:
    """Tabulated mollified values of (g, g', g'') near one positive seam."""

    lo: float
    hi: float
    spline0: CubicSpline
    spline1: CubicSpline
    spline2: CubicSpline


@dataclass(frozen=True)
class BoundaryProfile:
    """Immutable profile; all evaluators are pure and array-capable."""

    params: ProfileParams
    a: float = 0.0
    b: float = 0.0
    a_tilde: float = 0.0
    b_tilde: float = 0.0
    seam_set: tuple = ()
    tables: tuple = field(default=(), repr=False)

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def stage(self):
        return self.params.stage

    # closed-form pieces, evaluated at nonnegative abscissae ------------

    def _power_piece(self, x, order):
        gm = self.gamma
        if order == 0:
            return (1.0 + x ** (gm + 1)) / (gm + 1)
        if order == 1:
            return x**gm
        return gm * x ** (gm - 1)

    def _parabola_piece(self, x, order):
        gm = self.gamma
        if order == 0:
            return (self.a + self.b * x * x) / (gm + 1)
        if order == 1:
            return 2.0 * self.b * x / (gm + 1)
        return np.full_like(x, 2.0 * self.b / (gm + 1))

    def _tail_piece(self, x, order):
        gm = self.gamma
        at, bt = self.a_tilde, self.b_tilde
        if order == 0:
            return (at * x ** (gm + 1) + bt * x ** (1 - gm)) / (gm + 1)
        if order == 1:
            return (at * (gm + 1) * x**gm - bt * (gm - 1) * x**-gm) / (gm + 1)
        return (at * (gm + 1) * gm * x ** (gm - 1) + bt * (gm - 1) * gm * x ** (-gm - 1)) / (gm + 1)

    def _trio_abs(self, x):
        """(g, g', g'') at nonnegative x, positive-branch derivative values."""
        x = np.asarray(x, dtype=float)
        out0 = np.empty_like(x)
        out1 = np.empty_like(x)
        out2 = np.empty_like(x)
        stage = self.stage
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if stage == "g0":
                regions = [(np.ones_like(x, dtype=bool), self._power_piece)]
            elif stage == "g1":
                inner = x <= self.params.t0
                regions = [(inner, self._parabola_piece), (~inner, self._power_piece)]
            else:
                t0 = self.params.t0
                s2 = self.params.outer_seam
                inner = x <= t0
                mid = (x > t0) & (x <= s2)
                outer = x > s2
                regions = [
                    (inner, self._parabola_piece),
                    (mid, self._power_piece),
                    (outer, self._tail_piece),
                ]
            for mask, piece in regions:
                if np.any(mask):
                    xm = x[mask]
                    out0[mask] = piece(xm, 0)
                    out1[mask] = piece(xm, 1)
                    out2[mask] = piece(xm, 2)
            if stage == "mollified":
                for tab in self.tables:
                    mask = (x >= tab.lo) & (x <= tab.hi)
                    if np.any(mask):
                        xm = x[mask]
                        out0[mask] = tab.spline0(xm)
                        out1[mask] = tab.spline1(xm)
                        out2[mask] = tab.spline2(xm)
        return out0, out1, out2

    def g_trio(self, x_abs):
        """Vectorized (g, g', g'') at nonnegative arguments."""
        return self._trio_abs(np.asarray(x_abs, dtype=float))

    def g_tilde_trio(self, x_abs):
        """Vectorized (g~, g~', g~'') at nonnegative arguments.

        Uses the closed inner form where it is exact and the reciprocal
        transport of g elsewhere.
        """
        gm = self.gamma
        beta = (gm + 1) / gm
        x = np.asarray(x_abs, dtype=float)
        out0 = np.empty_like(x)
        out1 = np.empty_like(x)
        out2 = np.empty_like(x)
        inner_r = self._tilde_inner_radius()
        inner = x <= inner_r
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if np.any(inner):
                xm = x[inner]
                if self.stage in ("g0", "g1"):
                    out0[inner] = (1.0 + xm**beta) / (gm + 1)
                    out1[inner] = beta * xm ** (beta - 1) / (gm + 1)
                    out2[inner] = beta * (beta - 1) * xm ** (beta - 2) / (gm + 1)
                else:
                    at, bt = self.a_tilde, self.b_tilde
                    out0[inner] = (at + bt * xm * xm) / (gm + 1)
                    out1[inner] = 2.0 * bt * xm / (gm + 1)
                    out2[inner] = np.full_like(xm, 2.0 * bt / (gm + 1))
            outer = ~inner
            if np.any(outer):
                xm = x[outer]
                s = xm ** (-1.0 / gm)
                g0, g1, g2 = self._trio_abs(s)
                out0[outer] = xm**beta * g0
                out1[outer] = beta * xm ** (1.0 / gm) * g0 - g1 / gm
                out2[outer] = (
                    (beta / gm) * xm ** ((1.0 - gm) / gm) * g0
                    - (beta / gm) * g1 / xm
                    + g2 * xm ** (-(gm + 1.0) / gm) / gm**2
                )
        return out0, out1, out2

    def _tilde_inner_radius(self):
        if self.stage == "g0":
            return np.inf
        if self.stage == "g1":
            return self.params.t0**-self.gamma
        if self.stage == "g2":
            return self.params.t0_tilde
        # mollified: the tail piece is untouched beyond the cutoff support
        return (self.params.outer_seam + self.params.cutoff_width) ** -self.gamma

    def seam_residuals(self):
        """Per-seam jumps of g and g' between adjacent pieces, plus the
        mollified-table mismatch at the window edges."""
        out = []
        if self.stage == "g0":
            return out
        seams = [self.params.t0]
        pieces = [(self._parabola_piece, self._power_piece)]
        if self.stage in ("g2", "mollified"):
            seams.append(self.params.outer_seam)
            pieces.append((self._power_piece, self._tail_piece))
        for seam, (left, right) in zip(seams, pieces):
            xs = np.array([seam])
            r0 = abs(float((left(xs, 0) - right(xs, 0))[0]))
            r1 = abs(float((left(xs, 1) - right(xs, 1))[0]))
            out.append({"seam": seam, "jump_g": r0, "jump_dg": r1})
        if self.stage == "mollified" and self.tables:
            p = self.params
            base = BoundaryProfile(
                params=ProfileParams(
                    gamma=p.gamma, t0=p.t0, t0_tilde=p.t0_tilde,
                    moll_eps=p.moll_eps, cutoff_width=p.cutoff_width, stage="g2",
                ),
                a=self.a, b=self.b, a_tilde=self.a_tilde, b_tilde=self.b_tilde,
                seam_set=self.seam_set,
            )
            for tab, rec in zip(self.tables, out):
                edges = np.array([tab.lo, tab.hi])
                mism = np.abs(
                    np.array([tab.spline0(edges[0]), tab.spline0(edges[1])])
                    - base._trio_abs(edges)[0]
                )
                rec["table_edge_mismatch"] = float(np.max(mism))
        return out


# ------------------------------------------------------------------ build


def _g2_scalar(params: ProfileParams, a, b, at, bt, x: float, order: int) -> float:
    """Closed-form stage-g2 value at nonnegative x (scalar fast path)."""
    gm = params.gamma
    if x <= params.t0:
        if order == 0:
            return (a + b * x * x) / (gm + 1)
        if order == 1:
            return 2.0 * b * x / (gm + 1)
        return 2.0 * b / (gm + 1)
    if x <= params.outer_seam:
        if order == 0:
            return (1.0 + x ** (gm + 1)) / (gm + 1)
        if order == 1:
            return x**gm
        return gm * x ** (gm - 1)
    if order == 0:
        return (at * x ** (gm + 1) + bt * x ** (1 - gm)) / (gm + 1)
    if order == 1:
        return (at * (gm + 1) * x**gm - bt * (gm - 1) * x**-gm) / (gm + 1)
    return (at * (gm + 1) * gm * x ** (gm - 1) + bt * (gm - 1) * gm * x ** (-gm - 1)) / (gm + 1)


def _convolved_g2(base: BoundaryProfile, t, eps, order, kinks):
    """Mollified value of g2^(order) at t via exact-breakpoint quadrature."""
    p = base.params
    a, b, at, bt = base.a, base.b, base.a_tilde, base.b_tilde

    def integrand(s):
        arg = t - eps * s
        x = abs(arg)
        v = _g2_scalar(p, a, b, at, bt, x, order)
        if order == 1 and arg < 0:
            v = -v
        return v * _bump_scalar(s)

    pts = sorted({(t - k) / eps for k in kinks if abs(t - k) < eps} | {0.0})
    pts = [p_ for p_ in pts if -1.0 < p_ < 1.0]
    val, _ = quad(integrand, -1.0, 1.0, points=pts or None, limit=200, epsabs=1e-12, epsrel=1e-11)
    return val


def _build_tables(params: ProfileParams, g2_profile: BoundaryProfile):
    eps = params.moll_eps
    if eps == 0.0:
        return ()
    w = params.cutoff_width
    seams = [params.t0, params.outer_seam]
    kinks = [params.t0, params.outer_seam]
    tables = []
    for seam in seams:
        lo, hi = seam - w, seam + w
        # dense near the seam where the smoothed g'' varies on scale eps
        near = np.linspace(max(lo, seam - 2 * eps), min(hi, seam + 2 * eps), 241)
        far_lo = np.linspace(lo, max(lo, seam - 2 * eps), 81)
        far_hi = np.linspace(min(hi, seam + 2 * eps), hi, 81)
        ts = np.unique(np.concatenate([far_lo, near, far_hi]))
        vals = np.empty((3, ts.size))
        half = 0.5 * w
        pp = params
        for j, t in enumerate(ts):
            d = abs(t - seam)
            g2v = [
                _g2_scalar(pp, g2_profile.a, g2_profile.b, g2_profile.a_tilde,
                           g2_profile.b_tilde, abs(t), o)
                for o in range(3)
            ]
            conv = [_convolved_g2(g2_profile, t, eps, o, kinks) for o in range(3)]
            if d <= half:
                vals[:, j] = conv
            else:
                # eta = S(u) with u = (w - d)/(w - half): 1 on the plateau,
                # 0 at the support edge; u is linear in t on each side.
                u = (w - d) / (w - half)
                sgn = 1.0 if t >= seam else -1.0
                dudt = -sgn / (w - half)
                eta = _smoothstep_scalar(u)
                detadt = _smoothstep_scalar_d1(u) * dudt
                d2etadt2 = _smoothstep_scalar_d2(u) * dudt * dudt
                diff0 = conv[0] - g2v[0]
                diff1 = conv[1] - g2v[1]
                diff2 = conv[2] - g2v[2]
                vals[0, j] = g2v[0] + eta * diff0
                vals[1, j] = g2v[1] + detadt * diff0 + eta * diff1
                vals[2, j] = g2v[2] + d2etadt2 * diff0 + 2 * detadt * diff1 + eta * diff2
        tables.append(
            _SeamTable(
                lo=lo,
                hi=hi,
                spline0=CubicSpline(ts, vals[0]),
                spline1=CubicSpline(ts, vals[1]),
                spline2=CubicSpline(ts, vals[2]),
            )
        )
    return tuple(tables)


def build_profile(params: ProfileParams) -> BoundaryProfile:
    """Build the profile at the requested stage.

    For the mollified stage the positivity audit runs automatically and a
    :class:`PositivityError` names the failing interval if the surgery
    widths were chosen too large.  Profiles are immutable, so repeated
    builds with identical parameters return a cached instance.
    """
    cached = _PROFILE_CACHE.get(params)
    if cached is not None:
        return cached
    prof = _build_profile_uncached(params)
    _PROFILE_CACHE[params] = prof
    return prof


_PROFILE_CACHE: dict = {}


def _build_profile_uncached(params: ProfileParams) -> BoundaryProfile:
    gm = params.gamma
    a = b = at = bt = 0.0
    if params.stage != "g0":
        a = 1.0 - 0.5 * (gm - 1.0) * params.t0 ** (gm + 1.0)
        b = 0.5 * (gm + 1.0) * params.t0 ** (gm - 1.0)
    if params.stage in ("g2", "mollified"):
        at = 1.0 + 0.5 * (gm - 1.0) / gm * params.t0_tilde ** ((gm + 1.0) / gm)
        bt = 0.5 * (gm + 1.0) / gm * params.t0_tilde ** (-(gm - 1.0) / gm)
    seams = ()
    if params.stage == "g1":
        seams = (-params.t0, params.t0)
    elif params.stage in ("g2", "mollified"):
        seams = (-params.outer_seam, -params.t0, params.t0, params.outer_seam)
    prof = BoundaryProfile(
        params=params, a=a, b=b, a_tilde=at, b_tilde=bt, seam_set=seams
    )
    if params.stage == "mollified":
        tables = _build_tables(params, prof)
        prof = BoundaryProfile(
            params=params, a=a, b=b, a_tilde=at, b_tilde=bt, seam_set=seams, tables=tables
        )
        lam, _, report = rhs_bounds(prof, samples=2001)
        if lam <= 0.0:
            raise PositivityError(
                "positivity violated: min of the induced right-hand side is "
                f"{lam:.3e} near {report['argmin_chart']} = {report['argmin_t']:.6g} "
                f"(interval [{report['fail_lo']:.6g}, {report['fail_hi']:.6g}]); "
                "reduce t0 / t0_tilde",
                report=report,
            )
    return prof


# ------------------------------------------------------------- evaluation


def _check_seam_order2(profile: BoundaryProfile, t):
    if profile.stage == "mollified":
        return
    t = np.atleast_1d(np.asarray(t, dtype=float))
    finite = np.isfinite(t)
    if np.any(np.isin(np.abs(t[finite]), np.abs(np.asarray(profile.seam_set)))):
        raise SeamDerivativeError(
            f"seam derivative undefined at stage {profile.stage!r}"
        )


def eval_g(profile: BoundaryProfile, t, order: int = 0):
    """Evaluate g (order 0), g' (1) or g'' (2) on the extended line."""
    if order not in (0, 1, 2):
        raise ProfileError(f"order must be 0, 1 or 2, got {order}")
    if order == 2:
        _check_seam_order2(profile, t)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    vals = profile.g_trio(np.abs(t))[order]
    if order == 1:
        vals = vals * np.sign(t)
    return float(vals[0]) if scalar else vals


def eval_g_tilde(profile: BoundaryProfile, t, order: int = 0):
    """Evaluate the matched profile g~ and derivatives on the extended line."""
    if order not in (0, 1, 2):
        raise ProfileError(f"order must be 0, 1 or 2, got {order}")
    if order == 2 and profile.stage != "mollified":
        # seams of g~ sit at the reciprocal images of the seams of g
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        images = [abs(s) ** -profile.gamma for s in profile.seam_set if s != 0]
        if np.any(np.isin(np.abs(t_arr[np.isfinite(t_arr)]), np.asarray(images))):
            raise SeamDerivativeError(
                f"seam derivative undefined at stage {profile.stage!r}"
            )
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    vals = profile.g_tilde_trio(np.abs(t))[order]
    if order == 1:
        vals = vals * np.sign(t)
    return float(vals[0]) if scalar else vals


def F_op(profile: BoundaryProfile, t):
    """Determinant operator along horizontal boundary lines; even in t."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    x = np.abs(np.atleast_1d(t))
    gm = profile.gamma
    out = np.empty_like(x)
    inf = ~np.isfinite(x)
    if np.any(inf):
        out[inf] = F_tilde_op(profile, 0.0)
    fin = ~inf
    if np.any(fin):
        if profile.stage != "mollified":
            _check_seam_order2(profile, x[fin])
        g0, g1, g2 = profile.g_trio(x[fin])
        out[fin] = gm**-2 * g2 * ((gm + 1) * g0 + (gm - 1) * x[fin] * g1) - g1 * g1
    return float(out[0]) if scalar else out


def F_tilde_op(profile: BoundaryProfile, t):
    """Determinant operator along vertical boundary lines; even in t."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    x = np.abs(np.atleast_1d(t))
    gm = profile.gamma
    out = np.empty_like(x)
    inf = ~np.isfinite(x)
    if np.any(inf):
        out[inf] = F_op(profile, 0.0)
    fin = ~inf
    if np.any(fin):
        if profile.stage != "mollified" and profile.seam_set:
            images = np.array([abs(s) ** -gm for s in profile.seam_set if s != 0])
            if np.any(np.isin(x[fin], images)):
                raise SeamDerivativeError(
                    f"seam derivative undefined at stage {profile.stage!r}"
                )
        g0, g1, g2 = profile.g_tilde_trio(x[fin])
        out[fin] = gm * g2 * ((gm + 1) * g0 - (gm - 1) * x[fin] * g1) - g1 * g1
    return float(out[0]) if scalar else out


def rhs_bounds(profile: BoundaryProfile, samples: int = 2001, strict: bool = False):
    """Audit min/max of the determinant operators over [-1, 1].

    Returns ``(lam, Lam, report)``.  With ``strict=True`` a nonpositive
    minimum raises :class:`PositivityError`; by default the report simply
    records the failure (useful for inspecting pre-surgery stages).
    """
    ts = np.linspace(0.0, 1.0, samples)
    extras = []
    for s in profile.seam_set:
        s = abs(s)
        if s <= 1.0:
            extras.append(np.clip(s + np.array([-3e-3, -1e-3, 1e-3, 3e-3]), 0.0, 1.0))
    tilde_seam = profile.params.t0_tilde if profile.stage in ("g2", "mollified") else None
    t_f = np.unique(np.concatenate([ts] + extras)) if extras else ts
    if profile.stage == "mollified":
        Fv = F_op(profile, t_f)
    else:
        # stay off seam neighbourhoods where g'' jumps
        seam_abs = np.abs(np.asarray(profile.seam_set)) if profile.seam_set else np.array([])
        if seam_abs.size:
            dist = np.min(np.abs(t_f[:, None] - seam_abs[None, :]), axis=1)
            t_f = t_f[dist > 1e-9]
        Fv = F_op(profile, t_f)
    t_ft = ts
    if tilde_seam is not None:
        t_ft = np.unique(
            np.concatenate([ts, np.clip(tilde_seam + np.array([-3e-3, -1e-3, 0, 1e-3, 3e-3]), 0, 1)])
        )
    Ftv = F_tilde_op(profile, t_ft)
    cand_vals = np.concatenate([Fv, Ftv])
    cand_t = np.concatenate([t_f, t_ft])
    cand_chart = np.array(["F"] * t_f.size + ["F_tilde"] * t_ft.size)
    i_min = int(np.argmin(cand_vals))
    i_max = int(np.argmax(cand_vals))
    lam = float(cand_vals[i_min])
    Lam = float(cand_vals[i_max])
    grid = t_f if cand_chart[i_min] == "F" else t_ft
    vals = Fv if cand_chart[i_min] == "F" else Ftv
    j = int(np.argmin(vals))
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, grid.size - 1)]
    report = {
        "lam": lam,
        "Lam": Lam,
        "argmin_t": float(cand_t[i_min]),
        "argmin_chart": str(cand_chart[i_min]),
        "argmax_t": float(cand_t[i_max]),
        "argmax_chart": str(cand_chart[i_max]),
        "fail_lo": float(lo),
        "fail_hi": float(hi),
        "ok": lam > 0.0,
        "samples": samples,
    }
    if strict and lam <= 0.0:
        raise PositivityError(
            f"positivity violated on [{lo:.6g}, {hi:.6g}] ({report['argmin_chart']})",
            report=report,
        )
    return lam, Lam, report


def mollification_proximity(profile: BoundaryProfile, samples: int = 4001):
    """sup|g - g2| + sup|g' - g2'| over the seam windows, and the implied
    constant relative to moll_eps."""
    if profile.stage != "mollified":
        raise ProfileError("proximity is defined for the mollified stage")
    p = profile.params
    base = build_profile(
        ProfileParams(
            gamma=p.gamma, t0=p.t0, t0_tilde=p.t0_tilde, moll_eps=p.moll_eps,
            cutoff_width=p.cutoff_width, stage="g2",
        )
    )
    sup0 = sup1 = 0.0
    for tab in profile.tables:
        ts = np.linspace(tab.lo, tab.hi, samples)
        ts = ts[~np.isin(ts, np.abs(np.asarray(base.seam_set)))]
        d0 = np.max(np.abs(eval_g(profile, ts) - eval_g(base, ts)))
        d1 = np.max(np.abs(eval_g(profile, ts, 1) - eval_g(base, ts, 1)))
        sup0 = max(sup0, float(d0))
        sup1 = max(sup1, float(d1))
    total = sup0 + sup1
    const = total / p.moll_eps if p.moll_eps > 0 else 0.0
    return {"sup_g": sup0, "sup_dg": sup1, "total": total, "constant": const}

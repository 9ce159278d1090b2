"""Wide-stencil monotone solver for the Dirichlet Monge-Ampere problem.

The determinant of a (directionally) convex grid function is discretized
as the minimum over orthogonal lattice direction pairs of the product of
positively clipped directional second differences.  The discrete system

    min over pairs of  [d2_e v]+ [d2_e_perp v]+  =  rhs   at interior nodes

is solved by damped Newton iterations on the active pair, with a
nonlinear Gauss-Seidel fallback.  Arms that leave the domain are
truncated at the exact boundary intercept and use the non-uniform
three-point second difference with the boundary datum evaluated at the
intercept.  Nodes closer to the boundary than ``snap_tol * h`` are
assigned boundary data directly; this keeps the truncated weights
bounded and gives the first-order boundary convergence seen in the
validation suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu, spsolve
from scipy.interpolate import CubicSpline

# orthogonal lattice direction pairs, narrow to wide
_PAIRS = (
    ((1, 0), (0, 1)),
    ((1, 1), (1, -1)),
    ((2, 1), (-1, 2)),
    ((1, 2), (-2, 1)),
    ((3, 1), (-1, 3)),
    ((1, 3), (-3, 1)),
    ((3, 2), (-2, 3)),
    ((2, 3), (-3, 2)),
)


class SolverError(RuntimeError):
    pass


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    stencil_directions: int = 8          # number of orthogonal pairs
    newton_tol: float = 1e-8             # residual sup-norm target
    max_iters: int = 60
    damping: float = 1.0
    convexity_floor: float = 1e-12       # clip level for second differences
    snap_tol: float = 1e-4               # boundary snap distance, in units of h
    gs_rescue_sweeps: int = 30

    def __post_init__(self):
        if not 2 <= self.stencil_directions <= len(_PAIRS):
            raise ValueError(
                f"stencil_directions must lie in [2, {len(_PAIRS)}]"
            )
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.convexity_floor < 0:
            raise ValueError("convexity_floor must be nonnegative")


@dataclass
class Domain:
    """Disc or convex polygon, together with the lattice spacing."""

    kind: str
    h: float
    center: Optional[np.ndarray] = None
    radius: float = 0.0
    vertices: Optional[np.ndarray] = None
    bbox: tuple = ()

    @classmethod
    def disc(cls, center=(0.0, 0.0), radius=1.0, grid_n=129):
        center = np.asarray(center, dtype=float)
        h = 2.0 * radius / grid_n
        bbox = (center[0] - radius, center[0] + radius,
                center[1] - radius, center[1] + radius)
        return cls(kind="disc", h=h, center=center, radius=radius, bbox=bbox)

    @classmethod
    def polygon(cls, vertices, grid_n=129):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least three planar vertices")
        # enforce counterclockwise orientation
        area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area2 < 0:
            v = v[::-1]
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = np.max(np.abs(e)) ** 2 + 1e-300
        if np.any(cross < -1e-9 * scale):
            raise ValueError("polygon is not convex")
        xmin, ymin = v.min(axis=0)
        xmax, ymax = v.max(axis=0)
        h = max(xmax - xmin, ymax - ymin) / grid_n
        return cls(kind="polygon", h=h, vertices=v, bbox=(xmin, xmax, ymin, ymax))

    # geometry ------------------------------------------------------------

    def inside(self, pts):
        pts = np.atleast_2d(pts)
        if self.kind == "disc":
            d = pts - self.center
            return d[:, 0] ** 2 + d[:, 1] ** 2 < self.radius**2
        v = self.vertices
        ok = np.ones(pts.shape[0], dtype=bool)
        for k in range(v.shape[0]):
            a = v[k]
            e = v[(k + 1) % v.shape[0]] - a
            cross = e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0])
            ok &= cross > 0
        return ok

    def boundary_distance(self, pts):
        pts = np.atleast_2d(pts)
        if self.kind == "disc":
            d = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
            return self.radius - d
        v = self.vertices
        best = np.full(pts.shape[0], np.inf)
        for k in range(v.shape[0]):
            a = v[k]
            b = v[(k + 1) % v.shape[0]]
            e = b - a
            L2 = e @ e
            t = np.clip(((pts - a) @ e) / L2, 0.0, 1.0)
            proj = a + t[:, None] * e
            best = np.minimum(best, np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1]))
        return best

    def nearest_boundary(self, pts):
        pts = np.atleast_2d(pts)
        if self.kind == "disc":
            d = pts - self.center
            r = np.hypot(d[:, 0], d[:, 1])
            r = np.where(r == 0, 1.0, r)
            return self.center + d * (self.radius / r)[:, None]
        v = self.vertices
        best = np.full(pts.shape[0], np.inf)
        out = np.zeros_like(pts)
        for k in range(v.shape[0]):
            a = v[k]
            b = v[(k + 1) % v.shape[0]]
            e = b - a
            L2 = e @ e
            t = np.clip(((pts - a) @ e) / L2, 0.0, 1.0)
            proj = a + t[:, None] * e
            dist = np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1])
            upd = dist < best
            best = np.where(upd, dist, best)
            out[upd] = proj[upd]
        return out

    def ray_exit_fraction(self, pts, d):
        """Fraction s in (0, 1] where the segment p -> p + d leaves the domain.

        Callers guarantee p is inside and p + d is outside or on the boundary.
        """
        pts = np.atleast_2d(pts)
        if self.kind == "disc":
            rel = pts - self.center
            a = float(d @ d)
            b = rel @ d
            c = rel[:, 0] ** 2 + rel[:, 1] ** 2 - self.radius**2
            disc = np.maximum(b * b - a * c, 0.0)
            s = (-b + np.sqrt(disc)) / a
            return np.clip(s, 1e-12, 1.0)
        v = self.vertices
        best = np.full(pts.shape[0], np.inf)
        for k in range(v.shape[0]):
            a_v = v[k]
            e = v[(k + 1) % v.shape[0]] - a_v
            denom = d[0] * e[1] - d[1] * e[0]
            if abs(denom) < 1e-300:
                continue
            rel = a_v - pts
            s = (rel[:, 0] * e[1] - rel[:, 1] * e[0]) / denom
            u = (rel[:, 0] * d[1] - rel[:, 1] * d[0]) / denom
            valid = (s > 1e-12) & (u >= -1e-9) & (u <= 1 + 1e-9)
            best = np.where(valid, np.minimum(best, s), best)
        best = np.where(np.isfinite(best), best, 1.0)
        return np.clip(best, 1e-12, 1.0)


@dataclass
class _Lattice:
    """Cell-centered lattice over the domain bounding box.

    Nodes are cell centers strictly inside the domain; nodes within
    ``snap_tol * h`` of the boundary are Dirichlet carriers.
    """

    domain: Domain
    xs: np.ndarray
    ys: np.ndarray
    node_xy: np.ndarray          # (M, 2) all inside nodes
    node_ij: np.ndarray          # (M, 2) lattice indices (ix, iy)
    index_grid: np.ndarray       # (ny, nx) -> node id or -1
    free: np.ndarray             # (M,) bool
    free_ids: np.ndarray         # (Nf,) node ids of unknowns
    near_boundary: np.ndarray    # (M,) bool: snapped or truncated arm

    @property
    def h(self):
        return self.domain.h

    def same_as(self, other: "_Lattice"):
        return (
            self.xs.shape == other.xs.shape
            and self.ys.shape == other.ys.shape
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and np.array_equal(self.index_grid, other.index_grid)
        )


def _axis_nodes(lo: float, hi: float, h: float):
    """Node abscissae at half-offsets around the interval midpoint.

    No node ever sits exactly at the midpoint (where the model rhs is
    discontinuous for the centered disc), and the two middle columns
    straddle it symmetrically.
    """
    c = 0.5 * (lo + hi)
    k_lo = int(np.ceil((lo - c) / h - 0.5))
    k_hi = int(np.floor((hi - c) / h - 0.5))
    return c + (np.arange(k_lo, k_hi + 1) + 0.5) * h


def _build_lattice(domain: Domain, snap_tol: float) -> _Lattice:
    xmin, xmax, ymin, ymax = domain.bbox
    h = domain.h
    xs = _axis_nodes(xmin, xmax, h)
    ys = _axis_nodes(ymin, ymax, h)
    nx = xs.size
    ny = ys.size
    XX, YY = np.meshgrid(xs, ys, indexing="xy")
    pts = np.stack([XX.ravel(), YY.ravel()], axis=1)
    inside = domain.inside(pts)
    ids = -np.ones(pts.shape[0], dtype=np.int64)
    node_pts = pts[inside]
    ids[inside] = np.arange(node_pts.shape[0])
    index_grid = ids.reshape(ny, nx)
    iy, ix = np.divmod(np.flatnonzero(inside), nx)
    node_ij = np.stack([ix, iy], axis=1)
    dist = domain.boundary_distance(node_pts)
    snapped = dist < snap_tol * h
    free = ~snapped
    return _Lattice(
        domain=domain,
        xs=xs,
        ys=ys,
        node_xy=node_pts,
        node_ij=node_ij,
        index_grid=index_grid,
        free=free,
        free_ids=np.flatnonzero(free),
        near_boundary=snapped.copy(),
    )


@dataclass
class _Arms:
    """Per-direction second-difference assembly data over free nodes."""

    cp: np.ndarray
    cm: np.ndarray
    cc: np.ndarray
    ip: np.ndarray     # all-node id of plus neighbour, -1 if boundary value
    im: np.ndarray
    bp: np.ndarray     # boundary value where ip == -1 (else 0)
    bm: np.ndarray


class DiscreteProblem:
    def __init__(self, domain: Domain, boundary: Callable, config: SolverConfig):
        self.domain = domain
        self.config = config
        self.lattice = _build_lattice(domain, config.snap_tol)
        lat = self.lattice
        self.boundary = boundary
        self.values_fixed = np.zeros(lat.node_xy.shape[0])
        snapped = ~lat.free
        if np.any(snapped):
            proj = domain.nearest_boundary(lat.node_xy[snapped])
            self.values_fixed[snapped] = np.asarray(boundary(proj), dtype=float)
        self.dirs = []
        for pair in _PAIRS[: config.stencil_directions]:
            self.dirs.extend(pair)
        self.arms = [self._build_arms(np.array(e)) for e in self.dirs]
        self.free_of_node = -np.ones(lat.node_xy.shape[0], dtype=np.int64)
        self.free_of_node[lat.free_ids] = np.arange(lat.free_ids.size)

    def _build_arms(self, e: np.ndarray) -> _Arms:
        lat = self.lattice
        h = lat.h
        ids = lat.free_ids
        xy = lat.node_xy[ids]
        ij = lat.node_ij[ids]
        L = float(np.hypot(e[0], e[1]))
        d = e * h
        nx = lat.xs.size
        ny = lat.ys.size

        def one_side(sign):
            tgt_ix = ij[:, 0] + sign * e[0]
            tgt_iy = ij[:, 1] + sign * e[1]
            inb = (tgt_ix >= 0) & (tgt_ix < nx) & (tgt_iy >= 0) & (tgt_iy < ny)
            nb = -np.ones(ids.size, dtype=np.int64)
            nb[inb] = lat.index_grid[tgt_iy[inb], tgt_ix[inb]]
            is_node = nb >= 0
            a = np.full(ids.size, h * L)
            bval = np.zeros(ids.size)
            cut = ~is_node
            if np.any(cut):
                s = self.domain.ray_exit_fraction(xy[cut], sign * d)
                a[cut] = s * h * L
                hit = xy[cut] + s[:, None] * (sign * d)
                bval[cut] = np.asarray(self.boundary(hit), dtype=float)
                lat.near_boundary[ids[cut]] = True
            return nb, a, bval

        ipn, ap, bp = one_side(+1)
        imn, am, bm = one_side(-1)
        cp = 2.0 / (ap * (ap + am))
        cm = 2.0 / (am * (ap + am))
        cc = -2.0 / (ap * am)
        return _Arms(cp=cp, cm=cm, cc=cc, ip=ipn, im=imn, bp=bp, bm=bm)

    # ------------------------------------------------------------------

    def full_values(self, vfree):
        out = self.values_fixed.copy()
        out[self.lattice.free_ids] = vfree
        return out

    def second_differences(self, vfull):
        n = self.lattice.free_ids.size
        vfree = vfull[self.lattice.free_ids]
        D = np.empty((len(self.dirs), n))
        for k, arm in enumerate(self.arms):
            Vp = np.where(arm.ip >= 0, vfull[np.maximum(arm.ip, 0)], arm.bp)
            Vm = np.where(arm.im >= 0, vfull[np.maximum(arm.im, 0)], arm.bm)
            D[k] = arm.cp * Vp + arm.cm * Vm + arm.cc * vfree
        return D

    def residual(self, vfull, rhs_vals):
        # min over pairs of clip(d1) clip(d2) + (d1 - floor)^- + (d2 - floor)^-.
        # The linear negative parts keep the operator strictly proper on
        # non-convex iterates and vanish at any solution with positive rhs.
        D = self.second_differences(vfull)
        floor = self.config.convexity_floor
        Dc = np.maximum(D, floor)
        pen = np.minimum(D - floor, 0.0)
        P = Dc[0::2] * Dc[1::2] + pen[0::2] + pen[1::2]
        amin = np.argmin(P, axis=0)
        R = P[amin, np.arange(P.shape[1])] - rhs_vals
        return R, D, amin

    def jacobian(self, D, amin):
        floor = self.config.convexity_floor
        nf = self.lattice.free_ids.size
        rows, cols, vals = [], [], []
        Dc = np.maximum(D, floor)
        for p in range(len(self.dirs) // 2):
            sel = np.flatnonzero(amin == p)
            if sel.size == 0:
                continue
            for k_self, k_other in ((2 * p, 2 * p + 1), (2 * p + 1, 2 * p)):
                arm = self.arms[k_self]
                other = Dc[k_other, sel]
                # derivative of the clipped product where the factor is
                # active, of the linear penalty where it is clipped
                w = np.where(D[k_self, sel] > floor, other, 1.0)
                rows.append(sel)
                cols.append(sel)
                vals.append(w * arm.cc[sel])
                for nb, coef in ((arm.ip, arm.cp), (arm.im, arm.cm)):
                    nbsel = nb[sel]
                    fr = np.where(nbsel >= 0, self.free_of_node[np.maximum(nbsel, 0)], -1)
                    m = fr >= 0
                    if np.any(m):
                        rows.append(sel[m])
                        cols.append(fr[m])
                        vals.append((w * coef[sel])[m])
        J = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nf, nf),
        ).tocsr()
        d = J.diagonal()
        weak = np.abs(d) < 1e-13
        if np.any(weak):
            J = J + sparse.diags(weak.astype(float))
        return J

    def gs_sweeps(self, vfull, rhs_vals, sweeps):
        lat = self.lattice
        floor = self.config.convexity_floor
        ij = lat.node_ij[lat.free_ids]
        color = (ij[:, 0] + ij[:, 1]) % 2
        npairs = len(self.dirs) // 2
        for _ in range(sweeps):
            for c in (0, 1):
                sel = np.flatnonzero(color == c)
                if sel.size == 0:
                    continue
                A = np.empty((len(self.dirs), sel.size))
                CC = np.empty((len(self.dirs), sel.size))
                for k, arm in enumerate(self.arms):
                    ipn = arm.ip[sel]
                    imn = arm.im[sel]
                    Vp = np.where(ipn >= 0, vfull[np.maximum(ipn, 0)], arm.bp[sel])
                    Vm = np.where(imn >= 0, vfull[np.maximum(imn, 0)], arm.bm[sel])
                    A[k] = arm.cp[sel] * Vp + arm.cm[sel] * Vm
                    CC[k] = arm.cc[sel]
                rhs_c = rhs_vals[sel]

                def q(z):
                    Dz = A + CC * z
                    Dc = np.maximum(Dz, floor)
                    pen = np.minimum(Dz - floor, 0.0)
                    return (
                        np.min(Dc[0::2] * Dc[1::2] + pen[0::2] + pen[1::2], axis=0)
                        - rhs_c
                    )

                vcur = vfull[lat.free_ids[sel]]
                span = 2.0 * (1.0 + np.abs(vcur))
                lo = vcur - span
                hi = vcur + span
                for _ in range(60):
                    bad = q(lo) < 0
                    if not np.any(bad):
                        break
                    lo[bad] -= span[bad]
                    span[bad] *= 2
                for _ in range(80):
                    qhi = q(hi)
                    bad = qhi > 0
                    if not np.any(bad):
                        break
                    hi[bad] += span[bad]
                    span[bad] *= 2
                for _ in range(62):
                    mid = 0.5 * (lo + hi)
                    pos = q(mid) >= 0
                    lo = np.where(pos, mid, lo)
                    hi = np.where(pos, hi, mid)
                vfull[lat.free_ids[sel]] = 0.5 * (lo + hi)
        return vfull

    def poisson_init(self, rhs_vals):
        """Solve the Laplace problem  lap v = 2 sqrt(rhs)  as initializer."""
        lat = self.lattice
        nf = lat.free_ids.size
        rows, cols, vals = [], [], []
        b = 2.0 * np.sqrt(rhs_vals)
        diag = np.zeros(nf)
        for k in (0, 1):  # axis directions only
            arm = self.arms[k]
            diag += arm.cc
            for nb, coef, bc in ((arm.ip, arm.cp, arm.bp), (arm.im, arm.cm, arm.bm)):
                fr = np.where(nb >= 0, self.free_of_node[np.maximum(nb, 0)], -1)
                m_free = fr >= 0
                m_fixed_node = (nb >= 0) & ~m_free
                m_cut = nb < 0
                if np.any(m_free):
                    rows.append(np.flatnonzero(m_free))
                    cols.append(fr[m_free])
                    vals.append(coef[m_free])
                if np.any(m_fixed_node):
                    b[m_fixed_node] -= coef[m_fixed_node] * self.values_fixed[nb[m_fixed_node]]
                if np.any(m_cut):
                    b[m_cut] -= coef[m_cut] * bc[m_cut]
        rows.append(np.arange(nf))
        cols.append(np.arange(nf))
        vals.append(diag)
        A = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(nf, nf),
        ).tocsr()
        vfree = spsolve(A, b)
        vfull = self.full_values(vfree)
        # project toward directional convexity (can only lower values)
        for _ in range(3):
            bound = np.full(nf, np.inf)
            for arm in self.arms:
                Vp = np.where(arm.ip >= 0, vfull[np.maximum(arm.ip, 0)], arm.bp)
                Vm = np.where(arm.im >= 0, vfull[np.maximum(arm.im, 0)], arm.bm)
                bound = np.minimum(bound, (arm.cp * Vp + arm.cm * Vm) / (-arm.cc))
            vfull[lat.free_ids] = np.minimum(vfull[lat.free_ids], bound)
        return vfull


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_sup: float
    floor_activations: int
    wall_time: float
    gs_sweeps: int
    n_unknowns: int

    def to_dict(self):
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "residual_sup": float(self.residual_sup),
            "floor_activations": int(self.floor_activations),
            "wall_time": float(self.wall_time),
            "gs_sweeps": int(self.gs_sweeps),
            "n_unknowns": int(self.n_unknowns),
        }


@dataclass
class GridFunction:
    lattice: _Lattice
    values: np.ndarray

    @property
    def xy(self):
        return self.lattice.node_xy

    @property
    def h(self):
        return self.lattice.h

    def value_grid(self):
        g = np.full(self.lattice.index_grid.shape, np.nan)
        ids = self.lattice.index_grid
        m = ids >= 0
        g[m] = self.values[ids[m]]
        return g

    def vertical_axis_interpolant(self):
        """Cubic interpolant of the two-column average straddling x1 = 0."""
        xs = self.lattice.xs
        right = int(np.searchsorted(xs, 0.0))
        left = right - 1
        if left < 0 or right >= xs.size or abs(xs[left] + xs[right]) > 1e-9 * self.h:
            raise ValueError("lattice columns do not straddle the vertical axis")
        grid = self.value_grid()
        colL = grid[:, left]
        colR = grid[:, right]
        ok = np.isfinite(colL) & np.isfinite(colR)
        ys = self.lattice.ys[ok]
        vals = 0.5 * (colL[ok] + colR[ok])
        if ys.size < 4:
            raise ValueError("too few rows near the vertical axis")
        spline = CubicSpline(ys, vals)
        self._axis_range = (float(ys[0]), float(ys[-1]))
        return spline

    def vertical_axis_range(self):
        if not hasattr(self, "_axis_range"):
            self.vertical_axis_interpolant()
        return self._axis_range

    def axis_rows(self):
        """Row coordinates and two-column averaged values along x1 = 0."""
        xs = self.lattice.xs
        right = int(np.searchsorted(xs, 0.0))
        left = right - 1
        grid = self.value_grid()
        colL = grid[:, left]
        colR = grid[:, right]
        ok = np.isfinite(colL) & np.isfinite(colR)
        return self.lattice.ys[ok], 0.5 * (colL[ok] + colR[ok])

    def sample_bicubic(self, pts):
        """Catmull-Rom interpolation; falls back to bilinear at the rim."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        grid = self.value_grid()
        xs, ys = self.lattice.xs, self.lattice.ys
        h = self.h
        fx = (pts[:, 0] - xs[0]) / h
        fy = (pts[:, 1] - ys[0]) / h
        ix = np.floor(fx).astype(int)
        iy = np.floor(fy).astype(int)
        tx = fx - ix
        ty = fy - iy
        out = np.empty(pts.shape[0])

        def cr_weights(t):
            t2 = t * t
            t3 = t2 * t
            return np.stack(
                [
                    -0.5 * t3 + t2 - 0.5 * t,
                    1.5 * t3 - 2.5 * t2 + 1.0,
                    -1.5 * t3 + 2.0 * t2 + 0.5 * t,
                    0.5 * t3 - 0.5 * t2,
                ],
                axis=0,
            )

        wx = cr_weights(tx)
        wy = cr_weights(ty)
        for n in range(pts.shape[0]):
            x0, y0 = ix[n] - 1, iy[n] - 1
            if x0 < 0 or y0 < 0 or x0 + 4 > xs.size or y0 + 4 > ys.size:
                raise ValueError("bicubic sample too close to the lattice edge")
            patch = grid[y0 : y0 + 4, x0 : x0 + 4]
            if np.any(~np.isfinite(patch)):
                # bilinear fallback on the inner 2x2 if available
                sub = grid[iy[n] : iy[n] + 2, ix[n] : ix[n] + 2]
                if np.any(~np.isfinite(sub)):
                    raise ValueError("sample stencil leaves the domain")
                out[n] = (
                    sub[0, 0] * (1 - tx[n]) * (1 - ty[n])
                    + sub[0, 1] * tx[n] * (1 - ty[n])
                    + sub[1, 0] * (1 - tx[n]) * ty[n]
                    + sub[1, 1] * tx[n] * ty[n]
                )
            else:
                out[n] = wy[:, n] @ patch @ wx[:, n]
        return out

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x1,x2,value\n")
            for (x1, x2), v in zip(self.xy, self.values):
                fh.write(f"{x1!r},{x2!r},{v!r}\n")


def solve_dirichlet(domain: Domain, rhs: Callable, boundary: Callable,
                    config: SolverConfig = SolverConfig()):
    """Solve det+ D^2 v = rhs with Dirichlet data on the domain.

    Returns ``(GridFunction, SolveReport)``; non-convergence is reported,
    not raised.  A nonpositive right-hand side is rejected.
    """
    t0 = time.perf_counter()
    prob = DiscreteProblem(domain, boundary, config)
    lat = prob.lattice
    rhs_vals = np.asarray(rhs(lat.node_xy[lat.free_ids]), dtype=float)
    if np.any(~np.isfinite(rhs_vals)) or np.any(rhs_vals <= 0):
        raise ValueError("rhs must be finite and strictly positive at grid nodes")
    vfull = prob.poisson_init(rhs_vals)
    R, D, amin = prob.residual(vfull, rhs_vals)
    rn = float(np.max(np.abs(R)))
    merit = float(np.linalg.norm(R))
    gs_used = 0
    it = 0
    while rn > config.newton_tol and it < config.max_iters:
        it += 1
        J = prob.jacobian(D, amin)
        try:
            delta = splu(J.tocsc()).solve(-R)
        except RuntimeError:
            delta = spsolve(J, -R)
        s = config.damping
        accepted = False
        for _ in range(12):
            vtry = vfull.copy()
            vtry[lat.free_ids] += s * delta
            Rt, Dt, at = prob.residual(vtry, rhs_vals)
            rnt = float(np.max(np.abs(Rt)))
            meritt = float(np.linalg.norm(Rt))
            if meritt < merit * (1 - 1e-4 * s) or rnt <= config.newton_tol:
                vfull, R, D, amin = vtry, Rt, Dt, at
                rn, merit = rnt, meritt
                accepted = True
                break
            s *= 0.5
        if not accepted:
            vfull = prob.gs_sweeps(vfull, rhs_vals, config.gs_rescue_sweeps)
            gs_used += config.gs_rescue_sweeps
            R, D, amin = prob.residual(vfull, rhs_vals)
            rn = float(np.max(np.abs(R)))
            merit = float(np.linalg.norm(R))
    floor = config.convexity_floor
    cols = np.arange(D.shape[1])
    act = int(np.sum((D[2 * amin, cols] <= floor) | (D[2 * amin + 1, cols] <= floor)))
    report = SolveReport(
        converged=bool(rn <= config.newton_tol),
        iterations=it,
        residual_sup=rn,
        floor_activations=act,
        wall_time=time.perf_counter() - t0,
        gs_sweeps=gs_used,
        n_unknowns=int(lat.free_ids.size),
    )
    gf = GridFunction(lattice=lat, values=vfull)
    gf._problem = prob
    gf._rhs_vals = rhs_vals
    return gf, report


def residual_field(v: GridFunction, rhs: Callable) -> GridFunction:
    """Per-node scheme residual of a grid function (zero at snapped nodes)."""
    prob = getattr(v, "_problem", None)
    if prob is None or prob.lattice is not v.lattice:
        raise ValueError("residual_field needs a grid function produced by solve_dirichlet")
    lat = v.lattice
    rhs_vals = np.asarray(rhs(lat.node_xy[lat.free_ids]), dtype=float)
    R, _, _ = prob.residual(v.values, rhs_vals)
    out = np.zeros_like(v.values)
    out[lat.free_ids] = R
    return GridFunction(lattice=lat, values=out)


def abp_gap(v1: GridFunction, v2: GridFunction) -> float:
    """Sup-norm of the difference over interior nodes."""
    if not v1.lattice.same_as(v2.lattice):
        raise GridMismatchError("grid functions live on different lattices")
    return float(np.max(np.abs(v1.values - v2.values)))


def comparison_check(v_sub: GridFunction, v_super: GridFunction, tol=1e-12):
    """Verify nodewise ordering of a sub/supersolution pair.

    Requires ``v_sub <= v_super`` at boundary-adjacent nodes; returns the
    maximal interior violation of the ordering.
    """
    if not v_sub.lattice.same_as(v_super.lattice):
        raise GridMismatchError("grid functions live on different lattices")
    lat = v_sub.lattice
    nb = lat.near_boundary
    bdry_gap = v_sub.values[nb] - v_super.values[nb]
    if bdry_gap.size and np.max(bdry_gap) > tol:
        raise ValueError(
            f"boundary data not ordered: max excess {np.max(bdry_gap):.3e}"
        )
    diff = v_sub.values - v_super.values
    return {
        "max_violation": float(max(0.0, np.max(diff))),
        "ordered": bool(np.max(diff) <= tol),
    }

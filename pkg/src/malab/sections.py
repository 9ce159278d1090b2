"""Affine-invariant geometry of convex sublevel sets.

Sections Z_h = {u < h} are polygonized by radial bisection, enclosed by
centered minimum-area ellipses (a multiplicative-weights iteration), and
normalized by the induced linear maps.  On top of that sit the measured
eccentricity growth, a strict-convexity exponent fit, a comparison
experiment against the unit-determinant solution on a section, a
quadratic blow-up tracker, and a Hessian-difference covering chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .masolver import Domain, GridFunction, SolverConfig, solve_dirichlet
from .metrics import ExponentFit, SampleSet, fit_exponent, holder_seminorm


class SectionEscapeError(ValueError):
    """A ray never reaches the requested level inside the search radius."""


@dataclass(frozen=True)
class Section:
    h: float
    polygon: np.ndarray          # (angles, 2), angular order
    M: np.ndarray                # centered enclosing ellipse {x^T M x <= 1}
    L: np.ndarray                # L(B_1) = ellipse, symmetric square root of M^-1
    eccentricity: float          # major / minor axis ratio
    sandwich_constant: float     # measured C with C^-1 E <= Z_h <= C E

    @property
    def area(self):
        x, y = self.polygon[:, 0], self.polygon[:, 1]
        return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class QuadraticPolynomial:
    """Q(x) = c + <b, x> + <A x, x> with A symmetric."""

    c: float
    b: np.ndarray
    A: np.ndarray

    def __call__(self, pts):
        pts = np.atleast_2d(pts)
        quad = np.einsum("ni,ij,nj->n", pts, self.A, pts)
        return self.c + pts @ self.b + quad

    @property
    def hessian(self):
        return 2.0 * self.A

    def unit_determinant_normalized(self):
        d = float(np.linalg.det(self.hessian))
        if d <= 0:
            raise ValueError("Hessian not positive definite")
        return QuadraticPolynomial(self.c, self.b, self.A / np.sqrt(d))


@dataclass(frozen=True)
class StrictConvexityEstimate:
    sigma: float
    c0: float
    r_squared: float
    n_pairs: int


@dataclass(frozen=True)
class BlowupTrace:
    rows: tuple  # per step: (k, radius, normalized_defect, hessian_drift)

    def defects(self):
        return np.array([r[2] for r in self.rows])

    def radii(self):
        return np.array([r[1] for r in self.rows])


@dataclass(frozen=True)
class NormalizedSolution:
    section: Section
    u_h: Callable
    f_h: Callable

    def f_h_samples(self, m: int = 33) -> SampleSet:
        """f_h sampled on a polar probe grid inside the normalized section."""
        ang = np.linspace(0, 2 * np.pi, m, endpoint=False)
        rad = np.linspace(0.05, 0.9, m // 2)
        R, T = np.meshgrid(rad, ang)
        pts = np.stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()], axis=1)
        return SampleSet(pts, self.f_h(pts))


# ------------------------------------------------------------ extraction


def extract_section(u: Callable, h: float, angles: int = 256,
                    r_max: float = 1.0, rel_tol: float = 1e-10) -> Section:
    """Polygonize {u < h} by radial bisection from the minimum at 0."""
    if h <= 0:
        raise ValueError("section height must be positive")
    thetas = np.linspace(0.0, 2 * np.pi, angles, endpoint=False)
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    lo = np.zeros(angles)
    hi = np.full(angles, min(0.1, r_max))
    # expand brackets until u >= h
    for _ in range(200):
        vals = u(dirs * hi[:, None])
        need = vals < h
        if not np.any(need):
            break
        hi[need] *= 1.5
        if np.any(hi > r_max):
            over = hi > r_max
            if np.any(u(dirs[over] * np.full(over.sum(), r_max)[:, None]) < h):
                raise SectionEscapeError(
                    f"section at height {h} escapes the search radius {r_max}"
                )
            hi = np.minimum(hi, r_max)
    else:
        raise SectionEscapeError("level bracket expansion failed")
    lo = 0.5 * hi
    vals = u(dirs * lo[:, None])
    shrink = vals >= h
    while np.any(shrink):
        lo[shrink] *= 0.5
        vals = u(dirs * lo[:, None])
        shrink = vals >= h
        if np.max(lo) < 1e-300:
            raise SectionEscapeError("degenerate section")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        inside = u(dirs * mid[:, None]) < h
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if np.max((hi - lo) / np.maximum(hi, 1e-300)) < rel_tol:
            break
    rho = 0.5 * (lo + hi)
    polygon = dirs * rho[:, None]
    M = centered_mvee(polygon)
    evals, evecs = np.linalg.eigh(M)
    L = evecs @ np.diag(evals**-0.5) @ evecs.T
    ecc = float(np.sqrt(evals[1] / evals[0]))  # axis ratio >= 1
    c_out = float(np.sqrt(np.max(np.einsum("ni,ij,nj->n", polygon, M, polygon))))
    # inscribed scaling: largest c with E/c inside the polygon
    c_in = 0.0
    for k in range(polygon.shape[0]):
        a = polygon[k]
        b = polygon[(k + 1) % polygon.shape[0]]
        edge = b - a
        n = np.array([edge[1], -edge[0]])
        d = float(n @ a)
        if d < 0:
            n, d = -n, -d
        supp = float(np.sqrt(n @ np.linalg.solve(M, n)))
        if d > 0:
            c_in = max(c_in, supp / d)
    sandwich = max(c_out, c_in)
    return Section(h=h, polygon=polygon, M=M, L=L, eccentricity=ecc,
                   sandwich_constant=float(sandwich))


def centered_mvee(polygon, tol: float = 1e-9, max_iters: int = 200000) -> np.ndarray:
    """Minimum-area origin-centered ellipse containing the points.

    Multiplicative-weights ascent on the log-det design problem; the
    returned matrix is scaled so containment holds exactly, with area
    within ``tol`` of optimal.
    """
    P = np.asarray(polygon, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or P.shape[0] < 2:
        raise ValueError("need at least two planar points")
    d = 2.0
    n = P.shape[0]
    # drop the degenerate case early
    if np.max(np.abs(P)) == 0 or np.linalg.matrix_rank(P) < 2:
        raise ValueError("degenerate (rank-deficient) point set")
    w = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        V = (P * w[:, None]).T @ P
        Vinv = np.linalg.inv(V)
        g = np.einsum("ni,ij,nj->n", P, Vinv, P)
        j = int(np.argmax(g))
        gmax = g[j]
        if gmax <= d * (1.0 + tol):
            break
        step = (gmax - d) / (d * (gmax - 1.0))
        w *= 1.0 - step
        w[j] += step
    V = (P * w[:, None]).T @ P
    M = np.linalg.inv(V) / d
    scale = np.max(np.einsum("ni,ij,nj->n", P, M, P))
    return M * (1.0 / scale)


def normalize(u: Callable, f: Callable, s: Section) -> NormalizedSolution:
    """Evaluators of u(L z)/h and f(L z) on the normalized section."""
    L = s.L
    h = s.h

    def u_h(pts):
        pts = np.atleast_2d(pts)
        return u(pts @ L.T) / h

    def f_h(pts):
        pts = np.atleast_2d(pts)
        return f(pts @ L.T)

    return NormalizedSolution(section=s, u_h=u_h, f_h=f_h)


def eccentricity_trace(u: Callable, h_list, angles: int = 256,
                       r_max: float = 2.0) -> ExponentFit:
    """Fit of log(eccentricity) against log(1/h).

    The reported slope is the eccentricity growth rate per e-fold of
    section shallowing; for the anisotropic model solution it equals
    (gamma - 1) / (gamma + 1).
    """
    pts = []
    for h in sorted(h_list, reverse=True):
        sec = extract_section(u, h, angles=angles, r_max=r_max)
        pts.append((1.0 / h, sec.eccentricity))
    return fit_exponent(pts)


def measure_strict_convexity(u: Callable, grad: Optional[Callable] = None,
                             probe_radius: float = 0.5, pair_budget: int = 2000,
                             base_points=None, rays: int = 8,
                             seed: int = 0) -> StrictConvexityEstimate:
    """Fit sigma, c0 with u(z) >= u(x) + <grad u(x), z - x> + c0 |z - x|^sigma.

    Least-squares exponent on the log defect against log separation; c0 is
    then lowered so the inequality holds on every sampled pair (the
    estimate has lower-bound semantics).
    """
    rng = np.random.default_rng(seed)
    if base_points is None:
        base_points = np.zeros((1, 2))
    base_points = np.atleast_2d(np.asarray(base_points, dtype=float))
    if grad is None:
        def grad(pts, h=1e-7):
            pts = np.atleast_2d(pts)
            out = np.empty_like(pts)
            for i in range(2):
                e = np.zeros(2)
                e[i] = h
                out[:, i] = (u(pts + e) - u(pts - e)) / (2 * h)
            return out
    thetas = np.linspace(0, 2 * np.pi, rays, endpoint=False)
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    radii = np.geomspace(1e-3, probe_radius, max(8, pair_budget // (len(base_points) * rays)))
    seps, defects = [], []
    for x in base_points:
        gx = grad(x[None, :])[0]
        ux = float(u(x[None, :])[0])
        scale = 1.0 + abs(ux) + float(np.hypot(*gx))
        for dvec in dirs:
            z = x[None, :] + radii[:, None] * dvec[None, :]
            defect = u(z) - ux - (z - x[None, :]) @ gx
            # discard separations where the defect is below gradient noise
            good = defect > 1e-8 * scale * radii
            seps.extend(radii[good])
            defects.extend(np.asarray(defect)[good])
    seps = np.asarray(seps)
    defects = np.asarray(defects)
    if seps.size < 8:
        raise ValueError("no strict convexity detected (defects nonpositive)")
    fit = fit_exponent(list(zip(seps, defects)))
    sigma = fit.slope
    c0 = float(np.min(defects / seps**sigma))
    if c0 <= 0:
        raise ValueError("no positive convexity constant")
    return StrictConvexityEstimate(sigma=float(sigma), c0=c0,
                                   r_squared=fit.r_squared, n_pairs=int(seps.size))


# ----------------------------------------------------- solve experiments


@dataclass
class Lemma31Report:
    sup_diff: float
    taylor: QuadraticPolynomial
    defects: tuple          # rows (radius, sup |u_f - Q|, normalized)
    precondition_ok: bool
    w_report: object
    u_report: object


def _fit_quadratic(pts, vals):
    X = np.column_stack([
        np.ones(len(pts)), pts[:, 0], pts[:, 1],
        pts[:, 0] ** 2, pts[:, 0] * pts[:, 1], pts[:, 1] ** 2,
    ])
    coef, *_ = np.linalg.lstsq(X, vals, rcond=None)
    A = np.array([[coef[3], 0.5 * coef[4]], [0.5 * coef[4], coef[5]]])
    return QuadraticPolynomial(c=float(coef[0]), b=coef[1:3].copy(), A=A)


def lemma31_experiment(s: Section, f: Callable, delta: float, eps_hat: float,
                       config: SolverConfig = SolverConfig(),
                       grid_n: int = 129, alpha: float = 0.5) -> Lemma31Report:
    """Compare the solution with rhs f against the unit-rhs solution on a
    section, and track how well the latter's quadratic model fits.

    Precondition: sup |f - 1| <= delta * eps_hat on the section.
    """
    poly = s.polygon
    dom_w = Domain.polygon(poly, grid_n=grid_n)
    dom_u = Domain.polygon(poly, grid_n=grid_n)
    probe = poly * 0.97
    dev = np.max(np.abs(np.asarray(f(probe)) - 1.0))
    pre_ok = bool(dev <= delta * eps_hat * (1 + 1e-9))
    bval = float(s.h)
    w, w_rep = solve_dirichlet(dom_w, lambda p: np.ones(len(p)),
                               lambda p: np.full(len(p), bval), config)
    u_f, u_rep = solve_dirichlet(dom_u, f, lambda p: np.full(len(p), bval), config)
    if not (w_rep.converged and u_rep.converged):
        raise RuntimeError("section solve did not converge")
    sup_diff = float(np.max(np.abs(w.values - u_f.values)))
    # quadratic Taylor model of w near its minimum (at the section center)
    r_fit = 0.25 * float(np.min(np.hypot(poly[:, 0], poly[:, 1])))
    near = np.hypot(w.xy[:, 0], w.xy[:, 1]) <= r_fit
    Q = _fit_quadratic(w.xy[near], w.values[near])
    defects = []
    for k in range(4):
        rad = r_fit * 2.0**-k
        m = np.hypot(u_f.xy[:, 0], u_f.xy[:, 1]) <= rad
        if m.sum() < 12:
            break
        d = float(np.max(np.abs(u_f.values[m] - Q(u_f.xy[m]))))
        defects.append((rad, d, d / rad ** (2 + alpha)))
    return Lemma31Report(sup_diff=sup_diff, taylor=Q, defects=tuple(defects),
                         precondition_ok=pre_ok, w_report=w_rep, u_report=u_rep)


def blowup_track(u, alpha: float, r_hat: float, steps: int,
                 min_points: int = 25, samples_per_axis: int = 41) -> BlowupTrace:
    """Least-squares quadratic fits on shrinking balls around the origin.

    Normalized defects sup |u - Q_k| / radius^(2+alpha) stay bounded at a
    point of second-order smoothness and diverge at the degenerate origin
    of the model solution.
    """
    if not 0 < r_hat < 1:
        raise ValueError("r_hat must lie in (0, 1)")
    rows = []
    hessians = []
    radii = []
    for k in range(1, steps + 1):
        rad = r_hat**k
        if callable(u):
            ax = np.linspace(-rad, rad, samples_per_axis)
            X, Y = np.meshgrid(ax, ax)
            pts = np.stack([X.ravel(), Y.ravel()], axis=1)
            pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= rad]
            vals = u(pts)
        else:
            m = np.hypot(u.xy[:, 0], u.xy[:, 1]) <= rad
            pts = u.xy[m]
            vals = u.values[m]
        if pts.shape[0] < min_points:
            raise ValueError(
                f"resolution exhausted at step {k}: {pts.shape[0]} samples in ball"
            )
        Q = _fit_quadratic(pts, vals)
        defect = float(np.max(np.abs(vals - Q(pts))))
        rows.append([k, rad, defect / rad ** (2 + alpha)])
        hessians.append(Q.A)
        radii.append(rad)
    out = []
    for i, (k, rad, nd) in enumerate(rows):
        if i + 1 < len(rows):
            drift = float(np.linalg.norm(hessians[i] - hessians[i + 1])) / rad**alpha
        else:
            drift = float("nan")
        out.append((k, rad, nd, drift))
    return BlowupTrace(rows=tuple(out))


def covering_chain(u: Callable, du: Callable, d2u: Callable,
                   x, y, h_bar: float, angles: int = 64,
                   max_points: int = 4096) -> float:
    """Chained Hessian-difference bound along the segment [x, y].

    Splits the segment into N pieces such that consecutive points lie in
    the half-dilated section of height h_bar around each point, then sums
    |D2u(x_{i+1}) - D2u(x_i)| over the chain.  Always at least the direct
    difference, by the triangle inequality.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def shifted_section_contains(center, target):
        # membership of target in Z_{h_bar}(center)/2: the doubled offset
        # stays below the supporting-plane section height
        g = du(center[None, :])[0]
        probe = center + 2.0 * (target - center)
        val = float(u(probe[None, :])[0]) - float(u(center[None, :])[0]) - g @ (probe - center)
        return val < h_bar

    N = 1
    while N <= max_points:
        pts = x[None, :] + np.linspace(0, 1, N + 1)[:, None] * (y - x)[None, :]
        ok = all(
            shifted_section_contains(pts[i], pts[i + 1]) for i in range(N)
        )
        if ok:
            break
        N *= 2
    else:
        raise SectionEscapeError("chain refinement exhausted")
    total = 0.0
    for i in range(N):
        dH = d2u(pts[i + 1][None, :])[0] - d2u(pts[i][None, :])[0]
        total += float(np.linalg.norm(dH))
    return total

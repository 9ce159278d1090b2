"""Measurement layer: discrete Holder seminorms, oscillations, finite
differences along the vertical axis, and log-log exponent fits.

Seminorms are computed over sampled values with witness pairs.  The
exhaustive strategy examines all pairs; the subsampled strategy examines
a deterministic stratified subset (per-octave distance bins) followed by
local refinement around the best witnesses, and is a certified lower
bound for the exhaustive value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class SampleSet:
    """Sampled values over scalar abscissae (1D) or planar points (2D)."""

    abscissae: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.abscissae, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if a.ndim == 1:
            pass
        elif a.ndim == 2 and a.shape[1] == 2:
            pass
        else:
            raise ValueError("abscissae must be (n,) scalars or (n, 2) points")
        if v.shape != (a.shape[0],):
            raise ValueError("values must be one per abscissa")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(a)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "abscissae", a)
        object.__setattr__(self, "values", v)

    @property
    def dimension(self):
        return 1 if self.abscissae.ndim == 1 else 2

    def __len__(self):
        return self.abscissae.shape[0]

    def restricted(self, lo: float, hi: float) -> "SampleSet":
        if self.dimension != 1:
            raise ValueError("window restriction requires 1D samples")
        m = (self.abscissae >= lo) & (self.abscissae <= hi)
        return SampleSet(self.abscissae[m], self.values[m])

    def to_rows(self):
        if self.dimension == 1:
            return [(float(a), float(v)) for a, v in zip(self.abscissae, self.values)]
        return [
            (float(a[0]), float(a[1]), float(v))
            for a, v in zip(self.abscissae, self.values)
        ]


@dataclass(frozen=True)
class HolderEstimate:
    alpha: float
    value: float
    witness: tuple
    strategy: str
    pairs_examined: int = 0

    def check_witness(self, s: SampleSet) -> float:
        """Recompute the quotient at the stored witness."""
        i, j = self.witness
        p = s.abscissae[i]
        q = s.abscissae[j]
        d = abs(p - q) if s.dimension == 1 else float(np.hypot(*(p - q)))
        return abs(s.values[i] - s.values[j]) / d**self.alpha


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    samples: tuple

    def predict(self, r):
        return np.exp(self.intercept) * np.asarray(r) ** self.slope


def _pair_dists(a, idx_i, idx_j):
    if a.ndim == 1:
        return np.abs(a[idx_i] - a[idx_j])
    d = a[idx_i] - a[idx_j]
    return np.hypot(d[:, 0], d[:, 1])


def _best_pair(a, v, alpha, idx_i, idx_j, min_dist=0.0):
    """Max quotient over the given pairs; ties broken by smallest (i, j)."""
    d = _pair_dists(a, idx_i, idx_j)
    keep = d > max(min_dist, 0.0)
    if not np.any(keep):
        return 0.0, None, 0
    ii, jj, dd = idx_i[keep], idx_j[keep], d[keep]
    q = np.abs(v[ii] - v[jj]) / dd**alpha
    best = np.max(q)
    cand = np.flatnonzero(q >= best * (1 - 1e-15))
    # lexicographic tie-break on the (sorted) index pair
    lo = np.minimum(ii[cand], jj[cand])
    hi = np.maximum(ii[cand], jj[cand])
    order = np.lexsort((hi, lo))
    k = cand[order[0]]
    return float(q[k]), (int(min(ii[k], jj[k])), int(max(ii[k], jj[k]))), int(keep.sum())


def _exhaustive(a, v, alpha, min_dist=0.0):
    n = a.shape[0]
    best_val, best_wit, examined = 0.0, (0, 1), 0
    chunk = max(1, int(4e6) // max(n, 1))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        ii, jj = np.meshgrid(np.arange(start, stop), np.arange(n), indexing="ij")
        m = ii.ravel() < jj.ravel()
        val, wit, cnt = _best_pair(a, v, alpha, ii.ravel()[m], jj.ravel()[m], min_dist)
        examined += cnt
        if wit is not None and (
            val > best_val or (val == best_val and wit < best_wit)
        ):
            best_val, best_wit = val, wit
    return best_val, best_wit, examined


def _stratified_pairs(a, rng, pairs_per_bin=256):
    """Deterministic per-octave distance bins of random pairs."""
    n = a.shape[0]
    i = rng.integers(0, n, size=64 * pairs_per_bin)
    j = rng.integers(0, n, size=64 * pairs_per_bin)
    m = i != j
    i, j = i[m], j[m]
    d = _pair_dists(a, i, j)
    pos = d > 0
    i, j, d = i[pos], j[pos], d[pos]
    if d.size == 0:
        return np.array([], dtype=int), np.array([], dtype=int)
    octave = np.floor(np.log2(d / d.max() + 1e-300)).astype(int)
    sel_i, sel_j = [], []
    for o in np.unique(octave):
        members = np.flatnonzero(octave == o)[:pairs_per_bin]
        sel_i.append(i[members])
        sel_j.append(j[members])
    return np.concatenate(sel_i), np.concatenate(sel_j)


def _knn_pairs(a, m=8):
    """Each point paired with its nearest neighbours (deterministic)."""
    from scipy.spatial import cKDTree

    pts = a[:, None] if a.ndim == 1 else a
    tree = cKDTree(pts)
    k = min(m + 1, pts.shape[0])
    _, idx = tree.query(pts, k=k)
    ii = np.repeat(np.arange(pts.shape[0]), k - 1)
    jj = idx[:, 1:].ravel()
    return ii, jj


def _refine_around(a, v, alpha, witness, k=96):
    """Exhaust pairs among the nearest neighbours of both witness points."""
    n = a.shape[0]
    out_i, out_j = [], []
    for w in witness:
        if a.ndim == 1:
            d = np.abs(a - a[w])
        else:
            d = np.hypot(a[:, 0] - a[w, 0], a[:, 1] - a[w, 1])
        near = np.argsort(d, kind="stable")[: min(k, n)]
        out_i.append(near)
    cand = np.unique(np.concatenate(out_i))
    ii, jj = np.meshgrid(cand, cand, indexing="ij")
    m = ii.ravel() < jj.ravel()
    return ii.ravel()[m], jj.ravel()[m]


def holder_seminorm(s: SampleSet, alpha: float, strategy: str = "exhaustive",
                    seed: int = 0, min_dist: float = 0.0) -> HolderEstimate:
    """Max of |v(p) - v(q)| / |p - q|^alpha over examined pairs.

    ``min_dist`` discards pairs closer than the sampling scale, below
    which quotients are unresolved artefacts of mixed-resolution
    templates.
    """
    if len(s) < 2:
        raise ValueError("need at least two samples")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    a, v = s.abscissae, s.values
    if strategy == "exhaustive" or (s.dimension == 1 and len(s) <= 2000):
        val, wit, cnt = _exhaustive(a, v, alpha, min_dist)
        return HolderEstimate(alpha, val, wit, strategy, cnt)
    if strategy != "subsampled":
        raise ValueError(f"unknown strategy {strategy!r}")
    rng = np.random.default_rng(seed)
    si, sj = _stratified_pairs(a, rng)
    ki, kj = _knn_pairs(a)
    ii = np.concatenate([si, ki])
    jj = np.concatenate([sj, kj])
    best_val, best_wit, examined = _best_pair(a, v, alpha, ii, jj, min_dist)
    if best_wit is None:
        best_wit = (0, 1)
    for _ in range(4):
        ri, rj = _refine_around(a, v, alpha, best_wit)
        val, wit, cnt = _best_pair(a, v, alpha, ri, rj, min_dist)
        examined += cnt
        if wit is None or val <= best_val * (1 + 1e-12):
            if wit is not None and val >= best_val and wit < best_wit:
                best_wit = wit
            break
        best_val, best_wit = val, wit
    return HolderEstimate(alpha, best_val, best_wit, "subsampled", examined)


def fd_partial22_line(v: Callable | object, x2_list, step) -> SampleSet:
    """Centered second differences of v(0, .) along the vertical axis.

    ``v`` is either a callable on (n, 2) arrays or a GridFunction (any
    object with a ``vertical_axis_interpolant`` method).  ``step`` is a
    scalar or one value per abscissa.
    """
    x2 = np.asarray(x2_list, dtype=float)
    h = np.broadcast_to(np.asarray(step, dtype=float), x2.shape)
    if np.any(h <= 0):
        raise ValueError("step must be positive")
    if callable(v):
        def val(y):
            pts = np.stack([np.zeros_like(y), y], axis=1)
            return v(pts)
    else:
        interp = v.vertical_axis_interpolant()
        lo, hi = v.vertical_axis_range()
        if np.any(x2 + h > hi) or np.any(x2 - h < lo):
            raise ValueError("finite-difference stencil leaves the sampled domain")
        val = interp
    d2 = (val(x2 + h) - 2.0 * val(x2) + val(x2 - h)) / h**2
    return SampleSet(x2, d2)


def oscillation(s: SampleSet, window) -> float:
    """max - min of the sampled values over a 1D window (lo, hi)."""
    lo, hi = window
    sub = s.restricted(lo, hi)
    if len(sub) == 0:
        raise ValueError(f"no samples in window [{lo}, {hi}]")
    return float(np.max(sub.values) - np.min(sub.values))


def fit_exponent(points: Sequence) -> ExponentFit:
    """Least-squares line through (log r, log v)."""
    pts = [(float(r), float(v)) for r, v in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    r = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(r <= 0) or np.any(v <= 0):
        raise ValueError("log-log fit requires positive data")
    x = np.log(r)
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    yhat = slope * x + intercept
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ExponentFit(float(slope), float(intercept), float(min(r2, 1.0)), tuple(pts))

"""Cadlag paths on [0, 1]: representation, functionals and the J1 distance.

A path is stored as grid samples (right limits) plus an explicit jump list;
between grid points the path varies linearly toward the left limit of the next
grid point, so the representation is closed under sums and componentwise
products and every functional below is exact on it.

The J1 distance is the classical incomplete Skorokhod metric

    d(x, y) = inf over time changes of max(time distortion, warped sup distance)

restricted to piecewise-linear time changes whose breakpoints match pairs from
the union of both jump sets (plus dyadic refinement points), including the
degenerate limits where a stretch of one time axis is compressed to a point.
The restriction makes the search a finite dynamic program that is exact on
pairs of step functions and an upper bound, never exceeding the uniform
distance, in general.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

_EMPTY = np.zeros((0,))


def _as_2d(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


@dataclass(frozen=True)
class CadlagPath:
    """Right-continuous path with left limits, plus its explicit jumps.

    ``grid`` is strictly increasing with first point 0 and last point 1;
    ``values[i]`` is the right limit at ``grid[i]``; every jump time must be a
    grid point in (0, 1] and the recorded size is the exact discontinuity.
    Instances are immutable; all operations return new paths.
    """

    grid: np.ndarray
    values: np.ndarray
    jump_times: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    jump_sizes: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    caglad: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = _as_2d(self.values)
        jt = np.asarray(self.jump_times, dtype=float)
        js = _as_2d(self.jump_sizes) if len(jt) else np.zeros((0, values.shape[1]))
        if grid.ndim != 1 or len(grid) < 2:
            raise ValueError("grid needs at least the two endpoints 0 and 1")
        if grid[0] != 0.0 or grid[-1] != 1.0:
            raise ValueError("grid must start at 0 and end at 1")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if values.shape[0] != len(grid):
            raise ValueError("one value per grid time required")
        if len(jt):
            if np.any(np.diff(jt) <= 0):
                raise ValueError("jump times must be strictly increasing")
            if jt[0] <= 0 or jt[-1] > 1:
                raise ValueError("jump times must lie in (0, 1]")
            if js.shape != (len(jt), values.shape[1]):
                raise ValueError("one size vector per jump required")
            pos = np.searchsorted(grid, jt)
            if np.any(pos >= len(grid)) or np.any(grid[np.minimum(pos, len(grid) - 1)] != jt):
                raise ValueError("every jump time must appear in the grid")
        # left limits at grid points: value minus the discontinuity there
        left = values.copy()
        if len(jt):
            pos = np.searchsorted(grid, jt)
            left[pos] -= js
        for name, arr in (("grid", grid), ("values", values),
                          ("jump_times", jt), ("jump_sizes", js), ("_left", left)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    # -- basics ------------------------------------------------------------

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zero(cls, dimension: int = 1) -> "CadlagPath":
        return cls(np.array([0.0, 1.0]), np.zeros((2, dimension)))

    @classmethod
    def step(cls, time: float, size: Sequence[float]) -> "CadlagPath":
        """The one-step path size * 1_[time, 1]."""
        size = np.atleast_1d(np.asarray(size, dtype=float))
        d = size.shape[0]
        if time <= 0:
            # a step at 0 is a constant path with no recorded discontinuity
            return cls(np.array([0.0, 1.0]), np.tile(size, (2, 1)))
        grid = np.unique(np.array([0.0, float(time), 1.0]))
        values = np.where((grid >= time)[:, None], size, np.zeros(d))
        return cls(grid, values, np.array([float(time)]), size[None, :])

    @classmethod
    def from_samples(cls, grid, values, jumps: Iterable[tuple[float, Sequence[float]]] = ()) -> "CadlagPath":
        jumps = sorted(jumps, key=lambda j: j[0])
        jt = np.array([t for t, _ in jumps], dtype=float)
        js = np.array([np.atleast_1d(s) for _, s in jumps], dtype=float) if jumps else _EMPTY.copy()
        return cls(np.asarray(grid, dtype=float), values, jt, js)

    # -- evaluation ----------------------------------------------------------

    def _sides_at(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Left limits and right values at arbitrary times, vectorized."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        g, V, L = self.grid, self.values, self._left
        m = len(g)
        idx = np.searchsorted(g, t, side="right")
        idx = np.minimum(np.maximum(idx - 1, 0), m - 1)
        exact = g[idx] == t
        nxt = np.minimum(idx + 1, m - 1)
        span = g[nxt] - g[idx]
        frac = np.where(span > 0, (t - g[idx]) / np.where(span > 0, span, 1.0), 0.0)
        interior = V[idx] + frac[:, None] * (L[nxt] - V[idx])
        right = np.where(exact[:, None], V[idx], interior)
        left = np.where(exact[:, None], L[idx], interior)
        return left, right

    def value_at(self, time: float) -> np.ndarray:
        """Right-continuous value at ``time``."""
        return self._sides_at(np.array([time]))[1][0]

    def left_limit_at(self, time: float) -> np.ndarray:
        return self._sides_at(np.array([time]))[0][0]

    # -- algebra -------------------------------------------------------------

    def scaled(self, factor: float) -> "CadlagPath":
        return CadlagPath(self.grid, self.values * factor, self.jump_times,
                          self.jump_sizes * factor if len(self.jump_times) else _EMPTY.copy(),
                          self.caglad)

    def to_dict(self) -> dict:
        return {
            "d": self.dimension,
            "grid": [float(t) for t in self.grid],
            "values": [[float(v) for v in row] for row in self.values],
            "jumps": [{"t": float(t), "size": [float(v) for v in s]}
                      for t, s in zip(self.jump_times, self.jump_sizes)],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CadlagPath":
        return cls.from_samples(obj["grid"], obj["values"],
                                [(j["t"], j["size"]) for j in obj["jumps"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CadlagPath":
        return cls.from_dict(json.loads(text))

    def write_csv(self, fh, header_comment: Optional[str] = None) -> None:
        """One row per grid time: t, value components."""
        writer = csv.writer(fh)
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer.writerow(["t"] + [f"x{k}" for k in range(self.dimension)])
        for t, row in zip(self.grid, self.values):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# Path functionals
# ---------------------------------------------------------------------------

def sup_norm(x: CadlagPath) -> float:
    """sup of the Euclidean norm over [0, 1]; left limits count toward the sup."""
    norms = np.linalg.norm(x.values, axis=1)
    left = np.linalg.norm(x._left, axis=1)
    return float(max(norms.max(), left.max()))


def largest_jump_time(x: CadlagPath) -> float:
    """Time of the first jump of maximal norm; 1.0 for a path without jumps."""
    if len(x.jump_times) == 0:
        return 1.0
    norms = np.linalg.norm(x.jump_sizes, axis=1)
    return float(x.jump_times[int(np.argmax(norms))])


def one_step_approx(x: CadlagPath) -> CadlagPath:
    """The single-step path carrying the largest jump; zero path if x has none."""
    if len(x.jump_times) == 0:
        return CadlagPath.zero(x.dimension)
    norms = np.linalg.norm(x.jump_sizes, axis=1)
    k = int(np.argmax(norms))
    return CadlagPath.step(float(x.jump_times[k]), x.jump_sizes[k])


def gamma_oscillation(x: CadlagPath, gamma: float) -> int:
    """Largest p with grid times t_0 < ... < t_p and |x_{t_i} - x_{t_{i-1}}| > gamma.

    Candidate times are the grid times (where the path attains its sampled
    values); the maximum chain length is found by an exact longest-chain scan,
    since a greedy anchor walk can undercount.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    v = x.values
    m = len(v)
    best = np.zeros(m, dtype=int)
    for j in range(1, m):
        d = np.linalg.norm(v[:j] - v[j], axis=1)
        reach = d > gamma
        if reach.any():
            best[j] = best[:j][reach].max() + 1
    return int(best.max())


def cw_product(y: CadlagPath, x: CadlagPath) -> CadlagPath:
    """Componentwise product path on the merged grid.

    The product jumps wherever either factor jumps; its discontinuity is the
    exact difference of right values and left limits there, which matches
    y_- * dx + dy * x_- + dy * dx.  Between grid points the product is
    re-linearized on the merged grid.
    """
    if y.dimension != x.dimension:
        raise ValueError(f"dimension mismatch: {y.dimension} vs {x.dimension}")
    grid = np.union1d(y.grid, x.grid)
    yl, yr = y._sides_at(grid)
    xl, xr = x._sides_at(grid)
    right = yr * xr
    left = yl * xl
    jt = np.union1d(y.jump_times, x.jump_times)
    jumps = []
    for t in jt:
        i = int(np.searchsorted(grid, t))
        delta = right[i] - left[i]
        if np.any(delta != 0.0):
            jumps.append((float(t), delta))
    return CadlagPath.from_samples(grid, right, jumps)


def uniform_distance(x: CadlagPath, y: CadlagPath) -> float:
    """sup_t |x_t - y_t|, exact on the piecewise-linear representation."""
    if x.dimension != y.dimension:
        raise ValueError("dimension mismatch")
    times = np.union1d(x.grid, y.grid)
    xl, xr = x._sides_at(times)
    yl, yr = y._sides_at(times)
    dl = np.linalg.norm(xl - yl, axis=1)
    dr = np.linalg.norm(xr - yr, axis=1)
    return float(max(dl.max(), dr.max()))


# ---------------------------------------------------------------------------
# Time changes and the J1 distance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeChange:
    """Strictly increasing piecewise-linear bijection of [0, 1] onto itself."""

    breakpoints: np.ndarray
    images: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        u = np.asarray(self.images, dtype=float)
        for name, arr in (("breakpoints", b), ("images", u)):
            if arr.ndim != 1 or len(arr) < 2 or arr[0] != 0.0 or arr[-1] != 1.0:
                raise ValueError(f"{name} must run from 0 to 1")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
        if len(b) != len(u):
            raise ValueError("breakpoints and images must have equal length")
        b.flags.writeable = False
        u.flags.writeable = False
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "images", u)

    def apply(self, t):
        return np.interp(t, self.breakpoints, self.images)

    def inverse(self) -> "TimeChange":
        return TimeChange(self.images, self.breakpoints)

    def distortion(self) -> float:
        """max |lambda(t) - t|; attained at a breakpoint by piecewise linearity."""
        return float(np.abs(self.images - self.breakpoints).max())


def _dyadic_points(count: int) -> np.ndarray:
    """First ``count`` points of the dyadic enumeration 1/2, 1/4, 3/4, 1/8, ..."""
    pts: list[float] = []
    level = 2
    while len(pts) < count:
        pts.extend(k / level for k in range(1, level, 2))
        level *= 2
    return np.array(pts[:count])


def _interior_slice(grid: np.ndarray, a: float, b: float) -> slice:
    return slice(int(np.searchsorted(grid, a, side="right")),
                 int(np.searchsorted(grid, b, side="left")))


def _j1_dp(x: CadlagPath, y: CadlagPath, refinement: int,
           cutoff: Optional[float]) -> float:
    """Minimal max(time distortion, warped sup distance) over the chain family.

    Chains of matched time pairs over the anchor set (endpoints, both jump
    sets, dyadic refinement points), each anchor pair carrying a left/right
    side, connected by affine stretches, axis-parallel sweeps and diagonal
    jump crossings.  With ``cutoff`` set, anchor pairs and partial chains
    exceeding it are pruned and the returned value may be inf.
    """
    anchors = np.unique(np.concatenate([
        np.array([0.0, 1.0]), x.jump_times, y.jump_times,
        _dyadic_points(refinement) if refinement > 0 else _EMPTY,
    ]))
    K = len(anchors)
    XL, XR = x._sides_at(anchors)
    YL, YR = y._sides_at(anchors)
    tdist = np.abs(anchors[None, :] - anchors[:, None])  # tdist[i, j] = |q_j - p_i|
    nodeL = np.maximum(tdist, np.linalg.norm(XL[:, None, :] - YL[None, :, :], axis=2))
    nodeR = np.maximum(tdist, np.linalg.norm(XR[:, None, :] - YR[None, :, :], axis=2))
    big = np.inf
    lim = big if cutoff is None else cutoff

    gx, gy = x.grid, y.grid

    def seg_cost(i: int, j: int, k: int, l: int) -> float:
        """Affine stretch (p_i, q_j) -> (p_k, q_l); interior events only."""
        p0, q0, p1, q1 = anchors[i], anchors[j], anchors[k], anchors[l]
        slope = (q1 - q0) / (p1 - p0)
        cost = 0.0
        sl = _interior_slice(gx, p0, p1)
        if sl.stop > sl.start:
            ts = gx[sl]
            yl, yr = y._sides_at(q0 + (ts - p0) * slope)
            c = np.maximum(np.linalg.norm(x._left[sl] - yl, axis=1),
                           np.linalg.norm(x.values[sl] - yr, axis=1))
            cost = float(c.max())
            if cost > lim:
                return cost
        sl = _interior_slice(gy, q0, q1)
        if sl.stop > sl.start:
            vs = gy[sl]
            xl, xr = x._sides_at(p0 + (vs - q0) / slope)
            c = np.maximum(np.linalg.norm(xl - y._left[sl], axis=1),
                           np.linalg.norm(xr - y.values[sl], axis=1))
            cost = max(cost, float(c.max()))
        return cost

    def sweep_cost(fixed_value: np.ndarray, path: CadlagPath, a: float, b: float) -> float:
        """sup |fixed - path(v)| over v in [a, b], right value at a, left at b."""
        sl = _interior_slice(path.grid, a, b)
        ra = path._sides_at(np.array([a]))[1]
        lb = path._sides_at(np.array([b]))[0]
        cost = max(float(np.linalg.norm(fixed_value - ra[0])),
                   float(np.linalg.norm(fixed_value - lb[0])))
        if sl.stop > sl.start:
            cost = max(cost, float(np.linalg.norm(path._left[sl] - fixed_value, axis=1).max()),
                       float(np.linalg.norm(path.values[sl] - fixed_value, axis=1).max()))
        return cost

    fL = np.full((K, K), big)
    fR = np.full((K, K), big)
    fR[0, 0] = nodeR[0, 0]
    if fR[0, 0] > lim:
        return fR[0, 0]

    for i in range(K):
        for j in range(K):
            # affine stretches leave right sides and land on the left side of (i, j)
            if i > 0 and j > 0 and nodeL[i, j] <= lim:
                best = fL[i, j]
                for i0 in range(i):
                    if not np.any(fR[i0, :j] <= lim):
                        continue
                    for j0 in range(j):
                        prev = fR[i0, j0]
                        if prev > lim or prev >= best:
                            continue
                        c = max(prev, seg_cost(i0, j0, i, j), nodeL[i, j])
                        if c < best:
                            best = c
                fL[i, j] = best
            # diagonal crossing of the anchor pair: left side to right side
            if fL[i, j] <= lim and nodeR[i, j] <= lim:
                fR[i, j] = min(fR[i, j], max(fL[i, j], nodeR[i, j]))
            # axis-parallel sweeps to the next anchor, staying on one side;
            # arriving at an anchor pair charges that pair's sided cost, so
            # longer sweeps compose exactly from adjacent ones
            for f, xv, yv, node in ((fL, XL, YL, nodeL), (fR, XR, YR, nodeR)):
                cur = f[i, j]
                if cur > lim:
                    continue
                if j + 1 < K:
                    c = max(cur, sweep_cost(xv[i], y, anchors[j], anchors[j + 1]),
                            node[i, j + 1])
                    if c <= lim and c < f[i, j + 1]:
                        f[i, j + 1] = c
                if i + 1 < K:
                    c = max(cur, sweep_cost(yv[j], x, anchors[i], anchors[i + 1]),
                            node[i + 1, j])
                    if c <= lim and c < f[i + 1, j]:
                        f[i + 1, j] = c
    return float(fR[K - 1, K - 1])


def j1_distance(x: CadlagPath, y: CadlagPath, refinement: int = 8) -> float:
    """Approximate J1 distance: exact on step-function pairs, else an upper
    bound never exceeding the uniform distance."""
    if x.dimension != y.dimension:
        raise ValueError(f"dimension mismatch: {x.dimension} vs {y.dimension}")
    return _j1_dp(x, y, refinement, cutoff=None)


def j1_within(x: CadlagPath, y: CadlagPath, eps: float, refinement: int = 8) -> bool:
    """Whether the (approximate) J1 distance is at most ``eps``.

    Equivalent to ``j1_distance(x, y, refinement) <= eps`` but prunes the
    search at the threshold, which is much faster on long paths.
    """
    if x.dimension != y.dimension:
        raise ValueError(f"dimension mismatch: {x.dimension} vs {y.dimension}")
    return _j1_dp(x, y, refinement, cutoff=eps) <= eps

"""Simulation of heavy-tailed Levy paths, integrands and stochastic integrals.

The driving process splits into an exactly simulable light part (Gaussian
random walk plus drift on a uniform grid; compensated small jumps are folded
into it, see the module notes in the README) and a compound Poisson big-jump
part with Pareto radii on [1, inf) and spectral directions, so the induced
d-space limit measure has intensity equal to the jump rate and exact power-law
cone masses.

Integrands are predictable caglad paths: constants, deterministic functions,
or an exponential Ornstein-Uhlenbeck volatility driven by its own noise
stream.  Evaluating an integrand at a jump time always uses its left limit.

All randomness is drawn from counter-based streams keyed by
(seed, replicate_index, stream tag); identical keys reproduce bit-identical
paths and distinct replicate indices give independent replicates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ._rng import GAUSS_STREAM, INTEGRAND_STREAM, JUMP_STREAM, substream
from .cadlag import CadlagPath, largest_jump_time
from .regvar import RegVarMeasure, ScalingSequence


@dataclass(frozen=True)
class LevyModel:
    """Generating data for the driving process.

    ``big_jump_intensity`` is the Poisson rate of jumps with radius >= 1,
    ``radial_alpha`` the Pareto tail index of the radii (P(|Z| > r) = r**-alpha
    for r >= 1), ``spectral`` the distribution of jump directions,
    ``diffusion`` a d x d matrix square root of the Gaussian covariance and
    ``drift`` the drift vector.
    """

    dimension: int
    big_jump_intensity: float
    radial_alpha: float
    spectral: tuple[tuple[np.ndarray, float], ...]
    diffusion: np.ndarray = None
    drift: np.ndarray = None

    def __init__(self, dimension: int, big_jump_intensity: float, radial_alpha: float,
                 spectral: Sequence[tuple[Sequence[float], float]],
                 diffusion=None, drift=None):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        if big_jump_intensity <= 0:
            raise ValueError("big_jump_intensity must be positive")
        if radial_alpha <= 0:
            raise ValueError("radial_alpha must be positive")
        measure = RegVarMeasure(radial_alpha, big_jump_intensity, spectral)
        if measure.dimension != dimension:
            raise ValueError("spectral directions must have the model dimension")
        B = np.zeros((dimension, dimension)) if diffusion is None \
            else np.asarray(diffusion, dtype=float)
        g = np.zeros(dimension) if drift is None else np.asarray(drift, dtype=float)
        if B.shape != (dimension, dimension):
            raise ValueError("diffusion must be a d x d matrix")
        if g.shape != (dimension,):
            raise ValueError("drift must be a d-vector")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(g))):
            raise ValueError("diffusion and drift must be finite")
        B.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "dimension", int(dimension))
        object.__setattr__(self, "big_jump_intensity", float(big_jump_intensity))
        object.__setattr__(self, "radial_alpha", float(radial_alpha))
        object.__setattr__(self, "spectral", measure.spectral)
        object.__setattr__(self, "diffusion", B)
        object.__setattr__(self, "drift", g)

    def induced_measure(self) -> RegVarMeasure:
        """Limit measure of the jump law: intensity = jump rate, same spectrum."""
        return RegVarMeasure(self.radial_alpha, self.big_jump_intensity,
                             [(s, w) for s, w in self.spectral])

    def scaling_sequence(self) -> ScalingSequence:
        return ScalingSequence(self.radial_alpha, self.big_jump_intensity)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "big_jump_intensity": self.big_jump_intensity,
            "radial_alpha": self.radial_alpha,
            "spectral": [{"dir": list(map(float, s)), "w": w} for s, w in self.spectral],
            "diffusion": [[float(v) for v in row] for row in self.diffusion],
            "drift": [float(v) for v in self.drift],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LevyModel":
        return cls(obj["dimension"], obj["big_jump_intensity"], obj["radial_alpha"],
                   [(a["dir"], a["w"]) for a in obj["spectral"]],
                   obj.get("diffusion"), obj.get("drift"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "LevyModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class JumpRecord:
    """One big jump: time in (0, 1], size vector with norm >= 1."""
    time: float
    size: np.ndarray

    def __post_init__(self):
        size = np.atleast_1d(np.asarray(self.size, dtype=float))
        size.flags.writeable = False
        object.__setattr__(self, "size", size)
        if not 0 < self.time <= 1:
            raise ValueError("jump time must lie in (0, 1]")
        if np.linalg.norm(size) < 1 - 1e-12:
            raise ValueError("big jumps have norm >= 1")


@dataclass(frozen=True)
class SimConfig:
    grid_size: int = 4096
    seed: int = 0
    replicate_index: int = 0

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be >= 0")


# ---------------------------------------------------------------------------
# Integrand specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantIntegrand:
    value: np.ndarray

    def __init__(self, value):
        v = np.atleast_1d(np.asarray(value, dtype=float))
        if np.any(v == 0) or not np.all(np.isfinite(v)):
            raise ValueError("constant integrand components must be finite and nonzero")
        v.flags.writeable = False
        object.__setattr__(self, "value", v)

    def to_dict(self) -> dict:
        return {"variant": "constant", "value": [float(v) for v in self.value]}


@dataclass(frozen=True)
class DeterministicIntegrand:
    """Deterministic integrand t -> d-vector, strictly positive sup norm.

    ``fn`` takes an array of times (m,) and returns values (m,) or (m, d).
    The optional ``descriptor`` makes the spec serializable; use
    :meth:`exponential` for the built-in serializable family scale*exp(rate*t).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    descriptor: Optional[dict] = None

    @classmethod
    def exponential(cls, scale: float = 1.0, rate: float = 0.0) -> "DeterministicIntegrand":
        if scale == 0:
            raise ValueError("scale must be nonzero")
        return cls(lambda t: scale * np.exp(rate * np.asarray(t)),
                   {"variant": "deterministic", "form": "exp",
                    "scale": float(scale), "rate": float(rate)})

    def to_dict(self) -> dict:
        if self.descriptor is None:
            raise ValueError("a raw deterministic integrand is not serializable; "
                             "use DeterministicIntegrand.exponential")
        return dict(self.descriptor)


@dataclass(frozen=True)
class ExpOUIntegrand:
    """Y_t = initial * exp(U_t) with U a zero-start Ornstein-Uhlenbeck process.

    Mean reversion ``rate`` toward 0 and ``vol`` the vol-of-vol; U has bounded
    variance so sup |Y| has lognormal-type tails and every power moment is
    finite.  ``vol = 0`` degenerates to the constant path at ``initial``.
    """

    rate: float
    vol: float
    initial: float = 1.0

    def __post_init__(self):
        if self.rate < 0 or self.vol < 0:
            raise ValueError("rate and vol must be nonnegative")
        if self.initial <= 0:
            raise ValueError("initial value must be positive")

    def to_dict(self) -> dict:
        return {"variant": "exp_ou", "rate": self.rate, "vol": self.vol,
                "initial": self.initial}


IntegrandSpec = ConstantIntegrand | DeterministicIntegrand | ExpOUIntegrand


def integrand_from_dict(obj: dict) -> IntegrandSpec:
    variant = obj.get("variant")
    if variant == "constant":
        return ConstantIntegrand(obj["value"])
    if variant == "deterministic":
        if obj.get("form") != "exp":
            raise ValueError(f"unknown deterministic integrand form: {obj.get('form')}")
        return DeterministicIntegrand.exponential(obj["scale"], obj["rate"])
    if variant == "exp_ou":
        return ExpOUIntegrand(obj["rate"], obj["vol"], obj["initial"])
    raise ValueError(f"unknown integrand variant: {variant}")


def integrand_to_json(spec: IntegrandSpec) -> str:
    return json.dumps(spec.to_dict())


def integrand_from_json(text: str) -> IntegrandSpec:
    return integrand_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Path simulation
# ---------------------------------------------------------------------------

def simulate_big_jumps(model: LevyModel, cfg: SimConfig) -> list[JumpRecord]:
    """Compound Poisson big jumps: Poisson count, uniform times, Pareto radii,
    spectral directions; bit-reproducible given (seed, replicate_index)."""
    rng = substream(cfg.seed, cfg.replicate_index, JUMP_STREAM)
    n = int(rng.poisson(model.big_jump_intensity))
    if n == 0:
        return []
    times = np.sort(1.0 - rng.random(n))
    radii = (1.0 - rng.random(n)) ** (-1.0 / model.radial_alpha)
    dirs = np.stack([s for s, _ in model.spectral])
    weights = np.array([w for _, w in model.spectral])
    idx = rng.choice(len(weights), size=n, p=weights)
    sizes = radii[:, None] * dirs[idx]
    return [JumpRecord(float(t), z) for t, z in zip(times, sizes)]


def simulate_small_part(model: LevyModel, cfg: SimConfig) -> CadlagPath:
    """Gaussian random walk with drift on the uniform grid; starts at 0."""
    rng = substream(cfg.seed, cfg.replicate_index, GAUSS_STREAM)
    gs = cfg.grid_size
    grid = np.linspace(0.0, 1.0, gs + 1)
    z = rng.standard_normal((gs, model.dimension))
    inc = model.drift / gs + z @ model.diffusion.T / math.sqrt(gs)
    values = np.vstack([np.zeros(model.dimension), np.cumsum(inc, axis=0)])
    return CadlagPath(grid, values)


def assemble_levy_path(small: CadlagPath, jumps: Sequence[JumpRecord]) -> CadlagPath:
    """Sum of the light part and the big-jump step process; the result's jump
    list is exactly the input jump list."""
    if not jumps:
        return small
    jt = np.array([j.time for j in jumps])
    js = np.stack([j.size for j in jumps])
    if np.any(np.diff(jt) <= 0):
        raise ValueError("jump times must be distinct and sorted")
    grid = np.union1d(small.grid, jt)
    base = small._sides_at(grid)[1]
    cum = np.vstack([np.zeros(small.dimension), np.cumsum(js, axis=0)])
    values = base + cum[np.searchsorted(jt, grid, side="right")]
    return CadlagPath(grid, values, jt, js)


def simulate_levy_path(model: LevyModel, cfg: SimConfig) -> tuple[CadlagPath, list[JumpRecord]]:
    jumps = simulate_big_jumps(model, cfg)
    return assemble_levy_path(simulate_small_part(model, cfg), jumps), jumps


def _ou_exponent(rate: float, vol: float, grid: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    """Exact OU transitions on an arbitrary grid, vectorized via the
    exp(rate * t) integrating factor (exponents stay bounded on [0, 1])."""
    h = np.diff(grid)
    z = rng.standard_normal(len(h))
    if rate == 0.0:
        sd = vol * np.sqrt(h)
        return np.concatenate([[0.0], np.cumsum(sd * z)])
    sd = vol * np.sqrt((1.0 - np.exp(-2.0 * rate * h)) / (2.0 * rate))
    w = np.cumsum(np.exp(rate * grid[1:]) * sd * z)
    return np.concatenate([[0.0], np.exp(-rate * grid[1:]) * w])


def simulate_integrand(spec: IntegrandSpec, cfg: SimConfig,
                       times: Optional[Sequence[float]] = None) -> CadlagPath:
    """Sample an integrand path on the uniform grid (plus optional extra
    sample times, e.g. the driver's jump times, where exact predictable values
    are needed).  The driving noise stream is independent of the Levy noise."""
    grid = np.linspace(0.0, 1.0, cfg.grid_size + 1)
    if times is not None and len(times):
        grid = np.union1d(grid, np.asarray(times, dtype=float))
        if grid[0] < 0 or grid[-1] > 1:
            raise ValueError("extra sample times must lie in [0, 1]")
    if isinstance(spec, ConstantIntegrand):
        values = np.tile(spec.value, (len(grid), 1))
    elif isinstance(spec, DeterministicIntegrand):
        values = np.asarray(spec.fn(grid), dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != len(grid):
            raise ValueError("deterministic integrand must return one value per time")
    elif isinstance(spec, ExpOUIntegrand):
        rng = substream(cfg.seed, cfg.replicate_index, INTEGRAND_STREAM)
        u = _ou_exponent(spec.rate, spec.vol, grid, rng)
        values = (spec.initial * np.exp(u))[:, None]
    else:
        raise ValueError(f"unknown integrand spec: {type(spec).__name__}")
    return CadlagPath(grid, values, caglad=True)


# ---------------------------------------------------------------------------
# Stochastic integration
# ---------------------------------------------------------------------------

def stochastic_integral(y: CadlagPath, x: CadlagPath) -> CadlagPath:
    """Componentwise integral of y against x on the merged grid.

    Jump contributions use the left limit of y at each jump time of x
    (predictability); the continuous part is a left-endpoint Riemann sum.
    The result's jumps are exactly (tau_k, y_{tau_k} * Z_k).
    """
    if y.dimension != x.dimension:
        raise ValueError(f"dimension mismatch: {y.dimension} vs {x.dimension}")
    grid = np.union1d(y.grid, x.grid)
    xr = x._sides_at(grid)[1]
    jt, js = x.jump_times, x.jump_sizes
    if len(jt):
        cum = np.vstack([np.zeros(x.dimension), np.cumsum(js, axis=0)])
        xc = xr - cum[np.searchsorted(jt, grid, side="right")]
        yj = y._sides_at(jt)[0]
        wj = yj * js
        jump_cum = np.vstack([np.zeros(x.dimension), np.cumsum(wj, axis=0)])
        jump_part = jump_cum[np.searchsorted(jt, grid, side="right")]
    else:
        xc = xr
        wj = np.zeros((0, x.dimension))
        jump_part = 0.0
    yr = y._sides_at(grid)[1]
    inc = yr[:-1] * np.diff(xc, axis=0)
    riemann = np.vstack([np.zeros(x.dimension), np.cumsum(inc, axis=0)])
    return CadlagPath(grid, riemann + jump_part, jt, wj)


def one_jump_integral(y: CadlagPath, x: CadlagPath) -> CadlagPath:
    """The single-step path y_tau * dx_tau * 1_[tau, 1]; zero if x has no jumps."""
    if y.dimension != x.dimension:
        raise ValueError(f"dimension mismatch: {y.dimension} vs {x.dimension}")
    if len(x.jump_times) == 0:
        return CadlagPath.zero(x.dimension)
    tau = largest_jump_time(x)
    k = int(np.searchsorted(x.jump_times, tau))
    return CadlagPath.step(tau, y.left_limit_at(tau) * x.jump_sizes[k])


def threshold_jumps(jumps: Sequence[JumpRecord], n: int, beta: float,
                    seq: ScalingSequence) -> tuple[list[JumpRecord], list[JumpRecord], int]:
    """Partition jumps at the threshold a(n)**beta; returns (big, small, count)."""
    if not 0.5 < beta < 1.0:
        raise ValueError(f"beta must lie in (1/2, 1), got {beta}")
    thr = seq.value(n) ** beta
    big = [j for j in jumps if np.linalg.norm(j.size) > thr]
    small = [j for j in jumps if np.linalg.norm(j.size) <= thr]
    return big, small, len(big)


# ---------------------------------------------------------------------------
# Vectorized batch sampling of integral functionals (one-dimensional models)
# ---------------------------------------------------------------------------

_BATCH = 8192


def batch_integral_functionals(model: LevyModel, integrand: IntegrandSpec,
                               t: float, n: int, seed: int,
                               grid_size: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint value and running sup over [0, t] of the integral, vectorized.

    Returns arrays of shape (n,): ((Y.X)_t, sup_{s<=t} (Y.X)_s) for a
    one-dimensional model.  Replicates are simulated in fixed-size batches
    with counter-based per-batch streams, so results are reproducible for any
    ``n``.  An exp-OU integrand is evaluated at jump times via its last grid
    sample before the jump (predictable; the grid bias vanishes with
    grid_size).  ``t`` must be a grid point.
    """
    if model.dimension != 1:
        raise ValueError("batch functionals support one-dimensional models only")
    it = round(t * grid_size)
    if not 0 < t <= 1 or abs(it / grid_size - t) > 1e-12:
        raise ValueError("t must be a grid time k/grid_size in (0, 1]")
    lam, alpha = model.big_jump_intensity, model.radial_alpha
    dirs = np.array([s[0] for s, _ in model.spectral])
    weights = np.array([w for _, w in model.spectral])
    sigma = float(model.diffusion[0, 0])
    drift = float(model.drift[0])
    has_cont = sigma != 0.0 or drift != 0.0
    grid = np.linspace(0.0, 1.0, grid_size + 1)

    endpoints = np.empty(n)
    sups = np.empty(n)
    done = 0
    for batch_index in range(math.ceil(n / _BATCH)):
        b = min(_BATCH, n - done)
        rng = substream(seed, batch_index, JUMP_STREAM)
        counts = rng.poisson(lam, b)
        kmax = max(int(counts.max()), 1)
        mask = np.arange(kmax)[None, :] < counts[:, None]
        jt = 1.0 - rng.random((b, kmax))
        radii = (1.0 - rng.random((b, kmax))) ** (-1.0 / alpha)
        didx = rng.choice(len(weights), size=(b, kmax), p=weights)
        jz = np.where(mask, radii * dirs[didx], 0.0)
        jt = np.where(mask, jt, 2.0)  # parked beyond the horizon

        # integrand on the grid and at the jump times
        if isinstance(integrand, ConstantIntegrand):
            y_grid = np.full((b, grid_size + 1), integrand.value[0])
            y_jump = np.full((b, kmax), integrand.value[0])
        elif isinstance(integrand, DeterministicIntegrand):
            y_grid = np.broadcast_to(np.asarray(integrand.fn(grid), dtype=float).reshape(-1),
                                     (b, grid_size + 1))
            y_jump = np.asarray(integrand.fn(np.where(mask, jt, 0.0)), dtype=float)
        elif isinstance(integrand, ExpOUIntegrand):
            grng = substream(seed, batch_index, INTEGRAND_STREAM)
            h = 1.0 / grid_size
            z = grng.standard_normal((b, grid_size))
            if integrand.rate == 0.0:
                u = np.hstack([np.zeros((b, 1)),
                               np.cumsum(integrand.vol * math.sqrt(h) * z, axis=1)])
            else:
                sd = integrand.vol * math.sqrt((1 - math.exp(-2 * integrand.rate * h))
                                               / (2 * integrand.rate))
                w = np.cumsum(np.exp(integrand.rate * grid[1:]) * sd * z, axis=1)
                u = np.hstack([np.zeros((b, 1)), np.exp(-integrand.rate * grid[1:]) * w])
            y_grid = integrand.initial * np.exp(u)
            pos = np.clip((jt * grid_size).astype(int), 0, grid_size)
            y_jump = np.take_along_axis(y_grid, pos, axis=1)
        else:
            raise ValueError(f"unknown integrand spec: {type(integrand).__name__}")

        wz = np.where(mask, y_jump * jz, 0.0)

        # continuous part: left-endpoint sums of y against the Gaussian walk
        if has_cont:
            xrng = substream(seed, batch_index, GAUSS_STREAM)
            inc = drift / grid_size + sigma / math.sqrt(grid_size) \
                * xrng.standard_normal((b, grid_size))
            wc = np.hstack([np.zeros((b, 1)), np.cumsum(y_grid[:, :-1] * inc, axis=1)])
            xc = np.hstack([np.zeros((b, 1)), np.cumsum(inc, axis=1)])
        else:
            wc = np.zeros((b, grid_size + 1))
            xc = wc

        # cumulative jump part on the grid (jump at tau contributes from the
        # first grid point >= tau on)
        gpos = np.minimum(np.ceil(jt * grid_size).astype(int), grid_size + 1)
        jump_grid = np.zeros((b, grid_size + 2))
        np.add.at(jump_grid, (np.arange(b)[:, None], gpos), wz)
        jump_grid = np.cumsum(jump_grid[:, : grid_size + 1], axis=1)

        endpoints[done:done + b] = wc[:, it] + jump_grid[:, it]

        sup_vals = np.max(wc[:, : it + 1] + jump_grid[:, : it + 1], axis=1)
        # post-jump values between grid points: interpolate the continuous part
        # and add the time-ordered cumulative jump sums
        order = np.argsort(jt, axis=1)
        wz_sorted = np.take_along_axis(wz, order, axis=1)
        cum_sorted = np.cumsum(wz_sorted, axis=1)
        jt_sorted = np.take_along_axis(jt, order, axis=1)
        seg = np.clip((jt_sorted * grid_size).astype(int), 0, grid_size - 1)
        rows = np.arange(b)[:, None]
        frac = jt_sorted * grid_size - seg
        xc_at = xc[rows, seg] + frac * (xc[rows, seg + 1] - xc[rows, seg])
        wc_at = wc[rows, seg] + y_grid[rows, seg] * (xc_at - xc[rows, seg])
        value_at = wc_at + cum_sorted
        ok = jt_sorted <= t
        post = np.where(ok, value_at, -np.inf)
        pre = np.where(ok, value_at - wz_sorted, -np.inf)
        if kmax:
            sup_vals = np.maximum(sup_vals, post.max(axis=1))
            sup_vals = np.maximum(sup_vals, pre.max(axis=1))
        sups[done:done + b] = np.maximum(sup_vals, 0.0)  # path starts at 0
        done += b
    return endpoints, sups

"""Monte Carlo verification machinery for heavy-tail limit statements.

Estimators here turn the asymptotic statements about the simulated processes
into finite-sample checks: crude tail probabilities with exact binomial
errors, Hill tail-index recovery, Breiman product-tail ratios, tail
equivalence of running sup and endpoint, conditional path-distance curves for
the one-big-jump approximation, and the two auxiliary bounds (a decoupled
maximal-product tail bound and the vanishing rate of seeing two or more
above-threshold jumps).

Conditioning events with zero Monte Carlo hits yield ``None`` entries rather
than zeros, so downstream trend fits skip them instead of faking convergence.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ._rng import AUX_STREAM, substream
from .cadlag import (CadlagPath, j1_within, one_step_approx, sup_norm,
                     uniform_distance)
from .levy_sim import (IntegrandSpec, LevyModel, SimConfig,
                       assemble_levy_path, batch_integral_functionals,
                       one_jump_integral, simulate_big_jumps,
                       simulate_integrand, simulate_small_part,
                       stochastic_integral)
from .regvar import EndpointExceedance, RegVarMeasure, ScalingSequence

BatchSampler = Callable[[np.random.Generator, int], np.ndarray]

_CHUNK = 1 << 16


@dataclass(frozen=True)
class TailEstimate:
    """Exceedance probability estimate: p_hat = hits/n with binomial stderr."""

    u: float
    n: int
    hits: int

    def __post_init__(self):
        if not 0 <= self.hits <= self.n:
            raise ValueError("hits must lie in [0, n]")

    @property
    def p_hat(self) -> float:
        return self.hits / self.n

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.n)


@dataclass(frozen=True)
class HillEstimate:
    n: int
    k: int
    alpha_hat: float

    @property
    def stderr(self) -> float:
        return self.alpha_hat / math.sqrt(self.k)


@dataclass(frozen=True)
class RatioEstimate:
    """Ratio of two correlated exceedance counts with delta-method stderr.

    ``ratio`` is None when the denominator saw no hits (undefined, not zero).
    """

    u: float
    ratio: Optional[float]
    stderr: Optional[float]
    numerator_hits: int
    denominator_hits: int
    n: int


@dataclass(frozen=True)
class ConditionalDistanceCurve:
    """P(distance > epsilon | conditioning event) along increasing levels."""

    epsilon: float
    levels: tuple[float, ...]
    conditioning: str  # "sup" (process exceeds) or "jump" (approximation exceeds)
    estimates: tuple[Optional[TailEstimate], ...]

    def defined_points(self) -> list[tuple[float, float]]:
        return [(u, e.p_hat) for u, e in zip(self.levels, self.estimates)
                if e is not None]

    def fitted_slope(self) -> Optional[float]:
        """Least-squares slope of the conditional probability against log u."""
        pts = self.defined_points()
        if len(pts) < 2:
            return None
        lx = np.log([p[0] for p in pts])
        py = np.array([p[1] for p in pts])
        return float(np.polyfit(lx, py, 1)[0])


def tail_prob(sampler: BatchSampler, u: float, n: int, seed: int) -> TailEstimate:
    """Crude Monte Carlo exceedance probability P(sample > u).

    ``sampler(rng, size)`` must return a batch of scalar replicates; batches
    use counter-based sub-streams, so the estimate is deterministic in
    ``seed`` for any n.
    """
    if u <= 0:
        raise ValueError("level must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    hits = 0
    done = 0
    chunk_index = 0
    while done < n:
        b = min(_CHUNK, n - done)
        rng = substream(seed, chunk_index, AUX_STREAM)
        hits += int(np.count_nonzero(sampler(rng, b) > u))
        done += b
        chunk_index += 1
    return TailEstimate(u, n, hits)


def hill(sample: Sequence[float], k: int) -> HillEstimate:
    """Hill tail-index estimate from the k largest order statistics."""
    x = np.asarray(sample, dtype=float)
    n = len(x)
    if not 1 <= k < n:
        raise ValueError(f"k must lie in [1, n), got k={k}, n={n}")
    if np.any(x <= 0):
        raise ValueError("Hill estimation needs strictly positive data")
    top = np.sort(np.partition(x, n - k - 1)[n - k - 1:])
    logs = np.log(top[1:]) - math.log(top[0])
    return HillEstimate(n, k, float(k / logs.sum()))


# ---------------------------------------------------------------------------
# Ratio estimators on shared replicates
# ---------------------------------------------------------------------------

def _delta_ratio(u: float, num: np.ndarray, den: np.ndarray, n: int) -> RatioEstimate:
    """Ratio of exceedance indicator means with delta-method standard error."""
    a, b = int(num.sum()), int(den.sum())
    if b == 0:
        return RatioEstimate(u, None, None, a, b, n)
    pa, pb = a / n, b / n
    pab = float(np.count_nonzero(num & den)) / n
    var = (pa * (1 - pa) / pb ** 2
           + pa ** 2 * pb * (1 - pb) / pb ** 4
           - 2 * pa * (pab - pa * pb) / pb ** 3) / n
    return RatioEstimate(u, pa / pb, math.sqrt(max(var, 0.0)), a, b, n)


def breiman_ratio(x_sampler: BatchSampler, y_sampler: BatchSampler,
                  levels: Sequence[float], n: int, seed: int) -> list[RatioEstimate]:
    """P(YX > u) / P(X > u) on shared X replicates, per level."""
    levels = list(levels)
    num = np.zeros((len(levels), n), dtype=bool)
    den = np.zeros((len(levels), n), dtype=bool)
    done = 0
    chunk_index = 0
    while done < n:
        b = min(_CHUNK, n - done)
        xr = substream(seed, chunk_index, AUX_STREAM)
        yr = substream(seed, chunk_index, AUX_STREAM + 1)
        x = x_sampler(xr, b)
        yx = y_sampler(yr, b) * x
        for i, u in enumerate(levels):
            num[i, done:done + b] = yx > u
            den[i, done:done + b] = x > u
        done += b
        chunk_index += 1
    return [_delta_ratio(u, num[i], den[i], n) for i, u in enumerate(levels)]


def tail_equivalence(model: LevyModel, integrand: IntegrandSpec, t: float,
                     levels: Sequence[float], n: int, seed: int,
                     grid_size: int = 512) -> list[RatioEstimate]:
    """P(sup_{s<=t} (Y.X)_s > u) / P((Y.X)_t > u) on shared replicates."""
    endpoint, runsup = batch_integral_functionals(model, integrand, t, n, seed,
                                                  grid_size=grid_size)
    out = []
    for u in levels:
        if u <= 0:
            raise ValueError("levels must be positive")
        out.append(_delta_ratio(float(u), runsup > u, endpoint > u, n))
    return out


def analytic_prediction(measure: RegVarMeasure, integrand: IntegrandSpec,
                        t: float, u: float, n_mc: int, seed: int,
                        grid_size: int = 4096) -> float:
    """Limit-measure prediction sigma(+) * c * u**-alpha * integral of E(Y_s**alpha).

    The inner expectation is Monte Carlo over integrand paths; the time
    integral is composite trapezoid quadrature on the simulation grid.  For a
    one-dimensional model with positive spectral weight.
    """
    if measure.dimension != 1:
        raise ValueError("analytic prediction applies to one-dimensional models")
    from .regvar import weighted_one_step_mass

    def sampler(rng: np.random.Generator) -> CadlagPath:
        rep = int(rng.integers(0, 2 ** 62))
        return simulate_integrand(integrand, SimConfig(grid_size, seed, rep))

    region = EndpointExceedance(t, u, lambda s: s[0] > 0)
    return weighted_one_step_mass(measure, sampler, region, n_mc, seed).value


# ---------------------------------------------------------------------------
# One-big-jump conditional distance curves
# ---------------------------------------------------------------------------

def one_big_jump_curve(model: LevyModel, integrand: Optional[IntegrandSpec],
                       epsilon: float, levels: Sequence[float], n: int, seed: int,
                       grid_size: int = 256, refinement: int = 4,
                       threads: int = 1) -> tuple[ConditionalDistanceCurve,
                                                  ConditionalDistanceCurve]:
    """Conditional probabilities that the rescaled process strays from its
    one-jump approximation, under both conditionings.

    For each replicate, simulate the driver X (and, unless ``integrand`` is
    None, an independent integrand Y), form W = (Y.X) and its one-jump
    approximation, and for each level u with the conditioning event satisfied
    record whether the J1 distance of the u-rescaled pair exceeds epsilon.
    Returned curves condition on the process sup norm exceeding u ("sup") and
    on the approximation's jump norm exceeding u ("jump").

    The J1 indicator exploits monotonicity of the rescaled distance in u and
    cheap bounds (endpoint and sup-norm mismatches from below, the uniform
    distance from above), so the dynamic program only runs on the ambiguous
    band.  One replicate pool is shared across all levels.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    levels = [float(u) for u in levels]
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] <= 0:
        raise ValueError("levels must be positive and strictly increasing")

    def run_block(block: range) -> np.ndarray:
        # rows: [sup hits, sup exceed, jump hits, jump exceed] per level
        counts = np.zeros((4, len(levels)), dtype=np.int64)
        for rep in block:
            cfg = SimConfig(grid_size, seed, rep)
            jumps = simulate_big_jumps(model, cfg)
            x = assemble_levy_path(simulate_small_part(model, cfg), jumps)
            if integrand is None:
                w, wa = x, one_step_approx(x)
            else:
                y = simulate_integrand(integrand, cfg, times=[j.time for j in jumps])
                w = stochastic_integral(y, x)
                wa = one_jump_integral(y, x)
            s = sup_norm(w)
            ja = float(np.linalg.norm(wa.jump_sizes[0])) if len(wa.jump_times) else 0.0
            udist = uniform_distance(w, wa)
            end_gap = float(np.linalg.norm(w.values[-1] - wa.values[-1]))
            sup_gap = abs(s - sup_norm(wa))
            lower = max(end_gap, sup_gap)

            state: Optional[bool] = None  # indicator at the previous (larger) level
            for i in range(len(levels) - 1, -1, -1):
                u = levels[i]
                cond_sup = s > u
                cond_jump = ja > u
                if not (cond_sup or cond_jump):
                    continue
                if state is None or state is False:
                    # distance of the u-rescaled pair is nonincreasing in u:
                    # once within epsilon it stays within at larger levels
                    if udist <= epsilon * u:
                        ind = False
                    elif lower > epsilon * u:
                        ind = True
                    else:
                        ind = not j1_within(w.scaled(1.0 / u), wa.scaled(1.0 / u),
                                            epsilon, refinement)
                    state = ind
                else:
                    ind = True  # already exceeded at a larger level
                if cond_sup:
                    counts[0, i] += 1
                    counts[1, i] += int(ind)
                if cond_jump:
                    counts[2, i] += 1
                    counts[3, i] += int(ind)
        return counts

    blocks = [range(s0, min(s0 + 1024, n)) for s0 in range(0, n, 1024)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_block, blocks))
    else:
        parts = [run_block(b) for b in blocks]
    counts = np.sum(parts, axis=0)

    def curve(row_hits: int, row_exc: int, label: str) -> ConditionalDistanceCurve:
        ests = tuple(TailEstimate(levels[i], int(counts[row_hits, i]),
                                  int(counts[row_exc, i]))
                     if counts[row_hits, i] > 0 else None
                     for i in range(len(levels)))
        return ConditionalDistanceCurve(epsilon, tuple(levels), label, ests)

    return curve(0, 1, "sup"), curve(2, 3, "jump")


# ---------------------------------------------------------------------------
# Auxiliary bound checks
# ---------------------------------------------------------------------------

def maximal_product_bound(count_sampler: BatchSampler,
                          y_builder: Callable[[np.ndarray, np.ndarray], np.ndarray],
                          z_sampler: Callable[[np.random.Generator, tuple], np.ndarray],
                          n_trials: int, x_level: float,
                          seed: int) -> tuple[TailEstimate, TailEstimate]:
    """Both sides of the decoupled maximal-product tail bound.

    Estimates lhs = P(sum_{k<=N} Y_k Z_k > x) and rhs = P(N max_k Y_k Z~_k > x)
    where (Z~_k) is an independent copy of (Z_k).  ``y_builder(z, mask)`` must
    return the factor matrix computed from strict prefixes of its first
    argument only (predictable construction), e.g. ``lambda z, mask: ones`` or
    a function of the cumulative sums of earlier entries.
    """
    if x_level <= 0:
        raise ValueError("x_level must be positive")
    lhs_hits = rhs_hits = 0
    done = 0
    chunk_index = 0
    while done < n_trials:
        b = min(_CHUNK, n_trials - done)
        rng = substream(seed, chunk_index, AUX_STREAM)
        counts = np.asarray(count_sampler(rng, b))
        kmax = max(int(counts.max()), 1)
        mask = np.arange(kmax)[None, :] < counts[:, None]
        z = np.where(mask, z_sampler(rng, (b, kmax)), 0.0)
        zt = np.where(mask, z_sampler(rng, (b, kmax)), 0.0)
        yk = np.where(mask, y_builder(z, mask), 0.0)
        lhs_hits += int(np.count_nonzero((yk * z).sum(axis=1) > x_level))
        rhs_hits += int(np.count_nonzero(counts * (yk * zt).max(axis=1) > x_level))
        done += b
        chunk_index += 1
    return (TailEstimate(x_level, n_trials, lhs_hits),
            TailEstimate(x_level, n_trials, rhs_hits))


@dataclass(frozen=True)
class TrendPoint:
    n: int
    closed_form: float
    mc_value: float
    stderr: float  # sampling error of the MC value under the closed-form rate


def double_jump_trend(measure: RegVarMeasure, lam: float, beta: float,
                      n_values: Sequence[int], reps: int,
                      seed: int) -> list[TrendPoint]:
    """n * P(two or more jumps above the threshold a(n)**beta), closed form
    and Monte Carlo, along a sequence of n.

    The count of above-threshold jumps is Poisson-thinned, giving the closed
    form n * (1 - (1 + lam*p_n) * exp(-lam*p_n)) with p_n the exact Pareto
    exceedance of the threshold; the Monte Carlo side re-simulates the jump
    mechanism.  The reported stderr is the binomial error of the MC estimate
    under the closed-form rate, which stays meaningful when no hits occur.
    """
    if not 0.5 < beta < 1.0:
        raise ValueError(f"beta must lie in (1/2, 1), got {beta}")
    seq = ScalingSequence(measure.alpha, measure.intensity_c)
    out = []
    for idx, n in enumerate(n_values):
        thr = seq.value(n) ** beta
        p_n = min(1.0, thr ** (-measure.alpha))
        closed = n * (1.0 - (1.0 + lam * p_n) * math.exp(-lam * p_n))
        rng = substream(seed, idx, AUX_STREAM)
        hits = 0
        done = 0
        while done < reps:
            b = min(_CHUNK, reps - done)
            counts = rng.poisson(lam, b)
            kmax = max(int(counts.max()), 1)
            mask = np.arange(kmax)[None, :] < counts[:, None]
            radii = (1.0 - rng.random((b, kmax))) ** (-1.0 / measure.alpha)
            m = np.count_nonzero(mask & (radii > thr), axis=1)
            hits += int(np.count_nonzero(m >= 2))
            done += b
        p_true = closed / n
        stderr = n * math.sqrt(p_true * (1.0 - p_true) / reps)
        out.append(TrendPoint(int(n), closed, n * hits / reps, stderr))
    return out

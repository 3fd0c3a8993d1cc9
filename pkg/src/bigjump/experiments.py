"""Config-driven experiment campaigns with reproducible manifests.

A single JSON document describes one experiment (kind, model, integrand,
levels, replicate budget, seed, output format); :func:`validate` reports every
violated invariant at once and :func:`run` dispatches to the matching
diagnostics routine, writes the output files and returns a manifest.  Rerunning
with an identical config and seed reproduces the estimate files byte for byte;
every output file carries the config hash.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .diagnostics import (RatioEstimate, TailEstimate, analytic_prediction,
                          breiman_ratio, double_jump_trend,
                          maximal_product_bound, one_big_jump_curve,
                          tail_equivalence)
from .levy_sim import (IntegrandSpec, LevyModel, SimConfig,
                       assemble_levy_path, batch_integral_functionals,
                       integrand_from_dict, one_jump_integral,
                       simulate_big_jumps, simulate_integrand,
                       simulate_small_part, stochastic_integral)
from .regvar import RegVarMeasure

KINDS = ("tails", "breiman", "one-big-jump", "tail-equivalence", "lemma-checks", "paths")


class ValidationError(ValueError):
    """Carries the complete list of violated config invariants."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    seed: int
    version: str
    duration_seconds: float
    outputs: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "seed": self.seed,
                "version": self.version, "duration_seconds": self.duration_seconds,
                "outputs": list(self.outputs)}


# ---------------------------------------------------------------------------
# Validation: report all violations at once, never partially run
# ---------------------------------------------------------------------------

def _check_levels(cfg: dict, errors: list[str]) -> None:
    levels = cfg.get("levels")
    if (not isinstance(levels, list) or not levels
            or any(not isinstance(u, (int, float)) or u <= 0 for u in levels)
            or any(b <= a for a, b in zip(levels, levels[1:]))):
        errors.append("levels must be a nonempty strictly increasing list of positive numbers")


def _check_model(cfg: dict, errors: list[str]) -> Optional[LevyModel]:
    obj = cfg.get("model")
    if not isinstance(obj, dict):
        errors.append("model section is required")
        return None
    try:
        return LevyModel.from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"model: {exc}")
        return None


def _check_integrand(cfg: dict, errors: list[str], required: bool = True) -> Optional[IntegrandSpec]:
    obj = cfg.get("integrand")
    if obj is None:
        if required:
            errors.append("integrand section is required")
        return None
    try:
        return integrand_from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"integrand: {exc}")
        return None


def _check_count(cfg: dict, key: str, errors: list[str], minimum: int = 1) -> None:
    v = cfg.get(key)
    if not isinstance(v, int) or v < minimum:
        errors.append(f"{key} must be an integer >= {minimum}")


def _check_t(cfg: dict, errors: list[str]) -> None:
    t = cfg.get("t", 1.0)
    if not isinstance(t, (int, float)) or not 0 < t <= 1:
        errors.append("t must lie in (0, 1]")


def validate(config: dict) -> list[str]:
    """Full invariant check without running; returns every violation."""
    errors: list[str] = []
    kind = config.get("kind")
    if kind not in KINDS:
        errors.append(f"kind must be one of {', '.join(KINDS)}")
        return errors
    if not isinstance(config.get("seed"), int):
        errors.append("seed must be an integer")
    if config.get("format", "csv") not in ("csv", "json"):
        errors.append("format must be 'csv' or 'json'")
    gs = config.get("grid_size", 4096)
    if not isinstance(gs, int) or gs < 2:
        errors.append("grid_size must be an integer >= 2")

    if kind == "tails":
        model = _check_model(config, errors)
        if model is not None and model.dimension != 1:
            errors.append("tails experiments support one-dimensional models only")
        _check_integrand(config, errors)
        _check_levels(config, errors)
        _check_count(config, "n", errors)
        _check_t(config, errors)
    elif kind == "breiman":
        _check_levels(config, errors)
        _check_count(config, "n", errors)
        sec = config.get("breiman")
        if not isinstance(sec, dict):
            errors.append("breiman section is required")
        else:
            if not isinstance(sec.get("alpha"), (int, float)) or sec["alpha"] <= 0:
                errors.append("breiman.alpha must be positive")
            y = sec.get("y", {})
            if y.get("kind") == "const":
                if not isinstance(y.get("value"), (int, float)) or y["value"] <= 0:
                    errors.append("breiman.y.value must be positive")
            elif y.get("kind") == "lognormal":
                if not isinstance(y.get("sigma"), (int, float)) or y["sigma"] <= 0:
                    errors.append("breiman.y.sigma must be positive")
            else:
                errors.append("breiman.y.kind must be 'const' or 'lognormal'")
    elif kind == "one-big-jump":
        _check_model(config, errors)
        _check_integrand(config, errors, required=False)
        _check_levels(config, errors)
        _check_count(config, "n", errors)
        eps = config.get("epsilon")
        if not isinstance(eps, (int, float)) or eps <= 0:
            errors.append("epsilon must be positive")
    elif kind == "tail-equivalence":
        model = _check_model(config, errors)
        if model is not None and model.dimension != 1:
            errors.append("tail-equivalence experiments support one-dimensional models only")
        _check_integrand(config, errors)
        _check_levels(config, errors)
        _check_count(config, "n", errors)
        _check_t(config, errors)
    elif kind == "lemma-checks":
        sec = config.get("lemma_checks")
        if not isinstance(sec, dict):
            errors.append("lemma_checks section is required")
        else:
            beta = sec.get("beta", 0.75)
            if not isinstance(beta, (int, float)) or not 0.5 < beta < 1.0:
                errors.append("beta must lie in (1/2, 1)")
            if not isinstance(sec.get("alpha"), (int, float)) or sec["alpha"] <= 0:
                errors.append("lemma_checks.alpha must be positive")
            if not isinstance(sec.get("lam"), (int, float)) or sec["lam"] <= 0:
                errors.append("lemma_checks.lam must be positive")
            nv = sec.get("n_values")
            if (not isinstance(nv, list) or not nv
                    or any(not isinstance(v, int) or v < 1 for v in nv)):
                errors.append("lemma_checks.n_values must be a list of positive integers")
            x = sec.get("x_level")
            if not isinstance(x, (int, float)) or x <= 0:
                errors.append("lemma_checks.x_level must be positive")
            _check_count(sec, "reps", errors)
            _check_count(sec, "n_trials", errors)
    elif kind == "paths":
        _check_model(config, errors)
        _check_integrand(config, errors)
        _check_count(config, "n_paths", errors)
    return errors


# ---------------------------------------------------------------------------
# Output writing: repr floats for bit-stable reruns
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, digest: str, fmt: str, header: list[str],
                rows: list[list], extra_comment: str = "") -> None:
    if fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(f"# config_hash={digest}\n")
            if extra_comment:
                fh.write(f"# {extra_comment}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    else:
        doc = {"config_hash": digest, "columns": header,
               "rows": [[None if v is None else v for v in row] for row in rows]}
        if extra_comment:
            doc["note"] = extra_comment
        path.write_text(json.dumps(doc, indent=1), encoding="utf-8")


def _ratio_rows(estimates: list[RatioEstimate]) -> list[list]:
    return [[e.u, e.ratio, e.stderr, e.numerator_hits, e.denominator_hits, e.n]
            for e in estimates]


# ---------------------------------------------------------------------------
# Experiment dispatch
# ---------------------------------------------------------------------------

def _run_tails(config: dict, out: Path, digest: str, fmt: str) -> list[str]:
    model = LevyModel.from_dict(config["model"])
    integrand = integrand_from_dict(config["integrand"])
    t = float(config.get("t", 1.0))
    n = config["n"]
    seed = config["seed"]
    gs = config.get("grid_size", 512)
    endpoint, _ = batch_integral_functionals(model, integrand, t, n, seed, grid_size=gs)
    measure = model.induced_measure()
    inner = config.get("n_mc_inner", 2048)
    rows = []
    for u in config["levels"]:
        pred = analytic_prediction(measure, integrand, t, float(u), inner, seed, gs)
        est = TailEstimate(float(u), n, int(np.count_nonzero(endpoint > u)))
        ratio = est.p_hat / pred if pred > 0 else None
        rows.append([u, pred, est.p_hat, est.stderr, est.hits, n, ratio])
    path = out / "tails.csv" if fmt == "csv" else out / "tails.json"
    _write_rows(path, digest, fmt,
                ["u", "analytic", "p_hat", "stderr", "hits", "n", "ratio"], rows)
    return [path.name]


def _run_breiman(config: dict, out: Path, digest: str, fmt: str) -> list[str]:
    sec = config["breiman"]
    alpha = float(sec["alpha"])
    y = sec["y"]
    if y["kind"] == "const":
        y_sampler = lambda rng, size: np.full(size, float(y["value"]))
    else:
        y_sampler = lambda rng, size: np.exp(float(y["sigma"]) * rng.standard_normal(size))
    x_sampler = lambda rng, size: (1.0 - rng.random(size)) ** (-1.0 / alpha)
    ests = breiman_ratio(x_sampler, y_sampler, config["levels"], config["n"], config["seed"])
    path = out / ("breiman.csv" if fmt == "csv" else "breiman.json")
    _write_rows(path, digest, fmt,
                ["u", "ratio", "stderr", "numerator_hits", "denominator_hits", "n"],
                _ratio_rows(ests))
    return [path.name]


def _run_one_big_jump(config: dict, out: Path, digest: str, fmt: str,
                      threads: int) -> list[str]:
    model = LevyModel.from_dict(config["model"])
    integrand = (integrand_from_dict(config["integrand"])
                 if config.get("integrand") is not None else None)
    sup_curve, jump_curve = one_big_jump_curve(
        model, integrand, float(config["epsilon"]), config["levels"],
        config["n"], config["seed"], grid_size=config.get("grid_size", 256),
        refinement=config.get("refinement", 4), threads=threads)
    names = []
    for curve in (sup_curve, jump_curve):
        rows = [[u, None if e is None else e.p_hat, None if e is None else e.stderr,
                 0 if e is None else e.n]
                for u, e in zip(curve.levels, curve.estimates)]
        slope = curve.fitted_slope()
        note = (f"conditioning={curve.conditioning} epsilon={curve.epsilon} "
                f"slope={'' if slope is None else repr(slope)} "
                f"nonincreasing_trend={'' if slope is None else str(slope <= 0).lower()}")
        stem = f"one_big_jump_{curve.conditioning}"
        path = out / (f"{stem}.csv" if fmt == "csv" else f"{stem}.json")
        _write_rows(path, digest, fmt,
                    ["u", "estimate", "stderr", "n_conditioning"], rows, note)
        names.append(path.name)
    return names


def _run_tail_equivalence(config: dict, out: Path, digest: str, fmt: str) -> list[str]:
    model = LevyModel.from_dict(config["model"])
    integrand = integrand_from_dict(config["integrand"])
    ests = tail_equivalence(model, integrand, float(config.get("t", 1.0)),
                            config["levels"], config["n"], config["seed"],
                            grid_size=config.get("grid_size", 512))
    path = out / ("tail_equivalence.csv" if fmt == "csv" else "tail_equivalence.json")
    _write_rows(path, digest, fmt,
                ["u", "ratio", "stderr", "numerator_hits", "denominator_hits", "n"],
                _ratio_rows(ests))
    return [path.name]


def _run_lemma_checks(config: dict, out: Path, digest: str, fmt: str) -> list[str]:
    sec = config["lemma_checks"]
    alpha, lam = float(sec["alpha"]), float(sec["lam"])
    seed = config["seed"]
    names = []

    z_sampler = lambda rng, shape: (1.0 - rng.random(shape)) ** (-1.0 / alpha)
    rows = []
    for label, y_builder in (
            ("unit", lambda z, mask: np.ones_like(z)),
            ("prefix", lambda z, mask: 1.0 + np.minimum(
                1.0, np.hstack([np.zeros((z.shape[0], 1)), np.cumsum(z, axis=1)[:, :-1]]) / 10.0)),
    ):
        lhs, rhs = maximal_product_bound(
            lambda rng, size: rng.poisson(lam, size), y_builder, z_sampler,
            sec["n_trials"], float(sec["x_level"]), seed)
        margin = 3.0 * np.hypot(lhs.stderr, 2.0 * rhs.stderr)
        rows.append([label, lhs.u, lhs.p_hat, lhs.stderr, rhs.p_hat, rhs.stderr,
                     str(lhs.p_hat <= 2.0 * rhs.p_hat + margin).lower()])
    path = out / ("max_product_bound.csv" if fmt == "csv" else "max_product_bound.json")
    _write_rows(path, digest, fmt,
                ["y_construction", "x", "lhs", "lhs_stderr", "rhs", "rhs_stderr",
                 "within_bound"], rows)
    names.append(path.name)

    measure = RegVarMeasure(alpha, lam, [([1.0], 1.0)])
    trend = double_jump_trend(measure, lam, float(sec.get("beta", 0.75)),
                              sec["n_values"], sec["reps"], seed)
    rows = [[p.n, p.closed_form, p.mc_value, p.stderr] for p in trend]
    path = out / ("double_jump_trend.csv" if fmt == "csv" else "double_jump_trend.json")
    _write_rows(path, digest, fmt, ["n", "closed_form", "mc_value", "stderr"], rows)
    names.append(path.name)
    return names


def _run_paths(config: dict, out: Path, digest: str, fmt: str) -> list[str]:
    model = LevyModel.from_dict(config["model"])
    integrand = integrand_from_dict(config["integrand"])
    gs = config.get("grid_size", 512)
    seed = config["seed"]
    names = []
    for rep in range(config["n_paths"]):
        cfg = SimConfig(gs, seed, rep)
        jumps = simulate_big_jumps(model, cfg)
        x = assemble_levy_path(simulate_small_part(model, cfg), jumps)
        y = simulate_integrand(integrand, cfg, times=[j.time for j in jumps])
        w = stochastic_integral(y, x)
        wa = one_jump_integral(y, x)
        grid = w.grid
        cols = {"x": x, "y": y, "w": w, "w_approx": wa}
        header = ["t"] + [f"{name}{k}" for name in cols for k in range(model.dimension)]
        rows = []
        vals = {name: p._sides_at(grid)[1] for name, p in cols.items()}
        for i, t in enumerate(grid):
            row = [float(t)]
            for name in cols:
                row.extend(float(v) for v in vals[name][i])
            rows.append(row)
        path = out / f"path_{rep:03d}.csv"
        _write_rows(path, digest, "csv", header, rows)
        names.append(path.name)
    return names


def run(config: dict, out_dir: str | Path = ".", threads: int = 1) -> RunManifest:
    """Validate, dispatch and write outputs plus a manifest.json."""
    errors = validate(config)
    if errors:
        raise ValidationError(errors)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(config)
    fmt = config.get("format", "csv")
    start = time.perf_counter()
    kind = config["kind"]
    if kind == "tails":
        outputs = _run_tails(config, out, digest, fmt)
    elif kind == "breiman":
        outputs = _run_breiman(config, out, digest, fmt)
    elif kind == "one-big-jump":
        outputs = _run_one_big_jump(config, out, digest, fmt, threads)
    elif kind == "tail-equivalence":
        outputs = _run_tail_equivalence(config, out, digest, fmt)
    elif kind == "lemma-checks":
        outputs = _run_lemma_checks(config, out, digest, fmt)
    else:
        outputs = _run_paths(config, out, digest, fmt)
    manifest = RunManifest(digest, config["seed"], __version__,
                           time.perf_counter() - start, tuple(outputs))
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=1),
                                       encoding="utf-8")
    return manifest

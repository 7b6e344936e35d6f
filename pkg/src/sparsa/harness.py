"""Rate fitting and reproducible benchmark experiments.

Empirical counterparts of the solver's convergence guarantees: objective
errors of a convex run should admit a sublinear envelope a/(b + k)
(equivalently, reciprocals of the errors grow at least linearly), and a
strongly convex run should decay R-linearly, e_k <= c * theta^k with
theta < 1. Both are estimated from solve traces against a high-accuracy
reference optimum.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .continuation import ContinuationSchedule, solve_with_continuation
from .problems import GeneratorSpec
from .solver import SolverConfig, Trace, solve


def default_burn_in(n_samples: int) -> int:
    """First 20% of the iterations: the rate bounds are asymptotic."""
    return n_samples // 5


def _usable(errors, burn_in: int):
    errors = np.asarray(errors, dtype=float)
    if burn_in < 0 or burn_in >= errors.size:
        raise ValueError("burn_in must be inside the sample range")
    ks = np.arange(1, errors.size + 1)[burn_in:]
    es = errors[burn_in:]
    keep = es > 0
    ks, es = ks[keep], es[keep]
    if es.size < 5:
        raise ValueError(f"only {es.size} usable samples after burn-in; need >= 5")
    return ks, es


def fit_sublinear(errors, burn_in: int = 0):
    """Fit e_k ~ a / (b + k) by least squares on reciprocals.

    Regresses 1/e_k on k over the post-burn-in samples with e_k > 0,
    giving a_hat = 1/slope and b_hat = intercept/slope. ``ok`` requires a
    positive slope and every increment of 1/e_k to be >= -1e-9 (the
    reciprocal-growth signature of a sublinear-or-better decay).
    """
    ks, es = _usable(errors, burn_in)
    recip = 1.0 / es
    slope, intercept = np.polyfit(ks, recip, 1)
    increments = np.diff(recip)
    ok = bool(slope > 0 and (increments.size == 0 or increments.min() >= -1e-9))
    if slope <= 0:
        return float("nan"), float("nan"), ok
    return 1.0 / slope, intercept / slope, ok


def fit_linear(errors, burn_in: int = 0):
    """Fit e_k ~ c * theta^k by least squares on log errors.

    Returns (theta_hat, c_hat, r2). A constant error sequence yields
    theta_hat = 1 and, being fit exactly by a horizontal line, r2 = 1.
    """
    ks, es = _usable(errors, burn_in)
    logs = np.log(es)
    slope, intercept = np.polyfit(ks, logs, 1)
    predicted = slope * ks + intercept
    ss_res = float(np.sum((logs - predicted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    # variance at rounding level means the horizontal line is an exact fit
    degenerate = len(logs) * (1e-12 * max(1.0, abs(float(logs.mean())))) ** 2
    if ss_tot <= degenerate:
        r2 = 1.0 if ss_res <= degenerate else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(np.exp(slope)), float(np.exp(intercept)), r2


@dataclass
class RateFit:
    """Estimated rate parameters from one trace."""

    a_hat: float = float("nan")
    b_hat: float = float("nan")
    sublinear_ok: bool = False
    theta_hat: float = float("nan")
    c_hat: float = float("nan")
    residual_r2: float = float("nan")
    burn_in: int = 0
    mu_hat: float | None = None

    def to_dict(self) -> dict:
        return {
            "a_hat": self.a_hat,
            "b_hat": self.b_hat,
            "sublinear_ok": self.sublinear_ok,
            "theta_hat": self.theta_hat,
            "c_hat": self.c_hat,
            "residual_r2": self.residual_r2,
            "burn_in": self.burn_in,
            "mu_hat": self.mu_hat,
        }


def fit_rates(trace: Trace, phi_star: float, burn_in: int | None = None) -> RateFit:
    """Run both fits on a trace's objective errors against ``phi_star``."""
    errors = trace.objective_values(include_final=False) - phi_star
    if burn_in is None:
        burn_in = default_burn_in(errors.size)
    a_hat, b_hat, ok = fit_sublinear(errors, burn_in)
    theta_hat, c_hat, r2 = fit_linear(errors, burn_in)
    return RateFit(
        a_hat=a_hat,
        b_hat=b_hat,
        sublinear_ok=ok,
        theta_hat=theta_hat,
        c_hat=c_hat,
        residual_r2=r2,
        burn_in=burn_in,
    )


def error_vs_matvec_curve(trace: Trace, phi_star: float) -> np.ndarray:
    """(cumulative matvecs, objective error) pairs, one per iteration.

    ``phi_star`` must not exceed the best objective observed in the trace
    by more than 1e-9, otherwise the reference optimum is inconsistent.
    """
    objs = trace.objective_values(include_final=False)
    best = min(
        float(objs.min()),
        trace.summary.final_obj if trace.summary is not None else float("inf"),
    )
    if phi_star > best + 1e-9:
        raise ValueError(
            f"phi_star={phi_star!r} exceeds the best observed objective {best!r}"
        )
    return np.column_stack([trace.matvec_values(), objs - phi_star])


def write_curve_csv(path, curve: np.ndarray):
    with open(path, "w") as fh:
        fh.write("matvecs,error\n")
        for mv, err in curve:
            fh.write(f"{int(mv)},{err:.17g}\n")


# -- benchmark experiments -------------------------------------------------------


@dataclass
class Variant:
    """Named solver configuration, optionally run under continuation."""

    name: str
    config: SolverConfig = field(default_factory=SolverConfig)
    continuation: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "config": self.config.to_dict(),
            "continuation": self.continuation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Variant":
        return cls(
            name=d["name"],
            config=SolverConfig.from_dict(d.get("config", {})),
            continuation=bool(d.get("continuation", False)),
        )


def default_variants() -> list[Variant]:
    """The standard comparison: recent-max reference with plain spectral
    seeds versus the adaptive reference with cyclic seeds, each with and
    without continuation."""
    return [
        Variant("gll", SolverConfig(ref_policy="gll-max", cycle_m=1)),
        Variant("adaptive", SolverConfig(ref_policy="adaptive")),
        Variant("gll/c", SolverConfig(ref_policy="gll-max", cycle_m=1), continuation=True),
        Variant("adaptive/c", SolverConfig(ref_policy="adaptive"), continuation=True),
    ]


@dataclass
class ExperimentSpec:
    """A benchmark: one generator, several variants, a tolerance sweep.

    Repetition r regenerates the problem with seed ``generator.seed + r``;
    every variant sees the identical instance per repetition (paired
    comparison).
    """

    generator: GeneratorSpec
    variants: list[Variant] = field(default_factory=default_variants)
    tolerances: list[float] = field(default_factory=lambda: [1e-5])
    repetitions: int = 1
    output_dir: str | None = None

    def to_dict(self) -> dict:
        return {
            "generator": self.generator.to_dict(),
            "variants": [v.to_dict() for v in self.variants],
            "tolerances": self.tolerances,
            "repetitions": self.repetitions,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(
            generator=GeneratorSpec.from_dict(d["generator"]),
            variants=[Variant.from_dict(v) for v in d.get("variants", [])]
            or default_variants(),
            tolerances=[float(t) for t in d.get("tolerances", [1e-5])],
            repetitions=int(d.get("repetitions", 1)),
            output_dir=d.get("output_dir"),
        )


def run_one(problem, variant: Variant, eps: float):
    """Solve one cell; returns (x, trace, status, stages-or-None)."""
    cfg = variant.config.replaced(eps=eps)
    if variant.continuation:
        schedule = ContinuationSchedule(tau_target=problem.regularizer.tau)
        res = solve_with_continuation(problem, schedule, cfg)
        return res.x, res.trace, res.status, res.stages
    res = solve(problem, cfg)
    return res.x, res.trace, res.status, None


def run_experiment(spec: ExperimentSpec, out_dir=None, write_traces: bool = True):
    """Execute the full sweep and aggregate a results table.

    Returns (table_rows, manifest). Each row is a dict with the variant
    name, tolerance, and mean matvecs / wall time / final objective over
    the repetitions. The manifest holds the spec, all derived seeds and
    all per-cell deterministic results, so rerunning it reproduces every
    cell bit for bit (wall times are reported only in the table). A
    failed cell is recorded in the manifest and skipped in the means.
    """
    if out_dir is None:
        out_dir = spec.output_dir
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "traces").mkdir(parents=True, exist_ok=True)
    cells = []
    for rep in range(spec.repetitions):
        seed = spec.generator.seed + rep
        for eps in spec.tolerances:
            for variant in spec.variants:
                problem = spec.generator.with_seed(seed).make()
                cell = {
                    "variant": variant.name,
                    "eps": eps,
                    "rep": rep,
                    "seed": seed,
                }
                t0 = time.perf_counter()
                try:
                    x, trace, status, stages = run_one(problem, variant, eps)
                except Exception as exc:  # record and continue with other cells
                    cell["error"] = f"{type(exc).__name__}: {exc}"
                    cells.append(cell)
                    continue
                wall = time.perf_counter() - t0
                cell.update(
                    status=status,
                    iters=trace.summary.iters,
                    matvecs=trace.summary.matvecs,
                    final_obj=trace.summary.final_obj,
                    final_residual=trace.summary.final_residual,
                )
                if stages is not None:
                    cell["stages"] = [
                        {"tau": s["tau"], "iters": s["iters"], "matvecs": s["matvecs"]}
                        for s in stages
                    ]
                cell["_wall"] = wall  # stripped from the manifest
                cells.append(cell)
                if out is not None and write_traces:
                    safe = variant.name.replace("/", "-")
                    trace.write_csv(out / "traces" / f"{safe}_eps{eps:g}_rep{rep}.csv")

    rows = []
    for variant in spec.variants:
        for eps in spec.tolerances:
            done = [
                c
                for c in cells
                if c["variant"] == variant.name and c["eps"] == eps and "error" not in c
            ]
            if not done:
                continue
            rows.append(
                {
                    "variant": variant.name,
                    "eps": eps,
                    "mean_matvecs": float(np.mean([c["matvecs"] for c in done])),
                    "mean_wall_time": float(np.mean([c["_wall"] for c in done])),
                    "mean_final_obj": float(np.mean([c["final_obj"] for c in done])),
                    "runs": len(done),
                }
            )

    manifest = {
        "spec": spec.to_dict(),
        "seeds": [spec.generator.seed + r for r in range(spec.repetitions)],
        "cells": [{k: v for k, v in c.items() if k != "_wall"} for c in cells],
    }
    if out is not None:
        write_table_csv(out / "table.csv", rows)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return rows, manifest


TABLE_COLUMNS = ("variant", "eps", "mean_matvecs", "mean_wall_time", "mean_final_obj", "runs")


def write_table_csv(path, rows):
    with open(path, "w") as fh:
        fh.write(",".join(TABLE_COLUMNS) + "\n")
        for row in rows:
            fh.write(
                f"{row['variant']},{row['eps']:.17g},{row['mean_matvecs']:.17g},"
                f"{row['mean_wall_time']:.6f},{row['mean_final_obj']:.17g},{row['runs']}\n"
            )

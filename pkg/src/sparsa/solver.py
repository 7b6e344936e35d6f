"""Separable-approximation proximal solver with nonmonotone line search.

Each iteration seeds a stepsize parameter ``alpha`` from a (cyclic)
Barzilai-Borwein rule, then increases it by factors of ``eta`` until the
candidate

    x_next = argmin_z  grad(x) . z + alpha ||z - x||^2 + psi(z)

satisfies the acceptance test

    phi(x_next) <= phi_ref - sigma * alpha * ||x_next - x||^2,

where ``phi = f + psi`` and ``phi_ref`` is a reference value picked by
either the max-of-recent-objectives policy ("gll-max") or a relaxed
adaptive policy ("adaptive"). The run stops when
``alpha * ||x_next - x||_inf <= eps`` (status "converged"), when the
iterate repeats exactly (status "stationary"), or at the iteration cap
(status "iter-limit").
"""

from __future__ import annotations

import csv
import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .regularizers import Regularizer, UnsupportedRegularizer

STATUS_CONVERGED = "converged"
STATUS_STATIONARY = "stationary"
STATUS_ITER_LIMIT = "iter-limit"

REF_GLL = "gll-max"
REF_ADAPTIVE = "adaptive"


class BacktrackLimitExceeded(RuntimeError):
    """Line search exhausted its backtrack budget (broken f or prox)."""


class NonFiniteObjective(FloatingPointError):
    """A trial objective evaluated to NaN or infinity."""


@dataclass
class SolverConfig:
    """All algorithm parameters.

    ``cycle_m = None`` derives the stepsize-reuse cycle length from the
    regularization weight: 1 when tau >= 1e-2, else 3. ``adapt_Delta`` is
    the relative stall threshold of the adaptive reference policy: a
    reset to the recent-max reference is forced when the objective
    decrease over the last ``adapt_L`` iterations falls below
    ``adapt_Delta * max(1, |phi|)``, and unconditionally every
    ``adapt_L``-th iteration.
    """

    eta: float = 5.0
    sigma: float = 1e-4
    alpha_min: float = 1e-30
    alpha_max: float = 1e30
    memory_M: int = 10
    cycle_m: int | None = None
    ref_policy: str = REF_GLL
    adapt_L: int = 2
    adapt_Delta: float = 1e-6
    eps: float = 1e-5
    max_iters: int = 100_000
    max_backtracks: int = 100
    first_seed: float = 1.0

    def __post_init__(self):
        if not self.eta > 1:
            raise ValueError("eta must be > 1")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must be in (0, 1)")
        if not 0 < self.alpha_min <= self.alpha_max:
            raise ValueError("need 0 < alpha_min <= alpha_max")
        if self.memory_M < 1 or self.adapt_L < 1:
            raise ValueError("memory_M and adapt_L must be positive")
        if self.cycle_m is not None and self.cycle_m < 1:
            raise ValueError("cycle_m must be positive")
        if self.ref_policy not in (REF_GLL, REF_ADAPTIVE):
            raise ValueError(f"unknown ref_policy {self.ref_policy!r}")
        if self.adapt_Delta < 0:
            raise ValueError("adapt_Delta must be nonnegative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1 or self.max_backtracks < 0:
            raise ValueError("max_iters must be >= 1, max_backtracks >= 0")

    def effective_cycle_m(self, tau: float) -> int:
        if self.cycle_m is not None:
            return self.cycle_m
        return 1 if tau >= 1e-2 else 3

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "sigma": self.sigma,
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
            "memory_M": self.memory_M,
            "cycle_m": self.cycle_m,
            "ref_policy": self.ref_policy,
            "adapt_L": self.adapt_L,
            "adapt_Delta": self.adapt_Delta,
            "eps": self.eps,
            "max_iters": self.max_iters,
            "max_backtracks": self.max_backtracks,
            "first_seed": self.first_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(**d)

    def replaced(self, **kwargs) -> "SolverConfig":
        return replace(self, **kwargs)


@dataclass
class TraceRecord:
    """One solver iteration: objective, reference, stepsizes, costs."""

    k: int
    obj: float
    phi_ref: float
    alpha_seed: float
    alpha_accepted: float
    backtracks: int
    step_norm: float
    step_inf: float
    matvecs: int
    wall_time: float

    COLUMNS = (
        "k",
        "obj",
        "phi_ref",
        "alpha_seed",
        "alpha_accepted",
        "backtracks",
        "step_norm",
        "step_inf",
        "matvecs",
        "wall_time",
    )


@dataclass
class SolveSummary:
    status: str
    iters: int
    matvecs: int
    final_obj: float
    final_residual: float
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "iters": self.iters,
            "matvecs": self.matvecs,
            "final_obj": self.final_obj,
            "final_residual": self.final_residual,
            "wall_time": self.wall_time,
        }


@dataclass
class Trace:
    """Per-iteration records plus the end-of-run summary."""

    records: list[TraceRecord] = field(default_factory=list)
    summary: SolveSummary | None = None

    def objective_values(self, include_final: bool = True) -> np.ndarray:
        """phi(x_1), ..., phi(x_K) and, optionally, the final iterate's value."""
        objs = [r.obj for r in self.records]
        if include_final and self.summary is not None:
            objs.append(self.summary.final_obj)
        return np.array(objs)

    def matvec_values(self) -> np.ndarray:
        return np.array([r.matvecs for r in self.records])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TraceRecord.COLUMNS)
            for r in self.records:
                writer.writerow(
                    [
                        r.k,
                        f"{r.obj:.17g}",
                        f"{r.phi_ref:.17g}",
                        f"{r.alpha_seed:.17g}",
                        f"{r.alpha_accepted:.17g}",
                        r.backtracks,
                        f"{r.step_norm:.17g}",
                        f"{r.step_inf:.17g}",
                        r.matvecs,
                        f"{r.wall_time:.6f}",
                    ]
                )

    @classmethod
    def read_csv(cls, path) -> "Trace":
        records = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                records.append(
                    TraceRecord(
                        k=int(row["k"]),
                        obj=float(row["obj"]),
                        phi_ref=float(row["phi_ref"]),
                        alpha_seed=float(row["alpha_seed"]),
                        alpha_accepted=float(row["alpha_accepted"]),
                        backtracks=int(row["backtracks"]),
                        step_norm=float(row["step_norm"]),
                        step_inf=float(row["step_inf"]),
                        matvecs=int(row["matvecs"]),
                        wall_time=float(row["wall_time"]),
                    )
                )
        return cls(records=records)


@dataclass
class SolveResult:
    x: np.ndarray
    trace: Trace
    status: str


# -- stepsize seeds and reference values --------------------------------------


def bb_seed(s: np.ndarray, y: np.ndarray, cfg: SolverConfig) -> float:
    """Safeguarded spectral stepsize: minimize ||alpha s - y|| over the box.

    The unconstrained minimizer is s.y / s.s; clamping to
    [alpha_min, alpha_max] realizes the constrained minimum, which lands
    on alpha_min whenever curvature is nonpositive (s.y <= 0) or s = 0.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if s.shape != y.shape:
        raise ValueError("s and y must have the same length")
    ss = float(s @ s)
    if ss == 0.0:
        return cfg.alpha_min
    sy = float(s @ y)
    if sy <= 0.0:
        return cfg.alpha_min
    return min(max(sy / ss, cfg.alpha_min), cfg.alpha_max)


def cyclic_seed(
    k: int,
    cfg: SolverConfig,
    stored: float,
    s: np.ndarray | None,
    y: np.ndarray | None,
    cycle_m: int,
) -> float:
    """Cyclic reuse of the spectral seed.

    Recomputes the seed at iterations k = 1, 1+m, 1+2m, ... and returns
    the stored value elsewhere. At k = 1 there is no (s, y) history yet,
    so the (clamped) first-iteration seed is used.
    """
    if k < 1:
        raise ValueError("iteration index starts at 1")
    if (k - 1) % cycle_m != 0:
        return stored
    if s is None or y is None:
        return min(max(cfg.first_seed, cfg.alpha_min), cfg.alpha_max)
    return bb_seed(s, y, cfg)


def gll_reference(history) -> float:
    """Max of the retained recent objective values."""
    if len(history) == 0:
        raise ValueError("objective history is empty")
    return max(history)


def adaptive_reference(
    k: int,
    objectives,
    phi_ref_prev: float | None,
    phi_max: float,
    cfg: SolverConfig,
) -> float:
    """Relaxed reference value with periodic and stall-triggered resets.

    At k = 1 the reference is phi(x_1). Afterwards it is the permissive
    max(previous reference, recent-max) except on reset iterations, where
    it drops to the recent-max ``phi_max``. Resets fire every ``adapt_L``
    iterations and whenever the decrease over the last ``adapt_L``
    iterations is below the relative stall threshold, so a reset occurs
    in every window of ``adapt_L`` consecutive iterations.
    """
    if k == 1:
        return float(objectives[0])
    L = cfg.adapt_L
    current = float(objectives[k - 1])
    reset = k % L == 0
    if not reset and k > L:
        delta = cfg.adapt_Delta * max(1.0, abs(current))
        reset = float(objectives[k - L - 1]) - current <= delta
    if reset:
        return phi_max
    return max(phi_ref_prev, phi_max)


# -- line search and main loop -------------------------------------------------


def line_search_step(
    x: np.ndarray,
    g: np.ndarray,
    phi_ref: float,
    alpha_seed: float,
    f_value,
    reg: Regularizer,
    cfg: SolverConfig,
    prox_state=None,
):
    """Backtracking on alpha = eta^j * seed until acceptance.

    Requires phi_ref >= phi(x). Returns ``(x_next, obj_next, alpha, j)``
    for the smallest j whose subproblem solution satisfies the
    acceptance inequality.
    """
    for j in range(cfg.max_backtracks + 1):
        alpha = alpha_seed * cfg.eta**j
        u = x - g / (2.0 * alpha)
        z = reg.prox(u, alpha, state=prox_state)
        obj_z = float(f_value(z)) + reg.value(z)
        if not math.isfinite(obj_z):
            raise NonFiniteObjective(
                f"objective is {obj_z} at alpha={alpha:g} (backtrack {j})"
            )
        diff = z - x
        step_sq = float(diff @ diff)
        if obj_z <= phi_ref - cfg.sigma * alpha * step_sq:
            return z, obj_z, alpha, j
    raise BacktrackLimitExceeded(
        f"no acceptable step within {cfg.max_backtracks} backtracks "
        f"(seed {alpha_seed:g}); f may be non-smooth or the prox broken"
    )


def solve(problem, cfg: SolverConfig | None = None) -> SolveResult:
    """Run the solver on ``problem`` until a stopping test fires.

    ``problem`` must provide ``f_value(x)``, ``f_grad(x)``, a
    ``regularizer`` and a starting point ``x1``; a ``matvec_total``
    attribute, when present, feeds the per-iteration cost column. The
    run is single-threaded, owns all mutable state, and is deterministic:
    identical inputs produce identical traces (wall times aside).
    """
    cfg = cfg or SolverConfig()
    reg = problem.regularizer
    x = np.array(problem.x1, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("starting point must be finite")
    t0 = time.perf_counter()

    obj = float(problem.f_value(x)) + reg.value(x)
    if not math.isfinite(obj):
        raise NonFiniteObjective("objective at the starting point is not finite")
    g = problem.f_grad(x)

    objectives = [obj]
    window = deque([obj], maxlen=cfg.memory_M)
    cycle_m = cfg.effective_cycle_m(reg.tau)
    stored_seed = min(max(cfg.first_seed, cfg.alpha_min), cfg.alpha_max)
    phi_ref_prev: float | None = None
    s_prev = y_prev = None
    prox_state = reg.make_prox_state()
    records: list[TraceRecord] = []
    status = STATUS_ITER_LIMIT
    final_residual = math.inf

    for k in range(1, cfg.max_iters + 1):
        stored_seed = cyclic_seed(k, cfg, stored_seed, s_prev, y_prev, cycle_m)
        phi_max = gll_reference(window)
        if cfg.ref_policy == REF_GLL:
            phi_ref = phi_max
        else:
            phi_ref = adaptive_reference(k, objectives, phi_ref_prev, phi_max, cfg)
        phi_ref_prev = phi_ref

        z, obj_z, alpha, j = line_search_step(
            x, g, phi_ref, stored_seed, problem.f_value, reg, cfg, prox_state
        )
        diff = z - x
        step_norm = float(np.linalg.norm(diff))
        step_inf = alpha * float(np.max(np.abs(diff)))
        records.append(
            TraceRecord(
                k=k,
                obj=obj,
                phi_ref=phi_ref,
                alpha_seed=stored_seed,
                alpha_accepted=alpha,
                backtracks=j,
                step_norm=step_norm,
                step_inf=step_inf,
                matvecs=int(getattr(problem, "matvec_total", 0)),
                wall_time=time.perf_counter() - t0,
            )
        )

        if np.array_equal(z, x):
            status = STATUS_STATIONARY
            final_residual = 0.0
            break

        g_new = problem.f_grad(z)
        s_prev = diff
        y_prev = g_new - g
        x, g, obj = z, g_new, obj_z
        objectives.append(obj)
        window.append(obj)
        final_residual = step_inf
        if step_inf <= cfg.eps:
            status = STATUS_CONVERGED
            break

    summary = SolveSummary(
        status=status,
        iters=len(records),
        matvecs=int(getattr(problem, "matvec_total", 0)),
        final_obj=obj,
        final_residual=final_residual,
        wall_time=time.perf_counter() - t0,
    )
    return SolveResult(x=x, trace=Trace(records, summary), status=status)


def stationarity_residual(x, g, reg: Regularizer) -> float:
    """Max-norm distance from -grad f(x) to the subdifferential of psi at x.

    Zero exactly at stationary points. Supported for the closed-form
    regularizers (zero, l1, group-l2).
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if x.shape != g.shape:
        raise ValueError("x and g must have the same length")
    if reg.kind == "zero":
        return float(np.max(np.abs(g))) if g.size else 0.0
    if reg.kind == "l1":
        tau = reg.tau
        nonzero = x != 0
        res = np.where(
            nonzero,
            np.abs(g + tau * np.sign(x)),
            np.maximum(np.abs(g) - tau, 0.0),
        )
        return float(np.max(res)) if res.size else 0.0
    if reg.kind == "group-l2":
        tau = reg.tau
        worst = 0.0
        for grp in reg.groups:
            xb, gb = x[grp], g[grp]
            nrm = np.linalg.norm(xb)
            if nrm > 0:
                r = float(np.max(np.abs(gb + tau * xb / nrm)))
            else:
                r = max(float(np.linalg.norm(gb)) - tau, 0.0)
            worst = max(worst, r)
        return worst
    raise UnsupportedRegularizer(
        f"no closed-form stationarity test for kind {reg.kind!r}"
    )


def acceptance_violation(trace: Trace, sigma: float) -> float:
    """Largest relative violation of the logged acceptance inequalities.

    Replays ``obj_{k+1} <= phi_ref_k - sigma * alpha_k * step_norm_k^2``
    across consecutive records, using the summary's final objective for
    the last one. Nonpositive means every inequality holds as logged.
    """
    recs = trace.records
    if not recs:
        return 0.0
    next_objs = [r.obj for r in recs[1:]]
    if trace.summary is not None:
        next_objs.append(trace.summary.final_obj)
    worst = -math.inf
    for rec, nxt in zip(recs, next_objs):
        bound = rec.phi_ref - sigma * rec.alpha_accepted * rec.step_norm**2
        worst = max(worst, (nxt - bound) / max(1.0, abs(rec.phi_ref)))
    return worst

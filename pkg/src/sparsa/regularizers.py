"""Convex regularizers psi with exact or iterative scaled proximal maps.

The solver's separable subproblem is

    argmin_z  grad . z + alpha ||z - x||^2 + psi(z),

which after completing the square is the proximal map

    argmin_z  0.5 ||z - u||^2 + psi(z) / (2 alpha),   u = x - grad / (2 alpha).

Note the quadratic carries weight ``alpha``, not ``alpha / 2``: the
effective l1 threshold is ``tau / (2 alpha)``. Everything downstream
depends on this convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class UnsupportedRegularizer(ValueError):
    """Raised when an operation has no closed form for this regularizer."""


def soft_threshold(u: np.ndarray, t: float) -> np.ndarray:
    return np.sign(u) * np.maximum(np.abs(u) - t, 0.0)


class Regularizer:
    """Base class: value, scaled prox, and subgradient certificates.

    Instances are immutable and shareable across solves; any per-solve
    iteration state (the TV dual field) lives in the object returned by
    :meth:`make_prox_state`, owned by the caller.
    """

    kind = "abstract"

    def __init__(self, tau: float):
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        self.tau = float(tau)

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, u, alpha: float, state=None) -> np.ndarray:
        """Solve ``argmin_z 0.5 ||z - u||^2 + psi(z) / (2 alpha)``."""
        raise NotImplementedError

    def make_prox_state(self):
        """Per-solve mutable state for iterative proxes (None if exact)."""
        return None

    def subgradient_check(self, x, p, tol: float = 1e-10):
        """Whether ``p`` certifies membership in the subdifferential at ``x``.

        Returns True/False for closed-form kinds and None where no closed-form
        test exists (tv-iso).
        """
        raise NotImplementedError

    def with_tau(self, tau: float) -> "Regularizer":
        """Copy of this regularizer with a different weight."""
        raise NotImplementedError

    def _check_dim(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "tau": self.tau}


class ZeroRegularizer(Regularizer):
    kind = "zero"

    def __init__(self, tau: float = 0.0):
        super().__init__(tau)

    def value(self, x) -> float:
        return 0.0

    def prox(self, u, alpha, state=None):
        return np.array(u, dtype=float)

    def subgradient_check(self, x, p, tol: float = 1e-10):
        return bool(np.all(np.abs(np.asarray(p, dtype=float)) <= tol))

    def with_tau(self, tau):
        return ZeroRegularizer(tau)


class L1Regularizer(Regularizer):
    """psi(x) = tau * ||x||_1; prox is soft-thresholding at tau/(2 alpha)."""

    kind = "l1"

    def value(self, x) -> float:
        return self.tau * float(np.sum(np.abs(self._check_dim(x))))

    def prox(self, u, alpha, state=None):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return soft_threshold(self._check_dim(u), self.tau / (2.0 * alpha))

    def subgradient_check(self, x, p, tol: float = 1e-10):
        x = self._check_dim(x)
        p = self._check_dim(p)
        if x.shape != p.shape:
            raise ValueError("x and p must have the same length")
        nonzero = x != 0
        ok_nonzero = np.all(np.abs(p[nonzero] - self.tau * np.sign(x[nonzero])) <= tol)
        ok_zero = np.all(np.abs(p[~nonzero]) <= self.tau + tol)
        return bool(ok_nonzero and ok_zero)

    def with_tau(self, tau):
        return L1Regularizer(tau)


class GroupL2Regularizer(Regularizer):
    """psi(x) = tau * sum over groups of ||x_[i]||_2 (block sparsity).

    ``groups`` must be a partition of the indices 0..n-1 into disjoint
    blocks; overlap or gaps are rejected at construction.
    """

    kind = "group-l2"

    def __init__(self, tau: float, groups):
        super().__init__(tau)
        self.groups = [np.asarray(g, dtype=np.intp) for g in groups]
        if not self.groups:
            raise ValueError("at least one group required")
        flat = np.concatenate(self.groups)
        self.dim = int(flat.size)
        if not np.array_equal(np.sort(flat), np.arange(self.dim)):
            raise ValueError("groups must partition indices 0..n-1 (disjoint, covering)")

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {x.shape}")
        return x

    def value(self, x) -> float:
        x = self._check_dim(x)
        return self.tau * float(sum(np.linalg.norm(x[g]) for g in self.groups))

    def prox(self, u, alpha, state=None):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        u = self._check_dim(u)
        t = self.tau / (2.0 * alpha)
        z = np.empty_like(u)
        for g in self.groups:
            block = u[g]
            nrm = np.linalg.norm(block)
            scale = 0.0 if nrm <= t else 1.0 - t / nrm
            z[g] = scale * block
        return z

    def subgradient_check(self, x, p, tol: float = 1e-10):
        x = self._check_dim(x)
        p = self._check_dim(p)
        for g in self.groups:
            xb, pb = x[g], p[g]
            nrm = np.linalg.norm(xb)
            if nrm > 0:
                if np.max(np.abs(pb - self.tau * xb / nrm)) > tol:
                    return False
            elif np.linalg.norm(pb) > self.tau + tol:
                return False
        return True

    def with_tau(self, tau):
        return GroupL2Regularizer(tau, self.groups)

    def to_dict(self):
        return {
            "kind": self.kind,
            "tau": self.tau,
            "groups": [g.tolist() for g in self.groups],
        }


# -- isotropic total variation -----------------------------------------------


def tv_gradient(z: np.ndarray):
    """Forward-difference image gradient; zero at the far row/column."""
    gx = np.zeros_like(z)
    gy = np.zeros_like(z)
    if z.shape[1] > 1:
        gx[:, :-1] = z[:, 1:] - z[:, :-1]
    if z.shape[0] > 1:
        gy[:-1, :] = z[1:, :] - z[:-1, :]
    return gx, gy


def tv_divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Negative adjoint of :func:`tv_gradient` (<grad z, p> = -<z, div p>)."""
    div = np.zeros_like(px)
    if px.shape[1] > 1:
        div[:, 0] += px[:, 0]
        div[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
        div[:, -1] += -px[:, -2]
    if py.shape[0] > 1:
        div[0, :] += py[0, :]
        div[1:-1, :] += py[1:-1, :] - py[:-2, :]
        div[-1, :] += -py[-2, :]
    return div


def tv_value_2d(z: np.ndarray) -> float:
    gx, gy = tv_gradient(z)
    return float(np.sum(np.sqrt(gx**2 + gy**2)))


def tv_prox(
    u: np.ndarray,
    weight: float,
    p0=None,
    max_iters: int = 40,
    tol: float = 1e-5,
    step: float = 0.248,
    dual_history: list | None = None,
):
    """Weighted isotropic-TV proximal map by dual projected gradient.

    Minimizes ``0.5 ||z - u||^2 + weight * TV(z)`` through its dual
    ``min 0.5 ||u + weight * div(p)||^2`` over per-pixel unit balls
    ``||p_ij||_2 <= 1``. With ``step <= 0.25`` the dual step length is below
    2/L for the dual gradient (L <= 8 weight^2), so the dual objective
    decreases monotonically. Returns ``(z, p)``; pass ``p`` back as ``p0``
    to warm-start the next call. The result is never worse than ``z = u``.
    """
    u = np.asarray(u, dtype=float)
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    if weight == 0.0:
        return u.copy(), np.zeros((2,) + u.shape)
    p = np.zeros((2,) + u.shape) if p0 is None else np.array(p0, dtype=float)
    px, py = p[0], p[1]
    z = u + weight * tv_divergence(px, py)
    for _ in range(max_iters):
        if dual_history is not None:
            dual_history.append(0.5 * float(z.ravel() @ z.ravel()))
        gx, gy = tv_gradient(z)
        qx = px + (step / weight) * gx
        qy = py + (step / weight) * gy
        norms = np.maximum(1.0, np.sqrt(qx**2 + qy**2))
        qx /= norms
        qy /= norms
        change = max(np.max(np.abs(qx - px)), np.max(np.abs(qy - py)))
        px, py = qx, qy
        z = u + weight * tv_divergence(px, py)
        if not np.all(np.isfinite(z)):
            raise FloatingPointError("TV inner solver produced non-finite values")
        if change <= tol * max(1.0, np.max(np.abs(px)), np.max(np.abs(py))):
            break
    if dual_history is not None:
        dual_history.append(0.5 * float(z.ravel() @ z.ravel()))
    # inexact inner solves must never move above the trivial feasible point
    obj_z = 0.5 * float(np.sum((z - u) ** 2)) + weight * tv_value_2d(z)
    if obj_z > weight * tv_value_2d(u):
        return u.copy(), np.zeros((2,) + u.shape)
    return z, np.stack([px, py])


class TVProxState:
    """Warm-start buffer for the TV dual field, owned by one solve."""

    __slots__ = ("p",)

    def __init__(self):
        self.p = None


class TVIsoRegularizer(Regularizer):
    """Isotropic total variation on a 2-D grid.

    psi(x) = tau * sum_i sqrt((dx_i)^2 + (dy_i)^2) with forward
    differences and replicated far edges. The prox has no closed form and
    is solved iteratively (see :func:`tv_prox`); inner iteration count,
    exit tolerance and dual step are configurable.
    """

    kind = "tv-iso"

    def __init__(
        self,
        tau: float,
        grid: tuple[int, int],
        inner_max_iters: int = 40,
        inner_tol: float = 1e-5,
        inner_step: float = 0.248,
    ):
        super().__init__(tau)
        rows, cols = grid
        if rows < 1 or cols < 1:
            raise ValueError("grid dims must be positive")
        self.grid = (int(rows), int(cols))
        self.inner_max_iters = int(inner_max_iters)
        self.inner_tol = float(inner_tol)
        self.inner_step = float(inner_step)

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        n = self.grid[0] * self.grid[1]
        if x.shape != (n,):
            raise ValueError(f"expected vector of length {n}, got {x.shape}")
        return x

    def value(self, x) -> float:
        x = self._check_dim(x)
        return self.tau * tv_value_2d(x.reshape(self.grid))

    def make_prox_state(self):
        return TVProxState()

    def prox(self, u, alpha, state=None):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        u = self._check_dim(u)
        weight = self.tau / (2.0 * alpha)
        p0 = state.p if state is not None else None
        z, p = tv_prox(
            u.reshape(self.grid),
            weight,
            p0=p0,
            max_iters=self.inner_max_iters,
            tol=self.inner_tol,
            step=self.inner_step,
        )
        if state is not None:
            state.p = p
        return z.ravel()

    def subgradient_check(self, x, p, tol: float = 1e-10):
        return None  # no closed-form certificate for tv-iso

    def with_tau(self, tau):
        return TVIsoRegularizer(
            tau, self.grid, self.inner_max_iters, self.inner_tol, self.inner_step
        )

    def to_dict(self):
        return {"kind": self.kind, "tau": self.tau, "grid": list(self.grid)}


def regularizer_from_dict(spec: dict) -> Regularizer:
    """Build a regularizer from its JSON dict form (see ``to_dict``)."""
    kind = spec["kind"]
    tau = float(spec.get("tau", 0.0))
    if kind == "zero":
        return ZeroRegularizer(tau)
    if kind == "l1":
        return L1Regularizer(tau)
    if kind == "group-l2":
        return GroupL2Regularizer(tau, spec["groups"])
    if kind == "tv-iso":
        return TVIsoRegularizer(tau, tuple(spec["grid"]))
    raise ValueError(f"unknown regularizer kind {kind!r}")


def load_groups_json(path) -> list[np.ndarray]:
    """Read a group partition (list of index arrays) from a JSON file."""
    groups = json.loads(open(path).read())
    reg = GroupL2Regularizer(0.0, groups)  # runs partition validation
    return reg.groups

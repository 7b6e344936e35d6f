"""Shared numeric oracles and helpers, independent of the library's code paths."""

from __future__ import annotations

import numpy as np
import pytest


def golden_min(f, lo, hi, tol=1e-14):
    """Golden-section minimizer in extended precision.

    Runs the comparisons in longdouble so the bracket resolves below the
    float64 derivative-free accuracy floor (~1e-8).
    """
    gr = (np.sqrt(np.longdouble(5)) - 1) / 2
    a, b = np.longdouble(lo), np.longdouble(hi)
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
    return float(0.5 * (a + b))


def tv_prox_dual_oracle(u, weight, iters=100_000, step=0.125):
    """Long-run dual projected gradient for the weighted-TV prox.

    Deliberately plain: fixed conservative step, no warm start, no early
    exit. Forward differences with a zero far edge, divergence as the
    negative adjoint.
    """
    u = np.asarray(u, dtype=float)
    px = np.zeros_like(u)
    py = np.zeros_like(u)
    for _ in range(iters):
        div = np.zeros_like(u)
        div[:, 0] += px[:, 0]
        div[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
        div[:, -1] += -px[:, -2]
        div[0, :] += py[0, :]
        div[1:-1, :] += py[1:-1, :] - py[:-2, :]
        div[-1, :] += -py[-2, :]
        z = u + weight * div
        gx = np.zeros_like(z)
        gy = np.zeros_like(z)
        gx[:, :-1] = z[:, 1:] - z[:, :-1]
        gy[:-1, :] = z[1:, :] - z[:-1, :]
        px = px + (step / weight) * gx
        py = py + (step / weight) * gy
        norms = np.maximum(1.0, np.sqrt(px**2 + py**2))
        px /= norms
        py /= norms
    div = np.zeros_like(u)
    div[:, 0] += px[:, 0]
    div[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
    div[:, -1] += -px[:, -2]
    div[0, :] += py[0, :]
    div[1:-1, :] += py[1:-1, :] - py[:-2, :]
    div[-1, :] += -py[-2, :]
    return u + weight * div


def tv_objective(z, u, weight):
    """0.5||z-u||^2 + weight * isotropic TV, written out independently."""
    z = np.asarray(z, dtype=float)
    rows, cols = z.shape
    tv = 0.0
    for i in range(rows):
        for j in range(cols):
            dh = z[i, j + 1] - z[i, j] if j + 1 < cols else 0.0
            dv = z[i + 1, j] - z[i, j] if i + 1 < rows else 0.0
            tv += np.sqrt(dh * dh + dv * dv)
    return 0.5 * float(np.sum((z - u) ** 2)) + weight * tv


def finite_difference_gradient(f, x, h=1e-6):
    """Central finite differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


def running_window_max(values, M):
    """The max-of-last-M sequence, recomputed from scratch."""
    out = []
    for i in range(len(values)):
        lo = max(0, i - M + 1)
        out.append(max(values[lo : i + 1]))
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(0)

"""Fixed-step classical RK4 with node-derivative storage and cubic-Hermite
dense output.

All solvers in this library integrate on a prescribed time grid (default 1000
steps on [0, 1]) so that convergence is a clean O(h^4) and runs are
deterministic. Dense output interpolates node values and node derivatives with
a cubic Hermite polynomial, which preserves the O(h^4) accuracy of the node
values between nodes.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NonFiniteState

OVERFLOW_GUARD = 1e12


def _check_finite(t: float, y: np.ndarray) -> None:
    if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > OVERFLOW_GUARD:
        raise NonFiniteState(f"state non-finite or beyond {OVERFLOW_GUARD:.0e} at t={t:.6g}")


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray,
             h: float, k1: np.ndarray | None = None) -> np.ndarray:
    if k1 is None:
        k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_path(
    f: Callable[[float, np.ndarray], np.ndarray],
    times: np.ndarray,
    y0: np.ndarray,
    node_hook: Callable[[int, float, np.ndarray], np.ndarray | None] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate y' = f(t, y) over the given grid.

    Returns (ys, derivs), each of shape (len(times), len(y0)); derivs[i] is
    f(t_i, ys[i]) and feeds Hermite dense output. node_hook may inspect or
    replace the state at each node (used for periodic re-orthonormalization);
    it runs before the node derivative is evaluated.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(y0, dtype=float).copy()
    n = len(times)
    ys = np.empty((n, y.size))
    derivs = np.empty_like(ys)
    for i in range(n):
        t = times[i]
        if node_hook is not None:
            replaced = node_hook(i, t, y)
            if replaced is not None:
                y = replaced
        _check_finite(t, y)
        ys[i] = y
        k1 = f(t, y)
        derivs[i] = k1
        if i + 1 < n:
            y = rk4_step(f, t, y, times[i + 1] - t, k1=k1)
    return ys, derivs


class HermitePath:
    """Dense cubic-Hermite evaluator over grid values and derivatives."""

    def __init__(self, times: np.ndarray, values: np.ndarray, derivs: np.ndarray):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.derivs = np.asarray(derivs, dtype=float)
        if self.values.shape != self.derivs.shape or len(self.times) != len(self.values):
            raise ValueError("inconsistent Hermite data shapes")

    def __call__(self, t: float) -> np.ndarray:
        ts = self.times
        if t <= ts[0]:
            return self.values[0].copy()
        if t >= ts[-1]:
            return self.values[-1].copy()
        i = int(np.searchsorted(ts, t, side="right") - 1)
        h = ts[i + 1] - ts[i]
        s = (t - ts[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.values[i] + h * h10 * self.derivs[i]
                + h01 * self.values[i + 1] + h * h11 * self.derivs[i + 1])

    def derivative(self, t: float) -> np.ndarray:
        ts = self.times
        if t <= ts[0]:
            return self.derivs[0].copy()
        if t >= ts[-1]:
            return self.derivs[-1].copy()
        i = int(np.searchsorted(ts, t, side="right") - 1)
        h = ts[i + 1] - ts[i]
        s = (t - ts[i]) / h
        d00 = (6 * s * s - 6 * s) / h
        d10 = 3 * s * s - 4 * s + 1
        d01 = (6 * s - 6 * s * s) / h
        d11 = 3 * s * s - 2 * s
        return (d00 * self.values[i] + d10 * self.derivs[i]
                + d01 * self.values[i + 1] + d11 * self.derivs[i + 1])


def uniform_grid(horizon: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return np.linspace(0.0, float(horizon), steps + 1)

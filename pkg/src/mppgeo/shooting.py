"""Damped Newton shooting with finite-difference Jacobians.

Shared by all boundary-value solvers in the library. The residual wraps a
forward integration; Jacobians are forward finite differences (one extra
integration per unknown), the linear solve uses partial pivoting, and the step
is Armijo-backtracked on the residual norm. On stagnation the solver restarts
from seeded perturbations of the original guess and returns the best iterate
found. All of this is deterministic: fixed column order, fixed pivoting,
fixed perturbation stream.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonConvergence, SingularJacobian

Array = np.ndarray

COND_LIMIT = 1e12


@dataclass
class ShootingProblem:
    """Square residual system r(u) = 0, r wrapping a forward integration.

    ``residual_batch``, when provided, evaluates a (B, m) block of unknowns in
    one call; the Jacobian uses it to run all finite-difference columns
    through a single vectorized integration.
    """

    unknown_dim: int
    residual: Callable[[Array], Array]
    scale: Array | None = None
    residual_batch: Callable[[Array], Array] | None = None

    def __post_init__(self):
        if self.scale is not None:
            self.scale = np.asarray(self.scale, dtype=float)
            if self.scale.shape != (self.unknown_dim,):
                raise ValueError("scale must have one entry per residual component")

    def scaled_residual(self, u: Array) -> Array:
        r = np.asarray(self.residual(u), dtype=float)
        if r.shape != (self.unknown_dim,):
            raise ValueError(
                f"residual dimension {r.shape} != unknown dimension {self.unknown_dim}")
        return r if self.scale is None else r / self.scale

    def scaled_residual_batch(self, us: Array) -> Array:
        rs = np.asarray(self.residual_batch(us), dtype=float)
        return rs if self.scale is None else rs / self.scale[None, :]


@dataclass
class ShootingConfig:
    tol: float = 1e-8
    max_iter: int = 100
    fd_step: float = 1e-6
    damping_factor: float = 0.5
    min_step: float = 1e-6
    armijo_c: float = 1e-4
    restarts: tuple = (0.1, 0.5, 1.0)
    seed: int = 0
    threads: int | None = None  # None: respect MPPGEO_THREADS, default 1

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be > 0 and max_iter >= 1")

    def thread_count(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        return max(1, int(os.environ.get("MPPGEO_THREADS", "1")))


@dataclass
class ShootingResult:
    unknowns: Array
    residual_norm: float
    iterations: int
    success: bool
    history: list = field(default_factory=list)


def jacobian(problem: ShootingProblem, point: Array,
             config: ShootingConfig | None = None,
             r0: Array | None = None) -> Array:
    """Forward finite-difference Jacobian with per-component relative steps."""
    config = config or ShootingConfig()
    point = np.asarray(point, dtype=float)
    m = problem.unknown_dim
    if r0 is None:
        r0 = problem.scaled_residual(point)
    steps = config.fd_step * np.maximum(1.0, np.abs(point))

    if problem.residual_batch is not None:
        # the batch may run an inexact (coarser-grid) surrogate, so the base
        # row is re-evaluated inside the same batch rather than reusing r0
        us = np.repeat(point[None, :], m + 1, axis=0)
        us[1 + np.arange(m), np.arange(m)] += steps
        rs = problem.scaled_residual_batch(us)
        return ((rs[1:] - rs[0][None, :]) / steps[:, None]).T

    def column(i: int) -> Array:
        up = point.copy()
        up[i] += steps[i]
        return (problem.scaled_residual(up) - r0) / steps[i]

    nthreads = config.thread_count()
    jac = np.empty((m, m))
    if nthreads > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            cols = list(pool.map(column, range(m)))
        for i, c in enumerate(cols):
            jac[:, i] = c
    else:
        for i in range(m):
            jac[:, i] = column(i)
    return jac


LM_GUARD = 1e8


def _newton_run(problem: ShootingProblem, guess: Array, config: ShootingConfig,
                history: list) -> tuple[Array, float, int]:
    u = np.asarray(guess, dtype=float).copy()
    r = problem.scaled_residual(u)
    norm = float(np.linalg.norm(r))
    best_u, best_norm = u.copy(), norm
    mu = 1e-6  # Levenberg damping, used only for ill-conditioned Jacobians
    for it in range(config.max_iter):
        if norm < config.tol:
            break
        jac = jacobian(problem, u, config, r0=r)
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularJacobian(float(cond))
        accepted = False
        if cond > LM_GUARD:
            # near-rank-deficient shooting map (dense landmark scenes): a raw
            # Newton step explodes along noise directions, so damp it in
            # Levenberg-Marquardt form with an adaptive parameter
            jtj = jac.T @ jac
            scale = np.trace(jtj) / jtj.shape[0]
            rhs = -jac.T @ r
            for _ in range(14):
                step = np.linalg.solve(jtj + mu * scale * np.eye(jtj.shape[0]), rhs)
                try:
                    r_try = problem.scaled_residual(u + step)
                except Exception:
                    mu *= 8.0
                    continue
                norm_try = float(np.linalg.norm(r_try))
                if np.isfinite(norm_try) and norm_try < norm:
                    u, r, norm = u + step, r_try, norm_try
                    mu = max(mu / 3.0, 1e-14)
                    accepted = True
                    break
                mu *= 8.0
        else:
            step = np.linalg.solve(jac, -r)
            alpha = 1.0
            while alpha >= config.min_step:
                u_try = u + alpha * step
                try:
                    r_try = problem.scaled_residual(u_try)
                except Exception:
                    alpha *= config.damping_factor
                    continue
                norm_try = float(np.linalg.norm(r_try))
                if np.isfinite(norm_try) and norm_try <= (1.0 - config.armijo_c * alpha) * norm:
                    u, r, norm = u_try, r_try, norm_try
                    accepted = True
                    break
                alpha *= config.damping_factor
        history.append(norm)
        if norm < best_norm:
            best_u, best_norm = u.copy(), norm
        if not accepted:
            break  # stagnation: caller may multi-start
    return best_u, best_norm, len(history)


def solve(problem: ShootingProblem, guess: Array,
          config: ShootingConfig | None = None) -> ShootingResult:
    """Damped Newton with seeded multi-start; raises NonConvergence on failure."""
    config = config or ShootingConfig()
    guess = np.asarray(guess, dtype=float)
    history: list = []
    rng = np.random.default_rng(config.seed)

    best_u, best_norm = guess.copy(), float("inf")
    singular_exc: SingularJacobian | None = None
    attempts = [guess]
    gscale = max(np.linalg.norm(guess), 1.0)
    for scale in config.restarts:
        attempts.append(guess + scale * gscale * rng.standard_normal(guess.shape))

    iterations = 0
    for start in attempts:
        try:
            u, norm, iterations = _newton_run(problem, start, config, history)
        except SingularJacobian as exc:
            singular_exc = exc
            continue
        if norm < best_norm:
            best_u, best_norm = u, norm
        if best_norm < config.tol:
            return ShootingResult(best_u, best_norm, iterations, True, history)

    if singular_exc is not None and not np.isfinite(best_norm):
        raise singular_exc
    raise NonConvergence("shooting did not reach tolerance", best=best_u,
                         residual_norm=best_norm, iterations=len(history))

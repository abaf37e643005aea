"""Sampler of the developed diffusion for qualitative validation of MPPs.

Stratonovich stepping uses the Euler-Heun predictor-corrector on the joint
(position, frame) system: both the predictor and the corrector see the same
Brownian increment, which converges to the Stratonovich solution of

    dx = //_t Sigma_t^(1/2) dB + u_t(x) dt.

Randomness comes from the counter-based Philox4x64 generator keyed by the
seed with counter block [0, 0, path_index, 0]: every path owns a disjoint
counter range addressed by (seed, path index, step index), so sample sets are
reproducible bit-for-bit regardless of scheduling or path order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import MPPProblem
from .errors import NonFiniteState, PathLeavesChart
from .odeint import OVERFLOW_GUARD

Array = np.ndarray


@dataclass
class SimConfig:
    paths: int = 1000
    steps: int = 200
    seed: int = 0
    record_endpoints_only: bool = True

    def __post_init__(self):
        if self.paths < 1 or self.steps < 1:
            raise ValueError("paths and steps must be >= 1")


@dataclass
class SampleResult:
    endpoints: Array          # (kept, d)
    paths: Array | None       # (kept, steps+1, d) when full paths recorded
    discarded: int            # paths that left the chart or blew up
    seed: int


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, path_index, 0]))


def _increments(config: SimConfig, rank: int) -> Array:
    """Brownian increments (paths, steps, rank), one Philox stream per path.

    Drawing the whole (steps, rank) block consumes the stream in the same
    order as per-step draws, so serial and vectorized loops see identical
    noise.
    """
    out = np.empty((config.paths, config.steps, rank))
    for p in range(config.paths):
        out[p] = _path_rng(config.seed, p).standard_normal((config.steps, rank))
    return out


def _drift_is_spatially_constant(problem: MPPProblem) -> bool:
    rng = np.random.default_rng(0)
    probes = rng.normal(size=(3, problem.model.dim))
    vals = [np.asarray(problem.drift.value(0.5, p), dtype=float) for p in probes]
    return all(np.array_equal(vals[0], v) for v in vals[1:])


def sample_development(problem: MPPProblem, config: SimConfig) -> SampleResult:
    """Euler-Heun sample paths of the developed process; seed-reproducible."""
    model = problem.model
    j = model.sr_rank
    dw = np.sqrt(problem.horizon / config.steps) * _increments(config, j)
    if model.trivial_connection and _drift_is_spatially_constant(problem):
        return _sample_flat(problem, config, dw)
    return _sample_general(problem, config, dw)


def _sample_flat(problem: MPPProblem, config: SimConfig, dw: Array) -> SampleResult:
    """Vectorized path batch for Euclidean charts with x-independent drift."""
    model, drift, sigma = problem.model, problem.drift, problem.sigma
    j = model.sr_rank
    nsteps = config.steps
    h = problem.horizon / nsteps
    times = np.linspace(0.0, problem.horizon, nsteps + 1)
    fe = model.frame0[:, :j]

    x = np.repeat(problem.start[None, :], config.paths, axis=0)
    rec = [x.copy()] if not config.record_endpoints_only else None
    alive = np.ones(config.paths, dtype=bool)
    for i in range(nsteps):
        t0, t1 = times[i], times[i + 1]
        u0 = np.asarray(drift.value(t0, problem.start), dtype=float)
        u1 = np.asarray(drift.value(t1, problem.start), dtype=float)
        noise = dw[:, i, :] @ (0.5 * (sigma.sqrt(t0) + sigma.sqrt(t1))).T @ fe.T
        x = x + noise + 0.5 * h * (u0 + u1)[None, :]
        if not np.any(alive):
            break
        if not np.all(np.isfinite(x)) or np.abs(x[alive]).max() > OVERFLOW_GUARD:
            raise NonFiniteState(f"sample batch blew up at t={t0:.6g}")
        for p in np.flatnonzero(alive):
            if not model.chart_domain(x[p]):
                alive[p] = False
        if rec is not None:
            rec.append(x.copy())
    if not np.any(alive):
        raise PathLeavesChart(problem.horizon, problem.start)
    kept = np.flatnonzero(alive)
    return SampleResult(
        endpoints=x[kept],
        paths=None if rec is None else np.stack(rec, axis=1)[kept],
        discarded=int(config.paths - kept.size),
        seed=config.seed,
    )


def _sample_general(problem: MPPProblem, config: SimConfig, dw: Array) -> SampleResult:
    model, drift, sigma = problem.model, problem.drift, problem.sigma
    j = model.sr_rank
    nsteps = config.steps
    h = problem.horizon / nsteps
    times = np.linspace(0.0, problem.horizon, nsteps + 1)

    def velocity(t, x, fmat, dw_dt):
        # dw_dt carries the fixed increment of the step divided by h
        xd = fmat[:, :j] @ (sigma.sqrt(t) @ dw_dt) + drift.value(t, x)
        fd = -np.einsum("kij,i,jr->kr", model.christoffel(x), xd, fmat)
        return xd, fd

    endpoints = []
    full = [] if not config.record_endpoints_only else None
    discarded = 0
    for p in range(config.paths):
        x = problem.start.copy()
        fmat = model.frame0.copy()
        rec = [x.copy()]
        ok = True
        for i in range(nsteps):
            t = times[i]
            dw_dt = dw[p, i] / h
            xd1, fd1 = velocity(t, x, fmat, dw_dt)
            xp = x + h * xd1
            fp = fmat + h * fd1
            xd2, fd2 = velocity(times[i + 1], xp, fp, dw_dt)
            x = x + 0.5 * h * (xd1 + xd2)
            fmat = fmat + 0.5 * h * (fd1 + fd2)
            if not np.all(np.isfinite(x)) or np.abs(x).max() > OVERFLOW_GUARD:
                raise NonFiniteState(f"sample path {p} blew up at t={t:.6g}")
            if not model.chart_domain(x):
                ok = False
                break
            if full is not None:
                rec.append(x.copy())
        if not ok:
            discarded += 1
            continue
        endpoints.append(x.copy())
        if full is not None:
            full.append(np.array(rec))

    if not endpoints:
        raise PathLeavesChart(problem.horizon, problem.start)
    return SampleResult(
        endpoints=np.array(endpoints),
        paths=None if full is None else np.array(full),
        discarded=discarded,
        seed=config.seed,
    )

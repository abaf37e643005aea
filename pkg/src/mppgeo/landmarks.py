"""Most probable paths of landmark configurations driven by finitely many
noise vector fields.

The flow on n landmarks in ambient dimension d is the canonical Hamiltonian
system in coordinates (per landmark r, component k):

    c_a       = sum_{i,r} lam^i_r sigma^i_a(x_r)
    x_dot^k_r = a^k_t(x_r) + sum_a c_a sigma^k_a(x_r)
    l_dot^k_r = -sum_{i,a} lam^i_r c_a d_k sigma^i_a(x_r)
                - sum_i lam^i_r d_k a^i_t(x_r)

The noise fields are treated as an orthonormal basis of the horizontal space,
so the running energy is (1/2) sum_a c_a^2. There is no bivector variable:
the connection parallelizing the fields is flat on the horizontal bundle.

All-Gaussian systems route field evaluation through a fused vectorized path;
arbitrary callable fields fall back to a per-field loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import Trajectory
from .errors import NonConvergence, NonFiniteState, RankDeficient, SingularJacobian
from .geometry import DriftModel
from .odeint import OVERFLOW_GUARD, rk4_path, uniform_grid
from .shooting import ShootingConfig, ShootingProblem, ShootingResult, solve

Array = np.ndarray

FIELD_COVERAGE_TOL = 1e-10
SINGULAR_RTOL = 1e-8


@dataclass
class NoiseField:
    """A single noise vector field with its spatial gradient.

    ``grad(x)[i, k]`` is d sigma^i / d x^k. Gaussian presets carry a
    descriptor (center, width, direction index) used by the fused evaluator
    and by plotting exports.
    """

    eval: Callable[[Array], Array]
    grad: Callable[[Array], Array]
    center: Array | None = None
    width: float | None = None
    direction: int | None = None

    @property
    def is_gaussian(self) -> bool:
        return self.center is not None and self.width is not None \
            and self.direction is not None


def gaussian_field(center, width: float, direction: int) -> NoiseField:
    """sigma(x) = exp(-|x - p|^2 / (2 tau^2)) e_m with analytic gradient."""
    if width <= 0:
        raise ValueError("width must be positive")
    center = np.asarray(center, dtype=float)
    d = center.size

    def evalf(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(d)
        out[direction] = np.exp(-float((x - center) @ (x - center)) / (2 * width**2))
        return out

    def gradf(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros((d, d))
        val = np.exp(-float((x - center) @ (x - center)) / (2 * width**2))
        g[direction, :] = -val * (x - center) / width**2
        return g

    return NoiseField(evalf, gradf, center=center, width=width, direction=direction)


def gaussian_grid(lo, hi, nx: int, ny: int, width: float) -> list[NoiseField]:
    """nx x ny grid of Gaussian nodes, one field per coordinate direction."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    xs = np.linspace(lo[0], hi[0], nx)
    ys = np.linspace(lo[1], hi[1], ny)
    fields = []
    for x in xs:
        for y in ys:
            for m in range(2):
                fields.append(gaussian_field([x, y], width, m))
    return fields


def grid_over_points(points: Array, nx: int, ny: int, width: float,
                     inflate: float = 0.25) -> list[NoiseField]:
    """Grid over the bounding box of a scene, inflated by the given fraction."""
    points = np.asarray(points, dtype=float)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    return gaussian_grid(lo - inflate * span, hi + inflate * span, nx, ny, width)


@dataclass
class LandmarkSystem:
    """Landmark count, ambient dimension, noise fields, drift and grid."""

    n: int
    d: int
    fields: list
    drift: DriftModel | None = None
    horizon: float = 1.0
    steps: int = 1000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one landmark")
        if self.drift is None:
            self.drift = DriftModel.zero(self.d)
        self._fused = None
        self._groups = None
        self._shared_kernel = None
        if self.fields and all(f.is_gaussian for f in self.fields):
            centers = np.array([f.center for f in self.fields])
            widths = np.array([f.width for f in self.fields])
            dirs = np.array([f.direction for f in self.fields])
            self._fused = (centers, widths, dirs)
            # per-direction groups: each Gaussian is a scalar kernel times a
            # coordinate direction, so the rhs reduces to one kernel matrix
            # per direction
            groups = []
            for m in range(self.d):
                idx = np.flatnonzero(dirs == m)
                if idx.size:
                    groups.append((m, idx, centers[idx], 1.0 / widths[idx] ** 2))
            self._groups = groups
            # grid presets place one field per direction on identical nodes;
            # in that case the kernel matrix is shared across directions
            if len(groups) > 1 and all(
                    g[2].shape == groups[0][2].shape
                    and np.array_equal(g[2], groups[0][2])
                    and np.array_equal(g[3], groups[0][3]) for g in groups[1:]):
                self._shared_kernel = (groups[0][2], groups[0][3],
                                       [(g[0], g[1]) for g in groups])
        # spatially-constant drifts (the common preset case) are evaluated once
        # per call and broadcast over landmarks
        rng = np.random.default_rng(0)
        probes = rng.normal(size=(3, self.d))
        vals = [np.asarray(self.drift.value(0.5, p), dtype=float) for p in probes]
        jacs = [np.asarray(self.drift.jacobian(0.5, p), dtype=float) for p in probes]
        self._drift_const_x = (
            all(np.array_equal(vals[0], v) for v in vals[1:])
            and all(np.abs(j).max() < 1e-14 for j in jacs))

    def drift_values(self, t: float, x: Array) -> Array:
        if self._drift_const_x:
            v = np.asarray(self.drift.value(t, x[0]), dtype=float)
            return np.broadcast_to(v, x.shape)
        return np.array([self.drift.value(t, xr) for xr in x])

    def drift_jacobians(self, t: float, x: Array) -> Array:
        if self._drift_const_x:
            return np.zeros((self.n, self.d, self.d))
        return np.array([self.drift.jacobian(t, xr) for xr in x])

    @property
    def rank(self) -> int:
        return len(self.fields)

    @property
    def times(self) -> Array:
        return uniform_grid(self.horizon, self.steps)

    def field_values(self, x: Array) -> Array:
        """sigma^k_a at every landmark: shape (J, n, d) for positions (n, d)."""
        x = np.asarray(x, dtype=float)
        if not self.fields:
            return np.zeros((0, self.n, self.d))
        if self._fused is not None:
            centers, widths, dirs = self._fused
            diff = x[None, :, :] - centers[:, None, :]          # (J, n, d)
            g = np.exp(-np.einsum("jnd,jnd->jn", diff, diff) / (2 * widths**2)[:, None])
            out = np.zeros((len(self.fields), self.n, self.d))
            out[np.arange(len(self.fields)), :, dirs] = g
            return out
        return np.array([[f.eval(xr) for xr in x] for f in self.fields])

    def field_grads(self, x: Array) -> Array:
        """d_k sigma^i_a at every landmark: shape (J, n, d, d), [a, r, i, k]."""
        x = np.asarray(x, dtype=float)
        if not self.fields:
            return np.zeros((0, self.n, self.d, self.d))
        if self._fused is not None:
            centers, widths, dirs = self._fused
            diff = x[None, :, :] - centers[:, None, :]
            g = np.exp(-np.einsum("jnd,jnd->jn", diff, diff) / (2 * widths**2)[:, None])
            grad = -g[:, :, None] * diff / (widths**2)[:, None, None]  # (J, n, k)
            out = np.zeros((len(self.fields), self.n, self.d, self.d))
            out[np.arange(len(self.fields)), :, dirs, :] = grad
            return out
        return np.array([[f.grad(xr) for xr in x] for f in self.fields])

    def validate_coverage(self, positions: Array) -> None:
        """Sampled form of the coverage assumption: no field vanishes at every
        landmark simultaneously."""
        if not self.fields:
            return
        vals = self.field_values(np.asarray(positions, dtype=float))
        norms = np.linalg.norm(vals, axis=2)  # (J, n)
        dead = np.all(norms < FIELD_COVERAGE_TOL, axis=1)
        if np.any(dead):
            raise ValueError(
                f"field(s) {np.flatnonzero(dead).tolist()} vanish at all "
                "landmark positions; coverage assumption violated")


@dataclass
class LandmarkState:
    x: Array    # (n, d) positions
    lam: Array  # (n, d) covectors
    c: Array    # (J,) control coefficients, derived


# ---------------------------------------------------------------------------
# dynamics


def controls(system: LandmarkSystem, x: Array, lam: Array) -> Array:
    """c_a = sum_{i,r} lam^i_r sigma^i_a(x_r); fixed summation order."""
    if system._groups is not None:
        c = np.empty(system.rank)
        for m, idx, centers, inv_tau2 in system._groups:
            diff = x[:, None, :] - centers[None, :, :]
            g = np.exp(-0.5 * np.einsum("njd,njd->nj", diff, diff) * inv_tau2[None, :])
            c[idx] = g.T @ lam[:, m]
        return c
    vals = system.field_values(x)
    return np.einsum("jri,ri->j", vals, lam)


def landmark_rhs(system: LandmarkSystem, t: float,
                 state: LandmarkState) -> tuple[Array, Array]:
    """(x_dot, lam_dot) of the canonical landmark system."""
    x, lam = state.x, state.lam
    xdot, ldot, _ = _rhs_arrays(system, t, x, lam)
    return xdot, ldot


def _fused_terms(system: LandmarkSystem, x: Array,
                 lam: Array) -> tuple[Array, Array, Array]:
    """(c, noise part of x_dot, noise part of lam_dot) via per-direction
    scalar kernels; only valid for all-Gaussian systems."""
    c = np.empty(system.rank)
    xdot = np.zeros_like(x)
    ldot = np.zeros_like(x)
    if system._shared_kernel is not None:
        centers, inv_tau2, dir_idx = system._shared_kernel
        diff = x[:, None, :] - centers[None, :, :]            # (n, K, d)
        r2 = (diff * diff).sum(axis=2)
        g = np.exp(-0.5 * r2 * inv_tau2[None, :])
        wsum = np.zeros_like(g)
        for m, idx in dir_idx:
            cm = g.T @ lam[:, m]
            c[idx] = cm
            xdot[:, m] += g @ cm
            wsum += lam[:, m][:, None] * cm[None, :]
        # d_k sigma = -(x - p)_k / tau^2 * g, so the costate term flips sign
        w = wsum * g * inv_tau2[None, :]
        ldot += np.einsum("nj,njk->nk", w, diff)
        return c, xdot, ldot
    for m, idx, centers, inv_tau2 in system._groups:
        diff = x[:, None, :] - centers[None, :, :]            # (n, Jm, d)
        g = np.exp(-0.5 * np.einsum("njd,njd->nj", diff, diff) * inv_tau2[None, :])
        cm = g.T @ lam[:, m]
        c[idx] = cm
        xdot[:, m] += g @ cm
        w = (lam[:, m][:, None] * g * cm[None, :]) * inv_tau2[None, :]
        ldot += np.einsum("nj,njk->nk", w, diff)
    return c, xdot, ldot


def _rhs_arrays(system: LandmarkSystem, t: float, x: Array,
                lam: Array) -> tuple[Array, Array, Array]:
    if system._groups is not None:
        c, xdot, ldot = _fused_terms(system, x, lam)
        xdot = xdot + system.drift_values(t, x)
    else:
        vals = system.field_values(x)           # (J, n, i)
        grads = system.field_grads(x)           # (J, n, i, k)
        c = np.einsum("jri,ri->j", vals, lam)
        xdot = system.drift_values(t, x) + np.einsum("j,jrk->rk", c, vals)
        ldot = -np.einsum("ri,j,jrik->rk", lam, c, grads)
    if not system._drift_const_x:
        ldot = ldot - np.einsum("ri,rik->rk", lam, system.drift_jacobians(t, x))
    return xdot, ldot, c


def _packed_rhs(system: LandmarkSystem, t: float, y: Array) -> Array:
    n, d = system.n, system.d
    x = y[:n * d].reshape(n, d)
    lam = y[n * d:].reshape(n, d)
    xdot, ldot, _ = _rhs_arrays(system, t, x, lam)
    return np.concatenate([xdot.ravel(), ldot.ravel()])


def landmark_hamiltonian(system: LandmarkSystem, t: float, x: Array,
                         lam: Array) -> float:
    c = controls(system, x, lam)
    a = system.drift_values(t, x)
    return float(0.5 * c @ c + np.einsum("ri,ri->", lam, a))


def integrate_landmarks(system: LandmarkSystem, x0: Array,
                        lam0: Array) -> Trajectory:
    """RK4 trajectory of positions and covectors; records c_a and energy."""
    n, d = system.n, system.d
    x0 = np.asarray(x0, dtype=float).reshape(n, d)
    lam0 = np.asarray(lam0, dtype=float).reshape(n, d)
    system.validate_coverage(x0)
    times = system.times

    def hook(i, t, y):
        if not np.all(np.isfinite(y)) or np.abs(y).max() > OVERFLOW_GUARD:
            raise NonFiniteState(f"landmark state blew up at t={t:.6g}")
        return None

    y0 = np.concatenate([x0.ravel(), lam0.ravel()])
    ys, _ = rk4_path(lambda t, y: _packed_rhs(system, t, y), times, y0,
                     node_hook=hook)

    states = []
    cs = np.empty((len(times), system.rank))
    ham = np.empty(len(times))
    for i, t in enumerate(times):
        x = ys[i, :n * d].reshape(n, d)
        lam = ys[i, n * d:].reshape(n, d)
        c = controls(system, x, lam)
        cs[i] = c
        a = system.drift_values(t, x)
        ham[i] = float(0.5 * c @ c + np.einsum("ri,ri->", lam, a))
        states.append(LandmarkState(x=x, lam=lam, c=c))

    integrand = 0.5 * np.einsum("tj,tj->t", cs, cs)
    energy = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))])
    diag = {
        "c": cs,
        "hamiltonian": ham,
        "hamiltonian_drift": float(np.abs(ham - ham[0]).max() / max(1.0, abs(ham[0]))),
    }
    return Trajectory(times=times, states=states, energy=energy, diagnostics=diag)


def drift_flow(system: LandmarkSystem, x0: Array) -> Trajectory:
    """Pure drift motion (lam = 0, all controls vanish)."""
    return integrate_landmarks(system, x0, np.zeros((system.n, system.d)))


def _final_positions(system: LandmarkSystem, x0: Array, lam0: Array) -> Array:
    """Endpoint of the flow without per-node diagnostics (shooting hot path)."""
    n, d = system.n, system.d
    y0 = np.concatenate([np.asarray(x0, dtype=float).ravel(),
                         np.asarray(lam0, dtype=float).ravel()])
    ys, _ = rk4_path(lambda t, y: _packed_rhs(system, t, y), system.times, y0)
    return ys[-1, :n * d].reshape(n, d)


def _batched_rhs(system: LandmarkSystem, t: float, y: Array) -> Array:
    """Vectorized rhs over a batch of states, shape (B, 2 n d)."""
    b = y.shape[0]
    n, d = system.n, system.d
    x = y[:, :n * d].reshape(b, n, d)
    lam = y[:, n * d:].reshape(b, n, d)
    xdot = np.empty_like(x)
    ldot = np.zeros_like(x)
    xdot[:] = system.drift_values(t, x[0])[None, :, :]  # drift is x-constant here
    if system._shared_kernel is not None:
        centers, inv_tau2, dir_idx = system._shared_kernel
        diff = x[:, :, None, :] - centers[None, None, :, :]      # (B, n, K, d)
        r2 = (diff * diff).sum(axis=3)
        g = np.exp(-0.5 * r2 * inv_tau2[None, None, :])
        wsum = np.zeros_like(g)
        for m, idx in dir_idx:
            cm = np.einsum("bnj,bn->bj", g, lam[:, :, m])
            xdot[:, :, m] += np.einsum("bnj,bj->bn", g, cm)
            wsum += lam[:, :, m, None] * cm[:, None, :]
        w = wsum * g * inv_tau2[None, None, :]
        ldot += np.einsum("bnj,bnjd->bnd", w, diff)
    else:
        for m, idx, centers, inv_tau2 in system._groups:
            diff = x[:, :, None, :] - centers[None, None, :, :]  # (B, n, Jm, d)
            g = np.exp(-0.5 * np.einsum("bnjd,bnjd->bnj", diff, diff)
                       * inv_tau2[None, None, :])
            cm = np.einsum("bnj,bn->bj", g, lam[:, :, m])
            xdot[:, :, m] += np.einsum("bnj,bj->bn", g, cm)
            w = (lam[:, :, m, None] * g * cm[:, None, :]) * inv_tau2[None, None, :]
            ldot += np.einsum("bnj,bnjd->bnd", w, diff)
    return np.concatenate([xdot.reshape(b, -1), ldot.reshape(b, -1)], axis=1)


def _final_positions_batch(system: LandmarkSystem, x0: Array,
                           lam0s: Array) -> Array:
    """Endpoints for a batch of initial covectors (fused Gaussian systems
    with spatially-constant drift only)."""
    nb = lam0s.shape[0]
    n, d = system.n, system.d
    x0 = np.asarray(x0, dtype=float).reshape(n, d)
    y = np.concatenate([np.repeat(x0.ravel()[None, :], nb, axis=0),
                        lam0s.reshape(nb, -1)], axis=1)
    times = system.times
    for i in range(len(times) - 1):
        t = times[i]
        h = times[i + 1] - t
        k1 = _batched_rhs(system, t, y)
        k2 = _batched_rhs(system, t + 0.5 * h, y + 0.5 * h * k1)
        k3 = _batched_rhs(system, t + 0.5 * h, y + 0.5 * h * k2)
        k4 = _batched_rhs(system, t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.abs(y).max() > OVERFLOW_GUARD:
            raise NonFiniteState(f"batched landmark state blew up at t={t:.6g}")
    return y[:, :n * d].reshape(nb, n, d)


# ---------------------------------------------------------------------------
# boundary value problem


def shoot_guess(system: LandmarkSystem, x0: Array, targets: Array) -> Array:
    """Flat-space heuristic: (targets - drift endpoints) / T, scaled by the
    inverse local field energy, clipped to [1e-3, 1e3]."""
    flow = drift_flow(system, x0)
    endpoints = flow.states[-1].x
    gap = (np.asarray(targets, dtype=float) - endpoints) / system.horizon
    vals = system.field_values(np.asarray(x0, dtype=float))  # (J, n, d)
    local = np.einsum("jrk,jrk->r", vals, vals)              # sum_a |sigma_a(o_r)|^2
    scale = np.clip(1.0 / np.maximum(local, 1e-300), 1e-3, 1e3)
    return gap * scale[:, None]


def landmark_shoot(system: LandmarkSystem, x0: Array, targets: Array,
                   lam0_guess: Array | None = None,
                   config: ShootingConfig | None = None
                   ) -> tuple[ShootingResult, Trajectory]:
    """Newton shooting over lam_0; residual = final positions - targets."""
    n, d = system.n, system.d
    x0 = np.asarray(x0, dtype=float).reshape(n, d)
    targets = np.asarray(targets, dtype=float).reshape(n, d)
    system.validate_coverage(x0)

    if system.rank == 0:
        flow = drift_flow(system, x0)
        resid = flow.states[-1].x - targets
        if np.abs(resid).max() < 1e-10:
            return (ShootingResult(np.zeros(n * d), float(np.linalg.norm(resid)),
                                   0, True), flow)
        raise NonConvergence(
            "no noise fields: targets are reachable only along the drift flow",
            best=np.zeros(n * d), residual_norm=float(np.linalg.norm(resid)))

    def make_problem(sys_level: LandmarkSystem) -> ShootingProblem:
        def residual(u):
            return (_final_positions(sys_level, x0, u.reshape(n, d)) - targets).ravel()

        residual_batch = None
        if sys_level._groups is not None and sys_level._drift_const_x:
            def residual_batch(us):
                ends = _final_positions_batch(sys_level, x0, us.reshape(-1, n, d))
                return ends.reshape(-1, n * d) - targets.ravel()[None, :]

        return ShootingProblem(n * d, residual, residual_batch=residual_batch)

    guess = shoot_guess(system, x0, targets) if lam0_guess is None \
        else np.asarray(lam0_guess, dtype=float).reshape(n, d)
    config = config or ShootingConfig(tol=1e-8)

    # grid continuation: solve on a coarse grid first, then polish on the
    # full grid from the warm start (the inter-grid solution gap is O(h^4))
    levels = [system.steps]
    if n * d > 8 and system.steps >= 200:
        levels = [max(system.steps // 4, 50), system.steps]
    u = guess.ravel()
    result = None
    total_iters = 0
    try:
        for li, nsteps in enumerate(levels):
            sys_level = system if nsteps == system.steps else LandmarkSystem(
                n, d, system.fields, drift=system.drift,
                horizon=system.horizon, steps=nsteps)
            problem = make_problem(sys_level)
            last = li == len(levels) - 1
            # the coarse pass is a warm-start producer: no multi-start there,
            # and stagnation is acceptable
            level_cfg = config if last else ShootingConfig(
                tol=max(config.tol, 1e-9), max_iter=min(config.max_iter, 40),
                fd_step=config.fd_step, restarts=(),
                seed=config.seed, threads=config.threads)
            try:
                result = solve(problem, u, level_cfg)
                u = result.unknowns
                total_iters += result.iterations
            except NonConvergence as exc:
                if last:
                    raise
                total_iters += exc.iterations
                u = np.asarray(exc.best, dtype=float)  # continue on the fine grid
    except SingularJacobian as exc:
        raise RankDeficient(
            f"shooting Jacobian near-singular (cond {exc.cond:.3e}): "
            "configuration is close to a singular curve") from exc
    result.iterations = total_iters
    traj = integrate_landmarks(system, x0, result.unknowns.reshape(n, d))
    return result, traj


# ---------------------------------------------------------------------------
# singular-curve certificate


def landmark_singular_check(system: LandmarkSystem,
                            trajectory: Trajectory) -> tuple[float, bool]:
    """Smallest singular value of the annihilator map along a trajectory.

    Freezes the controls c_a(t) from the trajectory, propagates the linear
    covector equation lam_dot_r = -M_r(t)^T lam_r per landmark (M_r the
    spatial gradient of the frozen velocity field), and assembles the map
    lam_0 -> (sum_r lam_{r,t}(sigma_a(x_{r,t})))_{a,t} over the grid.
    """
    n, d = system.n, system.d
    times = trajectory.times
    cs = trajectory.diagnostics["c"]
    xs = np.array([s.x for s in trajectory.states])

    nt = len(times)
    # fundamental matrices per landmark: Phi_r(t) in R^{d x d}, lam_r = Phi_r lam_r0
    phis = np.tile(np.eye(d), (n, 1, 1))
    rows = np.empty((nt, system.rank, n * d))

    from .odeint import rk4_step

    def rhs(t, y):
        # controls and positions frozen from the trajectory, interpolated
        # linearly inside each step (the grid is uniform)
        ph = y.reshape(n, d, d)
        if nt == 1:
            c, x = cs[0], xs[0]
        else:
            tt = np.clip((t - times[0]) / (times[-1] - times[0]) * (nt - 1), 0, nt - 1)
            i0 = min(int(tt), nt - 2)
            w = tt - i0
            c = (1 - w) * cs[i0] + w * cs[i0 + 1]
            x = (1 - w) * xs[i0] + w * xs[i0 + 1]
        grads = system.field_grads(x)       # (J, r, i, k)
        m = np.einsum("j,jrik->rik", c, grads) + system.drift_jacobians(t, x)
        return -np.einsum("rik,rid->rkd", m, ph).ravel()

    y = phis.ravel()
    for i in range(nt):
        ph = y.reshape(n, d, d)
        vals = system.field_values(xs[i])       # (J, r, i)
        # row block: lam_0 -> sum_r sigma^i_a(x_r) (Phi_r lam_r0)^i
        rows[i] = np.einsum("jri,rid->jrd", vals, ph).reshape(system.rank, n * d)
        if i + 1 < nt:
            y = rk4_step(rhs, times[i], y, times[i + 1] - times[i])

    amap = rows.reshape(-1, n * d)
    fro = np.linalg.norm(amap)
    if fro == 0.0:
        return 0.0, True
    smin = float(np.linalg.svd(amap, compute_uv=False)[-1])
    return smin, bool(smin <= SINGULAR_RTOL * fro)

"""General coordinate MPP system, Onsager-Machlup energy, the constant-tensor
(locally homogeneous) reduction, and the singular-curve certificate.

State layout for the general system (chart dimension d, horizontal rank J):

* ``x``     chart point, (d,)
* ``frame`` parallel frame matrix, (d, d), columns 0..J-1 horizontal
* ``lam``   frame components of the costate one-form, (d,)
* ``chi``   strictly-upper entries of the antisymmetric J x J bivector
            component matrix, (J(J-1)/2,)

The costate/bivector equations, written in the parallel frame:

    lam_dot_r = -lam(nabla_{f_r} u) - lam(T(x_dot, f_r)) + K_r
    K_r       = sum_{a,b} chi^{ab} <R(x_dot, f_r) f_a, f_b>_g
    chi_dot   = (1/2) (Sigma lam_E wedge lam_E)   componentwise

The curvature pairing contracts the output slot of R with the *coframe*
rows of the horizontal block, which realizes the g-inner product for the
transported orthonormal frame. chi carries terminal condition chi_T = 0,
enforced by the boundary-value residual, not here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FrameDegenerate, NotHorizontal, PathLeavesChart
from .geometry import (CovarianceSchedule, CurvePath, DriftModel,
                       ManifoldModel, transport_frame)
from .linalg import pack_upper, small_inv, unpack_upper, upper_size
from .odeint import rk4_path, uniform_grid

Array = np.ndarray

HORIZONTAL_RTOL = 1e-6
SINGULAR_RTOL = 1e-8
FRAME_DET_FLOOR = 1e-10


@dataclass
class MPPState:
    """Instantaneous state of the general MPP system."""

    x: Array
    frame: Array
    lam: Array
    chi: Array  # strictly-upper vector, length J(J-1)/2

    def chi_matrix(self, rank: int) -> Array:
        return unpack_upper(self.chi, rank)


@dataclass
class MPPProblem:
    """Process data (connection, covariance, drift, base point, horizon)."""

    model: ManifoldModel
    drift: DriftModel
    sigma: CovarianceSchedule
    horizon: float = 1.0
    start: Array | None = None
    steps: int = 1000

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.sigma.rank != self.model.sr_rank:
            raise ValueError("covariance rank must equal the model's sr_rank")
        if self.start is None:
            self.start = self.model.origin
        self.start = np.asarray(self.start, dtype=float)
        if np.linalg.norm(self.start - self.model.origin) > 1e-12:
            raise ValueError("general system starts at the model origin "
                             "(frame0 is anchored there)")
        if not self.model.chart_domain(self.start):
            raise ValueError("start point outside chart domain")
        if np.linalg.norm(self.model.metric_e - np.eye(self.model.sr_rank)) > 1e-12:
            raise ValueError("MPP engine expects an orthonormal horizontal frame "
                             "(metric_e = I); re-express the frame first")

    @property
    def times(self) -> Array:
        return uniform_grid(self.horizon, self.steps)


@dataclass
class Trajectory:
    """Grid, per-node states, running energy and solver diagnostics."""

    times: Array
    states: list
    energy: Array
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states) or len(self.times) != len(self.energy):
            raise ValueError("trajectory arrays must share the grid length")
        if np.any(np.diff(self.energy) < -1e-12):
            raise ValueError("running energy must be non-decreasing")

    @property
    def final_state(self):
        return self.states[-1]


# ---------------------------------------------------------------------------
# packing helpers


def _pack(state: MPPState) -> Array:
    return np.concatenate([state.x, state.frame.ravel(), state.lam, state.chi])


def _unpack(y: Array, d: int, j: int) -> MPPState:
    m = upper_size(j)
    x = y[:d]
    frame = y[d:d + d * d].reshape(d, d)
    lam = y[d + d * d:2 * d + d * d]
    chi = y[2 * d + d * d:2 * d + d * d + m]
    return MPPState(x=x, frame=frame, lam=lam, chi=chi)


def _rhs_packed(problem: MPPProblem, t: float, y: Array) -> Array:
    model, drift, sigma = problem.model, problem.drift, problem.sigma
    d, j = model.dim, model.sr_rank
    st = _unpack(y, d, j)
    x, f, lam = st.x, st.frame, st.lam

    sig = sigma.value(t)
    u = np.asarray(drift.value(t, x), dtype=float)
    gam = model.christoffel(x)
    tor = model.torsion(x)

    lam_e = lam[:j]
    s = sig @ lam_e
    xdot = u + f[:, :j] @ s
    # fdot[k, r] = -gam[k, i, j] xdot_i f[j, r]
    gx = np.tensordot(gam, xdot, axes=(1, 0))  # (k, j)
    fdot = -(gx @ f)

    det = np.linalg.det(f)
    if abs(det) < 1e-300 or not np.isfinite(det):
        raise FrameDegenerate(f"frame singular at t={t:.6g}")
    fc = small_inv(f)
    lamc = lam @ fc  # coordinate components lam(d_k)

    lamdot = np.zeros(d)
    du = np.asarray(drift.jacobian(t, x), dtype=float)
    if u.any() or du.any():
        covu = du + np.tensordot(gam, u, axes=(2, 0))
        lamdot -= (lamc @ covu) @ f
    if tor.any():
        tl = np.tensordot(lamc, tor, axes=(0, 0))  # (i, j)
        lamdot -= (xdot @ tl) @ f
    if st.chi.size and st.chi.any():
        chi_mat = unpack_upper(st.chi, j)
        rcurv = model.curvature(x)
        # K_r = chi^{ab} <R(xdot, f_r) f_a, f_b>_g with the coframe pairing
        rx = np.tensordot(rcurv, xdot, axes=(1, 0))      # (l, j', k)
        p = np.tensordot(rx, f[:, :j], axes=(2, 0))      # (l, j', a)
        q = np.tensordot(fc[:j, :], p, axes=(1, 0))      # (b, j', a)
        kv = np.einsum("ab,bja->j", chi_mat, q)          # coordinate slot j'
        lamdot += kv @ f

    chidot = 0.5 * (np.outer(s, lam_e) - np.outer(lam_e, s))
    return np.concatenate([xdot, fdot.ravel(), lamdot, pack_upper(chidot)])


def mpp_rhs(problem: MPPProblem, t: float, state: MPPState) -> MPPState:
    """Time derivative of the general system as an MPPState-shaped bundle."""
    d, j = problem.model.dim, problem.model.sr_rank
    return _unpack(_rhs_packed(problem, t, _pack(state)), d, j)


def initial_state(problem: MPPProblem, lam0: Array, chi0: Array | None = None) -> MPPState:
    j = problem.model.sr_rank
    m = upper_size(j)
    lam0 = np.asarray(lam0, dtype=float)
    if lam0.shape != (problem.model.dim,):
        raise ValueError(f"lam0 must have shape ({problem.model.dim},)")
    if chi0 is None:
        chi = np.zeros(m)
    else:
        chi0 = np.asarray(chi0, dtype=float)
        chi = pack_upper(chi0) if chi0.ndim == 2 else chi0.copy()
    if chi.shape != (m,):
        raise ValueError(f"chi0 must pack to shape ({m},)")
    return MPPState(x=problem.start.copy(), frame=problem.model.frame0.copy(),
                    lam=lam0.copy(), chi=chi)


def hamiltonian(problem: MPPProblem, t: float, state: MPPState) -> float:
    """H = 1/2 <Sigma lam_E, lam_E> + lam(u); constant for autonomous data."""
    j = problem.model.sr_rank
    lam_e = state.lam[:j]
    u = problem.drift.value(t, state.x)
    lamc = state.lam @ np.linalg.inv(state.frame)
    return float(0.5 * lam_e @ problem.sigma.value(t) @ lam_e + lamc @ u)


def integrate_forward(problem: MPPProblem, lam0: Array,
                      chi0: Array | None = None) -> Trajectory:
    """RK4 trajectory of the general system from (o, frame0, lam0, chi0)."""
    model = problem.model
    d, j = model.dim, model.sr_rank
    times = problem.times
    y0 = _pack(initial_state(problem, lam0, chi0))
    det0 = abs(np.linalg.det(model.frame0))

    def hook(i, t, y):
        st = _unpack(y, d, j)
        if not model.chart_domain(st.x):
            raise PathLeavesChart(t, st.x)
        if abs(np.linalg.det(st.frame)) < FRAME_DET_FLOOR * det0:
            raise FrameDegenerate(f"frame determinant collapsed at t={t:.6g}")
        return None

    ys, ders = rk4_path(lambda t, y: _rhs_packed(problem, t, y), times, y0,
                        node_hook=hook)
    states = [_unpack(y, d, j) for y in ys]

    integrand = np.array([
        0.5 * s.lam[:j] @ problem.sigma.value(t) @ s.lam[:j]
        for t, s in zip(times, states)
    ])
    energy = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))])

    ham = np.array([hamiltonian(problem, t, s) for t, s in zip(times, states)])
    chi_norm = np.array([np.linalg.norm(s.chi) for s in states])
    diag = {
        "hamiltonian": ham,
        "hamiltonian_drift": float(np.abs(ham - ham[0]).max()
                                   / max(1.0, abs(ham[0]))),
        "chi_norm_max": float(chi_norm.max()) if len(chi_norm) else 0.0,
        "frame_det_min": float(min(abs(np.linalg.det(s.frame)) for s in states)),
        "xdot": ders[:, :d].copy(),
        "max_constraint_violation": float(np.abs(ham - ham[0]).max()),
    }
    return Trajectory(times=times, states=states, energy=energy, diagnostics=diag)


def trajectory_path(traj: Trajectory) -> CurvePath:
    """Chart curve of an engine trajectory, with node velocities attached."""
    pts = np.array([s.x for s in traj.states])
    vels = traj.diagnostics.get("xdot")
    return CurvePath(traj.times, pts, None if vels is None else vels.copy())


def shoot_to_point(problem: MPPProblem, target_chart: Array,
                   lam0_guess: Array | None = None,
                   chi0_guess: Array | None = None,
                   config=None):
    """Two-point BVP for the general system: unknowns (lam_0, chi_0),
    residual (chart endpoint mismatch, chi_T). Returns (result, trajectory).

    Solves on a coarse grid first and polishes on the full grid from the
    warm start (one or two Newton steps; the inter-grid solution gap is
    O(h^4)).
    """
    from .errors import NonConvergence
    from .shooting import ShootingConfig, ShootingProblem, solve

    d, j = problem.model.dim, problem.model.sr_rank
    m = upper_size(j)
    target_chart = np.asarray(target_chart, dtype=float)
    config = config or ShootingConfig(tol=1e-10)

    def make_problem(prob_level):
        def residual(u):
            traj = integrate_forward(prob_level, u[:d], u[d:])
            return np.concatenate([traj.states[-1].x - target_chart,
                                   traj.states[-1].chi])
        return ShootingProblem(d + m, residual)

    guess = np.zeros(d + m)
    if lam0_guess is not None:
        guess[:d] = np.asarray(lam0_guess, dtype=float)
    else:
        # flat-space heuristic through the frame at the origin
        gap = (target_chart - problem.start) / problem.horizon
        lam_e = problem.sigma.inv(0.0) @ np.linalg.lstsq(
            problem.model.frame0[:, :j], gap, rcond=None)[0]
        guess[:j] = lam_e
    if chi0_guess is not None:
        guess[d:] = np.asarray(chi0_guess, dtype=float)

    levels = [problem.steps]
    if problem.steps >= 200:
        levels = [max(problem.steps // 4, 50), problem.steps]
    u = guess
    result = None
    total_iters = 0
    for li, nsteps in enumerate(levels):
        prob_level = problem if nsteps == problem.steps else MPPProblem(
            problem.model, problem.drift, problem.sigma,
            horizon=problem.horizon, start=problem.start, steps=nsteps)
        last = li == len(levels) - 1
        level_cfg = config if last else ShootingConfig(
            tol=max(config.tol, 1e-9), max_iter=min(config.max_iter, 40),
            fd_step=config.fd_step, restarts=(), seed=config.seed,
            threads=config.threads)
        try:
            result = solve(make_problem(prob_level), u, level_cfg)
            u = result.unknowns
            total_iters += result.iterations
        except NonConvergence as exc:
            if last:
                raise
            total_iters += exc.iterations
            u = np.asarray(exc.best, dtype=float)
    result.iterations = total_iters
    traj = integrate_forward(problem, result.unknowns[:d], result.unknowns[d:])
    return result, traj


# ---------------------------------------------------------------------------
# Onsager-Machlup energy


def om_energy(model: ManifoldModel, sigma: CovarianceSchedule, drift: DriftModel,
              path: CurvePath, htol: float = HORIZONTAL_RTOL) -> float:
    """Cameron-Martin energy of the anti-development, trapezoidal on the grid.

    Raises NotHorizontal when gamma_dot - u leaves the span of the transported
    horizontal frame by more than ``htol`` (relative).
    """
    d, j = model.dim, model.sr_rank
    if np.linalg.norm(path.points[0] - model.origin) > 1e-9:
        raise ValueError("path must start at the model origin")
    frames = transport_frame(model, path, reorth_every=None)
    vels = path.ensure_velocities()
    me = model.metric_e
    vals = np.empty(len(path.times))
    for i, t in enumerate(path.times):
        w = vels[i] - np.asarray(drift.value(t, path.points[i]), dtype=float)
        om_dot = np.linalg.solve(frames.frames[i], w)
        scale = max(np.linalg.norm(om_dot), 1e-30)
        resid = np.linalg.norm(om_dot[j:]) / scale
        if resid > htol:
            raise NotHorizontal(t, resid, htol)
        q = sigma.inv_sqrt(t) @ om_dot[:j]
        vals[i] = 0.5 * q @ me @ q
    from scipy.integrate import trapezoid
    return float(trapezoid(vals, path.times))


# ---------------------------------------------------------------------------
# singular-curve certificate


def singularity_certificate(model: ManifoldModel, drift: DriftModel,
                            path: CurvePath,
                            htol: float = HORIZONTAL_RTOL) -> tuple[float, bool]:
    """Smallest singular value of the annihilator-propagation map.

    Propagates D/dt lam + lam(nabla u) + lam(T(gamma_dot, .)) = 0 from a basis
    of Ann(E) at the path start and measures how small the horizontal
    restriction (lam_t(f_alpha))_{alpha<=J, t in grid} can be made. Full-rank
    models have no annihilator and report (inf, False) immediately.
    """
    d, j = model.dim, model.sr_rank
    if j == d:
        return float("inf"), False
    frames = transport_frame(model, path, reorth_every=None)
    vels = path.ensure_velocities()

    # horizontality precondition
    for i, t in enumerate(path.times):
        w = vels[i] - np.asarray(drift.value(t, path.points[i]), dtype=float)
        om_dot = np.linalg.solve(frames.frames[i], w)
        scale = np.linalg.norm(om_dot)
        if scale > 1e-12 and np.linalg.norm(om_dot[j:]) / scale > htol:
            raise NotHorizontal(t, np.linalg.norm(om_dot[j:]) / scale, htol)

    nann = d - j

    def rhs(t, y):
        lams = y.reshape(nann, d)
        x = path.point(t)
        xd = path.velocity(t)
        fmat = frames.frame(t)
        fc = np.linalg.inv(fmat)
        gam = model.christoffel(x)
        tor = model.torsion(x)
        u = np.asarray(drift.value(t, x), dtype=float)
        du = np.asarray(drift.jacobian(t, x), dtype=float)
        covu = du + np.einsum("kij,j->ki", gam, u)
        out = np.empty_like(lams)
        for b in range(nann):
            lamc = lams[b] @ fc
            out[b] = -(np.einsum("k,ki,ir->r", lamc, covu, fmat)
                       + np.einsum("k,kij,i,jr->r", lamc, tor, xd, fmat))
        return out.ravel()

    lam_basis0 = np.zeros((nann, d))
    for b in range(nann):
        lam_basis0[b, j + b] = 1.0  # coframe rows J..d-1 annihilate E_o

    ys, _ = rk4_path(rhs, path.times, lam_basis0.ravel())
    # rows: horizontal components at every node, columns: basis coefficients
    amap = ys.reshape(len(path.times), nann, d)[:, :, :j]
    amap = amap.transpose(0, 2, 1).reshape(-1, nann)
    fro = np.linalg.norm(amap)
    if fro == 0.0:
        return 0.0, True
    smin = float(np.linalg.svd(amap, compute_uv=False)[-1])
    return smin, bool(smin <= SINGULAR_RTOL * fro)


# ---------------------------------------------------------------------------
# locally homogeneous reduction (all tensors parallel, solved at the origin)


def homogeneous_reduction_rhs(torsion0: Array | None, curvature0: Array | None,
                              a_fn: Callable[[float], Array] | None,
                              sigma: CovarianceSchedule, t: float,
                              alpha: Array, chi: Array) -> tuple[Array, Array, Array]:
    """Constant-coefficient MPP system in the fixed tangent space at o.

    Returns (alpha_dot, chi_dot_upper, v) where v = Sigma #alpha + a_t is the
    anti-developed velocity; the position is recovered by developing v.
    """
    alpha = np.asarray(alpha, dtype=float)
    d = alpha.size
    j = sigma.rank
    sig = sigma.value(t)
    a = np.zeros(d) if a_fn is None else np.asarray(a_fn(t), dtype=float)
    s = sig @ alpha[:j]
    v = a.copy()
    v[:j] += s

    adot = np.zeros(d)
    if torsion0 is not None:
        adot -= np.einsum("k,kij,i->j", alpha, torsion0, v)
    chi_mat = unpack_upper(chi, j)
    if curvature0 is not None and chi.size:
        adot += np.einsum("ab,i,bija->j", chi_mat, v,
                          curvature0[:j, :, :, :j])
    chidot = 0.5 * (np.outer(s, alpha[:j]) - np.outer(alpha[:j], s))
    return adot, pack_upper(chidot), v


def integrate_homogeneous_reduction(torsion0, curvature0, a_fn,
                                    sigma: CovarianceSchedule, alpha0: Array,
                                    chi0: Array | None, horizon: float,
                                    steps: int):
    """Integrate the reduction; returns (times, alphas, chis, omega)."""
    alpha0 = np.asarray(alpha0, dtype=float)
    d = alpha0.size
    j = sigma.rank
    m = upper_size(j)
    chi0 = np.zeros(m) if chi0 is None else np.asarray(chi0, dtype=float)
    times = uniform_grid(horizon, steps)

    def rhs(t, y):
        adot, cdot, v = homogeneous_reduction_rhs(
            torsion0, curvature0, a_fn, sigma, t, y[:d], y[d:d + m])
        return np.concatenate([adot, cdot, v])

    y0 = np.concatenate([alpha0, chi0, np.zeros(d)])
    ys, _ = rk4_path(rhs, times, y0)
    return times, ys[:, :d], ys[:, d:d + m], ys[:, d + m:]

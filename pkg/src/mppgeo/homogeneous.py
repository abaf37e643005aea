"""MPPs on homogeneous spaces as projections of lifted group solutions,
instantiated for the sphere as a quotient of the rotation group.

The group carries the left-invariant convention here: gamma_dot = gamma z_t,
alpha_dot = (ad z_t)^* alpha, with z_t = Sigma #alpha + lifted drift and
alpha_0 vanishing on the stabilizer subalgebra. The sphere projection is
gamma -> gamma e_1, matching the stereographic chart of the sphere preset
(chart origin at ambient (1, 0, 0)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import Trajectory
from .errors import LiftDegenerate, NonFiniteState
from .geometry import CovarianceSchedule
from .liegroup import LieGroupModel, so3_model
from .odeint import OVERFLOW_GUARD, rk4_path, uniform_grid
from .presets import sphere_from_ambient, sphere_to_ambient
from .shooting import ShootingConfig, ShootingProblem, ShootingResult, solve

Array = np.ndarray

ORTHO_TOL = 1e-12


@dataclass
class HomogeneousModel:
    """Lifted structure for N = G/K: splitting, projection, drift lift."""

    group: LieGroupModel
    k_indices: tuple
    p_indices: tuple
    sigma: CovarianceSchedule
    project: Callable[[Array], Array]            # gamma -> point on N (ambient)
    lift_drift: Callable[[float, Array], Array] | None = None  # -> p-components
    to_chart: Callable[[Array], Array] | None = None
    from_chart: Callable[[Array], Array] | None = None

    def __post_init__(self):
        self.k_indices = tuple(self.k_indices)
        self.p_indices = tuple(self.p_indices)
        d = self.group.dim
        if sorted(self.k_indices + self.p_indices) != list(range(d)):
            raise ValueError("k and p indices must partition the basis")
        if self.sigma.rank != len(self.p_indices):
            raise ValueError("sigma rank must match dim(p)")
        if self.group.invariance != "left":
            raise ValueError("homogeneous lift uses the left-invariant convention")
        inner = self.group.inner
        off = inner[np.ix_(list(self.p_indices), list(self.k_indices))]
        if np.abs(off).max() > ORTHO_TOL:
            raise ValueError("p must be the orthogonal complement of k")
        self._check_adk_invariance()

    def _check_adk_invariance(self):
        # <[A_a, X], Y> + <X, [A_a, Y]> = 0 for every stabilizer generator A_a
        c, inner = self.group.structure, self.group.inner
        for a in self.k_indices:
            ada = c[:, a, :]  # ada[m, i] = coeff of A_m in [A_a, A_i]
            r = ada.T @ inner + inner @ ada
            if np.abs(r).max() > ORTHO_TOL:
                raise ValueError("inner product is not Ad(K)-invariant")

    def embed_p(self, vec_p: Array) -> Array:
        out = np.zeros(self.group.dim)
        out[list(self.p_indices)] = vec_p
        return out

    def alpha_p(self, alpha: Array) -> Array:
        return np.asarray(alpha, dtype=float)[list(self.p_indices)]


def sphere_homogeneous_model(sigma: CovarianceSchedule | None = None,
                             base_drift: Callable[[float, Array], Array] | None = None
                             ) -> HomogeneousModel:
    """Rotation group over the sphere; stabilizer of e_1 is spanned by A_1.

    ``base_drift(t, P)`` is an ambient-coordinate vector field on the sphere
    (tangentially projected before lifting).
    """
    group = so3_model(invariance="left")
    model = HomogeneousModel(
        group=group,
        k_indices=(0,),
        p_indices=(1, 2),
        sigma=sigma if sigma is not None else CovarianceSchedule.isotropic(2),
        project=lambda g: g @ np.array([1.0, 0.0, 0.0]),
        to_chart=sphere_from_ambient,
        from_chart=sphere_to_ambient,
    )
    if base_drift is not None:
        model.lift_drift = lift_drift_field(model, base_drift)
    return model


# ---------------------------------------------------------------------------
# drift lift


def lift_drift_field(model: HomogeneousModel,
                     field: Callable[[float, Array], Array]
                     ) -> Callable[[float, Array], Array]:
    """Horizontal lift of a base vector field, returned in p-components.

    Solves d(pi)(gamma A) = field(pi(gamma)) for A in p via least squares on
    the p-basis columns; the solve is guarded by a LiftDegenerate error even
    though it cannot trigger for the sphere instance.
    """
    group = model.group
    p_idx = list(model.p_indices)
    basepoint = np.array([1.0, 0.0, 0.0])

    def lifted(t: float, gamma: Array) -> Array:
        p = model.project(gamma)
        v = np.asarray(field(t, p), dtype=float)
        v = v - (v @ p) * p  # tangential projection
        w = gamma.T @ v
        cols = np.stack([group.rep[i] @ basepoint for i in p_idx], axis=1)
        sol, res, rank, sv = np.linalg.lstsq(cols, w, rcond=None)
        if rank < len(p_idx) or sv[-1] < 1e-10 * max(sv[0], 1e-300):
            raise LiftDegenerate(
                f"projection differential restricted to p is singular at t={t:.6g}")
        if np.linalg.norm(cols @ sol - w) > 1e-8 * max(1.0, np.linalg.norm(w)):
            raise LiftDegenerate("base vector is not in the image of d(pi) on p")
        return sol

    return lifted


# ---------------------------------------------------------------------------
# dynamics


def hom_mpp_rhs(model: HomogeneousModel, t: float, gamma: Array,
                alpha: Array) -> tuple[Array, Array]:
    """(gamma_dot, alpha_dot): left-invariant lifted system on the group."""
    zp = model.sigma.value(t) @ model.alpha_p(alpha)
    z = model.embed_p(zp)
    if model.lift_drift is not None:
        z = z + _drift_vec(model, t, gamma)
    gdot = gamma @ model.group.rep_of(z)
    adot = model.group.ad(z).T @ alpha
    return gdot, adot


def _drift_vec(model: HomogeneousModel, t: float, gamma: Array) -> Array:
    return model.embed_p(np.asarray(model.lift_drift(t, gamma), dtype=float))


def integrate_homogeneous(model: HomogeneousModel, alpha0_p: Array,
                          horizon: float = 1.0, steps: int = 1000,
                          gamma0: Array | None = None,
                          project_every: int = 100) -> Trajectory:
    """RK4 on the joint (gamma, alpha) system with periodic group projection.

    alpha_0 is prescribed on p only (it vanishes on the stabilizer).
    Records the projected base path in chart and ambient coordinates.
    """
    group = model.group
    n = group.matrix_dim
    d = group.dim
    times = uniform_grid(horizon, steps)
    gamma0 = np.eye(n) if gamma0 is None else np.asarray(gamma0, dtype=float)
    alpha0 = model.embed_p(np.asarray(alpha0_p, dtype=float))

    def rhs(t, y):
        gamma = y[:n * n].reshape(n, n)
        alpha = y[n * n:]
        gdot, adot = hom_mpp_rhs(model, t, gamma, alpha)
        return np.concatenate([gdot.ravel(), adot])

    def hook(i, t, y):
        if not np.all(np.isfinite(y)) or np.abs(y).max() > OVERFLOW_GUARD:
            raise NonFiniteState(f"lifted state blew up at t={t:.6g}")
        if group.project is not None and i > 0 and i % project_every == 0:
            g = group.project(y[:n * n].reshape(n, n))
            return np.concatenate([g.ravel(), y[n * n:]])
        return None

    y0 = np.concatenate([gamma0.ravel(), alpha0])
    ys, _ = rk4_path(rhs, times, y0, node_hook=hook)

    from .liegroup import LieMPPState
    states = [LieMPPState(y[:n * n].reshape(n, n), y[n * n:]) for y in ys]
    integrand = np.array([
        0.5 * model.alpha_p(s.alpha) @ model.sigma.value(t) @ model.alpha_p(s.alpha)
        for t, s in zip(times, states)])
    energy = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))])
    base = np.array([model.project(s.gamma) for s in states])
    diag = {
        "base_ambient": base,
        "group_defect_max": float(max(group.defect(s.gamma) for s in states)),
    }
    if model.to_chart is not None:
        diag["base_chart"] = np.array([model.to_chart(p) for p in base])
    return Trajectory(times=times, states=states, energy=energy, diagnostics=diag)


# ---------------------------------------------------------------------------
# boundary value problem on the base


def sphere_shoot(model: HomogeneousModel, target, horizon: float = 1.0,
                 steps: int = 1000, config: ShootingConfig | None = None,
                 gamma0: Array | None = None
                 ) -> tuple[ShootingResult, Trajectory]:
    """Newton shooting over alpha_0 in p; residual in base chart coordinates.

    ``target`` is a chart point (2,) or an ambient point (3,).
    """
    target = np.asarray(target, dtype=float)
    if target.shape == (3,):
        target_chart = model.to_chart(target)
    else:
        target_chart = target

    def residual(u):
        traj = integrate_homogeneous(model, u, horizon, steps, gamma0=gamma0)
        endc = model.to_chart(traj.diagnostics["base_ambient"][-1])
        return endc - target_chart

    # log-map initial guess through the base geodesic
    o_amb = model.project(np.eye(model.group.matrix_dim))
    t_amb = model.from_chart(target_chart)
    cosang = float(np.clip(o_amb @ t_amb, -1.0, 1.0))
    ang = float(np.arccos(cosang))
    tang = t_amb - cosang * o_amb
    nt = np.linalg.norm(tang)
    if nt > 1e-12 and ang > 1e-12:
        v = (ang / horizon) * tang / nt
        guess = np.array([-v[2], v[1]])  # d(pi)(a A_2 + b A_3) = (0, b, -a)
    else:
        guess = np.zeros(2)
    guess = np.linalg.solve(model.sigma.value(0.0), guess)

    problem = ShootingProblem(2, residual)
    result = solve(problem, guess, config or ShootingConfig(tol=1e-8))
    traj = integrate_homogeneous(model, result.unknowns, horizon, steps, gamma0=gamma0)
    return result, traj


# ---------------------------------------------------------------------------
# shipped base drift fields (closed-form, ambient coordinates)


def rotation_field(axis, scale: float = 1.0) -> Callable[[float, Array], Array]:
    axis = np.asarray(axis, dtype=float)

    def field(t: float, p: Array) -> Array:
        return scale * np.cross(axis, p)

    return field


def ambient_constant_field(vec) -> Callable[[float, Array], Array]:
    """Constant ambient vector, tangentially projected by the lift."""
    vec = np.asarray(vec, dtype=float)

    def field(t: float, p: Array) -> Array:
        return vec

    return field

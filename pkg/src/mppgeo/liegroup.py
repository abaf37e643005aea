"""Lie-algebra reduction of the MPP equations, the singular criterion, and
the subgroup-invariant-metric system. Shipped presets: SO(3) and the
Heisenberg group.

Conventions: structure constants satisfy [A_i, A_j] = c^k_ij A_k with
``structure[k, i, j] = c^k_ij``; the leading ``sr_rank`` basis elements span
the horizontal subspace. With the default right-invariant convention the
momentum evolves by alpha_dot = -(ad z)^* alpha and the group element by
gamma_dot = rep(z) gamma; left invariance flips the ad sign and multiplies
the group increment from the right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .engine import Trajectory
from .errors import NotHorizontal, SplittingInvalid
from .geometry import CovarianceSchedule
from .linalg import hat, polar_project, rodrigues, vee
from .odeint import OVERFLOW_GUARD, rk4_step, uniform_grid
from .errors import NonFiniteState

Array = np.ndarray

STRUCTURE_TOL = 1e-12
SINGULAR_RTOL = 1e-8


@dataclass
class LieGroupModel:
    """Structure constants, matrix representation and horizontal metric data."""

    dim: int
    sr_rank: int
    structure: Array  # (d, d, d), [A_i, A_j] = structure[k, i, j] A_k
    rep: Array        # (d, n, n) matrix realization of the basis
    inner: Array | None = None
    drift: Callable[[float], Array] | None = None  # t -> a_t in the algebra
    sigma: CovarianceSchedule | None = None
    invariance: str = "right"
    exp_map: Callable[[Array], Array] | None = None   # algebra matrix -> group
    project: Callable[[Array], Array] | None = None   # re-projection to the group
    group_defect: Callable[[Array], float] | None = None
    name: str = "group"

    def __post_init__(self):
        d, j = self.dim, self.sr_rank
        self.structure = np.asarray(self.structure, dtype=float)
        self.rep = np.asarray(self.rep, dtype=float)
        if self.structure.shape != (d, d, d):
            raise ValueError("structure constants must be (d, d, d)")
        if self.rep.shape[0] != d or self.rep.shape[1] != self.rep.shape[2]:
            raise ValueError("rep must be (d, n, n)")
        if self.inner is None:
            self.inner = np.eye(d)
        self.inner = np.asarray(self.inner, dtype=float)
        if self.invariance not in ("right", "left"):
            raise ValueError("invariance must be 'right' or 'left'")
        if np.abs(self.structure + self.structure.transpose(0, 2, 1)).max() > STRUCTURE_TOL:
            raise ValueError("structure constants must be antisymmetric in (i, j)")
        self._check_jacobi()
        self._check_rep()

    def _check_jacobi(self):
        c = self.structure
        # sum_m c^m_ij c^l_mk + cyclic = 0
        t1 = np.einsum("mij,lmk->lijk", c, c)
        resid = t1 + t1.transpose(0, 2, 3, 1) + t1.transpose(0, 3, 1, 2)
        if np.abs(resid).max() > STRUCTURE_TOL:
            raise ValueError(f"Jacobi identity violated ({np.abs(resid).max():.2e})")

    def _check_rep(self):
        c, rep = self.structure, self.rep
        for i in range(self.dim):
            for j in range(self.dim):
                lhs = rep[i] @ rep[j] - rep[j] @ rep[i]
                rhs = np.einsum("k,kab->ab", c[:, i, j], rep)
                if np.abs(lhs - rhs).max() > 1e-12:
                    raise ValueError(
                        f"rep bracket mismatch on basis pair ({i}, {j})")

    @property
    def matrix_dim(self) -> int:
        return self.rep.shape[1]

    def rep_of(self, v: Array) -> Array:
        return np.einsum("k,kab->ab", np.asarray(v, dtype=float), self.rep)

    def exp_algebra(self, mat: Array) -> Array:
        if self.exp_map is not None:
            return self.exp_map(mat)
        return scipy.linalg.expm(mat)

    def ad(self, z: Array) -> Array:
        """(ad z)[k, j] = coefficient of A_k in [z, A_j]."""
        return np.einsum("i,kij->kj", np.asarray(z, dtype=float), self.structure)

    def ad_dagger(self, z: Array) -> Array:
        """Metric adjoint of ad(z) with respect to ``inner``."""
        adz = self.ad(z)
        return np.linalg.solve(self.inner, adz.T @ self.inner)

    def drift_at(self, t: float) -> Array:
        if self.drift is None:
            return np.zeros(self.dim)
        return np.asarray(self.drift(t), dtype=float)

    def defect(self, gamma: Array) -> float:
        if self.group_defect is not None:
            return float(self.group_defect(gamma))
        return 0.0


@dataclass
class LieMPPState:
    gamma: Array  # group element (matrix)
    alpha: Array  # momentum components alpha_j = alpha(A_j)


# ---------------------------------------------------------------------------
# right-hand sides


def z_of(model: LieGroupModel, t: float, alpha: Array) -> Array:
    """z = Sigma #alpha + a_t, embedded in the full algebra."""
    j = model.sr_rank
    z = model.drift_at(t).copy()
    if model.sigma is not None:
        z[:j] += model.sigma.value(t) @ np.asarray(alpha, dtype=float)[:j]
    else:
        z[:j] += np.asarray(alpha, dtype=float)[:j]
    return z


def alpha_rhs(model: LieGroupModel, t: float, alpha: Array) -> Array:
    z = z_of(model, t, alpha)
    sign = -1.0 if model.invariance == "right" else 1.0
    return sign * (model.ad(z).T @ alpha)


def lie_mpp_rhs(model: LieGroupModel, t: float, state: LieMPPState) -> tuple[Array, Array]:
    """(gamma_dot, alpha_dot) of the reduced system."""
    z = z_of(model, t, state.alpha)
    zmat = model.rep_of(z)
    if model.invariance == "right":
        gdot = zmat @ state.gamma
    else:
        gdot = state.gamma @ zmat
    return gdot, alpha_rhs(model, t, state.alpha)


# ---------------------------------------------------------------------------
# integrator: exponential update with RK4 momentum


def integrate_group(model: LieGroupModel, alpha0: Array, horizon: float = 1.0,
                    steps: int = 1000, gamma0: Array | None = None,
                    project_every: int = 100) -> Trajectory:
    """Step gamma by exp(h rep(z at midpoint)), alpha by classical RK4.

    The midpoint z uses an RK4 half-step of alpha; the group element is
    re-projected every ``project_every`` steps when the model provides a
    projection (polar decomposition for SO(3)).
    """
    times = uniform_grid(horizon, steps)
    n = model.matrix_dim
    alpha = np.asarray(alpha0, dtype=float).copy()
    gamma = np.eye(n) if gamma0 is None else np.asarray(gamma0, dtype=float).copy()
    states = [LieMPPState(gamma.copy(), alpha.copy())]
    zs = [z_of(model, times[0], alpha)]

    f = lambda t, a: alpha_rhs(model, t, a)
    for i in range(steps):
        t, h = times[i], times[i + 1] - times[i]
        a_half = rk4_step(f, t, alpha, 0.5 * h)
        z_mid = z_of(model, t + 0.5 * h, a_half)
        stepm = model.exp_algebra(h * model.rep_of(z_mid))
        gamma = stepm @ gamma if model.invariance == "right" else gamma @ stepm
        alpha = rk4_step(f, t, alpha, h)
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(gamma))) \
                or max(np.abs(alpha).max(), np.abs(gamma).max()) > OVERFLOW_GUARD:
            raise NonFiniteState(f"group state blew up at t={times[i+1]:.6g}")
        if model.project is not None and (i + 1) % project_every == 0:
            gamma = model.project(gamma)
        states.append(LieMPPState(gamma.copy(), alpha.copy()))
        zs.append(z_of(model, times[i + 1], alpha))

    j = model.sr_rank
    if model.sigma is not None:
        integrand = np.array([
            0.5 * s.alpha[:j] @ model.sigma.value(t) @ s.alpha[:j]
            for t, s in zip(times, states)])
        quad = np.array([s.alpha[:j] @ model.sigma.value(t) @ s.alpha[:j]
                         for t, s in zip(times, states)])
    else:
        integrand = np.array([0.5 * s.alpha[:j] @ s.alpha[:j] for s in states])
        quad = 2.0 * integrand
    energy = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(times))])
    defect = np.array([model.defect(s.gamma) for s in states])
    diag = {
        "z": np.array(zs),
        "group_defect_max": float(defect.max()),
        "conserved_quadratic": quad,
        "alpha_norm": np.array([np.linalg.norm(s.alpha) for s in states]),
    }
    return Trajectory(times=times, states=states, energy=energy, diagnostics=diag)


# ---------------------------------------------------------------------------
# singular curves


def lie_singular_check(model: LieGroupModel, z_fn: Callable[[float], Array],
                       horizon: float = 1.0, steps: int = 1000,
                       htol: float = 1e-6) -> tuple[float, bool]:
    """Annihilator propagation for the reduced singular system.

    Requires z_t - a_t in the horizontal subspace on the grid; propagates
    alpha_dot = -+ (ad z)^* alpha from a basis of Ann(e) and returns the
    smallest singular value of the stacked horizontal restrictions.
    """
    d, j = model.dim, model.sr_rank
    if j == d:
        return float("inf"), False
    times = uniform_grid(horizon, steps)
    for t in times:
        zrel = np.asarray(z_fn(t), dtype=float) - model.drift_at(t)
        scale = np.linalg.norm(zrel)
        if scale > 1e-12 and np.linalg.norm(zrel[j:]) / scale > htol:
            raise NotHorizontal(t, np.linalg.norm(zrel[j:]) / scale, htol)

    sign = -1.0 if model.invariance == "right" else 1.0
    nann = d - j

    def rhs(t, y):
        mats = y.reshape(nann, d)
        adz_t = model.ad(np.asarray(z_fn(t), dtype=float)).T
        return (sign * mats @ adz_t.T).ravel()

    basis0 = np.zeros((nann, d))
    for b in range(nann):
        basis0[b, j + b] = 1.0
    from .odeint import rk4_path
    ys, _ = rk4_path(rhs, times, basis0.ravel())
    amap = ys.reshape(len(times), nann, d)[:, :, :j].transpose(0, 2, 1).reshape(-1, nann)
    fro = np.linalg.norm(amap)
    if fro == 0.0:
        return 0.0, True
    smin = float(np.linalg.svd(amap, compute_uv=False)[-1])
    return smin, bool(smin <= SINGULAR_RTOL * fro)


# ---------------------------------------------------------------------------
# metrics invariant under a subgroup


@dataclass
class SubgroupSplitting:
    """Orthogonal splitting g = e + k with [k, e] in e and [e, e] in k."""

    model: LieGroupModel
    e_indices: tuple
    k_indices: tuple

    def __post_init__(self):
        d = self.model.dim
        self.e_indices = tuple(self.e_indices)
        self.k_indices = tuple(self.k_indices)
        if sorted(self.e_indices + self.k_indices) != list(range(d)):
            raise SplittingInvalid("e and k indices must partition the basis")
        c = self.model.structure
        for i in self.e_indices:
            for jj in self.e_indices:
                if np.abs(c[list(self.e_indices), i, jj]).max() > STRUCTURE_TOL:
                    raise SplittingInvalid("[e, e] not contained in k")
        for i in self.k_indices:
            for jj in self.e_indices:
                if np.abs(c[list(self.k_indices), i, jj]).max() > STRUCTURE_TOL:
                    raise SplittingInvalid("[k, e] not contained in e")
        inner = self.model.inner
        off = inner[np.ix_(list(self.e_indices), list(self.k_indices))]
        if np.abs(off).max() > STRUCTURE_TOL:
            raise SplittingInvalid("e and k must be orthogonal under the inner product")


def subgroup_invariant_rhs(splitting: SubgroupSplitting, sigma: CovarianceSchedule,
                           a_fn: Callable[[float], Array] | None, t: float,
                           gamma: Array, w: Array) -> tuple[Array, Array]:
    """Left-invariant system for w = #alpha split into e and k parts.

    Returns (gamma_dot, w_dot) with gamma_dot = gamma rep(Sigma w_e + a_t).
    """
    model = splitting.model
    e_idx = list(splitting.e_indices)
    k_idx = list(splitting.k_indices)
    w = np.asarray(w, dtype=float)
    a = np.zeros(model.dim) if a_fn is None else np.asarray(a_fn(t), dtype=float)

    sig_we = np.zeros(model.dim)
    sig_we[e_idx] = sigma.value(t) @ w[e_idx]
    xi1 = sig_we.copy()
    xi1[e_idx] += a[e_idx]
    xi2 = np.zeros(model.dim)
    xi2[k_idx] = a[k_idx]

    w_e = np.zeros(model.dim)
    w_e[e_idx] = w[e_idx]
    w_k = np.zeros(model.dim)
    w_k[k_idx] = w[k_idx]

    d1 = model.ad_dagger(xi1)
    d2 = model.ad_dagger(xi2)
    wdot = np.zeros(model.dim)
    wdot[e_idx] = (d1 @ w_k + d2 @ w_e)[e_idx]
    wdot[k_idx] = (d1 @ w_e + d2 @ w_k)[k_idx]

    gdot = gamma @ model.rep_of(sig_we + a)
    return gdot, wdot


# ---------------------------------------------------------------------------
# presets


def _so3_structure() -> Array:
    c = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                c[k, i, j] = float(np.sign((j - i) * (k - j) * (k - i))) \
                    if len({i, j, k}) == 3 else 0.0
    return c


def so3_model(sigma: CovarianceSchedule | None = None,
              drift: Callable[[float], Array] | None = None,
              invariance: str = "right") -> LieGroupModel:
    """so(3) with the standard basis (structure constants epsilon_ijk)."""
    rep = np.array([hat(e) for e in np.eye(3)])

    def exp_map(mat):
        return rodrigues(vee(mat))

    def defect(g):
        return float(np.linalg.norm(g.T @ g - np.eye(3)) + abs(np.linalg.det(g) - 1.0))

    return LieGroupModel(
        dim=3, sr_rank=3, structure=_so3_structure(), rep=rep,
        drift=drift, sigma=sigma if sigma is not None else CovarianceSchedule.isotropic(3),
        invariance=invariance, exp_map=exp_map, project=polar_project,
        group_defect=defect, name="so3",
    )


def heisenberg_model(sigma: CovarianceSchedule | None = None,
                     drift: Callable[[float], Array] | None = None,
                     invariance: str = "right") -> LieGroupModel:
    """Heisenberg algebra: [A_1, A_2] = A_3, horizontal span (A_1, A_2)."""
    c = np.zeros((3, 3, 3))
    c[2, 0, 1] = 1.0
    c[2, 1, 0] = -1.0
    rep = np.zeros((3, 3, 3))
    rep[0][0, 1] = 1.0  # E_12
    rep[1][1, 2] = 1.0  # E_23
    rep[2][0, 2] = 1.0  # E_13

    def exp_map(mat):
        return np.eye(3) + mat + 0.5 * (mat @ mat)  # nilpotent of order 3

    def defect(g):
        low = np.tril(g, -1)
        return float(np.linalg.norm(low) + np.linalg.norm(np.diag(g) - 1.0))

    return LieGroupModel(
        dim=3, sr_rank=2, structure=c, rep=rep,
        drift=drift, sigma=sigma if sigma is not None else CovarianceSchedule.isotropic(2),
        invariance=invariance, exp_map=exp_map, project=None,
        group_defect=defect, name="heisenberg",
    )

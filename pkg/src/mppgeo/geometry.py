"""Charts, connection data, parallel transport and (affine) development.

Index conventions used throughout the library, for a chart of dimension d and
horizontal rank J <= d:

* ``christoffel(x)[k, i, j]`` is the coefficient of ``d_k`` in
  ``nabla_{d_i} d_j`` (covariant derivative of coordinate fields).
* ``torsion(x)[k, i, j]`` is the coefficient of ``d_k`` in ``T(d_i, d_j)``;
  antisymmetric in (i, j).
* ``curvature(x)[l, i, j, k]`` is the coefficient of ``d_l`` in
  ``R(d_i, d_j) d_k`` with ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``;
  antisymmetric in (i, j).
* ``frame0`` is a d x d matrix whose columns are chart components of the base
  frame at the origin; columns ``0 .. J-1`` span the horizontal subspace E_o
  and are orthonormal when ``metric_e`` is the identity.
* Anti-development values are components with respect to the ``frame0``
  basis, so covariance matrices (J x J, acting on the horizontal factor) apply
  directly to the leading J components.

Vectors transported along a curve satisfy ``v_dot^k = -x_dot^i v^j Gamma^k_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FrameDegenerate, PathLeavesChart, StepTooCoarse
from .odeint import HermitePath, rk4_path

Array = np.ndarray


# ---------------------------------------------------------------------------
# domain types


@dataclass
class ManifoldModel:
    """Chart-level geometric data: connection, frame and horizontal metric."""

    dim: int
    sr_rank: int
    christoffel: Callable[[Array], Array]
    torsion: Callable[[Array], Array]
    curvature: Callable[[Array], Array]
    frame0: Array
    metric_e: Array | None = None
    chart_domain: Callable[[Array], bool] = lambda x: True
    origin: Array | None = None
    # chart metric g_ij(x); present for Levi-Civita presets, used for frame
    # re-orthonormalization and metric-compatibility tests
    metric: Callable[[Array], Array] | None = None
    metric_compatible: bool = False
    name: str = "model"
    to_ambient: Callable[[Array], Array] | None = None
    from_ambient: Callable[[Array], Array] | None = None
    # Gamma == 0 identically (Euclidean chart): enables vectorized sampling
    trivial_connection: bool = False

    def __post_init__(self):
        d, j = self.dim, self.sr_rank
        if not (1 <= j <= d):
            raise ValueError(f"sr_rank must be in [1, {d}], got {j}")
        self.frame0 = np.asarray(self.frame0, dtype=float)
        if self.frame0.shape != (d, d):
            raise ValueError(f"frame0 must be {d}x{d}")
        if abs(np.linalg.det(self.frame0)) < 1e-12:
            raise ValueError("frame0 columns are not linearly independent")
        if self.metric_e is None:
            self.metric_e = np.eye(j)
        self.metric_e = np.asarray(self.metric_e, dtype=float)
        if self.metric_e.shape != (j, j):
            raise ValueError(f"metric_e must be {j}x{j}")
        if np.linalg.norm(self.metric_e - self.metric_e.T) > 1e-12:
            raise ValueError("metric_e must be symmetric")
        if np.linalg.eigvalsh(self.metric_e).min() <= 0:
            raise ValueError("metric_e must be positive definite")
        if self.origin is None:
            self.origin = np.zeros(d)
        self.origin = np.asarray(self.origin, dtype=float)

    @property
    def full_rank(self) -> bool:
        return self.sr_rank == self.dim


@dataclass
class CurvePath:
    """A curve on the chart: time grid, points, and optional dense form.

    ``point_fn``/``velocity_fn`` give exact evaluation anywhere (analytic test
    paths, solver output with dense interpolants). Grid-only paths fall back
    to cubic Hermite through the nodes, with velocities filled by second-order
    finite differences when not supplied.
    """

    times: Array
    points: Array
    velocities: Array | None = None
    point_fn: Callable[[float], Array] | None = None
    velocity_fn: Callable[[float], Array] | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if len(self.times) != len(self.points):
            raise ValueError("times and points length mismatch")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.velocities is not None:
            self.velocities = np.asarray(self.velocities, dtype=float)
        self._dense: HermitePath | None = None

    @classmethod
    def from_function(cls, fn: Callable[[float], Array], times: Array,
                      velocity_fn: Callable[[float], Array] | None = None,
                      fd_step: float = 1e-6) -> "CurvePath":
        times = np.asarray(times, dtype=float)
        pts = np.array([fn(t) for t in times])
        if velocity_fn is None:
            def velocity_fn(t, _fn=fn, _h=fd_step):
                return (np.asarray(_fn(t + _h)) - np.asarray(_fn(t - _h))) / (2.0 * _h)
        vels = np.array([velocity_fn(t) for t in times])
        return cls(times, pts, vels, point_fn=fn, velocity_fn=velocity_fn)

    def ensure_velocities(self) -> Array:
        if self.velocities is None:
            if self.velocity_fn is not None:
                self.velocities = np.array([self.velocity_fn(t) for t in self.times])
            else:
                self.velocities = np.gradient(self.points, self.times, axis=0)
        return self.velocities

    def _hermite(self) -> HermitePath:
        if self._dense is None:
            self._dense = HermitePath(self.times, self.points, self.ensure_velocities())
        return self._dense

    def point(self, t: float) -> Array:
        if self.point_fn is not None:
            return np.asarray(self.point_fn(t), dtype=float)
        return self._hermite()(t)

    def velocity(self, t: float) -> Array:
        if self.velocity_fn is not None:
            return np.asarray(self.velocity_fn(t), dtype=float)
        return self._hermite().derivative(t)

    def reversed(self) -> "CurvePath":
        t0, t1 = self.times[0], self.times[-1]
        rtimes = (t0 + t1) - self.times[::-1]
        rpoints = self.points[::-1].copy()
        rvels = None if self.velocities is None else -self.velocities[::-1]
        pfn = vfn = None
        if self.point_fn is not None:
            pfn = lambda t, _f=self.point_fn: _f(t0 + t1 - t)
        if self.velocity_fn is not None:
            vfn = lambda t, _f=self.velocity_fn: -np.asarray(_f(t0 + t1 - t))
        return CurvePath(rtimes, rpoints, rvels, point_fn=pfn, velocity_fn=vfn)


@dataclass
class AntiDevelopmentPath:
    """Curve in T_oM (frame components), starting exactly at zero."""

    times: Array
    values: Array
    derivs: Array | None = None
    deriv_fn: Callable[[float], Array] | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.linalg.norm(self.values[0]) != 0.0:
            if np.linalg.norm(self.values[0]) > 1e-12:
                raise ValueError("anti-development must start at 0")
            self.values = self.values.copy()
            self.values[0] = 0.0
        if self.derivs is not None:
            self.derivs = np.asarray(self.derivs, dtype=float)
        self._dense: HermitePath | None = None

    @classmethod
    def from_deriv(cls, deriv_fn: Callable[[float], Array], times: Array) -> "AntiDevelopmentPath":
        """Build node values by RK4 quadrature of an analytic derivative."""
        times = np.asarray(times, dtype=float)
        d = np.asarray(deriv_fn(times[0])).size
        ys, ders = rk4_path(lambda t, _y: np.asarray(deriv_fn(t), dtype=float),
                            times, np.zeros(d))
        return cls(times, ys, ders, deriv_fn=deriv_fn)

    def deriv(self, t: float) -> Array:
        if self.deriv_fn is not None:
            return np.asarray(self.deriv_fn(t), dtype=float)
        if self._dense is None:
            if self.derivs is not None:
                self._dense = HermitePath(self.times, self.values, self.derivs)
            else:
                grads = np.gradient(self.values, self.times, axis=0)
                self._dense = HermitePath(self.times, self.values, grads)
        return self._dense.derivative(t)


@dataclass
class DriftModel:
    """Time-dependent vector field u_t with its spatial Jacobian.

    ``jacobian(t, x)[k, i]`` is the partial of component u^k with respect to
    coordinate x^i.
    """

    value: Callable[[float, Array], Array]
    jacobian: Callable[[float, Array], Array]

    @classmethod
    def zero(cls, dim: int) -> "DriftModel":
        z = np.zeros(dim)
        zz = np.zeros((dim, dim))
        return cls(lambda t, x: z, lambda t, x: zz)

    @classmethod
    def constant(cls, vec) -> "DriftModel":
        vec = np.asarray(vec, dtype=float)
        zz = np.zeros((vec.size, vec.size))
        return cls(lambda t, x: vec, lambda t, x: zz)

    @classmethod
    def from_function(cls, fn: Callable[[float, Array], Array],
                      fd_step: float = 1e-6) -> "DriftModel":
        def jac(t, x, _fn=fn, _h=fd_step):
            x = np.asarray(x, dtype=float)
            d = x.size
            out = np.empty((d, d))
            for i in range(d):
                e = np.zeros(d)
                e[i] = _h * max(1.0, abs(x[i]))
                out[:, i] = (np.asarray(_fn(t, x + e)) - np.asarray(_fn(t, x - e))) / (2 * e[i])
            return out
        return cls(fn, jac)


def check_drift_jacobian(drift: DriftModel, t: float, points: Array,
                         rtol: float = 1e-5, fd_step: float = 1e-6) -> float:
    """Largest relative mismatch between stored Jacobian and central FD."""
    worst = 0.0
    for x in np.atleast_2d(points):
        jac = drift.jacobian(t, x)
        d = x.size
        fd = np.empty((d, d))
        for i in range(d):
            e = np.zeros(d)
            e[i] = fd_step * max(1.0, abs(x[i]))
            fd[:, i] = (np.asarray(drift.value(t, x + e))
                        - np.asarray(drift.value(t, x - e))) / (2 * e[i])
        scale = max(1.0, np.abs(fd).max())
        worst = max(worst, np.abs(jac - fd).max() / scale)
    if worst > rtol:
        raise ValueError(f"drift jacobian mismatch {worst:.3e} > rtol {rtol:.1e}")
    return worst


class CovarianceSchedule:
    """Time-dependent J x J SPD covariance acting on frame components of E_o.

    Either constant or piecewise-linear interpolation of samples on a grid.
    """

    def __init__(self, value_fn: Callable[[float], Array], rank: int,
                 constant: Array | None = None):
        self.rank = rank
        self._fn = value_fn
        self._constant = None if constant is None else np.asarray(constant, dtype=float)
        if self._constant is not None:
            self._validate(self._constant)
            self._const_sqrt = _sym_pow(self._constant, 0.5)
            self._const_inv = _sym_pow(self._constant, -1.0)
            self._const_inv_sqrt = _sym_pow(self._constant, -0.5)

    @staticmethod
    def _validate(mat: Array) -> None:
        if np.linalg.norm(mat - mat.T) >= 1e-12:
            raise ValueError("covariance must be symmetric (||S - S^T|| < 1e-12)")
        w = np.linalg.eigvalsh(mat)
        if w.min() <= 0:
            raise ValueError(f"covariance must be positive definite (min eig {w.min():.3e})")
        if w.max() / w.min() >= 1e12:
            raise ValueError("covariance condition number exceeds 1e12")

    @classmethod
    def constant(cls, mat) -> "CovarianceSchedule":
        mat = np.asarray(mat, dtype=float)
        return cls(lambda t: mat, mat.shape[0], constant=mat)

    @classmethod
    def isotropic(cls, rank: int, scale: float = 1.0) -> "CovarianceSchedule":
        return cls.constant(scale * np.eye(rank))

    @classmethod
    def piecewise_linear(cls, times, samples) -> "CovarianceSchedule":
        times = np.asarray(times, dtype=float)
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 3 or len(times) != len(samples):
            raise ValueError("need one matrix sample per grid time")
        for s in samples:
            cls._validate(s)

        def fn(t):
            if t <= times[0]:
                return samples[0]
            if t >= times[-1]:
                return samples[-1]
            i = int(np.searchsorted(times, t, side="right") - 1)
            w = (t - times[i]) / (times[i + 1] - times[i])
            return (1 - w) * samples[i] + w * samples[i + 1]

        return cls(fn, samples.shape[1])

    def value(self, t: float) -> Array:
        if self._constant is not None:
            return self._constant
        mat = np.asarray(self._fn(t), dtype=float)
        return 0.5 * (mat + mat.T)

    def sqrt(self, t: float) -> Array:
        if self._constant is not None:
            return self._const_sqrt
        return _sym_pow(self.value(t), 0.5)

    def inv(self, t: float) -> Array:
        if self._constant is not None:
            return self._const_inv
        return _sym_pow(self.value(t), -1.0)

    def inv_sqrt(self, t: float) -> Array:
        if self._constant is not None:
            return self._const_inv_sqrt
        return _sym_pow(self.value(t), -0.5)

    @property
    def is_constant(self) -> bool:
        return self._constant is not None


def _sym_pow(mat: Array, power: float) -> Array:
    w, v = np.linalg.eigh(mat)
    return (v * np.power(w, power)) @ v.T


# ---------------------------------------------------------------------------
# frame transport


class FrameField:
    """Moving frame along a curve: node frames, node derivatives, dense form."""

    def __init__(self, times: Array, frames: Array, derivs: Array):
        self.times = times
        self.frames = frames  # (N+1, d, d)
        self.derivs = derivs
        n, d, _ = frames.shape
        self._dense = HermitePath(times, frames.reshape(n, d * d),
                                  derivs.reshape(n, d * d))
        self._dim = d
        self._inv: Array | None = None

    def frame(self, t: float) -> Array:
        return self._dense(t).reshape(self._dim, self._dim)

    def coframes(self) -> Array:
        """Inverse frame matrices at the grid nodes."""
        if self._inv is None:
            try:
                self._inv = np.linalg.inv(self.frames)
            except np.linalg.LinAlgError as exc:
                raise FrameDegenerate(f"frame not invertible on the grid: {exc}") from exc
        return self._inv


def _domain_hook(model: ManifoldModel, x_of_y: Callable[[Array], Array]):
    def hook(i, t, y):
        x = x_of_y(y)
        if not model.chart_domain(x):
            raise PathLeavesChart(t, x)
        return None
    return hook


def _reorth_frame(model: ManifoldModel, x: Array, fmat: Array) -> Array:
    """Project the E-block back to g-orthonormality (metric-compatible models)."""
    if model.metric is None:
        return fmat
    j = model.sr_rank
    g = model.metric(x)
    gram = fmat[:, :j].T @ g @ fmat[:, :j]
    ell = np.linalg.cholesky(gram)
    out = fmat.copy()
    out[:, :j] = fmat[:, :j] @ np.linalg.inv(ell).T
    return out


def parallel_transport(model: ManifoldModel, path: CurvePath, v0: Array) -> Array:
    """Transport v0 along the path; linear in v0, RK4 on the stored grid."""
    v0 = np.asarray(v0, dtype=float)
    if len(path.times) == 1:
        return v0.copy()
    for t, p in zip(path.times, path.points):
        if not model.chart_domain(p):
            raise PathLeavesChart(t, p)

    def rhs(t, v):
        x = path.point(t)
        xd = path.velocity(t)
        gam = model.christoffel(x)
        return -np.einsum("kij,i,j->k", gam, xd, v)

    ys, _ = rk4_path(rhs, path.times, v0)
    return ys[-1]


def transport_frame(model: ManifoldModel, path: CurvePath,
                    frame0: Array | None = None,
                    reorth_every: int | None = 100) -> FrameField:
    """Columnwise parallel transport of a full frame along the path."""
    d = model.dim
    f0 = model.frame0 if frame0 is None else np.asarray(frame0, dtype=float)
    if len(path.times) == 1:
        f = f0.reshape(1, d, d).copy()
        return FrameField(path.times, f, np.zeros_like(f))
    for t, p in zip(path.times, path.points):
        if not model.chart_domain(p):
            raise PathLeavesChart(t, p)

    def rhs(t, y):
        x = path.point(t)
        xd = path.velocity(t)
        gam = model.christoffel(x)
        fmat = y.reshape(d, d)
        return -np.einsum("kij,i,jr->kr", gam, xd, fmat).ravel()

    det_floor = 1e-10 * abs(np.linalg.det(f0))

    def hook(i, t, y):
        fmat = y.reshape(d, d)
        if abs(np.linalg.det(fmat)) < det_floor:
            raise StepTooCoarse(
                f"frame determinant collapsed below 1e-10 of initial at t={t:.6g}")
        if (reorth_every and model.metric_compatible and i > 0
                and i % reorth_every == 0):
            return _reorth_frame(model, path.point(t), fmat).ravel()
        return None

    ys, ders = rk4_path(rhs, path.times, f0.ravel(), node_hook=hook)
    n = len(path.times)
    return FrameField(path.times, ys.reshape(n, d, d), ders.reshape(n, d, d))


# ---------------------------------------------------------------------------
# development / anti-development


def develop(model: ManifoldModel, omega: AntiDevelopmentPath,
            drift: DriftModel | None = None) -> CurvePath:
    """Affine development: gamma_dot = //_t omega_dot + u_t(gamma), gamma_0 = o.

    The frame ODE is integrated jointly; the returned path carries dense
    evaluators built from the joint solution, so it can feed further
    transports at full RK4 accuracy.
    """
    d = model.dim
    if drift is None:
        drift = DriftModel.zero(d)
    times = omega.times

    def rhs(t, y):
        x = y[:d]
        fmat = y[d:].reshape(d, d)
        xd = fmat @ omega.deriv(t) + drift.value(t, x)
        gam = model.christoffel(x)
        fd = -np.einsum("kij,i,jr->kr", gam, xd, fmat)
        return np.concatenate([xd, fd.ravel()])

    y0 = np.concatenate([model.origin, model.frame0.ravel()])
    ys, ders = rk4_path(rhs, times, y0, node_hook=_domain_hook(model, lambda y: y[:d]))

    dense = HermitePath(times, ys, ders)

    def point_fn(t):
        return dense(t)[:d]

    def velocity_fn(t):
        y = dense(t)
        fmat = y[d:].reshape(d, d)
        return fmat @ omega.deriv(t) + drift.value(t, y[:d])

    return CurvePath(times, ys[:, :d].copy(), ders[:, :d].copy(),
                     point_fn=point_fn, velocity_fn=velocity_fn)


def antidevelop(model: ManifoldModel, path: CurvePath,
                drift: DriftModel | None = None) -> AntiDevelopmentPath:
    """Inverse of develop: omega_t = int //_s^-1 (gamma_dot - u_s(gamma)) ds."""
    d = model.dim
    if drift is None:
        drift = DriftModel.zero(d)
    if np.linalg.norm(path.points[0] - model.origin) > 1e-9:
        raise ValueError("path must start at the model origin")
    for t, p in zip(path.times, path.points):
        if not model.chart_domain(p):
            raise PathLeavesChart(t, p)
    times = path.times

    def rhs(t, y):
        fmat = y[:d * d].reshape(d, d)
        x = path.point(t)
        xd = path.velocity(t)
        gam = model.christoffel(x)
        fd = -np.einsum("kij,i,jr->kr", gam, xd, fmat)
        od = np.linalg.solve(fmat, xd - drift.value(t, x))
        return np.concatenate([fd.ravel(), od])

    y0 = np.concatenate([model.frame0.ravel(), np.zeros(d)])
    ys, ders = rk4_path(rhs, times, y0)

    dense = HermitePath(times, ys, ders)

    def deriv_fn(t):
        fmat = dense(t)[:d * d].reshape(d, d)
        x = path.point(t)
        return np.linalg.solve(fmat, path.velocity(t) - drift.value(t, x))

    return AntiDevelopmentPath(times, ys[:, d * d:].copy(), ders[:, d * d:].copy(),
                               deriv_fn=deriv_fn)

"""Shipped chart models: flat space, the round sphere in a stereographic
chart, a rank-2 Martinet-type 3-manifold, and the SO(3) exponential chart.

Generic fallbacks build Christoffel symbols from a metric function and
curvature from Christoffel symbols, both by central finite differences.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .geometry import ManifoldModel
from .linalg import hat, so3_left_jacobian

Array = np.ndarray

FD_STEP = 1e-5  # relative step for finite-difference connection data


def _fd_grad(fn: Callable[[Array], Array], x: Array, step: float = FD_STEP) -> Array:
    """Central-difference gradient; output shape = fn(x).shape + (d,)."""
    x = np.asarray(x, dtype=float)
    base = np.asarray(fn(x), dtype=float)
    out = np.empty(base.shape + (x.size,))
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        out[..., i] = (np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h)
    return out


def christoffel_from_metric(metric: Callable[[Array], Array]) -> Callable[[Array], Array]:
    """Levi-Civita symbols of a chart metric by central finite differences."""

    def gamma(x: Array) -> Array:
        g = np.asarray(metric(x), dtype=float)
        ginv = np.linalg.inv(g)
        dg = _fd_grad(metric, x)  # dg[i, j, l] = d_l g_ij
        # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
        d = g.shape[0]
        gam = np.empty((d, d, d))
        for k in range(d):
            for i in range(d):
                for j in range(d):
                    s = 0.0
                    for l in range(d):
                        s += ginv[k, l] * (dg[j, l, i] + dg[i, l, j] - dg[i, j, l])
                    gam[k, i, j] = 0.5 * s
        return gam

    return gamma


def torsion_from_christoffel(christoffel: Callable[[Array], Array]) -> Callable[[Array], Array]:
    def torsion(x: Array) -> Array:
        g = christoffel(x)
        return g - g.transpose(0, 2, 1)
    return torsion


def curvature_from_christoffel(christoffel: Callable[[Array], Array],
                               step: float = FD_STEP) -> Callable[[Array], Array]:
    """R[l,i,j,k] = d_i G[l,j,k] - d_j G[l,i,k] + G[l,i,m]G[m,j,k] - G[l,j,m]G[m,i,k]."""

    def curvature(x: Array) -> Array:
        g = christoffel(x)
        dg = _fd_grad(christoffel, x, step)  # dg[l, j, k, i] = d_i G[l,j,k]
        r = dg.transpose(0, 3, 1, 2) - dg.transpose(0, 1, 3, 2)
        r += np.einsum("lim,mjk->lijk", g, g) - np.einsum("ljm,mik->lijk", g, g)
        return r

    return curvature


def zero_tensor3(d: int) -> Callable[[Array], Array]:
    z = np.zeros((d, d, d))
    return lambda x: z


def zero_tensor4(d: int) -> Callable[[Array], Array]:
    z = np.zeros((d, d, d, d))
    return lambda x: z


# ---------------------------------------------------------------------------
# flat space


def flat_model(dim: int = 2, sr_rank: int | None = None,
               frame0: Array | None = None) -> ManifoldModel:
    """Euclidean chart with vanishing connection data."""
    j = dim if sr_rank is None else sr_rank
    return ManifoldModel(
        dim=dim,
        sr_rank=j,
        christoffel=zero_tensor3(dim),
        torsion=zero_tensor3(dim),
        curvature=zero_tensor4(dim),
        frame0=np.eye(dim) if frame0 is None else frame0,
        metric=lambda x: np.eye(dim),
        metric_compatible=True,
        name=f"flat{dim}",
        trivial_connection=True,
    )


# ---------------------------------------------------------------------------
# round sphere, stereographic chart
#
# Chart origin is the base point (1, 0, 0) in ambient coordinates and the
# projection pole is the antipode (-1, 0, 0); the chart covers everything but
# a small disc around the pole. The round metric is conformal,
# g = 4 / (1 + |x|^2)^2 * I.

SPHERE_DOMAIN_MARGIN = 1e-3  # ambient distance to the projection singularity


def sphere_to_ambient(x: Array) -> Array:
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    return np.array([(1.0 - r2), 2.0 * x[0], 2.0 * x[1]]) / (1.0 + r2)


def sphere_from_ambient(p: Array) -> Array:
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    if 1.0 + p[0] < 1e-12:
        raise ValueError("point at the projection singularity of the chart")
    return np.array([p[1], p[2]]) / (1.0 + p[0])


def _sphere_conformal(x: Array) -> float:
    return 2.0 / (1.0 + float(x @ x))


def _sphere_metric(x: Array) -> Array:
    rho = _sphere_conformal(x)
    return rho * rho * np.eye(2)


_EYE2 = np.eye(2)
_CURV_PATTERN = (np.einsum("li,jk->lijk", _EYE2, _EYE2)
                 - np.einsum("lj,ik->lijk", _EYE2, _EYE2))


def _sphere_christoffel(x: Array) -> Array:
    # conformal metric exp(2 phi) I with phi = log(2/(1+r^2)):
    # Gamma^k_ij = d_ki dphi_j + d_kj dphi_i - d_ij dphi_k
    dphi = -2.0 * np.asarray(x, dtype=float) / (1.0 + float(x @ x))
    return (np.einsum("ki,j->kij", _EYE2, dphi)
            + np.einsum("kj,i->kij", _EYE2, dphi)
            - np.einsum("ij,k->kij", _EYE2, dphi))


def _sphere_curvature(x: Array) -> Array:
    # constant curvature +1: R(d_i, d_j) d_k = g_jk d_i - g_ik d_j
    rho = _sphere_conformal(x)
    return (rho * rho) * _CURV_PATTERN


def sphere_model(sr_rank: int = 2) -> ManifoldModel:
    """Unit sphere in the stereographic chart (Levi-Civita connection)."""
    max_r2 = (2.0 / SPHERE_DOMAIN_MARGIN) ** 2 - 1.0
    return ManifoldModel(
        dim=2,
        sr_rank=sr_rank,
        christoffel=_sphere_christoffel,
        torsion=zero_tensor3(2),
        curvature=_sphere_curvature,
        frame0=0.5 * np.eye(2),  # g-orthonormal at the origin where rho = 2
        chart_domain=lambda x: float(np.asarray(x) @ np.asarray(x)) < max_r2,
        metric=_sphere_metric,
        metric_compatible=True,
        name="sphere2",
        to_ambient=sphere_to_ambient,
        from_ambient=sphere_from_ambient,
    )


def sphere_great_circle(v_frame: Array, times: Array):
    """Analytic unit-speed great circle through the chart origin.

    v_frame: initial velocity in frame components (2,), unit g-norm assumed.
    Returns (point_fn, velocity_fn) in chart coordinates for test oracles.
    """
    v_frame = np.asarray(v_frame, dtype=float)
    o_amb = np.array([1.0, 0.0, 0.0])
    # frame columns are 0.5*e_i in the chart; ambient pushforward at origin
    # sends chart e_1 -> (0, 2, 0)/..., giving ambient direction:
    w = np.array([0.0, v_frame[0], v_frame[1]])
    w = w / np.linalg.norm(w)

    def point_fn(t):
        p = np.cos(t) * o_amb + np.sin(t) * w
        return sphere_from_ambient(p)

    def velocity_fn(t, h=1e-6):
        return (point_fn(t + h) - point_fn(t - h)) / (2 * h)

    return point_fn, velocity_fn


# ---------------------------------------------------------------------------
# frame-parallel connections (flat, with torsion)


def frame_model(frame_fn: Callable[[Array], Array], dim: int, sr_rank: int,
                origin: Array | None = None, name: str = "frame",
                chart_domain: Callable[[Array], bool] | None = None,
                fd_step: float = 1e-6) -> ManifoldModel:
    """Connection that makes the columns of ``frame_fn(x)`` parallel.

    Gamma[:, i, j] = [-(d_i F) F^-1][:, j]; curvature vanishes identically and
    the torsion is the negative of the frame fields' Lie brackets.
    """

    def christoffel(x: Array) -> Array:
        fmat = np.asarray(frame_fn(x), dtype=float)
        finv = np.linalg.inv(fmat)
        df = _fd_grad(frame_fn, x, fd_step)  # df[k, a, i] = d_i F[k, a]
        gam = np.empty((dim, dim, dim))
        for i in range(dim):
            gam[:, i, :] = -df[:, :, i] @ finv
        return gam

    return ManifoldModel(
        dim=dim,
        sr_rank=sr_rank,
        christoffel=christoffel,
        torsion=torsion_from_christoffel(christoffel),
        curvature=zero_tensor4(dim),
        frame0=frame_fn(np.zeros(dim) if origin is None else np.asarray(origin)),
        chart_domain=chart_domain if chart_domain is not None else (lambda x: True),
        origin=origin,
        name=name,
    )


def _martinet_frame(x: Array) -> Array:
    # columns: X = d_x, Y = d_y + x^2 d_z, Z = d_z
    f = np.eye(3)
    f[2, 1] = float(x[0]) ** 2
    return f


def _martinet_christoffel(x: Array) -> Array:
    gam = np.zeros((3, 3, 3))
    gam[2, 0, 1] = -2.0 * float(x[0])
    return gam


def martinet_model() -> ManifoldModel:
    """Rank-2 toy 3-manifold carrying a genuine singular (characteristic) line.

    Horizontal frame X = d_x, Y = d_y + x^2 d_z; the connection parallelizes
    the frame (flat, torsion only). The line x = z = 0 is a singular curve of
    the horizontal distribution; generic horizontal curves are not singular.
    """
    return ManifoldModel(
        dim=3,
        sr_rank=2,
        christoffel=_martinet_christoffel,
        torsion=torsion_from_christoffel(_martinet_christoffel),
        curvature=zero_tensor4(3),
        frame0=np.eye(3),
        name="martinet",
    )


def so3_chart_model(max_angle: float = 3.0) -> ManifoldModel:
    """SO(3) in exponential coordinates with the right-invariant connection.

    Frame columns are the right-invariant basis fields in the chart, i.e.
    the inverse of the trivialization Jacobian J with
    d/dt exp(hat(x_t)) = hat(J(x_t) x_dot) exp(hat(x_t)).
    """

    def frame_fn(x: Array) -> Array:
        return np.linalg.inv(so3_left_jacobian(np.asarray(x, dtype=float)))

    return frame_model(
        frame_fn, dim=3, sr_rank=3,
        chart_domain=lambda x: float(np.linalg.norm(x)) < max_angle,
        name="so3chart",
    )


def so3_chart_point(x: Array) -> Array:
    """Group element of a chart point (for cross-module comparisons)."""
    from .linalg import rodrigues
    return rodrigues(np.asarray(x, dtype=float))

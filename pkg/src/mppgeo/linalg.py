"""Small dense linear-algebra helpers: symmetric matrix powers, so(3) maps,
antisymmetric packing."""

from __future__ import annotations

import numpy as np


def sym_power(mat: np.ndarray, power: float, min_eig: float = 0.0) -> np.ndarray:
    """Real power of a symmetric positive (semi)definite matrix via eigh."""
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    if np.any(w <= min_eig) and power < 0:
        raise np.linalg.LinAlgError(
            f"matrix power {power} of non-positive matrix (min eig {w.min():.3e})"
        )
    return (v * np.power(w, power)) @ v.T


def hat(v: np.ndarray) -> np.ndarray:
    """so(3) hat map: hat(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of hat (antisymmetric part is taken first)."""
    a = 0.5 * (m - m.T)
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def rodrigues(v: np.ndarray) -> np.ndarray:
    """exp of hat(v) in SO(3), stable near zero angle."""
    theta = float(np.linalg.norm(v))
    k = hat(v)
    if theta < 1e-8:
        # 4th order Taylor keeps orthogonality error at machine level
        return np.eye(3) + k + 0.5 * (k @ k)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * k + b * (k @ k)


def so3_log(rot: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (angle in [0, pi])."""
    tr = np.clip((np.trace(rot) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(tr))
    if theta < 1e-8:
        return vee(rot)
    if theta > np.pi - 1e-6:
        # near-pi branch: axis from the symmetric part
        s = 0.5 * (rot + np.eye(3))
        axis_sq = np.clip(np.diag(s), 0.0, None)
        axis = np.sqrt(axis_sq)
        # fix signs from off-diagonal products
        i = int(np.argmax(axis))
        if axis[i] > 0:
            for j in range(3):
                if j != i:
                    axis[j] = s[i, j] / axis[i] if axis[i] > 1e-12 else axis[j]
        axis /= max(np.linalg.norm(axis), 1e-300)
        return theta * axis
    return theta / (2.0 * np.sin(theta)) * vee(rot - rot.T)


def so3_left_jacobian(v: np.ndarray) -> np.ndarray:
    """J(v) with d/dt exp(hat(x_t)) = hat(J(x_t) x_dot) exp(hat(x_t)).

    The convention (left vs right trivialization) is pinned by a unit test
    against finite differences of rodrigues.
    """
    theta = float(np.linalg.norm(v))
    k = hat(v)
    if theta < 1e-6:
        return np.eye(3) + 0.5 * k + (1.0 / 6.0) * (k @ k)
    b = (1.0 - np.cos(theta)) / theta**2
    c = (theta - np.sin(theta)) / theta**3
    return np.eye(3) + b * k + c * (k @ k)


def small_inv(m: np.ndarray) -> np.ndarray:
    """Closed-form inverse for 2x2/3x3, LAPACK otherwise."""
    n = m.shape[0]
    if n == 2:
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
    if n == 3:
        c = np.empty((3, 3))
        c[0, 0] = m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
        c[0, 1] = m[0, 2] * m[2, 1] - m[0, 1] * m[2, 2]
        c[0, 2] = m[0, 1] * m[1, 2] - m[0, 2] * m[1, 1]
        c[1, 0] = m[1, 2] * m[2, 0] - m[1, 0] * m[2, 2]
        c[1, 1] = m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        c[1, 2] = m[0, 2] * m[1, 0] - m[0, 0] * m[1, 2]
        c[2, 0] = m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]
        c[2, 1] = m[0, 1] * m[2, 0] - m[0, 0] * m[2, 1]
        c[2, 2] = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        det = m[0, 0] * c[0, 0] + m[0, 1] * c[1, 0] + m[0, 2] * c[2, 0]
        return c / det
    return np.linalg.inv(m)


def polar_project(m: np.ndarray) -> np.ndarray:
    """Nearest orthogonal matrix with positive determinant (special polar factor)."""
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1.0
        r = u @ vt
    return r


_TRIU_CACHE: dict = {}


def _triu(n: int):
    if n not in _TRIU_CACHE:
        _TRIU_CACHE[n] = np.triu_indices(n, k=1)
    return _TRIU_CACHE[n]


def pack_upper(mat: np.ndarray) -> np.ndarray:
    """Strictly-upper-triangular entries of an antisymmetric matrix, row-major."""
    return np.asarray(mat[_triu(mat.shape[0])], dtype=float)


def unpack_upper(vec: np.ndarray, n: int) -> np.ndarray:
    """Antisymmetric matrix from its strictly-upper-triangular entries."""
    mat = np.zeros((n, n))
    mat[_triu(n)] = vec
    return mat - mat.T


def upper_size(n: int) -> int:
    return n * (n - 1) // 2

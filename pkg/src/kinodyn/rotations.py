"""Quaternion and rotation helpers, generic over plain or dual scalars.

Quaternions are (w, x, y, z). Angular velocities are expressed in the
inertial frame (left trivialization, Rdot = S(omega) R), so integrating a
rotation applies the exponential on the left.
"""

from __future__ import annotations

import numpy as np

from . import ad


def skew(v):
    """3x3 matrix S with S @ y = v x y."""
    z = 0.0 * v[0]
    return np.array(
        [
            [z, -v[2], v[1]],
            [v[2], z, -v[0]],
            [-v[1], v[0], z],
        ],
        dtype=object if _is_generic(v) else float,
    )


def cross(a, b):
    out = np.empty(3, dtype=object if (_is_generic(a) or _is_generic(b)) else float)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def _is_generic(v):
    return getattr(v, "dtype", None) == object or isinstance(v, (list, tuple))


def quat_mul(a, b):
    """Hamilton product a (x) b."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    out = np.empty(4, dtype=object if (_is_generic(a) or _is_generic(b)) else float)
    out[0] = aw * bw - ax * bx - ay * by - az * bz
    out[1] = aw * bx + ax * bw + ay * bz - az * by
    out[2] = aw * by - ax * bz + ay * bw + az * bx
    out[3] = aw * bz + ax * by - ay * bx + az * bw
    return out


def quat_exp(w):
    """Unit quaternion exponential of a rotation vector.

    Series-expanded below theta^2 = 1e-8 so derivatives stay exact at zero.
    """
    th2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
    if ad.value_of(th2) < 1e-8:
        # cos(t/2) and sin(t/2)/t as series in t^2
        c = 1.0 - th2 / 8.0 + th2 * th2 / 384.0
        s = 0.5 - th2 / 48.0 + th2 * th2 / 3840.0
    else:
        th = ad.sqrt(th2)
        c = ad.cos(th * 0.5)
        s = ad.sin(th * 0.5) / th
    out = np.empty(4, dtype=object if _is_generic(w) else float)
    out[0] = c
    out[1] = s * w[0]
    out[2] = s * w[1]
    out[3] = s * w[2]
    return out


def quat_to_rot(q):
    """Rotation matrix of a unit quaternion (plain unit formula, polynomial)."""
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ],
        dtype=object if _is_generic(q) else float,
    )


def rot_to_quat(R):
    """Quaternion (w >= 0) of a rotation matrix. Float-only helper."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    else:
        i = int(np.argmax([R[0, 0], R[1, 1], R[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(R[i, i] - R[j, j] - R[k, k] + 1.0) * 2.0
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def axis_angle_rot(axis, angle):
    """Rodrigues rotation about a fixed unit axis by a generic angle."""
    c = ad.cos(angle)
    s = ad.sin(angle)
    S = skew(np.asarray(axis, dtype=float))
    return np.eye(3) + s * S + (1.0 - c) * (S @ S)

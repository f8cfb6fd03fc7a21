"""Thrust and contact force models.

Jet thrust acts as a pure force along the jet frame's -z axis; its
magnitude follows a second-order polynomial ODE in (T, Tdot, u). Contact
is modeled per patch vertex with a linearized friction cone and relaxed
complementarity residuals against a pluggable ground height-field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ad import value_of
from .errors import DegenerateNormal, NegativeThrust


@dataclass
class JetState:
    T: float
    T_dot: float


@dataclass
class ContactForce:
    vertex: str
    f: np.ndarray
    f_dot: np.ndarray


@dataclass
class FrictionCone:
    A: np.ndarray  # 4x3, A f <= b
    b: np.ndarray
    mu: float
    normal: np.ndarray
    t1: np.ndarray
    t2: np.ndarray


def thrust_vector(rotation, T):
    """Force of a thrust T through a jet frame with the given rotation."""
    # R @ (0, 0, -T) is -T times the frame's z axis in inertial coordinates.
    return rotation[:, 2] * (-T)


def jet_force(jet_pose, T):
    """Pure force produced by a jet at thrust T >= 0, inertial frame."""
    if value_of(T) < 0:
        raise NegativeThrust(f"thrust {value_of(T)} < 0")
    return thrust_vector(jet_pose.rotation, T)


def jet_acceleration(coeffs, T, T_dot, u):
    """Second derivative of thrust under throttle u, exact polynomial."""
    drift = (
        coeffs.K_T * T
        + coeffs.K_TT * T * T
        + coeffs.K_D * T_dot
        + coeffs.K_DD * T_dot * T_dot
        + coeffs.K_TD * T * T_dot
        + coeffs.c
    )
    gain = coeffs.B_U + coeffs.B_T * T + coeffs.B_D * T_dot
    return drift + gain * (u + coeffs.B_UU * u * u)


def tangent_basis(n):
    """Deterministic orthonormal tangents for a unit normal.

    t1 = normalize(e x n) with e the x axis, switching to the y axis when
    the normal is nearly parallel to x; t2 completes a right-handed set.
    """
    e = np.array([1.0, 0.0, 0.0])
    if abs(n @ e) > 0.9:
        e = np.array([0.0, 1.0, 0.0])
    t1 = np.cross(e, n)
    t1 = t1 / np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


def friction_cone(mu, n, tangents=None):
    """Linearized cone A f <= 0: |t_i . f| <= mu * (n . f) for both tangents."""
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-6:
        raise DegenerateNormal(f"normal {n} is not unit length")
    if mu <= 0:
        raise DegenerateNormal(f"friction coefficient {mu} must be positive")
    t1, t2 = tangents if tangents is not None else tangent_basis(n)
    A = np.vstack([t1 - mu * n, -t1 - mu * n, t2 - mu * n, -t2 - mu * n])
    return FrictionCone(A=A, b=np.zeros(4), mu=mu, normal=n, t1=t1, t2=t2)


class FlatGround:
    """Plane z = 0 with fixed normal and tangent basis."""

    name = "flat"
    planar = True
    normal = np.array([0.0, 0.0, 1.0])
    t1 = np.array([1.0, 0.0, 0.0])
    t2 = np.array([0.0, 1.0, 0.0])

    def height(self, p):
        """Signed clearance of a point above the surface."""
        return p[2]

    def normal_at(self, p):
        return self.normal

    def tangents_at(self, p):
        return self.t1, self.t2


GROUNDS = {"flat": FlatGround()}


def complementarity_residual(p, f, ground):
    """d(p) * (n(p) . f): zero when the vertex is down or unloaded."""
    n = ground.normal_at(p)
    return ground.height(p) * (n @ f)


def planar_complementarity_residual(p_k, p_next, f, ground):
    """Tangential slip-force products (t_i . (p_next - p_k)) * (n . f)."""
    n = ground.normal_at(p_k)
    t1, t2 = ground.tangents_at(p_k)
    delta = p_next - p_k
    nf = n @ f
    return np.array([(t1 @ delta) * nf, (t2 @ delta) * nf])

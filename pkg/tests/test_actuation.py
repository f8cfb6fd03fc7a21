"""Thrust response, friction cones, and complementarity residuals."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from kinodyn.actuation import (
    FlatGround,
    complementarity_residual,
    friction_cone,
    jet_acceleration,
    jet_force,
    planar_complementarity_residual,
    tangent_basis,
    thrust_vector,
)
from kinodyn.errors import DegenerateNormal, NegativeThrust
from kinodyn.kinematics import Pose
from kinodyn.model import JetCoefficients


COEFFS = JetCoefficients(K_T=-1.0, K_D=-2.0, B_U=25.0)
RICH = JetCoefficients(
    K_T=-0.8, K_TT=-0.01, K_D=-1.5, K_DD=-0.02, K_TD=0.003, c=0.4, B_U=20.0, B_T=0.1, B_D=0.05, B_UU=-0.2
)


def test_jet_acceleration_closed_form():
    # polynomial evaluated term by term by hand
    T, Td, u = 3.0, -0.5, 0.7
    want = (
        RICH.K_T * T
        + RICH.K_TT * T**2
        + RICH.K_D * Td
        + RICH.K_DD * Td**2
        + RICH.K_TD * T * Td
        + RICH.c
        + (RICH.B_U + RICH.B_T * T + RICH.B_D * Td) * (u + RICH.B_UU * u**2)
    )
    assert jet_acceleration(RICH, T, Td, u) == pytest.approx(want, rel=1e-15)


def test_steady_state_thrust_under_constant_throttle():
    # Tdd = -T - 2 Td + 25 u has fixed point T = 25 u, Td = 0
    u = 0.6
    assert jet_acceleration(COEFFS, 25.0 * u, 0.0, u) == pytest.approx(0.0, abs=1e-12)


def test_thrust_ode_converges_to_steady_state():
    u = 0.4
    sol = solve_ivp(
        lambda t, y: [y[1], jet_acceleration(COEFFS, y[0], y[1], u)],
        (0.0, 30.0),
        [0.0, 0.0],
        rtol=1e-10,
        atol=1e-12,
    )
    assert sol.y[0, -1] == pytest.approx(25.0 * u, abs=1e-6)
    assert sol.y[1, -1] == pytest.approx(0.0, abs=1e-6)


def test_thrust_vector_points_down_jet_frame():
    R = np.eye(3)
    np.testing.assert_allclose(thrust_vector(R, 5.0), [0.0, 0.0, -5.0])
    # flipping the frame about x sends -z to +z
    Rx = np.diag([1.0, -1.0, -1.0])
    np.testing.assert_allclose(thrust_vector(Rx, 5.0), [0.0, 0.0, 5.0])


def test_jet_force_rejects_negative_thrust():
    with pytest.raises(NegativeThrust):
        jet_force(Pose(position=np.zeros(3), rotation=np.eye(3)), -1.0)


def test_jet_force_magnitude_preserved():
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = rng.normal(size=3)
        a = v / np.linalg.norm(v)
        b = np.cross(a, rng.normal(size=3))
        b /= np.linalg.norm(b)
        R = np.column_stack([a, b, np.cross(a, b)])
        f = jet_force(Pose(position=np.zeros(3), rotation=R), 7.5)
        assert np.linalg.norm(f) == pytest.approx(7.5, rel=1e-12)
        np.testing.assert_allclose(f, -7.5 * R[:, 2], atol=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=60)
def test_tangent_basis_orthonormal(a, b, c):
    v = np.array([a, b, c])
    if np.linalg.norm(v) < 1e-3:
        return
    n = v / np.linalg.norm(v)
    t1, t2 = tangent_basis(n)
    G = np.column_stack([t1, t2, n])
    np.testing.assert_allclose(G.T @ G, np.eye(3), atol=1e-12)
    assert np.linalg.det(G) == pytest.approx(1.0, abs=1e-12)


def test_friction_cone_membership():
    mu = 0.7
    cone = friction_cone(mu, np.array([0.0, 0.0, 1.0]))
    inside = np.array([0.3, -0.2, 1.0])  # |ft| < mu fz
    outside = np.array([0.9, 0.0, 1.0])  # slips along t1
    pulling = np.array([0.0, 0.0, -1.0])
    assert np.all(cone.A @ inside <= 1e-12)
    assert np.any(cone.A @ outside > 0)
    assert np.any(cone.A @ pulling > 0)


def test_friction_cone_boundary_is_tight():
    mu = 0.5
    cone = friction_cone(mu, np.array([0.0, 0.0, 1.0]))
    edge = mu * cone.t1 + cone.normal
    r = cone.A @ edge
    assert np.max(r) == pytest.approx(0.0, abs=1e-12)


def test_friction_cone_rejects_bad_inputs():
    with pytest.raises(DegenerateNormal):
        friction_cone(0.7, np.array([0.0, 0.0, 2.0]))
    with pytest.raises(DegenerateNormal):
        friction_cone(-0.1, np.array([0.0, 0.0, 1.0]))


def test_complementarity_residual_vanishes_on_either_factor():
    g = FlatGround()
    f = np.array([0.1, 0.0, 3.0])
    assert complementarity_residual(np.array([0.2, 0.0, 0.0]), f, g) == 0.0
    assert complementarity_residual(np.array([0.2, 0.0, 0.5]), np.zeros(3), g) == 0.0
    r = complementarity_residual(np.array([0.0, 0.0, 0.5]), f, g)
    assert r == pytest.approx(1.5, rel=1e-12)


def test_planar_complementarity_tracks_slip_times_load():
    g = FlatGround()
    p0 = np.array([0.0, 0.0, 0.0])
    p1 = np.array([0.02, -0.01, 0.0])
    f = np.array([0.0, 0.0, 10.0])
    r = planar_complementarity_residual(p0, p1, f, g)
    np.testing.assert_allclose(r, [0.2, -0.1], atol=1e-12)
    np.testing.assert_allclose(
        planar_complementarity_residual(p0, p1, np.zeros(3), g), [0.0, 0.0]
    )


def test_flat_ground_height_and_frames():
    g = FlatGround()
    assert g.height(np.array([5.0, -2.0, 0.3])) == pytest.approx(0.3)
    t1, t2 = g.tangents_at(np.zeros(3))
    np.testing.assert_allclose(np.cross(t1, t2), g.normal, atol=1e-15)

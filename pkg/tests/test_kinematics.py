"""Kinematics oracles.

The CoM is checked against an independent homogeneous-transform walk
built on scipy rotations; Jacobians and the momentum matrix are checked
against central finite differences through the geodesic perturbation.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from conftest import random_configuration, random_velocity
from kinodyn.errors import UnknownFrame
from kinodyn.kinematics import (
    Configuration,
    Velocity,
    centroidal_momentum,
    cmm,
    com,
    forward_kinematics,
    frame_jacobian,
    perturb,
)
from kinodyn.model import joint_index


def _mat(q_wxyz):
    return Rotation.from_quat([q_wxyz[1], q_wxyz[2], q_wxyz[3], q_wxyz[0]]).as_matrix()


def brute_force_poses(model, q):
    """FK by plain 4x4 transform composition, scipy rotations throughout."""
    T = {}
    M = np.eye(4)
    M[:3, :3] = _mat(q.base_quat)
    M[:3, 3] = q.base_pos
    T[model.base_link] = M
    pending = list(model.joints)
    while pending:
        rest = [j for j in pending if j.parent not in T]
        for j in pending:
            if j.parent not in T:
                continue
            O = np.eye(4)
            O[:3, :3] = _mat(j.origin_quat)
            O[:3, 3] = j.origin_xyz
            J = np.eye(4)
            if j.kind == "revolute":
                J[:3, :3] = Rotation.from_rotvec(
                    np.asarray(j.axis) * q.s[joint_index(model, j.name)]
                ).as_matrix()
            elif j.kind == "prismatic":
                J[:3, 3] = np.asarray(j.axis) * q.s[joint_index(model, j.name)]
            T[j.child] = T[j.parent] @ O @ J
        pending = rest
    return T


def brute_force_com(model, q):
    T = brute_force_poses(model, q)
    total = np.zeros(3)
    for link in model.links:
        M = T[link.name]
        total += link.mass * (M[:3, 3] + M[:3, :3] @ link.com_offset)
    return total / model.total_mass


def _unit_velocity(model, i):
    nu = np.zeros(6 + model.n_dof)
    nu[i] = 1.0
    return Velocity(base_lin=nu[0:3], base_ang=nu[3:6], s_dot=nu[6:])


def fd_frame_jacobian(model, q, frame, h=1e-6):
    cols = []
    for i in range(6 + model.n_dof):
        nu = _unit_velocity(model, i)
        fp = forward_kinematics(model, perturb(q, nu, h), frame)
        fm = forward_kinematics(model, perturb(q, nu, -h), frame)
        lin = (fp.position - fm.position) / (2 * h)
        W = (fp.rotation - fm.rotation) / (2 * h) @ forward_kinematics(model, q, frame).rotation.T
        ang = np.array([W[2, 1], W[0, 2], W[1, 0]])
        cols.append(np.concatenate([lin, ang]))
    return np.column_stack(cols)


def fd_com_jacobian(model, q, h=1e-6):
    cols = []
    for i in range(6 + model.n_dof):
        nu = _unit_velocity(model, i)
        cols.append((com(model, perturb(q, nu, h)) - com(model, perturb(q, nu, -h))) / (2 * h))
    return np.column_stack(cols)


def fd_cmm(model, q, h=1e-3):
    cols = []
    for i in range(6 + model.n_dof):
        nu = _unit_velocity(model, i)
        hp = centroidal_momentum(model, q, Velocity(h * nu.base_lin, h * nu.base_ang, h * nu.s_dot))
        hm = centroidal_momentum(model, q, Velocity(-h * nu.base_lin, -h * nu.base_ang, -h * nu.s_dot))
        cols.append((hp - hm) / (2 * h))
    return np.column_stack(cols)


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))


def test_com_against_brute_force(mini_biped):
    rng = np.random.default_rng(7)
    for _ in range(120):
        q = random_configuration(mini_biped, rng)
        assert rel_err(com(mini_biped, q), brute_force_com(mini_biped, q)) < 1e-10


def test_frame_positions_against_brute_force(mini_biped):
    rng = np.random.default_rng(8)
    T = brute_force_poses(mini_biped, random_configuration(mini_biped, rng))
    for _ in range(30):
        q = random_configuration(mini_biped, rng)
        T = brute_force_poses(mini_biped, q)
        for link in mini_biped.links:
            pose = forward_kinematics(mini_biped, q, link.name)
            assert rel_err(pose.position, T[link.name][:3, 3]) < 1e-10
            assert rel_err(pose.rotation, T[link.name][:3, :3]) < 1e-10


def test_frame_jacobians_match_fd(mini_biped):
    rng = np.random.default_rng(9)
    frames = ["left_foot", "left_jet", "right_sole.v2", "torso"]
    for _ in range(25):
        q = random_configuration(mini_biped, rng)
        for frame in frames:
            J = frame_jacobian(mini_biped, q, frame)
            assert rel_err(J, fd_frame_jacobian(mini_biped, q, frame)) < 1e-5


def test_cmm_matches_fd(mini_biped):
    rng = np.random.default_rng(10)
    for _ in range(100):
        q = random_configuration(mini_biped, rng)
        assert rel_err(cmm(mini_biped, q), fd_cmm(mini_biped, q)) < 1e-5


def test_cmm_linear_rows_are_mass_times_com_jacobian(mini_biped):
    rng = np.random.default_rng(11)
    for _ in range(100):
        q = random_configuration(mini_biped, rng)
        A = cmm(mini_biped, q)
        assert rel_err(A[0:3], mini_biped.total_mass * fd_com_jacobian(mini_biped, q)) < 1e-6


def test_momentum_agrees_with_cmm_product(mini_biped):
    # two independent code paths: link-by-link momentum sum vs matrix product
    rng = np.random.default_rng(12)
    for _ in range(50):
        q = random_configuration(mini_biped, rng)
        nu = random_velocity(mini_biped, rng)
        h1 = centroidal_momentum(mini_biped, q, nu)
        h2 = cmm(mini_biped, q) @ np.concatenate([nu.base_lin, nu.base_ang, nu.s_dot])
        assert rel_err(h1, h2) < 1e-9


def test_momentum_linear_in_velocity(mini_biped):
    rng = np.random.default_rng(13)
    q = random_configuration(mini_biped, rng)
    nu = random_velocity(mini_biped, rng)
    h1 = centroidal_momentum(mini_biped, q, nu)
    h3 = centroidal_momentum(
        mini_biped, q, Velocity(3 * nu.base_lin, 3 * nu.base_ang, 3 * nu.s_dot)
    )
    np.testing.assert_allclose(h3, 3 * h1, rtol=1e-12, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_com_translation_equivariance(mini_biped, seed):
    rng = np.random.default_rng(seed)
    q = random_configuration(mini_biped, rng)
    d = rng.normal(size=3)
    shifted = Configuration(base_pos=q.base_pos + d, base_quat=q.base_quat, s=q.s)
    np.testing.assert_allclose(com(mini_biped, shifted), com(mini_biped, q) + d, atol=1e-12)


def test_unknown_frame_raises(mini_biped):
    q = random_configuration(mini_biped, np.random.default_rng(0))
    with pytest.raises(UnknownFrame):
        forward_kinematics(mini_biped, q, "left_sole.v7")
    with pytest.raises(UnknownFrame):
        frame_jacobian(mini_biped, q, "tail")


def test_patch_vertices_rigid_on_foot(mini_biped):
    # vertex frames ride the foot: distances between vertices never change
    rng = np.random.default_rng(14)
    patch = mini_biped.patches[0]
    ref = np.linalg.norm(patch.vertices[0] - patch.vertices[2])
    for _ in range(10):
        q = random_configuration(mini_biped, rng)
        a = forward_kinematics(mini_biped, q, f"{patch.name}.v0").position
        b = forward_kinematics(mini_biped, q, f"{patch.name}.v2").position
        assert np.linalg.norm(a - b) == pytest.approx(ref, rel=1e-12)

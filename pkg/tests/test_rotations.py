import numpy as np
from hypothesis import given, settings, strategies as st

from kinodyn.rotations import (
    axis_angle_rot,
    cross,
    quat_exp,
    quat_mul,
    quat_to_rot,
    rot_to_quat,
    skew,
)

finite = st.floats(-10.0, 10.0, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


@given(vec3, vec3)
def test_skew_matches_cross(a, b):
    np.testing.assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-12)
    np.testing.assert_allclose(cross(a, b).astype(float), np.cross(a, b), atol=1e-12)


@given(vec3)
@settings(max_examples=50)
def test_quat_exp_is_unit(w):
    q = quat_exp(w)
    assert abs(np.dot(q, q) - 1.0) < 1e-9


@given(vec3, vec3)
@settings(max_examples=50)
def test_quat_mul_composes_rotations(u, v):
    qa, qb = quat_exp(u), quat_exp(v)
    R1 = quat_to_rot(quat_mul(qa, qb))
    R2 = quat_to_rot(qa) @ quat_to_rot(qb)
    np.testing.assert_allclose(R1, R2, atol=1e-9)


@given(vec3)
@settings(max_examples=50)
def test_rot_quat_round_trip(w):
    q = quat_exp(w)
    R = quat_to_rot(q)
    q2 = rot_to_quat(R)
    # same rotation up to sign
    np.testing.assert_allclose(quat_to_rot(q2), R, atol=1e-8)
    assert q2[0] >= 0


def test_quat_exp_small_angle_branch_is_continuous():
    # values straddling the series switch must agree to high order
    w = np.array([3e-5, -4e-5, 5e-5])
    a = quat_exp(w)
    th = np.linalg.norm(w)
    expected = np.concatenate([[np.cos(th / 2)], np.sin(th / 2) * w / th])
    np.testing.assert_allclose(a, expected, atol=1e-15)


def test_axis_angle_matches_quat_path():
    axis = np.array([0.0, 0.0, 1.0])
    for ang in (-2.0, -0.3, 0.0, 0.7, 3.0):
        R1 = axis_angle_rot(axis, ang)
        R2 = quat_to_rot(quat_exp(axis * ang))
        np.testing.assert_allclose(R1, R2, atol=1e-12)


def test_rot_to_quat_negative_trace_branch():
    # 180-degree turn about x has trace -1
    R = np.diag([1.0, -1.0, -1.0])
    q = rot_to_quat(R)
    np.testing.assert_allclose(quat_to_rot(q), R, atol=1e-12)

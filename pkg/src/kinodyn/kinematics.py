"""Differentiable kinematics: frame poses, CoM, Jacobians, momentum.

Every function here evaluates over a generic scalar type: plain float64
arrays, or object arrays of AD duals. That is the single mechanism by
which downstream constraint Jacobians are obtained. Angular velocities
are inertial-frame throughout (Rdot = S(w) R), and frame Jacobians map
nu = (base linear, base angular, joint rates) to (frame linear, frame
angular) in inertial coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnknownFrame
from .model import joint_index
from .rotations import axis_angle_rot, cross, quat_exp, quat_mul, quat_to_rot, skew


@dataclass
class Configuration:
    base_pos: np.ndarray
    base_quat: np.ndarray  # (w, x, y, z), unit
    s: np.ndarray

    def __post_init__(self):
        self.base_pos = np.asarray(self.base_pos, dtype=float)
        self.base_quat = np.asarray(self.base_quat, dtype=float)
        self.s = np.asarray(self.s, dtype=float)


@dataclass
class Velocity:
    base_lin: np.ndarray
    base_ang: np.ndarray  # inertial-frame angular velocity
    s_dot: np.ndarray

    def __post_init__(self):
        self.base_lin = np.asarray(self.base_lin, dtype=float)
        self.base_ang = np.asarray(self.base_ang, dtype=float)
        self.s_dot = np.asarray(self.s_dot, dtype=float)


@dataclass
class Pose:
    position: np.ndarray
    rotation: np.ndarray


def link_poses(model, p, quat, s):
    """Pose (position, rotation) of every link frame, keyed by link name.

    Accepts float or object arrays; results share the input scalar type.
    """
    poses = {model.base_link: (np.asarray(p), quat_to_rot(quat))}
    for j in model.topo_joints:
        pp, Rp = poses[j.parent]
        Ro = quat_to_rot(j.origin_quat)
        pos = pp + Rp @ j.origin_xyz
        Rc = Rp @ Ro
        if j.kind == "revolute":
            Rc = Rc @ axis_angle_rot(j.axis, s[joint_index(model, j.name)])
        elif j.kind == "prismatic":
            pos = pos + Rc @ (j.axis * s[joint_index(model, j.name)])
        poses[j.child] = (pos, Rc)
    return poses


def frame_pose(model, poses, frame):
    """Resolve a link, jet, or patch-vertex frame from link poses."""
    if frame in poses:
        return poses[frame]
    jet = model._jet_by_name.get(frame)
    if jet is not None:
        pl, Rl = poses[jet.parent_link]
        return pl + Rl @ jet.mount_xyz, Rl @ quat_to_rot(jet.mount_quat)
    if "." in frame:
        patch_name, _, tail = frame.rpartition(".")
        patch = model._patch_by_name.get(patch_name)
        if patch is not None and len(tail) == 2 and tail[0] == "v" and tail[1] in "0123":
            pl, Rl = poses[patch.parent_link]
            return pl + Rl @ patch.vertices[int(tail[1])], Rl
    raise UnknownFrame(f"no frame named {frame!r}")


def _frame_link(model, frame):
    """Link a frame is rigidly attached to."""
    if frame in model._link_by_name:
        return frame
    jet = model._jet_by_name.get(frame)
    if jet is not None:
        return jet.parent_link
    if "." in frame:
        patch = model._patch_by_name.get(frame.rpartition(".")[0])
        if patch is not None:
            return patch.parent_link
    raise UnknownFrame(f"no frame named {frame!r}")


def com_from_poses(model, poses):
    acc = 0.0
    for link in model.links:
        pl, Rl = poses[link.name]
        acc = acc + link.mass * (pl + Rl @ link.com_offset)
    return acc / model.total_mass


def link_twists(model, poses, v_lin, v_ang, s_dot):
    """Inertial-frame (linear, angular) velocity of every link frame."""
    twists = {model.base_link: (np.asarray(v_lin), np.asarray(v_ang))}
    for j in model.topo_joints:
        pp, Rp = poses[j.parent]
        pc, _ = poses[j.child]
        vp, wp = twists[j.parent]
        v = vp + cross(wp, pc - pp)
        w = wp
        if j.kind != "fixed":
            a_world = Rp @ (quat_to_rot(j.origin_quat) @ j.axis)
            rate = s_dot[joint_index(model, j.name)]
            if j.kind == "revolute":
                w = w + a_world * rate
            else:
                v = v + a_world * rate
        twists[j.child] = (v, w)
    return twists


def momentum_from_state(model, poses, v_lin, v_ang, s_dot):
    """Centroidal momentum (h_p, h_w) about the instantaneous CoM.

    Sums each link's spatial momentum: linear m*v_com, angular I*w plus
    the moment of linear momentum about the CoM.
    """
    twists = link_twists(model, poses, v_lin, v_ang, s_dot)
    x = com_from_poses(model, poses)
    h_p = np.zeros(3) if not _is_object(x) else _ozeros(3)
    h_w = np.zeros(3) if not _is_object(x) else _ozeros(3)
    for link in model.links:
        pl, Rl = poses[link.name]
        vl, wl = twists[link.name]
        c_w = Rl @ link.com_offset
        v_com = vl + cross(wl, c_w)
        inertia_w = Rl @ link.inertia @ _transpose(Rl)
        h_p = h_p + link.mass * v_com
        h_w = h_w + inertia_w @ wl + link.mass * cross((pl + c_w) - x, v_com)
    return h_p, h_w


def _is_object(a):
    return isinstance(a, np.ndarray) and a.dtype == object


def _ozeros(n):
    z = np.empty(n, dtype=object)
    z[:] = 0.0
    return z


def _transpose(R):
    return R.T


def _path_joints(model, frame_link):
    """Non-fixed joints on the chain base -> frame_link."""
    out = []
    cur = frame_link
    while cur != model.base_link:
        j = model.parent_joint(cur)
        if j.kind != "fixed":
            out.append(j)
        cur = j.parent
    return out


def _frame_jacobian_from_poses(model, poses, frame):
    p_f, _ = frame_pose(model, poses, frame)
    p_b = poses[model.base_link][0]
    n = model.n_dof
    J = np.zeros((6, 6 + n))
    J[0:3, 0:3] = np.eye(3)
    J[0:3, 3:6] = -skew(p_f - p_b)
    J[3:6, 3:6] = np.eye(3)
    for j in _path_joints(model, _frame_link(model, frame)):
        a_world = poses[j.parent][1] @ (quat_to_rot(j.origin_quat) @ j.axis)
        col = 6 + joint_index(model, j.name)
        if j.kind == "revolute":
            J[0:3, col] = cross(a_world, p_f - poses[j.child][0])
            J[3:6, col] = a_world
        else:
            J[0:3, col] = a_world
    return J


# public float API


def forward_kinematics(model, q, frame):
    """Pose of a link, jet, or patch-vertex frame in the inertial frame."""
    poses = link_poses(model, q.base_pos, q.base_quat, q.s)
    pos, rot = frame_pose(model, poses, frame)
    return Pose(position=pos, rotation=rot)


def com(model, q):
    """Mass-weighted mean of link CoM positions, inertial frame."""
    return com_from_poses(model, link_poses(model, q.base_pos, q.base_quat, q.s))


def frame_jacobian(model, q, frame):
    """6x(6+n_dof) map from nu to the frame's (linear, angular) velocity."""
    poses = link_poses(model, q.base_pos, q.base_quat, q.s)
    return _frame_jacobian_from_poses(model, poses, frame)


def cmm(model, q):
    """Centroidal Momentum Matrix: h = cmm(q) @ nu.

    Built link by link: each link's spatial inertia, expressed at its frame
    origin with inertial axes, composed with the link Jacobian, then shifted
    to the frame at the CoM with inertial orientation.
    """
    poses = link_poses(model, q.base_pos, q.base_quat, q.s)
    x = com_from_poses(model, poses)
    out = np.zeros((6, 6 + model.n_dof))
    for link in model.links:
        pl, Rl = poses[link.name]
        c_w = Rl @ link.com_offset
        sc = skew(c_w)
        inertia_w = Rl @ link.inertia @ Rl.T
        m = link.mass
        spatial = np.block([[m * np.eye(3), -m * sc], [m * sc, inertia_w - m * sc @ sc]])
        shift = np.block([[np.eye(3), np.zeros((3, 3))], [skew(pl - x), np.eye(3)]])
        out += shift @ spatial @ _frame_jacobian_from_poses(model, poses, link.name)
    return out


def centroidal_momentum(model, q, nu):
    """Centroidal momentum 6-vector (h_p, h_w) for a float state."""
    poses = link_poses(model, q.base_pos, q.base_quat, q.s)
    h_p, h_w = momentum_from_state(model, poses, nu.base_lin, nu.base_ang, nu.s_dot)
    return np.concatenate([h_p, h_w])


def perturb(q, nu, h):
    """Geodesic step q + h*nu: shift p and s, left-multiply the base quat."""
    return Configuration(
        base_pos=q.base_pos + h * nu.base_lin,
        base_quat=quat_mul(quat_exp(h * nu.base_ang), q.base_quat),
        s=q.s + h * nu.s_dot,
    )

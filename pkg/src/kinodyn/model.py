"""Robot description: links, joints, jets, contact patches.

Models are loaded from a small JSON schema (see `parse_model`) and are
immutable after construction. Joint ordering follows document order and
fixes the joint-coordinate index map used everywhere else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DanglingReference,
    InvalidInertia,
    KinematicLoop,
    MalformedDocument,
    UnknownJoint,
)

GRAVITY = 9.81  # m/s^2, +z up

# Default thrust-dynamics coefficients used when a jet omits `coeffs`:
# Tdd = -T - 2*Td + 25*u, a stable second-order response with steady state
# T = 25 u. Real engines need identified values; outputs produced with this
# fallback are flagged "synthetic coefficients".
SYNTHETIC_COEFFS = {"K_T": -1.0, "K_D": -2.0, "B_U": 25.0}

COEFF_NAMES = ("K_T", "K_TT", "K_D", "K_DD", "K_TD", "c", "B_U", "B_T", "B_D", "B_UU")

JOINT_KINDS = ("revolute", "prismatic", "fixed")


@dataclass
class JetCoefficients:
    K_T: float = 0.0
    K_TT: float = 0.0
    K_D: float = 0.0
    K_DD: float = 0.0
    K_TD: float = 0.0
    c: float = 0.0
    B_U: float = 0.0
    B_T: float = 0.0
    B_D: float = 0.0
    B_UU: float = 0.0


@dataclass
class Link:
    name: str
    mass: float
    inertia: np.ndarray  # 3x3 symmetric, link frame at link CoM
    com_offset: np.ndarray  # CoM position in link frame


@dataclass
class Joint:
    name: str
    parent: str
    child: str
    kind: str
    axis: np.ndarray
    origin_xyz: np.ndarray
    origin_quat: np.ndarray  # (w, x, y, z)
    limits: tuple
    vel_limits: tuple


@dataclass
class JetSpec:
    name: str
    parent_link: str
    mount_xyz: np.ndarray
    mount_quat: np.ndarray
    thrust_max: float
    throttle_bounds: tuple
    coeffs: JetCoefficients
    synthetic_coeffs: bool = False


@dataclass
class ContactPatch:
    name: str
    parent_link: str
    vertices: np.ndarray  # 4x3, link frame
    friction_mu: float


@dataclass
class RobotModel:
    links: list
    joints: list
    base_link: str
    jets: list
    patches: list
    total_mass: float = field(init=False)
    n_dof: int = field(init=False)

    def __post_init__(self):
        self.total_mass = float(sum(l.mass for l in self.links))
        self.n_dof = sum(1 for j in self.joints if j.kind != "fixed")
        self._link_by_name = {l.name: l for l in self.links}
        self._joint_by_name = {j.name: j for j in self.joints}
        self._sidx = {}
        for j in self.joints:
            if j.kind != "fixed":
                self._sidx[j.name] = len(self._sidx)
        # child link name -> joint attaching it to its parent
        self._parent_joint = {j.child: j for j in self.joints}
        self._jet_by_name = {j.name: j for j in self.jets}
        self._patch_by_name = {p.name: p for p in self.patches}
        # joints reordered so a parent link is always placed before its
        # children; document order is kept among ready joints
        placed = {self.base_link}
        pending = list(self.joints)
        self.topo_joints = []
        while pending:
            rest = []
            for j in pending:
                if j.parent in placed:
                    self.topo_joints.append(j)
                    placed.add(j.child)
                else:
                    rest.append(j)
            if len(rest) == len(pending):
                raise KinematicLoop(f"joints not reachable from the base: {[j.name for j in rest]}")
            pending = rest

    def link(self, name):
        return self._link_by_name[name]

    def joint(self, name):
        return self._joint_by_name[name]

    def actuated_joints(self):
        return [j for j in self.joints if j.kind != "fixed"]

    def parent_joint(self, link_name):
        """Joint whose child is `link_name`, or None for the base."""
        return self._parent_joint.get(link_name)


def joint_index(model, name):
    """0-based index of a non-fixed joint in the joint-coordinate vector."""
    idx = model._sidx.get(name)
    if idx is None:
        raise UnknownJoint(f"no actuated joint named {name!r}")
    return idx


def _require(cond, msg):
    if not cond:
        raise MalformedDocument(msg)


def _fields(obj, where, required, optional=()):
    _require(isinstance(obj, dict), f"{where}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    _require(not unknown, f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    _require(not missing, f"{where}: missing keys {missing}")


def _vec(x, n, where):
    try:
        v = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise MalformedDocument(f"{where}: expected {n} numbers") from None
    _require(v.shape == (n,), f"{where}: expected {n} numbers")
    _require(np.all(np.isfinite(v)), f"{where}: non-finite entry")
    return v


def _pair(x, where, default=None):
    if x is None:
        return default
    v = _vec(x, 2, where)
    _require(v[0] <= v[1], f"{where}: lower bound exceeds upper bound")
    return (float(v[0]), float(v[1]))


def _transform(obj, where):
    if obj is None:
        return np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0])
    _fields(obj, where, (), ("xyz", "quat"))
    xyz = _vec(obj.get("xyz", (0.0, 0.0, 0.0)), 3, f"{where}.xyz")
    quat = _vec(obj.get("quat", (1.0, 0.0, 0.0, 0.0)), 4, f"{where}.quat")
    nrm = np.linalg.norm(quat)
    _require(abs(nrm - 1.0) < 1e-6, f"{where}.quat: not a unit quaternion")
    return xyz, quat / nrm


def _inertia(values, where):
    v = _vec(values, 6, where)
    ixx, ixy, ixz, iyy, iyz, izz = v
    inert = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    if np.min(np.linalg.eigvalsh(inert)) < -1e-12:
        raise InvalidInertia(f"{where}: inertia matrix is not positive semidefinite")
    return inert


def _parse_link(obj, i):
    where = f"links[{i}]"
    _fields(obj, where, ("name", "mass", "inertia", "com"))
    mass = float(obj["mass"])
    if mass < 0:
        raise InvalidInertia(f"{where}: negative mass")
    return Link(
        name=str(obj["name"]),
        mass=mass,
        inertia=_inertia(obj["inertia"], f"{where}.inertia"),
        com_offset=_vec(obj["com"], 3, f"{where}.com"),
    )


def _parse_joint(obj, i):
    where = f"joints[{i}]"
    _fields(
        obj,
        where,
        ("name", "parent", "child", "kind"),
        ("axis", "origin", "limits", "vel_limits"),
    )
    kind = str(obj["kind"])
    _require(kind in JOINT_KINDS, f"{where}: unknown joint kind {kind!r}")
    if kind == "fixed":
        axis = np.zeros(3)
        _require("axis" not in obj, f"{where}: fixed joint takes no axis")
    else:
        axis = _vec(obj.get("axis"), 3, f"{where}.axis")
        _require(abs(np.linalg.norm(axis) - 1.0) < 1e-9, f"{where}.axis: not unit norm")
    xyz, quat = _transform(obj.get("origin"), f"{where}.origin")
    inf = float("inf")
    return Joint(
        name=str(obj["name"]),
        parent=str(obj["parent"]),
        child=str(obj["child"]),
        kind=kind,
        axis=axis,
        origin_xyz=xyz,
        origin_quat=quat,
        limits=_pair(obj.get("limits"), f"{where}.limits", (-inf, inf)),
        vel_limits=_pair(obj.get("vel_limits"), f"{where}.vel_limits", (-inf, inf)),
    )


def _parse_jet(obj, i):
    where = f"jets[{i}]"
    _fields(
        obj,
        where,
        ("name", "parent", "mount", "thrust_max"),
        ("throttle_bounds", "coeffs"),
    )
    xyz, quat = _transform(obj["mount"], f"{where}.mount")
    thrust_max = float(obj["thrust_max"])
    _require(thrust_max > 0, f"{where}: thrust_max must be positive")
    raw = obj.get("coeffs")
    if raw is None:
        coeffs, synthetic = JetCoefficients(**SYNTHETIC_COEFFS), True
    else:
        _fields(raw, f"{where}.coeffs", (), COEFF_NAMES)
        coeffs, synthetic = JetCoefficients(**{k: float(v) for k, v in raw.items()}), False
    return JetSpec(
        name=str(obj["name"]),
        parent_link=str(obj["parent"]),
        mount_xyz=xyz,
        mount_quat=quat,
        thrust_max=thrust_max,
        throttle_bounds=_pair(obj.get("throttle_bounds"), f"{where}.throttle_bounds", (0.0, 1.0)),
        coeffs=coeffs,
        synthetic_coeffs=synthetic,
    )


def _parse_patch(obj, i):
    where = f"patches[{i}]"
    _fields(obj, where, ("name", "parent", "vertices", "mu"))
    raw = obj["vertices"]
    _require(isinstance(raw, list) and len(raw) == 4, f"{where}: expected 4 vertices")
    verts = np.array([_vec(v, 3, f"{where}.vertices[{k}]") for k, v in enumerate(raw)])
    # rectangle corners must be coplanar
    n = np.cross(verts[1] - verts[0], verts[2] - verts[0])
    _require(np.linalg.norm(n) > 1e-12, f"{where}: degenerate vertex layout")
    off = abs((verts[3] - verts[0]) @ (n / np.linalg.norm(n)))
    _require(off < 1e-9, f"{where}: vertices not coplanar")
    mu = float(obj["mu"])
    _require(mu > 0, f"{where}: mu must be positive")
    return ContactPatch(name=str(obj["name"]), parent_link=str(obj["parent"]), vertices=verts, friction_mu=mu)


def _check_tree(links, joints, base_link):
    names = {l.name for l in links}
    if len(names) != len(links):
        raise MalformedDocument("duplicate link names")
    if base_link not in names:
        raise DanglingReference(f"base_link {base_link!r} is not a declared link")
    parent_of = {}
    for j in joints:
        for end in (j.parent, j.child):
            if end not in names:
                raise DanglingReference(f"joint {j.name!r} references unknown link {end!r}")
        if j.child == base_link:
            raise KinematicLoop(f"joint {j.name!r} makes the base link a child")
        if j.child in parent_of:
            raise KinematicLoop(f"link {j.child!r} has two parent joints")
        parent_of[j.child] = j.parent
    # walk each chain up to the base; revisiting a link means a cycle
    for start in parent_of:
        seen = set()
        cur = start
        while cur in parent_of:
            if cur in seen:
                raise KinematicLoop(f"cycle through link {cur!r}")
            seen.add(cur)
            cur = parent_of[cur]
    unattached = names - set(parent_of) - {base_link}
    if unattached:
        raise KinematicLoop(f"links not connected to the base: {sorted(unattached)}")


def parse_model(text):
    """Parse and validate a model document. Returns a RobotModel."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"model is not valid JSON: {e}") from None
    _fields(doc, "model", ("links", "base_link"), ("joints", "jets", "patches"))
    try:
        links = [_parse_link(o, i) for i, o in enumerate(doc["links"])]
        joints = [_parse_joint(o, i) for i, o in enumerate(doc.get("joints", []))]
        jets = [_parse_jet(o, i) for i, o in enumerate(doc.get("jets", []))]
        patches = [_parse_patch(o, i) for i, o in enumerate(doc.get("patches", []))]
    except (TypeError, ValueError, KeyError) as e:
        raise MalformedDocument(f"model document: {e}") from None
    base_link = str(doc["base_link"])
    _check_tree(links, joints, base_link)
    for j in jets:
        if j.parent_link not in {l.name for l in links}:
            raise DanglingReference(f"jet {j.name!r} references unknown link {j.parent_link!r}")
    for p in patches:
        if p.parent_link not in {l.name for l in links}:
            raise DanglingReference(f"patch {p.name!r} references unknown link {p.parent_link!r}")
    dup = len({j.name for j in joints}) != len(joints)
    _require(not dup, "duplicate joint names")
    return RobotModel(links=links, joints=joints, base_link=base_link, jets=jets, patches=patches)


def _dump_transform(xyz, quat):
    return {"xyz": list(map(float, xyz)), "quat": list(map(float, quat))}


def serialize_model(model):
    """Inverse of parse_model: JSON text that parses back field-for-field."""
    doc = {
        "links": [
            {
                "name": l.name,
                "mass": l.mass,
                "inertia": [
                    float(l.inertia[0, 0]),
                    float(l.inertia[0, 1]),
                    float(l.inertia[0, 2]),
                    float(l.inertia[1, 1]),
                    float(l.inertia[1, 2]),
                    float(l.inertia[2, 2]),
                ],
                "com": list(map(float, l.com_offset)),
            }
            for l in model.links
        ],
        "base_link": model.base_link,
    }
    if model.joints:
        doc["joints"] = []
        for j in model.joints:
            obj = {
                "name": j.name,
                "parent": j.parent,
                "child": j.child,
                "kind": j.kind,
                "origin": _dump_transform(j.origin_xyz, j.origin_quat),
                "limits": list(j.limits),
                "vel_limits": list(j.vel_limits),
            }
            if j.kind != "fixed":
                obj["axis"] = list(map(float, j.axis))
            doc["joints"].append(obj)
    if model.jets:
        doc["jets"] = []
        for jet in model.jets:
            obj = {
                "name": jet.name,
                "parent": jet.parent_link,
                "mount": _dump_transform(jet.mount_xyz, jet.mount_quat),
                "thrust_max": jet.thrust_max,
                "throttle_bounds": list(jet.throttle_bounds),
            }
            if not jet.synthetic_coeffs:
                obj["coeffs"] = {k: getattr(jet.coeffs, k) for k in COEFF_NAMES}
            doc["jets"].append(obj)
    if model.patches:
        doc["patches"] = [
            {
                "name": p.name,
                "parent": p.parent_link,
                "vertices": [list(map(float, v)) for v in p.vertices],
                "mu": p.friction_mu,
            }
            for p in model.patches
        ]
    return json.dumps(doc, indent=2)

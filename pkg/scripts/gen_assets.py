#!/usr/bin/env python3
"""Regenerate the JSON assets under assets/.

The demo robot is a 20 kg planar-symmetric biped (torso, two 3-dof legs,
rectangular foot pads) with two upward-firing torso jets. Standing with
straight legs puts the base at z = 0.60 and the CoM at exactly
(0, 0, 0.57) with all eight foot vertices on the ground, which the
standing/take-off scenarios rely on.
"""

import json
import os

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir)
MODELS = os.path.join(ROOT, "assets", "models")
SCENARIOS = os.path.join(ROOT, "assets", "scenarios")

IDENT = {"xyz": [0.0, 0.0, 0.0], "quat": [1.0, 0.0, 0.0, 0.0]}


def _origin(xyz, quat=(1.0, 0.0, 0.0, 0.0)):
    return {"xyz": list(xyz), "quat": list(quat)}


def _leg(side, sign):
    joints = [
        {
            "name": f"{side}_hip",
            "parent": "torso",
            "child": f"{side}_thigh",
            "kind": "revolute",
            "axis": [0.0, 1.0, 0.0],
            "origin": _origin([0.0, sign * 0.1, 0.0]),
            "limits": [-1.6, 1.6],
            "vel_limits": [-10.0, 10.0],
        },
        {
            "name": f"{side}_knee",
            "parent": f"{side}_thigh",
            "child": f"{side}_shank",
            "kind": "revolute",
            "axis": [0.0, 1.0, 0.0],
            "origin": _origin([0.0, 0.0, -0.3]),
            "limits": [-2.4, 0.05],
            "vel_limits": [-10.0, 10.0],
        },
        {
            "name": f"{side}_ankle",
            "parent": f"{side}_shank",
            "child": f"{side}_foot",
            "kind": "revolute",
            "axis": [0.0, 1.0, 0.0],
            "origin": _origin([0.0, 0.0, -0.25]),
            "limits": [-1.0, 1.0],
            "vel_limits": [-10.0, 10.0],
        },
    ]
    links = [
        {
            "name": f"{side}_thigh",
            "mass": 2.5,
            "inertia": [0.01875, 0.0, 0.0, 0.01875, 0.0, 0.002],
            "com": [0.0, 0.0, -0.15],
        },
        {
            "name": f"{side}_shank",
            "mass": 1.2,
            "inertia": [0.00625, 0.0, 0.0, 0.00625, 0.0, 0.0008],
            "com": [0.0, 0.0, -0.125],
        },
        {
            "name": f"{side}_foot",
            "mass": 0.3,
            "inertia": [0.0003125, 0.0, 0.0, 0.0010625, 0.0, 0.00125],
            "com": [0.0, 0.0, -0.025],
        },
    ]
    patch = {
        "name": f"{side}_sole",
        "parent": f"{side}_foot",
        "vertices": [
            [0.1, 0.05, -0.05],
            [0.1, -0.05, -0.05],
            [-0.1, -0.05, -0.05],
            [-0.1, 0.05, -0.05],
        ],
        "mu": 0.7,
    }
    return links, joints, patch


def mini_biped():
    torso = {
        "name": "torso",
        "mass": 12.0,
        "inertia": [0.20, 0.0, 0.0, 0.18, 0.0, 0.10],
        "com": [0.0, 0.0, 0.12625],
    }
    links, joints, patches = [torso], [], []
    for side, sign in (("left", 1.0), ("right", -1.0)):
        l, j, p = _leg(side, sign)
        links += l
        joints += j
        patches.append(p)
    jets = []
    for side, sign in (("left", 1.0), ("right", -1.0)):
        jets.append(
            {
                "name": f"{side}_jet",
                "parent": "torso",
                # mounted z-down so positive thrust pushes the torso up
                "mount": _origin([0.0, sign * 0.18, 0.3], (0.0, 1.0, 0.0, 0.0)),
                "thrust_max": 160.0,
                "throttle_bounds": [0.0, 1.0],
                "coeffs": {"K_T": -4.0, "K_D": -4.0, "B_U": 880.0},
            }
        )
    return {
        "links": links,
        "joints": joints,
        "base_link": "torso",
        "jets": jets,
        "patches": patches,
    }


def ironcub_like():
    """Torso-and-arms stand-in matching the published headline constants:
    44 kg total, four jets with 160/160/220/220 N limits (760 N total)."""
    links = [
        {
            "name": "torso",
            "mass": 32.0,
            "inertia": [1.2, 0.0, 0.0, 1.0, 0.0, 0.6],
            "com": [0.0, 0.0, 0.1],
        },
        {
            "name": "head",
            "mass": 4.0,
            "inertia": [0.02, 0.0, 0.0, 0.02, 0.0, 0.02],
            "com": [0.0, 0.0, 0.05],
        },
        {
            "name": "left_arm",
            "mass": 4.0,
            "inertia": [0.05, 0.0, 0.0, 0.05, 0.0, 0.005],
            "com": [0.0, 0.0, -0.12],
        },
        {
            "name": "right_arm",
            "mass": 4.0,
            "inertia": [0.05, 0.0, 0.0, 0.05, 0.0, 0.005],
            "com": [0.0, 0.0, -0.12],
        },
    ]
    joints = [
        {
            "name": "neck",
            "parent": "torso",
            "child": "head",
            "kind": "fixed",
            "origin": _origin([0.0, 0.0, 0.35]),
        },
        {
            "name": "left_shoulder",
            "parent": "torso",
            "child": "left_arm",
            "kind": "revolute",
            "axis": [0.0, 1.0, 0.0],
            "origin": _origin([0.0, 0.2, 0.25]),
            "limits": [-2.0, 2.0],
            "vel_limits": [-8.0, 8.0],
        },
        {
            "name": "right_shoulder",
            "parent": "torso",
            "child": "right_arm",
            "kind": "revolute",
            "axis": [0.0, 1.0, 0.0],
            "origin": _origin([0.0, -0.2, 0.25]),
            "limits": [-2.0, 2.0],
            "vel_limits": [-8.0, 8.0],
        },
    ]
    jets = [
        {
            "name": "left_arm_jet",
            "parent": "left_arm",
            "mount": _origin([0.0, 0.0, -0.25], (0.0, 1.0, 0.0, 0.0)),
            "thrust_max": 160.0,
            "throttle_bounds": [0.0, 1.0],
        },
        {
            "name": "right_arm_jet",
            "parent": "right_arm",
            "mount": _origin([0.0, 0.0, -0.25], (0.0, 1.0, 0.0, 0.0)),
            "thrust_max": 160.0,
            "throttle_bounds": [0.0, 1.0],
        },
        {
            "name": "left_chest_jet",
            "parent": "torso",
            "mount": _origin([0.05, 0.1, -0.1], (0.0, 1.0, 0.0, 0.0)),
            "thrust_max": 220.0,
            "throttle_bounds": [0.0, 1.0],
        },
        {
            "name": "right_chest_jet",
            "parent": "torso",
            "mount": _origin([0.05, -0.1, -0.1], (0.0, 1.0, 0.0, 0.0)),
            "thrust_max": 220.0,
            "throttle_bounds": [0.0, 1.0],
        },
    ]
    patches = [
        {
            "name": "left_pad",
            "parent": "torso",
            "vertices": [
                [0.08, 0.14, -0.6],
                [0.08, 0.06, -0.6],
                [-0.08, 0.06, -0.6],
                [-0.08, 0.14, -0.6],
            ],
            "mu": 0.5,
        },
        {
            "name": "right_pad",
            "parent": "torso",
            "vertices": [
                [0.08, -0.06, -0.6],
                [0.08, -0.14, -0.6],
                [-0.08, -0.14, -0.6],
                [-0.08, -0.06, -0.6],
            ],
            "mu": 0.5,
        },
    ]
    return {
        "links": links,
        "joints": joints,
        "base_link": "torso",
        "jets": jets,
        "patches": patches,
    }


def scenarios():
    z6 = [0.0] * 6
    return {
        "standing": {
            "model": "../models/mini_biped.json",
            "N": 10,
            "dt": 0.1,
            "x0": [0.0, 0.0, 0.57],
            "xN": [0.0, 0.0, 0.57],
            "posture": z6,
            "weights": {"w_u": 10.0},
        },
        "takeoff": {
            "model": "../models/mini_biped.json",
            "N": 30,
            "dt": 0.1,
            "x0": [0.0, 0.0, 0.57],
            "xN": [0.0, 0.0, 0.7],
            "posture": z6,
            "weights": {"w_u": 1e-3, "w_f": 1e-5, "w_fdot": 1e-5},
        },
        "jump": {
            "model": "../models/mini_biped.json",
            "N": 40,
            "dt": 0.05,
            "x0": [0.0, 0.0, 0.57],
            "xN": [0.0, 0.0, 0.57],
            "extra": [{"frac": 0.5, "kind": "com_height_min", "value": 0.67}],
            "posture": z6,
            "weights": {
                "w_u": 100.0,
                "w_v": 0.2,
                "w_x": 0.5,
                "w_xdot": 0.1,
                "w_s": 0.5,
                "w_sbar": 1.0,
                "w_f": 1e-5,
                "w_fdot": 1e-5,
            },
        },
        "vtol": {
            "model": "../models/mini_biped.json",
            "N": 30,
            "dt": 0.1,
            "x0": [0.0, 0.0, 0.57],
            "xN": [0.0, 0.0, 0.57],
            "extra": [{"frac": 0.5, "kind": "com_height_min", "value": 0.7}],
            "posture": z6,
            "weights": {"w_u": 1e-3, "w_f": 1e-5, "w_fdot": 1e-5},
        },
        "com_shift": {
            "model": "../models/mini_biped_nojets.json",
            "N": 20,
            "dt": 0.1,
            "x0": [0.0, 0.0, 0.57],
            "xN": [0.04, 0.0, 0.55],
            "posture": z6,
        },
        "hover": {
            "model": "../models/mini_biped_nopatches.json",
            "N": 20,
            "dt": 0.1,
            "x0": [0.0, 0.0, 0.6],
            "xN": [0.0, 0.0, 0.6],
            "posture": z6,
            "weights": {"w_u": 1e-3},
        },
    }


def main():
    os.makedirs(MODELS, exist_ok=True)
    os.makedirs(SCENARIOS, exist_ok=True)

    biped = mini_biped()
    nojets = dict(biped, jets=[])
    nopatches = dict(biped, patches=[])
    for name, doc in (
        ("mini_biped", biped),
        ("mini_biped_nojets", nojets),
        ("mini_biped_nopatches", nopatches),
        ("ironcub_like", ironcub_like()),
    ):
        path = os.path.join(MODELS, name + ".json")
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print("wrote", path)

    for name, doc in scenarios().items():
        path = os.path.join(SCENARIOS, name + ".json")
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print("wrote", path)


if __name__ == "__main__":
    main()

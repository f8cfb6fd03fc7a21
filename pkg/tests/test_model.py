import json

import numpy as np
import pytest

from conftest import asset, read
from kinodyn.errors import (
    DanglingReference,
    InvalidInertia,
    KinematicLoop,
    MalformedDocument,
    UnknownJoint,
)
from kinodyn.model import joint_index, parse_model, serialize_model


def _doc():
    return json.loads(read(asset("models", "mini_biped.json")))


def test_demo_model_parses(mini_biped):
    assert mini_biped.base_link == "torso"
    assert mini_biped.n_dof == 6
    assert mini_biped.total_mass == pytest.approx(20.0)
    assert [j.name for j in mini_biped.jets] == ["left_jet", "right_jet"]
    assert [p.name for p in mini_biped.patches] == ["left_sole", "right_sole"]
    for p in mini_biped.patches:
        assert p.vertices.shape == (4, 3)


def test_serialize_round_trip(mini_biped):
    text = serialize_model(mini_biped)
    again = parse_model(text)
    assert serialize_model(again) == text
    assert again.total_mass == mini_biped.total_mass
    assert [j.name for j in again.topo_joints] == [j.name for j in mini_biped.topo_joints]


def test_ironcub_like_constants(ironcub_like):
    assert ironcub_like.total_mass == pytest.approx(44.0)
    assert sorted(j.thrust_max for j in ironcub_like.jets) == [160.0, 160.0, 220.0, 220.0]


def test_topological_order_respects_parents(mini_biped):
    placed = {mini_biped.base_link}
    for j in mini_biped.topo_joints:
        assert j.parent in placed
        placed.add(j.child)


def test_joint_index_is_dense(mini_biped):
    idx = [joint_index(mini_biped, j.name) for j in mini_biped.actuated_joints()]
    assert idx == list(range(mini_biped.n_dof))
    with pytest.raises(UnknownJoint):
        joint_index(mini_biped, "elbow")


def test_not_json():
    with pytest.raises(MalformedDocument):
        parse_model("{nope")


def test_unknown_top_level_key():
    doc = _doc()
    doc["wings"] = []
    with pytest.raises(MalformedDocument):
        parse_model(json.dumps(doc))


def test_negative_mass_rejected():
    doc = _doc()
    doc["links"][0]["mass"] = -1.0
    with pytest.raises(InvalidInertia):
        parse_model(json.dumps(doc))


def test_non_psd_inertia_rejected():
    doc = _doc()
    doc["links"][0]["inertia"] = [-0.2, 0.0, 0.0, 0.18, 0.0, 0.1]
    with pytest.raises(InvalidInertia):
        parse_model(json.dumps(doc))


def test_dangling_joint_parent():
    doc = _doc()
    doc["joints"][0]["parent"] = "pelvis"
    with pytest.raises(DanglingReference):
        parse_model(json.dumps(doc))


def test_cycle_detected():
    doc = _doc()
    doc["joints"][0]["parent"] = "left_shank"  # thigh below its own shank
    with pytest.raises(KinematicLoop):
        parse_model(json.dumps(doc))


def test_two_parents_detected():
    doc = _doc()
    extra = json.loads(json.dumps(doc["joints"][0]))
    extra["name"] = "left_hip_b"
    extra["parent"] = "right_thigh"
    doc["joints"].append(extra)
    with pytest.raises(KinematicLoop):
        parse_model(json.dumps(doc))


def test_disconnected_link_detected():
    doc = _doc()
    doc["links"].append(
        {"name": "antenna", "mass": 0.1, "inertia": [1e-4, 0, 0, 1e-4, 0, 1e-4], "com": [0, 0, 0]}
    )
    with pytest.raises(KinematicLoop):
        parse_model(json.dumps(doc))


def test_jet_on_unknown_link():
    doc = _doc()
    doc["jets"][0]["parent"] = "left_wing"
    with pytest.raises(DanglingReference):
        parse_model(json.dumps(doc))


def test_patch_needs_four_vertices():
    doc = _doc()
    doc["patches"][0]["vertices"] = doc["patches"][0]["vertices"][:3]
    with pytest.raises(MalformedDocument):
        parse_model(json.dumps(doc))


def test_synthetic_coeff_fallback():
    doc = _doc()
    del doc["jets"][0]["coeffs"]
    model = parse_model(json.dumps(doc))
    assert model.jets[0].synthetic_coeffs
    assert not model.jets[1].synthetic_coeffs
    assert model.jets[0].coeffs.B_U == 25.0


def test_inertia_matrix_symmetric(mini_biped):
    for link in mini_biped.links:
        np.testing.assert_allclose(link.inertia, link.inertia.T)
        assert np.all(np.linalg.eigvalsh(link.inertia) >= 0)

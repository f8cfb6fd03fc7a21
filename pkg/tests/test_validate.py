"""Validation-layer tests: a known-good trajectory passes every check,
targeted corruptions are localized to the right check and knot."""

import dataclasses
import json

import numpy as np
import pytest

from kinodyn.errors import ColumnMismatch, MalformedDocument
from kinodyn.layout import VariableLayout, vertex_entities
from kinodyn.scenario import ExtraConstraint, parse_scenario
from kinodyn.trajectory import from_vector
from kinodyn.transcription import assemble, initial_guess
from kinodyn.validate import validate

from conftest import asset, read

CHECK_NAMES = {
    "dt", "centroidal", "com_fk", "h_omega", "contact_fk", "quat_norm",
    "jet_dyn", "clearance", "normal_force", "cone", "compl_n", "eps_bounds",
    "integration", "quat_int", "compl_t", "boundary", "extras", "box_bounds",
}


@pytest.fixture(scope="module")
def standing_scenario():
    return parse_scenario(read(asset("scenarios", "standing.json")))


@pytest.fixture(scope="module")
def standing_setup(mini_biped, standing_scenario):
    problem = assemble(mini_biped, standing_scenario)
    z = initial_guess(problem)
    return problem, z


def by_name(report, name):
    return next(c for c in report.checks if c.name == name)


def test_standing_oracle_passes_all_checks(mini_biped, standing_scenario, standing_setup):
    problem, z = standing_setup
    traj = from_vector(problem.layout, z, standing_scenario.dt)
    rep = validate(mini_biped, standing_scenario, traj)
    assert rep.ok
    assert {c.name for c in rep.checks} == CHECK_NAMES
    for c in rep.checks:
        assert c.ok, f"{c.name} worst {c.worst} at knot {c.knot}"
    assert rep.flight_intervals == []
    assert rep.stance_intervals == [(0, standing_scenario.N)]
    weight = mini_biped.total_mass * 9.81
    assert np.allclose(rep.sum_normal_force, weight, rtol=1e-9)
    assert np.allclose([c[2] for c in rep.com], standing_scenario.x0[2], atol=1e-9)


def test_report_serializes_to_json(mini_biped, standing_scenario, standing_setup):
    problem, z = standing_setup
    traj = from_vector(problem.layout, z, standing_scenario.dt)
    rep = validate(mini_biped, standing_scenario, traj)
    blob = json.loads(json.dumps(rep.to_dict()))
    assert blob["ok"] is True
    assert len(blob["checks"]) == len(CHECK_NAMES)
    assert blob["stance_intervals"] == [[0, standing_scenario.N]]


def test_corrupted_normal_force_flags_centroidal_at_that_knot(
    mini_biped, standing_scenario, standing_setup
):
    problem, z = standing_setup
    layout = problem.layout
    k_bad = 2
    ent = vertex_entities(mini_biped)[0][2]
    z2 = z.copy()
    z2[layout.slice(k_bad, "f", ent).start + 2] += 10.0
    rep = validate(mini_biped, standing_scenario, from_vector(layout, z2, standing_scenario.dt))
    assert not rep.ok
    cen = by_name(rep, "centroidal")
    assert not cen.ok
    assert cen.knot == k_bad
    assert cen.worst == pytest.approx(10.0, rel=1e-9)


def test_dt_mismatch_is_flagged(mini_biped, standing_scenario, standing_setup):
    problem, z = standing_setup
    traj = from_vector(problem.layout, z, standing_scenario.dt * 1.25)
    rep = validate(mini_biped, standing_scenario, traj)
    assert not rep.ok
    assert not by_name(rep, "dt").ok


def test_foreign_layout_rejected(mini_biped, ironcub_like, standing_scenario):
    other = VariableLayout(ironcub_like, standing_scenario.N + 1)
    traj = from_vector(other, np.zeros(other.n_vars), standing_scenario.dt)
    with pytest.raises(ColumnMismatch):
        validate(mini_biped, standing_scenario, traj)


def test_knot_count_mismatch_rejected(mini_biped, standing_scenario):
    longer = VariableLayout(mini_biped, standing_scenario.N + 3)
    traj = from_vector(longer, np.zeros(longer.n_vars), standing_scenario.dt)
    with pytest.raises(MalformedDocument):
        validate(mini_biped, standing_scenario, traj)


def test_flight_detection_needs_no_force_and_clearance(
    mini_biped, standing_scenario, standing_setup
):
    problem, z = standing_setup
    layout = problem.layout
    z2 = z.copy()
    for k in (2, 3):
        for _, _, ent in vertex_entities(mini_biped):
            z2[layout.slice(k, "f", ent)] = 0.0
            z2[layout.slice(k, "p", ent).start + 2] += 0.01
    rep = validate(mini_biped, standing_scenario, from_vector(layout, z2, standing_scenario.dt))
    assert (2, 3) in rep.flight_intervals
    assert (0, 1) in rep.stance_intervals
    # unloaded but touching the ground is not flight
    z3 = z.copy()
    for _, _, ent in vertex_entities(mini_biped):
        z3[layout.slice(4, "f", ent)] = 0.0
    rep = validate(mini_biped, standing_scenario, from_vector(layout, z3, standing_scenario.dt))
    assert all(not (lo <= 4 <= hi) for lo, hi in rep.flight_intervals)


def test_height_extra_checked_at_resolved_knot(mini_biped, standing_scenario, standing_setup):
    problem, z = standing_setup
    traj = from_vector(problem.layout, z, standing_scenario.dt)
    easy = dataclasses.replace(
        standing_scenario,
        extra=[ExtraConstraint(kind="com_height_min", value=0.5, frac=0.5)],
    )
    assert validate(mini_biped, easy, traj).ok
    hard = dataclasses.replace(
        standing_scenario,
        extra=[ExtraConstraint(kind="com_height_min", value=0.9, frac=0.5)],
    )
    rep = validate(mini_biped, hard, traj)
    assert not rep.ok
    ex = by_name(rep, "extras")
    assert not ex.ok
    assert ex.worst == pytest.approx(0.9 - 0.57, abs=1e-9)


def test_velocity_bound_violation_lands_in_box_bounds(
    mini_biped, standing_scenario, standing_setup
):
    problem, z = standing_setup
    layout = problem.layout
    joint = mini_biped.actuated_joints()[0]
    z2 = z.copy()
    z2[layout.slice(3, "sd", joint.name)] = joint.vel_limits[1] + 0.5
    rep = validate(mini_biped, standing_scenario, from_vector(layout, z2, standing_scenario.dt))
    box = by_name(rep, "box_bounds")
    assert not box.ok
    assert box.worst == pytest.approx(0.5, abs=1e-9)

"""NLP assembly: layout, constraint families, derivatives, initial guess."""

import dataclasses

import numpy as np
import pytest

from conftest import asset, read
from kinodyn.errors import MalformedDocument
from kinodyn.model import GRAVITY
from kinodyn.scenario import parse_scenario
from kinodyn.transcription import assemble, initial_guess


@pytest.fixture(scope="module")
def standing(mini_biped):
    sc = parse_scenario(read(asset("scenarios", "standing.json")))
    return dataclasses.replace(sc, N=3)


@pytest.fixture(scope="module")
def problem(mini_biped, standing):
    return assemble(mini_biped, standing)


@pytest.fixture(scope="module")
def guess(problem):
    return initial_guess(problem)


def _sample(problem, guess, seed, spread=0.1):
    rng = np.random.default_rng(seed)
    return guess + spread * rng.normal(size=problem.n_vars)


def test_layout_and_counts(mini_biped, problem):
    lay = problem.layout
    # 15 centroidal + 7 base pose + 6 s + 6 twist + 6 sd + 8*9 contact
    # + 2*4 jet + 16 eps slots per knot
    assert lay.knot_size == 15 + 7 + 6 + 6 + 6 + 72 + 8 + 16
    assert lay.n_vars == 4 * lay.knot_size
    assert problem.m == sum(m.dim for m in problem.metas)
    assert len(problem.eq_mask) == problem.m


def test_describe_families(problem):
    desc = problem.describe()
    fams = desc["families"]
    per_knot = {
        "centroidal": 6, "com_fk": 3, "h_omega": 3, "quat_norm": 1,
        "contact_fk": 24, "jet_dyn": 2, "clearance": 8, "normal_force": 8,
        "cone": 32, "compl_n": 8,
    }
    for name, rows in per_knot.items():
        assert fams[name]["rows"] == 4 * rows, name
    per_pair = {"int_x": 3, "int_xd": 3, "int_hw": 3, "int_p": 3, "int_s": 6,
                "int_T": 2, "int_Td": 2, "int_f": 24, "quat_int": 4, "compl_t": 32}
    for name, rows in per_pair.items():
        assert fams[name]["rows"] == 3 * rows, name
    for name in ("x0", "xd0", "hw0", "xN"):
        assert fams[name]["rows"] == 3
    assert desc["n_constraints"] == problem.m
    assert desc["n_equalities"] == int(problem.eq_mask.sum())


def test_kind_masks(problem):
    ineq = {"clearance", "normal_force", "cone", "compl_n", "compl_t", "com_height_min"}
    for meta in problem.metas:
        expected = "ineq" if meta.name in ineq else "eq"
        assert meta.kind == expected, meta.name
        got = problem.eq_mask[meta.row : meta.row + meta.dim]
        assert np.all(got == (expected == "eq"))


def test_constraint_values_agree_with_system(problem, guess):
    z = _sample(problem, guess, 21)
    vals = problem.constraint_values(z)
    vals2, J = problem.constraint_system(z)
    np.testing.assert_array_equal(vals, vals2)
    assert J.shape == (problem.m, problem.n_vars)


def test_block_values_match_stacked_values(problem, guess):
    z = _sample(problem, guess, 22)
    vals = problem.constraint_values(z)
    for meta in problem.metas[:: max(1, len(problem.metas) // 80)]:
        np.testing.assert_allclose(
            problem.block_values(z, meta), vals[meta.row : meta.row + meta.dim],
            atol=1e-13, err_msg=meta.name,
        )


def test_linear_metas_are_affine(problem, guess):
    # (A, c) recorded for a linear family reproduces its function exactly
    za = _sample(problem, guess, 23)
    zb = _sample(problem, guess, 24)
    for meta in problem.metas:
        if meta.linear is None:
            continue
        A, c = meta.linear
        np.testing.assert_allclose(A @ za[meta.support] + c, problem.block_values(za, meta), atol=1e-13)
        np.testing.assert_allclose(A @ zb[meta.support] + c, problem.block_values(zb, meta), atol=1e-13)


def _fd_block(problem, z, meta, h=1e-6):
    cols = []
    for j in meta.support:
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        cols.append((problem.block_values(zp, meta) - problem.block_values(zm, meta)) / (2 * h))
    return np.column_stack(cols)


def test_jacobian_matches_fd_per_family(problem, guess):
    z = _sample(problem, guess, 25)
    _, J = problem.constraint_system(z)
    J = J.tocsr()
    seen = set()
    for meta in problem.metas:
        if meta.name in seen:
            continue
        seen.add(meta.name)
        sub = J[meta.row : meta.row + meta.dim][:, meta.support].toarray()
        fd = _fd_block(problem, z, meta)
        scale = max(1.0, np.abs(fd).max())
        assert np.abs(sub - fd).max() / scale < 1e-5, meta.name


def test_threaded_evaluation_is_bitwise_identical(mini_biped, standing, problem, guess, monkeypatch):
    z = _sample(problem, guess, 26)
    v1, J1 = problem.constraint_system(z)
    monkeypatch.setenv("KINODYN_THREADS", "4")
    par = assemble(mini_biped, standing)
    assert par._threads == 4
    v2, J2 = par.constraint_system(z)
    np.testing.assert_array_equal(v1, v2)
    assert (J1 != J2).nnz == 0


def test_objective_gradient_matches_fd(problem, guess):
    z = _sample(problem, guess, 27)
    f, grad, H = problem.objective_system(z)
    assert f == pytest.approx(problem.objective_value(z), rel=1e-14)
    rng = np.random.default_rng(28)
    h = 1e-6
    for j in rng.choice(problem.n_vars, size=60, replace=False):
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        fd = (problem.objective_value(zp) - problem.objective_value(zm)) / (2 * h)
        assert grad[j] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_objective_hessian_exact_for_quadratic(problem, guess):
    # the cost is a fixed-weight sum of squares, so H is constant and exact
    za = _sample(problem, guess, 29)
    zb = _sample(problem, guess, 30)
    fa, ga, H = problem.objective_system(za)
    fb, gb, Hb = problem.objective_system(zb)
    assert (H != Hb).nnz == 0
    np.testing.assert_allclose(gb - ga, H @ (zb - za), rtol=1e-10, atol=1e-12)


def test_free_dt_objective_and_steps(mini_biped, standing, guess):
    sc = dataclasses.replace(standing, dt_bounds=(0.04, 0.08))
    prob = assemble(mini_biped, sc)
    assert prob.layout.free_dt and prob.layout.n_vars == guess.size + 1
    rng = np.random.default_rng(31)
    z = np.concatenate([guess, [0.0]]) + 0.1 * rng.normal(size=prob.n_vars)
    z[prob.layout.dt_index] = 0.06
    f, grad, H = prob.objective_system(z)
    h = 1e-7
    for j in list(np.random.default_rng(32).choice(guess.size, 20)) + [prob.layout.dt_index]:
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        fd = (prob.objective_value(zp) - prob.objective_value(zm)) / (2 * h)
        assert grad[j] == pytest.approx(fd, rel=5e-6, abs=1e-7)
    # the step family picks up dt sensitivity too
    _, J = prob.constraint_system(z)
    J = J.tocsr()
    meta = next(m for m in prob.metas if m.name == "int_x")
    sub = J[meta.row : meta.row + meta.dim][:, meta.support].toarray()
    fd = _fd_block(prob, z, meta)
    assert np.abs(sub - fd).max() < 1e-6


def test_initial_guess_respects_bounds_and_statics(mini_biped, problem, guess):
    assert np.all(guess >= problem.lb) and np.all(guess <= problem.ub)
    lay = problem.layout
    weight = mini_biped.total_mass * GRAVITY
    for k in range(lay.n_knots):
        rho = guess[lay.slice(k, "rho", "base")]
        assert np.linalg.norm(rho) == pytest.approx(1.0, abs=1e-12)
        fz = sum(
            guess[lay.slice(k, "f", f"{p.name}.v{j}")][2]
            for p in mini_biped.patches
            for j in range(4)
        )
        assert fz == pytest.approx(weight, rel=1e-12)
        for jet in mini_biped.jets:
            assert guess[lay.slice(k, "u", jet.name)][0] == jet.throttle_bounds[0]


def test_initial_guess_seeds_hop_for_height_floor(mini_biped):
    sc = parse_scenario(read(asset("scenarios", "jump.json")))
    prob = assemble(mini_biped, sc)
    z = initial_guess(prob)
    lay = prob.layout
    extra = next(e for e in sc.extra if e.kind == "com_height_min")
    k_star = extra.resolve_knot(sc.N + 1)
    assert z[lay.slice(k_star, "x", "com")][2] >= extra.value
    # the hop releases every contact force at its apex knot
    fz = [z[lay.slice(k_star, "f", f"{p.name}.v{j}")] for p in mini_biped.patches for j in range(4)]
    assert np.all(np.concatenate(fz) == 0.0)
    # boundary knots stay pinned to the scenario endpoints
    np.testing.assert_allclose(z[lay.slice(0, "x", "com")], sc.x0, atol=1e-12)
    np.testing.assert_allclose(z[lay.slice(sc.N, "x", "com")], sc.xN, atol=1e-12)


def test_box_bounds_from_model(mini_biped, problem):
    lay = problem.layout
    for k in range(lay.n_knots):
        for joint in mini_biped.actuated_joints():
            sl = lay.slice(k, "s", joint.name)
            assert (problem.lb[sl][0], problem.ub[sl][0]) == joint.limits
        for jet in mini_biped.jets:
            sl = lay.slice(k, "T", jet.name)
            assert problem.lb[sl][0] == 0.0 and problem.ub[sl][0] == jet.thrust_max
            sl = lay.slice(k, "u", jet.name)
            assert (problem.lb[sl][0], problem.ub[sl][0]) == jet.throttle_bounds
        sl = lay.slice(k, "eps_n")
        assert np.all(problem.lb[sl] == 0.0) and np.all(problem.ub[sl] == problem.scenario.epsilon_max)


def test_assemble_rejects_bad_inputs(mini_biped, standing):
    with pytest.raises(MalformedDocument):
        assemble(mini_biped, dataclasses.replace(standing, ground="lava"))
    with pytest.raises(MalformedDocument):
        assemble(mini_biped, dataclasses.replace(standing, posture=[0.0, 0.0]))


def test_dt_value(mini_biped, standing, problem, guess):
    assert problem.dt_value(guess) == standing.dt
    free = assemble(mini_biped, dataclasses.replace(standing, dt_bounds=(0.04, 0.08)))
    zf = initial_guess(free)
    assert free.dt_value(zf) == pytest.approx(0.06)

"""Post-hoc trajectory validation.

Re-evaluates every constraint family directly from a trajectory file
(plain float kinematics, no solver machinery) and classifies each knot
as stance or flight. The planner's own convergence claim is never
trusted: the CLI reports success only when this module agrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .actuation import (
    friction_cone,
    jet_acceleration,
    complementarity_residual,
    planar_complementarity_residual,
    GROUNDS,
)
from .errors import ColumnMismatch, MalformedDocument
from .kinematics import frame_pose, link_poses
from .layout import VariableLayout, vertex_entities
from .transcription import (
    angular_momentum_defect,
    centroidal_defect,
    com_defect,
    contact_fk_defect,
    quat_norm_defect,
    quat_step_defect,
)


@dataclass
class Check:
    name: str
    worst: float  # largest residual (signed: positive = violated)
    tol: float
    knot: int  # knot (or interval start) where the worst residual lives
    ok: bool


@dataclass
class ValidationReport:
    ok: bool
    checks: list
    flight_intervals: list  # inclusive [k0, k1] knot ranges
    stance_intervals: list
    sum_normal_force: list  # per knot, N
    min_vertex_height: list  # per knot, m (inf when the model has no patches)
    total_thrust_z: list  # per knot, N (world vertical component)
    com: list  # per knot CoM position

    def to_dict(self):
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "worst": c.worst, "tol": c.tol, "knot": c.knot, "ok": c.ok}
                for c in self.checks
            ],
            "flight_intervals": [list(iv) for iv in self.flight_intervals],
            "stance_intervals": [list(iv) for iv in self.stance_intervals],
            "sum_normal_force": self.sum_normal_force,
            "min_vertex_height": self.min_vertex_height,
            "total_thrust_z": self.total_thrust_z,
            "com": self.com,
        }


def _intervals(mask):
    out = []
    start = None
    for k, val in enumerate(mask):
        if val and start is None:
            start = k
        elif not val and start is not None:
            out.append((start, k - 1))
            start = None
    if start is not None:
        out.append((start, len(mask) - 1))
    return out


def validate(model, scenario, traj, tol=2e-6, bound_tol=1e-8):
    layout = VariableLayout(model, scenario.N + 1, scenario.free_dt)
    if traj.columns != layout.column_names():
        raise ColumnMismatch("trajectory columns do not match the model layout")
    if traj.n_knots != scenario.N + 1:
        raise MalformedDocument(
            f"trajectory has {traj.n_knots} knots, scenario expects {scenario.N + 1}"
        )
    ground = GROUNDS[scenario.ground]
    n_knots = traj.n_knots
    n_dof = model.n_dof
    verts = vertex_entities(model)
    joints = model.actuated_joints()

    x = traj.block("x", "com")
    xd = traj.block("xd", "com")
    xdd = traj.block("xdd", "com")
    hw = traj.block("hw", "centroidal")
    hwd = traj.block("hwd", "centroidal")
    pb = traj.block("p", "base")
    rho = traj.block("rho", "base")
    pd = traj.block("pd", "base")
    omega = traj.block("omega", "base")
    s = (
        np.hstack([traj.block("s", j.name) for j in joints])
        if n_dof
        else np.zeros((n_knots, 0))
    )
    sd = (
        np.hstack([traj.block("sd", j.name) for j in joints])
        if n_dof
        else np.zeros((n_knots, 0))
    )
    pv = {ent: traj.block("p", ent) for _, _, ent in verts}
    fv = {ent: traj.block("f", ent) for _, _, ent in verts}
    fdv = {ent: traj.block("fd", ent) for _, _, ent in verts}
    epsn = {ent: traj.block("eps_n", ent)[:, 0] for _, _, ent in verts}
    epst = {ent: traj.block("eps_t", ent)[:, 0] for _, _, ent in verts}
    T = {j.name: traj.block("T", j.name)[:, 0] for j in model.jets}
    Td = {j.name: traj.block("Td", j.name)[:, 0] for j in model.jets}
    Tdd = {j.name: traj.block("Tdd", j.name)[:, 0] for j in model.jets}
    u = {j.name: traj.block("u", j.name)[:, 0] for j in model.jets}

    dt = traj.dt
    checks = []

    def record(name, residuals, tol_=None):
        residuals = np.asarray(residuals, dtype=float)
        t = tol if tol_ is None else tol_
        if residuals.size == 0:
            checks.append(Check(name, 0.0, t, 0, True))
            return
        k = int(np.argmax(residuals))
        worst = float(residuals[k])
        checks.append(Check(name, worst, t, k, worst <= t))

    # step consistency: scenario dt against the file
    if scenario.free_dt:
        lo, hi = scenario.dt_bounds
        dt_res = max(np.max(lo - dt), np.max(dt - hi), np.max(np.abs(dt - dt[0])))
        record("dt", [dt_res], bound_tol)
    else:
        record("dt", np.abs(dt - scenario.dt), 1e-12)

    origin = np.zeros(3)
    cones = {
        p.name: friction_cone(
            p.friction_mu, ground.normal_at(origin), ground.tangents_at(origin)
        )
        for p in model.patches
    }

    r_centroidal = np.zeros(n_knots)
    r_comfk = np.zeros(n_knots)
    r_homega = np.zeros(n_knots)
    r_contactfk = np.zeros(n_knots)
    r_qnorm = np.zeros(n_knots)
    r_jet = np.zeros(n_knots)
    sum_nf = np.zeros(n_knots)
    min_h = np.full(n_knots, np.inf)
    thrust_z = np.zeros(n_knots)
    clearance = np.zeros(n_knots)
    normal_force = np.zeros(n_knots)
    cone_res = np.zeros(n_knots)
    compl_n = np.zeros(n_knots)
    eps_bound = np.zeros(n_knots)
    entities = [ent for _, _, ent in verts]

    for k in range(n_knots):
        poses = link_poses(model, pb[k], rho[k], s[k])
        p_list = [pv[ent][k] for ent in entities]
        f_list = [fv[ent][k] for ent in entities]
        thrusts = [T[j.name][k] for j in model.jets]
        r = centroidal_defect(model, poses, x[k], xdd[k], hwd[k], p_list, f_list, thrusts)
        r_centroidal[k] = np.max(np.abs(r))
        r_comfk[k] = np.max(np.abs(com_defect(model, poses, x[k])))
        r_homega[k] = np.max(
            np.abs(angular_momentum_defect(model, poses, hw[k], pd[k], omega[k], sd[k]))
        )
        if verts:
            r_contactfk[k] = np.max(np.abs(contact_fk_defect(model, poses, entities, p_list)))
        r_qnorm[k] = abs(quat_norm_defect(rho[k])[0])
        for jet in model.jets:
            resid = Tdd[jet.name][k] - jet_acceleration(
                jet.coeffs, T[jet.name][k], Td[jet.name][k], u[jet.name][k]
            )
            r_jet[k] = max(r_jet[k], abs(resid))
            # world thrust force is -T along the mount z-axis
            _, mount_R = frame_pose(model, poses, jet.name)
            thrust_z[k] += -T[jet.name][k] * mount_R[2, 2]
        for patch, _, ent in verts:
            d = ground.height(pv[ent][k])
            nf = float(ground.normal_at(pv[ent][k]) @ fv[ent][k])
            sum_nf[k] += nf
            min_h[k] = min(min_h[k], d)
            clearance[k] = max(clearance[k], -d)
            normal_force[k] = max(normal_force[k], -nf)
            cone_res[k] = max(cone_res[k], float(np.max(cones[patch.name].A @ fv[ent][k])))
            resid = complementarity_residual(pv[ent][k], fv[ent][k], ground)
            compl_n[k] = max(compl_n[k], resid - epsn[ent][k])
            eps_bound[k] = max(
                eps_bound[k],
                epsn[ent][k] - scenario.epsilon_max,
                -epsn[ent][k],
                epst[ent][k] - scenario.epsilon_max,
                -epst[ent][k],
            )

    record("centroidal", r_centroidal)
    record("com_fk", r_comfk)
    record("h_omega", r_homega)
    record("contact_fk", r_contactfk)
    record("quat_norm", r_qnorm)
    record("jet_dyn", r_jet)
    record("clearance", clearance)
    record("normal_force", normal_force)
    record("cone", cone_res)
    record("compl_n", compl_n)
    record("eps_bounds", eps_bound, bound_tol)

    # pairwise families over intervals
    n_int = n_knots - 1
    r_int = np.zeros(max(n_int, 1))
    r_quat = np.zeros(max(n_int, 1))
    r_compl_t = np.zeros(max(n_int, 1))
    for k in range(n_int):
        h = dt[k + 1]
        worst = 0.0
        for a, b, bd in (
            (x, x, xd),
            (xd, xd, xdd),
            (hw, hw, hwd),
            (pb, pb, pd),
        ):
            worst = max(worst, np.max(np.abs(a[k + 1] - a[k] - bd[k + 1] * h)))
        if n_dof:
            worst = max(worst, np.max(np.abs(s[k + 1] - s[k] - sd[k + 1] * h)))
        for jet in model.jets:
            nm = jet.name
            worst = max(worst, abs(T[nm][k + 1] - T[nm][k] - Td[nm][k + 1] * h))
            worst = max(worst, abs(Td[nm][k + 1] - Td[nm][k] - Tdd[nm][k + 1] * h))
        for ent in entities:
            worst = max(worst, np.max(np.abs(fv[ent][k + 1] - fv[ent][k] - fdv[ent][k + 1] * h)))
        r_int[k] = worst
        r_quat[k] = np.max(np.abs(quat_step_defect(rho[k], rho[k + 1], omega[k + 1], h)))
        for ent in entities:
            r = planar_complementarity_residual(pv[ent][k], pv[ent][k + 1], fv[ent][k], ground)
            r_compl_t[k] = max(r_compl_t[k], float(np.max(np.abs(r))) - epst[ent][k])
    record("integration", r_int if n_int else [])
    record("quat_int", r_quat if n_int else [])
    record("compl_t", r_compl_t if n_int else [])

    # boundary pins
    record(
        "boundary",
        [
            np.max(np.abs(x[0] - scenario.x0)),
            np.max(np.abs(xd[0])),
            np.max(np.abs(hw[0])),
            np.max(np.abs(x[-1] - scenario.xN)),
        ],
    )
    extra_res = []
    for extra in scenario.extra:
        k = extra.resolve_knot(n_knots)
        if extra.kind == "com_position":
            extra_res.append(np.max(np.abs(x[k] - np.asarray(extra.value))))
        else:
            extra_res.append(float(extra.value) - x[k][2])
    record("extras", extra_res)

    # box bounds
    b = 0.0
    for k in range(n_knots):
        for i, joint in enumerate(joints):
            b = max(b, joint.limits[0] - s[k, i], s[k, i] - joint.limits[1])
            b = max(b, joint.vel_limits[0] - sd[k, i], sd[k, i] - joint.vel_limits[1])
        for jet in model.jets:
            nm = jet.name
            b = max(b, -T[nm][k], T[nm][k] - jet.thrust_max)
            b = max(b, jet.throttle_bounds[0] - u[nm][k], u[nm][k] - jet.throttle_bounds[1])
    record("box_bounds", [b], bound_tol)

    if verts:
        flight = [(sum_nf[k] < scenario.force_eps) and (min_h[k] > 1e-4) for k in range(n_knots)]
        stance = [sum_nf[k] >= scenario.force_eps for k in range(n_knots)]
    else:
        flight = [True] * n_knots
        stance = [False] * n_knots

    ok = all(c.ok for c in checks)
    return ValidationReport(
        ok=ok,
        checks=checks,
        flight_intervals=_intervals(flight),
        stance_intervals=_intervals(stance),
        sum_normal_force=[float(v) for v in sum_nf],
        min_vertex_height=[float(v) for v in min_h],
        total_thrust_z=[float(v) for v in thrust_z],
        com=[list(map(float, x[k])) for k in range(n_knots)],
    )

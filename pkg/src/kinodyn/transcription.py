"""Direct transcription of the locomotion OCP into a sparse NLP.

Variables follow the knot-major layout of `layout.py`. Constraints come
in families evaluated per knot (dynamics, kinematic consistency, contact
and jet conditions) and per knot pair (backward-Euler integration,
tangential complementarity). Everything nonlinear is differentiated by
forward-mode AD over the generic-scalar kinematics; families that are
affine for a fixed step size are kept in one constant sparse matrix.

The cost is a sum of weighted squared 2-norms, stored row-by-row as
residuals sqrt(w * dt) * (z_i - shift), which gives the solver an exact
Gauss-Newton Hessian of the objective.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from . import ad
from .actuation import (
    GROUNDS,
    complementarity_residual,
    friction_cone,
    jet_acceleration,
    planar_complementarity_residual,
    thrust_vector,
)
from .errors import MalformedDocument
from .kinematics import (
    _frame_jacobian_from_poses,
    com_from_poses,
    frame_pose,
    link_poses,
    momentum_from_state,
)
from .layout import VariableLayout, vertex_entities
from .model import GRAVITY
from .rotations import cross, quat_exp, quat_mul

GRAVITY_VEC = np.array([0.0, 0.0, -GRAVITY])


# constraint family residuals, shared by assembly, tests, and validation


def centroidal_defect(model, poses, x, xdd, hwd, contact_p, contact_f, thrusts):
    """Momentum-rate balance: [m*xdd; hwd] minus forces, thrusts, gravity."""
    m = model.total_mass
    lin = m * xdd - m * GRAVITY_VEC
    ang = hwd
    for pv, fv in zip(contact_p, contact_f):
        lin = lin - fv
        ang = ang - cross(pv - x, fv)
    for jet, T in zip(model.jets, thrusts):
        pj, Rj = frame_pose(model, poses, jet.name)
        fj = thrust_vector(Rj, T)
        lin = lin - fj
        ang = ang - cross(pj - x, fj)
    return list(lin) + list(ang)


def com_defect(model, poses, x):
    return list(x - com_from_poses(model, poses))


def angular_momentum_defect(model, poses, hw, v_lin, v_ang, s_dot):
    _, hw_val = momentum_from_state(model, poses, v_lin, v_ang, s_dot)
    return list(hw - hw_val)


def contact_fk_defect(model, poses, entities, p_list):
    out = []
    for ent, pv in zip(entities, p_list):
        fk_p, _ = frame_pose(model, poses, ent)
        out += list(pv - fk_p)
    return out


def quat_norm_defect(rho):
    return [rho @ rho - 1.0]


def quat_step_defect(rho0, rho1, omega1, dt):
    return list(rho1 - quat_mul(quat_exp(omega1 * dt), rho0))


@dataclass
class ConstraintMeta:
    name: str
    knot: int
    kind: str  # "eq" or "ineq"; inequality values must be >= 0
    dim: int
    row: int
    support: np.ndarray
    fn: object
    linear: tuple | None = None  # (A, c) with value = A @ z[support] + c


class _Pack:
    """Maps named pieces of a stacked support vector back to slices."""

    def __init__(self):
        self.parts = []
        self.slices = {}
        self.size = 0

    def add(self, key, idx):
        idx = np.asarray(idx)
        self.slices[key] = slice(self.size, self.size + idx.size)
        self.parts.append(idx)
        self.size += idx.size
        return self

    def support(self):
        return np.concatenate(self.parts)

    def get(self, sub, key):
        return sub[self.slices[key]]


class _Group:
    """One batched evaluation unit covering consecutive constraint rows."""

    def __init__(self, support, row0, dim, fn):
        self.support = support
        self.row0 = row0
        self.dim = dim
        self.fn = fn


class NlpProblem:
    def __init__(self, model, scenario, layout, ground):
        self.model = model
        self.scenario = scenario
        self.layout = layout
        self.ground = ground
        self.n_vars = layout.n_vars
        self.lb = np.full(layout.n_vars, -np.inf)
        self.ub = np.full(layout.n_vars, np.inf)
        self.metas = []
        self.groups = []
        self.m = 0
        # linear constraint rows: triplets of a constant sparse matrix
        self._L_rows, self._L_cols, self._L_data = [], [], []
        self._c_lin = []
        # cost rows: sqrtw * (z[idx] - shift), optionally scaled by sqrt(dt)
        self._res_idx, self._res_sqrtw, self._res_shift, self._res_dtscaled = [], [], [], []
        self._finalized = False

    # assembly helpers

    def _add_meta(self, name, knot, kind, support, fn, dim, linear=None):
        meta = ConstraintMeta(name, knot, kind, dim, self.m, np.asarray(support), fn, linear)
        self.metas.append(meta)
        self.m += dim
        return meta

    def add_linear(self, name, knot, kind, support, A, c):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        c = np.atleast_1d(np.asarray(c, dtype=float))
        meta = self._add_meta(
            name, knot, kind, support, lambda sub, A=A, c=c: A @ sub + c, A.shape[0], (A, c)
        )
        r, cidx = np.nonzero(A)
        self._L_rows += list(meta.row + r)
        self._L_cols += list(np.asarray(support)[cidx])
        self._L_data += list(A[r, cidx])
        self._c_lin += [(meta.row + i, c[i]) for i in range(meta.dim) if c[i] != 0.0]
        return meta

    def add_nonlinear(self, name, knot, kind, support, fn, dim):
        return self._add_meta(name, knot, kind, support, fn, dim)

    def add_group(self, support, row0, dim, fn):
        self.groups.append(_Group(np.asarray(support), row0, dim, fn))

    def add_cost_rows(self, idx, weight, dt, shift=None, terminal=False):
        idx = np.asarray(idx)
        if idx.size == 0:
            return
        w = np.broadcast_to(np.atleast_1d(np.asarray(weight, dtype=float)), idx.shape)
        if np.all(w == 0):
            return
        scale = 1.0 if (terminal or self.layout.free_dt) else dt
        self._res_idx.append(idx)
        self._res_sqrtw.append(np.sqrt(w * scale))
        self._res_shift.append(np.zeros(idx.size) if shift is None else np.broadcast_to(shift, idx.shape))
        self._res_dtscaled.append(np.full(idx.size, not terminal))

    def finalize(self):
        self._L = csr_matrix(
            (self._L_data, (self._L_rows, self._L_cols)), shape=(self.m, self.n_vars)
        )
        self.c_lin = np.zeros(self.m)
        for r, v in self._c_lin:
            self.c_lin[r] = v
        if self._res_idx:
            self.res_idx = np.concatenate(self._res_idx)
            self.res_sqrtw = np.concatenate(self._res_sqrtw)
            self.res_shift = np.concatenate(self._res_shift)
            self.res_dtscaled = np.concatenate(self._res_dtscaled)
        else:
            self.res_idx = np.zeros(0, dtype=int)
            self.res_sqrtw = np.zeros(0)
            self.res_shift = np.zeros(0)
            self.res_dtscaled = np.zeros(0, dtype=bool)
        # scatter pattern for nonlinear Jacobian entries
        rows, cols, offsets = [], [], [0]
        for g in self.groups:
            rows.append(np.repeat(np.arange(g.row0, g.row0 + g.dim), g.support.size))
            cols.append(np.tile(g.support, g.dim))
            offsets.append(offsets[-1] + g.dim * g.support.size)
        self._nl_rows = np.concatenate(rows) if rows else np.zeros(0, dtype=int)
        self._nl_cols = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
        self._nl_off = offsets
        self.eq_mask = np.zeros(self.m, dtype=bool)
        for meta in self.metas:
            if meta.kind == "eq":
                self.eq_mask[meta.row : meta.row + meta.dim] = True
        self._threads = max(1, int(os.environ.get("KINODYN_THREADS", "1")))
        self._finalized = True

    # evaluation

    def dt_value(self, z):
        return z[self.layout.dt_index] if self.layout.free_dt else self.scenario.dt

    def constraint_values(self, z):
        out = self._L @ z + self.c_lin
        for g in self.groups:
            out[g.row0 : g.row0 + g.dim] = np.asarray(g.fn(z[g.support]), dtype=float)
        return out

    def constraint_system(self, z):
        vals = self._L @ z + self.c_lin
        data = np.empty(self._nl_off[-1])

        def run(i):
            g = self.groups[i]
            v, jac = ad.eval_with_jacobian(g.fn, z[g.support])
            vals[g.row0 : g.row0 + g.dim] = v
            data[self._nl_off[i] : self._nl_off[i + 1]] = jac.ravel()

        if self._threads > 1 and len(self.groups) > 1:
            with ThreadPoolExecutor(max_workers=self._threads) as pool:
                list(pool.map(run, range(len(self.groups))))
        else:
            for i in range(len(self.groups)):
                run(i)
        J_nl = coo_matrix((data, (self._nl_rows, self._nl_cols)), shape=(self.m, self.n_vars))
        return vals, (self._L + J_nl.tocsr())

    def block_values(self, z, meta):
        """Standalone evaluation of one constraint family instance."""
        return np.asarray(meta.fn(z[meta.support]), dtype=float)

    def residual_values(self, z):
        r = self.res_sqrtw * (z[self.res_idx] - self.res_shift)
        if self.layout.free_dt:
            scale = np.where(self.res_dtscaled, np.sqrt(self.dt_value(z)), 1.0)
            r = r * scale
        return r

    def objective_value(self, z):
        r = self.residual_values(z)
        return float(r @ r)

    def objective_system(self, z):
        """Objective value, gradient, and Gauss-Newton Hessian (sparse)."""
        r = self.residual_values(z)
        f = float(r @ r)
        grad = np.zeros(self.n_vars)
        if self.layout.free_dt:
            dt = self.dt_value(z)
            scale = np.where(self.res_dtscaled, np.sqrt(dt), 1.0)
            jz = self.res_sqrtw * scale  # d r_i / d z_idx
            base = self.res_sqrtw * (z[self.res_idx] - self.res_shift)
            jdt = np.where(self.res_dtscaled, base * 0.5 / np.sqrt(dt), 0.0)
            rows = np.arange(r.size)
            R = coo_matrix(
                (
                    np.concatenate([jz, jdt]),
                    (np.concatenate([rows, rows]), np.concatenate([self.res_idx, np.full(r.size, self.layout.dt_index)])),
                ),
                shape=(r.size, self.n_vars),
            ).tocsr()
            grad = 2.0 * (R.T @ r)
            H = 2.0 * (R.T @ R)
            return f, grad, H.tocsr()
        np.add.at(grad, self.res_idx, 2.0 * self.res_sqrtw * r)
        hdiag = np.zeros(self.n_vars)
        np.add.at(hdiag, self.res_idx, 2.0 * self.res_sqrtw**2)
        H = csr_matrix((hdiag[hdiag != 0], (np.nonzero(hdiag)[0], np.nonzero(hdiag)[0])), shape=(self.n_vars, self.n_vars))
        return f, grad, H

    def family_rows(self, name):
        """Global row indices of every instance of a constraint family."""
        rows = [np.arange(m.row, m.row + m.dim) for m in self.metas if m.name == name]
        return np.concatenate(rows) if rows else np.zeros(0, dtype=int)

    def describe(self):
        fams = {}
        for meta in self.metas:
            rec = fams.setdefault(meta.name, {"kind": meta.kind, "rows": 0, "instances": 0})
            rec["rows"] += meta.dim
            rec["instances"] += 1
        return {
            "n_vars": self.n_vars,
            "n_constraints": self.m,
            "n_equalities": int(self.eq_mask.sum()),
            "families": fams,
        }


def _ar(sl):
    return np.arange(sl.start, sl.stop)


def assemble(model, scenario):
    """Build the full NLP for a model/scenario pair."""
    if scenario.ground not in GROUNDS:
        raise MalformedDocument(f"unknown ground model {scenario.ground!r}")
    ground = GROUNDS[scenario.ground]
    n_dof = model.n_dof
    posture = np.zeros(n_dof) if scenario.posture is None else np.asarray(scenario.posture, dtype=float)
    if posture.shape != (n_dof,):
        raise MalformedDocument(f"posture has {posture.size} entries, model has {n_dof} joints")
    n_knots = scenario.N + 1
    layout = VariableLayout(model, n_knots, scenario.free_dt)
    prob = NlpProblem(model, scenario, layout, ground)
    verts = vertex_entities(model)
    entities = [ent for _, _, ent in verts]
    dt = scenario.dt if not scenario.free_dt else None
    dt_idx = layout.dt_index

    normal = ground.normal
    t1, t2 = ground.t1, ground.t2
    ground_offset = float(ground.height(np.zeros(3)))
    cones = [friction_cone(patch.friction_mu, normal, (t1, t2)) for patch, _, _ in verts]

    def idx(k, quantity, entity=None):
        return _ar(layout.slice(k, quantity, entity))

    def knot_indices(k):
        d = {
            "x": idx(k, "x", "com"),
            "xd": idx(k, "xd", "com"),
            "xdd": idx(k, "xdd", "com"),
            "hw": idx(k, "hw", "centroidal"),
            "hwd": idx(k, "hwd", "centroidal"),
            "q": idx(k, "q"),
            "nu": idx(k, "nu"),
            "rho": idx(k, "rho", "base"),
            "s": idx(k, "s"),
            "sd": idx(k, "sd"),
            "p": [idx(k, "p", e) for e in entities],
            "f": [idx(k, "f", e) for e in entities],
            "fd": [idx(k, "fd", e) for e in entities],
            "T": [idx(k, "T", j.name) for j in model.jets],
            "Td": [idx(k, "Td", j.name) for j in model.jets],
            "Tdd": [idx(k, "Tdd", j.name) for j in model.jets],
            "u": [idx(k, "u", j.name) for j in model.jets],
            "eps_n": [idx(k, "eps_n", e) for e in entities],
            "eps_t": [idx(k, "eps_t", e) for e in entities],
        }
        return d

    def unpack_q(q):
        return q[0:3], q[3:7], q[7:]

    nv = len(verts)
    nj = len(model.jets)

    # per-knot constraint families
    for k in range(n_knots):
        ki = knot_indices(k)
        row0 = prob.m

        # one AD pass per knot shares the forward kinematics between the
        # families below; each family also gets a standalone evaluator
        pk = _Pack()
        pk.add("x", ki["x"]).add("xdd", ki["xdd"]).add("hwd", ki["hwd"])
        pk.add("hw", ki["hw"]).add("q", ki["q"]).add("nu", ki["nu"])
        for v in range(nv):
            pk.add(("p", v), ki["p"][v])
        for v in range(nv):
            pk.add(("f", v), ki["f"][v])
        for j in range(nj):
            pk.add(("T", j), ki["T"][j])

        def knot_fn(sub, pk=pk):
            x = pk.get(sub, "x")
            q = pk.get(sub, "q")
            nu = pk.get(sub, "nu")
            pb, rho, s = unpack_q(q)
            poses = link_poses(model, pb, rho, s)
            p_list = [pk.get(sub, ("p", v)) for v in range(nv)]
            f_list = [pk.get(sub, ("f", v)) for v in range(nv)]
            thrusts = [pk.get(sub, ("T", j))[0] for j in range(nj)]
            out = centroidal_defect(model, poses, x, pk.get(sub, "xdd"), pk.get(sub, "hwd"), p_list, f_list, thrusts)
            out += com_defect(model, poses, x)
            out += angular_momentum_defect(model, poses, pk.get(sub, "hw"), nu[0:3], nu[3:6], nu[6:])
            out += contact_fk_defect(model, poses, entities, p_list)
            out += quat_norm_defect(rho)
            return out

        cp = _Pack()
        cp.add("x", ki["x"]).add("xdd", ki["xdd"]).add("hwd", ki["hwd"]).add("q", ki["q"])
        for v in range(nv):
            cp.add(("p", v), ki["p"][v])
        for v in range(nv):
            cp.add(("f", v), ki["f"][v])
        for j in range(nj):
            cp.add(("T", j), ki["T"][j])

        def centroidal_fn(sub, cp=cp):
            pb, rho, s = unpack_q(cp.get(sub, "q"))
            poses = link_poses(model, pb, rho, s)
            return centroidal_defect(
                model,
                poses,
                cp.get(sub, "x"),
                cp.get(sub, "xdd"),
                cp.get(sub, "hwd"),
                [cp.get(sub, ("p", v)) for v in range(nv)],
                [cp.get(sub, ("f", v)) for v in range(nv)],
                [cp.get(sub, ("T", j))[0] for j in range(nj)],
            )

        prob.add_nonlinear("centroidal", k, "eq", cp.support(), centroidal_fn, 6)

        def com_fn(sub):
            x, q = sub[0:3], sub[3:]
            pb, rho, s = unpack_q(q)
            return com_defect(model, link_poses(model, pb, rho, s), x)

        prob.add_nonlinear("com_fk", k, "eq", np.concatenate([ki["x"], ki["q"]]), com_fn, 3)

        def h_omega_fn(sub):
            hw, q, nu = sub[0:3], sub[3 : 10 + n_dof], sub[10 + n_dof :]
            pb, rho, s = unpack_q(q)
            poses = link_poses(model, pb, rho, s)
            return angular_momentum_defect(model, poses, hw, nu[0:3], nu[3:6], nu[6:])

        prob.add_nonlinear(
            "h_omega", k, "eq", np.concatenate([ki["hw"], ki["q"], ki["nu"]]), h_omega_fn, 3
        )

        if nv:

            def contact_fk_fn(sub, nq=7 + n_dof):
                q = sub[0:nq]
                pb, rho, s = unpack_q(q)
                poses = link_poses(model, pb, rho, s)
                p_list = [sub[nq + 3 * v : nq + 3 * v + 3] for v in range(nv)]
                return contact_fk_defect(model, poses, entities, p_list)

            prob.add_nonlinear(
                "contact_fk",
                k,
                "eq",
                np.concatenate([ki["q"]] + ki["p"]),
                contact_fk_fn,
                3 * nv,
            )

        prob.add_nonlinear("quat_norm", k, "eq", ki["rho"], lambda sub: quat_norm_defect(sub), 1)

        prob.add_group(pk.support(), row0, prob.m - row0, knot_fn)

        if nj:
            jp = _Pack()
            for j in range(nj):
                jp.add(("T", j), ki["T"][j]).add(("Td", j), ki["Td"][j])
                jp.add(("Tdd", j), ki["Tdd"][j]).add(("u", j), ki["u"][j])

            def jet_fn(sub, jp=jp):
                out = []
                for j, jet in enumerate(model.jets):
                    T = jp.get(sub, ("T", j))[0]
                    Td = jp.get(sub, ("Td", j))[0]
                    Tdd = jp.get(sub, ("Tdd", j))[0]
                    u = jp.get(sub, ("u", j))[0]
                    out.append(Tdd - jet_acceleration(jet.coeffs, T, Td, u))
                return out

            meta = prob.add_nonlinear("jet_dyn", k, "eq", jp.support(), jet_fn, nj)
            prob.add_group(meta.support, meta.row, nj, jet_fn)

        if nv:
            # clearance d(p) >= 0 and normal force n.f >= 0, affine on a
            # planar ground
            A = np.zeros((nv, 3 * nv))
            for v in range(nv):
                A[v, 3 * v : 3 * v + 3] = normal
            prob.add_linear(
                "clearance", k, "ineq", np.concatenate(ki["p"]), A, np.full(nv, ground_offset)
            )
            prob.add_linear("normal_force", k, "ineq", np.concatenate(ki["f"]), A, np.zeros(nv))

            Acone = np.zeros((4 * nv, 3 * nv))
            for v in range(nv):
                Acone[4 * v : 4 * v + 4, 3 * v : 3 * v + 3] = -cones[v].A
            prob.add_linear("cone", k, "ineq", np.concatenate(ki["f"]), Acone, np.zeros(4 * nv))

            np_pack = _Pack()
            for v in range(nv):
                np_pack.add(("p", v), ki["p"][v]).add(("f", v), ki["f"][v]).add(("e", v), ki["eps_n"][v])

            def compl_n_fn(sub, np_pack=np_pack):
                out = []
                for v in range(nv):
                    p = np_pack.get(sub, ("p", v))
                    f = np_pack.get(sub, ("f", v))
                    e = np_pack.get(sub, ("e", v))[0]
                    out.append(e - complementarity_residual(p, f, ground))
                return out

            meta = prob.add_nonlinear("compl_n", k, "ineq", np_pack.support(), compl_n_fn, nv)
            prob.add_group(meta.support, meta.row, nv, compl_n_fn)

    # pairwise families: backward-Euler steps and tangential complementarity
    def add_step(name, k, z0, z1, zd1):
        d = z0.size
        support = np.concatenate([z0, z1, zd1])
        if scenario.free_dt:
            sup = np.concatenate([support, [dt_idx]])

            def fn(sub, d=d):
                return list(sub[d : 2 * d] - sub[0:d] - sub[2 * d : 3 * d] * sub[3 * d])

            meta = prob.add_nonlinear(name, k, "eq", sup, fn, d)
            prob.add_group(meta.support, meta.row, d, fn)
        else:
            A = np.hstack([-np.eye(d), np.eye(d), -dt * np.eye(d)])
            prob.add_linear(name, k, "eq", support, A, np.zeros(d))

    for k in range(scenario.N):
        ki = knot_indices(k)
        kn = knot_indices(k + 1)
        add_step("int_x", k, ki["x"], kn["x"], kn["xd"])
        add_step("int_xd", k, ki["xd"], kn["xd"], kn["xdd"])
        add_step("int_hw", k, ki["hw"], kn["hw"], kn["hwd"])
        add_step("int_p", k, idx(k, "p", "base"), idx(k + 1, "p", "base"), idx(k + 1, "pd", "base"))
        if n_dof:
            add_step("int_s", k, ki["s"], kn["s"], kn["sd"])
        if nj:
            add_step("int_T", k, np.concatenate(ki["T"]), np.concatenate(kn["T"]), np.concatenate(kn["Td"]))
            add_step("int_Td", k, np.concatenate(ki["Td"]), np.concatenate(kn["Td"]), np.concatenate(kn["Tdd"]))
        if nv:
            add_step("int_f", k, np.concatenate(ki["f"]), np.concatenate(kn["f"]), np.concatenate(kn["fd"]))

        qp_sup = [ki["rho"], kn["rho"], idx(k + 1, "omega", "base")]
        if scenario.free_dt:
            qp_sup.append(np.array([dt_idx]))

        def quat_int_fn(sub, free=scenario.free_dt, dt=dt):
            rho0, rho1, w = sub[0:4], sub[4:8], sub[8:11]
            step = sub[11] if free else dt
            return quat_step_defect(rho0, rho1, w, step)

        meta = prob.add_nonlinear("quat_int", k, "eq", np.concatenate(qp_sup), quat_int_fn, 4)
        prob.add_group(meta.support, meta.row, 4, quat_int_fn)

        if nv:
            tp = _Pack()
            for v in range(nv):
                tp.add(("p0", v), ki["p"][v]).add(("p1", v), kn["p"][v])
                tp.add(("f", v), ki["f"][v]).add(("e", v), ki["eps_t"][v])

            def compl_t_fn(sub, tp=tp):
                out = []
                for v in range(nv):
                    r = planar_complementarity_residual(
                        tp.get(sub, ("p0", v)), tp.get(sub, ("p1", v)), tp.get(sub, ("f", v)), ground
                    )
                    e = tp.get(sub, ("e", v))[0]
                    out += [e - r[0], e + r[0], e - r[1], e + r[1]]
                return out

            meta = prob.add_nonlinear("compl_t", k, "ineq", tp.support(), compl_t_fn, 4 * nv)
            prob.add_group(meta.support, meta.row, 4 * nv, compl_t_fn)

    # boundary conditions: initial equilibrium, pinned start/end CoM
    eye3 = np.eye(3)
    prob.add_linear("x0", 0, "eq", idx(0, "x", "com"), eye3, -scenario.x0)
    prob.add_linear("xd0", 0, "eq", idx(0, "xd", "com"), eye3, np.zeros(3))
    prob.add_linear("hw0", 0, "eq", idx(0, "hw", "centroidal"), eye3, np.zeros(3))
    prob.add_linear("xN", scenario.N, "eq", idx(scenario.N, "x", "com"), eye3, -scenario.xN)
    for extra in scenario.extra:
        k = extra.resolve_knot(n_knots)
        if extra.kind == "com_position":
            prob.add_linear("com_pos", k, "eq", idx(k, "x", "com"), eye3, -np.asarray(extra.value))
        else:
            prob.add_linear(
                "com_height_min", k, "ineq", idx(k, "x", "com"), np.array([[0.0, 0.0, 1.0]]), [-extra.value]
            )

    # box bounds
    for k in range(n_knots):
        for joint in model.actuated_joints():
            sl = layout.slice(k, "s", joint.name)
            prob.lb[sl], prob.ub[sl] = joint.limits
            sl = layout.slice(k, "sd", joint.name)
            prob.lb[sl], prob.ub[sl] = joint.vel_limits
        for jet in model.jets:
            sl = layout.slice(k, "T", jet.name)
            prob.lb[sl], prob.ub[sl] = 0.0, jet.thrust_max
            sl = layout.slice(k, "u", jet.name)
            prob.lb[sl], prob.ub[sl] = jet.throttle_bounds
        for _, _, ent in verts:
            for quantity in ("eps_n", "eps_t"):
                sl = layout.slice(k, quantity, ent)
                prob.lb[sl], prob.ub[sl] = 0.0, scenario.epsilon_max
    if scenario.free_dt:
        prob.lb[dt_idx], prob.ub[dt_idx] = scenario.dt_bounds

    # cost: running terms on knots 0..N-1, terminal momentum terms at N
    w = scenario.weights
    dt_cost = dt if not scenario.free_dt else 1.0
    for k in range(scenario.N):
        ki = knot_indices(k)
        prob.add_cost_rows(ki["xd"], w.w_x, dt_cost)
        prob.add_cost_rows(ki["xdd"], w.w_xdot, dt_cost)
        prob.add_cost_rows(ki["hw"], w.w_h, dt_cost)
        prob.add_cost_rows(ki["hwd"], w.w_hdot, dt_cost)
        prob.add_cost_rows(ki["sd"], w.w_s, dt_cost)
        prob.add_cost_rows(ki["nu"][0:6], w.w_v, dt_cost)
        prob.add_cost_rows(ki["s"], w.w_sbar, dt_cost, shift=posture)
        for v in range(nv):
            prob.add_cost_rows(ki["eps_n"][v], w.w_eps, dt_cost)
            prob.add_cost_rows(ki["eps_t"][v], w.w_eps, dt_cost)
            prob.add_cost_rows(ki["fd"][v], w.w_fdot, dt_cost)
            prob.add_cost_rows(ki["f"][v], w.w_f, dt_cost)
        for j in range(nj):
            prob.add_cost_rows(ki["Td"][j], w.w_Tdot, dt_cost)
            prob.add_cost_rows(ki["u"][j], w.w_u, dt_cost)
    kN = knot_indices(scenario.N)
    prob.add_cost_rows(kN["xd"], w.wbar_x, 1.0, terminal=True)
    prob.add_cost_rows(kN["xdd"], w.wbar_xdot, 1.0, terminal=True)
    prob.add_cost_rows(kN["hw"], w.wbar_h, 1.0, terminal=True)
    prob.add_cost_rows(kN["hwd"], w.wbar_hdot, 1.0, terminal=True)

    prob.finalize()
    return prob


def initial_guess(problem):
    """Structured starting point: interpolated CoM, posture hold, static
    force distribution, jets idle, panic slack at the bound."""
    model = problem.model
    sc = problem.scenario
    layout = problem.layout
    ground = problem.ground
    z = np.zeros(layout.n_vars)
    n_knots = sc.N + 1
    posture = np.zeros(model.n_dof) if sc.posture is None else np.asarray(sc.posture, dtype=float)
    ident = np.array([1.0, 0.0, 0.0, 0.0])
    ref_poses = link_poses(model, np.zeros(3), ident, posture)
    com_shift = com_from_poses(model, ref_poses)
    verts = vertex_entities(model)
    weight = model.total_mass * GRAVITY
    for k in range(n_knots):
        t = k / sc.N
        xk = (1.0 - t) * sc.x0 + t * sc.xN
        z[layout.slice(k, "x", "com")] = xk
        base = xk - com_shift
        z[layout.slice(k, "p", "base")] = base
        z[layout.slice(k, "rho", "base")] = ident
        z[layout.slice(k, "s")] = posture
        poses = link_poses(model, base, ident, posture)
        positions = {}
        grounded = []
        for patch, j, ent in verts:
            pv, _ = frame_pose(model, poses, ent)
            positions[ent] = pv
            if ground.height(pv) <= 1e-9:
                grounded.append(ent)
        for patch, j, ent in verts:
            z[layout.slice(k, "p", ent)] = positions[ent]
            if ent in grounded:
                z[layout.slice(k, "f", ent)] = ground.normal_at(positions[ent]) * (weight / len(grounded))
        for jet in model.jets:
            u0 = jet.throttle_bounds[0]
            z[layout.slice(k, "u", jet.name)] = u0
            z[layout.slice(k, "Tdd", jet.name)] = jet_acceleration(jet.coeffs, 0.0, 0.0, u0)
        for _, _, ent in verts:
            z[layout.slice(k, "eps_n", ent)] = sc.epsilon_max
            z[layout.slice(k, "eps_t", ent)] = sc.epsilon_max
    for extra in sc.extra:
        if extra.kind != "com_height_min":
            continue
        k_star = extra.resolve_knot(n_knots)
        lift = float(extra.value) - z[layout.slice(k_star, "x", "com").start + 2]
        if lift > 0.0:
            _seed_height_hop(problem, z, k_star, lift)
    if sc.free_dt:
        z[layout.dt_index] = 0.5 * (sc.dt_bounds[0] + sc.dt_bounds[1])
    return np.minimum(np.maximum(z, problem.lb), problem.ub)


def _fit_legs(model, base_pos, base_quat, s0, targets, iters=40):
    """Joint angles driving frames to world targets, by Levenberg-Marquardt.

    A fully stretched limb is a stationary point of the squared residual
    (zero vertical lever arms), so callers should pass a slightly bent
    warm start when the chain begins at a limit stop.
    """
    limits = np.array([j.limits for j in model.actuated_joints()])

    def residual(s):
        poses = link_poses(model, base_pos, base_quat, s)
        res, rows = [], []
        for ent, tgt in targets.items():
            pv, _ = frame_pose(model, poses, ent)
            res.append(tgt - pv)
            rows.append(_frame_jacobian_from_poses(model, poses, ent)[:3, 6:])
        return np.concatenate(res), np.vstack(rows)

    s = np.array(s0, dtype=float)
    r, J = residual(s)
    mu = 1e-6
    for _ in range(iters):
        if np.max(np.abs(r)) < 1e-12:
            break
        H = J.T @ J
        step = np.linalg.solve(H + mu * (1.0 + np.trace(H) / s.size) * np.eye(s.size), J.T @ r)
        cand = np.clip(s + step, limits[:, 0], limits[:, 1])
        r_c, J_c = residual(cand)
        if r_c @ r_c < r @ r:
            s, r, J = cand, r_c, J_c
            mu = max(mu * 0.3, 1e-10)
        else:
            mu *= 10.0
            if mu > 1e8:
                break
    return s


def _seed_height_hop(problem, z, k_star, lift):
    """Reshape the static guess into a crouch / ballistic hop / recovery
    profile through knot k_star, lifting the CoM by at least `lift`.

    Grounded knots keep the feet pinned to the pre-hop footprint via leg
    IK; airborne knots ride a free-fall parabola with contacts released.
    Velocity and acceleration columns are rebuilt as backward differences
    so every integration row holds exactly at the seeded point.
    """
    model = problem.model
    sc = problem.scenario
    layout = problem.layout
    ground = problem.ground
    n_knots = sc.N + 1
    verts = vertex_entities(model)
    dt = 0.5 * (sc.dt_bounds[0] + sc.dt_bounds[1]) if sc.free_dt else sc.dt

    apex = lift + 0.03
    n_f = max(1, int(np.sqrt(2.0 * apex / GRAVITY) / dt))
    # the parabola spans two extra knots before lift-off and one after
    # touch-down, so every airborne second difference is exactly -g and
    # all seams land on grounded knots where forces can absorb them
    k_lo, k_hi = k_star - n_f - 2, k_star + n_f + 1

    def parabola(k):
        return apex - 0.5 * GRAVITY * ((k - k_star) * dt) ** 2

    depth = -parabola(k_lo)
    # ramp long enough that the descent never demands more than ~0.8 g of
    # downward acceleration, which unilateral ground forces cannot supply
    n_ramp = max(5, int(np.ceil(np.pi * np.sqrt(depth / (1.6 * GRAVITY)) / dt)))
    k_a, k_c = k_lo - n_ramp, k_hi + n_ramp
    if k_a < 1 or k_c > sc.N - 1:
        return

    def delta(k):
        if k <= k_a or k >= k_c:
            return 0.0
        if k < k_lo:  # crouch ramp down to the parabola entry point
            return -depth * 0.5 * (1.0 - np.cos(np.pi * (k - k_a) / (k_lo - k_a)))
        if k <= k_hi:
            return parabola(k)
        return parabola(k_hi) * 0.5 * (1.0 + np.cos(np.pi * (k - k_hi) / (k_c - k_hi)))

    footprint = {
        ent: np.array(z[layout.slice(k_a, "p", ent)]) for _, _, ent in verts
    }
    posture = np.array(z[layout.slice(k_a, "s")])
    limits = np.array([j.limits for j in model.actuated_joints()])
    # stretched limbs make the target a stationary point of the IK least
    # squares, so the first fit starts from a deterministic interior bend
    bend = np.clip(posture + 0.25 * np.where(limits[:, 0] + limits[:, 1] < 0, -1.0, 1.0),
                   limits[:, 0], limits[:, 1])
    s_prev = None
    airborne = {}
    for k in range(k_a, k_c + 1):
        dz = delta(k)
        airborne[k] = dz > 0.0
        if airborne[k]:
            for _, _, ent in verts:
                z[layout.slice(k, "p", ent).start + 2] += dz
            z[layout.slice(k, "p", "base").start + 2] += dz
            z[layout.slice(k, "x", "com").start + 2] += dz
            s_prev = None
            continue
        if abs(dz) < 1e-12:
            continue
        # bent legs keep their mass low, so shifting the base by dz does
        # not shift the CoM by dz; iterate the base pose until the CoM
        # itself lands on the profile, legs re-fit at every trial
        target = np.array(z[layout.slice(k, "x", "com")])
        target[2] += dz
        base = np.array(z[layout.slice(k, "p", "base")])
        quat = z[layout.slice(k, "rho", "base")]
        s_k = bend if s_prev is None else s_prev
        base[2] += dz
        for _ in range(12):
            s_k = _fit_legs(model, base, quat, s_k, footprint)
            poses = link_poses(model, base, quat, s_k)
            x_k = com_from_poses(model, poses)
            err = target - x_k
            if np.max(np.abs(err)) < 1e-10:
                break
            base += err
        s_prev = s_k
        z[layout.slice(k, "p", "base")] = base
        z[layout.slice(k, "s")] = s_k
        for _, _, ent in verts:
            z[layout.slice(k, "p", ent)] = footprint[ent]
        z[layout.slice(k, "x", "com")] = x_k

    # backward-difference velocity and acceleration columns knot by knot,
    # clipped into their boxes so later momentum sums match the final guess
    def diff_pass(pos_q, pos_e, vel_q, vel_e, acc=None):
        for k in range(1, n_knots):
            a = z[layout.slice(k, pos_q, pos_e)]
            b = z[layout.slice(k - 1, pos_q, pos_e)]
            sl = layout.slice(k, vel_q, vel_e)
            z[sl] = np.clip((a - b) / dt, problem.lb[sl], problem.ub[sl])
        if acc is None:
            return
        for k in range(n_knots - 1, 0, -1):
            a = z[layout.slice(k, vel_q, vel_e)]
            b = z[layout.slice(k - 1, vel_q, vel_e)]
            z[layout.slice(k, acc[0], acc[1])] = (a - b) / dt

    diff_pass("x", "com", "xd", "com", ("xdd", "com"))
    diff_pass("p", "base", "pd", "base")
    for joint in model.actuated_joints():
        diff_pass("s", joint.name, "sd", joint.name)

    # angular momentum column from the seeded motion, its rate by differences
    for k in range(n_knots):
        poses = link_poses(
            model,
            z[layout.slice(k, "p", "base")],
            z[layout.slice(k, "rho", "base")],
            z[layout.slice(k, "s")],
        )
        sd = np.array([z[layout.slice(k, "sd", j.name)][0] for j in model.actuated_joints()])
        _, hw = momentum_from_state(
            model, poses, z[layout.slice(k, "pd", "base")], z[layout.slice(k, "omega", "base")], sd
        )
        z[layout.slice(k, "hw", "centroidal")] = hw

    # contact forces from the momentum-rate balance at pinned knots; the
    # momentum-rate column takes the torque those forces actually apply,
    # leaving the (dt-scaled, hence small) mismatch to the step rows
    nv = len(verts)
    # one knot past the window still decelerates (backward differences lag
    # the profile by a step), so it needs matching forces as well
    for k in range(k_a, min(k_c + 1, sc.N) + 1):
        if airborne.get(k, False):
            for _, _, ent in verts:
                z[layout.slice(k, "f", ent)] = 0.0
            z[layout.slice(k, "hwd", "centroidal")] = 0.0
            continue
        need = model.total_mass * (z[layout.slice(k, "xdd", "com")] - GRAVITY_VEC)
        need[2] = max(need[2], 0.0)
        x_k = z[layout.slice(k, "x", "com")]
        torque = np.zeros(3)
        for _, _, ent in verts:
            z[layout.slice(k, "f", ent)] = need / nv
            torque += np.cross(z[layout.slice(k, "p", ent)] - x_k, need / nv)
        z[layout.slice(k, "hwd", "centroidal")] = torque
    for _, _, ent in verts:
        diff_pass("f", ent, "fd", ent)

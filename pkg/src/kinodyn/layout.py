"""Decision-variable layout over the trajectory knots.

Knot-major, deterministic, derived from the model alone. Within a knot:
x, xd, xdd, hw, hwd, q (base p, base rho, s), nu (base pd, omega, sd),
contacts (per patch, per vertex: p, f, fd), jets (per jet: T, Td, Tdd, u),
eps_n, eps_t. A free-step problem appends one trailing dt variable.

Column names are `<quantity>[<index>]@<entity>`, e.g. `f[2]@left_patch.v3`.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Entry:
    quantity: str
    entity: str
    dim: int


def vertex_entities(model):
    """(patch, vertex index, entity name) for every contact vertex."""
    out = []
    for patch in model.patches:
        for j in range(4):
            out.append((patch, j, f"{patch.name}.v{j}"))
    return out


def knot_entries(model):
    entries = [
        Entry("x", "com", 3),
        Entry("xd", "com", 3),
        Entry("xdd", "com", 3),
        Entry("hw", "centroidal", 3),
        Entry("hwd", "centroidal", 3),
        Entry("p", "base", 3),
        Entry("rho", "base", 4),
    ]
    actuated = model.actuated_joints()
    entries += [Entry("s", j.name, 1) for j in actuated]
    entries += [Entry("pd", "base", 3), Entry("omega", "base", 3)]
    entries += [Entry("sd", j.name, 1) for j in actuated]
    verts = vertex_entities(model)
    for _, _, ent in verts:
        entries += [Entry("p", ent, 3), Entry("f", ent, 3), Entry("fd", ent, 3)]
    for jet in model.jets:
        entries += [
            Entry("T", jet.name, 1),
            Entry("Td", jet.name, 1),
            Entry("Tdd", jet.name, 1),
            Entry("u", jet.name, 1),
        ]
    entries += [Entry("eps_n", ent, 1) for _, _, ent in verts]
    entries += [Entry("eps_t", ent, 1) for _, _, ent in verts]
    return entries


class VariableLayout:
    def __init__(self, model, n_knots, free_dt=False):
        self.model = model
        self.n_knots = n_knots
        self.free_dt = free_dt
        self.entries = knot_entries(model)
        self._offset = {}
        off = 0
        for e in self.entries:
            self._offset[(e.quantity, e.entity)] = (off, e.dim)
            off += e.dim
        self.knot_size = off
        # contiguous multi-entity spans: the joint vectors s and sd, and the
        # composites q = (p@base, rho@base, s) and nu = (pd@base, omega, sd)
        q_lo = self._offset[("p", "base")][0]
        nu_lo = self._offset[("pd", "base")][0]
        n = model.n_dof
        self._span = {
            "s": (q_lo + 7, q_lo + 7 + n),
            "sd": (nu_lo + 6, nu_lo + 6 + n),
            "q": (q_lo, q_lo + 7 + n),
            "nu": (nu_lo, nu_lo + 6 + n),
        }
        self.n_vars = n_knots * self.knot_size + (1 if free_dt else 0)
        self.dt_index = self.n_vars - 1 if free_dt else None

    def knot_slice(self, knot):
        base = knot * self.knot_size
        return slice(base, base + self.knot_size)

    def slice(self, knot, quantity, entity=None):
        """Global slice of one quantity at a knot.

        With entity=None, spans every entity carrying the quantity (their
        slots are contiguous by construction).
        """
        base = knot * self.knot_size
        if entity is None:
            lo, hi = self._span[quantity]
            return slice(base + lo, base + hi)
        off, dim = self._offset[(quantity, entity)]
        return slice(base + off, base + off + dim)

    def column_names(self):
        """Per-knot column names in layout order."""
        names = []
        for e in self.entries:
            names += [f"{e.quantity}[{i}]@{e.entity}" for i in range(e.dim)]
        return names

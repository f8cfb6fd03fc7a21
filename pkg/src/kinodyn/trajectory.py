"""Trajectory file I/O.

One CSV row per knot: `knot, dt, <per-knot variables>` with the variable
columns named by the layout (`x[0]@com`, `s[0]@left_hip`, ...). Floats are
written with repr(), whose shortest round-trip form makes
write(read(file)) reproduce the file byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ColumnMismatch, MalformedDocument
from .layout import VariableLayout


@dataclass
class Trajectory:
    columns: list  # per-knot variable names, layout order
    data: np.ndarray  # (n_knots, n_cols)
    dt: np.ndarray  # (n_knots,) integration step per knot

    @property
    def n_knots(self):
        return self.data.shape[0]

    def column(self, name):
        try:
            j = self.columns.index(name)
        except ValueError:
            raise ColumnMismatch(f"no column named {name!r}")
        return self.data[:, j]

    def block(self, quantity, entity):
        """(n_knots, dim) array for one quantity@entity."""
        prefix_cols = [
            j for j, c in enumerate(self.columns)
            if c.startswith(quantity + "[") and c.endswith("@" + entity)
        ]
        if not prefix_cols:
            raise ColumnMismatch(f"no columns for {quantity}@{entity}")
        return self.data[:, prefix_cols]


def from_vector(layout: VariableLayout, z, dt_value):
    z = np.asarray(z, dtype=float)
    n_knots = layout.n_knots
    data = np.empty((n_knots, layout.knot_size))
    for k in range(n_knots):
        data[k] = z[layout.knot_slice(k)]
    return Trajectory(columns=layout.column_names(), data=data, dt=np.full(n_knots, float(dt_value)))


def to_vector(traj: Trajectory, layout: VariableLayout):
    if traj.columns != layout.column_names():
        raise ColumnMismatch("trajectory columns do not match the model layout")
    if traj.n_knots != layout.n_knots:
        raise ColumnMismatch(
            f"trajectory has {traj.n_knots} knots, layout expects {layout.n_knots}"
        )
    z = np.zeros(layout.n_vars)
    for k in range(traj.n_knots):
        z[layout.knot_slice(k)] = traj.data[k]
    if layout.free_dt:
        z[layout.dt_index] = traj.dt[0]
    return z


def write_csv(traj: Trajectory, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["knot", "dt"] + list(traj.columns)) + "\n")
        for k in range(traj.n_knots):
            cells = [str(k), repr(float(traj.dt[k]))]
            cells += [repr(float(v)) for v in traj.data[k]]
            fh.write(",".join(cells) + "\n")


def read_csv(path):
    try:
        with open(path, "r", newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise MalformedDocument(f"cannot read trajectory: {e}")
    if not lines:
        raise MalformedDocument("empty trajectory file")
    header = lines[0].split(",")
    if header[:2] != ["knot", "dt"]:
        raise ColumnMismatch("trajectory header must start with knot,dt")
    columns = header[2:]
    rows = []
    dts = []
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise MalformedDocument(
                f"line {i}: expected {len(header)} cells, found {len(cells)}"
            )
        try:
            knot = int(cells[0])
            vals = [float(c) for c in cells[1:]]
        except ValueError as e:
            raise MalformedDocument(f"line {i}: {e}")
        if knot != len(rows):
            raise MalformedDocument(f"line {i}: knot index {knot} out of order")
        dts.append(vals[0])
        rows.append(vals[1:])
    if not rows:
        raise MalformedDocument("trajectory has no knot rows")
    return Trajectory(columns=columns, data=np.array(rows), dt=np.array(dts))

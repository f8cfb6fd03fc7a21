"""Self-contained SVG line plots for solved trajectories.

Three charts per run: per-jet throttle, per-jet thrust (with the thrust
ceiling drawn as a dashed guide), and the summed vertical contact force.
Flight intervals are shaded as a red band on every chart so the contact
sequence is visible at a glance. No plotting library involved; the SVG
is assembled directly, which keeps artifacts byte-stable across runs.
"""

import math
import os
from xml.sax.saxutils import escape

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_BAND_FILL = "#e8736f"
_W, _H = 720, 440
_ML, _MR, _MT, _MB = 70, 18, 40, 52


def _nice_ticks(lo, hi, target=6):
    span = hi - lo
    if not math.isfinite(span) or span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = 10 * mag
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt_tick(v):
    if v == 0:
        return "0"
    return "%g" % v


class _Chart:
    """Minimal line chart writer with fixed margins and nice ticks."""

    def __init__(self, title, xlabel, ylabel):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.series = []
        self.guides = []
        self.bands = []

    def add_series(self, label, xs, ys):
        self.series.append((label, np.asarray(xs, float), np.asarray(ys, float)))

    def add_guide(self, label, y):
        self.guides.append((label, float(y)))

    def add_band(self, x0, x1):
        self.bands.append((float(x0), float(x1)))

    def _ranges(self):
        xs = [s[1] for s in self.series if s[1].size]
        ys = [s[2] for s in self.series if s[2].size]
        xlo = min((float(a.min()) for a in xs), default=0.0)
        xhi = max((float(a.max()) for a in xs), default=1.0)
        ylo = min((float(a.min()) for a in ys), default=0.0)
        yhi = max((float(a.max()) for a in ys), default=1.0)
        for _, y in self.guides:
            ylo, yhi = min(ylo, y), max(yhi, y)
        if xhi - xlo <= 0:
            xlo, xhi = xlo - 0.5, xhi + 0.5
        if yhi - ylo <= 0:
            ylo, yhi = ylo - 0.5, yhi + 0.5
        pad = 0.06 * (yhi - ylo)
        return xlo, xhi, ylo - pad, yhi + pad

    def render(self):
        xlo, xhi, ylo, yhi = self._ranges()
        pw = _W - _ML - _MR
        ph = _H - _MT - _MB

        def px(x):
            return _ML + pw * (x - xlo) / (xhi - xlo)

        def py(y):
            return _MT + ph * (yhi - y) / (yhi - ylo)

        out = []
        out.append(
            '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
            'viewBox="0 0 %d %d" font-family="Helvetica,Arial,sans-serif">'
            % (_W, _H, _W, _H)
        )
        out.append('<rect width="%d" height="%d" fill="white"/>' % (_W, _H))

        for x0, x1 in self.bands:
            a, b = max(px(x0), _ML), min(px(x1), _ML + pw)
            if b - a < 2.0:  # degenerate interval still has to be visible
                mid = 0.5 * (a + b)
                a, b = mid - 1.0, mid + 1.0
            out.append(
                '<rect x="%.2f" y="%d" width="%.2f" height="%d" fill="%s" '
                'fill-opacity="0.25"/>' % (a, _MT, b - a, ph, _BAND_FILL)
            )

        xticks = _nice_ticks(xlo, xhi)
        yticks = _nice_ticks(ylo, yhi)
        for t in xticks:
            x = px(t)
            out.append(
                '<line x1="%.2f" y1="%d" x2="%.2f" y2="%d" stroke="#dddddd"/>'
                % (x, _MT, x, _MT + ph)
            )
            out.append(
                '<text x="%.2f" y="%d" font-size="11" text-anchor="middle" '
                'fill="#333333">%s</text>' % (x, _MT + ph + 16, _fmt_tick(t))
            )
        for t in yticks:
            y = py(t)
            out.append(
                '<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="#dddddd"/>'
                % (_ML, y, _ML + pw, y)
            )
            out.append(
                '<text x="%d" y="%.2f" font-size="11" text-anchor="end" '
                'fill="#333333">%s</text>' % (_ML - 6, y + 3.5, _fmt_tick(t))
            )

        out.append(
            '<rect x="%d" y="%d" width="%d" height="%d" fill="none" '
            'stroke="#444444"/>' % (_ML, _MT, pw, ph)
        )

        for label, y in self.guides:
            yy = py(y)
            out.append(
                '<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="#888888" '
                'stroke-dasharray="6 4"/>' % (_ML, yy, _ML + pw, yy)
            )
            out.append(
                '<text x="%d" y="%.2f" font-size="10" text-anchor="end" '
                'fill="#666666">%s</text>' % (_ML + pw - 4, yy - 4, escape(label))
            )

        for i, (label, xs, ys) in enumerate(self.series):
            color = _PALETTE[i % len(_PALETTE)]
            pts = " ".join(
                "%.2f,%.2f" % (px(x), py(y))
                for x, y in zip(xs, ys)
                if math.isfinite(x) and math.isfinite(y)
            )
            if pts:
                out.append(
                    '<polyline points="%s" fill="none" stroke="%s" '
                    'stroke-width="1.8"/>' % (pts, color)
                )

        # legend, top-right inside the plot area
        ly = _MT + 14
        for i, (label, _, _) in enumerate(self.series):
            color = _PALETTE[i % len(_PALETTE)]
            lx = _ML + pw - 150
            out.append(
                '<line x1="%d" y1="%.2f" x2="%d" y2="%.2f" stroke="%s" '
                'stroke-width="2.5"/>' % (lx, ly - 3.5, lx + 22, ly - 3.5, color)
            )
            out.append(
                '<text x="%d" y="%.2f" font-size="11" fill="#222222">%s</text>'
                % (lx + 28, ly, escape(label))
            )
            ly += 16

        out.append(
            '<text x="%d" y="%d" font-size="14" text-anchor="middle" '
            'fill="#111111">%s</text>' % (_W // 2, 22, escape(self.title))
        )
        out.append(
            '<text x="%d" y="%d" font-size="12" text-anchor="middle" '
            'fill="#333333">%s</text>' % (_ML + pw // 2, _H - 12, escape(self.xlabel))
        )
        out.append(
            '<text x="16" y="%d" font-size="12" text-anchor="middle" '
            'fill="#333333" transform="rotate(-90 16 %d)">%s</text>'
            % (_MT + ph // 2, _MT + ph // 2, escape(self.ylabel))
        )
        out.append("</svg>")
        return "\n".join(out) + "\n"


def knot_times(traj):
    """Knot timestamps; interval k..k+1 integrates with the dt of knot k+1."""
    dt = np.asarray(traj.dt, float)
    t = np.zeros(dt.size)
    t[1:] = np.cumsum(dt[1:])
    return t


def _entity_of(column):
    return column.split("@", 1)[1]


def _series_by_prefix(traj, prefix):
    found = []
    for c in traj.columns:
        if c.startswith(prefix):
            found.append((_entity_of(c), traj.column(c)))
    return found


def emit_plots(traj, report, out_dir):
    """Write throttle.svg, thrust.svg and contact_forces.svg under out_dir.

    `report` is the report.json dict; only the flight intervals and the
    jet thrust ceilings are consulted, everything else is read straight
    from the trajectory columns.
    """
    os.makedirs(out_dir, exist_ok=True)
    t = knot_times(traj)
    val = report.get("validation", report) if isinstance(report, dict) else {}
    bands = []
    for pair in val.get("flight_intervals", []):
        k0, k1 = int(pair[0]), int(pair[1])
        bands.append((t[k0], t[k1]))
    jet_meta = report.get("jets", []) if isinstance(report, dict) else []

    throttle = _Chart("Jet throttle", "time [s]", "throttle [-]")
    for name, ys in _series_by_prefix(traj, "u[0]@"):
        throttle.add_series(name, t, ys)
    thrust = _Chart("Jet thrust", "time [s]", "thrust [N]")
    for name, ys in _series_by_prefix(traj, "T[0]@"):
        thrust.add_series(name, t, ys)
    for ceiling in sorted({float(j["thrust_max"]) for j in jet_meta}):
        thrust.add_guide("%g N max" % ceiling, ceiling)
    contact = _Chart("Total vertical contact force", "time [s]", "force [N]")
    fz = np.zeros(traj.n_knots)
    have_contacts = False
    for _, ys in _series_by_prefix(traj, "f[2]@"):
        fz += ys
        have_contacts = True
    if have_contacts:
        contact.add_series("sum fz", t, fz)

    paths = []
    for chart, fname in (
        (throttle, "throttle.svg"),
        (thrust, "thrust.svg"),
        (contact, "contact_forces.svg"),
    ):
        for band in bands:
            chart.add_band(*band)
        path = os.path.join(out_dir, fname)
        with open(path, "w") as fh:
            fh.write(chart.render())
        paths.append(path)
    return paths

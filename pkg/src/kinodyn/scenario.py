"""Scenario description: horizon, boundary states, weights, extras."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .errors import BadKnotIndex, MalformedDocument


@dataclass
class Weights:
    """Cost weights; each is a nonnegative scalar or per-component vector.

    Running terms multiply dt; wbar_* are the terminal-knot weights that
    pull the momentum state to rest.
    """

    w_x: object = 1.0  # com velocity
    w_xdot: object = 1.0  # com acceleration
    w_h: object = 1.0  # angular momentum
    w_hdot: object = 1.0  # angular momentum rate
    w_s: object = 1.0  # joint rates
    w_v: object = 1.0  # base velocity (linear + angular)
    w_sbar: object = 10.0  # posture tracking
    w_eps: object = 1e4  # complementarity panic
    w_fdot: object = 1e-4  # contact force rates
    w_f: object = 1e-4  # contact forces
    w_Tdot: object = 1e-4  # thrust rates
    w_u: object = 1e-1  # throttle
    wbar_x: object = 100.0
    wbar_xdot: object = 100.0
    wbar_h: object = 100.0
    wbar_hdot: object = 100.0


WEIGHT_KEYS = tuple(f.name for f in dc_fields(Weights))


@dataclass
class ExtraConstraint:
    kind: str  # com_height_min | com_position
    value: object  # scalar height or 3-vector position
    knot: int | None = None
    frac: float | None = None

    def resolve_knot(self, n_knots):
        k = self.knot if self.knot is not None else int(round(self.frac * (n_knots - 1)))
        if not 0 <= k < n_knots:
            raise BadKnotIndex(f"extra constraint knot {k} outside 0..{n_knots - 1}")
        return k


@dataclass
class Scenario:
    N: int  # number of integration intervals; knots are 0..N
    x0: np.ndarray
    xN: np.ndarray
    dt: float | None = 0.05
    dt_bounds: tuple | None = None
    extra: list = field(default_factory=list)
    weights: Weights = field(default_factory=Weights)
    posture: np.ndarray | None = None
    epsilon_max: float = 0.01
    seed: int = 0
    ground: str = "flat"
    force_eps: float = 1.0  # flight-detection force threshold, N
    model_path: str | None = None

    @property
    def free_dt(self):
        return self.dt_bounds is not None


def _vec3(x, where):
    v = np.asarray(x, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise MalformedDocument(f"{where}: expected 3 finite numbers")
    return v


def _check_keys(obj, where, allowed):
    if not isinstance(obj, dict):
        raise MalformedDocument(f"{where}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise MalformedDocument(f"{where}: unknown keys {sorted(unknown)}")


def _parse_extra(obj, i):
    where = f"extra[{i}]"
    _check_keys(obj, where, ("knot", "frac", "kind", "value"))
    kind = obj.get("kind")
    if kind not in ("com_height_min", "com_position"):
        raise MalformedDocument(f"{where}: unknown kind {kind!r}")
    if ("knot" in obj) == ("frac" in obj):
        raise MalformedDocument(f"{where}: exactly one of knot/frac required")
    value = obj["value"]
    value = float(value) if kind == "com_height_min" else _vec3(value, f"{where}.value")
    return ExtraConstraint(
        kind=kind,
        value=value,
        knot=int(obj["knot"]) if "knot" in obj else None,
        frac=float(obj["frac"]) if "frac" in obj else None,
    )


def _parse_weights(obj):
    _check_keys(obj, "weights", WEIGHT_KEYS)
    kw = {}
    for k, v in obj.items():
        kw[k] = np.asarray(v, dtype=float) if isinstance(v, list) else float(v)
        if np.any(np.asarray(kw[k]) < 0):
            raise MalformedDocument(f"weights.{k}: negative weight")
    return Weights(**kw)


SCENARIO_KEYS = (
    "model",
    "N",
    "dt",
    "dt_bounds",
    "x0",
    "xN",
    "extra",
    "weights",
    "posture",
    "epsilon_max",
    "seed",
    "ground",
    "force_eps",
)


def parse_scenario(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"scenario is not valid JSON: {e}") from None
    _check_keys(doc, "scenario", SCENARIO_KEYS)
    for key in ("N", "x0", "xN"):
        if key not in doc:
            raise MalformedDocument(f"scenario: missing key {key!r}")
    n = int(doc["N"])
    if n < 2:
        raise MalformedDocument("scenario: N must be at least 2")
    if "dt" in doc and "dt_bounds" in doc:
        raise MalformedDocument("scenario: dt and dt_bounds are mutually exclusive")
    dt, dt_bounds = 0.05, None
    if "dt_bounds" in doc:
        lo, hi = (float(v) for v in doc["dt_bounds"])
        if not 0 < lo <= hi:
            raise MalformedDocument("scenario: dt_bounds must satisfy 0 < lo <= hi")
        dt, dt_bounds = None, (lo, hi)
    elif "dt" in doc:
        dt = float(doc["dt"])
        if dt <= 0:
            raise MalformedDocument("scenario: dt must be positive")
    posture = doc.get("posture")
    return Scenario(
        N=n,
        x0=_vec3(doc["x0"], "x0"),
        xN=_vec3(doc["xN"], "xN"),
        dt=dt,
        dt_bounds=dt_bounds,
        extra=[_parse_extra(o, i) for i, o in enumerate(doc.get("extra", []))],
        weights=_parse_weights(doc.get("weights", {})),
        posture=None if posture is None else np.asarray(posture, dtype=float),
        epsilon_max=float(doc.get("epsilon_max", 0.01)),
        seed=int(doc.get("seed", 0)),
        ground=str(doc.get("ground", "flat")),
        force_eps=float(doc.get("force_eps", 1.0)),
        model_path=doc.get("model"),
    )


def serialize_scenario(sc):
    doc = {"N": sc.N, "x0": list(map(float, sc.x0)), "xN": list(map(float, sc.xN))}
    if sc.model_path is not None:
        doc["model"] = sc.model_path
    if sc.free_dt:
        doc["dt_bounds"] = list(sc.dt_bounds)
    else:
        doc["dt"] = sc.dt
    if sc.extra:
        doc["extra"] = []
        for e in sc.extra:
            obj = {"kind": e.kind}
            obj["knot" if e.knot is not None else "frac"] = e.knot if e.knot is not None else e.frac
            obj["value"] = e.value if np.isscalar(e.value) else list(map(float, e.value))
            doc["extra"].append(obj)
    default = Weights()
    w = {}
    for k in WEIGHT_KEYS:
        v = getattr(sc.weights, k)
        if not np.array_equal(v, getattr(default, k)):
            w[k] = list(map(float, v)) if isinstance(v, np.ndarray) else v
    if w:
        doc["weights"] = w
    if sc.posture is not None:
        doc["posture"] = list(map(float, sc.posture))
    doc["epsilon_max"] = sc.epsilon_max
    doc["seed"] = sc.seed
    if sc.ground != "flat":
        doc["ground"] = sc.ground
    if sc.force_eps != 1.0:
        doc["force_eps"] = sc.force_eps
    return json.dumps(doc, indent=2)

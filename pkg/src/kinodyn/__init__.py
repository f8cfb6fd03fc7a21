"""Kino-dynamic trajectory optimization for legged robots with jets.

Centroidal dynamics + whole-body kinematics, contacts through a relaxed
complementarity formulation, jet thrust as a second-order actuator model,
all transcribed into a sparse NLP and solved with the in-package
augmented Lagrangian solver.
"""

from .errors import (
    KinodynError,
    MalformedDocument,
    KinematicLoop,
    DanglingReference,
    InvalidInertia,
    UnknownJoint,
    UnknownFrame,
    NegativeThrust,
    DegenerateNormal,
    BadKnotIndex,
    EvaluationFailure,
    NonFiniteObjective,
    ColumnMismatch,
)
from .model import RobotModel, parse_model, serialize_model
from .scenario import Scenario, Weights, parse_scenario
from .transcription import NlpProblem, assemble, initial_guess
from .solve import SolveOptions, Solution, solve
from .trajectory import Trajectory, from_vector, to_vector, read_csv, write_csv
from .validate import ValidationReport, validate

__version__ = "0.1.0"

__all__ = [
    "KinodynError",
    "MalformedDocument",
    "KinematicLoop",
    "DanglingReference",
    "InvalidInertia",
    "UnknownJoint",
    "UnknownFrame",
    "NegativeThrust",
    "DegenerateNormal",
    "BadKnotIndex",
    "EvaluationFailure",
    "NonFiniteObjective",
    "ColumnMismatch",
    "RobotModel",
    "parse_model",
    "serialize_model",
    "Scenario",
    "Weights",
    "parse_scenario",
    "NlpProblem",
    "assemble",
    "initial_guess",
    "SolveOptions",
    "Solution",
    "solve",
    "Trajectory",
    "from_vector",
    "to_vector",
    "read_csv",
    "write_csv",
    "ValidationReport",
    "validate",
    "__version__",
]

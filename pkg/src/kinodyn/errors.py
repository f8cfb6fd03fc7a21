"""Exception types shared across the package."""


class KinodynError(Exception):
    """Base class for all kinodyn errors."""


class MalformedDocument(KinodynError):
    """Model or scenario document is syntactically or structurally invalid."""


class KinematicLoop(KinodynError):
    """Joint graph is not a tree rooted at the base link."""


class DanglingReference(KinodynError):
    """A joint, jet, or patch references an unknown link."""


class InvalidInertia(KinodynError):
    """Link inertia is not symmetric positive semidefinite."""


class UnknownJoint(KinodynError):
    """Joint name does not map to a non-fixed joint."""


class UnknownFrame(KinodynError):
    """Frame identifier names no link, jet, or patch vertex."""


class NegativeThrust(KinodynError):
    """Thrust magnitude below zero."""


class DegenerateNormal(KinodynError):
    """Surface normal is not unit length."""


class BadKnotIndex(KinodynError):
    """Task constraint pinned outside the horizon."""


class EvaluationFailure(KinodynError):
    """A constraint or objective evaluated to a non-finite value."""


class NonFiniteObjective(KinodynError):
    """Objective non-finite at the initial point."""


class ColumnMismatch(KinodynError):
    """Trajectory CSV columns do not match the problem layout."""

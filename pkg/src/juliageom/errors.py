"""Exception types shared by all modules.

`ValidationError` marks bad user input (maps, configs, preconditions the
caller controls).  Everything else derives from `NumericalError` and signals
that a computation could not be carried out reliably.
"""


class JuliaGeomError(Exception):
    """Base class for all package errors."""


class ValidationError(JuliaGeomError, ValueError):
    """Malformed input: map strings, configs, out-of-range parameters."""


class NumericalError(JuliaGeomError):
    """A numerical procedure failed or produced untrustworthy output."""


class NonConvergence(NumericalError):
    pass


class CriticalValueOnPath(NumericalError):
    pass


class LiftDiverged(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class PathTouchesBoundary(NumericalError):
    pass


class Disconnected(NumericalError):
    pass


class NoAttractor(NumericalError):
    pass


class ComponentUnresolved(NumericalError):
    pass


class DegenerateEndpoints(NumericalError):
    pass


class NoJuliaCriticalPoints(NumericalError):
    pass


class CriticalOrbitHitsCritical(NumericalError):
    pass

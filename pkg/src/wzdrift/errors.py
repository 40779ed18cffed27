"""Exception hierarchy.

Config problems (bad file, bad key) are ConfigError; everything the numerics
can raise during a run derives from NumericalError so the CLI can map the two
families to distinct exit codes.
"""


class WzDriftError(Exception):
    pass


class ConfigError(WzDriftError):
    pass


class ParseError(ConfigError):
    """Malformed config text; carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConfigError):
    """Config parsed but a key value violates its contract."""


class NumericalError(WzDriftError):
    pass


class DimensionMismatch(NumericalError):
    pass


class NotHermitian(NumericalError):
    pass


class DegeneracyCountMismatch(NumericalError):
    """Eigenvalue cluster at the degenerate energy has the wrong size.

    Usually means the protocol left the regime where the model keeps its
    protected degeneracy.
    """


class FrameContinuityLoss(NumericalError):
    """Continuation step too large: projected previous frame nearly singular."""


class AdiabaticityLost(NumericalError):
    """State has left the neighbourhood of the degeneracy patch."""


class PivotTooSmall(NumericalError):
    """Pivot population below threshold; re-pivot before mapping."""


class PopulationOverflow(NumericalError):
    pass


class BoundaryDegenerate(NumericalError):
    """Population coordinate pinned to a boundary where differencing fails."""


class NotAFixedPoint(NumericalError):
    pass


class ZeroModeCountMismatch(NumericalError):
    pass


class DefectiveMatrix(NumericalError):
    """Eigenvector basis of the linearization is too ill-conditioned to trust."""


class SingularNZBlock(NumericalError):
    """A nominally nonzero linearization eigenvalue fell below tolerance."""


class GapClosure(NumericalError):
    pass


class StepTooLarge(NumericalError):
    """Integrator step violates its stability/accuracy contract."""


class PoorFit(NumericalError):
    """Scaling regression is noise-dominated or lacks velocity spread."""

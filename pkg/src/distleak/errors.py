"""Exception types shared across the toolkit.

Every failure mode that callers are expected to branch on gets its own
class; plain ValueError is reserved for malformed arguments that indicate
a programming error rather than a property of the data.
"""


class DistleakError(Exception):
    """Base class for all toolkit-specific errors."""


class DimensionMismatchError(DistleakError, ValueError):
    """Operands have incompatible vector dimensions."""


class ZeroVectorError(DistleakError, ValueError):
    """A direction was required but the vector has (near-)zero norm."""


class MalformedFileError(DistleakError, ValueError):
    """An embedding, basis, or transcript file failed to parse."""


class RankDeficientError(DistleakError, ValueError):
    """A probe matrix is numerically rank-deficient."""


class ArityError(DistleakError, ValueError):
    """Observation count does not match what the solver requires."""


class InfeasibleDistancesError(DistleakError, ArithmeticError):
    """No real solution is consistent with the observed distances."""


class DegenerateGeometryError(DistleakError, ArithmeticError):
    """The probe geometry leaves the solution scale unconstrained."""


class NonDiscriminatingProbeError(DistleakError, ValueError):
    """An extra observation failed to separate two candidate solutions."""


class UnderdeterminedError(DistleakError, ValueError):
    """Fewer observations than the basis rank requires."""


class ProbeSpanError(DistleakError, ValueError):
    """The probe set does not span the recovery subspace."""


class DuplicateIdError(DistleakError, ValueError):
    """An identity is already enrolled."""


class UnknownIdError(DistleakError, KeyError):
    """Authentication was attempted against an identity never enrolled."""


class CalibrationError(DistleakError, ValueError):
    """Cross-domain distance calibration could not be fitted."""


class TrainingDivergedError(DistleakError, ArithmeticError):
    """An optimisation loop produced a non-finite loss."""

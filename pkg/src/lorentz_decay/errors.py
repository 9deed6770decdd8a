"""Exception hierarchy.

Every error raised on purpose by the package derives from ``LorentzDecayError``.
Errors that signal a failed certification (as opposed to bad input) also derive
from ``CertificationError``; the CLI maps those to exit code 2.
"""


class LorentzDecayError(Exception):
    """Base class for all package errors."""


class CertificationError(LorentzDecayError):
    """A precondition of an estimate or a certification check failed."""


# material
class NonPositiveVacuumConstant(LorentzDecayError, ValueError):
    pass


class NonPositiveCoupling(LorentzDecayError, ValueError):
    pass


class NegativeDamping(LorentzDecayError, ValueError):
    pass


class NegativeResonance(LorentzDecayError, ValueError):
    pass


class DuplicateOscillator(LorentzDecayError, ValueError):
    pass


class EmptyBranch(LorentzDecayError, ValueError):
    pass


class PoleHit(LorentzDecayError, ZeroDivisionError):
    pass


class NegativeTime(LorentzDecayError, ValueError):
    pass


class GridInLowerHalfPlane(LorentzDecayError, ValueError):
    pass


# mode dynamics
class NonFiniteTime(LorentzDecayError, ValueError):
    pass


class EigensolveFailure(LorentzDecayError, RuntimeError):
    pass


class StateShapeMismatch(LorentzDecayError, ValueError):
    pass


# ledger
class LadderTooShort(LorentzDecayError, ValueError):
    pass


class EmptyTimeGrid(LorentzDecayError, ValueError):
    pass


class NotStronglyDissipative(CertificationError):
    pass


class ZeroWaveVectorForLorentz(CertificationError):
    pass


class ZeroDecayDensity(CertificationError):
    pass


class ZeroInitialData(LorentzDecayError, ValueError):
    pass


# decay analysis
class EmptyQuadrature(LorentzDecayError, ValueError):
    pass


class NonTransversePolarization(LorentzDecayError, ValueError):
    pass


class DeclaredMomentMismatch(LorentzDecayError, ValueError):
    pass


class NonPositiveCurveValues(LorentzDecayError, ValueError):
    pass


class DegenerateWindow(LorentzDecayError, ValueError):
    pass


class QuadratureDoesNotStraddleOne(LorentzDecayError, ValueError):
    pass


class ZeroModeIncluded(LorentzDecayError, ValueError):
    pass


# memory kernel lab
class GridTooCoarse(LorentzDecayError, ValueError):
    pass


class NonzeroInitialValue(LorentzDecayError, ValueError):
    pass


class KernelNotC3(LorentzDecayError, ValueError):
    pass


class KernelMaterialMismatch(LorentzDecayError, ValueError):
    pass


# cli
class ConfigParseError(LorentzDecayError, ValueError):
    pass

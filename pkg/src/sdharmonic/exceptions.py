"""Exception hierarchy shared across the package."""


class SDHarmonicError(Exception):
    """Base class for all package errors."""


class LimitExceededError(SDHarmonicError):
    """A ring term passed the configured frequency, degree or rate bound."""


class DegreeError(SDHarmonicError, ValueError):
    """A form operation received an argument of the wrong degree."""


class UnsupportedMapError(SDHarmonicError):
    """A chart map whose pullback would leave the coefficient ring."""


class NotClosedError(SDHarmonicError):
    pass


class NonvanishingOnCoreError(SDHarmonicError):
    """The form does not vanish on the core circle x = 0."""


class NotSelfDualError(SDHarmonicError):
    pass


class DegenerateError(SDHarmonicError):
    """A matrix or form that must be nondegenerate is (numerically) singular."""


class SamplingTooCoarseError(SDHarmonicError):
    pass


class OnCoreError(SDHarmonicError):
    """Evaluation requested on C, where the object is undefined."""


class NegativeDensityError(SDHarmonicError):
    pass


class NonzeroLoopIntegralError(SDHarmonicError):
    pass


class SingularityError(SDHarmonicError):
    """The Moser field hit a point where the 2-form degenerates."""


class StepUnderflowError(SDHarmonicError):
    pass


class ClassMismatchError(SDHarmonicError):
    pass


class OffSphereError(SDHarmonicError):
    pass


class RankDeficiencyError(SDHarmonicError):
    pass


class DriftExceededError(SDHarmonicError):
    pass

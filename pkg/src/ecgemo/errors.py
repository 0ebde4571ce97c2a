"""Exception hierarchy shared by every stage of the pipeline."""


class EcgEmoError(Exception):
    """Base class for all package errors."""


# ingest
class IngestError(EcgEmoError, ValueError):
    """A single file could not be turned into a recording."""


class MissingColumn(IngestError):
    pass


class NonNumericSample(IngestError):
    pass


class EmptyFile(IngestError):
    pass


class FilenameMismatch(IngestError):
    pass


class UnsupportedEmotion(EcgEmoError, ValueError):
    pass


# dsp / features
class InvalidFrequency(EcgEmoError, ValueError):
    pass


class UnstableFilter(EcgEmoError, RuntimeError):
    """A designed filter has a pole on or outside the unit circle."""


class SegmentTooLong(EcgEmoError, ValueError):
    pass


class BandOutsideGrid(EcgEmoError, ValueError):
    pass


class DegenerateEpochWarning(UserWarning):
    """Epoch has zero variance; skewness and kurtosis are reported as 0."""


# selection / models
class TooFewRows(EcgEmoError, ValueError):
    pass


class SingleClassTraining(EcgEmoError, ValueError):
    pass


class InsufficientFeatures(EcgEmoError, ValueError):
    pass


class DimensionMismatch(EcgEmoError, ValueError):
    pass


class NonFiniteInput(EcgEmoError, ValueError):
    pass


class UnsupportedProbability(EcgEmoError, TypeError):
    pass


class WeightMismatch(EcgEmoError, ValueError):
    pass


class UnknownModel(EcgEmoError, KeyError):
    pass


# evaluation
class SplitError(EcgEmoError, ValueError):
    """The requested evaluation protocol cannot be realized on this table."""


class NoEligibleGroups(SplitError):
    pass


class TooFewSubjects(SplitError):
    pass


class LengthMismatch(EcgEmoError, ValueError):
    pass

"""Exception hierarchy shared by all vitalsig modules."""


class VitalsigError(Exception):
    """Base class for every error raised by this package."""


# -- parsing ---------------------------------------------------------------

class ParseError(VitalsigError, ValueError):
    pass


class MalformedRow(ParseError):
    pass


class InconsistentPatchLength(ParseError):
    pass


class NonPositiveFps(ParseError):
    pass


class DuplicateRoi(ParseError):
    pass


class DuplicatePatch(ParseError):
    pass


class NonMonotoneTime(ParseError):
    pass


class IrregularSampling(ParseError):
    pass


class EmptyTrace(ParseError):
    pass


class ManifestError(ParseError):
    pass


# -- synthesis -------------------------------------------------------------

class InvalidSpec(VitalsigError, ValueError):
    pass


class InvalidRr(InvalidSpec):
    pass


# -- signal processing -----------------------------------------------------

class TooShort(VitalsigError, ValueError):
    pass


class ZeroFps(VitalsigError, ValueError):
    pass


class SamplingTooLow(VitalsigError, ValueError):
    pass


class ConstantChannel(VitalsigError, ValueError):
    pass


class NoPulse(VitalsigError):
    pass


class AllRemoved(VitalsigError):
    pass


class MissingPerPatch(VitalsigError, ValueError):
    pass


class EmptySeries(VitalsigError, ValueError):
    pass


class TooFewIntervals(VitalsigError, ValueError):
    pass


class DegenerateTachogram(VitalsigError):
    pass


class SegmentOutOfRange(VitalsigError, ValueError):
    pass


class HrvOutlier(VitalsigError):
    """HR or SDNN beyond the configured plausibility limits."""


class NoBeatsDetected(VitalsigError):
    pass


class InsufficientPairs(VitalsigError):
    pass


class MissingForehead(VitalsigError, KeyError):
    pass


# -- statistics ------------------------------------------------------------

class LengthMismatch(VitalsigError, ValueError):
    pass


class ConstantInput(VitalsigError, ValueError):
    pass


class ZeroVariance(VitalsigError, ValueError):
    pass


# -- machine learning ------------------------------------------------------

class MissingModality(VitalsigError, ValueError):
    pass


class SingleClass(VitalsigError, ValueError):
    pass


class NoConvergence(VitalsigError):
    pass


class TooFewSamples(VitalsigError, ValueError):
    pass


class MissingOutOfFold(VitalsigError, ValueError):
    pass


class TooManyFeatures(VitalsigError, ValueError):
    pass


class EmptyBackground(VitalsigError, ValueError):
    pass

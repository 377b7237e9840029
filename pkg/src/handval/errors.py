"""Exception and warning types raised across handval."""


class HandValError(ValueError):
    """Base class for every error raised by this package."""


# kinematics
class DepthHole(HandValError):
    pass


class MissingJoint(HandValError):
    pass


class NonPhysicalDepth(HandValError):
    pass


class InvalidIntrinsics(HandValError):
    pass


class GridMismatch(HandValError):
    pass


class WrongLabels(HandValError):
    pass


class TooFewSamples(HandValError):
    pass


# alignment / metrics
class OutOfSpan(HandValError):
    pass


class DegenerateSeries(HandValError):
    pass


class LengthMismatch(HandValError):
    pass


class InsufficientOverlap(HandValError):
    pass


class EmptySeries(HandValError):
    pass


class AllExcluded(HandValError):
    pass


class BandEmpty(HandValError):
    pass


class TooShort(HandValError):
    pass


# segmentation
class NoExtrema(HandValError):
    pass


class EmptySegmentList(HandValError):
    pass


# agreement
class TooFewPairs(HandValError):
    pass


class DegenerateInput(HandValError):
    pass


# synthesis
class InvalidSpec(HandValError):
    pass


# files / pipeline
class ParseError(HandValError):
    """Malformed trajectory file. Carries the offending path and line number."""

    def __init__(self, reason, line=None, path=None, trial_id=None):
        self.reason = reason
        self.line = line
        self.path = path
        self.trial_id = trial_id
        super().__init__(self._format())

    def _format(self):
        where = [f"trial {self.trial_id}"] if self.trial_id else []
        if self.path is not None:
            where.append(str(self.path))
        if self.line is not None:
            where.append(f"line {self.line}")
        return ": ".join(where + [self.reason])


class SchemaMismatch(ParseError):
    pass


class VersionUnsupported(ParseError):
    pass


class ConfigError(HandValError):
    pass


class IoError(HandValError):
    pass


class TaskMismatch(HandValError):
    pass


class EmptyInput(HandValError):
    pass


class ProtocolWarning(UserWarning):
    """A non-fatal inconsistency: protocol violation, truncated pairing, exclusions."""

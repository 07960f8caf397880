"""Exception types shared across the toolbox."""


class LidarcamError(Exception):
    """Base class for all toolbox errors."""


class BehindCamera(LidarcamError):
    """The point has depth <= epsilon and cannot be imaged."""


class EmptyInput(LidarcamError, ValueError):
    """An operation that needs at least one pair received none."""


class DuplicateAnnotation(LidarcamError):
    """A correspondence with the same (lidar_timestamp, frame_id) already exists."""


class SkewExceeded(LidarcamError):
    """LiDAR and camera timestamps are further apart than max_skew."""


class TooFewCorrespondences(LidarcamError):
    """Not enough correspondence pairs for the requested operation."""


class EmptyLedger(LidarcamError):
    """The synthetic recording contains no ground-truth entries."""


class FormatError(LidarcamError, ValueError):
    """A file does not conform to one of the toolbox text formats."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f" [{path}"
            if line is not None:
                where += f":{line}"
            where += "]"
        super().__init__(message + where)


class MalformedRecord(FormatError):
    """A record line could not be parsed; carries the 1-based line number."""


class MissingColumn(FormatError):
    """A required column is absent from a tabular file header."""

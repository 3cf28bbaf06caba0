"""Exception hierarchy shared across the package.

Every error raised by hoaxrank derives from HoaxrankError so callers can
catch package failures with a single except clause. The CLI maps each
class to a distinct exit code.
"""


class HoaxrankError(Exception):
    """Base class for all hoaxrank errors."""


class InvalidInputError(HoaxrankError):
    """An argument violated a documented precondition (empty key, bad value)."""


class InvalidEdgeError(HoaxrankError):
    """Edge kind, source kind, and polarity do not form a legal combination."""


class InvalidLabelsError(HoaxrankError):
    """Seed label sets overlap or reference nodes missing from the graph."""


class InvalidUrlError(HoaxrankError):
    """Input string does not parse as a supported URL."""


class InvalidSpecError(HoaxrankError):
    """A split spec, generator spec, or config file is internally inconsistent."""


class InvalidStreamError(HoaxrankError):
    """An edge stream violated its ordering contract."""


class NotFoundError(HoaxrankError):
    """Lookup of a URL, node, or file entry that does not exist."""


class InconsistentStateError(HoaxrankError):
    """Engine asked to process an edge the graph does not actually contain."""


class InsufficientCandidatesError(HoaxrankError):
    """Not enough eligible items to draw the requested sample."""


class DegenerateTrainingError(HoaxrankError):
    """Training data contains a single class."""


class CorruptInputError(HoaxrankError):
    """Too large a fraction of an input file failed to parse."""

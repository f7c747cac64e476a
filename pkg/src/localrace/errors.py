"""Exception hierarchy shared by all localrace modules."""


class LocalRaceError(Exception):
    """Base class for every error raised by this package."""


class TooFewPoints(LocalRaceError):
    pass


class DegenerateInput(LocalRaceError):
    pass


class OutOfRange(LocalRaceError):
    pass


class InvalidDt(LocalRaceError):
    pass


class SelfIntersectingWalls(LocalRaceError):
    pass


class EmptyScan(LocalRaceError):
    pass


class NoWalls(LocalRaceError):
    pass


class InvalidWidth(LocalRaceError):
    pass


class NonpositiveDenominator(LocalRaceError):
    pass


class NoGap(LocalRaceError):
    pass


class InvalidParams(LocalRaceError):
    pass


class TrackParseError(LocalRaceError):
    pass


class ConfigParseError(LocalRaceError):
    pass


class UnknownKey(LocalRaceError):
    pass


class ScanLogError(LocalRaceError):
    pass


# Errors the planner may raise on a bad frame; the controller absorbs these.
PLANNER_ERRORS = (EmptyScan, NoWalls, TooFewPoints, DegenerateInput, InvalidWidth)

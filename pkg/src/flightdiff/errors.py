"""Exception hierarchy shared by all flightdiff modules.

Every error carries an ``exit_code`` used by the CLI: 2 for bad input
(files, parsing, configuration) and 3 for domain failures.
"""

from __future__ import annotations


class FlightDiffError(Exception):
    exit_code = 3

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        if self.details:
            out["details"] = self.details
        return out


class InputError(FlightDiffError):
    """Unreadable or malformed input file."""

    exit_code = 2


class ConfigError(FlightDiffError):
    exit_code = 2


class EmptyScene(FlightDiffError):
    pass


class InvalidGeometry(FlightDiffError):
    pass


class InvalidParameter(FlightDiffError):
    pass


class ZeroRadiusStart(FlightDiffError):
    pass


class CoverageStall(FlightDiffError):
    pass


class DegenerateCorridor(FlightDiffError):
    pass


class InsufficientData(FlightDiffError):
    pass


class InvalidLog(FlightDiffError):
    pass


class DegenerateTrajectory(FlightDiffError):
    pass


class InvalidInput(FlightDiffError):
    pass


class DensityInfeasible(FlightDiffError):
    pass


class InfeasibleMaze(FlightDiffError):
    pass


class Unreachable(FlightDiffError):
    pass

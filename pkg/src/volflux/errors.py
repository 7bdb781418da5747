"""Exception types raised across the package."""


class VolfluxError(Exception):
    pass


class PointOutsideAtlas(VolfluxError, ValueError):
    """A planar point is not within one identification translate of the polygon."""


class ConePointHit(VolfluxError):
    """A geodesic or sample came within tolerance of a cone point."""


class DegenerateCrossing(VolfluxError):
    """A trace touches a curve non-transversally (vertex on curve, overlap)."""


class DegenerateLeg(VolfluxError):
    """A path-system leg could not be built for the requested point."""


class UnsupportedSurface(VolfluxError, ValueError):
    pass


class DimensionMismatch(VolfluxError, ValueError):
    pass


class SingularPairing(VolfluxError, ValueError):
    pass


class UnknownCurve(VolfluxError, KeyError):
    pass


class ExcessiveDegeneracy(VolfluxError):
    """More than the allowed fraction of Monte Carlo samples were degenerate."""


class ProfileCountMismatch(VolfluxError, ValueError):
    pass


class ConfigParseError(VolfluxError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ConfigValidationError(VolfluxError):
    def __init__(self, message, field=None):
        self.field = field
        where = f"{field}: " if field else ""
        super().__init__(f"{where}{message}")

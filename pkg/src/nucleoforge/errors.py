"""Exception hierarchy shared by the library and the CLI."""


class NucleoforgeError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(NucleoforgeError, ValueError):
    pass


class TooSmall(NucleoforgeError, ValueError):
    pass


class NotAContourPixel(NucleoforgeError, ValueError):
    pass


class EmptyContourSet(NucleoforgeError, ValueError):
    pass


class ScoreOutOfRange(NucleoforgeError, ValueError):
    pass


class PlacementExhausted(NucleoforgeError, RuntimeError):
    """The mask sampler could not place the requested nuclei.

    Raised when a configuration is too dense for the rejection sampler to
    satisfy within its attempt bound.
    """


class ConfigError(NucleoforgeError, ValueError):
    pass

import numpy as np


class CogbeamError(Exception):
    """Base class for all package errors."""


class GeometryError(CogbeamError, ValueError):
    pass


class SingularityError(CogbeamError, np.linalg.LinAlgError):
    pass


class DegenerateReceiverError(CogbeamError):
    pass


class UnsupportedDimensionError(CogbeamError, ValueError):
    pass


class ZeroSignalError(CogbeamError, ValueError):
    pass


class ExtractionError(CogbeamError):
    """Rank-one recovery could not be certified."""


class ConfigError(CogbeamError, ValueError):
    """Malformed configuration document; message names the offending field."""

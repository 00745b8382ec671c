"""Exception types raised across the package."""


class SplitGibbsError(Exception):
    pass


class DimensionError(SplitGibbsError, ValueError):
    """Operand shape does not match the operator."""


class StructureError(SplitGibbsError, ValueError):
    """A precision term cannot be handled by the requested sampler."""


class ParameterError(SplitGibbsError, ValueError):
    pass


class ConfigurationError(SplitGibbsError, ValueError):
    pass


class FormatError(SplitGibbsError, ValueError):
    """Malformed image or config file."""

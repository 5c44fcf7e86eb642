"""Exception types raised by phasebit."""


class DimensionError(ValueError):
    """Array shapes or lengths do not agree."""


class NormEstimateUndefined(ValueError):
    """The +1-bit frequency is 0 or 1, so the threshold inversion has no finite value."""

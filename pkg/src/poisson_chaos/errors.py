"""Exception types shared across the toolkit."""


class PoissonChaosError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(PoissonChaosError, ValueError):
    """Invalid configuration (nonfinite mass, unresolvable cells, bad plan)."""


class SizeError(PoissonChaosError, ValueError):
    """Problem instance exceeds the documented desk-scale caps."""

"""Exception hierarchy shared across the package."""


class PhccLabError(Exception):
    """Base class for all errors raised by phcclab."""


class ConfigError(PhccLabError, ValueError):
    """Invalid topology or scenario parameters."""


class ScenarioParseError(ConfigError):
    """A scenario file could not be parsed."""


class ScenarioValidationError(ConfigError):
    """A scenario file parsed but contains bad values or unknown keys."""


class SimulationError(PhccLabError, RuntimeError):
    """Internal inconsistency detected by the engine (a bug guard)."""


class EstimatorError(PhccLabError, ValueError):
    """Estimator called with an invalid state or an empty round."""

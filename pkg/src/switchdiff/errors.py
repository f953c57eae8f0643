"""Exception hierarchy shared by all modules."""


class SwitchDiffError(Exception):
    """Base class for errors raised by switchdiff."""


class ConfigError(SwitchDiffError, ValueError):
    """A configuration or model description could not be accepted.

    Attributes
    ----------
    field : str or None
        Dotted path of the offending field, when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class ParameterRangeError(ConfigError):
    """A model or simulation parameter lies outside its admissible range."""


class InfeasibleError(SwitchDiffError, ValueError):
    """The recurrence constants cannot be built (balance equation has no q < 1)."""


class CriterionUnsatisfiedError(SwitchDiffError):
    """An operation requiring a positive-recurrent model was given one that is not."""


class NumericalBlowupError(SwitchDiffError, FloatingPointError):
    """The integrated state became non-finite.

    Attributes
    ----------
    last_time : float
        Last simulated time at which the state was still finite.
    """

    def __init__(self, last_time, message=None):
        self.last_time = float(last_time)
        super().__init__(message or f"non-finite state after t={self.last_time!r}")


class InsufficientSampleError(SwitchDiffError, ValueError):
    """Too few observations to form the requested statistic."""


class EstimationFailureError(SwitchDiffError):
    """Monte Carlo estimation produced no usable (uncensored) samples."""


class ReliabilityError(SwitchDiffError):
    """Too many paths were censored for the estimate to be trusted."""


class InternalInvariantError(SwitchDiffError, AssertionError):
    """An internal invariant was violated (e.g. dominating rate below actual rate)."""


class ShapeError(SwitchDiffError, ValueError):
    """Two binned measures do not share the same bins."""

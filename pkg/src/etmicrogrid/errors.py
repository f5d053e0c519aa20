class MicrogridError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(MicrogridError, ValueError):
    pass


class NotStronglyConnected(MicrogridError):
    pass


class NotPositiveDefinite(MicrogridError):
    pass


class InactiveAgent(MicrogridError):
    pass


class NegativeSegment(MicrogridError, ValueError):
    pass


class NotACheckInstant(MicrogridError):
    pass


class SingularNetwork(MicrogridError):
    pass


class NotConverged(MicrogridError):
    pass


class ConfigInvalid(MicrogridError, ValueError):
    pass


class ConditionViolated(MicrogridError):
    pass

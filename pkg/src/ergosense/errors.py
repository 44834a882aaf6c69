"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """An input violates a documented invariant or precondition."""


class KindError(ValidationError):
    """Operation applied to a system or partition of the wrong kind."""


class SpanError(ValidationError):
    """A symbolic computation would exceed the configured span limit."""


class HorizonError(ValidationError):
    """A point's symbol horizon is too short and cannot be extended."""


class SamplingError(RuntimeError):
    """A rejection-sampling budget was exhausted."""

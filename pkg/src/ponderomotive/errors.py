class ValidationError(ValueError):
    """A parameter record violates its invariants."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DegenerateDataError(ValueError):
    """Measured data carry no usable resonance."""


class ConfigError(ValueError):
    """Configuration problem; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)

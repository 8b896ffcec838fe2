"""Exception hierarchy. CLI exit codes are keyed on these classes."""


class LevyflowError(Exception):
    """Base class for every error raised by the package."""


class DomainError(LevyflowError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(LevyflowError, ValueError):
    """A configuration document is malformed or violates an invariant."""


class SamplerFailure(LevyflowError, RuntimeError):
    """A rejection sampler exhausted its attempt budget."""


class FitError(LevyflowError, ValueError):
    """A regression or estimate cannot be formed from the supplied data."""


class RenderError(LevyflowError, ValueError):
    """A figure cannot be rendered with the requested axes."""


class RecordLookupError(LevyflowError, LookupError):
    """A requested time is not among the recorded times of an ensemble."""


class VerificationFailure(LevyflowError):
    """At least one check of the built-in oracle suite failed."""

"""Exception types shared across the package."""


class OntosimError(Exception):
    """Base class for all package-specific errors."""


class ParseError(OntosimError):
    """An input file violates its documented format."""


class DatasetGenerationError(OntosimError):
    """Dataset construction cannot proceed (e.g. negative sampling exhausted)."""


class UndefinedScoreError(OntosimError):
    """A similarity score is mathematically undefined for the given inputs."""


class EvaluationError(OntosimError):
    """A statistic cannot be computed from the given inputs."""


class ConfigError(OntosimError):
    """A run configuration is missing, malformed, or references absent paths."""

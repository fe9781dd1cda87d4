"""Exception hierarchy shared across the package."""


class CruxError(Exception):
    """Base class for all package errors."""


class SchemaError(CruxError):
    """A file or record does not match the expected schema."""


class InvariantError(CruxError):
    """A domain object violates one of its invariants."""


class TransportError(CruxError):
    """A model endpoint could not be reached (after retries)."""


class UsageError(CruxError):
    """The caller misused an interface (e.g. unbound template placeholder)."""


class ConfigError(CruxError):
    """A run configuration is inconsistent or incomplete."""


class BuildError(CruxError):
    """Dataset construction failed for an example."""


class UndefinedMetricError(CruxError):
    """The requested metric is undefined for the given inputs."""


class MissingRatingError(CruxError):
    """A context passage has no rating on record; judge it on demand first."""

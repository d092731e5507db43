class VarsnnError(Exception):
    pass


class ConfigError(VarsnnError, ValueError):
    """Bad configuration value, missing key or unknown key."""


class DomainError(VarsnnError, ValueError):
    """Argument outside the domain of a device map."""


class StateError(VarsnnError, RuntimeError):
    """Operation requested on an object in the wrong state."""


class StatisticsError(VarsnnError, ValueError):
    """Statistic undefined for the given samples."""


class TraceError(VarsnnError, RuntimeError):
    """Event tallies requested from a trial that was run without tracing."""

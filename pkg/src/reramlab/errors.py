"""Exception types shared across the package."""


class ReramLabError(Exception):
    """Base class for all package errors."""


class NumericInputError(ReramLabError, ValueError):
    """Non-finite or out-of-domain numeric input."""


class ContractError(ReramLabError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(ReramLabError, ValueError):
    """Invalid configuration (distributions, waveforms, CLI config file)."""


class TopologyError(ReramLabError, ValueError):
    """Netlist is not solvable (floating subnetwork, source loop, bad refs)."""


class MetricError(ReramLabError, ValueError):
    """An analysis metric is undefined for the given inputs."""

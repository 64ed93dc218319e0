"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, ResourceError -> 3.
Everything else is a bug or an unrecoverable state and surfaces as a
nonzero interpreter exit.
"""


class CcError(Exception):
    """Base class for all package errors."""


class ConfigError(CcError):
    """Bad user input: unknown scheme, malformed file, invalid distance."""


class ResourceError(CcError):
    """A computation would exceed its configured budget (time or memory)."""


class CodeLostError(CcError):
    """Defect handling consumed every logical qubit; no code remains."""


class LogicalLossError(CodeLostError):
    """A logical operator could not be kept off a removed qubit."""


class ScheduleError(CcError):
    """A circuit uses a qubit twice in one timestep or a non-adjacent pair."""


class VerificationError(CcError):
    """A circuit failed a determinism or semantics check."""


class DoubleNoiseError(CcError):
    """apply_noise was handed a circuit that already contains noise."""


class UnsupportedConfigError(ConfigError):
    """A defect map is not compatible with the requested scheme."""

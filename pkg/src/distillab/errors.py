"""Exception hierarchy shared across the toolkit.

The CLI maps these onto distinct exit codes; library code raises them
directly.
"""


class DistillabError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class UsageError(DistillabError):
    """Bad flags, bad policy descriptor, or inconsistent configuration."""

    exit_code = 2


class ConfigError(UsageError):
    """A structurally valid but semantically impossible configuration."""


class ParseError(DistillabError):
    """A data file that does not conform to the expected CSV schema."""

    exit_code = 3

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class InputError(DistillabError):
    """Invalid numeric input to an operation (shape, range, finiteness)."""

    exit_code = 4


class DomainError(InputError):
    """Input outside the mathematical domain of an operation."""


class RunError(DistillabError):
    """A training or experiment run failed (e.g. divergence)."""

    exit_code = 4

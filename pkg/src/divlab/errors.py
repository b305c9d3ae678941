"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto process exit codes: parameter/usage problems
exit 2, resource limits exit 3, corrupted files exit 4.
"""


class DivlabError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(DivlabError):
    """Invalid argument values or inconsistent parameter combinations."""

    exit_code = 2


class RangeError(ParameterError):
    """A value falls outside the range a table or experiment covers."""


class ResourceLimitError(DivlabError):
    """A requested computation exceeds the configured memory budget."""

    exit_code = 3


class DataCorruptionError(DivlabError):
    """A checkpoint or table file failed validation on load."""

    exit_code = 4

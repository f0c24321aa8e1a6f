"""Exception hierarchy; the CLI maps these onto process exit codes."""


class RaysurfError(Exception):
    """Base class for all library errors."""


class UsageError(RaysurfError):
    """Bad command-line arguments (exit code 1)."""


class InputFileError(RaysurfError):
    """Missing, unreadable or malformed binary input file (exit code 2)."""


class ValidationError(RaysurfError):
    """Semantically invalid data: bad indices, non-finite values,
    mismatched array lengths, capacity exceeded (exit code 3)."""


class TraversalStackOverflow(RaysurfError):
    """Tree depth exceeded the configured traversal stack (exit code 4)."""

    def __init__(self, message: str, segment_index: int | None = None):
        super().__init__(message)
        self.segment_index = segment_index

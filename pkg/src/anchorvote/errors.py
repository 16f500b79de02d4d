"""Exception hierarchy shared across the package.

Every error carries a ``kind`` used by the service layer (HTTP status) and
the CLI (exit code): ``usage`` and ``config`` map to exit code 2, anything
else to exit code 1.
"""


class AnchorVoteError(Exception):
    kind = "runtime"


class ConfigurationError(AnchorVoteError):
    """Invalid or inconsistent configuration (bad dimensions, header mismatch)."""

    kind = "config"


class UsageError(AnchorVoteError):
    """Caller misuse: missing label, empty group, malformed input file."""

    kind = "usage"


class UntrainedModelError(AnchorVoteError):
    """Prediction requested from a bank or machine with no trained anchors."""


class NumericError(AnchorVoteError):
    """Non-finite value where a finite one is required."""


class DivisionDomainError(AnchorVoteError):
    """Reciprocal of zero requested."""


class CapacityError(AnchorVoteError):
    """Counter exceeds the reciprocal table depth."""


class ProtocolError(AnchorVoteError):
    """Simulator driven outside its transaction protocol (wrong mode, idle step)."""

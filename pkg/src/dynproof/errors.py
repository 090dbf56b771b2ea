"""Exception taxonomy shared by the protocol, ledger, and simulator."""


class ProtocolError(Exception):
    """Base class for every rule violation a caller can trigger."""


class ConfigurationError(ProtocolError):
    """Invalid schedule, pool, or scenario parameter."""


class ConfigFieldError(ConfigurationError):
    """Malformed config input; carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"field '{field}': {message}")
        self.field = field


class ScheduleExhaustedError(ProtocolError):
    """Step index beyond the schedule's max_step."""


class ConflictError(ProtocolError):
    """Account already delegated, or an overlapping in-flight commitment."""


class AuthorizationError(ProtocolError):
    """Caller is not the party allowed to perform the operation."""


class UnknownAccountError(ProtocolError):
    """Account id not present in the world."""


class NotSelectedError(ProtocolError):
    """Sign-off from a node outside the sampled challenger set."""


class TooLateError(ProtocolError):
    """Action arrived after the current window deadline."""


class RoleConflictError(ProtocolError):
    """A node tried to both challenge and sign off on one commitment."""


class StateError(ProtocolError):
    """Operation not valid for the object's current status."""


class NotDueError(ProtocolError):
    """Window evaluated before its deadline."""


class BusyError(ProtocolError):
    """Undelegation attempted while commitments are in flight."""


class BondError(ProtocolError):
    """Challenge bond below the configured minimum."""


class InsufficientFundsError(ProtocolError):
    """Balance too small to escrow the requested bond."""


class EscrowError(ProtocolError):
    """Slash or release larger than the escrowed amount."""


class BundleRevertError(ProtocolError):
    """A diff in the bundle failed to apply; the whole bundle reverted."""


class InvariantViolation(Exception):
    """A protocol safety invariant broke. Not recoverable: aborts the run.

    ``trace_seq`` points at the position in the event trace where the
    violation was detected.
    """

    def __init__(self, message: str, trace_seq: int | None = None):
        if trace_seq is not None:
            message = f"{message} (trace seq {trace_seq})"
        super().__init__(message)
        self.trace_seq = trace_seq

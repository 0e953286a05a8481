"""Exception hierarchy shared across the package.

Two broad families matter to callers (and to the CLI's exit codes):

* usage problems -- bad arguments, violated preconditions
  (:class:`ValidationError` and subclasses);
* computational outcomes -- an optimisation or simulation that cannot
  deliver a result (infeasible LP, exhausted enumeration or leakage
  budget, unsupported structure).
"""


class GameboxError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GameboxError, ValueError):
    """An argument or parameter set violates a documented precondition."""


class DimensionMismatchError(ValidationError):
    """Operands have incompatible shapes or subsystem dimensions."""


class CapabilityError(GameboxError):
    """The requested instance is outside the implemented capability range."""


class BudgetExceededError(GameboxError):
    """An enumeration, memory, or leakage budget would be exceeded."""


class LPInfeasibleError(GameboxError):
    """The linear program has an empty feasible region."""


class LPUnboundedError(GameboxError):
    """The linear program's objective is unbounded over the feasible region."""


class GateViolationError(GameboxError):
    """A bound's applicability gate does not hold for the supplied parameters."""


class ProtocolViolationError(GameboxError):
    """A device interaction happened outside the allowed window."""

"""Nonlocal games, partition bounds, direct-product bounds, and
device-independent key-rate estimates."""

from . import bounds, diqkd, dpt, entropy, games, qcore
from .errors import (
    BudgetExceededError,
    CapabilityError,
    DimensionMismatchError,
    GameboxError,
    GateViolationError,
    LPInfeasibleError,
    LPUnboundedError,
    ProtocolViolationError,
    ValidationError,
)

__all__ = [
    "bounds",
    "diqkd",
    "dpt",
    "entropy",
    "games",
    "qcore",
    "GameboxError",
    "ValidationError",
    "DimensionMismatchError",
    "CapabilityError",
    "BudgetExceededError",
    "LPInfeasibleError",
    "LPUnboundedError",
    "GateViolationError",
    "ProtocolViolationError",
]

__version__ = "0.1.0"

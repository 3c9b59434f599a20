"""
Module: engine/errors.py
Description: Exception types shared by the engine and the CLI.
Author: pwnedByJT
"""


class BellSimError(Exception):
    """Base error. `code` is a short machine-readable tag used by the CLI."""
    def __init__(self, message: str, code: str = "error"):
        super().__init__(message)
        self.message = message
        self.code    = code


class ContractViolation(BellSimError, ValueError):
    """Raised on out-of-range indices, parameters or sweep configs."""
    def __init__(self, message: str):
        super().__init__(message, "contract")


class BghzTruncationError(BellSimError):
    """Raised when the truncated BGHZ evolution leaks too much norm past the cutoff."""
    def __init__(self, gamma: float, cutoff: int, leakage: float):
        super().__init__(
            f"BGHZ truncation leakage {leakage:.3e} at gamma={gamma:g}, cutoff={cutoff} "
            f"exceeds the threshold. Increase the cutoff or use a smaller gamma.",
            "bghz-leakage",
        )
        self.gamma   = gamma
        self.cutoff  = cutoff
        self.leakage = leakage

    def __reduce__(self):
        return (type(self), (self.gamma, self.cutoff, self.leakage))

"""Exception and warning types shared across the package."""


class InvalidDimensionError(ValueError):
    """Operator/state dimensions are inconsistent or below the minimum."""


class OutOfRangeError(ValueError):
    """An occupation number or index lies outside the truncated space."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class InvalidStateError(ValueError):
    """A density matrix or state vector violates its invariants."""


class UndefinedModeError(ValueError):
    """Collective mode is undefined (all couplings vanish)."""


class DegenerateAngleError(ValueError):
    """Mixing angle makes the requested analysis degenerate."""


class DomainError(ValueError):
    """Input outside the mathematical domain of a closed-form expression."""


class TruncationError(ValueError):
    """Truncated representation would drop too much probability mass."""


class OracleTooLargeError(ValueError):
    """Dense-superoperator oracle requested above its dimension cap."""


class UndefinedSteadyStateError(ValueError):
    """Steady-state formulas are undefined for the given rates."""


class ConfigError(ValueError):
    """Run configuration failed validation."""


class StiffnessError(RuntimeError):
    """Adaptive step size underflowed; carries the last good time."""

    def __init__(self, last_good_time: float, message: str | None = None):
        self.last_good_time = last_good_time
        super().__init__(
            message or f"step size underflow at t = {last_good_time:.6e} s"
        )


class IntegrationDivergedError(RuntimeError):
    """Trace drift exceeded the divergence threshold during integration."""

    def __init__(self, time: float, drift: float):
        self.time = time
        self.drift = drift
        super().__init__(
            f"trace drift {drift:.3e} exceeded 1e-4 at t = {time:.6e} s"
        )


class TruncationWarning(UserWarning):
    """Truncated tail mass is non-negligible; state was renormalized."""


class SidebandResolutionWarning(UserWarning):
    """Cavity linewidth is not small against a mechanical frequency."""

"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Config text failed to parse or a key is unknown."""


class OutOfRangeError(ConfigError):
    """A parameter value violates its allowed range."""

    def __init__(self, field, value, allowed):
        self.field = field
        self.value = value
        self.allowed = allowed
        super().__init__(f"{field}={value!r} outside allowed range {allowed}")


class NonPositiveRate(ValueError):
    """Achievable rate is <= 0 at the requested SNR; tau is set too low."""


class TauTooLow(ValueError):
    """The acceptance threshold admits channel states with non-positive rate."""


class AllPowerToComm(ValueError):
    """alpha = 1 leaves no sensing power: detection probability collapses."""


class AllPowerToSensing(ValueError):
    """alpha = 0 leaves no communication power."""


class MgfDiverges(ValueError):
    """MGF evaluated outside its convergence domain.

    `constraint` names the violated condition, `critical_theta` the largest
    admissible theta for that constraint.
    """

    def __init__(self, constraint, critical_theta):
        self.constraint = constraint
        self.critical_theta = critical_theta
        super().__init__(
            f"MGF diverges: {constraint} requires theta < {critical_theta:.6g}"
        )


class NoFeasibleAlpha(RuntimeError):
    """No power split on the search grid yields a stable, finite bound."""


class NonProgress(RuntimeError):
    """Simulated queue exploded: service rate cannot keep up with arrivals."""

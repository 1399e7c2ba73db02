"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ThinrepError(Exception):
    exit_code = 1


class ConfigError(ThinrepError, ValueError):
    exit_code = 1


class ElementaryGroupError(ConfigError):
    pass


class InsufficientDataError(ThinrepError):
    exit_code = 1


class NotReducibleError(ThinrepError, ValueError):
    exit_code = 1


class InfeasibleParametersError(ThinrepError):
    exit_code = 2

    def __init__(self, violated, message=None):
        self.violated = list(violated)
        super().__init__(message or "infeasible parameters, violated: " + ", ".join(self.violated))


class ArithmeticOverflowError(ThinrepError, OverflowError):
    exit_code = 3


class CapacityError(ThinrepError):
    exit_code = 4


class UnstablePrimeError(CapacityError):
    def __init__(self, prime, power_bound):
        self.prime = prime
        self.power_bound = power_bound
        super().__init__(
            f"admissible residues mod powers of {prime} did not stabilize by {prime}^{power_bound}"
        )


class ResolutionError(ThinrepError):
    exit_code = 1


class NumericError(ThinrepError, ArithmeticError):
    exit_code = 1

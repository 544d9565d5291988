"""Exception hierarchy shared by the library and the CLI."""


class LambertMCError(Exception):
    """Base class for every error raised by lambertmc."""


class DomainError(LambertMCError, ValueError):
    """An input lies outside the domain where a quantity is defined."""


class ConditionViolated(DomainError):
    """A decomposition's admissibility inequality does not hold.

    ``lhs`` and ``rhs`` carry both sides of the inequality ``lhs <= rhs``
    so callers can report by how much it failed.
    """

    def __init__(self, name, lhs, rhs):
        self.name = name
        self.lhs = float(lhs)
        self.rhs = float(rhs)
        super().__init__(f"{name}: requires {self.lhs:.10g} <= {self.rhs:.10g}")


class NumericalError(LambertMCError, ArithmeticError):
    """A numerical routine failed (no convergence, total underflow, ...)."""

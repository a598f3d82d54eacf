"""Exceptions raised by the dext pipeline.

Every exception keeps a human readable ``message`` so the pipeline can record
it in a report without re-formatting.
"""


class DextError(Exception):
    """Base class for every error raised by dext."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ScenarioError(DextError):
    """Invalid scenario, sweep or tolerance file (exit code 2)."""


class CoefficientError(DextError):
    """Raised when a coefficient model cannot be built or used as requested."""


class CoefficientDomainError(CoefficientError):
    """Raised when a coefficient is evaluated outside of its domain."""

    def __init__(self, x: float, domain: str):
        super().__init__(f"x={x} lies outside the coefficient domain {domain}")
        self.x = x


class JointDerivativeError(CoefficientError):
    """Raised when c' is requested at a point where the one-sided values differ."""

    def __init__(self, x: float, left: float, right: float):
        super().__init__(
            f"one-sided values differ at x={x}: c'(x-)={left}, c'(x+)={right}"
        )
        self.x = x
        self.left = left
        self.right = right


class VanishingCoefficientError(CoefficientError):
    """Raised when an integral of 1/c crosses a zero of c."""

    def __init__(self, lower: float, upper: float):
        super().__init__(
            f"coefficient vanishes inside integration range [{lower}, {upper}]"
        )
        self.lower = lower
        self.upper = upper


class IndeterminateError(DextError):
    """Raised when a numerical verdict cannot be reached; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class PositiveCapacityError(DextError):
    """Raised when a cutoff construction is requested at an accessible endpoint."""

    def __init__(self, side: str):
        super().__init__(
            f"cutoff energy does not vanish; origin has positive capacity ({side} side)"
        )
        self.side = side


class CutoffConstructionError(DextError):
    """Raised when the smooth cutoff cannot be normalised for the given n."""


class MeshError(DextError):
    """Raised for invalid mesh parameters."""


class GradingUnderflowError(MeshError):
    """Raised when geometric grading produces cells below 1e-300."""

    def __init__(self, smallest: float):
        super().__init__(f"grading underflow: smallest cell width {smallest:.3e}")
        self.smallest = smallest


class AssemblyError(DextError):
    """Raised when an operator cannot be assembled."""


class EigenSolverError(DextError):
    """Raised when the tridiagonal eigensolver does not converge."""


class ResolventPoleError(DextError):
    """Raised when gamma*W + A (or W + dt*A) is not positive definite."""

    def __init__(self, value: float):
        super().__init__(
            f"resolvent pole crossed: shifted operator not positive definite at {value}"
        )
        self.value = value


class TruncationTooSmallError(DextError):
    """Raised when mass leaves through the artificial far boundary."""

    def __init__(self, outflow: float, tolerance: float):
        super().__init__(
            f"truncation too small: far-boundary outflow {outflow:.3e} "
            f"exceeds {tolerance:.1e}"
        )
        self.outflow = outflow
        self.tolerance = tolerance


class HypothesisViolatedError(DextError):
    """Raised when the growth hypothesis at infinity fails."""

    def __init__(self, exponent: float):
        super().__init__(
            "growth hypothesis violated; lemma not applicable "
            f"(exponent {exponent} > 2)"
        )
        self.exponent = exponent


class UnrealizedExtensionError(DextError):
    """Raised when a requested extension has no discrete realization."""

from typing import Dict, List, Optional


class PlacementInfeasibleError(RuntimeError):
    """No valid agent placement exists for a target object."""

    def __init__(
        self, message: str, attempts: int, reasons: Dict[str, int]
    ):
        super().__init__(message)
        self.attempts = attempts
        self.reasons = dict(reasons)

    def __str__(self) -> str:
        reasons = ", ".join(
            f"{key}={value}" for key, value in sorted(self.reasons.items())
        )
        return f"{self.args[0]} (attempts={self.attempts}; {reasons})"


class PointingInfeasibleError(RuntimeError):
    """No elevation on the grid makes the gesture ray hit the target."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class NoCandidatesError(ValueError):
    """Grounding was requested on a scene without objects."""


class SampleParseError(ValueError):
    """A samples file line could not be parsed."""

    def __init__(
        self, message: str, line_number: int, field: Optional[str] = None
    ):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
        self.field = field


class DuplicatePredictionError(ValueError):
    """More than one prediction was given for a sample."""


class NumericError(FloatingPointError):
    """A loss became non-finite."""

    def __init__(self, message: str, trace: Optional[List[float]] = None):
        super().__init__(message)
        self.trace = [] if trace is None else list(trace)

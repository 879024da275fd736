"""Exception and warning types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can turn it
into an exit status and a JSON error report.
"""

from __future__ import annotations


class BakerHistError(Exception):
    code = "INTERNAL"

    def __init__(self, message: str, code: str | None = None, **detail):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.detail = detail

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), **self.detail}


class SpecError(BakerHistError, ValueError):
    """Invalid coarse-graining parameters (SUM_MISMATCH, RANGE, SHAPE)."""

    code = "SPEC"


class CapacityError(BakerHistError):
    code = "CAPACITY"


class FrameMismatchError(BakerHistError, ValueError):
    code = "FRAME_MISMATCH"


class NegativeProbabilityError(BakerHistError, ValueError):
    code = "NEGATIVE_PROB"


class InvariantViolation(BakerHistError):
    """A numerical invariant (mass conservation, unitarity) failed."""

    code = "INVARIANT"


class AdvisoryWarning(UserWarning):
    """Parameters outside the regime the closed forms were derived for."""


class UnsupportedRegimeWarning(AdvisoryWarning):
    pass

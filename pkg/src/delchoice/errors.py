"""Exception types with stable machine-readable codes."""
from __future__ import annotations


class DelchoiceError(Exception):
    """Base class; ``code`` is stable across releases, messages are not."""

    code = "DELCHOICE_ERROR"


class HazardAtSupportEnd(DelchoiceError):
    """Hazard rate requested where the survival function is exactly zero."""

    code = "HAZARD_AT_SUPPORT_END"


class SearchTooLarge(DelchoiceError):
    """Strategy-profile space exceeds the enumeration guard."""

    code = "SEARCH_TOO_LARGE"


class QuadratureNonconvergent(DelchoiceError):
    """Adaptive quadrature exhausted its depth before meeting tolerance."""

    code = "QUADRATURE_NONCONVERGENT"

"""Exception types shared across the toolkit."""

from __future__ import annotations


class SvescopeError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SvescopeError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class ParseError(SvescopeError, ValueError):
    """A configuration or measurement document is malformed."""


class CapacityError(SvescopeError, ValueError):
    """An event set exceeds what the PMU can schedule as one group."""


class StateError(SvescopeError, RuntimeError):
    """An ROI session method was called in a state that forbids it."""


class DataQualityError(SvescopeError, ValueError):
    """Counter values are mutually inconsistent (e.g. misses exceed accesses)."""


class UnsupportedPrecisionError(SvescopeError, RuntimeError):
    """The requested element width is not usable in this build."""


class MissingFieldError(SvescopeError, ValueError):
    """An analysis lacks a field a downstream computation requires."""

    def __init__(self, field: str, context: str = ""):
        self.field = field
        msg = f"required field {field!r} is missing"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class BackendUnavailableError(SvescopeError, RuntimeError):
    """The requested counter backend cannot be used on this host.

    ``kind`` is "permission" when access was denied (paranoid level,
    capabilities) and "capability" when the host simply cannot do it
    (no perf_event_open, unknown raw event, non-Linux OS).
    """

    def __init__(self, message: str, kind: str = "capability"):
        assert kind in ("permission", "capability")
        self.kind = kind
        super().__init__(message)

"""Exception hierarchy shared by the services and translated by the routers."""

from typing import Any, Optional, Sequence


class CoDesignError(Exception):
    """Base class for every error raised by the co-design services."""


class PosetMismatchError(CoDesignError, ValueError):
    """Two antichains or ports live on different posets."""


class DimensionMismatchError(CoDesignError, ValueError):
    """An element does not fit the shape of its carrier."""

    def __init__(self, message: str, component: Optional[Any] = None):
        super().__init__(message)
        self.component = component


class DpiError(CoDesignError):
    """A DPI could not be built or queried."""


class DiagramError(CoDesignError):
    """A co-design diagram is malformed."""

    def __init__(self, message: str, ports: Sequence[str] = ()):
        super().__init__(message)
        self.ports = tuple(ports)


class ConvergenceError(CoDesignError, RuntimeError):
    """Kleene iteration did not reach a fixed point within the budget."""

    def __init__(self, message: str, last_iterates: Sequence[Any] = ()):
        super().__init__(message)
        self.last_iterates = tuple(last_iterates)


class BruteForceLimitError(CoDesignError):
    """The implementation product is too large to enumerate."""


class LqgSystemError(CoDesignError, ValueError):
    """LQG system data violates its invariants."""


class RiccatiError(CoDesignError, RuntimeError):
    """A Riccati equation has no acceptable stabilizing solution."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class LyapunovError(CoDesignError, ValueError):
    """A Lyapunov equation was posed with a non-stable matrix."""


class CatalogError(CoDesignError, ValueError):
    """A catalog document violates its schema."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, field: Optional[str] = None):
        location = path or "<catalog>"
        if line is not None:
            location = f"{location}:{line}"
        if field:
            location = f"{location} [{field}]"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line
        self.field = field


class QueryError(CoDesignError, ValueError):
    """A query file is inconsistent with its diagram."""

"""Vector fields as callables with an optional exact directional derivative."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable


@dataclass(frozen=True)
class VectorField:
    """A smooth vector field.

    ``eval(point)`` returns the tangent at ``point``. ``dir_deriv(point,
    tangent)``, when present, returns the derivative of the field's matrix
    components along ``tangent`` (same array layout as the components).
    Callables must be reentrant; nothing is cached.
    """

    eval: Callable[[Any], Any]
    dir_deriv: Callable[[Any, Any], Any] | None = None

    def __call__(self, point):
        return self.eval(point)

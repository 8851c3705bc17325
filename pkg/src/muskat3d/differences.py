"""Finite-difference operators in an arbitrary real offset y.

Every operator returns a dense field evaluated at all grid nodes at once, so
that a quadrature over y can reuse each shifted copy of f across x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import InterfaceField, sample_shifted


@dataclass(frozen=True)
class OffsetStencil:
    """A fixed offset y together with its length."""

    y: tuple[float, float]

    def __post_init__(self):
        y = tuple(float(v) for v in np.asarray(self.y, dtype=float).reshape(2))
        if not all(np.isfinite(y)):
            raise ValueError(f"offset must be finite, got {self.y!r}")
        object.__setattr__(self, "y", y)

    @property
    def norm(self) -> float:
        return float(np.hypot(*self.y))

    @property
    def direction(self) -> np.ndarray:
        r = self.nonzero_norm()
        return np.asarray(self.y) / r

    def nonzero_norm(self) -> float:
        r = self.norm
        if r == 0.0:
            raise ValueError("offset y = 0: slope quotients divide by |y|")
        return r

    def __neg__(self) -> "OffsetStencil":
        return OffsetStencil((-self.y[0], -self.y[1]))


def _stencil(y) -> OffsetStencil:
    return y if isinstance(y, OffsetStencil) else OffsetStencil(y)


def _behind(f: InterfaceField, y: OffsetStencil, method: str) -> np.ndarray:
    """Samples of f(x - y)."""
    return sample_shifted(f, y.y, method).values


def _ahead(f: InterfaceField, y: OffsetStencil, method: str) -> np.ndarray:
    """Samples of f(x + y)."""
    return sample_shifted(f, (-y.y[0], -y.y[1]), method).values


def delta(f: InterfaceField, y, method: str = "spectral") -> InterfaceField:
    """f(x) - f(x - y)."""
    y = _stencil(y)
    return f.with_values(f.values - _behind(f, y, method))


def delta_bar(f: InterfaceField, y, method: str = "spectral") -> InterfaceField:
    """f(x) - f(x + y)."""
    y = _stencil(y)
    return f.with_values(f.values - _ahead(f, y, method))


def slope(f: InterfaceField, y, method: str = "spectral") -> InterfaceField:
    """(f(x) - f(x - y)) / |y|."""
    y = _stencil(y)
    r = y.nonzero_norm()
    return f.with_values((f.values - _behind(f, y, method)) / r)


def slope_bar(f: InterfaceField, y, method: str = "spectral") -> InterfaceField:
    """(f(x) - f(x + y)) / |y|."""
    y = _stencil(y)
    r = y.nonzero_norm()
    return f.with_values((f.values - _ahead(f, y, method)) / r)


def second_diff(f: InterfaceField, y, normalized: bool = False, method: str = "spectral") -> InterfaceField:
    """2f(x) - f(x - y) - f(x + y), divided by |y| when ``normalized``."""
    y = _stencil(y)
    v = 2.0 * f.values - _behind(f, y, method) - _ahead(f, y, method)
    if normalized:
        v = v / y.nonzero_norm()
    return f.with_values(v)


def centered_diff(f: InterfaceField, y, normalized: bool = False, method: str = "spectral") -> InterfaceField:
    """f(x + y) - f(x - y), divided by |y| when ``normalized``."""
    y = _stencil(y)
    v = _ahead(f, y, method) - _behind(f, y, method)
    if normalized:
        v = v / y.nonzero_norm()
    return f.with_values(v)


def arctan_slope_pair(f: InterfaceField, y, method: str = "spectral") -> tuple[InterfaceField, InterfaceField]:
    """(arctan D + arctan Dbar, arctan D - arctan Dbar) for the slope quotients D, Dbar."""
    a = np.arctan(slope(f, y, method).values)
    b = np.arctan(slope_bar(f, y, method).values)
    return f.with_values(a + b), f.with_values(a - b)

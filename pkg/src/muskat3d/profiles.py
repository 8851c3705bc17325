"""Built-in initial interfaces."""

from __future__ import annotations

import numpy as np

from .grid import TWO_PI, InterfaceField, grid_coordinates
from .norms import lipschitz_seminorm

PROFILES = ("zero", "single_mode", "gaussian_bump", "steep_ridge", "random_bandlimited")


def zero(n: int, period: float = TWO_PI) -> InterfaceField:
    return InterfaceField.zeros(n, period)


def single_mode(n: int, period: float = TWO_PI, amplitude: float = 1.0, mode=(1, 0)) -> InterfaceField:
    """amplitude * cos(2 pi (m1 x1 + m2 x2) / L)."""
    m1, m2 = (int(m) for m in mode)
    if 2 * max(abs(m1), abs(m2)) >= n:
        raise ValueError(f"mode {mode} is not resolved on an n={n} grid")
    x1, x2 = grid_coordinates(n, period)
    k = TWO_PI / period
    return InterfaceField(amplitude * np.cos(k * (m1 * x1 + m2 * x2)), period)


def gaussian_bump(n: int, period: float = TWO_PI, amplitude: float = 1.0, sigma: float = 0.3) -> InterfaceField:
    """Periodized Gaussian of width ``sigma`` centred in the cell."""
    if not 0 < sigma < period:
        raise ValueError(f"sigma must be in (0, L), got {sigma}")
    x1, x2 = grid_coordinates(n, period)
    c = 0.5 * period
    images = int(np.ceil(8 * sigma / period)) + 1
    v = np.zeros((n, n))
    for i in range(-images, images + 1):
        for j in range(-images, images + 1):
            d2 = (x1 - c + i * period) ** 2 + (x2 - c + j * period) ** 2
            v += np.exp(-0.5 * d2 / sigma**2)
    return InterfaceField(amplitude * v, period)


def steep_ridge(n: int, period: float = TWO_PI, k_target: float = 1.0, width: float = 0.5) -> InterfaceField:
    """Ridge a * exp((cos(2 pi x1 / L) - 1) / w^2) scaled to grid slope ``k_target``.

    Small widths give a narrow ridge; wider ridges reach the same slope with
    a smaller H^2 semi-norm.
    """
    if not k_target >= 0:
        raise ValueError(f"k_target must be non-negative, got {k_target}")
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    x1, _ = grid_coordinates(n, period)
    shape = np.exp((np.cos(TWO_PI * x1 / period) - 1.0) / width**2)
    base = InterfaceField(shape, period)
    k = lipschitz_seminorm(base)
    if k == 0:
        raise ValueError("ridge is not resolved on this grid")
    return base * (k_target / k)


def random_bandlimited(
    n: int, period: float = TWO_PI, slope: float = 1.0, kmax: int = 4, seed: int = 0
) -> InterfaceField:
    """Random smooth field with modes |k|_inf <= kmax, scaled to grid slope ``slope``."""
    if not 1 <= kmax < n // 2:
        raise ValueError(f"kmax must be in [1, n/2), got {kmax}")
    rng = np.random.default_rng(seed)
    x1, x2 = grid_coordinates(n, period)
    k0 = TWO_PI / period
    v = np.zeros((n, n))
    for m1 in range(0, kmax + 1):
        for m2 in range(-kmax, kmax + 1):
            if m1 == 0 and m2 <= 0:
                continue
            amp = rng.normal() / (m1 * m1 + m2 * m2) ** 1.5
            phase = rng.uniform(0.0, TWO_PI)
            v += amp * np.cos(k0 * (m1 * x1 + m2 * x2) + phase)
    base = InterfaceField(v, period)
    return base * (slope / lipschitz_seminorm(base))


def builtin_profile(name: str, n: int, period: float = TWO_PI, **params) -> InterfaceField:
    """Dispatch on profile name; unknown names and parameters are rejected."""
    table = {
        "zero": (zero, ()),
        "single_mode": (single_mode, ("amplitude", "mode")),
        "gaussian_bump": (gaussian_bump, ("amplitude", "sigma")),
        "steep_ridge": (steep_ridge, ("k_target", "width")),
        "random_bandlimited": (random_bandlimited, ("slope", "kmax", "seed")),
    }
    if name not in table:
        raise ValueError(f"unknown profile {name!r}; expected one of {PROFILES}")
    func, allowed = table[name]
    extra = set(params) - set(allowed)
    if extra:
        raise ValueError(f"profile {name!r} does not take parameter(s) {sorted(extra)}")
    return func(n, period, **params)

"""Periodic grid representation of a graph interface and its spectral operators.

The interface x3 = f(x1, x2) is sampled on an n x n grid covering the torus
[0, L)^2. Spectral coefficients use the normalisation c = fft2(values) / n**2,
so that f(x) = sum_k c_k exp(i xi_k . x) with xi_k = 2 pi k / L.

Nyquist modes (index -n/2 along an axis) are treated symmetrically: odd
symbols (derivatives) vanish there and off-grid shifts use cos(xi_N s) so that
shifted real fields stay real and lattice shifts stay exact.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi


class NonFiniteFieldError(ValueError):
    """Raised when a field holds NaN or Inf samples."""


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class WaveVectorTable:
    """Integer frequencies and physical wavenumbers of an n x n periodic grid."""

    n: int
    period: float
    index: np.ndarray  # integer frequency per axis position, fft ordering
    xi: np.ndarray  # physical wavenumber per axis position
    xi_odd: np.ndarray  # as xi, zero at the Nyquist index
    nyquist: np.ndarray  # boolean mask of the Nyquist index per axis

    @property
    def xi1(self) -> np.ndarray:
        return self.xi[:, None]

    @property
    def xi2(self) -> np.ndarray:
        return self.xi[None, :]

    @functools.cached_property
    def modulus(self) -> np.ndarray:
        return np.sqrt(self.xi[:, None] ** 2 + self.xi[None, :] ** 2)

    @functools.cached_property
    def modulus_sq_index(self) -> np.ndarray:
        """Integer |k|^2 per spectral position (k in mode-index units)."""
        k = self.index.astype(np.int64)
        return k[:, None] ** 2 + k[None, :] ** 2

    def multiplier(self, power: float) -> np.ndarray:
        """|xi|^power with the zero mode set to 0."""
        mod = self.modulus
        out = np.zeros_like(mod)
        nz = mod > 0
        out[nz] = mod[nz] ** power
        return out

    def shift_phase_1d(self, s: float | np.ndarray) -> np.ndarray:
        """Per-axis factor exp(-i xi s), cos(xi s) at Nyquist.

        ``s`` may be an array of shifts; the result then has shape
        (len(s), n).
        """
        s = np.asarray(s, dtype=float)
        arg = np.multiply.outer(s, self.xi)
        ph = np.exp(-1j * arg)
        if self.nyquist.any():
            ph[..., self.nyquist] = np.cos(arg[..., self.nyquist])
        return ph

    def point_basis_1d(self, p: np.ndarray) -> np.ndarray:
        """exp(i xi p) per point and axis index (cos at Nyquist), shape (P, n)."""
        arg = np.multiply.outer(np.asarray(p, dtype=float), self.xi)
        b = np.exp(1j * arg)
        if self.nyquist.any():
            b[..., self.nyquist] = np.cos(arg[..., self.nyquist])
        return b


@functools.lru_cache(maxsize=32)
def wave_vectors(n: int, period: float = TWO_PI) -> WaveVectorTable:
    index = np.rint(sfft.fftfreq(n) * n).astype(np.int64)
    xi = TWO_PI * index / period
    nyq = np.zeros(n, dtype=bool)
    if n % 2 == 0:
        nyq[n // 2] = True
    xi_odd = np.where(nyq, 0.0, xi)
    for a in (index, xi, xi_odd, nyq):
        a.setflags(write=False)
    return WaveVectorTable(n, float(period), index, xi, xi_odd, nyq)


@dataclass(eq=False)
class InterfaceField:
    """Samples of the interface height on a periodic square grid.

    ``values[i, j]`` is the height at ``x = (i * h, j * h)`` with ``h = L / n``.
    The array is made read-only so the cached spectral coefficients stay
    consistent with it.
    """

    values: np.ndarray
    period: float = TWO_PI
    _spectral: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"field must be a square 2D array, got shape {v.shape}")
        if not _is_power_of_two(v.shape[0]):
            raise ValueError(f"grid size n={v.shape[0]} is not a power of two")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        bad = ~np.isfinite(v)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise NonFiniteFieldError(
                f"non-finite value {v[i, j]!r} at node ({i}, {j}); "
                f"{int(bad.sum())} bad node(s) in total"
            )
        v.setflags(write=False)
        self.values = v
        self.period = float(self.period)

    @classmethod
    def zeros(cls, n: int, period: float = TWO_PI) -> "InterfaceField":
        return cls(np.zeros((n, n)), period)

    @classmethod
    def from_function(cls, func, n: int, period: float = TWO_PI) -> "InterfaceField":
        x1, x2 = grid_coordinates(n, period)
        return cls(func(x1, x2), period)

    @classmethod
    def from_spectral(cls, coeffs: np.ndarray, period: float = TWO_PI) -> "InterfaceField":
        return from_spectral(coeffs, period)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def waves(self) -> WaveVectorTable:
        return wave_vectors(self.n, self.period)

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            c = sfft.fft2(self.values) / self.n**2
            c.setflags(write=False)
            self._spectral = c
        return self._spectral

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def with_values(self, values: np.ndarray) -> "InterfaceField":
        return InterfaceField(values, self.period)

    def __add__(self, other):
        if isinstance(other, InterfaceField):
            _check_compatible(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, InterfaceField):
            _check_compatible(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def _check_compatible(a: InterfaceField, b: InterfaceField):
    if a.n != b.n or a.period != b.period:
        raise ValueError("fields live on different grids")


def grid_coordinates(n: int, period: float = TWO_PI) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(n) * (period / n)
    return np.meshgrid(x, x, indexing="ij")


def to_spectral(f: InterfaceField) -> np.ndarray:
    """Fourier coefficients c with f = sum c_k exp(i xi_k . x)."""
    return f.spectral.copy()


def from_spectral(coeffs: np.ndarray, period: float = TWO_PI) -> InterfaceField:
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[0]
    vals = sfft.ifft2(coeffs * n**2)
    return InterfaceField(vals.real, period)


def _apply_multiplier(f: InterfaceField, mult: np.ndarray) -> np.ndarray:
    return sfft.ifft2(f.spectral * mult).real * f.n**2


def fractional_laplacian(f: InterfaceField, s: float) -> InterfaceField:
    """(-Delta)^s f, i.e. the multiplier |xi|^(2s); Lambda is s = 1/2."""
    if not -1.0 <= s <= 3.0:
        raise ValueError(f"order s={s} outside the supported range [-1, 3]")
    if s < 0:
        scale = max(1.0, float(np.abs(f.values).max()))
        if abs(f.mean) > 1e-12 * scale:
            raise ValueError(
                f"negative order s={s} needs a zero-mean field (mean={f.mean:.3e}); "
                "the inverse is undefined on constants"
            )
    return f.with_values(_apply_multiplier(f, f.waves.multiplier(2.0 * s)))


def laplacian(f: InterfaceField) -> InterfaceField:
    return f.with_values(-_apply_multiplier(f, f.waves.modulus**2))


def gradient(f: InterfaceField) -> tuple[InterfaceField, InterfaceField]:
    w = f.waves
    c = f.spectral * f.n**2
    fx = sfft.ifft2(c * (1j * w.xi_odd[:, None])).real
    fy = sfft.ifft2(c * (1j * w.xi_odd[None, :])).real
    return f.with_values(fx), f.with_values(fy)


def hessian(f: InterfaceField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second derivatives (f_11, f_12, f_22) as plain arrays."""
    w = f.waves
    c = f.spectral * f.n**2
    k1 = w.xi[:, None]
    k2 = w.xi[None, :]
    f11 = sfft.ifft2(c * (-(k1**2))).real
    f22 = sfft.ifft2(c * (-(k2**2))).real
    f12 = sfft.ifft2(c * (-(w.xi_odd[:, None] * w.xi_odd[None, :]))).real
    return f11, f12, f22


def shift_phase(f: InterfaceField, shift) -> np.ndarray:
    w = f.waves
    s = np.asarray(shift, dtype=float)
    return w.shift_phase_1d(s[0])[:, None] * w.shift_phase_1d(s[1])[None, :]


def sample_shifted(f: InterfaceField, shift, method: str = "spectral") -> InterfaceField:
    """Field x -> f(x - shift) on the same grid.

    ``spectral`` uses exact trigonometric interpolation; ``bilinear`` is the
    cheap alternative kept for speed comparisons.
    """
    s = np.asarray(shift, dtype=float)
    if s.shape != (2,) or not np.all(np.isfinite(s)):
        raise ValueError(f"shift must be a finite 2-vector, got {shift!r}")
    if method == "spectral":
        return f.with_values(_apply_multiplier(f, shift_phase(f, s)))
    if method == "bilinear":
        return f.with_values(_bilinear_shift(f.values, s / f.spacing))
    raise ValueError(f"unknown interpolation method {method!r}")


def _bilinear_shift(v: np.ndarray, cells: np.ndarray) -> np.ndarray:
    out = v
    for axis, c in enumerate(cells):
        whole = np.floor(c)
        frac = c - whole
        lo = np.roll(out, int(whole), axis=axis)
        if frac == 0.0:
            out = lo
        else:
            hi = np.roll(out, int(whole) + 1, axis=axis)
            out = (1.0 - frac) * lo + frac * hi
    return out


def evaluate_points(f: InterfaceField, points, derivative: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Trigonometric interpolant of f (or a partial derivative) at arbitrary points.

    ``points`` has shape (P, 2). Cost is O(P n^2) via two dense products.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    w = f.waves
    c = f.spectral
    a, b = derivative
    if a:
        c = c * ((1j * w.xi_odd[:, None]) ** a)
    if b:
        c = c * ((1j * w.xi_odd[None, :]) ** b)
    e1 = w.point_basis_1d(p[:, 0])
    e2 = w.point_basis_1d(p[:, 1])
    return np.einsum("pk,pk->p", e1 @ c, e2).real


def evaluate_gradient_points(f: InterfaceField, points) -> np.ndarray:
    """(P, 2) array of the interpolated gradient at ``points``."""
    return np.stack(
        [evaluate_points(f, points, (1, 0)), evaluate_points(f, points, (0, 1))], axis=-1
    )


def upsample(f: InterfaceField, factor: int) -> InterfaceField:
    """Spectral zero-padding onto a grid ``factor`` times finer."""
    n, m = f.n, f.n * factor
    w = f.waves
    pad = np.zeros((m, n))
    pad[w.index % m, np.arange(n)] = 1.0
    if w.nyquist.any():
        # split the Nyquist coefficient evenly between +n/2 and -n/2
        j = int(np.flatnonzero(w.nyquist)[0])
        pad[:, j] = 0.0
        pad[(n // 2) % m, j] = 0.5
        pad[(-n // 2) % m, j] = 0.5
    c = pad @ f.spectral @ pad.T
    return InterfaceField(sfft.ifft2(c * m**2).real, f.period)

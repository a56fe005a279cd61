"""Periodic grid, Fourier transforms and the exact linear propagator.

Fields are stored as arrays whose leading axis runs over the ``n_x`` grid
points of ``[-L/2, L/2)``; any trailing axes (matrix blocks) are carried
along untouched.  All transforms act on axis 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridConfig:
    """Uniform periodic grid on ``[-L/2, L/2)`` plus quadrature resolution.

    ``n_quad`` is the number of left-endpoint quadrature nodes on
    ``[-L/2, 0]``; ``n_quad = n_x // 2`` makes every Hankel argument land
    on the x-grid.
    """

    L: float = 40.0
    n_x: int = 256
    n_quad: int | None = None
    d1: int = 1
    d2: int = 1

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.n_x < 4 or not _is_power_of_two(self.n_x):
            raise ValueError(f"n_x must be a power of two >= 4, got {self.n_x}")
        if self.n_quad is None:
            object.__setattr__(self, "n_quad", self.n_x // 2)
        if self.n_quad < 2:
            raise ValueError(f"n_quad must be >= 2, got {self.n_quad}")
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError(f"block dimensions must be >= 1, got ({self.d1}, {self.d2})")

    @property
    def dx(self) -> float:
        return self.L / self.n_x

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.n_x)

    @property
    def h(self) -> float:
        """Quadrature spacing on ``[-L/2, 0]``."""
        return 0.5 * self.L / self.n_quad

    def refined(self, factor: int = 2) -> "GridConfig":
        """Same domain with ``n_x`` and ``n_quad`` both multiplied by ``factor``."""
        return GridConfig(self.L, self.n_x * factor, self.n_quad * factor, self.d1, self.d2)


@dataclass(frozen=True)
class DispersionCoefficients:
    """Coefficients of ``d(D) = mu2 D^2 + mu3 D^3 + mu4 D^4``."""

    mu2: complex = -1j
    mu3: complex = 1.0
    mu4: complex = 1j

    def __post_init__(self):
        for name in ("mu2", "mu3", "mu4"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    @property
    def tilde(self) -> "DispersionCoefficients":
        """Companion coefficients ``(-1)**(j-1) * mu_j``."""
        return DispersionCoefficients(-self.mu2, self.mu3, -self.mu4)

    def symbol(self, ik: np.ndarray) -> np.ndarray:
        """Evaluate ``d`` at the Fourier multipliers ``ik``."""
        return self.mu2 * ik**2 + self.mu3 * ik**3 + self.mu4 * ik**4


def check_dispersion_property(c: DispersionCoefficients) -> bool:
    """True iff ``conj(d(i k)) == -d(i k)`` for every real ``k``.

    Checked on the coefficients: ``mu2`` and ``mu4`` purely imaginary,
    ``mu3`` real.
    """
    return c.mu2.real == 0.0 and c.mu3.imag == 0.0 and c.mu4.real == 0.0


def wavenumbers(grid: GridConfig) -> np.ndarray:
    """Real wavenumbers ``2 pi k / L`` in FFT order."""
    return 2.0 * np.pi * np.fft.fftfreq(grid.n_x, d=grid.dx)


def fourier_multipliers(grid: GridConfig) -> np.ndarray:
    """Multipliers ``2 pi i k / L`` realising ``d/dx`` in FFT order."""
    return 1j * wavenumbers(grid)


def forward(f: np.ndarray) -> np.ndarray:
    return np.fft.fft(f, axis=0)


def inverse(f_hat: np.ndarray) -> np.ndarray:
    return np.fft.ifft(f_hat, axis=0)


def _along_axis0(mult: np.ndarray, ndim: int) -> np.ndarray:
    return mult.reshape(mult.shape + (1,) * (ndim - 1))


def propagator_multipliers(c: DispersionCoefficients, t: float, ik: np.ndarray) -> np.ndarray:
    """Per-mode factors ``exp(t d(ik))``; ``t`` may be negative."""
    return np.exp(t * c.symbol(ik))


def propagate(f: np.ndarray, t: float, c: DispersionCoefficients, grid: GridConfig) -> np.ndarray:
    """Solve ``f_t = d(D) f`` exactly from ``f`` for a time ``t`` in one step."""
    f = np.asarray(f, dtype=complex)
    if t == 0.0:
        return f.copy()
    mult = propagator_multipliers(c, t, fourier_multipliers(grid))
    return inverse(_along_axis0(mult, f.ndim) * forward(f))


def spectral_derivative(f: np.ndarray, order: int, grid: GridConfig) -> np.ndarray:
    """``order``-th x-derivative (1..4) by multiplication with ``(ik)**order``.

    The Nyquist mode is kept, so derivatives compose exactly with each other
    and with the propagator.
    """
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    f = np.asarray(f, dtype=complex)
    mult = fourier_multipliers(grid) ** order
    return inverse(_along_axis0(mult, f.ndim) * forward(f))


@dataclass(frozen=True, eq=False)
class ScatteringField:
    """Matrix-valued scattering data ``p(x, t)`` sampled on the x-grid.

    ``samples`` has shape ``(n_x, rows, cols)``.
    """

    samples: np.ndarray
    time: float
    grid: GridConfig

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)  # own copy; frozen below
        if s.ndim == 1:
            s = s[:, None, None]
        if s.ndim != 3 or s.shape[0] != self.grid.n_x:
            raise ValueError(
                f"samples must have shape (n_x={self.grid.n_x}, rows, cols), got {s.shape}"
            )
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "time", float(self.time))

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.samples.shape[1], self.samples.shape[2]

    @property
    def scalar(self) -> np.ndarray:
        """The (0, 0) entry of every block."""
        return self.samples[:, 0, 0]

    def fourier(self) -> np.ndarray:
        return forward(self.samples)

    def with_samples(self, samples: np.ndarray, time: float | None = None) -> "ScatteringField":
        return ScatteringField(samples, self.time if time is None else time, self.grid)


def evolve_scattering(p0: ScatteringField, t: float, c: DispersionCoefficients) -> ScatteringField:
    """Advance ``p0`` by a time ``t`` with the exact Fourier propagator.

    Block entries evolve independently.  The returned field carries time
    ``p0.time + t``.
    """
    return p0.with_samples(propagate(p0.samples, t, c, p0.grid), p0.time + t)


def dealias_mask(n_x: int) -> np.ndarray:
    """Boolean 2/3-rule mask in FFT order."""
    k = np.abs(np.fft.fftfreq(n_x) * n_x)
    return k < n_x / 3.0

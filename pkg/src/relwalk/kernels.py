"""Shared numerical kernels: 1D grids, quadrature, DFT pair, tridiagonal solve.

Conventions used throughout the package:

* grids are uniform and store both endpoints explicitly,
* the forward transform is F_hat(K) = (2*pi)**-0.5 * integral F(X) exp(+i K X) dX,
  discretised on a periodic sample set, so the inverse carries exp(-i K X),
* reductions use numpy's pairwise summation, which is deterministic and
  independent of any worker-pool layout chosen higher up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSystemError

__all__ = [
    "Grid1D",
    "quad",
    "cumquad",
    "wavenumbers",
    "dft_forward",
    "dft_inverse",
    "tridiag_solve",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid with inclusive endpoints.

    count >= 3 and upper > lower; spacing is derived, never stored.
    For periodic use the convention is that ``upper`` is the last sample,
    one spacing short of the wrap point, so the period is count * spacing.
    """

    lower: float
    upper: float
    count: int

    def __post_init__(self):
        if self.count < 3:
            raise ValueError(f"grid needs at least 3 points, got {self.count}")
        if not self.upper > self.lower:
            raise ValueError("grid upper bound must exceed lower bound")

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / (self.count - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.count)

    @property
    def period(self) -> float:
        # wrap length when the grid is read as one period of a periodic set
        return self.count * self.spacing

    @classmethod
    def symmetric(cls, half_width: float, count: int) -> "Grid1D":
        """Grid on [-half_width, half_width] inclusive."""
        return cls(-half_width, half_width, count)

    @classmethod
    def periodic(cls, length: float, count: int, center: float = 0.0) -> "Grid1D":
        """count samples of one period of length ``length`` centred on ``center``.

        The last sample sits one spacing below center + length/2 so that the
        sample set tiles the line without duplication.
        """
        step = length / count
        lower = center - length / 2.0
        return cls(lower, lower + (count - 1) * step, count)


def _check_length(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[-1] != grid.count:
        raise ValueError(
            f"data length {values.shape[-1]} does not match grid count {grid.count}"
        )
    return values


def quad(values, grid: Grid1D):
    """Integrate sampled data over the grid.

    Composite Simpson when the point count is odd, trapezoid otherwise.
    Works on the last axis, so stacked integrands are fine.
    """
    values = _check_length(values, grid)
    h = grid.spacing
    n = grid.count
    if n % 2 == 1:
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= h / 3.0
    else:
        w = np.full(n, h)
        w[0] = w[-1] = h / 2.0
    return np.sum(values * w, axis=-1)


def cumquad(values, grid: Grid1D, from_lower: bool = True) -> np.ndarray:
    """Cumulative trapezoid integral along the grid.

    from_lower=True:  out[i] = integral from grid.lower to x_i, out[0] = 0.
    from_lower=False: out[i] = integral from x_i to grid.upper, out[-1] = 0.
    """
    values = _check_length(values, grid)
    h = grid.spacing
    panels = 0.5 * h * (values[..., 1:] + values[..., :-1])
    out = np.zeros_like(values, dtype=panels.dtype)
    if from_lower:
        np.cumsum(panels, axis=-1, out=out[..., 1:])
    else:
        out[..., :-1] = np.cumsum(panels[..., ::-1], axis=-1)[..., ::-1]
    return out


def wavenumbers(x_grid: Grid1D) -> np.ndarray:
    """Conjugate wavenumbers K_j = 2*pi*j/L in FFT order, L = count * spacing."""
    return 2.0 * np.pi * np.fft.fftfreq(x_grid.count, d=x_grid.spacing)


def dft_forward(values, x_grid: Grid1D) -> np.ndarray:
    """Modes F_hat(K_j) = (2*pi)**-0.5 * sum F(X_m) exp(+i K_j X_m) dX, FFT order."""
    values = _check_length(values, x_grid)
    m = x_grid.count
    k = wavenumbers(x_grid)
    raw = np.fft.ifft(values, axis=-1) * m  # sum with exp(+2*pi*i*j*m/M) kernel
    scale = x_grid.spacing / np.sqrt(2.0 * np.pi)
    return raw * (scale * np.exp(1j * k * x_grid.lower))


def dft_inverse(modes, x_grid: Grid1D) -> np.ndarray:
    """Inverse of :func:`dft_forward`; exact round trip to rounding error."""
    modes = np.asarray(modes)
    if modes.shape[-1] != x_grid.count:
        raise ValueError(
            f"mode count {modes.shape[-1]} does not match grid count {x_grid.count}"
        )
    k = wavenumbers(x_grid)
    twisted = modes * np.exp(-1j * k * x_grid.lower)
    scale = np.sqrt(2.0 * np.pi) / x_grid.period
    return scale * np.fft.fft(twisted, axis=-1)


def tridiag_solve(sub, diag, sup, rhs) -> np.ndarray:
    """Solve a tridiagonal system A x = rhs.

    sub and sup have length n-1; rhs may be (n,) or (n, k) for many
    right-hand sides sharing one matrix. Raises SingularSystemError when
    the factorisation breaks down.
    """
    diag = np.asarray(diag)
    sub = np.asarray(sub)
    sup = np.asarray(sup)
    rhs = np.asarray(rhs)
    n = diag.shape[0]
    if sub.shape[0] != n - 1 or sup.shape[0] != n - 1:
        raise ValueError("off-diagonals must have length n - 1")
    if rhs.shape[0] != n:
        raise ValueError("right-hand side length does not match the matrix")
    dtype = np.result_type(diag, sub, sup, rhs, float)
    ab = np.zeros((3, n), dtype=dtype)
    ab[0, 1:] = sup
    ab[1, :] = diag
    ab[2, :-1] = sub
    try:
        return scipy.linalg.solve_banded(
            (1, 1), ab, rhs, overwrite_ab=True, check_finite=False
        )
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc

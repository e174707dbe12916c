"""Relativistic Ornstein-Uhlenbeck kinetics in mixed Fourier space.

The phase-space density F(T, X, P) obeys

    dF/dT + v(P) dF/dX = d/dP ( v(P) F ) + d^2F/dP^2,     v(P) = P / Gamma_Q(P)

with Gamma_Q(P) = sqrt(1 + (P/Q)^2), in the fluid frame units where the
friction time and the thermal momentum spread are one. The single parameter
Q is the ratio of the rest-mass energy scale to the temperature; Q -> inf
recovers the Galilean Ornstein-Uhlenbeck process, while finite Q confines
all signal speeds below one.

Spatial Fourier transform turns the X derivative into a multiplication, so
each wavenumber K evolves independently:

    dFhat/dT = -i K v(P) Fhat + L Fhat

where L is the momentum-space collision operator. This module discretizes
L with exponentially fitted finite-volume fluxes (drift and diffusion in
one flux, potential increments taken exactly), which makes the sampled
Juttner equilibrium the exact kernel of the discrete operator and keeps
the trapezoid mass of every mode constant to rounding. Time stepping is
Strang: exact half phases around a Crank-Nicolson collision step, one real
tridiagonal shared by all modes.

Initial data throughout is a spatial delta times the Juttner equilibrium,
so the reconstructed density is the transition-density profile whose front
and metric the companion module :mod:`relwalk.fick` analyzes.
"""

from __future__ import annotations

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import kve

from . import _io
from .errors import StepSizeError, SymmetryError, TailTruncationError
from .kernels import Grid1D, dft_inverse, quad, tridiag_solve, wavenumbers

__all__ = [
    "DensityProfile",
    "KineticState",
    "RoupParams",
    "apply_collision",
    "continuity_residual",
    "default_dt",
    "evolve_all",
    "evolve_mode",
    "gamma_factor",
    "initial_state",
    "juttner",
    "juttner_normalization",
    "peak_location",
    "reconstruct_density",
    "rescaled_profile",
    "symmetry_residual",
    "velocity",
    "write_profile_csv",
]

# exp(-tail) at the momentum cutoff; 27.63 keeps the discarded weight
# below 1e-12 of the equilibrium mass
_MIN_TAIL = 27.63


def gamma_factor(p, Q: float):
    p = np.asarray(p, dtype=float)
    return np.sqrt(1.0 + (p / Q) ** 2)


def velocity(p, Q: float):
    """Signal speed v = P / Gamma_Q(P), strictly inside (-1, 1)."""
    p = np.asarray(p, dtype=float)
    return p / gamma_factor(p, Q)


def juttner_normalization(Q: float) -> float:
    """A with integral of A*exp(-Q^2 (Gamma_Q - 1)) over P equal to one.

    The closed form uses the modified Bessel function: the unshifted
    integral of exp(-Q^2 Gamma_Q) is 2 Q K1(Q^2). The exponentially
    scaled kve keeps this finite for large Q.
    """
    return 1.0 / (2.0 * Q * kve(1, Q * Q))


def juttner(p, Q: float):
    """Normalized relativistic equilibrium density in P."""
    p = np.asarray(p, dtype=float)
    return juttner_normalization(Q) * np.exp(-Q * Q * (gamma_factor(p, Q) - 1.0))


def _tail_exponent(p_max: float, Q: float) -> float:
    return Q * Q * (gamma_factor(p_max, Q) - 1.0)


@dataclass(frozen=True)
class RoupParams:
    """Grids and physics for one kinetic run.

    Momentum lives on a symmetric endpoint grid, space on a periodic ring
    of the given length centered at the source. n_p must be even so the
    trapezoid weights coincide with the finite-volume cell volumes, which
    is what makes mass conservation exact in the reconstruction.
    """

    Q: float
    p_max: float
    n_p: int = 2048
    length: float = 1.0
    n_x: int = 512

    def __post_init__(self):
        if self.Q <= 0.0:
            raise ValueError("Q must be positive")
        if self.n_p % 2 != 0 or self.n_p < 8:
            raise ValueError("n_p must be even and at least 8")
        if self.n_x % 2 != 0 or self.n_x < 8:
            raise ValueError("n_x must be even and at least 8")
        tail = _tail_exponent(self.p_max, self.Q)
        if tail < _MIN_TAIL:
            raise TailTruncationError(
                f"momentum cutoff keeps only exp(-{tail:.2f}) tails; "
                f"need the equilibrium exponent at p_max above {_MIN_TAIL}"
            )

    @classmethod
    def standard(cls, Q: float, t_final: float, n_x: int = 512, n_p: int = 2048,
                 length: float | None = None, tail: float = 32.0) -> "RoupParams":
        """Cutoff from a target tail exponent, ring from the causal cone.

        length defaults to three times the light-cone radius Q... the
        maximal signal distance is t_final (speeds below one), and the
        bulk of the density stays within |X| < Q*t_final per the front
        analysis, so 3*Q*t_final leaves an empty buffer around the cone
        for Q >= 1 ring periodicity not to self-interact.
        """
        if t_final <= 0.0:
            raise ValueError("t_final must be positive")
        p_max = Q * np.sqrt((1.0 + tail / (Q * Q)) ** 2 - 1.0)
        if length is None:
            length = 3.0 * max(Q, 1.0) * t_final
        return cls(Q=Q, p_max=p_max, n_p=n_p, length=length, n_x=n_x)

    @property
    def p_grid(self) -> Grid1D:
        return Grid1D.symmetric(self.p_max, self.n_p)

    @property
    def x_grid(self) -> Grid1D:
        return Grid1D.periodic(self.length, self.n_x)

    @property
    def n_modes(self) -> int:
        return self.n_x // 2 + 1

    @property
    def mode_wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_modes) / self.length


def _sinhc_inv(y: np.ndarray) -> np.ndarray:
    # y / sinh(y), series below 1e-6 where cancellation would bite
    out = np.empty_like(y)
    small = np.abs(y) < 1e-6
    ys = y[small]
    out[small] = 1.0 - ys * ys / 6.0
    yb = y[~small]
    out[~small] = yb / np.sinh(yb)
    return out


@functools.lru_cache(maxsize=16)
def _collision_bands(p_grid: Grid1D, Q: float):
    """Tridiagonal bands (lower, diag, upper) of the discrete collision operator.

    Fluxes between neighbouring nodes are exponentially fitted to the
    potential U = Q^2 Gamma_Q whose gradient is the drift speed, using the
    exact potential increment across each face. Boundary cells are half
    volumes with zero outer flux, so the vol-weighted sum of the output is
    exactly zero and samples of exp(-U) are exactly stationary.
    """
    p = p_grid.points
    dp = p_grid.spacing
    n = p_grid.count
    u = Q * Q * (gamma_factor(p, Q) - 1.0)
    w = np.diff(u)
    s = _sinhc_inv(w / 2.0)
    alpha = s * np.exp(w / 2.0) / dp  # flux weight on the upper node
    beta = s * np.exp(-w / 2.0) / dp  # flux weight on the lower node
    vol = np.full(n, dp)
    vol[0] = vol[-1] = dp / 2.0

    lower = np.empty(n - 1)
    diag = np.empty(n)
    upper = np.empty(n - 1)
    lower[:] = beta / vol[1:]
    upper[:] = alpha / vol[:-1]
    diag[0] = -beta[0] / vol[0]
    diag[-1] = -alpha[-1] / vol[-1]
    diag[1:-1] = -(beta[1:] + alpha[:-1]) / vol[1:-1]
    for arr in (lower, diag, upper):
        arr.setflags(write=False)
    return lower, diag, upper


def apply_collision(values: np.ndarray, p_grid: Grid1D, Q: float) -> np.ndarray:
    """L acting on samples over p_grid; batched over leading axes of values."""
    lower, diag, upper = _collision_bands(p_grid, Q)
    values = np.asarray(values)
    if values.shape[-1] != p_grid.count:
        raise ValueError("last axis must match the momentum grid")
    moved = np.moveaxis(values, -1, 0)
    out = diag.reshape(-1, *([1] * (moved.ndim - 1))) * moved
    out[1:] += lower.reshape(-1, *([1] * (moved.ndim - 1))) * moved[:-1]
    out[:-1] += upper.reshape(-1, *([1] * (moved.ndim - 1))) * moved[1:]
    return np.moveaxis(out, 0, -1)


def default_dt(t_final: float, n_steps: int = 2000) -> float:
    return t_final / n_steps


def _evolve_block(F, Ks, p_grid, Q, dt, n_steps, snap_steps, out, out_offset):
    """March F (n_p, k) over n_steps, writing snapshots into out (len(snap), n_p, k).

    Strang: exact half phase, Crank-Nicolson collision shared by every
    column, exact half phase. Columns never mix, so any contiguous block
    of modes computes bit-identical results regardless of partitioning.
    """
    # the inverse transform kernel is exp(-iKX), so d/dX acts as -iK on the
    # modes and the streaming phase rotates the opposite way
    v = velocity(p_grid.points, Q)
    phase = np.exp(0.5j * dt * np.outer(v, Ks))
    lower, diag, upper = _collision_bands(p_grid, Q)
    a = 0.5 * dt
    mp = (a * lower, 1.0 + a * diag, a * upper)  # multiply side
    mm = (-a * lower, 1.0 - a * diag, -a * upper)  # solve side
    snap_lookup = {s: i for i, s in enumerate(snap_steps)}
    if 0 in snap_lookup:
        out[snap_lookup[0]][:, out_offset:out_offset + F.shape[1]] = F
    for step in range(1, n_steps + 1):
        F = phase * F
        rhs = mp[1][:, None] * F
        rhs[1:] += mp[0][:, None] * F[:-1]
        rhs[:-1] += mp[2][:, None] * F[1:]
        F = tridiag_solve(mm[0], mm[1], mm[2], rhs)
        F *= phase
        if step in snap_lookup:
            out[snap_lookup[step]][:, out_offset:out_offset + F.shape[1]] = F
    return F


def _doubling_error(F, Ks, p_grid, Q, dt):
    """Relative first-step error from step doubling, maximized over modes."""
    shape = (1, F.shape[0], F.shape[1])
    coarse = np.empty(shape, dtype=complex)
    fine = np.empty(shape, dtype=complex)
    _evolve_block(F.copy(), Ks, p_grid, Q, dt, 1, [1], coarse, 0)
    _evolve_block(F.copy(), Ks, p_grid, Q, dt / 2.0, 2, [2], fine, 0)
    num = np.linalg.norm(coarse[0] - fine[0], axis=0)
    den = np.linalg.norm(F, axis=0)
    den = np.where(den > 0.0, den, 1.0)
    return float(np.max(num / den))


@dataclass
class KineticState:
    """Fourier modes F̂(K_j, P) at one time; rows follow mode_wavenumbers."""

    params: RoupParams
    time: float
    modes: np.ndarray  # (n_modes, n_p) complex


def initial_state(params: RoupParams) -> KineticState:
    """Spatial delta at the origin times the Juttner equilibrium.

    The delta is band limited strictly below the ring's Nyquist bin. That
    bin can hold an even wave but not its odd flux partner (sin(K X) is
    zero on the lattice), so populating it would break the continuity
    pairing by construction; leaving it empty costs one part in n_x of
    the comb height and keeps every stored mode physical.
    """
    f_eq = juttner(params.p_grid.points, params.Q)
    modes = np.tile(f_eq / np.sqrt(2.0 * np.pi), (params.n_modes, 1)).astype(complex)
    modes[-1] = 0.0
    return KineticState(params, 0.0, modes)


def evolve_mode(f0: np.ndarray, K: float, p_grid: Grid1D, Q: float,
                t_final: float, dt: float, guard_tol: float = 0.05) -> np.ndarray:
    """Single-wavenumber evolution; raises StepSizeError when dt is too coarse."""
    n_steps = _count_steps(t_final, dt)
    F = np.asarray(f0, dtype=complex).reshape(-1, 1).copy()
    Ks = np.array([K], dtype=float)
    err = _doubling_error(F, Ks, p_grid, Q, dt)
    if err > guard_tol:
        raise StepSizeError(
            f"first-step doubling error {err:.3e} exceeds {guard_tol};"
            " reduce dt"
        )
    out = np.empty((1, p_grid.count, 1), dtype=complex)
    _evolve_block(F, Ks, p_grid, Q, dt, n_steps, [n_steps], out, 0)
    return out[0][:, 0]


def _count_steps(t_final: float, dt: float) -> int:
    if dt <= 0.0 or t_final < 0.0:
        raise ValueError("need dt > 0 and t_final >= 0")
    n = t_final / dt
    if abs(n - round(n)) > 1e-6:
        raise ValueError(f"t_final = {t_final} is not an integer multiple of dt = {dt}")
    return int(round(n))


def evolve_all(params: RoupParams, t_final: float, dt: float | None = None,
               output_times=None, threads: int = 1,
               initial: KineticState | None = None,
               guard_tol: float = 0.05) -> list[KineticState]:
    """Evolve every stored wavenumber, returning one state per output time.

    output_times must be integer multiples of dt (default: t_final only).
    threads > 1 splits the mode columns into contiguous blocks; results
    are identical for any thread count.
    """
    if dt is None:
        dt = default_dt(t_final)
    n_steps = _count_steps(t_final, dt)
    if output_times is None:
        output_times = [t_final]
    output_times = sorted(float(t) for t in output_times)
    snap_steps = []
    for t in output_times:
        s = _count_steps(t, dt)
        if s > n_steps:
            raise ValueError(f"output time {t} lies beyond t_final = {t_final}")
        snap_steps.append(s)
    if len(set(snap_steps)) != len(snap_steps):
        raise ValueError("output times collide on the step grid")

    state0 = initial if initial is not None else initial_state(params)
    if state0.params != params:
        raise ValueError("initial state was built for different parameters")
    t0 = state0.time
    F = np.ascontiguousarray(state0.modes.T, dtype=complex)  # (n_p, n_modes)
    Ks = params.mode_wavenumbers
    p_grid = params.p_grid

    err = _doubling_error(F, Ks, p_grid, params.Q, dt)
    if err > guard_tol:
        raise StepSizeError(
            f"first-step doubling error {err:.3e} exceeds {guard_tol}; reduce dt"
        )

    out = np.empty((len(snap_steps), params.n_p, params.n_modes), dtype=complex)
    if threads <= 1:
        _evolve_block(F, Ks, p_grid, params.Q, dt, n_steps, snap_steps, out, 0)
    else:
        blocks = np.array_split(np.arange(params.n_modes), threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = []
            for block in blocks:
                if block.size == 0:
                    continue
                lo = int(block[0])
                hi = int(block[-1]) + 1
                futures.append(pool.submit(
                    _evolve_block, F[:, lo:hi].copy(), Ks[lo:hi], p_grid,
                    params.Q, dt, n_steps, snap_steps, out, lo))
            for fut in futures:
                fut.result()
    return [
        KineticState(params, t0 + s * dt, np.ascontiguousarray(out[i].T))
        for i, s in enumerate(snap_steps)
    ]


def symmetry_residual(state: KineticState) -> float:
    """Largest violation of Fhat(K, -P) = conj(Fhat(K, P)) across modes.

    The initial data is real and even in P and the evolution preserves the
    combined flip, so growth here flags an operator bug rather than noise.
    Mode norms are floored at the global maximum times 1e-3 to keep empty
    modes from dominating the ratio.
    """
    modes = state.modes
    diff = np.linalg.norm(modes[:, ::-1] - np.conj(modes), axis=1)
    norms = np.linalg.norm(modes, axis=1)
    floor = 1e-3 * np.max(norms) if np.max(norms) > 0.0 else 1.0
    return float(np.max(diff / np.maximum(norms, floor)))


@dataclass
class DensityProfile:
    """Real-space density N and current J on the ring at one time."""

    x_grid: Grid1D
    time: float
    Q: float
    density: np.ndarray
    current: np.ndarray


def _hermitian_extend(half: np.ndarray, n_x: int) -> np.ndarray:
    """Half-spectrum (j = 0..n_x/2) to full fft-order, forcing a real field."""
    full = np.zeros(n_x, dtype=complex)
    m = n_x // 2
    full[: m + 1] = half
    full[m] = half[m].real  # shared Nyquist bin must be self-conjugate
    full[m + 1:] = np.conj(half[1:m][::-1])
    return full


def reconstruct_density(state: KineticState, refine: int = 1,
                        check: bool = True) -> DensityProfile:
    """Integrate the modes over momentum and invert the spatial transform.

    refine > 1 zero-pads the spectrum onto a refine-times-finer ring, a
    pure trigonometric interpolation. With check on, violations of the
    momentum-flip symmetry or a non-real reconstruction raise SymmetryError.
    """
    params = state.params
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    if check:
        res = symmetry_residual(state)
        if res > 1e-6:
            raise SymmetryError(
                f"momentum-flip symmetry violated at {res:.3e}; "
                "the evolution or the initial data is inconsistent"
            )
    p_grid = params.p_grid
    v = velocity(p_grid.points, params.Q)
    n_half = quad(state.modes, p_grid)
    j_half = quad(state.modes * v, p_grid)

    n_x = params.n_x * refine
    x_grid = Grid1D.periodic(params.length, n_x)
    full_n = _zero_pad(_hermitian_extend(n_half, params.n_x), n_x)
    full_j = _zero_pad(_hermitian_extend(j_half, params.n_x), n_x)
    density = dft_inverse(full_n, x_grid)
    current = dft_inverse(full_j, x_grid)
    if check:
        scale_n = np.max(np.abs(density))
        scale_j = max(np.max(np.abs(current)), 1e-300)
        if np.max(np.abs(density.imag)) > 1e-8 * scale_n:
            raise SymmetryError("reconstructed density is not real")
        if np.max(np.abs(current.imag)) > 1e-8 * scale_j + 1e-14 * scale_n:
            raise SymmetryError("reconstructed current is not real")
    return DensityProfile(x_grid, state.time, params.Q,
                          density.real.copy(), current.real.copy())


def _zero_pad(full: np.ndarray, n_fine: int) -> np.ndarray:
    n = full.size
    if n_fine == n:
        return full
    m = n // 2
    padded = np.zeros(n_fine, dtype=complex)
    padded[:m] = full[:m]
    # split the Nyquist bin symmetrically to keep the interpolant real
    padded[m] = 0.5 * full[m]
    padded[n_fine - m] = 0.5 * np.conj(full[m])
    padded[n_fine - m + 1:] = full[m + 1:]
    return padded


def rescaled_profile(profile: DensityProfile):
    """Front coordinates: xi = X / (Q T), nu = N * Q * T."""
    if profile.time <= 0.0:
        raise ValueError("rescaling needs a positive time")
    scale = profile.Q * profile.time
    return profile.x_grid.points / scale, profile.density * scale


def peak_location(profile: DensityProfile) -> tuple[float, float]:
    """Position and height of the right-hand density peak in (xi, nu).

    Three-point parabolic refinement around the grid argmax on xi > 0.
    """
    xi, nu = rescaled_profile(profile)
    sel = np.nonzero(xi > 0.0)[0]
    if sel.size < 3:
        raise ValueError("not enough samples on the positive side")
    i = sel[np.argmax(nu[sel])]
    if i == 0 or i == xi.size - 1:
        return float(xi[i]), float(nu[i])
    y0, y1, y2 = nu[i - 1], nu[i], nu[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return float(xi[i]), float(y1)
    off = 0.5 * (y0 - y2) / denom
    step = xi[i + 1] - xi[i]
    peak_nu = y1 - 0.25 * (y0 - y2) * off
    return float(xi[i] + off * step), float(peak_nu)


def continuity_residual(profiles) -> float:
    """Relative residual of dN/dT + dJ/dX = 0 from profiles at uniform times.

    Centered differences in both directions: the time derivative pairs the
    neighbours of each interior level, the flux divergence wraps around
    the ring. Returns the L2 norm of the residual over all interior levels
    normalized by the L2 norm of the flux divergence.
    """
    profiles = list(profiles)
    if len(profiles) < 3:
        raise ValueError("need at least 3 time levels for centered differencing")
    times = np.array([p.time for p in profiles])
    deltas = np.diff(times)
    if np.any(deltas <= 0.0) or not np.allclose(deltas, deltas[0], rtol=1e-9):
        raise ValueError("time levels must be strictly increasing and uniform")
    grid = profiles[0].x_grid
    for p in profiles[1:]:
        if p.x_grid != grid:
            raise ValueError("profiles live on different spatial grids")
    delta = float(deltas[0])
    num = 0.0
    den = 0.0
    for i in range(1, len(profiles) - 1):
        dndt = (profiles[i + 1].density - profiles[i - 1].density) / (2.0 * delta)
        j = profiles[i].current
        djdx = (np.roll(j, -1) - np.roll(j, 1)) / (2.0 * grid.spacing)
        num += float(np.sum((dndt + djdx) ** 2))
        den += float(np.sum(djdx ** 2))
    if den == 0.0:
        raise ValueError("flux divergence vanishes; residual is not defined")
    return float(np.sqrt(num / den))


def write_profile_csv(profile: DensityProfile, path) -> None:
    """Columns: T, X, N, J plus the front coordinates xi and nu."""
    x = profile.x_grid.points
    t = np.full(x.size, profile.time)
    xi, nu = rescaled_profile(profile)
    _io.write_csv(
        path,
        ["T", "X", "N", "J", "xi", "nu"],
        [t, x, profile.density, profile.current, xi, nu],
    )

"""Closed-system dephasing on a discretised continuous spectrum.

States and observables are sampled on a uniform :class:`EnergyGrid`.  A
state carries a diagonal density ``rho(w)`` and a regular kernel
``rho(w, w')``; an observable carries ``O(w)`` and ``O(w, w')``.  All
integrals use the trapezoid rule on the grid.

Time evolution only rotates kernel phases, ``rho_t(w, w') = rho(w, w') exp(-i (w - w') t)``,
so the off-diagonal contribution to an expectation value is the 2-d Fourier
sum ``sum_jk W_j W_k conj(rho_jk) O_jk exp(i (w_j - w_k) t)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import GridError, NumericalError, StateError

DEFAULT_POINTS = 4096
NORMALIZATION_TOL = 1e-8
IMAG_RESIDUE_TOL = 1e-8
_T_CHUNK = 128

__all__ = [
    "EnergyGrid",
    "VanHoveState",
    "VanHoveObservable",
    "SingularDiagonalState",
    "KernelFamily",
    "GaussianCoherence",
    "LorentzianCoherence",
    "make_family",
    "gaussian_state_and_observable",
    "offdiag_term",
    "expectation_vh",
    "equilibrium_expectation",
    "offdiag_decay_scan",
    "decay_horizon",
    "recurrence_time",
    "sum_vs_integral",
]


@dataclass(frozen=True)
class EnergyGrid:
    omega_min: float
    omega_max: float
    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        if self.n_points < 2:
            raise GridError("need at least two grid points")
        if not (self.omega_max > self.omega_min >= 0):
            raise GridError("require omega_max > omega_min >= 0")

    @classmethod
    def from_spacing(cls, spacing: float, n_points: int = DEFAULT_POINTS, omega_min: float = 0.0):
        return cls(omega_min, omega_min + spacing * (n_points - 1), n_points)

    @property
    def spacing(self) -> float:
        return (self.omega_max - self.omega_min) / (self.n_points - 1)

    @property
    def omega(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    @property
    def width(self) -> float:
        return self.omega_max - self.omega_min

    def refined(self, factor: int = 2) -> "EnergyGrid":
        """Same band with the spacing divided by ``factor``."""
        return EnergyGrid(self.omega_min, self.omega_max, factor * (self.n_points - 1) + 1)


def _check_kernel(k: np.ndarray, grid: EnergyGrid, what: str) -> np.ndarray:
    if k.shape != (grid.n_points, grid.n_points):
        raise GridError(f"{what} kernel shape {k.shape} does not match grid")
    if not np.all(np.isfinite(k)):
        raise StateError(f"{what} kernel has non-finite samples")
    if np.iscomplexobj(k):
        herm = np.max(np.abs(k - k.conj().T))
    else:
        herm = np.max(np.abs(k - k.T))
    if herm > 1e-12 * max(1.0, np.max(np.abs(k))):
        raise StateError(f"{what} kernel is not Hermitian")
    return k


@dataclass(frozen=True, eq=False)
class VanHoveState:
    grid: EnergyGrid
    rho_diag: np.ndarray
    rho_kernel: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.rho_diag, dtype=float)
        if d.shape != (self.grid.n_points,):
            raise GridError("diagonal density does not match grid")
        if np.any(d < 0):
            raise StateError("diagonal density must be nonnegative")
        norm = float(self.grid.weights @ d)
        if abs(norm - 1.0) > NORMALIZATION_TOL:
            raise StateError(f"diagonal density integrates to {norm}, expected 1")
        object.__setattr__(self, "rho_diag", d)
        _check_kernel(np.asarray(self.rho_kernel), self.grid, "state")

    def evolved_kernel(self, t: float) -> np.ndarray:
        w = self.grid.omega - self.grid.omega_min
        ph = np.exp(-1j * w * t)
        return self.rho_kernel * np.multiply.outer(ph, ph.conj())

    def equilibrium(self) -> "SingularDiagonalState":
        return SingularDiagonalState(self.grid, self.rho_diag)


@dataclass(frozen=True, eq=False)
class SingularDiagonalState:
    """Long-time limit object: only the diagonal density survives."""

    grid: EnergyGrid
    rho_diag: np.ndarray


@dataclass(frozen=True, eq=False)
class VanHoveObservable:
    grid: EnergyGrid
    O_diag: np.ndarray
    O_kernel: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.O_diag, dtype=float)
        if d.shape != (self.grid.n_points,):
            raise GridError("diagonal observable does not match grid")
        object.__setattr__(self, "O_diag", d)
        _check_kernel(np.asarray(self.O_kernel), self.grid, "observable")


def _same_grid(state, obs) -> None:
    if state.grid != obs.grid:
        raise GridError("state and observable live on different grids")


def equilibrium_expectation(state, obs: VanHoveObservable) -> float:
    """``int rho(w) O(w) dw``: the value reached once interference has died out."""
    _same_grid(state, obs)
    return float(state.grid.weights @ (state.rho_diag * obs.O_diag))


def offdiag_term(state: VanHoveState, obs: VanHoveObservable, t, method: str = "diagonal") -> np.ndarray:
    """Complex off-diagonal contribution at each time in ``t``.

    ``method="diagonal"`` uses the uniform grid: the phase only depends on
    ``j - k``, so the weighted kernel is summed along each diagonal once and
    the result is a 1-d Fourier sum, ``O(n^2 + n T)``.  ``method="direct"``
    contracts the full kernel at every time, ``O(n^2 T)``.
    """
    _same_grid(state, obs)
    grid = state.grid
    rho_k = state.rho_kernel
    k = np.multiply(np.conj(rho_k) if np.iscomplexobj(rho_k) else rho_k, obs.O_kernel)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    wt = grid.weights
    out = np.empty(t_arr.shape, dtype=complex)
    if method == "diagonal":
        c = _diagonal_sums(wt[:, None] * k * wt[None, :])
        n = grid.n_points
        d = np.arange(-(n - 1), n) * grid.spacing
        for start in range(0, len(t_arr), _T_CHUNK):
            tc = t_arr[start:start + _T_CHUNK]
            ph = np.exp(1j * np.multiply.outer(tc, d))
            out[start:start + _T_CHUNK] = ph @ c
    elif method == "direct":
        w = grid.omega - grid.omega_min
        for start in range(0, len(t_arr), _T_CHUNK):
            tc = t_arr[start:start + _T_CHUNK]
            u = wt[:, None] * np.exp(1j * np.multiply.outer(w, tc))
            out[start:start + _T_CHUNK] = np.einsum("jt,jt->t", u, _matmul(k, u.conj()))
    else:
        raise ValueError(f"unknown method {method!r}")
    return out if np.ndim(t) else out[0]


def _diagonal_sums(m: np.ndarray) -> np.ndarray:
    # entry d + n - 1 holds sum_j m[j, j - d] for d = -(n-1) .. n-1
    n = m.shape[0]
    return np.array([np.trace(m, offset=-d) for d in range(-(n - 1), n)])


def _matmul(k: np.ndarray, u: np.ndarray) -> np.ndarray:
    # keep a real kernel real; numpy would otherwise upcast the whole matrix
    if np.iscomplexobj(k):
        return k @ u
    return k @ u.real + 1j * (k @ u.imag)


def expectation_vh(state: VanHoveState, obs: VanHoveObservable, t):
    """Trapezoid evaluation of the time-dependent expectation value.

    Raises :class:`NumericalError` if the imaginary part exceeds ``1e-8``,
    which cannot happen for Hermitian kernels beyond roundoff.
    """
    off = offdiag_term(state, obs, t)
    imag = np.max(np.abs(np.imag(off)))
    if imag > IMAG_RESIDUE_TOL:
        raise NumericalError(f"expectation has imaginary residue {imag:.3e}")
    return equilibrium_expectation(state, obs) + np.real(off)


def offdiag_decay_scan(state: VanHoveState, obs: VanHoveObservable, t_grid) -> np.ndarray:
    """``|<O>(t) - <O>_eq|`` on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0) or np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be sorted and nonnegative")
    return np.abs(np.real(offdiag_term(state, obs, t_grid)))


def decay_horizon(t_grid, scan, eps: float = 1e-4) -> float:
    """Earliest grid time after which ``scan`` stays below ``eps`` (``inf`` if never)."""
    t_grid = np.asarray(t_grid)
    above = np.flatnonzero(np.asarray(scan) >= eps)
    if len(above) == 0:
        return float(t_grid[0])
    if above[-1] == len(t_grid) - 1:
        return float("inf")
    return float(t_grid[above[-1] + 1])


def recurrence_time(grid: EnergyGrid) -> float:
    """Period ``2 pi / dw`` of the discretised dynamics (hbar = 1)."""
    return 2 * np.pi / grid.spacing


def sum_vs_integral(levels, f: Callable | np.ndarray, refine: int = 64):
    """Compare a level sum weighted by the level spacing with the band integral.

    Each level ``w_k`` stands for a cell of width ``dw_k`` (the spacing of
    a box-quantised spectrum); the sum is ``sum_k f(w_k) dw_k`` and the
    integral covers the union of the cells.  With a callable ``f`` the
    integral is a trapezoid on a grid ``refine`` times finer than the
    levels; with plain samples it is the trapezoid over the levels
    themselves.

    Returns ``(sum_value, integral_value, discrepancy)``.
    """
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or len(levels) < 2 or np.any(np.diff(levels) <= 0):
        raise ValueError("levels must be a sorted 1-d array with at least two entries")
    gaps = np.diff(levels)
    cell = np.empty_like(levels)
    cell[1:-1] = 0.5 * (gaps[1:] + gaps[:-1])
    cell[0], cell[-1] = gaps[0], gaps[-1]
    if callable(f):
        samples = np.asarray(f(levels), dtype=float)
        lo = levels[0] - 0.5 * gaps[0]
        hi = levels[-1] + 0.5 * gaps[-1]
        fine = np.linspace(lo, hi, refine * len(levels) + 1)
        integral = float(integrate.trapezoid(f(fine), fine))
    else:
        samples = np.asarray(f, dtype=float)
        if samples.shape != levels.shape:
            raise ValueError("samples must match levels")
        integral = float(integrate.trapezoid(samples, levels))
    total = float(np.sum(samples * cell))
    return total, integral, total - integral


class KernelFamily:
    """Kernel ``A * G(w_bar) * f(nu)`` in mean ``w_bar = (w + w')/2`` and difference ``nu = w - w'`` coordinates.

    ``G`` is a normalised Gaussian centred at ``center`` with width
    ``spread``; subclasses supply the coherence profile ``f`` and its
    Fourier transform.
    """

    name = "base"

    def __init__(self, center: float, spread: float, amplitude: float = 1.0):
        self.center = float(center)
        self.spread = float(spread)
        self.amplitude = float(amplitude)

    def profile(self, nu):
        raise NotImplementedError

    def transform(self, t):
        """``int f(nu) exp(i nu t) dnu`` over the whole real line."""
        raise NotImplementedError

    def mean_density(self, w_bar):
        s = self.spread
        return np.exp(-0.5 * ((w_bar - self.center) / s) ** 2) / (np.sqrt(2 * np.pi) * s)

    def kernel(self, grid: EnergyGrid) -> np.ndarray:
        w = grid.omega
        w_bar = 0.5 * np.add.outer(w, w)
        nu = np.subtract.outer(w, w)
        return self.amplitude * self.mean_density(w_bar) * self.profile(nu)

    def closed_form(self, t):
        """Off-diagonal term for an untruncated spectrum: ``A * transform(t)``."""
        return self.amplitude * self.transform(np.asarray(t, dtype=float))

    def band_limited(self, t, grid: EnergyGrid) -> np.ndarray:
        """Off-diagonal term for the kernel restricted to ``grid``'s band.

        Integrating ``G`` over the allowed ``w_bar`` range leaves the 1-d
        Fourier integral ``A int_{-W}^{W} f(nu) H(nu) cos(nu t) dnu`` with
        ``H(nu)`` a difference of error functions; it is evaluated with
        adaptive oscillatory quadrature.
        """
        lo, hi, width = grid.omega_min, grid.omega_max, grid.width
        s = self.spread * np.sqrt(2)

        def mass(nu):
            a = lo + 0.5 * nu - self.center
            b = hi - 0.5 * nu - self.center
            return 0.5 * (special.erf(b / s) - special.erf(a / s))

        def f(nu):
            return self.profile(nu) * mass(nu)

        out = []
        for tt in np.atleast_1d(np.asarray(t, dtype=float)):
            if tt == 0:
                val = integrate.quad(f, 0, width, limit=1000, points=self._breaks(width))[0]
            else:
                val = integrate.quad(f, 0, width, weight="cos", wvar=tt, limit=2000)[0]
            out.append(2 * self.amplitude * val)
        return np.array(out) if np.ndim(t) else out[0]

    def _breaks(self, width):
        return None


class GaussianCoherence(KernelFamily):
    """``f(nu) = exp(-nu^2 / 2 sigma^2)``; transform ``sqrt(2 pi) sigma exp(-sigma^2 t^2 / 2)``."""

    name = "gaussian"

    def __init__(self, center, spread, sigma, amplitude=1.0):
        super().__init__(center, spread, amplitude)
        self.sigma = float(sigma)

    def profile(self, nu):
        return np.exp(-0.5 * (nu / self.sigma) ** 2)

    def transform(self, t):
        return np.sqrt(2 * np.pi) * self.sigma * np.exp(-0.5 * (self.sigma * t) ** 2)


class LorentzianCoherence(KernelFamily):
    """``f(nu) = (gamma / pi) / (nu^2 + gamma^2)``; transform ``exp(-gamma |t|)``."""

    name = "lorentzian"

    def __init__(self, center, spread, gamma, amplitude=1.0):
        super().__init__(center, spread, amplitude)
        self.gamma = float(gamma)

    def profile(self, nu):
        return (self.gamma / np.pi) / (nu**2 + self.gamma**2)

    def transform(self, t):
        return np.exp(-self.gamma * np.abs(t))

    def _breaks(self, width):
        return [p for p in (self.gamma, 10 * self.gamma) if p < width]


_FAMILIES = {"gaussian": GaussianCoherence, "lorentzian": LorentzianCoherence}


def make_family(name: str, **params) -> KernelFamily:
    try:
        cls = _FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown kernel family {name!r}; choose from {sorted(_FAMILIES)}") from None
    return cls(**params)


def gaussian_state_and_observable(
    grid: EnergyGrid,
    family: KernelFamily,
    observable_diag: Callable | None = None,
) -> tuple[VanHoveState, VanHoveObservable]:
    """State with Gaussian ``rho(w)`` and ``family`` kernel, paired with a flat-kernel observable.

    The observable kernel is identically one (a read-only broadcast, so it
    costs no memory); hence ``conj(rho(w, w')) O(w, w')`` is the family
    kernel itself.  ``observable_diag`` defaults to ``O(w) = w``.
    """
    w = grid.omega
    diag = family.mean_density(w)
    diag = diag / (grid.weights @ diag)
    state = VanHoveState(grid, diag, family.kernel(grid))
    o_diag = w if observable_diag is None else np.asarray(observable_diag(w), dtype=float)
    ones = np.broadcast_to(np.float64(1.0), (grid.n_points, grid.n_points))
    return state, VanHoveObservable(grid, o_diag, ones)

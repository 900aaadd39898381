"""Relevant-observable algebras, coarse-grained states and limit probes.

States pair with observables through ``(rho|O) = Tr(rho^H O)``, which equals
``Tr(rho O)`` whenever ``rho`` is Hermitian.  A :class:`RelevantAlgebra`
stores a basis ``{O_j}`` and dual functionals ``{D_i}`` with
``(D_i|O_j) = delta_ij``; together they define the projector
``pi = sum_i |O_i)(D_i|`` onto the span of the basis.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DimensionError, IllConditionedAlgebra, InsufficientData, NotInAlgebra

GRAM_COND_MAX = 1e10
SPAN_RESIDUAL_TOL = 1e-8
DEFAULT_THRESHOLD = 1e-3

__all__ = [
    "RelevantAlgebra",
    "CoarseState",
    "ConvergenceVerdict",
    "PointerBasis",
    "build_algebra",
    "matrix_unit_basis",
    "project_state",
    "coarse_expectation",
    "weak_limit_probe",
    "pointer_basis",
]


def _pair(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))


@dataclass(frozen=True)
class RelevantAlgebra:
    """Basis of relevant observables together with their dual functionals.

    Attributes
    ----------
    basis : ndarray, shape (n, d, d)
    duals : ndarray, shape (n, d, d)
        Matrices ``D_i`` with ``Tr(D_i^H O_j) = delta_ij``.
    gram : ndarray, shape (n, n)
        ``G_ij = Tr(O_i^H O_j)``.
    condition : float
        Condition number of ``gram``.
    """

    basis: np.ndarray
    duals: np.ndarray
    gram: np.ndarray
    condition: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def __len__(self) -> int:
        return self.basis.shape[0]

    def pairing_matrix(self) -> np.ndarray:
        """``P_ij = (D_i|O_j)``; the identity for a well-built algebra."""
        n = len(self)
        return self.duals.reshape(n, -1).conj() @ self.basis.reshape(n, -1).T

    def duality_error(self) -> float:
        return float(np.max(np.abs(self.pairing_matrix() - np.eye(len(self)))))

    def expand(self, obs) -> tuple[np.ndarray, float]:
        """Least-squares coefficients of ``obs`` in the basis and the relative residual."""
        obs = np.asarray(obs, dtype=complex)
        if obs.shape != (self.dim, self.dim):
            raise DimensionError(f"observable shape {obs.shape}, algebra dim {self.dim}")
        a = self.basis.reshape(len(self), -1).T
        y = obs.reshape(-1)
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        resid = np.linalg.norm(a @ coef - y) / max(np.linalg.norm(y), 1.0)
        return coef, float(resid)


def build_algebra(basis: Sequence) -> RelevantAlgebra:
    """Compute dual functionals for ``basis`` by solving the Gram system.

    Raises
    ------
    IllConditionedAlgebra
        If the Gram matrix condition number exceeds ``1e10`` (basis elements
        are numerically dependent).
    """
    mats = [np.asarray(b, dtype=complex) for b in basis]
    if not mats:
        raise ValueError("basis must be nonempty")
    d = mats[0].shape
    if len(d) != 2 or d[0] != d[1] or any(m.shape != d for m in mats):
        raise DimensionError("basis elements must be square matrices of equal size")
    b = np.stack(mats)
    flat = b.reshape(len(mats), -1)
    gram = flat.conj() @ flat.T
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > GRAM_COND_MAX:
        raise IllConditionedAlgebra(f"Gram matrix condition number {cond:.3e}")
    # (D_i|O_j) = delta_ij means conj(D) F^T = I; inverting F directly rather than
    # the Gram matrix keeps the error at cond(F) = sqrt(cond(G)) times rounding
    duals = np.linalg.pinv(flat.T).conj().reshape(b.shape)
    return RelevantAlgebra(basis=b, duals=duals, gram=gram, condition=cond)


def matrix_unit_basis(dim: int) -> list[np.ndarray]:
    """Matrix units ``|alpha><beta|`` in row-major order."""
    out = []
    for a in range(dim):
        for b in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[a, b] = 1.0
            out.append(e)
    return out


@dataclass(frozen=True)
class CoarseState:
    """Coordinates ``rho_Gi = (rho|O_i)`` of a state projected onto an algebra."""

    coordinates: np.ndarray
    algebra: RelevantAlgebra

    def matrix(self) -> np.ndarray:
        """Matrix representing the functional ``sum_i rho_Gi (D_i|``."""
        return np.tensordot(self.coordinates.conj(), self.algebra.duals, axes=1)


def project_state(rho, algebra: RelevantAlgebra) -> CoarseState:
    """Coarse-grain ``rho`` (a matrix or a :class:`CoarseState`) onto ``algebra``."""
    if isinstance(rho, CoarseState):
        rho = rho.matrix()
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (algebra.dim, algebra.dim):
        raise DimensionError(f"state shape {rho.shape}, algebra dim {algebra.dim}")
    n = len(algebra)
    coords = algebra.basis.reshape(n, -1) @ rho.reshape(-1).conj()
    return CoarseState(coordinates=coords, algebra=algebra)


def coarse_expectation(g: CoarseState, obs):
    """Expectation of an in-span observable computed from coarse coordinates only.

    Returns a float for Hermitian ``obs`` and a complex number otherwise.
    """
    coef, resid = g.algebra.expand(obs)
    if resid > SPAN_RESIDUAL_TOL:
        raise NotInAlgebra(f"observable lies outside the algebra (residual {resid:.3e})")
    val = complex(coef @ g.coordinates)
    obs = np.asarray(obs)
    if np.allclose(obs, obs.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(obs).max())):
        return val.real
    return val


@dataclass(frozen=True)
class ConvergenceVerdict:
    converged: bool
    limit_estimate: complex | float
    tail_fluctuation: float
    cesaro_drift: float
    raw_fluctuation: float
    window: tuple[float, float]
    mode: str


def _running_time_average(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    if len(t) == 1:
        return v.copy()
    seg = 0.5 * (v[1:] + v[:-1]) * np.diff(t)
    area = np.concatenate([[0.0], np.cumsum(seg)])
    span = t - t[0]
    out = np.empty_like(area)
    out[0] = v[0]
    out[1:] = area[1:] / span[1:]
    return out


def weak_limit_probe(
    t,
    values,
    threshold: float = DEFAULT_THRESHOLD,
    mode: Literal["raw", "cesaro"] = "raw",
    min_samples: int = 32,
) -> ConvergenceVerdict:
    """Decide whether a sampled time series has settled to a limit.

    The limit estimate is the time average (Cesaro mean) over the final half
    of the series.  In ``raw`` mode the verdict is based on the largest
    deviation of the samples from that estimate over the final quarter; in
    ``cesaro`` mode on the largest drift of the running mean itself over the
    final quarter, so oscillatory series with a well-defined average count as
    converged.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("t and values must be 1-d arrays of equal length")
    if len(t) < min_samples:
        raise InsufficientData(f"need at least {min_samples} samples, got {len(t)}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t must be strictly increasing")
    if mode not in ("raw", "cesaro"):
        raise ValueError(f"unknown mode {mode!r}")
    half = len(t) // 2
    quarter = len(t) - (3 * len(t)) // 4
    cesaro = _running_time_average(t[half:], v[half:])
    limit = cesaro[-1]
    raw = float(np.max(np.abs(v[-quarter:] - limit)))
    tail = cesaro[-max(quarter, 1):]
    drift = float(np.max(np.abs(tail - limit)))
    fluct = raw if mode == "raw" else drift
    if not np.iscomplexobj(v):
        limit = float(limit)
    else:
        limit = complex(limit)
    return ConvergenceVerdict(
        converged=bool(fluct < threshold),
        limit_estimate=limit,
        tail_fluctuation=fluct,
        cesaro_drift=drift,
        raw_fluctuation=raw,
        window=(float(t[half]), float(t[-1])),
        mode=mode,
    )


@dataclass(frozen=True)
class PointerBasis:
    populations: np.ndarray
    vectors: np.ndarray
    degenerate: bool


def pointer_basis(rho_star, degeneracy_tol: float = 1e-10) -> PointerBasis:
    """Eigenbasis of a final equilibrium state, flagging degenerate spectra.

    For degenerate ``rho_star`` any rotation inside an eigenspace is equally
    valid; the returned vectors are whatever the eigensolver produced.
    """
    rho_star = np.asarray(rho_star, dtype=complex)
    lam, vec = np.linalg.eigh(0.5 * (rho_star + rho_star.conj().T))
    lam, vec = lam[::-1], vec[:, ::-1]
    degenerate = bool(len(lam) > 1 and np.min(np.abs(np.diff(lam))) < degeneracy_tol)
    return PointerBasis(populations=lam, vectors=vec, degenerate=degenerate)

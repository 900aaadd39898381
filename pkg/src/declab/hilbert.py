"""Dense linear algebra on bipartite finite Hilbert spaces.

Composite basis states ``|i> (x) |alpha>`` are indexed as ``i * m + alpha``
where ``m`` is the dimension of the right factor.  This is the ordering
produced by :func:`numpy.kron` and it is used everywhere in the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import BasisError, DimensionError, NumericalError, StateError

Side = Literal["left", "right"]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = -1e-10
UNITARY_TOL = 1e-10
IMAG_RESIDUE_TOL = 1e-10

__all__ = [
    "FactorSplit",
    "check_density_matrix",
    "check_observable",
    "is_hermitian",
    "is_unitary",
    "tensor_product",
    "partial_trace",
    "embed_observable",
    "expectation",
    "off_diagonal_norm",
    "random_density_matrix",
    "random_observable",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class FactorSplit:
    """Factorisation of an ``n * m`` dimensional space as left (x) right."""

    dim_left: int
    dim_right: int

    def __post_init__(self):
        if int(self.dim_left) < 1 or int(self.dim_right) < 1:
            raise DimensionError(
                f"factor dimensions must be >= 1, got ({self.dim_left}, {self.dim_right})"
            )

    @property
    def dim(self) -> int:
        return self.dim_left * self.dim_right

    def factor_dim(self, side: Side) -> int:
        if side == "left":
            return self.dim_left
        if side == "right":
            return self.dim_right
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def _square(a, name="matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    """Relative Frobenius test ``||A - A^H|| <= tol * ||A||``."""
    a = _square(a)
    scale = max(np.linalg.norm(a), 1.0)
    return bool(np.linalg.norm(a - a.conj().T) <= tol * scale)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = _square(u, "basis")
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def check_density_matrix(rho) -> np.ndarray:
    """Validate ``rho`` as a density matrix and return it as a complex array.

    Raises :class:`StateError` if it is not Hermitian, not unit trace or has
    an eigenvalue below ``PSD_FLOOR``.
    """
    rho = _square(rho, "density matrix").astype(complex, copy=False)
    if not is_hermitian(rho):
        raise StateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateError(f"density matrix trace is {tr}, expected 1")
    lam = np.linalg.eigvalsh(rho)
    if lam[0] < PSD_FLOOR:
        raise StateError(f"density matrix has negative eigenvalue {lam[0]:.3e}")
    return rho


def check_observable(obs) -> np.ndarray:
    obs = _square(obs, "observable").astype(complex, copy=False)
    if not is_hermitian(obs):
        raise StateError("observable is not Hermitian")
    return obs


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; entry ``((i, alpha), (j, beta))`` is ``A[i, j] * B[alpha, beta]``."""
    return np.kron(np.asarray(a), np.asarray(b))


def _check_split(rho: np.ndarray, split: FactorSplit) -> None:
    if rho.shape != (split.dim, split.dim):
        raise DimensionError(
            f"matrix of shape {rho.shape} does not match split "
            f"({split.dim_left}, {split.dim_right})"
        )


def partial_trace(rho, split: FactorSplit, keep: Side = "left") -> np.ndarray:
    """Reduced matrix of ``rho`` on the ``keep`` factor.

    ``keep='left'`` returns ``sum_alpha rho[i alpha, j alpha]`` and
    ``keep='right'`` returns ``sum_i rho[i alpha, i beta]``.
    """
    rho = _square(rho)
    _check_split(rho, split)
    n, m = split.dim_left, split.dim_right
    t = rho.reshape(n, m, n, m)
    if keep == "left":
        return np.einsum("iaja->ij", t)
    if keep == "right":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"keep must be 'left' or 'right', got {keep!r}")


def embed_observable(obs, split: FactorSplit, side: Side = "left") -> np.ndarray:
    """Lift a factor observable to the composite space (``O (x) I`` or ``I (x) O``)."""
    obs = _square(obs, "observable")
    want = split.factor_dim(side)
    if obs.shape[0] != want:
        raise DimensionError(
            f"observable has dim {obs.shape[0]}, {side} factor has dim {want}"
        )
    if side == "left":
        return np.kron(obs, np.eye(split.dim_right))
    return np.kron(np.eye(split.dim_left), obs)


def expectation(rho, obs) -> float:
    """Return ``Tr(rho O)`` as a float.

    The imaginary part must vanish to ``IMAG_RESIDUE_TOL`` (scaled by the
    norms of the operands when these exceed one).
    """
    rho = _square(rho, "density matrix")
    obs = _square(obs, "observable")
    if rho.shape != obs.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {obs.shape}")
    val = np.einsum("ij,ji->", rho, obs)
    scale = max(1.0, np.linalg.norm(rho) * np.linalg.norm(obs))
    if abs(val.imag) > IMAG_RESIDUE_TOL * scale:
        raise NumericalError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def off_diagonal_norm(rho, basis) -> float:
    """Frobenius norm of the off-diagonal part of ``rho`` in the columns of ``basis``."""
    rho = _square(rho)
    basis = _square(basis, "basis")
    if basis.shape != rho.shape:
        raise DimensionError(f"basis shape {basis.shape} vs state shape {rho.shape}")
    if not is_unitary(basis):
        raise BasisError("basis is not unitary")
    r = basis.conj().T @ rho @ basis
    np.fill_diagonal(r, 0.0)
    return float(np.linalg.norm(r))


def random_density_matrix(dim: int, rng=None, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or rank-``rank``) density matrix from a Ginibre draw."""
    rng = np.random.default_rng(rng)
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_observable(dim: int, rng=None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)

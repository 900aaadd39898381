"""Subsystem decoherence and global-state reconstruction across partitions.

A :class:`Partition` is a factorisation ``n x m`` of the global space in a
rotated basis.  The columns of ``basis_change`` are the new basis vectors
written in the reference basis, so the matrix of ``rho`` in the partition
basis is ``U^H rho U``.

Reconstruction treats the ``N^2`` real numbers parameterising a Hermitian
``N x N`` matrix (``N`` diagonal entries, then real and imaginary parts of
the upper triangle) as unknowns.  Each factor observable ``O`` of each
partition contributes the real equation
``Tr(rho U (O x I) U^H) = Tr(rho_reduced O)``; one more row fixes the trace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InconsistentData, InsufficientData
from .framework import ConvergenceVerdict, weak_limit_probe
from .hilbert import FactorSplit, is_unitary, partial_trace

RANK_RTOL = 1e-10
CONSISTENCY_TOL = 1e-6

__all__ = [
    "Partition",
    "random_partition",
    "haar_unitary",
    "gell_mann_basis",
    "reduced_final_states",
    "PartitionBudget",
    "partition_budget",
    "ReconstructionSystem",
    "Reconstruction",
    "assemble_system",
    "solve_reconstruction",
    "hermitian_to_vector",
    "vector_to_hermitian",
    "SubsystemVerdict",
    "subsystem_convergence_check",
]


@dataclass(frozen=True, eq=False)
class Partition:
    split: FactorSplit
    basis_change: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.basis_change, dtype=complex)
        if u.shape != (self.split.dim, self.split.dim):
            raise DimensionError(
                f"basis change of shape {u.shape} for a {self.split.dim}-dim space"
            )
        if not is_unitary(u):
            raise ValueError("basis change is not unitary")
        object.__setattr__(self, "basis_change", u)

    @classmethod
    def identity(cls, n: int, m: int) -> "Partition":
        return cls(FactorSplit(n, m), np.eye(n * m))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.basis_change, np.eye(self.split.dim)))

    def rotate(self, rho: np.ndarray) -> np.ndarray:
        if self.is_identity:
            return rho
        u = self.basis_change
        return u.conj().T @ rho @ u

    def lift(self, obs: np.ndarray, side: str) -> np.ndarray:
        """Factor observable expressed as a global operator in the reference basis."""
        n, m = self.split.dim_left, self.split.dim_right
        big = np.kron(obs, np.eye(m)) if side == "left" else np.kron(np.eye(n), obs)
        u = self.basis_change
        return u @ big @ u.conj().T


def haar_unitary(dim: int, rng) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_partition(dim: int, n: int, m: int, seed) -> Partition:
    if n * m != dim:
        raise DimensionError(f"{n} x {m} does not factor dimension {dim}")
    return Partition(FactorSplit(n, m), haar_unitary(dim, np.random.default_rng(seed)))


def gell_mann_basis(d: int) -> list[np.ndarray]:
    """Generalised Gell-Mann matrices: ``d^2 - 1`` traceless Hermitian, ``Tr(G_a G_b) = 2 delta_ab``."""
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            out += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        out.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex))
    return out


def reduced_final_states(rho_star, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Both reduced states of ``rho_star`` in the factorisation ``p``."""
    rho_star = np.asarray(rho_star, dtype=complex)
    if rho_star.shape != (p.split.dim, p.split.dim):
        raise DimensionError(f"state of shape {rho_star.shape} for partition dim {p.split.dim}")
    r = p.rotate(rho_star)
    return partial_trace(r, p.split, "left"), partial_trace(r, p.split, "right")


@dataclass(frozen=True)
class PartitionBudget:
    required: int
    ratio: float
    asymptotic: float


def partition_budget(n: int, m: int) -> PartitionBudget:
    """How many generic ``n x m`` partitions supply enough equations.

    ``required = ceil(((nm)^2 - 1) / (n^2 + m^2 - 2))``; ``asymptotic`` is the
    large-``m`` estimate ``(1/n^2 + 1/m^2)^-1``.
    """
    num = (n * m) ** 2 - 1
    den = n * n + m * m - 2
    if den <= 0:
        raise ValueError("a 1 x 1 partition carries no equations")
    return PartitionBudget(
        required=max(1, -(-num // den)),
        ratio=num / den,
        asymptotic=1.0 / (1.0 / n**2 + 1.0 / m**2),
    )


def _triu(dim):
    return np.triu_indices(dim, k=1)


def hermitian_to_vector(h: np.ndarray) -> np.ndarray:
    """``[diag, Re(upper), Im(upper)]`` of a Hermitian matrix."""
    iu = _triu(h.shape[0])
    return np.concatenate([np.real(np.diag(h)), h[iu].real, h[iu].imag])


def vector_to_hermitian(x: np.ndarray, dim: int) -> np.ndarray:
    iu = _triu(dim)
    k = len(iu[0])
    h = np.zeros((dim, dim), dtype=complex)
    h[iu] = x[dim:dim + k] + 1j * x[dim + k:]
    h = h + h.conj().T
    h[np.diag_indices(dim)] = x[:dim]
    return h


def _row(m: np.ndarray) -> np.ndarray:
    # coefficients of Tr(rho M) in the hermitian_to_vector parameterisation
    iu = _triu(m.shape[0])
    return np.concatenate([np.real(np.diag(m)), 2 * m[iu].real, 2 * m[iu].imag])


@dataclass(frozen=True, eq=False)
class ReconstructionSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    dim: int
    rank: int
    condition: float
    equation_counts: list = field(default_factory=list)

    @property
    def n_unknowns(self) -> int:
        return self.dim**2

    @property
    def underdetermined(self) -> bool:
        return self.rank < self.n_unknowns


def _rank_and_condition(a: np.ndarray) -> tuple[int, float]:
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, math.inf
    nz = s[s > RANK_RTOL * s[0]]
    return len(nz), float(nz[0] / nz[-1])


def assemble_system(
    partitions: Sequence[Partition],
    reduced_targets: Sequence[tuple[np.ndarray, np.ndarray]],
    observable_bases: Sequence[tuple[Sequence, Sequence]] | None = None,
    consistency_tol: float = CONSISTENCY_TOL,
) -> ReconstructionSystem:
    """Stack the linear equations contributed by every partition.

    ``observable_bases[k]`` is a pair (left basis, right basis) for partition
    ``k``; by default the generalised Gell-Mann bases are used, giving
    ``(n^2 - 1) + (m^2 - 1)`` equations per partition.  A final row fixes
    the trace to one.

    Raises
    ------
    InconsistentData
        If the system is overdetermined and its least-squares residual
        exceeds ``consistency_tol``.
    """
    if len(partitions) != len(reduced_targets):
        raise ValueError("one pair of reduced targets per partition")
    if not partitions:
        raise ValueError("need at least one partition")
    dim = partitions[0].split.dim
    rows, rhs, counts = [], [], []
    for k, (p, (r1, r2)) in enumerate(zip(partitions, reduced_targets)):
        if p.split.dim != dim:
            raise DimensionError("all partitions must factor the same global space")
        n, m = p.split.dim_left, p.split.dim_right
        if observable_bases is None:
            b1, b2 = gell_mann_basis(n), gell_mann_basis(m)
        else:
            b1, b2 = observable_bases[k]
        r1 = np.asarray(r1, dtype=complex)
        r2 = np.asarray(r2, dtype=complex)
        if r1.shape != (n, n) or r2.shape != (m, m):
            raise DimensionError(f"reduced targets of partition {k} have wrong shape")
        for side, basis, red in (("left", b1, r1), ("right", b2, r2)):
            for o in basis:
                rows.append(_row(p.lift(np.asarray(o, dtype=complex), side)))
                rhs.append(float(np.real(np.einsum("ij,ji->", red, o))))
        counts.append(len(b1) + len(b2))
    rows.append(_row(np.eye(dim, dtype=complex)))
    rhs.append(1.0)
    a, b = np.array(rows), np.array(rhs)
    rank, cond = _rank_and_condition(a)
    if a.shape[0] > rank:
        x, *_ = np.linalg.lstsq(a, b, rcond=RANK_RTOL)
        res = float(np.linalg.norm(a @ x - b))
        if res > consistency_tol:
            raise InconsistentData(f"targets are mutually inconsistent (residual {res:.3e})")
    return ReconstructionSystem(a, b, dim, rank, cond, counts)


@dataclass(frozen=True, eq=False)
class Reconstruction:
    rho: np.ndarray
    residual: float
    rank: int
    underdetermined: bool

    def error(self, truth) -> float:
        return float(np.max(np.abs(self.rho - np.asarray(truth))))


def solve_reconstruction(system: ReconstructionSystem) -> Reconstruction:
    """Minimum-norm least-squares estimate of the global Hermitian matrix."""
    x, *_ = np.linalg.lstsq(system.matrix, system.rhs, rcond=RANK_RTOL)
    res = float(np.linalg.norm(system.matrix @ x - system.rhs))
    return Reconstruction(
        rho=vector_to_hermitian(x, system.dim),
        residual=res,
        rank=system.rank,
        underdetermined=system.underdetermined,
    )


@dataclass(frozen=True, eq=False)
class SubsystemVerdict:
    """Entrywise convergence verdicts for both reduced series (and optionally the global one)."""

    left: np.ndarray
    right: np.ndarray
    left_fluctuation: np.ndarray
    right_fluctuation: np.ndarray
    global_converged: np.ndarray | None = None

    @property
    def left_converged(self) -> bool:
        return bool(self.left.all())

    @property
    def right_converged(self) -> bool:
        return bool(self.right.all())

    def diagonal_converged(self, side: str) -> bool:
        return bool(np.diag(getattr(self, side)).all())

    def offdiagonal_converged(self, side: str) -> bool:
        v = getattr(self, side)
        return bool(v[~np.eye(v.shape[0], dtype=bool)].all())

    @property
    def implication_holds(self) -> bool | None:
        """Global convergence of every entry implies convergence of both reduced states."""
        if self.global_converged is None:
            return None
        if not self.global_converged.all():
            return True
        return self.left_converged and self.right_converged


def _entrywise(t, series, threshold, mode, min_samples):
    d = series.shape[1]
    ok = np.zeros((d, d), dtype=bool)
    fl = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            v: ConvergenceVerdict = weak_limit_probe(
                t, series[:, i, j], threshold, mode=mode, min_samples=min_samples
            )
            ok[i, j], fl[i, j] = v.converged, v.tail_fluctuation
    return ok, fl


def subsystem_convergence_check(
    global_series: Iterable[tuple[float, np.ndarray]],
    p: Partition,
    threshold: float = 1e-3,
    mode: str = "raw",
    check_global: bool = True,
    min_samples: int = 8,
) -> SubsystemVerdict:
    """Run the weak-limit probe on every entry of both reduced states.

    ``global_series`` may be a generator; global matrices are only retained
    when ``check_global`` is true.
    """
    ts, left, right, full = [], [], [], []
    for t, rho in global_series:
        rho = np.asarray(rho, dtype=complex)
        r1, r2 = reduced_final_states(rho, p)
        ts.append(t)
        left.append(r1)
        right.append(r2)
        if check_global:
            full.append(rho)
    if len(ts) < min_samples:
        raise InsufficientData(f"need at least {min_samples} time points, got {len(ts)}")
    t = np.array(ts, dtype=float)
    lo, lf = _entrywise(t, np.array(left), threshold, mode, min_samples)
    ro, rf = _entrywise(t, np.array(right), threshold, mode, min_samples)
    go = _entrywise(t, np.array(full), threshold, mode, min_samples)[0] if check_global else None
    return SubsystemVerdict(lo, ro, lf, rf, go)

"""Central spin coupled to ``N`` environment spins by ``sigma_z sigma_z`` terms.

Conventions
-----------
* hbar = 1; couplings ``g_i`` are energies and inverse times.
* System basis ``|0>, |1>``; environment basis ``|up> = index 0``,
  ``|down> = index 1``.  In the full state vector the system is the most
  significant factor, followed by spins ``1..N``.
* Branch states follow
  ``|E_0(t)> = |E_1(-t)> = (x)_i (alpha_i e^{+i g_i t/2}|up> + beta_i e^{-i g_i t/2}|down>)``
  so the decoherence factor is ``r(t) = <E_1|E_0> = prod_i (|alpha_i|^2 e^{i g_i t} + |beta_i|^2 e^{-i g_i t})``.

Closed forms are vectorised over ``t``: scalars give scalars, arrays give
arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DimensionError, ResourceLimit, StateError

NORM_TOL = 1e-12
MAX_BRUTE_FORCE_N = 14

__all__ = [
    "SpinBathParams",
    "EnvObservableSpec",
    "sample_environment",
    "decoherence_factor",
    "modulus_sq_factor",
    "modulus_sq_factors",
    "factor_lower_bounds",
    "gamma0",
    "gamma1",
    "expectation_general",
    "expectation_general_as_printed",
    "expectation_case_a",
    "expectation_case_a_as_printed",
    "expectation_case_b",
    "expectation_case_b_as_printed",
    "reduced_system_state",
    "reduced_env_spin_state",
    "brute_force_evolve",
    "branch_states",
    "apply_product_operator",
    "energy_diagonal",
]


@dataclass(frozen=True, eq=False)
class SpinBathParams:
    """Couplings and initial amplitudes of the product initial state."""

    a: complex
    b: complex
    g: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=complex))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=complex))
        if g.ndim != 1 or not (g.shape == alpha.shape == beta.shape):
            raise DimensionError("g, alpha, beta must be 1-d arrays of equal length")
        if abs(abs(self.a) ** 2 + abs(self.b) ** 2 - 1.0) > NORM_TOL:
            raise StateError("|a|^2 + |b|^2 must equal 1")
        bad = np.abs(np.abs(alpha) ** 2 + np.abs(beta) ** 2 - 1.0) > NORM_TOL
        if np.any(bad):
            raise StateError(f"environment amplitudes not normalised at {np.flatnonzero(bad)}")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def N(self) -> int:
        return self.g.shape[0]

    @property
    def p_up(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def p_down(self) -> np.ndarray:
        return np.abs(self.beta) ** 2

    def with_system(self, a, b) -> "SpinBathParams":
        return replace(self, a=a, b=b)


@dataclass(frozen=True, eq=False)
class EnvObservableSpec:
    """Product observable ``s (x) eps_1 (x) ... (x) eps_N``.

    ``s`` is indexed ``[s_row, s_col]`` over ``|0>, |1>`` and each ``eps[i]``
    over ``|up>, |down>``, so ``eps[i][0, 1]`` is the up-down element.
    """

    s: np.ndarray
    eps: np.ndarray = field(default=None)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=complex)
        eps = np.asarray(self.eps, dtype=complex)
        if s.shape != (2, 2):
            raise DimensionError("system block must be 2x2")
        if eps.ndim != 3 or eps.shape[1:] != (2, 2):
            raise DimensionError("eps must have shape (N, 2, 2)")
        if not np.allclose(s, s.conj().T, atol=1e-12):
            raise StateError("system block is not Hermitian")
        if not np.allclose(eps, np.conj(np.swapaxes(eps, 1, 2)), atol=1e-12):
            raise StateError("environment blocks are not Hermitian")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "eps", eps)

    @property
    def N(self) -> int:
        return self.eps.shape[0]

    @classmethod
    def system_only(cls, s, N: int) -> "EnvObservableSpec":
        return cls(s=s, eps=np.broadcast_to(np.eye(2), (N, 2, 2)).copy())


def sample_environment(
    N: int,
    seed: int,
    coupling_dist: dict | Callable | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``(g, alpha, beta)`` for ``N`` environment spins.

    ``|alpha_i|^2`` is uniform on [0, 1] and both phases are uniform on
    [0, 2 pi).  ``coupling_dist`` is either a callable ``f(rng, N)`` or a
    dict ``{"kind": "uniform", "low": 0.0, "high": 1.0}`` (the default) or
    ``{"kind": "constant", "value": ...}``.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, N)
    phi = rng.uniform(0.0, 2 * np.pi, N)
    chi = rng.uniform(0.0, 2 * np.pi, N)
    alpha = np.sqrt(u) * np.exp(1j * phi)
    beta = np.sqrt(1.0 - u) * np.exp(1j * chi)
    if callable(coupling_dist):
        g = np.asarray(coupling_dist(rng, N), dtype=float)
    else:
        spec = {"kind": "uniform", "low": 0.0, "high": 1.0}
        spec.update(coupling_dist or {})
        if spec["kind"] == "uniform":
            g = rng.uniform(spec["low"], spec["high"], N)
        elif spec["kind"] == "constant":
            g = np.full(N, float(spec["value"]))
        else:
            raise ValueError(f"unknown coupling distribution {spec['kind']!r}")
    return g, alpha, beta


def _phases(p: SpinBathParams, t):
    t = np.asarray(t, dtype=float)
    return t, np.exp(1j * np.multiply.outer(t, p.g))


def decoherence_factor(p: SpinBathParams, t):
    """``r(t) = prod_i (|alpha_i|^2 e^{i g_i t} + |beta_i|^2 e^{-i g_i t})``."""
    t, e = _phases(p, t)
    return np.prod(p.p_up * e + p.p_down * e.conj(), axis=-1)


def modulus_sq_factors(p: SpinBathParams, t) -> np.ndarray:
    """Per-spin factors ``|alpha|^4 + |beta|^4 + 2|alpha|^2|beta|^2 cos(2 g t)``, shape ``t.shape + (N,)``.

    Evaluated as ``1 - 4 |alpha|^2 |beta|^2 sin^2(g t)`` (equal under the
    normalisation constraint), which is exactly one at ``t = 0``.
    """
    t = np.asarray(t, dtype=float)
    return 1.0 - 4 * p.p_up * p.p_down * np.sin(np.multiply.outer(t, p.g)) ** 2


def modulus_sq_factor(p: SpinBathParams, t):
    return np.prod(modulus_sq_factors(p, t), axis=-1)


def factor_lower_bounds(p: SpinBathParams) -> np.ndarray:
    """Minimum over ``t`` of each per-spin factor, ``(2|alpha_i|^2 - 1)^2``."""
    return (2 * p.p_up - 1) ** 2


def _check_spec(p: SpinBathParams, spec: EnvObservableSpec) -> None:
    if spec.N != p.N:
        raise DimensionError(f"observable has {spec.N} environment blocks, model has {p.N}")


def gamma0(p: SpinBathParams, spec: EnvObservableSpec, t):
    """Diagonal-branch environment factor ``<E_0(t)| (x) eps_i |E_0(t)>``."""
    _check_spec(p, spec)
    t, e = _phases(p, t)
    up, dn, ud = spec.eps[:, 0, 0].real, spec.eps[:, 1, 1].real, spec.eps[:, 0, 1]
    c = p.alpha.conj() * p.beta * ud
    f = p.p_up * up + p.p_down * dn + c * e.conj() + c.conj() * e
    return np.prod(f, axis=-1).real


def gamma1(p: SpinBathParams, spec: EnvObservableSpec, t):
    """Cross-branch environment factor ``<E_1(t)| (x) eps_i |E_0(t)>``."""
    _check_spec(p, spec)
    t, e = _phases(p, t)
    up, dn, ud = spec.eps[:, 0, 0].real, spec.eps[:, 1, 1].real, spec.eps[:, 0, 1]
    c = p.alpha.conj() * p.beta * ud
    f = p.p_up * up * e + p.p_down * dn * e.conj() + c + c.conj()
    return np.prod(f, axis=-1)


def expectation_general(p: SpinBathParams, spec: EnvObservableSpec, t):
    """Exact ``<psi(t)| s (x) eps_1 (x) ... |psi(t)>``.

    The ``|b|^2`` branch sees the environment factor at ``-t``; the two
    diagonal branches only coincide when every ``eps_i`` is diagonal.
    """
    s = spec.s
    out = (
        abs(p.a) ** 2 * s[0, 0].real * gamma0(p, spec, t)
        + abs(p.b) ** 2 * s[1, 1].real * gamma0(p, spec, -np.asarray(t, dtype=float))
        + 2 * np.real(p.a * np.conj(p.b) * s[1, 0] * gamma1(p, spec, t))
    )
    return out


def expectation_general_as_printed(p: SpinBathParams, spec: EnvObservableSpec, t):
    """Literal ``(|a|^2 s00 + |b|^2 s11) Gamma0(t) + 2 Re[a b* s10 Gamma1(t)]``.

    Agrees with :func:`expectation_general` only when the environment blocks
    carry no ``t -> -t`` asymmetry (e.g. diagonal ``eps`` or ``s11 = 0``).
    """
    s = spec.s
    return (abs(p.a) ** 2 * s[0, 0].real + abs(p.b) ** 2 * s[1, 1].real) * gamma0(
        p, spec, t
    ) + 2 * np.real(p.a * np.conj(p.b) * s[1, 0] * gamma1(p, spec, t))


def expectation_case_a(p: SpinBathParams, s, t):
    """``<(s (x) I)>`` = ``|a|^2 s00 + |b|^2 s11 + 2 Re[a b* s10 r(t)]``."""
    s = np.asarray(s, dtype=complex)
    static = abs(p.a) ** 2 * s[0, 0].real + abs(p.b) ** 2 * s[1, 1].real
    return static + 2 * np.real(p.a * np.conj(p.b) * s[1, 0] * decoherence_factor(p, t))


def expectation_case_a_as_printed(p: SpinBathParams, s, t):
    """Same static part but with ``Re[a b* s10 r(t)]`` (no factor two)."""
    s = np.asarray(s, dtype=complex)
    static = abs(p.a) ** 2 * s[0, 0].real + abs(p.b) ** 2 * s[1, 1].real
    return static + np.real(p.a * np.conj(p.b) * s[1, 0] * decoherence_factor(p, t))


def _case_b_terms(p: SpinBathParams, j: int, eps_j):
    if not 1 <= j <= p.N:
        raise IndexError(f"particle index {j} outside 1..{p.N}")
    eps_j = np.asarray(eps_j, dtype=complex)
    if eps_j.shape != (2, 2) or not np.allclose(eps_j, eps_j.conj().T, atol=1e-12):
        raise StateError("eps_j must be a 2x2 Hermitian matrix")
    al, be, g = p.alpha[j - 1], p.beta[j - 1], p.g[j - 1]
    return al, be, g, eps_j[0, 0].real, eps_j[1, 1].real, eps_j[0, 1], eps_j[1, 0]


def expectation_case_b(p: SpinBathParams, j: int, eps_j, t):
    """Exact ``<I (x) ... eps_j ... (x) I>`` for environment spin ``j`` (1-based).

    Written as the sum of the two branch contributions::

        |a|^2 (|al|^2 e_uu + |be|^2 e_dd + al* be e_ud e^{-igt} + al be* e_du e^{+igt})
      + |b|^2 (|al|^2 e_uu + |be|^2 e_dd + al* be e_ud e^{+igt} + al be* e_du e^{-igt})
    """
    al, be, g, uu, dd, ud, du = _case_b_terms(p, j, eps_j)
    e = np.exp(1j * g * np.asarray(t, dtype=float))
    static = abs(al) ** 2 * uu + abs(be) ** 2 * dd
    line0 = static + np.conj(al) * be * ud / e + al * np.conj(be) * du * e
    line1 = static + np.conj(al) * be * ud * e + al * np.conj(be) * du / e
    return np.real(abs(p.a) ** 2 * line0 + abs(p.b) ** 2 * line1)


def expectation_case_b_as_printed(p: SpinBathParams, j: int, eps_j, t):
    """Two-line expression with coherence coefficients ``al be* e_ud`` and ``al* be e_du``.

    Coincides with :func:`expectation_case_b` exactly when ``al be*`` is
    real; otherwise the coherence term carries the wrong phase.
    """
    al, be, g, uu, dd, ud, du = _case_b_terms(p, j, eps_j)
    e = np.exp(1j * g * np.asarray(t, dtype=float))
    static = abs(al) ** 2 * uu + abs(be) ** 2 * dd
    line0 = static + al * np.conj(be) * ud / e + np.conj(al) * be * du * e
    line1 = static + al * np.conj(be) * ud * e + np.conj(al) * be * du / e
    return np.real(abs(p.a) ** 2 * line0 + abs(p.b) ** 2 * line1)


def reduced_system_state(p: SpinBathParams, t) -> np.ndarray:
    """Reduced state of the central spin, shape ``t.shape + (2, 2)``."""
    r = decoherence_factor(p, t)
    c = p.a * np.conj(p.b) * r
    out = np.empty(np.shape(r) + (2, 2), dtype=complex)
    out[..., 0, 0] = abs(p.a) ** 2
    out[..., 1, 1] = abs(p.b) ** 2
    out[..., 0, 1] = c
    out[..., 1, 0] = np.conj(c)
    return out


def reduced_env_spin_state(p: SpinBathParams, j: int, t) -> np.ndarray:
    """Reduced state of environment spin ``j`` (1-based), shape ``t.shape + (2, 2)``."""
    if not 1 <= j <= p.N:
        raise IndexError(f"particle index {j} outside 1..{p.N}")
    al, be, g = p.alpha[j - 1], p.beta[j - 1], p.g[j - 1]
    e = np.exp(1j * g * np.asarray(t, dtype=float))
    # <up|rho|down> = sum over branches of amplitude_up * conj(amplitude_down)
    c = al * np.conj(be) * (abs(p.a) ** 2 * e + abs(p.b) ** 2 / e)
    out = np.empty(np.shape(e) + (2, 2), dtype=complex)
    out[..., 0, 0] = abs(al) ** 2
    out[..., 1, 1] = abs(be) ** 2
    out[..., 0, 1] = c
    out[..., 1, 0] = np.conj(c)
    return out


def energy_diagonal(p: SpinBathParams) -> np.ndarray:
    """Diagonal of the generator whose propagator ``exp(-i H t)`` gives the branch phases.

    Element ``(s, z_1..z_N)`` equals ``-(1/2) s_z sum_i g_i z_i`` with
    ``s_z, z_i = +1`` for ``|0>``/``|up>`` and ``-1`` for ``|1>``/``|down>``.
    """
    z = np.array([1.0, -1.0])
    env = np.zeros(1)
    for gi in p.g:
        env = np.add.outer(env, gi * z).reshape(-1)
    return -0.5 * np.concatenate([env, -env])


def _initial_state(p: SpinBathParams) -> np.ndarray:
    env = np.ones(1, dtype=complex)
    for al, be in zip(p.alpha, p.beta):
        env = np.kron(env, np.array([al, be]))
    return np.concatenate([p.a * env, p.b * env])


def brute_force_evolve(p: SpinBathParams, t: float) -> np.ndarray:
    """Full ``2^(N+1)`` state vector at time ``t`` from exact diagonal phases.

    Independent of the closed forms: builds the product initial state
    explicitly and multiplies by ``exp(-i E t)`` elementwise.
    """
    if p.N > MAX_BRUTE_FORCE_N:
        raise ResourceLimit(f"brute force limited to N <= {MAX_BRUTE_FORCE_N}, got {p.N}")
    return _initial_state(p) * np.exp(-1j * energy_diagonal(p) * float(t))


def branch_states(p: SpinBathParams, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Environment branch vectors ``(|E_0(t)>, |E_1(t)>)`` extracted from brute-force runs."""
    half = 2**p.N
    e0 = brute_force_evolve(p.with_system(1.0, 0.0), t)[:half]
    e1 = brute_force_evolve(p.with_system(0.0, 1.0), t)[half:]
    return e0, e1


def apply_product_operator(ops, vec: np.ndarray) -> np.ndarray:
    """Apply ``ops[0] (x) ops[1] (x) ...`` (each 2x2) to ``vec`` without forming the product."""
    ops = list(ops)
    k = len(ops)
    if vec.shape != (2**k,):
        raise DimensionError(f"vector of length {vec.shape} for {k} factors")
    psi = vec.reshape((2,) * k)
    for axis, op in enumerate(ops):
        psi = np.moveaxis(np.tensordot(op, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)

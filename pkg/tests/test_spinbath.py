import numpy as np
import pytest
from functools import reduce
from hypothesis import given, strategies as st
from scipy.linalg import expm

from declab import spinbath as sb
from declab.errors import DimensionError, ResourceLimit, StateError
from declab.framework import weak_limit_probe
from declab.hilbert import PAULI_X, PAULI_Z, FactorSplit, partial_trace, random_observable

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def make_params(n, seed, a=None, b=None, coupling=None):
    g, al, be = sb.sample_environment(n, seed, coupling)
    if a is None:
        r = np.random.default_rng([seed, 99])
        v = r.standard_normal(2) + 1j * r.standard_normal(2)
        a, b = v / np.linalg.norm(v)
    return sb.SpinBathParams(a, b, g, al, be)


def random_spec(n, rng):
    return sb.EnvObservableSpec(
        random_observable(2, rng), np.array([random_observable(2, rng) for _ in range(n)])
    )


def dense_state(p, t):
    """Independent oracle: dense Hamiltonian from Kronecker products, exponentiated."""
    n = p.N
    ident = [np.eye(2)] * n
    h_env = np.zeros((2**n, 2**n))
    for i, gi in enumerate(p.g):
        ops = list(ident)
        ops[i] = PAULI_Z.real
        h_env = h_env + gi * reduce(np.kron, ops, np.eye(1))
    # branch |0> picks up e^{+i g t/2} on |up>: H = -(1/2) sigma_z (x) sum_i g_i Z_i
    h = -0.5 * np.kron(PAULI_Z.real, h_env)
    psi0 = reduce(np.kron, [np.array([a, b]) for a, b in zip(p.alpha, p.beta)], np.array([p.a, p.b]))
    return expm(-1j * h * t) @ psi0


def dense_op(ops):
    return reduce(np.kron, ops, np.eye(1))


# ---------------------------------------------------------------- parameters


def test_params_validation():
    with pytest.raises(StateError):
        sb.SpinBathParams(1.0, 1.0, [0.5], [1.0], [0.0])
    with pytest.raises(StateError):
        sb.SpinBathParams(1.0, 0.0, [0.5], [1.0], [1.0])
    with pytest.raises(DimensionError):
        sb.SpinBathParams(1.0, 0.0, [0.5, 0.2], [1.0], [0.0])


def test_spec_validation():
    with pytest.raises(StateError):
        sb.EnvObservableSpec(np.array([[0, 1], [0, 0]]), np.eye(2)[None])
    with pytest.raises(StateError):
        sb.EnvObservableSpec(PAULI_X, np.array([[[0, 1j], [1j, 0]]]))
    with pytest.raises(DimensionError):
        sb.EnvObservableSpec(np.eye(3), np.eye(2)[None])


def test_sample_environment_deterministic_and_normalised():
    a = sb.sample_environment(50, 3)
    b = sb.sample_environment(50, 3)
    for x, y in zip(a, b):
        assert x.tobytes() == y.tobytes()
    g, al, be = a
    np.testing.assert_allclose(np.abs(al) ** 2 + np.abs(be) ** 2, 1.0, atol=1e-15)
    assert np.all((g >= 0) & (g <= 1))
    assert not np.array_equal(sb.sample_environment(50, 4)[0], g)


def test_sample_environment_fourth_moment():
    _, al, be = sb.sample_environment(100_000, 11)
    # integral of u^2 + (1-u)^2 over [0, 1] is 2/3
    assert np.mean(np.abs(al) ** 4 + np.abs(be) ** 4) == pytest.approx(2 / 3, abs=0.01)


def test_sample_environment_coupling_specs():
    g, _, _ = sb.sample_environment(5, 0, {"kind": "constant", "value": 0.25})
    np.testing.assert_array_equal(g, 0.25)
    g, _, _ = sb.sample_environment(5, 0, lambda r, n: np.arange(n))
    np.testing.assert_array_equal(g, np.arange(5))
    with pytest.raises(ValueError):
        sb.sample_environment(5, 0, {"kind": "cauchy"})
    assert sb.sample_environment(0, 0)[0].shape == (0,)


# ---------------------------------------------------------------- decoherence factor


def test_r_without_environment():
    p = sb.SpinBathParams(1.0, 0.0, [], [], [])
    np.testing.assert_array_equal(sb.decoherence_factor(p, np.linspace(0, 10, 5)), 1.0)


def test_aligned_environment_keeps_modulus():
    g = np.array([0.3, 0.7, 1.1])
    p = sb.SpinBathParams(1.0, 0.0, g, np.exp(1j * g), np.zeros(3))
    t = np.linspace(0, 50, 101)
    np.testing.assert_allclose(np.abs(sb.decoherence_factor(p, t)) ** 2, 1.0, atol=1e-14)
    np.testing.assert_allclose(sb.modulus_sq_factor(p, t), 1.0, atol=1e-14)


def test_single_spin_quarter_period():
    h = 2**-0.5
    p = sb.SpinBathParams(h, h, [1.0], [h], [h])
    assert abs(sb.decoherence_factor(p, np.pi / 4)) ** 2 == pytest.approx(0.5, abs=1e-15)
    e0, e1 = sb.branch_states(p, np.pi / 4)
    assert abs(np.vdot(e1, e0)) ** 2 == pytest.approx(0.5, abs=1e-15)


def test_modulus_sq_at_zero_is_one():
    p = make_params(30, 5)
    assert sb.modulus_sq_factor(p, 0.0) == 1.0


def test_factor_lower_bound_attained():
    p = make_params(6, 1)
    for i, gi in enumerate(p.g):
        f = sb.modulus_sq_factors(p, np.pi / (2 * gi))[i]
        assert f == pytest.approx(sb.factor_lower_bounds(p)[i], abs=1e-12)


@given(seeds)
def test_modulus_sq_matches_r(seed):
    p = make_params(10, seed)
    t = np.random.default_rng(seed).uniform(0, 100, 100)
    np.testing.assert_allclose(sb.modulus_sq_factor(p, t), np.abs(sb.decoherence_factor(p, t)) ** 2, atol=1e-12)


@given(st.integers(1, 30), seeds)
def test_factor_bounds_property(n, seed):
    p = make_params(n, seed)
    t = np.random.default_rng(seed).uniform(0, 200, 64)
    f = sb.modulus_sq_factors(p, t)
    lo = sb.factor_lower_bounds(p)
    assert np.all(f >= lo - 1e-12) and np.all(f <= 1 + 1e-12)


def test_commensurate_recurrence():
    g0 = 0.37
    p = make_params(12, 8, coupling=lambda r, n: g0 * r.integers(1, 6, n))
    t = np.linspace(0, 20, 41)
    np.testing.assert_allclose(
        sb.decoherence_factor(p, t + 2 * np.pi / g0), sb.decoherence_factor(p, t), atol=1e-10
    )


def test_large_bath_decays():
    p = make_params(1000, 21)
    t = np.linspace(1, 100, 500)
    assert np.max(sb.modulus_sq_factor(p, t)) < 1e-8


# ---------------------------------------------------------------- brute force


def test_brute_force_matches_dense_oracle(rng):
    p = make_params(6, 2)
    for t in (0.0, 0.7, 13.1):
        np.testing.assert_allclose(sb.brute_force_evolve(p, t), dense_state(p, t), atol=1e-12)


def test_brute_force_initial_state_and_norm():
    p = make_params(5, 4)
    psi0 = reduce(np.kron, [np.array([a, b]) for a, b in zip(p.alpha, p.beta)], np.array([p.a, p.b]))
    np.testing.assert_allclose(sb.brute_force_evolve(p, 0.0), psi0, atol=1e-15)
    assert np.linalg.norm(sb.brute_force_evolve(p, 37.0)) == pytest.approx(1.0, abs=1e-12)


def test_brute_force_cap():
    with pytest.raises(ResourceLimit):
        sb.brute_force_evolve(make_params(15, 0), 1.0)


def test_branch_state_phases():
    p = make_params(4, 6)
    t = 2.3
    e0, e1 = sb.branch_states(p, t)
    expect0 = reduce(np.kron, [np.array([a * np.exp(0.5j * g * t), b * np.exp(-0.5j * g * t)])
                               for a, b, g in zip(p.alpha, p.beta, p.g)])
    expect1 = reduce(np.kron, [np.array([a * np.exp(-0.5j * g * t), b * np.exp(0.5j * g * t)])
                               for a, b, g in zip(p.alpha, p.beta, p.g)])
    np.testing.assert_allclose(e0, expect0, atol=1e-14)
    np.testing.assert_allclose(e1, expect1, atol=1e-14)


def test_single_branch_only_global_phase():
    p = make_params(5, 3).with_system(1.0, 0.0)
    t = np.linspace(0, 30, 7)
    rhos = sb.reduced_system_state(p, t)
    np.testing.assert_allclose(rhos, np.broadcast_to(np.diag([1.0, 0.0]), rhos.shape), atol=0)
    for tt in t:
        psi = sb.brute_force_evolve(p, tt)
        assert np.allclose(psi[32:], 0)


def test_overlap_equals_r_n10():
    p = make_params(10, 17)
    for t in np.linspace(0, 40, 9):
        e0, e1 = sb.branch_states(p, t)
        assert np.vdot(e1, e0) == pytest.approx(sb.decoherence_factor(p, t), abs=1e-12)


def test_apply_product_operator_matches_kron(rng):
    ops = [random_observable(2, rng) for _ in range(4)]
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    np.testing.assert_allclose(sb.apply_product_operator(ops, v), dense_op(ops) @ v, atol=1e-13)
    with pytest.raises(DimensionError):
        sb.apply_product_operator(ops, v[:8])


# ---------------------------------------------------------------- expectation values


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_general_expectation_vs_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    p = make_params(8, seed)
    spec = random_spec(8, rng)
    big = dense_op([spec.s] + list(spec.eps))
    for t in (0.0, 1.3, 9.7):
        psi = dense_state(p, t)
        assert sb.expectation_general(p, spec, t) == pytest.approx(np.vdot(psi, big @ psi).real, abs=1e-10)


def test_gamma_factors_vs_branch_overlaps(rng):
    p = make_params(7, 12)
    spec = random_spec(7, rng)
    big = dense_op(list(spec.eps))
    for t in (0.5, 4.0):
        e0, e1 = sb.branch_states(p, t)
        assert sb.gamma0(p, spec, t) == pytest.approx(np.vdot(e0, big @ e0).real, abs=1e-12)
        assert sb.gamma1(p, spec, t) == pytest.approx(np.vdot(e1, big @ e0), abs=1e-12)


def test_general_reduces_to_case_a(rng):
    p = make_params(9, 4)
    s = random_observable(2, rng)
    spec = sb.EnvObservableSpec.system_only(s, 9)
    t = np.linspace(0, 25, 50)
    np.testing.assert_allclose(sb.expectation_general(p, spec, t), sb.expectation_case_a(p, s, t), atol=1e-13)


def test_identity_observable_is_one():
    p = make_params(6, 9)
    spec = sb.EnvObservableSpec.system_only(np.eye(2), 6)
    np.testing.assert_allclose(sb.expectation_general(p, spec, np.linspace(0, 9, 10)), 1.0, atol=1e-14)


def test_general_dimension_error():
    p = make_params(3, 0)
    with pytest.raises(DimensionError):
        sb.expectation_general(p, sb.EnvObservableSpec.system_only(np.eye(2), 4), 1.0)


def test_printed_general_form_needs_time_reversed_branch(rng):
    # with off-diagonal eps and s11 != 0 the |b|^2 branch sees Gamma0(-t)
    p = make_params(5, 30)
    spec = random_spec(5, rng)
    t = np.linspace(0.5, 10, 20)
    psi = [dense_state(p, tt) for tt in t]
    big = dense_op([spec.s] + list(spec.eps))
    oracle = np.array([np.vdot(v, big @ v).real for v in psi])
    np.testing.assert_allclose(sb.expectation_general(p, spec, t), oracle, atol=1e-10)
    assert np.max(np.abs(sb.expectation_general_as_printed(p, spec, t) - oracle)) > 1e-3


def test_case_a_examples():
    p = make_params(8, 3, a=0.6, b=0.8)
    t = np.linspace(0, 10, 11)
    np.testing.assert_allclose(sb.expectation_case_a(p, PAULI_Z, t), 0.36 - 0.64, atol=1e-15)
    h = 2**-0.5
    q = make_params(8, 3, a=h, b=h)
    assert sb.expectation_case_a(q, PAULI_X, 0.0) == pytest.approx(1.0, abs=1e-14)
    psi = sb.brute_force_evolve(q, 0.0)
    assert np.vdot(psi, np.kron(PAULI_X, np.eye(256)) @ psi).real == pytest.approx(1.0, abs=1e-14)


def test_case_a_printed_form_is_off_by_factor_two():
    h = 2**-0.5
    p = make_params(8, 3, a=h, b=h)
    assert sb.expectation_case_a_as_printed(p, PAULI_X, 0.0) == pytest.approx(0.5, abs=1e-14)


def test_case_a_large_n_limit():
    p = make_params(5000, 7, a=0.6, b=0.8j)
    t = np.linspace(5, 100, 300)
    v = sb.expectation_case_a(p, PAULI_X, t)
    assert np.max(np.abs(v)) < 1e-6
    verdict = weak_limit_probe(t, v)
    assert verdict.converged and abs(verdict.limit_estimate) < 1e-6


def test_reduced_system_state_vs_partial_trace():
    p = make_params(8, 14)
    split = FactorSplit(2, 256)
    for t in (0.0, 2.5, 11.0):
        psi = sb.brute_force_evolve(p, t)
        np.testing.assert_allclose(
            sb.reduced_system_state(p, t), partial_trace(np.outer(psi, psi.conj()), split, "left"), atol=1e-10
        )


def test_reduced_system_state_final_diagonal():
    p = make_params(3000, 2, a=0.6, b=0.8)
    rho = sb.reduced_system_state(p, 80.0)
    np.testing.assert_allclose(rho, np.diag([0.36, 0.64]), atol=1e-12)


def test_reduced_env_spin_vs_partial_trace():
    p = make_params(6, 25)
    j = 4
    for t in (0.3, 6.0):
        psi = sb.brute_force_evolve(p, t)
        # move spin j to the front and trace the rest
        tens = psi.reshape((2,) * 7)
        tens = np.moveaxis(tens, j, 0).reshape(2, -1)
        np.testing.assert_allclose(sb.reduced_env_spin_state(p, j, t), tens @ tens.conj().T, atol=1e-12)


def test_case_b_examples(rng):
    p = make_params(6, 8)
    eps = np.diag([0.7, -0.2]).astype(complex)
    t = np.linspace(0, 30, 31)
    j = 3
    static = p.p_up[j - 1] * 0.7 - 0.2 * p.p_down[j - 1]
    np.testing.assert_allclose(sb.expectation_case_b(p, j, eps, t), static, atol=1e-14)
    eps = random_observable(2, rng)
    ops = [np.eye(2)] * 7
    ops[j] = eps
    psi0 = sb.brute_force_evolve(p, 0.0)
    assert sb.expectation_case_b(p, j, eps, 0.0) == pytest.approx(np.vdot(psi0, dense_op(ops) @ psi0).real, abs=1e-12)


def test_case_b_index_errors():
    p = make_params(3, 0)
    with pytest.raises(IndexError):
        sb.expectation_case_b(p, 0, PAULI_X, 1.0)
    with pytest.raises(IndexError):
        sb.expectation_case_b(p, 4, PAULI_X, 1.0)
    with pytest.raises(IndexError):
        sb.reduced_env_spin_state(p, 4, 1.0)


def test_case_b_printed_form_discrepancy():
    """The printed coherence coefficient is conjugated; only real alpha beta* agrees."""
    t = np.linspace(0, 20, 41)
    eps = np.array([[0.1, 0.4 - 0.3j], [0.4 + 0.3j, -0.5]])
    g = np.array([0.8, 0.3])
    complex_phase = sb.SpinBathParams(0.6, 0.8j, g, [0.6, 0.6], [0.8j, 0.8])
    real_phase = sb.SpinBathParams(0.6, 0.8j, g, [0.6, 0.6], [0.8, 0.8])
    for p, agrees in ((complex_phase, False), (real_phase, True)):
        ops = [np.eye(2), eps, np.eye(2)]
        oracle = np.array([np.vdot(v, dense_op(ops) @ v).real for v in (dense_state(p, tt) for tt in t)])
        np.testing.assert_allclose(sb.expectation_case_b(p, 1, eps, t), oracle, atol=1e-12)
        gap = np.max(np.abs(sb.expectation_case_b_as_printed(p, 1, eps, t) - oracle))
        print(f"printed case-b form, alpha beta* {'real' if agrees else 'complex'}: max gap {gap:.3e}")
        assert (gap < 1e-12) == agrees


@given(
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.95),
    st.floats(0.2, 2.0),
    st.floats(0.1, 1.0),
    st.floats(-np.pi, np.pi),
)
def test_case_b_never_settles(pa, pj, gj, eps_ud, phase):
    # real alpha_j beta_j*, generic system weights and a complex coupling element
    p = sb.SpinBathParams(np.sqrt(pa), np.sqrt(1 - pa), [gj], [np.sqrt(pj)], [np.sqrt(1 - pj)])
    eps = np.array([[0.0, eps_ud * np.exp(1j * phase)], [eps_ud * np.exp(-1j * phase), 0.0]])
    c = np.sqrt(pj * (1 - pj)) * eps_ud
    amp = 2 * c * np.sqrt(np.cos(phase) ** 2 + (2 * pa - 1) ** 2 * np.sin(phase) ** 2)
    t = np.linspace(0, 60 * np.pi / gj, 3000)
    v = weak_limit_probe(t, sb.expectation_case_b(p, 1, eps, t))
    if amp > 1e-2:
        assert not v.converged
        assert v.raw_fluctuation >= 0.5 * amp


def test_case_b_degenerate_amplitude_vanishes():
    # alpha* beta eps_ud purely imaginary with |a| = |b|: the two branch oscillations cancel
    h = 2**-0.5
    p = sb.SpinBathParams(h, h, [0.9], [0.6], [0.8])
    eps = np.array([[0, 1j], [-1j, 0]])
    v = sb.expectation_case_b(p, 1, eps, np.linspace(0, 50, 200))
    np.testing.assert_allclose(v, 0.0, atol=1e-15)
    assert weak_limit_probe(np.linspace(0, 50, 200), v).converged

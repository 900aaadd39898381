import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from declab import sid
from declab.errors import GridError, NumericalError, StateError


def small_setup(family="gaussian", n=301, spacing=0.05, **kw):
    grid = sid.EnergyGrid.from_spacing(spacing, n)
    center = 0.5 * grid.omega_max
    params = {"gaussian": {"sigma": 1.0}, "lorentzian": {"gamma": 0.4}}[family]
    params.update(kw)
    fam = sid.make_family(family, center=center, spread=1.0, **params)
    return grid, fam, *sid.gaussian_state_and_observable(grid, fam)


def trapz2_offdiag(state, obs, t):
    # independent oracle: nested 1-d trapezoids of the full phased integrand
    w = state.grid.omega
    integrand = np.conj(state.rho_kernel) * obs.O_kernel * np.exp(1j * np.subtract.outer(w, w) * t)
    inner = integrate.trapezoid(integrand, w, axis=1)
    return integrate.trapezoid(inner, w)


def test_grid_validation():
    with pytest.raises(GridError):
        sid.EnergyGrid(0.0, 1.0, 1)
    with pytest.raises(GridError):
        sid.EnergyGrid(1.0, 1.0, 10)
    with pytest.raises(GridError):
        sid.EnergyGrid(-1.0, 1.0, 10)
    g = sid.EnergyGrid.from_spacing(0.01, 4096)
    assert g.spacing == pytest.approx(0.01, rel=1e-12)
    assert g.refined(2).spacing == pytest.approx(0.005, rel=1e-12)


def test_state_validation():
    grid = sid.EnergyGrid(0.0, 1.0, 11)
    flat = np.ones(11)
    with pytest.raises(StateError):
        sid.VanHoveState(grid, 2 * flat, np.zeros((11, 11)))
    with pytest.raises(StateError):
        sid.VanHoveState(grid, np.where(np.arange(11) == 3, -1.0, 1.1), np.zeros((11, 11)))
    bad = np.zeros((11, 11), dtype=complex)
    bad[0, 1] = 1j
    with pytest.raises(StateError):
        sid.VanHoveState(grid, flat, bad)
    with pytest.raises(GridError):
        sid.VanHoveState(grid, flat, np.zeros((10, 10)))


def test_equilibrium_uniform_density():
    grid = sid.EnergyGrid(0.0, 1.0, 101)
    state = sid.VanHoveState(grid, np.ones(101), np.zeros((101, 101)))
    assert sid.equilibrium_expectation(state, sid.VanHoveObservable(grid, grid.omega, np.zeros((101, 101)))) == pytest.approx(0.5, abs=1e-14)
    assert sid.equilibrium_expectation(state, sid.VanHoveObservable(grid, np.ones(101), np.zeros((101, 101)))) == pytest.approx(1.0, abs=1e-14)


def test_zero_kernel_is_time_independent():
    grid, fam, state, _ = small_setup()
    obs = sid.VanHoveObservable(grid, grid.omega ** 2, np.zeros((grid.n_points,) * 2))
    t = np.linspace(0, 30, 13)
    vals = sid.expectation_vh(state, obs, t)
    np.testing.assert_allclose(vals, sid.equilibrium_expectation(state, obs), atol=1e-15)
    np.testing.assert_array_equal(sid.offdiag_decay_scan(state, obs, t), 0.0)


def test_t0_is_diagonal_plus_kernel_integral():
    grid, fam, state, obs = small_setup()
    full = sid.expectation_vh(state, obs, 0.0)
    expected = sid.equilibrium_expectation(state, obs) + trapz2_offdiag(state, obs, 0.0).real
    assert full == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("t", [0.3, 2.0, 7.5])
def test_offdiag_against_nested_trapezoid(t):
    grid, fam, state, obs = small_setup("lorentzian")
    assert sid.offdiag_term(state, obs, t) == pytest.approx(trapz2_offdiag(state, obs, t), abs=1e-12)


def test_diagonal_and_direct_methods_agree(rng):
    grid = sid.EnergyGrid.from_spacing(0.1, 120)
    k = rng.standard_normal((120, 120)) + 1j * rng.standard_normal((120, 120))
    k = 0.5 * (k + k.conj().T)
    o = rng.standard_normal((120, 120))
    o = o + o.T
    diag = np.ones(120) / (grid.weights.sum())
    state = sid.VanHoveState(grid, diag, k)
    obs = sid.VanHoveObservable(grid, grid.omega, o)
    t = np.linspace(0, 40, 57)
    np.testing.assert_allclose(
        sid.offdiag_term(state, obs, t), sid.offdiag_term(state, obs, t, method="direct"), atol=1e-10
    )
    with pytest.raises(ValueError):
        sid.offdiag_term(state, obs, t, method="fft")


@given(st.integers(0, 2**32 - 1))
def test_hermitian_kernels_give_real_values(seed):
    r = np.random.default_rng(seed)
    n = 40
    grid = sid.EnergyGrid(0.0, 4.0, n)
    k = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
    o = r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
    state = sid.VanHoveState(grid, np.full(n, 0.25), 0.5 * (k + k.conj().T))
    obs = sid.VanHoveObservable(grid, grid.omega, 0.5 * (o + o.conj().T))
    t = r.uniform(0, 50, 10)
    assert np.max(np.abs(sid.offdiag_term(state, obs, t).imag)) < 1e-8
    sid.expectation_vh(state, obs, t)


def test_imaginary_residue_raises():
    grid = sid.EnergyGrid(0.0, 1.0, 5)
    state = sid.VanHoveState(grid, np.ones(5), np.ones((5, 5)))
    obs = sid.VanHoveObservable(grid, np.ones(5), np.zeros((5, 5)))
    skew = np.zeros((5, 5), dtype=complex)
    skew[0, 0] = 1j
    object.__setattr__(obs, "O_kernel", skew)
    with pytest.raises(NumericalError):
        sid.expectation_vh(state, obs, 0.0)


def test_grid_mismatch():
    _, _, state, _ = small_setup()
    other = sid.EnergyGrid(0.0, 1.0, 301)
    obs = sid.VanHoveObservable(other, np.ones(301), np.zeros((301, 301)))
    with pytest.raises(GridError):
        sid.expectation_vh(state, obs, 1.0)
    with pytest.raises(GridError):
        sid.equilibrium_expectation(state, obs)


def test_gaussian_decay_matches_closed_form():
    grid, fam, state, obs = small_setup(n=1201, spacing=0.05)
    t = np.linspace(0, 5, 26)
    num = sid.offdiag_decay_scan(state, obs, t)
    np.testing.assert_allclose(num, fam.closed_form(t), rtol=1e-6)


def test_lorentzian_decay():
    grid, fam, state, obs = small_setup("lorentzian", n=2001, spacing=0.02, gamma=0.2)
    t = np.linspace(0, 25, 26)
    num = np.real(sid.offdiag_term(state, obs, t))
    np.testing.assert_allclose(num, fam.band_limited(t, grid), rtol=1e-4)
    # against the untruncated exponential only the band cut-off tail differs
    np.testing.assert_allclose(num, np.exp(-0.2 * t), rtol=0.05)


def test_scan_input_checks():
    _, _, state, obs = small_setup()
    with pytest.raises(ValueError):
        sid.offdiag_decay_scan(state, obs, [1.0, 0.5])
    with pytest.raises(ValueError):
        sid.offdiag_decay_scan(state, obs, [-1.0, 0.5])


def test_recurrence_time_examples():
    assert sid.recurrence_time(sid.EnergyGrid.from_spacing(0.01, 4096)) == pytest.approx(628.3185307179586)
    g = sid.EnergyGrid(0.0, 10.0, 1001)
    assert sid.recurrence_time(g.refined(2)) == pytest.approx(2 * sid.recurrence_time(g))


def test_periodicity_of_discretised_dynamics():
    grid, fam, state, obs = small_setup("lorentzian", n=801, spacing=0.05)
    t_r = sid.recurrence_time(grid)
    scan = sid.offdiag_decay_scan(state, obs, [0.0, t_r, 2 * t_r])
    assert abs(scan[1] - scan[0]) < 1e-6 and abs(scan[2] - scan[0]) < 1e-6


def test_refinement_leaves_early_decay_unchanged():
    coarse, fam, s1, o1 = small_setup(n=601, spacing=0.1)
    fine = coarse.refined(2)
    s2, o2 = sid.gaussian_state_and_observable(fine, fam)
    t = np.linspace(0, 4, 9)
    np.testing.assert_allclose(sid.offdiag_term(s1, o1, t).real, sid.offdiag_term(s2, o2, t).real, rtol=1e-8)


@pytest.mark.parametrize("family", ["gaussian", "lorentzian"])
def test_riemann_lebesgue_horizon(family):
    grid, fam, state, obs = small_setup(family, n=1601, spacing=0.05)
    t_r = sid.recurrence_time(grid)
    t = np.linspace(0, 0.5 * t_r, 1500)
    scan = sid.offdiag_decay_scan(state, obs, t)
    horizon = sid.decay_horizon(t, scan, 1e-4)
    assert horizon < 0.5 * t_r
    pre = scan[t < horizon]
    peaks = np.flatnonzero((pre[1:-1] >= pre[:-2]) & (pre[1:-1] >= pre[2:])) + 1
    start = peaks[-1] if len(peaks) else 0
    assert np.all(np.diff(pre[start:]) <= 1e-15)


def test_decay_horizon_edge_cases():
    t = np.arange(5.0)
    assert sid.decay_horizon(t, np.zeros(5)) == 0.0
    assert sid.decay_horizon(t, np.ones(5)) == np.inf
    assert sid.decay_horizon(t, np.array([1, 1, 0, 0, 0.0])) == 2.0


def test_evolution_only_rotates_kernel_phases():
    grid, fam, state, _ = small_setup("lorentzian", n=101)
    np.testing.assert_array_equal(state.evolved_kernel(0.0), state.rho_kernel)
    for t in (3.3, 250.0):
        # a unit-modulus phase changes the modulus by rounding only
        np.testing.assert_allclose(np.abs(state.evolved_kernel(t)), np.abs(state.rho_kernel), rtol=1e-15, atol=0)
    eq = state.equilibrium()
    np.testing.assert_array_equal(eq.rho_diag, state.rho_diag)


def test_shipped_kernels_fit_inside_band():
    grid = sid.EnergyGrid.from_spacing(0.01, 4096)
    fam = sid.make_family("gaussian", center=0.5 * grid.omega_max, spread=1.0, sigma=1.0)
    w = np.linspace(-20, 60, 80001)
    dens = fam.mean_density(w)
    outside = integrate.trapezoid(np.where((w < 0) | (w > grid.omega_max), dens, 0), w)
    assert outside < 1e-10
    with pytest.raises(ValueError):
        sid.make_family("cauchy", center=1, spread=1)


def test_sum_vs_integral_examples():
    lv = np.linspace(0.0005, 0.9995, 1000)
    s, i, d = sid.sum_vs_integral(lv, lambda w: np.ones_like(w))
    assert abs(d) < 1e-12 and s == pytest.approx(1.0)
    s, i, d = sid.sum_vs_integral(lv, lambda w: w**2)
    assert abs(d) < 1e-5
    assert i == pytest.approx(1 / 3, abs=1e-6)


def test_sum_vs_integral_second_order():
    errs = []
    for n in (100, 200, 400):
        lv = (np.arange(n) + 0.5) / n
        errs.append(abs(sid.sum_vs_integral(lv, np.exp, refine=256)[2]))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


def test_sum_vs_integral_sampled_and_errors():
    lv = np.linspace(0, 1, 11)
    s, i, d = sid.sum_vs_integral(lv, lv**2)
    assert i == pytest.approx(integrate.trapezoid(lv**2, lv))
    with pytest.raises(ValueError):
        sid.sum_vs_integral([1.0, 0.5], np.ones(2))
    with pytest.raises(ValueError):
        sid.sum_vs_integral(lv, np.ones(3))

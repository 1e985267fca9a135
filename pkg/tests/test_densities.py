import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weilpos import LOG2, densities as dens
from weilpos.specfun import sine_integral


def d2(fn, x, e=1e-3):
    return (-fn(x + 2 * e) + 16 * fn(x + e) - 30 * fn(x) + 16 * fn(x - e) - fn(x - 2 * e)) / (12 * e * e)


# -- delta -------------------------------------------------------------------

def test_delta_at_one():
    assert dens.delta(1.0) == pytest.approx(2 * (sine_integral(4 * math.pi) / (4 * math.pi) + 1), abs=1e-15)
    assert dens.delta(1.0) == pytest.approx(2.237484835, abs=1e-8)


@given(st.floats(0.01, 100.0))
def test_delta_symmetry(rho):
    assert dens.delta(1.0 / rho) == pytest.approx(dens.delta(rho), rel=1e-14)


def test_delta_large_rho_asymptotics():
    rho = 1e3
    assert abs(dens.delta(rho) - rho**-0.5) <= 5 * rho**-1.5


@pytest.mark.parametrize("rho", [1.0, 1.5, 2.0, 5.0])
def test_delta_matches_quadrature_oracle(rho):
    assert dens.delta(rho) == pytest.approx(dens.delta_oracle(rho), abs=1e-8)


def test_delta_oracle_on_log_grid():
    rho = np.logspace(0, 1, 50)
    assert max(abs(dens.delta(r) - dens.delta_oracle(r)) for r in rho) < 1e-8


def test_oracle_endpoint_contribution_bounded():
    a = 1e-6
    assert a * (1 - math.log(a)) < 2e-5


def test_delta_rejects_nonpositive():
    with pytest.raises(ValueError):
        dens.delta(0.0)


# -- tau ---------------------------------------------------------------------

def test_tau_examples():
    assert dens.tau_density(2.0) == pytest.approx(2 * math.sqrt(2) / 3, rel=1e-15)
    for r in (2.0, 3.7):
        assert dens.tau_density(1 / r) == pytest.approx(dens.tau_density(r), rel=1e-14)
    assert dens.tau_density(1 + 1e-6) > 1e5
    with pytest.raises(ValueError):
        dens.tau_density(1.0)


def test_delta_approaches_tau():
    rho = np.array([50.0, 200.0, 800.0])
    assert np.all(np.abs(dens.delta(rho) - dens.tau_density(rho)) < 1.2 * rho**-1.5 / math.pi**2 * 4)


# -- delta_hat ---------------------------------------------------------------

def test_delta_hat_even_and_decaying():
    t = np.array([0.3, 2.0, 7.5])
    assert np.array_equal(dens.delta_hat(t), dens.delta_hat(-t))
    assert abs(dens.delta_hat(50.0)) < 0.3


def test_delta_hat_stable_under_refinement():
    t = np.linspace(0, 10, 11)
    a = dens.delta_hat(t)
    b = dens.delta_hat(t, cutoff=4000.0, quadrature_order=30, panel=0.2)
    assert np.max(np.abs(a - b)) < dens.delta_hat_tail_error(2000.0)


def test_delta_hat_rejects_small_cutoff():
    with pytest.raises(ValueError):
        dens.delta_hat(0.0, cutoff=100.0)


# -- Q delta -------------------------------------------------------------------

@pytest.mark.parametrize("x", [0.1, 0.3, 0.6])
def test_q_delta_matches_differences(x):
    f = lambda y: dens.delta(np.exp(y))
    assert abs(-d2(f, x) + 0.25 * f(x) - dens.q_delta_additive(x)) < 1e-6


def test_q_delta_rejects_nonpositive():
    with pytest.raises(ValueError):
        dens.q_delta_additive(0.0)


def test_radii_and_triangle():
    assert dens.negativity_radius() == pytest.approx(0.097542, abs=5e-4)
    assert dens.weighted_negativity_radius() == pytest.approx(0.14043, abs=5e-4)
    assert dens.triangle_limit() == pytest.approx(2.98699, abs=1e-3)


def test_triangle_degenerate_and_short_support():
    assert dens.triangle_limit(0.0) == 0.0
    # below the negativity radius the atom dominates the kernel term
    s = 0.9 * dens.negativity_radius()
    assert dens.triangle_limit(s) < 0


def test_triangle_at_half_support_is_still_positive():
    # the negativity radius is only a sufficient condition
    assert dens.triangle_limit(0.5 * LOG2) > 0


# -- Q and its inverse -----------------------------------------------------------

def _bump(x, c=0.0, r=1.0):
    u = (x - c) / r
    out = np.zeros_like(x)
    m = np.abs(u) < 1
    out[m] = np.exp(-1 / (1 - u[m] ** 2))
    return out


def test_q_annihilates_sqrt_rho():
    h = 0.01
    x = np.arange(-2, 2 + h / 2, h)
    for s in (0.5, -0.5):
        out = dens.apply_Q(np.exp(s * x), h, method="fd8")
        assert np.nanmax(np.abs(out)) < 1e-8


def test_q_output_has_vanishing_moments():
    h = 0.005
    x = np.arange(-3, 3 + h / 2, h)
    qg = dens.apply_Q(_bump(x), h)
    for s in (0.5, -0.5):
        assert abs(np.sum(qg * np.exp(s * x)) * h) < 1e-8


def test_apply_yy_rejects_boundary_support():
    h = 0.01
    x = np.arange(-1, 1 + h / 2, h)
    with pytest.raises(ValueError):
        dens.apply_YY(np.ones_like(x), h, x0=x[0])


# -- epsilon ---------------------------------------------------------------------

def test_epsilon_vanishes_at_one_and_is_symmetric(basis):
    assert dens.epsilon(1.0, basis) == 0.0
    rho = np.array([1.3, 2.0, 3.1])
    assert np.array_equal(dens.epsilon(1 / rho, basis), dens.epsilon(rho, basis))


def test_epsilon_positive_and_decreasing_after_peak(basis):
    rho = np.linspace(1.01, 2, 50)
    v = dens.epsilon(rho, basis)
    assert np.all(v > 0)


def test_epsilon_prime_from_differences(basis, eps_prime):
    f = lambda h: dens.epsilon(1 + h, basis) / h
    rich = 2 * f(5e-6) - f(1e-5)
    assert rich == pytest.approx(22.9965, abs=0.01)
    assert eps_prime == pytest.approx(22.9965, abs=5e-3)


def test_derivative_terms(basis):
    t = dens.epsilon_terms(basis)
    ref = [11.9719, 8.77574, 2.20528, 0.0433983]
    assert np.max(np.abs(t[:4] - ref)) < 1e-3
    assert t[4] == pytest.approx(0.000125459, abs=1e-7)


def test_epsilon_tail_tiny():
    assert dens.epsilon_tail(11) < 1e-15


@pytest.mark.parametrize("x", [0.05, 0.3, 0.6])
def test_q_epsilon_matches_differences(basis, x):
    f = lambda y: dens.epsilon(np.exp(y), basis)
    assert abs(-d2(f, x) + 0.25 * f(x) - dens.q_epsilon(math.exp(x), basis)[0]) < 1e-6


def test_q_epsilon_at_one_and_tail(basis):
    val, tail = dens.q_epsilon(1.0, basis)
    assert abs(val) < 1e-12
    assert tail <= 2.366e-12
    assert abs(dens.q_epsilon(1.0 + 1e-9, basis)[0]) < 2e3 * 1e-9


def test_mode_truncation_within_tail(basis):
    rho = np.linspace(1, 2, 41)
    a, _ = dens.q_epsilon(rho, basis, n_modes=9)
    b, _ = dens.q_epsilon(rho, basis, n_modes=11)
    assert np.max(np.abs(a - b)) < dens.tail_bound(8)


def test_q_epsilon_inner_quadrature_converged(basis):
    rho = np.linspace(1, 2, 11)
    a, _ = dens.q_epsilon(rho, basis)
    b, _ = dens.q_epsilon(rho, basis, quadrature_order=96)
    assert np.max(np.abs(a - b)) < 1e-13 * np.max(np.abs(b))


def test_chi_shape(basis, eps_prime):
    x = np.linspace(0, LOG2, 70)
    chi = dens.chi_norm(x, basis, eps_prime)
    assert chi[0] == 0.0
    assert np.all(chi[1:25] > 0)
    assert chi[40] < 0
    assert -0.6 < chi[-1] < 1.2


# -- the certified remainder ---------------------------------------------------------

def test_tail_bound_value_and_monotone():
    assert 2.3e-12 <= dens.tail_bound(10) <= 2.366e-12
    b = [dens.tail_bound(n) for n in range(3, 20)]
    assert all(x > y for x, y in zip(b, b[1:]))


def test_tail_term_ratio():
    assert dens.tail_term(36) / dens.tail_term(35) < 1 / 35**2


def test_tail_bound_rejects_small_n():
    with pytest.raises(ValueError):
        dens.tail_bound(2)


# -- quadratic forms ---------------------------------------------------------------------

def test_dq_narrow_bump_dominated_by_atom():
    h = 5e-6
    x = np.arange(-0.001, 0.001 + h / 2, h)
    xi = _bump(x, r=0.001)
    norm2 = np.sum(xi**2) * h
    assert dens.quadratic_form_DQ(xi, h, x0=x[0]) == pytest.approx(-2 * norm2, rel=0.01)


def test_dq_on_indicator_reproduces_triangle():
    n = 1201
    x = np.linspace(-0.5 * LOG2, 0.5 * LOG2, n)
    xi = np.ones(n)
    assert dens.quadratic_form_DQ(xi, x[1] - x[0], x0=x[0]) == pytest.approx(2.98699, abs=1e-2)


def test_form_rejects_support_violation():
    x = np.linspace(-0.5, 0.5, 101)
    with pytest.raises(ValueError):
        dens.quadratic_form_DQ(np.ones(101), x[1] - x[0], x0=x[0])


def test_eq_matches_lattice_matrix(pipe, basis, eps_prime):
    # fine trapezoid on 1/4000 against the omega=1e-3 Toeplitz matrix
    f = lambda x: np.cos(math.pi * x / LOG2) ** 2
    h = LOG2 / 4000
    x = np.linspace(-0.5 * LOG2, 0.5 * LOG2, 4001)
    fine = dens.quadratic_form_EQ(f(x), h, basis, x0=x[0])
    s = pipe.toeplitz(1e-3)
    j = np.arange(-s.m, s.m + 1) * s.omega
    v = f(j)
    T = s.matrix()
    coarse = -2 * eps_prime * s.omega * (v @ v - v @ T @ v)
    assert fine == pytest.approx(coarse, rel=1e-4, abs=1e-4)


def test_samples_export(basis):
    s = dens.samples("delta", [1.0, 2.0], dens.delta(np.array([1.0, 2.0])), basis)
    assert s.to_csv().splitlines()[0] == "grid,value,tail_bound"
    assert '"basis_hash"' in s.to_json()
    with pytest.raises(ValueError):
        dens.DensitySamples(np.array([1.0]), np.array([-1.0]), "delta")
    with pytest.raises(ValueError):
        dens.DensitySamples(np.array([1.0]), np.array([1.0]), "nope")

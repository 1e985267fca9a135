"""Randomized invariants across modules."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from weilpos import LOG2, certificate as cert, densities as dens, model as mdl
from weilpos import toeplitz as tp
from weilpos.cache import cache_key

settings.register_profile("weilpos", deadline=None, max_examples=40)
settings.load_profile("weilpos")

rho_s = st.floats(1.0001, 4.0)


@given(rho_s)
def test_epsilon_inversion_symmetry(basis, rho):
    assert dens.epsilon(1 / rho, basis) == pytest.approx(float(dens.epsilon(rho, basis)), rel=1e-12,
                                                         abs=1e-15)


@given(st.floats(1e-3, 20.0))
def test_delta_hat_even(t):
    assert dens.delta_hat(t) == dens.delta_hat(-t)


@given(st.floats(0.05, 3.0))
def test_delta_finite_and_positive(rho):
    assert math.isfinite(dens.delta(rho)) and dens.delta(rho) > 0


@given(st.integers(3, 60))
def test_tail_bound_dominates_next_term(n):
    assert dens.tail_bound(n) >= dens.tail_term(n + 1)


@given(st.floats(0.01, 0.99), st.integers(2, 400))
def test_sinc_tail_decreases_in_cutoff(frac, N):
    a = 1 + frac
    assert mdl.sinc_tail(a, N + 1) <= mdl.sinc_tail(a, N)


@given(st.lists(st.floats(0.05, 0.95), min_size=1, max_size=25))
def test_h_interpolates_zeros(fracs):
    alphas = np.arange(1, len(fracs) + 1) + np.array(fracs)
    vals = mdl.h_eval(alphas, alphas)
    assert np.max(np.abs(vals)) < 1e-10
    assume(len(fracs) > 1)
    h = mdl.build_h(alphas)
    assert h.values[h.m] == 1.0 and h.l2_norm >= 1.0


@given(st.floats(0, 0.3), st.floats(0, 0.2), st.floats(0, 0.5), st.floats(0.5, 1.0))
def test_margin_monotone_in_weight(a, b, c, k):
    lo = cert.restore_positivity(a, b, c, k)[1]
    hi = cert.restore_positivity(a + 0.05, b, c, k)[1]
    assert hi >= lo - 1e-15


@given(st.floats(-LOG2, LOG2))
def test_trig_even(x):
    a = mdl.TrigApproximant(3, 1.05, np.array([1.3, 2.1, 3.07]), np.array([1.17, 1.12, 1.05]))
    assert mdl.tau_trig(x, a) == pytest.approx(mdl.tau_trig(-x, a), abs=1e-13)


entry = st.one_of(st.just(0.0), st.floats(1e-100, 1.0), st.floats(-1.0, -1e-100))


@given(st.lists(entry, min_size=1, max_size=30))
def test_frobenius_norm_formula(row):
    # entries kept away from underflow, where the dense oracle loses accuracy
    from scipy.linalg import toeplitz
    assert tp.toeplitz_frobenius(row) == pytest.approx(np.linalg.norm(toeplitz(row)), rel=1e-12,
                                                       abs=1e-300)


@given(st.dictionaries(st.text(min_size=1, max_size=5), st.integers(), max_size=5))
def test_cache_key_ignores_insertion_order(d):
    rev = dict(reversed(list(d.items())))
    assert cache_key("c", d) == cache_key("c", rev)


@given(st.floats(1e-4, 1e-2))
def test_matched_step_tiles_interval(om):
    m = math.floor(0.5 * LOG2 / om)
    assume(m >= 1)
    assert tp.matched_omega(0.5 * LOG2, om) * (2 * m + 1) == pytest.approx(LOG2, rel=1e-14)

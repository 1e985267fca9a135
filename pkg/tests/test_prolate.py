import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weilpos import prolate
from weilpos.specfun import gauss_legendre

LAMBDA_REF = [0.999971, -0.979485, 0.524086, -0.0589766, 0.00273233, -0.0000762914]


def test_eigenvalues_match_reference_list(basis):
    assert np.max(np.abs(basis.lam[:6] - LAMBDA_REF)) < 1e-5


def test_sum_rules(basis):
    assert math.fsum(basis.lam**2) == pytest.approx(2.237484835, abs=1e-7)
    assert math.fsum(basis.lam**2 * basis.xi_at_one**2) == pytest.approx(2.0, abs=1e-6)


def test_modes_are_orthonormal_on_unit_interval(basis):
    x, w = gauss_legendre(200).on(0.0, 1.0)
    X = np.stack([prolate.eval_xi(basis, n, x) for n in range(basis.n_max)])
    gram = (X * w) @ X.T
    assert np.max(np.abs(gram - np.eye(basis.n_max))) < 1e-12


def test_sign_convention_and_alternation(basis):
    assert np.all(basis.xi_at_one > 0)
    assert np.all(np.sign(basis.lam[:8]) == [1, -1] * 4)


def test_eigenvalues_of_differential_operator_increase(basis):
    assert np.all(np.diff(basis.chi) > 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 7))
def test_truncated_fourier_eigenrelation(basis, x, n):
    eta, _ = prolate.fourier_image(basis, np.array([x]), [n])
    assert eta[0, 0] == pytest.approx(basis.lam[n] * prolate.eval_xi(basis, n, x), abs=1e-12)


def test_continuation_agrees_inside_and_derivative_matches(basis):
    x = np.linspace(0.05, 1.6, 9)
    for n in (0, 3, 6):
        val, der = prolate.eval_xi_an(basis, n, x)
        inside = x <= 1
        assert np.allclose(val[inside], prolate.eval_xi(basis, n, x[inside]), atol=1e-10)
        e = 1e-4
        f = lambda y: prolate.eval_xi_an(basis, n, y)[0]
        fd = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * e)
        assert np.max(np.abs(fd - der) / (1 + np.abs(der))) < 1e-6


def test_series_derivative_matches_continuation_on_unit_interval(basis):
    x = np.linspace(0.1, 1.0, 7)
    for n in range(8):
        _, der = prolate.eval_xi_an(basis, n, x)
        assert np.allclose(prolate.eval_xi_prime(basis, n, x), der, atol=2e-9)


def test_doubling_the_expansion_changes_nothing(basis):
    big = prolate.build_basis(12, 2 * basis.legendre_order)
    assert np.max(np.abs(big.lam - basis.lam)) < 1e-13


def test_lambda_bound_dominates(basis):
    # the last two modes sit at rounding level
    for n in range(basis.n_max - 2):
        assert abs(basis.lam[n]) <= prolate.lambda_bound(n) * (1 + 1e-12)


def test_lambda_bound_decays():
    b = [prolate.lambda_bound(n) for n in range(3, 30)]
    assert all(x > y for x, y in zip(b, b[1:]))


def test_json_round_trip_is_bit_exact(basis):
    text = prolate.basis_to_json(basis)
    again = prolate.basis_from_json(text)
    assert prolate.basis_to_json(again) == text
    assert np.array_equal(again.coefficients, basis.coefficients)
    assert prolate.basis_hash(again) == prolate.basis_hash(basis)


def test_binary_round_trip(basis, tmp_path):
    path = tmp_path / "basis.npz"
    prolate.save_basis_binary(basis, path)
    again = prolate.load_basis_binary(path)
    assert np.array_equal(again.lam, basis.lam)
    assert prolate.basis_hash(again) == prolate.basis_hash(basis)


def test_rejects_small_inputs():
    with pytest.raises(ValueError):
        prolate.build_basis(5)
    with pytest.raises(ValueError):
        prolate.build_basis(12, 20)


def test_format_version_checked(basis):
    text = prolate.basis_to_json(basis).replace('"format_version": 1', '"format_version": 99')
    with pytest.raises(ValueError):
        prolate.basis_from_json(text)


def test_arrays_are_read_only(basis):
    with pytest.raises(ValueError):
        basis.lam[0] = 0.0

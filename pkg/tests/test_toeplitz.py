import math

import numpy as np
import pytest
from scipy.linalg import eigvalsh, toeplitz as dense_toeplitz

from weilpos import HALF_LOG2
from weilpos import toeplitz as tp
from weilpos.pipeline import TABLE_OMEGA


def test_lattice_size_and_symbol(pipe):
    s = pipe.toeplitz(1e-3)
    assert s.dim == 693 and s.m == 346
    assert s.symbol[0] == 0.0
    assert s.matrix().shape == (693, 693)


def test_top_eigenvalues_against_full_spectrum(pipe):
    s = pipe.toeplitz(1e-2)
    full = eigvalsh(dense_toeplitz(s.symbol))[::-1]
    assert np.allclose(s.top_eigenvalues, full[:3], atol=1e-12)


def test_top_eigenvector_even_and_normalized(pipe):
    s = pipe.toeplitz(1e-3)
    v = s.max_eigvec
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-14)
    assert np.array_equal(v, v[::-1])
    T = s.matrix()
    assert np.linalg.norm(T @ v - s.top_eigenvalues[0] * v) < 1e-10


def test_quarter_interval_has_no_excess(basis):
    s = tp.build_toeplitz(1e-3, 0.25, basis)
    assert s.top_eigenvalues[0] < 1.0


def test_spectrum_top_extends(pipe):
    s = pipe.toeplitz(1e-2)
    vals, vec = tp.spectrum_top(s, 5)
    assert vals.size == 5 and np.all(np.diff(vals) < 0)
    with pytest.raises(ValueError):
        tp.spectrum_top(s, 0)


def test_roots_on_circle_and_conjugate_closed(pipe):
    s = pipe.toeplitz(1 / 2000)
    r = pipe.roots(1 / 2000)
    assert r.roots.size == s.dim - 1
    assert r.max_deviation < 1e-8
    z = np.sort_complex(r.roots)
    assert np.allclose(np.sort_complex(z.conj()), z, atol=1e-10)
    assert r.angles.size == s.m


def test_angles_interlace_integers(pipe):
    a = pipe.roots(TABLE_OMEGA).angles[:60]
    n = np.arange(1, 61)
    assert np.all((a > n) & (a < n + 1))
    assert abs(a[59] - 60) < 0.01


def test_angles_form_cauchy_sequence(pipe):
    a, b, c = (pipe.roots(tp.matched_omega(HALF_LOG2, om)).angles[:20]
               for om in (1 / 1000, 1 / 2000, 1 / 5000))
    assert np.all(np.abs(b - c) < np.abs(a - b))
    assert np.max(np.abs(b - c)) < 1e-4


def test_decomposition_weights_and_residual(pipe):
    d = pipe.decomposition(1 / 2000)
    assert np.all(d.weights > 0)
    assert d.relative_residual < 1e-6


def test_decomposition_reconstructs_matrix(pipe):
    om = 1e-2
    s = pipe.toeplitz(om)
    d = tp.canonical_decomposition(s)
    k = np.arange(s.dim)
    theta = 2 * np.pi * d.angles / s.dim
    row = (d.lambda_max / s.dim) * 2 * np.cos(np.outer(k, theta)) @ d.weights
    rebuilt = d.lambda_max * np.eye(s.dim) - dense_toeplitz(row)
    assert np.max(np.abs(rebuilt - s.matrix())) < 1e-9


def test_frobenius_matches_dense(pipe):
    row = pipe.toeplitz(1e-2).symbol
    assert tp.toeplitz_frobenius(row) == pytest.approx(np.linalg.norm(dense_toeplitz(row)), rel=1e-13)


def test_decomposition_csv(pipe):
    text = tp.decomposition_to_csv(pipe.decomposition(1 / 2000))
    lines = text.splitlines()
    assert lines[0] == "j,alpha,d,omega"
    assert len(lines) == 1 + 693


def test_matched_omega():
    om = tp.matched_omega(HALF_LOG2, 1 / 5000)
    m = math.floor(HALF_LOG2 * 5000)
    assert om * (2 * m + 1) == pytest.approx(2 * HALF_LOG2, rel=1e-15)


def test_argument_checks(basis):
    with pytest.raises(ValueError):
        tp.build_toeplitz(0.05, HALF_LOG2, basis)
    with pytest.raises(ValueError):
        tp.build_toeplitz(1e-3, 0.5, basis)

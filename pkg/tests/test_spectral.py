import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opdiff.errors import ConvergenceError, DomainError, HypothesisError
from opdiff.operator import OperatorSpec, build_matrix
from opdiff.spectral import (
    argmax_l,
    closed_form_spectrum,
    composition_norm_bounds,
    eigenvalues,
    operator_norm,
    spectral_radius_closed,
    spectrum_report,
)


def _sorted_values(pairs):
    return np.sort_complex(np.array([p.value for p in pairs]))


def test_eigenvalue_examples():
    pairs = eigenvalues(np.diag([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(_sorted_values(pairs), [1, 2, 3])
    assert all(p.residual == 0 and not p.flagged for p in pairs)
    np.testing.assert_allclose(_sorted_values(eigenvalues(np.array([[1.0, 5.0], [0.0, 2.0]]))), [1, 2])


def test_eigenvalues_of_triangular_section():
    M = build_matrix(OperatorSpec.diff([0, 1], [0, 0.5, 0.2]), -1.0, 64)
    pairs = eigenvalues(M)
    m = np.arange(64)
    np.testing.assert_allclose(_sorted_values(pairs), np.sort_complex((m * 0.5 ** (m - 1.0)).astype(complex)),
                               atol=1e-12)


def test_eigenvalues_size_limit():
    with pytest.raises(DomainError):
        eigenvalues(np.zeros((2049, 2049)))


def test_eigen_residuals_are_reported(rng):
    A = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
    pairs = eigenvalues(A)
    for p in pairs:
        assert p.residual <= 1e-8 * np.linalg.norm(A, 2)
        assert not p.flagged


def test_operator_norm_examples():
    assert operator_norm(np.diag([1.0, 2.0, 3.0])) == pytest.approx(3.0)
    assert operator_norm(np.zeros((5, 5))) == 0.0
    M = build_matrix(OperatorSpec.diff([1], [0, 0.5], 1), -1.0, 64)
    assert operator_norm(M) == pytest.approx(1.0, abs=1e-6)


def test_operator_norm_matches_svd(rng):
    for _ in range(5):
        A = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))
        assert operator_norm(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-9)


def test_operator_norm_nonconvergence_reports_last_iterate():
    with pytest.raises(ConvergenceError) as info:
        operator_norm(np.diag([1.0, -1.0 + 1e-12, 0.1]) + 1e-3 * np.eye(3)[::-1], tol=1e-16, max_iter=3)
    assert info.value.last is not None


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       st.integers(0, 3))
def test_operator_norm_scale_equivariance(c, which):
    specs = [
        OperatorSpec.diff([0, 1, 0.5], [0, 0.5, 0.2], 1),
        OperatorSpec.diff([0.1, 0, 2], [0, 0.7], 2),
        OperatorSpec.comp([1, 0.5], [0.2, 0.3, 0.1]),
        OperatorSpec.diff([1], [0, 0.9], 3),
    ]
    M = build_matrix(specs[which], -1.0, 48).entries
    assert operator_norm(c * M) == pytest.approx(abs(c) * operator_norm(M), rel=1e-10)


@pytest.mark.parametrize("spec", [
    OperatorSpec.diff([0, 1, 0.5], [0, 0.5, 0.2], 1),
    OperatorSpec.diff([1], [0.1, 0.6, 0.2], 2),
    OperatorSpec.comp([1, 0.5], [0.2, 0.3, 0.1]),
])
def test_operator_norm_nondecreasing_in_section_size(spec):
    norms = [operator_norm(build_matrix(spec, -1.0, N)) for N in (16, 32, 64, 128)]
    assert all(b >= a - 1e-12 * a for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("n, r, l_star, value", [
    (1, 0.5, 2, 1.0),
    (2, 0.7, 6, 15 * 0.7**4),
    (3, 0.0, 3, 1.0),
])
def test_argmax_examples(n, r, l_star, value):
    res = argmax_l(n, r)
    assert res.l_star == l_star
    assert res.value == pytest.approx(value, rel=1e-14)


def test_argmax_tie_flag():
    assert argmax_l(1, 0.5).tie
    assert not argmax_l(2, 0.7).tie


@pytest.mark.parametrize("r", [1.0, 1.5, -0.1])
def test_argmax_domain(r):
    with pytest.raises(DomainError):
        argmax_l(1, r)


def test_argmax_brute_force_grid():
    for n in range(1, 6):
        for i in range(1, 100):
            r = i / 100
            hi = n + math.ceil(10 / (1 - r))
            vals = {l: math.comb(l, n) * r ** (l - n) for l in range(n, hi + 1)}
            best = max(vals.values())
            res = argmax_l(n, r)
            assert res.value == pytest.approx(best, rel=1e-12)
            assert vals[res.l_star] == pytest.approx(best, rel=1e-12)
            if res.tie:
                assert vals[res.l_star - 1] == pytest.approx(best, rel=1e-12)


def test_closed_form_zero_spectrum():
    cf = closed_form_spectrum(OperatorSpec.diff([0, 0, 1], [0, 0.5], 1))
    assert np.all(cf.closed_values() == 0)
    assert cf.radius_closed == 0


def test_closed_form_diff_example():
    cf = closed_form_spectrum(OperatorSpec.diff([0, 1], [0, 0.5], 1), L_max=10)
    assert cf.closed_form[0] == (None, 0)
    np.testing.assert_allclose(cf.closed_values()[1:4], [0, 1, 1])
    tagged = dict((l, v) for l, v in cf.closed_form if l is not None)
    for l in range(1, 11):
        assert tagged[l] == pytest.approx(l * 0.5 ** (l - 1))
    assert cf.radius_closed == pytest.approx(1.0)


def test_closed_form_composition_example():
    cf = closed_form_spectrum(OperatorSpec.comp([1, 1], [0, 0.5]), L_max=20)
    tagged = {l: v for l, v in cf.closed_form if l is not None}
    for l in range(21):
        assert tagged[l] == pytest.approx(0.5**l)


def test_closed_form_constant_symbol():
    cf = closed_form_spectrum(OperatorSpec.diff([0, 0, 1], [0.3], 2))
    np.testing.assert_allclose(sorted(abs(cf.closed_values())), [0, 2])


def test_closed_form_default_l_max():
    cf = closed_form_spectrum(OperatorSpec.diff([0, 6], [0, 0.9], 1))
    assert max(l for l, _ in cf.closed_form if l is not None) == 50
    cf = closed_form_spectrum(OperatorSpec.diff([0, 6], [0, 0.99], 1))
    assert max(l for l, _ in cf.closed_form if l is not None) == 300


def test_closed_form_vanishing_hypothesis():
    with pytest.raises(HypothesisError) as info:
        closed_form_spectrum(OperatorSpec.diff([1, 1], [0, 0.5], 1))
    assert "order" in info.value.hypothesis


@pytest.mark.parametrize("psi, phi, n, radius, l_star", [
    ([0, 1], [0, 0.5], 1, 1.0, 2),
    ([0, 0, 1], [0, 0, 0.5], 2, 2.0, 2),
    ([0, 6], [0, 0.9], 1, 23.24522934, 10),
])
def test_spectral_radius_examples(psi, phi, n, radius, l_star):
    r, l = spectral_radius_closed(OperatorSpec.diff(psi, phi, n))
    assert r == pytest.approx(radius, abs=1e-8)
    assert l == l_star


def test_spectral_radius_against_eigenvalues():
    spec = OperatorSpec.diff([0, 6], [0, 0.9], 1)
    r, _ = spectral_radius_closed(spec)
    vals = [abs(p.value) for p in eigenvalues(build_matrix(spec, -1.0, 100))]
    assert max(vals) == pytest.approx(r, rel=1e-10)


def test_spectral_radius_needs_exact_order():
    with pytest.raises(HypothesisError):
        spectral_radius_closed(OperatorSpec.diff([0, 0, 1], [0, 0.5], 1))
    with pytest.raises(HypothesisError):
        spectral_radius_closed(OperatorSpec.comp([1], [0, 0.5]))


@pytest.mark.parametrize("a, alpha, bounds", [
    (0, -1.0, (1, 1)), (0, 2.0, (1, 1)),
    (0.5, -1.0, (2 / math.sqrt(3), math.sqrt(3))),
    (0.5, 0.0, (4 / 3, 3)),
])
def test_composition_norm_bounds(a, alpha, bounds):
    np.testing.assert_allclose(composition_norm_bounds(a, alpha), bounds)


def test_composition_norm_bounds_domain():
    with pytest.raises(DomainError):
        composition_norm_bounds(1.0, -1.0)


@pytest.mark.parametrize("c, alpha", [(0.5, -1.0), (0.3 + 0.4j, 0.0), (-0.2, 1.0)])
def test_composition_norm_within_bounds(c, alpha):
    spec = OperatorSpec.comp([1], [c, 0.4])
    lo, hi = composition_norm_bounds(c, alpha)
    val = operator_norm(build_matrix(spec, alpha, 256))
    assert lo - 1e-6 <= val <= hi + 1e-8


def test_triangular_spectrum_property():
    specs = [
        OperatorSpec.diff([0, 1, 0.3], [0, 0.5, 0.2], 1),
        OperatorSpec.diff([0, 0, 2, 1], [0, 0.7, 0.1], 2),
        OperatorSpec(([1 + 0.5j, 0.2], [0, 0.6]), ([0, 0, 0.5], [0, 0.3, 0.3], 2)),
    ]
    for spec in specs:
        rep = spectrum_report(spec, -1.0, 100, L_max=99)
        closed = rep.closed_values()
        for p in rep.numeric[:10]:
            assert np.min(np.abs(closed - p.value)) <= 1e-8


def test_spectrum_report_serializes():
    doc = spectrum_report(OperatorSpec.diff([0, 1], [0, 0.5]), -1.0, 16).to_json()
    assert doc["l_star"] == 2 and doc["trunc_degree"] == 16
    assert len(doc["numeric"]) == 16

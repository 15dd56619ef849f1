import math

import numpy as np
import pytest

from opdiff.bounds import (
    commutator_block,
    default_b,
    exact_norm_bz,
    hyponormality_classify,
    lower_bound_norm,
    modified_symbol,
    norm_report,
    upper_bound_norm,
    vanishing_order,
)
from opdiff.errors import DomainError, HypothesisError, ZeroFunctionError
from opdiff.operator import OperatorSpec, build_matrix
from opdiff.series import TruncatedSeries, blaschke_series, derivative_at, multiply, power
from opdiff.spectral import operator_norm

from conftest import S


@pytest.mark.parametrize("psi, w, order", [
    ([0, 0, 1], 0, 2),
    ([1], 0, 0),
    ([-0.125, 0.75, -1.5, 1], 0.5, 3),
])
def test_vanishing_order_examples(psi, w, order):
    assert vanishing_order(TruncatedSeries(psi), w) == order


def test_vanishing_order_zero_function():
    with pytest.raises(ZeroFunctionError):
        vanishing_order(S(0, 0, 0), 0.2)


@pytest.mark.parametrize("psi, phi, n, expected", [
    ([0, 1], [0, 0.5], 1, 1.0),
    ([1], [0, 0.75, 0, 0, 0, 0.1], 1, 1.6875),
    ([1], [0, 0, 0.6, 0.3], 1, 1.2),
])
def test_lower_bound_examples(psi, phi, n, expected):
    assert lower_bound_norm(OperatorSpec.diff(psi, phi, n)) == pytest.approx(expected, rel=1e-12)


def test_lower_bound_hardy_only():
    with pytest.raises(DomainError):
        lower_bound_norm(OperatorSpec.diff([0, 1], [0, 0.5]), alpha=0.0)


def test_modified_symbol_orders():
    hat, m = modified_symbol(S(1), 0.3, 2)
    assert m == 0
    assert vanishing_order(hat, 0.3) == 2
    hat, m = modified_symbol(S(0, 0, 1), 0, 1)
    assert m == 2 and np.array_equal(hat.coeffs, S(0, 0, 1).coeffs)


def test_modified_symbol_at_origin_multiplies_by_z_powers():
    # B_0 = -z, so B_0^2 = z^2
    hat, _ = modified_symbol(S(1, 1), 0, 2, N=16)
    np.testing.assert_allclose(hat.coeffs[:5], [0, 0, 1, 1, 0])


@pytest.mark.parametrize("psi, phi, b, expected", [
    ([1], [0, 0.5], 0.5, 1.0),
    ([1], [0, 0, 0.5], None, 1.0),
    ([1], [0.25, 0.25], 0.5, math.sqrt(3)),
])
def test_upper_bound_examples(psi, phi, b, expected):
    assert upper_bound_norm(OperatorSpec.diff(psi, phi, 1), b) == pytest.approx(expected, rel=1e-12)


def test_upper_bound_domain():
    spec = OperatorSpec.diff([1], [0.25, 0.25])
    with pytest.raises(DomainError):
        upper_bound_norm(spec, 0.25)
    with pytest.raises(DomainError):
        upper_bound_norm(spec, 0.4)
    with pytest.raises(DomainError):
        upper_bound_norm(spec, 0.5, alpha=0.0)


def test_default_b_rounds_up():
    assert default_b(S(0, 0.3, 0.2)) == pytest.approx(0.5)
    assert default_b(S(0, 0.1234567)) == pytest.approx(0.123457)


@pytest.mark.parametrize("b, n, expected", [
    (0.5, 1, 1.0),
    (0.5, 2, 3.0),
    (0.9, 1, 10 * 0.9**9),
])
def test_exact_norm_examples(b, n, expected):
    assert exact_norm_bz(b, n) == pytest.approx(expected, rel=1e-14)


def test_exact_norm_phase_invariance():
    assert exact_norm_bz(0.5, 2) == exact_norm_bz(0.5j, 2)
    assert exact_norm_bz(0.7, 3) == exact_norm_bz(-0.7, 3)


@pytest.mark.parametrize("b", [0.0, 1.0, 1.2j])
def test_exact_norm_domain(b):
    with pytest.raises(DomainError):
        exact_norm_bz(b, 1)


@pytest.mark.parametrize("b", [0.1, 0.5, 0.75, 0.9, 0.6j])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_exact_norm_matches_numeric(b, n):
    numeric = operator_norm(build_matrix(OperatorSpec.diff([1], [0, b], n), -1.0, 256))
    assert numeric == pytest.approx(exact_norm_bz(b, n), abs=1e-6)


SANDWICH_CORPUS = [
    OperatorSpec.diff([0, 1], [0, 0.5], 1),
    OperatorSpec.diff([1], [0, 0.75, 0, 0, 0, 0.1], 1),
    OperatorSpec.diff([1], [0, 0, 0.6, 0.3], 1),
    OperatorSpec.diff([1], [0, 0, 0.5], 1),
    OperatorSpec.diff([0, 1, 0.5], [0, 0.5, 0.2], 1),
    OperatorSpec.diff([1, 0.5], [0, 0.4, 0.3], 2),
    OperatorSpec.diff([0, 0, 0.3, 0.2], [0, 0.6, 0.1], 2),
    OperatorSpec.diff([2], [0, 0.3, 0.2, 0.1], 3),
]


@pytest.mark.parametrize("spec", SANDWICH_CORPUS)
def test_sandwich(spec):
    numeric = operator_norm(build_matrix(spec, -1.0, 128))
    assert lower_bound_norm(spec) <= numeric + 1e-8
    assert numeric <= upper_bound_norm(spec) + 1e-8


@pytest.mark.parametrize("psi, phi, n, w", [
    ([1, 0.5], [0, 0.5, 0.2], 1, 0.5),
    ([0, 1], [0, 0.6], 2, 0.3 - 0.4j),
    ([1], [0, 0.4, 0.4], 1, -0.6j),
])
@pytest.mark.parametrize("k", [1, 2])
def test_blaschke_multiplier_preserves_norm(psi, phi, n, w, k):
    N = 256
    spec = OperatorSpec.diff(psi, phi, n)
    Bk = power(blaschke_series(w, N), k, N)
    weighted = multiply(TruncatedSeries(psi), Bk, N)
    base = operator_norm(build_matrix(spec, -1.0, N))
    moved = operator_norm(build_matrix(OperatorSpec.diff(weighted, phi, n), -1.0, N))
    assert abs(moved - base) <= weighted.tail_bound + 1e-6


def test_norm_report_fields():
    rep = norm_report(OperatorSpec.diff([0, 2], [0, 0.5], 1), -1.0, 128)
    assert rep.exact == pytest.approx(2.0)
    assert rep.numeric == pytest.approx(2.0, abs=1e-8)
    assert rep.consistent()
    assert set(rep.method_tags) >= {"numeric", "exact", "lower", "upper"}
    doc = rep.to_json()
    assert doc["consistent"] is True


def test_norm_report_bergman_has_no_hardy_bounds():
    rep = norm_report(OperatorSpec.diff([1], [0, 0.5, 0.1], 1), 0.0, 64)
    assert rep.lower is None and rep.upper is None and rep.numeric > 0


def test_norm_report_composition_bounds():
    rep = norm_report(OperatorSpec.comp([1], [0.5, 0.3]), 0.0, 128)
    assert rep.lower == pytest.approx(4 / 3) and rep.upper == pytest.approx(3.0)
    assert rep.consistent(1e-6)


def test_hyponormal_example():
    rep = hyponormality_classify(OperatorSpec.diff([0, 2], [0, 0.5], 1))
    assert rep.verdict == "normal" and rep.hyponormal and rep.cohyponormal
    assert rep.norm_closed == pytest.approx(2.0)
    assert rep.norm_numeric == pytest.approx(2.0, abs=1e-6)
    assert max(abs(rep.commutator_min), abs(rep.commutator_max)) <= 1e-12


def test_not_hyponormal_mixed_signs():
    rep = hyponormality_classify(OperatorSpec.diff([0, 1, 1], [0, 0.5], 1), N=128)
    assert rep.verdict == "neither"
    assert rep.mixed_signs
    assert rep.commutator_min <= -1e-6 * rep.norm_numeric**2


def test_not_hyponormal_zero_radius():
    rep = hyponormality_classify(OperatorSpec.diff([0, 0, 1], [0, 0.5], 1))
    assert rep.verdict == "neither"
    assert rep.radius_closed == 0 and rep.norm_numeric > 0
    assert any("radius 0" in note for note in rep.notes)


def test_hyponormality_hypotheses():
    with pytest.raises(HypothesisError):
        hyponormality_classify(OperatorSpec.diff([1], [0, 0.5], 1))
    with pytest.raises(HypothesisError):
        hyponormality_classify(OperatorSpec.comp([1], [0, 0.5]))


def test_commutator_block_of_normal_matrix_vanishes(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12)))
    A = Q @ np.diag(rng.normal(size=12) + 1j * rng.normal(size=12)) @ Q.conj().T
    assert np.abs(commutator_block(A, 6)).max() <= 1e-12

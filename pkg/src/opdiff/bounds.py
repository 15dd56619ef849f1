"""Norm estimates for ``D_{psi,phi,n}`` and the hyponormality test.

The lower and upper estimates are Hardy-space results and refuse other
values of ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, HypothesisError, ZeroFunctionError
from .operator import (
    FixedPointInfo,
    OperatorSpec,
    build_matrix,
    common_fixed_point,
)
from .series import (
    DEFAULT_SAMPLES,
    DEFAULT_TRUNC,
    TruncatedSeries,
    blaschke_series,
    derivative_at,
    multiply,
    power,
    sup_norm_estimate,
)
from .spectral import argmax_l, composition_norm_bounds, operator_norm


def vanishing_order(psi: TruncatedSeries, w: complex, threshold: float = 1e-9) -> int:
    """Order of the zero of ``psi`` at ``w``.

    The first ``k`` whose Taylor coefficient ``|psi^(k)(w)| / k!`` exceeds
    ``threshold * (1 + max |coeff|)``.
    """
    scale = 1.0 + float(np.abs(psi.coeffs).max())
    for k in range(psi.trunc_degree + 1):
        if abs(derivative_at(psi, k, w)) / math.factorial(k) > threshold * scale:
            return k
    raise ZeroFunctionError(f"psi vanishes to every order up to {psi.trunc_degree} at w = {w}")


def _require_hardy(alpha: float, what: str):
    if alpha != -1.0:
        raise DomainError(f"{what} is only available on the Hardy space (alpha = -1), got alpha = {alpha}")


def _require_diff_only(spec: OperatorSpec):
    if not spec.is_diff_only:
        raise HypothesisError("expected a differentiation-only spec", "operator must be D_{psi,phi,n} alone")


def modified_symbol(psi: TruncatedSeries, w: complex, n: int,
                    N: int = DEFAULT_TRUNC) -> tuple[TruncatedSeries, int]:
    """Multiply ``psi`` by enough Blaschke factors at ``w`` to vanish there to order ``n``.

    Returns the new weight and the original vanishing order ``m``.  The
    multiplier is an inner function, so the operator norm is unchanged.
    """
    m = vanishing_order(psi, w)
    if m >= n:
        return psi, m
    B = blaschke_series(w, N)
    return multiply(psi, power(B, n - m, N), N), m


def lower_bound_norm(spec: OperatorSpec, fp: FixedPointInfo | None = None,
                     alpha: float = -1.0, N: int = DEFAULT_TRUNC) -> float:
    """Spectral lower estimate of ``||D_{psi,phi,n}||`` on H^2."""
    _require_hardy(alpha, "lower_bound_norm")
    _require_diff_only(spec)
    psi, phi, n = spec.diff_part
    if fp is None:
        fp = common_fixed_point(spec)
    w = fp.w
    hat, _ = modified_symbol(psi, w, n, N)
    d = abs(derivative_at(hat, n, w))
    r = abs(fp.phi_prime)
    if r > 0.0:
        return d * argmax_l(n, r).value
    if n == 1:
        scale = 1.0 + float(np.abs(psi.coeffs).max())
        if abs(derivative_at(psi, 2, w)) <= 1e-12 * scale:
            phi2 = fp.higher_derivs[0] if fp.higher_derivs else derivative_at(phi, 2, w)
            return max(d, abs(derivative_at(psi, 0, w) * phi2))
    return d


def exact_norm_bz(b: complex, n: int) -> float:
    """``||D_{bz,n}||`` on H^2, i.e. ``n! max_l C(l,n)|b|^(l-n)``."""
    r = abs(b)
    if not 0.0 < r < 1.0:
        raise DomainError(f"exact_norm_bz needs 0 < |b| < 1, got {b}")
    return math.factorial(n) * argmax_l(n, r).value


def default_b(phi: TruncatedSeries, samples: int = DEFAULT_SAMPLES) -> float:
    """Sampled sup of |phi| rounded up to the next multiple of 1e-6."""
    return math.ceil(sup_norm_estimate(phi, samples) * 1e6) / 1e6


def upper_bound_norm(spec: OperatorSpec, b: float | None = None, alpha: float = -1.0,
                     samples: int = DEFAULT_SAMPLES) -> float:
    """Upper estimate of ``||D_{psi,phi,n}||`` on H^2 given ``sup|phi| <= b < 1``.

    ``sup|psi|`` and ``sup|phi|`` come from circle sampling, so the result is
    certified only when both maxima sit on sample points.
    """
    _require_hardy(alpha, "upper_bound_norm")
    _require_diff_only(spec)
    psi, phi, n = spec.diff_part
    if phi.degree <= 0:
        raise HypothesisError("upper_bound_norm needs a nonconstant phi", "phi must be nonconstant")
    sup_phi = sup_norm_estimate(phi, samples)
    sup_psi = sup_norm_estimate(psi, samples)
    phi0 = abs(phi.coeffs[0])
    nfact = math.factorial(n)
    if phi0 == 0.0 and sup_phi <= 1.0 / (n + 1) + 1e-12:
        return nfact * sup_psi
    if b is None:
        b = default_b(phi, samples)
    if b <= phi0:
        raise DomainError(f"b = {b} must exceed |phi(0)| = {phi0}")
    if b < sup_phi - 1e-15:
        raise DomainError(f"b = {b} is below the sampled sup of |phi| = {sup_phi}")
    if b >= 1.0:
        raise DomainError(f"b = {b} must be < 1")
    return nfact * sup_psi * math.sqrt((b + phi0) / (b - phi0)) * argmax_l(n, b).value


@dataclass
class NormReport:
    lower: Optional[float] = None
    upper: Optional[float] = None
    exact: Optional[float] = None
    numeric: Optional[float] = None
    method_tags: dict = field(default_factory=dict)

    def consistent(self, tol: float = 1e-8) -> bool:
        ok = True
        if self.lower is not None and self.numeric is not None:
            ok &= self.lower <= self.numeric + tol
        if self.upper is not None and self.numeric is not None:
            ok &= self.numeric <= self.upper + tol
        return ok

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "numeric": self.numeric,
            "method_tags": dict(self.method_tags),
            "consistent": self.consistent(),
        }


def _is_monomial(f: TruncatedSeries, k: int, rtol: float = 1e-14) -> bool:
    c = np.abs(f.coeffs)
    if k >= c.size or c[k] == 0.0 or not f.is_exact:
        return False
    others = np.delete(c, k)
    return bool(np.all(others <= rtol * c[k]))


def norm_report(spec: OperatorSpec, alpha: float = -1.0, N: int = 256, tol: float = 1e-10,
                numeric: bool = True) -> NormReport:
    """Every applicable closed-form estimate next to the numeric section norm."""
    rep = NormReport()
    if numeric:
        rep.numeric = operator_norm(build_matrix(spec, alpha, N), tol)
        rep.method_tags["numeric"] = f"power iteration on the {N}x{N} section"
    if spec.is_diff_only:
        psi, phi, n = spec.diff_part
        if _is_monomial(psi, n) and _is_monomial(phi, 1) and abs(phi.coeffs[1]) < 1.0:
            a, b = psi.coeffs[n], phi.coeffs[1]
            rep.exact = float(abs(a)) * exact_norm_bz(b, n)
            rep.method_tags["exact"] = "diagonal operator psi = a z^n, phi = b z"
        elif alpha == -1.0 and _is_monomial(psi, 0) and _is_monomial(phi, 1):
            rep.exact = float(abs(psi.coeffs[0])) * exact_norm_bz(phi.coeffs[1], n)
            rep.method_tags["exact"] = "phi = b z on H^2"
        if alpha == -1.0:
            try:
                rep.lower = lower_bound_norm(spec, alpha=alpha)
                rep.method_tags["lower"] = "spectral radius of the Blaschke-modified weight"
            except (HypothesisError, ZeroFunctionError) as exc:
                rep.method_tags["lower"] = f"unavailable: {exc}"
            if phi.degree > 0:
                try:
                    rep.upper = upper_bound_norm(spec, alpha=alpha)
                    rep.method_tags["upper"] = "sup|psi| * ||C_(phi/b)|| * ||D_(bz,n)|| (sampled sups)"
                except (DomainError, HypothesisError) as exc:
                    rep.method_tags["upper"] = f"unavailable: {exc}"
    elif spec.diff_part is None and _is_monomial(spec.psi0, 0) and spec.psi0.coeffs[0] == 1.0:
        rep.lower, rep.upper = composition_norm_bounds(spec.phi0.coeffs[0], alpha)
        rep.method_tags["lower"] = rep.method_tags["upper"] = "composition operator bound from |phi(0)|"
    return rep


@dataclass
class HyponormalityReport:
    verdict: str  # "normal" or "neither"
    hyponormal: bool
    cohyponormal: bool
    norm_closed: Optional[float]
    norm_numeric: float
    radius_closed: Optional[float]
    commutator_min: float
    commutator_max: float
    commutator_tol: float
    block_size: int
    notes: list[str] = field(default_factory=list)

    @property
    def numeric_hyponormal(self) -> bool:
        return self.commutator_min >= -self.commutator_tol

    @property
    def numeric_cohyponormal(self) -> bool:
        return self.commutator_max <= self.commutator_tol

    @property
    def mixed_signs(self) -> bool:
        return not (self.numeric_hyponormal or self.numeric_cohyponormal)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "hyponormal": self.hyponormal,
            "cohyponormal": self.cohyponormal,
            "norm_closed": self.norm_closed,
            "norm_numeric": self.norm_numeric,
            "radius_closed": self.radius_closed,
            "commutator_min": self.commutator_min,
            "commutator_max": self.commutator_max,
            "commutator_tol": self.commutator_tol,
            "block_size": self.block_size,
            "notes": list(self.notes),
        }


def commutator_block(M: np.ndarray, k: int) -> np.ndarray:
    """Leading ``k x k`` block of ``M^H M - M M^H``."""
    MH = M.conj().T
    return (MH @ M - M @ MH)[:k, :k]


def hyponormality_classify(spec: OperatorSpec, fp: FixedPointInfo | None = None,
                           alpha: float = -1.0, N: int = DEFAULT_TRUNC) -> HyponormalityReport:
    """Structural verdict plus commutator evidence from the ``N``-section.

    A compact ``D_{psi,phi,n}`` with ``psi`` vanishing to order ``>= n`` at
    the fixed point is hyponormal or cohyponormal exactly when
    ``psi = a z^n`` and ``phi = b z``; it is then diagonal, hence normal.
    """
    _require_diff_only(spec)
    psi, phi, n = spec.diff_part
    if phi.degree <= 0:
        raise HypothesisError("hyponormality test needs a nonconstant phi", "phi must be nonconstant")
    if fp is None:
        fp = common_fixed_point(spec)
    from .spectral import closed_form_spectrum

    cf = closed_form_spectrum(spec, fp)  # checks the vanishing-order hypothesis
    structural = _is_monomial(psi, n) and _is_monomial(phi, 1) and 0.0 < abs(phi.coeffs[1]) < 1.0
    M = build_matrix(spec, alpha, N)
    T = np.asarray(M.entries)
    normT = operator_norm(M)
    k = N // 4
    eig = np.linalg.eigvalsh(commutator_block(T, k)) if k else np.zeros(1)
    tol = 1e-8 * normT**2
    notes = []
    norm_closed = None
    if structural:
        a, b = psi.coeffs[n], phi.coeffs[1]
        norm_closed = math.factorial(n) * float(abs(a)) * argmax_l(n, float(abs(b))).value
    if cf.radius_closed == 0.0 and normT > 0.0:
        notes.append("spectral radius 0 but nonzero norm: cannot be hyponormal")
    rep = HyponormalityReport(
        "normal" if structural else "neither",
        structural,
        structural,
        norm_closed,
        normT,
        cf.radius_closed,
        float(eig.min()),
        float(eig.max()),
        tol,
        k,
        notes,
    )
    if structural != (rep.numeric_hyponormal or rep.numeric_cohyponormal):
        rep.notes.append("commutator evidence disagrees with the structural verdict at this truncation")
    return rep

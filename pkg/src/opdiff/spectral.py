"""Numeric spectra and norms of finite sections, and their closed forms.

For a compact ``T = C_{psi0,phi0} + D_{psin,phin,n}`` whose symbols share an
interior fixed point ``w``, with ``psin`` vanishing to order ``>= n`` at ``w``,
the spectrum is

    {0} u {psi0(w) phi0'(w)^l : l < n}
        u {psi0(w) phi0'(w)^l + C(l, n) psin^(n)(w) phin'(w)^(l-n) : l >= n}

with the convention ``0^0 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DomainError, HypothesisError
from .operator import (
    FixedPointInfo,
    OperatorMatrix,
    OperatorSpec,
    build_matrix,
    common_fixed_point,
)
from .series import derivative_at

TIE_RTOL = 1e-12


def _as_array(M) -> np.ndarray:
    return np.asarray(M.entries if isinstance(M, OperatorMatrix) else M, dtype=complex)


class EigenPair(NamedTuple):
    value: complex
    residual: float
    flagged: bool = False


def eigenvalues(M, tol: float = 1e-8) -> list[EigenPair]:
    """All eigenvalues of a dense matrix, each with its eigenvector residual.

    ``residual = ||Mv - lambda v|| / ||v||``; pairs whose residual exceeds
    ``tol * ||M||_2`` are returned with ``flagged=True``.
    """
    A = _as_array(M)
    if A.shape[0] > 2048:
        raise DomainError("eigenvalues() is limited to N <= 2048")
    if A.size == 0:
        return []
    vals, vecs = scipy.linalg.eig(A)
    scale = np.linalg.norm(A, 2)
    out = []
    for k, lam in enumerate(vals):
        v = vecs[:, k]
        res = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v))
        out.append(EigenPair(complex(lam), res, res > tol * scale))
    return out


def operator_norm(M, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest singular value by power iteration on ``M^H M``.

    Starts from the normalized all-ones vector and stops once the
    eigen-residual of ``M^H M`` drops below ``tol`` times the Rayleigh
    quotient.
    """
    A = _as_array(M)
    n = A.shape[1]
    if n == 0:
        return 0.0
    AH = A.conj().T
    x = np.ones(n, dtype=complex) / math.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        y = AH @ (A @ x)
        lam = float(np.vdot(x, y).real)
        ynorm = np.linalg.norm(y)
        if ynorm == 0.0:
            return 0.0
        if np.linalg.norm(y - lam * x) <= tol * lam:
            return math.sqrt(lam)
        x = y / ynorm
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (last estimate {math.sqrt(max(lam, 0.0))})",
        last=x,
    )


class ArgmaxResult(NamedTuple):
    l_star: int
    value: float
    tie: bool


def argmax_l(n: int, r: float) -> ArgmaxResult:
    """Maximizer of ``C(l, n) r^(l-n)`` over integers ``l >= n``.

    ``l* = floor(n / (1 - r))``.  When ``n / (1 - r)`` is an integer the
    values at ``l*`` and ``l* - 1`` coincide; ``tie`` reports that case.
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    if not 0.0 <= r < 1.0:
        raise DomainError(f"argmax_l needs 0 <= r < 1, got {r}")
    x = n / (1.0 - r)
    k = round(x)
    tie = k > n and abs(x - k) <= TIE_RTOL * x
    l = k if tie else math.floor(x)
    return ArgmaxResult(l, math.comb(l, n) * r ** (l - n), tie)


def composition_norm_bounds(phi0_at_zero: complex, alpha: float) -> tuple[float, float]:
    """Two-sided bound on ``||C_phi||_alpha`` from ``|phi(0)|``."""
    a = abs(phi0_at_zero)
    if a >= 1.0:
        raise DomainError(f"|phi(0)| must be < 1, got {a}")
    e = (alpha + 2.0) / 2.0
    return (1.0 / (1.0 - a * a)) ** e, ((1.0 + a) / (1.0 - a)) ** e


@dataclass
class SpectrumReport:
    closed_form: list[tuple[Optional[int], complex]]
    numeric: list[EigenPair] = field(default_factory=list)
    radius_closed: float = 0.0
    l_star: Optional[int] = None
    alpha: float = -1.0
    trunc_degree: Optional[int] = None
    w: Optional[complex] = None
    notes: list[str] = field(default_factory=list)

    def closed_values(self) -> np.ndarray:
        return np.array([v for _, v in self.closed_form], dtype=complex)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "trunc_degree": self.trunc_degree,
            "fixed_point": self.w,
            "radius_closed": self.radius_closed,
            "l_star": self.l_star,
            "closed_form": [{"l": l, "value": v} for l, v in self.closed_form],
            "numeric": [
                {"value": p.value, "residual": p.residual, "flagged": p.flagged} for p in self.numeric
            ],
            "notes": list(self.notes),
        }


def _require_vanishing(psi, w, n):
    from .bounds import vanishing_order

    if n == 0:
        return
    if np.allclose(psi.coeffs, 0.0):
        return
    order = vanishing_order(psi, w)
    if order < n:
        raise HypothesisError(
            f"psi_n vanishes to order {order} at w = {w}, need at least {n}",
            "psi_n must vanish at the fixed point w to order >= n",
        )


def closed_form_spectrum(spec: OperatorSpec, fp: FixedPointInfo | None = None,
                         L_max: int | None = None, alpha: float = -1.0) -> SpectrumReport:
    """Closed-form eigenvalue candidates tagged by ``l`` (``None`` tags the point 0)."""
    notes = []
    if spec.is_diff_only and spec.phin.degree <= 0:
        # constant symbol: rank-one operator, eigenvector psi
        a = complex(spec.phin.coeffs[0])
        val = derivative_at(spec.psin, spec.n, a)
        cf = [(None, 0j)] + ([(spec.n, val)] if val != 0 else [])
        notes.append("constant symbol phi = a: spectrum {0, psi^(n)(a)}")
        rad = abs(val)
        return SpectrumReport(cf, radius_closed=rad, l_star=spec.n if val != 0 else None,
                              alpha=alpha, w=a, notes=notes)

    if fp is None:
        fp = common_fixed_point(spec)
    w = fp.w
    n = spec.n
    psi0_w = phi0_p = 0j
    if spec.weighted_comp:
        psi0_w = derivative_at(spec.psi0, 0, w)
        phi0_p = derivative_at(spec.phi0, 1, w)
    psin_n = phin_p = 0j
    if spec.diff_part:
        _require_vanishing(spec.psin, w, n)
        psin_n = derivative_at(spec.psin, n, w)
        phin_p = derivative_at(spec.phin, 1, w)

    if L_max is None:
        lstar = argmax_l(n, abs(phin_p)).l_star if spec.diff_part else 0
        L_max = max(3 * lstar, 50)

    cf: list[tuple[Optional[int], complex]] = [(None, 0j)]
    for l in range(L_max + 1):
        val = psi0_w * phi0_p**l
        if spec.diff_part and l >= n:
            val += math.comb(l, n) * psin_n * phin_p ** (l - n)
        cf.append((l, complex(val)))
    mods = np.array([abs(v) for _, v in cf])
    # ties go to the larger l, matching argmax_l
    k = int(np.flatnonzero(mods >= mods.max() * (1.0 - TIE_RTOL))[-1])
    return SpectrumReport(cf, radius_closed=mods[k], l_star=cf[k][0], alpha=alpha, w=w, notes=notes)


def spectral_radius_closed(spec: OperatorSpec, fp: FixedPointInfo | None = None) -> tuple[float, int]:
    """Spectral radius of a compact ``D_{psi,phi,n}`` with ``psi`` vanishing to order exactly ``n``."""
    from .bounds import vanishing_order

    if not spec.is_diff_only:
        raise HypothesisError("spectral_radius_closed takes a differentiation-only spec",
                              "operator must be D_{psi,phi,n} alone")
    psi, phi, n = spec.diff_part
    if fp is None:
        fp = common_fixed_point(spec)
    order = vanishing_order(psi, fp.w)
    if order != n:
        raise HypothesisError(
            f"psi vanishes to order {order} at w = {fp.w}, need exactly {n}",
            "psi must have a zero of order exactly n at the fixed point w",
        )
    psi_n = abs(derivative_at(psi, n, fp.w))
    r = abs(fp.phi_prime)
    if r == 0.0:
        return psi_n, n
    res = argmax_l(n, r)
    return psi_n * res.value, res.l_star


def spectrum_report(spec: OperatorSpec, alpha: float = -1.0, N: int = 128, tol: float = 1e-8,
                    L_max: int | None = None) -> SpectrumReport:
    """Closed form and numeric eigenvalues of the ``N``-section side by side."""
    report = closed_form_spectrum(spec, L_max=L_max, alpha=alpha)
    M = build_matrix(spec, alpha, N)
    report.numeric = sorted(eigenvalues(M, tol), key=lambda p: -abs(p.value))
    report.trunc_degree = N
    if report.w is not None and abs(report.w) > 0 and spec.phin is not None and spec.phin.degree > 0:
        report.notes.append("fixed point w != 0: section is not triangular, numeric values converge with N")
    if any(p.flagged for p in report.numeric):
        report.notes.append("some eigenpairs exceed the residual tolerance")
    return report


__all__ = [
    "ArgmaxResult",
    "EigenPair",
    "SpectrumReport",
    "argmax_l",
    "closed_form_spectrum",
    "composition_norm_bounds",
    "eigenvalues",
    "operator_norm",
    "spectral_radius_closed",
    "spectrum_report",
]

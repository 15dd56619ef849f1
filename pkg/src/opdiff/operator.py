"""Finite sections of ``C_{psi0,phi0} + D_{psin,phin,n}``.

``C_{psi,phi} f = psi * (f o phi)`` and ``D_{psi,phi,n} f = psi * (f^(n) o phi)``.
Matrices are taken in the orthonormal monomial basis ``e_m = z^m/||z^m||``
of the space selected by ``alpha``, restricted to degrees ``0..N-1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoInteriorFixedPointError, SelfMapError, SpecFormatError, HypothesisError
from .series import (
    DEFAULT_SAMPLES,
    TruncatedSeries,
    as_series,
    compose,
    derivative_at,
    differentiate,
    multiply,
    power,
    powers,
    sup_norm_estimate,
)
from .space import basis_weights, check_alpha

FIXED_POINT_STEP = 1e-14
FIXED_POINT_MAX_ITER = 10**6


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Symbols of the sum; either part may be omitted but not both."""

    weighted_comp: Optional[tuple[TruncatedSeries, TruncatedSeries]] = None
    diff_part: Optional[tuple[TruncatedSeries, TruncatedSeries, int]] = None

    def __post_init__(self):
        if self.weighted_comp is None and self.diff_part is None:
            raise SpecFormatError("an operator spec needs a composition part, a differentiation part, or both")
        if self.weighted_comp is not None:
            psi, phi = self.weighted_comp
            object.__setattr__(self, "weighted_comp", (as_series(psi), as_series(phi)))
        if self.diff_part is not None:
            psi, phi, n = self.diff_part
            if int(n) != n or n < 1:
                raise SpecFormatError(f"derivative order n must be a positive integer, got {n!r}")
            object.__setattr__(self, "diff_part", (as_series(psi), as_series(phi), int(n)))

    @classmethod
    def diff(cls, psi, phi, n: int = 1) -> "OperatorSpec":
        return cls(diff_part=(psi, phi, n))

    @classmethod
    def comp(cls, psi, phi) -> "OperatorSpec":
        return cls(weighted_comp=(psi, phi))

    @property
    def psi0(self):
        return self.weighted_comp[0] if self.weighted_comp else None

    @property
    def phi0(self):
        return self.weighted_comp[1] if self.weighted_comp else None

    @property
    def psin(self):
        return self.diff_part[0] if self.diff_part else None

    @property
    def phin(self):
        return self.diff_part[1] if self.diff_part else None

    @property
    def n(self) -> int:
        return self.diff_part[2] if self.diff_part else 0

    @property
    def is_diff_only(self) -> bool:
        return self.weighted_comp is None

    def symbols(self) -> list[TruncatedSeries]:
        out = []
        if self.weighted_comp:
            out.append(self.phi0)
        if self.diff_part:
            out.append(self.phin)
        return out

    def scaled(self, c: complex) -> "OperatorSpec":
        return OperatorSpec(
            (self.psi0 * c, self.phi0) if self.weighted_comp else None,
            (self.psin * c, self.phin, self.n) if self.diff_part else None,
        )

    def to_json(self) -> dict:
        doc = {}
        if self.weighted_comp:
            doc["psi0"] = self.psi0.to_json()
            doc["phi0"] = self.phi0.to_json()
        if self.diff_part:
            doc["psin"] = self.psin.to_json()
            doc["phin"] = self.phin.to_json()
            doc["n"] = self.n
        return doc

    @classmethod
    def from_json(cls, doc) -> "OperatorSpec":
        if not isinstance(doc, dict):
            raise SpecFormatError("operator spec must be a JSON object")
        unknown = set(doc) - {"psi0", "phi0", "psin", "phin", "n"}
        if unknown:
            raise SpecFormatError(f"unknown spec keys: {sorted(unknown)}")

        def series(key):
            val = doc[key]
            if not isinstance(val, list) or not val:
                raise SpecFormatError(f"{key}: expected a nonempty list of [re, im] pairs")
            for pair in val:
                if (not isinstance(pair, list) or len(pair) != 2
                        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
                    raise SpecFormatError(f"{key}: every coefficient must be a [re, im] pair of numbers")
            return TruncatedSeries.from_json(val)

        comp = diff = None
        if ("psi0" in doc) != ("phi0" in doc):
            raise SpecFormatError("psi0 and phi0 must be given together")
        if "psi0" in doc:
            comp = (series("psi0"), series("phi0"))
        dkeys = [k in doc for k in ("psin", "phin", "n")]
        if any(dkeys) and not all(dkeys):
            raise SpecFormatError("psin, phin and n must be given together")
        if all(dkeys):
            n = doc["n"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise SpecFormatError(f"n must be a positive integer, got {n!r}")
            diff = (series("psin"), series("phin"), n)
        return cls(comp, diff)


@dataclass(frozen=True)
class SelfMapReport:
    ok: bool
    sup_estimate: float
    margin: float

    def __bool__(self) -> bool:
        return self.ok


def validate_self_map(phi: TruncatedSeries, margin: float = 1e-6,
                      samples: int = DEFAULT_SAMPLES) -> SelfMapReport:
    """Whether the sampled circle maximum of |phi| stays below ``1 - margin``.

    ``sup_norm_estimate`` already includes the tail bound.
    """
    sup = sup_norm_estimate(phi, samples)
    return SelfMapReport(sup <= 1.0 - margin, sup, margin)


def require_self_map(phi: TruncatedSeries, margin: float = 1e-6) -> SelfMapReport:
    report = validate_self_map(phi, margin)
    if not report:
        raise SelfMapError(
            f"symbol is not a compact self-map: sampled sup |phi| = {report.sup_estimate:.12g}",
            "phi must map the closed disk into the open unit disk (sup |phi| < 1)",
        )
    return report


@dataclass(frozen=True)
class FixedPointInfo:
    w: complex
    phi_prime: complex
    higher_derivs: tuple[complex, ...] = ()

    @property
    def derivs(self) -> tuple[complex, ...]:
        """``(phi'(w), phi''(w), ...)``."""
        return (self.phi_prime,) + self.higher_derivs


def _horner(c: np.ndarray, z: complex) -> complex:
    acc = 0j
    for a in c[::-1]:
        acc = acc * z + a
    return acc


def find_fixed_point(phi: TruncatedSeries, max_iter: int = FIXED_POINT_MAX_ITER) -> FixedPointInfo:
    """Locate the interior fixed point by iterating ``phi`` from 0."""
    require_self_map(phi)
    c = phi.coeffs[: max(phi.degree, 0) + 1]
    c = np.array(c, dtype=complex)
    z = 0j
    for _ in range(max_iter):
        nz = _horner(c, z)
        if abs(nz - z) < FIXED_POINT_STEP:
            z = nz
            break
        z = nz
    else:
        raise NoInteriorFixedPointError(
            f"iteration of phi did not settle after {max_iter} steps (last {z})",
            "phi must have a fixed point inside the open unit disk",
        )
    deg = max(phi.degree, 1)
    d = [derivative_at(phi, k, z) for k in range(1, deg + 1)]
    if abs(_horner(c, z) - z) > 1e-12 or abs(d[0]) >= 1.0:
        raise NoInteriorFixedPointError(
            f"iteration limit {z} is not an attracting fixed point",
            "phi must have an attracting fixed point inside the open unit disk",
        )
    return FixedPointInfo(z, d[0], tuple(d[1:]))


def common_fixed_point(spec: OperatorSpec, tol: float = 1e-12) -> FixedPointInfo:
    """Fixed point shared by ``phi0`` and ``phin``.

    The returned derivatives belong to ``phin`` when a differentiation part
    exists, otherwise to ``phi0``.
    """
    primary = spec.phin if spec.diff_part else spec.phi0
    fp = find_fixed_point(primary)
    if spec.diff_part and spec.weighted_comp:
        require_self_map(spec.phi0)
        if abs(derivative_at(spec.phi0, 0, fp.w) - fp.w) > tol:
            raise HypothesisError(
                f"phi0 does not fix w = {fp.w}",
                "phi0 and phin must share a fixed point inside the open unit disk",
            )
    return fp


def symbol_fixed_point(phi: TruncatedSeries, w: complex) -> FixedPointInfo:
    """Derivative data of ``phi`` at a known fixed point ``w``."""
    deg = max(phi.degree, 1)
    d = [derivative_at(phi, k, w) for k in range(1, deg + 1)]
    return FixedPointInfo(w, d[0], tuple(d[1:]))


def apply_to_monomial(spec: OperatorSpec, m: int, N: int) -> TruncatedSeries:
    """Image of ``z^m`` truncated at degree ``N``."""
    out = TruncatedSeries.constant(0.0, N)
    if spec.weighted_comp:
        out = out + multiply(spec.psi0, power(spec.phi0, m, N), N)
    if spec.diff_part and m >= spec.n:
        n = spec.n
        term = multiply(spec.psin, power(spec.phin, m - n, N), N)
        out = out + term * float(math.perm(m, n))
    return out


def apply(spec: OperatorSpec, f: TruncatedSeries, N: int) -> TruncatedSeries:
    """``psi0 (f o phi0) + psin (f^(n) o phin)`` by series composition."""
    out = TruncatedSeries.constant(0.0, N)
    if spec.weighted_comp:
        out = out + multiply(spec.psi0, compose(f, spec.phi0, N), N)
    if spec.diff_part:
        fn = differentiate(f, spec.n)
        out = out + multiply(spec.psin, compose(fn, spec.phin, N), N)
    return out


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: np.ndarray
    alpha: float
    trunc_degree: int
    spec: Optional[OperatorSpec] = None

    @property
    def H(self) -> np.ndarray:
        return self.entries.conj().T

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self.entries:
            writer.writerow([f"{z.real:.15g},{z.imag:.15g}" for z in row])
        return buf.getvalue()


def monomial_columns(spec: OperatorSpec, N: int) -> np.ndarray:
    """``cols[i, j]`` = coefficient of ``z^i`` in the image of ``z^j``, for i, j < N."""
    D = N - 1
    cols = np.zeros((N, N), dtype=complex)
    if spec.weighted_comp:
        psi = spec.psi0
        for j, pj in enumerate(powers(spec.phi0, D, D)):
            cols[:, j] += multiply(psi, pj, D).coeffs
    if spec.diff_part and spec.n <= D:
        psi, phi, n = spec.diff_part
        for k, pk in enumerate(powers(phi, D - n, D)):
            j = k + n
            cols[:, j] += float(math.perm(j, n)) * multiply(psi, pk, D).coeffs
    return cols


def build_matrix(spec: OperatorSpec, alpha: float = -1.0, N: int = 128,
                 check: bool = True) -> OperatorMatrix:
    """Orthonormal-basis matrix of the operator on degrees ``0..N-1``."""
    check_alpha(alpha)
    if check:
        for phi in spec.symbols():
            require_self_map(phi)
    cols = monomial_columns(spec, N)
    s = np.sqrt(basis_weights(N, alpha))
    entries = cols * s[:, None] / s[None, :]
    entries.setflags(write=False)
    return OperatorMatrix(entries, float(alpha), N, spec)

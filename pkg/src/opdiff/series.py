"""Truncated complex power series.

A :class:`TruncatedSeries` is a coefficient vector ``c_0..c_N`` plus a
``tail_bound``: an upper bound for ``sup |f - p|`` over the closed unit disk,
where ``p`` is the stored polynomial.  Exact polynomials carry a zero tail.
All functions here are pure; series are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, TruncationError

DEFAULT_TRUNC = 128
DEFAULT_SAMPLES = 4096


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex).reshape(-1)
    if out.size == 0:
        out = np.zeros(1, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    coeffs: np.ndarray
    tail_bound: float = 0.0
    trunc_degree: int = field(init=False)

    def __post_init__(self):
        c = _frozen(self.coeffs)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "trunc_degree", c.size - 1)
        if not self.tail_bound >= 0.0:
            raise DomainError(f"tail_bound must be nonnegative, got {self.tail_bound!r}")
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: complex, N: int = 0) -> "TruncatedSeries":
        c = np.zeros(N + 1, dtype=complex)
        c[0] = value
        return cls(c)

    @classmethod
    def monomial(cls, k: int, coeff: complex = 1.0, N: int | None = None) -> "TruncatedSeries":
        N = k if N is None else N
        c = np.zeros(N + 1, dtype=complex)
        if k <= N:
            c[k] = coeff
        return cls(c)

    @classmethod
    def from_json(cls, pairs: Sequence[Sequence[float]]) -> "TruncatedSeries":
        return cls([complex(re, im) for re, im in pairs])

    def to_json(self) -> list[list[float]]:
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    # -- queries ----------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.tail_bound == 0.0

    @property
    def degree(self) -> int:
        """Index of the last nonzero stored coefficient (-1 for the zero series)."""
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else -1

    def l1_norm(self) -> float:
        """Certified upper bound for the sup of |f| on the closed disk."""
        return float(np.abs(self.coeffs).sum()) + self.tail_bound

    def __call__(self, z):
        return evaluate(self, z)

    def padded(self, N: int) -> "TruncatedSeries":
        """Re-truncate to degree ``N``; dropped coefficients move into the tail."""
        return _truncate(self.coeffs, N, self.tail_bound)

    # -- light arithmetic -------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other)
        N = max(self.trunc_degree, other.trunc_degree)
        c = np.zeros(N + 1, dtype=complex)
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += other.coeffs
        return TruncatedSeries(c, self.tail_bound + other.tail_bound)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs, self.tail_bound)

    def __sub__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return multiply(self, other, max(self.trunc_degree, other.trunc_degree))
        other = complex(other)
        return TruncatedSeries(self.coeffs * other, self.tail_bound * abs(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TruncatedSeries(N={self.trunc_degree}, tail={self.tail_bound:.3g}, coeffs={self.coeffs[:6]}...)"


def as_series(obj) -> TruncatedSeries:
    if isinstance(obj, TruncatedSeries):
        return obj
    if np.isscalar(obj):
        return TruncatedSeries.constant(obj)
    return TruncatedSeries(obj)


def _truncate(coeffs: np.ndarray, N: int, tail: float) -> TruncatedSeries:
    if coeffs.size > N + 1:
        dropped = float(np.abs(coeffs[N + 1:]).sum())
        return TruncatedSeries(coeffs[: N + 1], tail + dropped)
    out = np.zeros(N + 1, dtype=complex)
    out[: coeffs.size] = coeffs
    return TruncatedSeries(out, tail)


def evaluate(f: TruncatedSeries, z):
    """Value of the stored polynomial at ``z`` (scalar or array)."""
    return np.polynomial.polynomial.polyval(z, f.coeffs)


def multiply(f: TruncatedSeries, g: TruncatedSeries, N: int) -> TruncatedSeries:
    """Cauchy product truncated at degree ``N``.

    The tail is ``f.tail*|g| + g.tail*|f| + f.tail*g.tail`` with ``|.|`` the
    coefficient l1 norm, plus the l1 mass of coefficients cut above ``N``.
    """
    prod = np.convolve(f.coeffs, g.coeffs)
    fn = float(np.abs(f.coeffs).sum())
    gn = float(np.abs(g.coeffs).sum())
    tail = f.tail_bound * gn + g.tail_bound * fn + f.tail_bound * g.tail_bound
    return _truncate(prod, N, tail)


def power(f: TruncatedSeries, k: int, N: int) -> TruncatedSeries:
    if k < 0:
        raise DomainError("power needs a nonnegative exponent")
    result = TruncatedSeries.constant(1.0, N)
    base = f.padded(N)
    # square-and-multiply keeps the number of convolutions logarithmic
    while k:
        if k & 1:
            result = multiply(result, base, N)
        k >>= 1
        if k:
            base = multiply(base, base, N)
    return result


def powers(f: TruncatedSeries, kmax: int, N: int) -> list[TruncatedSeries]:
    """``[f**0, f**1, ..., f**kmax]``, each truncated at ``N``."""
    out = [TruncatedSeries.constant(1.0, N)]
    base = f.padded(N)
    for _ in range(kmax):
        out.append(multiply(out[-1], base, N))
    return out


def differentiate(f: TruncatedSeries, order: int = 1) -> TruncatedSeries:
    """Formal derivative of the stored polynomial. Requires an exact series."""
    if order and not f.is_exact:
        raise TruncationError("cannot differentiate a series with a nonzero tail bound")
    c = f.coeffs
    for _ in range(order):
        if c.size <= 1:
            c = np.zeros(1, dtype=complex)
            break
        c = c[1:] * np.arange(1, c.size)
    return TruncatedSeries(c)


def derivative_at(f: TruncatedSeries, order: int, w: complex) -> complex:
    """``f^(order)(w)``; exact for polynomials."""
    if order < 0:
        raise DomainError("derivative order must be nonnegative")
    if order > f.trunc_degree:
        if not f.is_exact:
            raise TruncationError(
                f"order {order} exceeds truncation degree {f.trunc_degree} of an inexact series"
            )
        return 0j
    k = np.arange(order, f.trunc_degree + 1)
    falling = np.ones(k.size)
    for i in range(order):
        falling *= k - i
    c = f.coeffs[order:] * falling
    return complex(np.polynomial.polynomial.polyval(w, c))


def derivatives_at(f: TruncatedSeries, w: complex, kmax: int) -> list[complex]:
    """``[f(w), f'(w), ..., f^(kmax)(w)]``."""
    return [derivative_at(f, k, w) for k in range(kmax + 1)]


def compose(f: TruncatedSeries, g: TruncatedSeries, N: int) -> TruncatedSeries:
    """``f o g`` by Horner's scheme in truncated arithmetic.

    A tail on ``f`` is only controlled when ``|g| <= 1`` on the disk.
    """
    deg = max(f.degree, 0)
    result = TruncatedSeries.constant(f.coeffs[deg], N)
    gN = g.padded(N)
    for k in range(deg - 1, -1, -1):
        result = multiply(result, gN, N) + f.coeffs[k]
    if not f.is_exact:
        if g.l1_norm() > 1.0:
            raise DomainError("composing an inexact series needs |g| <= 1 on the disk")
        result = TruncatedSeries(result.coeffs, result.tail_bound + f.tail_bound)
    return result


def blaschke_series(w: complex, N: int = DEFAULT_TRUNC) -> TruncatedSeries:
    """Taylor expansion of ``(w - z)/(1 - conj(w) z)`` to degree ``N``."""
    w = complex(w)
    r = abs(w)
    if r >= 1.0:
        raise DomainError(f"Blaschke factor needs |w| < 1, got {w}")
    c = np.empty(N + 1, dtype=complex)
    c[0] = w
    if N >= 1:
        c[1:] = -(1.0 - r * r) * np.conj(w) ** np.arange(N)
    return TruncatedSeries(c, (1.0 + r) * r**N if r else 0.0)


def circle_values(f: TruncatedSeries, samples: int) -> np.ndarray:
    """Values at ``exp(2 pi i k / samples)``, computed by an aliased FFT."""
    folded = np.zeros(samples, dtype=complex)
    np.add.at(folded, np.arange(f.coeffs.size) % samples, f.coeffs)
    return np.fft.ifft(folded) * samples


def sup_norm_estimate(f: TruncatedSeries, samples: int = DEFAULT_SAMPLES) -> float:
    """Sampled maximum of |f| on the unit circle plus the tail bound.

    Without the tail this is a lower estimate of the sup norm; it is exact
    when the maximum modulus is attained at a sample point.
    """
    if samples < 64:
        raise DomainError("sup_norm_estimate needs at least 64 samples")
    return float(np.abs(circle_values(f, samples)).max()) + f.tail_bound


@dataclass(frozen=True)
class BellTable:
    """Partial Bell polynomials ``B_{j,k}`` for a fixed ``j`` and ``k = 1..j``."""

    order: int
    entries: tuple[complex, ...]

    def __getitem__(self, k: int) -> complex:
        if not 1 <= k <= self.order:
            raise IndexError(k)
        return self.entries[k - 1]

    def __len__(self) -> int:
        return self.order


def bell_triangle(xs: Sequence[complex], J: int) -> np.ndarray:
    """Array ``B[j, k]`` of partial Bell polynomials in ``x_1..x_J``, 0 <= k <= j <= J."""
    x = np.asarray(list(xs)[:J], dtype=complex)
    if x.size < J:
        raise DomainError(f"need {J} derivative values, got {x.size}")
    B = np.zeros((J + 1, J + 1), dtype=complex)
    B[0, 0] = 1.0
    for j in range(1, J + 1):
        for k in range(1, j + 1):
            s = 0j
            for i in range(1, j - k + 2):
                s += math.comb(j - 1, i - 1) * x[i - 1] * B[j - i, k - 1]
            B[j, k] = s
    return B


def bell_coefficients(phi_derivs: Sequence[complex], j: int) -> BellTable:
    """``B_{j,k}(phi'(w), phi''(w), ...)`` for ``k = 1..j``.

    These expand ``(f o phi)^(j)(w) = sum_k f^(k)(phi(w)) B_{j,k}``.
    """
    if j == 0:
        return BellTable(0, ())
    B = bell_triangle(phi_derivs, j)
    return BellTable(j, tuple(complex(b) for b in B[j, 1: j + 1]))


def from_coeffs(values: Iterable[complex]) -> TruncatedSeries:
    return TruncatedSeries(list(values))

"""The Hilbert spaces H^2 (alpha = -1) and A^2_alpha (alpha > -1).

Monomials are orthogonal in every one of these spaces, with
``||z^m||^2 = w_m(alpha)``.  Everything else follows from the weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .series import DEFAULT_TRUNC, TruncatedSeries

HARDY = -1.0


@dataclass(frozen=True)
class SpaceParams:
    alpha: float = HARDY

    def __post_init__(self):
        check_alpha(self.alpha)

    @property
    def is_hardy(self) -> bool:
        return self.alpha == HARDY

    def weights(self, N: int) -> np.ndarray:
        return basis_weights(N, self.alpha)


def check_alpha(alpha: float) -> float:
    if not alpha >= -1.0:
        raise DomainError(f"alpha must be -1 (Hardy) or > -1 (Bergman), got {alpha}")
    return float(alpha)


def basis_weight(m: int, alpha: float) -> float:
    """``||z^m||^2_alpha``."""
    return float(basis_weights(m + 1, alpha)[m])


def basis_weights(N: int, alpha: float) -> np.ndarray:
    """``[w_0, ..., w_{N-1}]`` via ``w_m = w_{m-1} * m / (m + alpha + 1)``."""
    check_alpha(alpha)
    m = np.arange(1, N, dtype=float)
    ratios = m / (m + alpha + 1.0)
    return np.concatenate([[1.0], np.cumprod(ratios)])[:N]


def inner_product(f: TruncatedSeries, g: TruncatedSeries, alpha: float) -> complex:
    n = min(f.coeffs.size, g.coeffs.size)
    w = basis_weights(n, alpha)
    return complex(np.sum(f.coeffs[:n] * np.conj(g.coeffs[:n]) * w))


def norm(f: TruncatedSeries, alpha: float) -> float:
    return float(np.sqrt(inner_product(f, f, alpha).real))


def to_orthonormal(f: TruncatedSeries, alpha: float, N: int) -> np.ndarray:
    """Coordinates of ``f`` in ``e_m = z^m / ||z^m||`` for ``m < N``."""
    c = np.zeros(N, dtype=complex)
    k = min(N, f.coeffs.size)
    c[:k] = f.coeffs[:k]
    return c * np.sqrt(basis_weights(N, alpha))


def from_orthonormal(v: np.ndarray, alpha: float) -> TruncatedSeries:
    v = np.asarray(v, dtype=complex)
    return TruncatedSeries(v / np.sqrt(basis_weights(v.size, alpha)))


@dataclass(frozen=True, eq=False)
class KernelSeries:
    w: complex
    n: int
    alpha: float
    series: TruncatedSeries

    @property
    def coeffs(self) -> np.ndarray:
        return self.series.coeffs


def _rising(x: float, n: int) -> float:
    out = 1.0
    for i in range(n):
        out *= x + i
    return out


def kernel_series(w: complex, n: int, alpha: float, N: int = DEFAULT_TRUNC) -> KernelSeries:
    """Taylor expansion of ``(alpha+2)...(alpha+n+1) z^n / (1 - conj(w) z)^(n+alpha+2)``.

    The result reproduces ``n``-th derivatives at ``w``:
    ``<f, K> = f^(n)(w)``.
    """
    check_alpha(alpha)
    w = complex(w)
    r = abs(w)
    if r >= 1.0:
        raise DomainError(f"kernel base point needs |w| < 1, got {w}")
    if n < 0:
        raise DomainError("kernel derivative order must be nonnegative")
    lead = _rising(alpha + 2.0, n)
    s = n + alpha + 2.0  # exponent of the denominator
    c = np.zeros(N + 1, dtype=complex)
    if N < n:
        tail = lead * (1.0 - r) ** (-s)
        return KernelSeries(w, n, alpha, TruncatedSeries(c, tail))
    T = N - n
    t = np.arange(1, T + 1, dtype=float)
    # binomial coefficients of (1 - x)^(-s): prod (s + t - 1) / t
    binom = np.concatenate([[1.0], np.cumprod((s + t - 1.0) / t)])
    c[n:] = lead * binom * np.conj(w) ** np.arange(T + 1)
    tail = 0.0
    if r > 0.0:
        nxt = lead * binom[-1] * (s + T) / (T + 1) * r ** (T + 1)
        ratio = (s + T + 1) / (T + 2) * r
        tail = nxt / (1.0 - ratio) if ratio < 1.0 else float("inf")
    return KernelSeries(w, n, alpha, TruncatedSeries(c, tail))

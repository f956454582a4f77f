"""Finite model of a p-adic ball and its dual group.

The ball of radius p**N in the field of p-adic numbers is a compact
additive group.  Functions constant on cosets of the sub-ball of radius
p**(-M) form a finite-dimensional space indexed by the quotient group,
which is cyclic of order S = p**(N+M).  Coset representatives are the
points x = p**(-N) * n for n in {0, ..., S-1}; dual frequencies are
xi = p**(-M) * k for k in {0, ..., S-1}.  The pairing of a point with a
frequency is exp(2*pi*i * n*k / S), with the integer product reduced
mod S exactly before any floating-point call.

Absolute values are p-adic: |x|_p = p**(N - v) where v is the p-adic
valuation of the representative integer n.  The zero coset is reported
with the sentinel 0.0 (it stands for the whole sub-ball, where the
radial profile is not resolved).

Everything here is exact integer combinatorics plus the scalar
constants of the fractional operator of order alpha:

* ``lambda_value(p, alpha, N)``, the smallest eigenvalue, attained on
  constants, and
* ``coefficient_ap(p, alpha)``, the negative normalisation of the
  hypersingular difference form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_ORDER_CAP = 1 << 20


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BallModel:
    """Quotient of the radius-p**N ball by the radius-p**(-M) sub-ball.

    Parameters
    ----------
    p : prime.
    N : ball radius exponent (may be negative).
    M : resolution exponent (may be negative); N + M >= 0 is required.
    order_cap : refuse group orders p**(N+M) above this bound.

    Instances are immutable and hashable.  Derived lookup tables
    (valuations, absolute values, twiddle factors) are cached per model
    and shared read-only, so models are safe to use concurrently.
    """

    p: int
    N: int
    M: int
    order_cap: int = field(default=DEFAULT_ORDER_CAP, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.p, int) or not _is_prime(self.p):
            raise ValueError(f"p must be a prime integer, got {self.p!r}")
        if self.N + self.M < 0:
            raise ValueError(f"need N + M >= 0, got N={self.N}, M={self.M}")
        order = self.p ** (self.N + self.M)
        if order > self.order_cap:
            raise ValueError(
                f"group order p**(N+M) = {order} exceeds the cap {self.order_cap}"
            )

    @property
    def S(self) -> int:
        """Group order p**(N+M)."""
        return self.p ** (self.N + self.M)

    def _check_index(self, n: int) -> None:
        if not 0 <= n < self.S:
            raise IndexError(f"index {n} out of range [0, {self.S})")

    def valuation(self, n: int) -> int:
        """p-adic valuation of the representative integer n.

        The zero representative is mapped to N + M, one more than any
        nonzero representative can reach.
        """
        self._check_index(n)
        if n == 0:
            return self.N + self.M
        v = 0
        while n % self.p == 0:
            n //= self.p
            v += 1
        return v

    def point_abs(self, n: int) -> float:
        """|x|_p of the point x = p**(-N) * n; 0.0 for the zero coset."""
        self._check_index(n)
        if n == 0:
            return 0.0
        return float(self.p) ** (self.N - self.valuation(n))

    def freq_abs(self, k: int) -> float:
        """|xi|_p of the frequency xi = p**(-M) * k; 0.0 for k = 0."""
        self._check_index(k)
        if k == 0:
            return 0.0
        return float(self.p) ** (self.M - self.valuation(k))

    def character(self, n: int, k: int) -> complex:
        """Pairing exp(2*pi*i * n*k / S); the product n*k is reduced mod S exactly."""
        self._check_index(n)
        self._check_index(k)
        r = (n * k) % self.S
        return cmath.exp(2j * math.pi * (r / self.S))


@lru_cache(maxsize=64)
def valuation_table(model: BallModel) -> np.ndarray:
    """Valuations of all S representatives; entry 0 holds the sentinel N + M."""
    S = model.S
    val = np.zeros(S, dtype=np.int64)
    q = model.p
    while q < S:
        val[q::q] += 1
        q *= model.p
    if S > 0:
        val[0] = model.N + model.M
    return _readonly(val)


@lru_cache(maxsize=64)
def point_abs_table(model: BallModel) -> np.ndarray:
    """|x|_p for every representative, with 0.0 at the zero coset."""
    v = valuation_table(model)
    t = np.power(float(model.p), model.N - v.astype(np.float64))
    t[0] = 0.0
    return _readonly(t)


@lru_cache(maxsize=64)
def freq_abs_table(model: BallModel) -> np.ndarray:
    """|xi|_p for every frequency index, with 0.0 at k = 0."""
    v = valuation_table(model)
    t = np.power(float(model.p), model.M - v.astype(np.float64))
    t[0] = 0.0
    return _readonly(t)


def lambda_value(p: int, alpha: float, N: int) -> float:
    """Smallest eigenvalue of the ball operator of order alpha.

    Equals (p-1)/(p**(alpha+1)-1) * p**(alpha*(1-N)).  It is attained
    exactly on constant functions and is strictly below the smallest
    nonzero-frequency eigenvalue p**(alpha*(1-N)).
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return (p - 1) / (float(p) ** (alpha + 1) - 1.0) * float(p) ** (alpha * (1 - N))


def coefficient_ap(p: int, alpha: float) -> float:
    """Normalisation (1 - p**alpha)/(1 - p**(-alpha-1)) of the difference form; negative."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return (1.0 - float(p) ** alpha) / (1.0 - float(p) ** (-alpha - 1.0))


@dataclass(frozen=True)
class Constants:
    """Scalar constants of the order-alpha operator on the radius-p**N ball."""

    p: int
    alpha: float
    N: int

    def __post_init__(self) -> None:
        if not _is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p!r}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def lam(self) -> float:
        return lambda_value(self.p, self.alpha, self.N)

    @property
    def a_p(self) -> float:
        return coefficient_ap(self.p, self.alpha)

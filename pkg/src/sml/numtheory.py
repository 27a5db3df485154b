"""lcm towers, non-divisor classification, tail sums, parameter selection.

The two lcm families are distinct objects: the tower value at depth j is
lcm{1,...,2^j}, while lcm_range(k) = lcm{1,...,k} is the plain range lcm.
Divisibility tests against either must be exact, so everything here stays in
arbitrary-precision integers / Fractions; floats appear only in the tail sums
where they are the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import ParameterError

MAX_TOWER_DEPTH = 20


def primes_up_to(n: int) -> list[int]:
    """Simple sieve up to n inclusive."""
    if n < 2:
        return []
    sieve = bytearray(b"\x01") * (n + 1)
    sieve[:2] = b"\x00\x00"
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            start = p * p
            sieve[start : n + 1 : p] = b"\x00" * ((n - start) // p + 1)
    return [i for i, v in enumerate(sieve) if v]


def _tree_prod(vals: list[int]) -> int:
    """Balanced product; quadratic blowup of sequential big-int products avoided."""
    if not vals:
        return 1
    while len(vals) > 1:
        vals = [vals[i] * vals[i + 1] for i in range(0, len(vals) - 1, 2)] + (
            [vals[-1]] if len(vals) % 2 else []
        )
    return vals[0]


@lru_cache(maxsize=None)
def lcm_range(n: int) -> int:
    """Exact lcm{1,...,n}, as the product of maximal prime powers p^a <= n."""
    if n < 1:
        raise ParameterError("lcm_range requires n >= 1")
    powers = []
    for p in primes_up_to(n):
        pw = p
        while pw * p <= n:
            pw *= p
        powers.append(pw)
    return _tree_prod(powers)


@dataclass(frozen=True)
class LcmTower:
    """Depth j together with the tower value lcm{1,...,2^j}."""

    depth: int
    value: int


def q_of_depth(j: int) -> LcmTower:
    """Tower element at depth j; value = lcm_range(2^j) computed exactly."""
    if j < 0:
        raise ParameterError("tower depth must be >= 0")
    if j > MAX_TOWER_DEPTH:
        raise ParameterError(f"tower depth {j} exceeds cap {MAX_TOWER_DEPTH}")
    return LcmTower(depth=j, value=lcm_range(1 << j))


@lru_cache(maxsize=None)
def tower_value(j: int) -> int:
    return q_of_depth(j).value


LARGE_PRIME = "large_prime"
SMALL_PRIME_POWER = "small_prime_power"


@dataclass(frozen=True)
class NondivisorWitness:
    """Certificate that q does not divide lcm{1..k}.

    kind is "large_prime" (a prime p > k divides q) or "small_prime_power"
    (p <= k and p^{a_p} | q where a_p = min{a : k < p^a}).
    """

    q: int
    k: int
    kind: str
    p: int
    exponent: Optional[int] = None


def _factorize(q: int) -> dict[int, int]:
    """Prime factorization by trial division; fine for the sizes used here."""
    fac: dict[int, int] = {}
    for p in (2, 3):
        while q % p == 0:
            fac[p] = fac.get(p, 0) + 1
            q //= p
    p = 5
    while p * p <= q:
        while q % p == 0:
            fac[p] = fac.get(p, 0) + 1
            q //= p
        p += 2 if p % 3 == 2 else 4  # skip multiples of 2 and 3
    if q > 1:
        fac[q] = fac.get(q, 0) + 1
    return fac


def min_exceeding_power(p: int, k: int) -> int:
    """a_p = min{a : k < p^a}."""
    a, pw = 1, p
    while pw <= k:
        pw *= p
        a += 1
    return a


def classify_nondivisor(q: int, k: int) -> Optional[NondivisorWitness]:
    """Witness that q does not divide lcm{1..k}, or None when it does.

    When both a large prime and a small prime power certify non-divisibility
    the large-prime witness wins; within each case the smallest qualifying
    prime is chosen, so the output is deterministic.
    """
    if q < 1 or k < 1:
        raise ParameterError("classify_nondivisor requires q >= 1 and k >= 1")
    factors = _factorize(q)
    large = sorted(p for p in factors if p > k)
    if large:
        return NondivisorWitness(q=q, k=k, kind=LARGE_PRIME, p=large[0])
    for p in sorted(factors):
        a_p = min_exceeding_power(p, k)
        if factors[p] >= a_p:
            return NondivisorWitness(
                q=q, k=k, kind=SMALL_PRIME_POWER, p=p, exponent=a_p
            )
    return None


@dataclass(frozen=True)
class TailSum:
    sum: float
    truncation_bound: float


@lru_cache(maxsize=128)
def _nondivisor_mask(k: int, q_max: int) -> np.ndarray:
    """Boolean mask over q = 1..q_max marking q that do not divide lcm{1..k}."""
    big = lcm_range(k)
    mask = np.zeros(q_max + 1, dtype=bool)
    for q in range(2, q_max + 1):
        if big % q:
            mask[q] = True
    return mask


def tail_sum(r: float, k: int, q_max: int) -> TailSum:
    """sum_{q <= q_max, q not dividing lcm{1..k}} q^-r plus a tail certificate.

    The full series is infinite; the omitted part sum_{q > q_max} q^-r is
    bounded by the integral estimate q_max^(1-r)/(r-1), reported alongside so
    the approximation error is explicit rather than silently absorbed.
    """
    if r <= 1:
        raise ParameterError("tail_sum requires r > 1 (series diverges otherwise)")
    if q_max < k:
        raise ParameterError("tail_sum requires q_max >= k")
    mask = _nondivisor_mask(k, q_max)
    q = np.nonzero(mask)[0].astype(np.float64)
    total = float(np.sum(q ** (-float(r)))) if q.size else 0.0
    bound = float(q_max) ** (1.0 - r) / (r - 1.0)
    return TailSum(sum=total, truncation_bound=bound)


def _floor_log2(x: Fraction) -> int:
    """Largest k with 2^k <= x, for exact positive rationals."""
    if x <= 0:
        raise ParameterError("log2 of non-positive value")
    k = x.numerator.bit_length() - x.denominator.bit_length()
    if Fraction(2) ** k > x:
        k -= 1
    return k


def _ceil_log2(x: Fraction) -> int:
    k = _floor_log2(x)
    return k if Fraction(2) ** k == x else k + 1


def select_params(eta, L: int) -> tuple[int, int]:
    """Pick (j, k) with 2^k <= eta^-2 * L <= 2^(k+1) and minimal j with 2^j >= eta^-2.

    Requires L >= (lcm{1 <= q <= ceil(eta^-2)})^4.  The returned pair always
    satisfies 2^(k-j) <= L, which is what makes the coarser frequency region
    at (j, k) sit inside the (eta, L) region.
    """
    eta = Fraction(eta)
    if not 0 < eta <= 1:
        raise ParameterError("eta must be a rational in (0, 1]")
    if L < 1:
        raise ParameterError("L must be a positive integer")
    inv2 = 1 / (eta * eta)
    threshold = lcm_range(math.ceil(inv2)) ** 4
    if L < threshold:
        raise ParameterError(
            f"L={L} below the admissible threshold {threshold} for eta={eta}"
        )
    k = _floor_log2(inv2 * L)
    j = _ceil_log2(inv2)
    assert Fraction(2) ** (k - j) <= L
    return j, k

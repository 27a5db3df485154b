"""Farey dissection, quadratic Gauss sums, arc-local theta evaluation, and the
stratified estimate of the arc-integral bound.

Levels are powers of two.  At level 2^k the circle is tiled by arcs around the
reduced fractions a/q with q <= 2^k; the boundary between neighbouring
fractions is their midpoint (min-distance dissection), with 0 identified with
1 so the fraction 1/1 owns a two-sided arc.  Everything about arcs is exact
rational arithmetic; only multiplier magnitudes are floats.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import ParameterError, ResourceError
from .numtheory import primes_up_to, tower_value
from .rng import Xorshift64Star
from .spectral import as_torus_point, dist_to_grid, theta_1d

# ---------------------------------------------------------------------------
# Farey dissection
# ---------------------------------------------------------------------------

FULL_ENUMERATION_MAX_LEVEL = 12


@dataclass(frozen=True)
class FareyArc:
    """Arc of the reduced fraction a/q at level 2^k.

    left <= a/q <= right with right - left the exact arc length; only the arc
    of 1/1 may have right > 1 (its wrap-around tail [1, right] lives at the
    start of the circle).  Lengths obey

        2^-k / q  <=  length  <=  1 / (q (2^k - q + 1)),

    which sharpens to the familiar 2^{-k+1}/q once q <= 2^{k-1} + 1; larger
    denominators can have a small-denominator neighbour and a longer arc.
    """

    a: int
    q: int
    left: Fraction
    right: Fraction
    level: int

    @property
    def center(self) -> Fraction:
        return Fraction(self.a, self.q)

    @property
    def length(self) -> Fraction:
        return self.right - self.left


def farey_fractions(k: int):
    """All reduced fractions in (0, 1] with denominator <= 2^k, ascending."""
    limit = 1 << k
    a, b, c, d = 0, 1, 1, limit
    out = [Fraction(c, d)]
    while c < d or d > 1:
        step = (b + limit) // d
        a, b, c, d = c, d, step * c - a, step * d - b
        out.append(Fraction(c, d))
        if c == 1 and d == 1:
            break
    return out


def farey_arcs(k: int) -> list[FareyArc]:
    """Every arc of the level-2^k dissection, in fraction order."""
    if k < 0:
        raise ParameterError("farey_arcs requires k >= 0")
    if k > FULL_ENUMERATION_MAX_LEVEL:
        raise ResourceError(
            f"level 2^{k} has ~{0.304 * 4.0**k:.2e} arcs; "
            "use the stratified sampler (stbound_ratio) instead"
        )
    if k == 0:
        return [FareyArc(1, 1, Fraction(0), Fraction(1), 1)]
    fracs = farey_fractions(k)
    level = 1 << k
    arcs = []
    for i, f in enumerate(fracs):
        prev = fracs[i - 1] if i else Fraction(0)  # 0/1 is 1/1 wrapped
        nxt = fracs[i + 1] if i + 1 < len(fracs) else 1 + fracs[0]
        arcs.append(
            FareyArc(f.numerator, f.denominator, (prev + f) / 2, (f + nxt) / 2, level)
        )
    return arcs


def farey_neighbors(a: int, q: int, k: int) -> tuple[Fraction, Fraction]:
    """Neighbouring fractions of a/q in the level-2^k dissection, exactly.

    Uses the adjacency identity |a r - p q| = 1: the neighbour denominators
    are the largest r <= 2^k with a r = +-1 (mod q), so no enumeration is
    needed even at levels far beyond full dissection range.
    """
    limit = 1 << k
    if q > limit or math.gcd(a, q) != 1 or not 0 < a <= q:
        raise ParameterError("need a reduced fraction a/q with 0 < a <= q <= 2^k")
    if q == 1:
        return Fraction(limit - 1, limit), 1 + Fraction(1, limit)
    inv = pow(a, -1, q)
    r_low = inv + q * ((limit - inv) // q)
    p_low = (a * r_low - 1) // q
    r_high = (q - inv) + q * ((limit - (q - inv)) // q)
    p_high = (a * r_high + 1) // q
    return Fraction(p_low, r_low), Fraction(p_high, r_high)


def arc_of(a: int, q: int, k: int) -> FareyArc:
    """The exact arc of a/q at level 2^k via its two neighbours."""
    low, high = farey_neighbors(a, q, k)
    f = Fraction(a, q)
    return FareyArc(a, q, (low + f) / 2, (f + high) / 2, 1 << k)


def _farey_bracket(t: Fraction, limit: int) -> tuple[Fraction, Fraction]:
    """Fractions of F_limit immediately below and above t (continued fractions)."""
    if t.denominator <= limit:
        return t, t
    p0, q0, p1, q1 = 0, 1, 1, 0
    n, d = t.numerator, t.denominator
    while d:
        a = n // d
        p2, q2 = a * p1 + p0, a * q1 + q0
        if q2 > limit:
            j = (limit - q0) // q1
            other = Fraction(j * p1 + p0, j * q1 + q0)
            conv = Fraction(p1, q1)
            return (conv, other) if conv <= t else (other, conv)
        p0, q0, p1, q1 = p1, q1, p2, q2
        n, d = d, n - a * d
    raise AssertionError("unreachable: exact fraction handled above")


def locate(t, k: int) -> tuple[int, int, Fraction]:
    """Level-2^k fraction closest to t among those within 2^-k / q of it.

    The returned tau is the signed circle offset, t = a/q + tau (mod 1), and
    always satisfies |tau| <= 2^-k / q (the bound every arc estimate rests
    on).  The unconditionally closest fraction can violate that bound when
    its denominator exceeds 2^{k-1} and a small-denominator fraction sits
    just beyond the midpoint; the admissible set is never empty because the
    last continued-fraction convergent with denominator <= 2^k qualifies.
    Ties go to the smaller denominator, then the smaller numerator.
    """
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise ParameterError("locate expects t in [0, 1]")
    limit = 1 << k
    if t.denominator <= limit:
        if t == 0 or t == 1:
            return 1, 1, Fraction(0)
        cands = [(Fraction(0), t.denominator, t.numerator)]
    else:
        lower, upper = _farey_bracket(t, limit)
        cands = []
        for f in (lower, upper):
            if f == 0:
                dist, q, a = t, 1, 1  # wrap: distance to 1/1 through 0
            else:
                dist, q, a = abs(t - f), f.denominator, f.numerator
            if dist * q * limit <= 1:
                cands.append((dist, q, a))
    if not cands:
        raise AssertionError("no admissible fraction; convergent should qualify")
    dist, q, a = min(cands)
    tau = t - Fraction(a, q)
    tau -= round(tau)  # wrap the offset into (-1/2, 1/2]
    return a, q, tau


# ---------------------------------------------------------------------------
# Gauss sums
# ---------------------------------------------------------------------------


def gauss_sum(a: int, q: int) -> complex:
    """G(a, q) = sum_{x mod q} e^{2 pi i a x^2 / q} by direct summation.

    Phases are reduced mod q in integers before exponentiation, so the value
    stays accurate for q well beyond where naive a*x^2 phases lose digits.
    """
    if q < 1:
        raise ParameterError("gauss_sum requires q >= 1")
    if math.gcd(a, q) != 1:
        raise ParameterError("gauss_sum requires gcd(a, q) = 1")
    x = np.arange(q, dtype=np.int64)
    residues = (a % q) * ((x * x) % q) % q
    return complex(np.exp(2j * np.pi * (residues / q)).sum())


def gauss_sum_compensated(a: int, q: int) -> complex:
    """Independent check route: reversed-order summation with math.fsum."""
    if math.gcd(a, q) != 1:
        raise ParameterError("gauss_sum requires gcd(a, q) = 1")
    res = [(a * x * x) % q for x in range(q - 1, -1, -1)]
    re = math.fsum(math.cos(2 * math.pi * r / q) for r in res)
    im = math.fsum(math.sin(2 * math.pi * r / q) for r in res)
    return complex(re, im)


def jacobi_symbol(a: int, n: int) -> int:
    """Jacobi symbol (a|n) for odd n >= 1."""
    if n <= 0 or n % 2 == 0:
        raise ParameterError("jacobi_symbol needs odd n >= 1")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def _twisted_odd(A: int, b: int, m: int) -> complex:
    """S(A, b, m) for odd m, gcd(A, m) = 1, via completing the square."""
    if m == 1:
        return 1 + 0j
    inv4A = pow(4 * A, -1, m)
    phase = (-(b * b) * inv4A) % m
    eps = 1 if m % 4 == 1 else 1j
    return cmath.exp(2j * math.pi * phase / m) * jacobi_symbol(A, m) * eps * math.sqrt(m)


def _twisted_two_power(A: int, b: int, e: int) -> complex:
    """S(A, b, 2^e) for odd A."""
    two = 1 << e
    if e == 1:
        return 2 + 0j if (A + b) % 2 == 0 else 0j
    if b % 2 == 1:
        return 0j
    bp = b // 2
    invA = pow(A, -1, two)
    phase = (-(bp * bp) * invA) % two
    sign = -1 if (A * A - 1) // 8 % 2 else 1
    unit = 1 + (1j if A % 4 == 1 else -1j)
    return cmath.exp(2j * math.pi * phase / two) * (sign**e) * math.sqrt(two) * unit


def gauss_sum_twisted(a: int, b: int, q: int) -> complex:
    """S(a, b, q) = sum_{s mod q} e^{2 pi i (a s^2 + b s)/q} in closed form.

    Splits q into its 2-part and odd part (the sum is multiplicative across
    coprime moduli), evaluates the odd part with the Jacobi-symbol formula and
    the 2-part with the classical 2^{e/2}(1 + i^a) evaluation.  O(log q),
    which is what the deep-level arc sweeps rely on.
    """
    if q < 1 or math.gcd(a, q) != 1:
        raise ParameterError("gauss_sum_twisted requires q >= 1, gcd(a, q) = 1")
    e = (q & -q).bit_length() - 1
    m = q >> e
    value = 1 + 0j
    if m > 1:
        value *= _twisted_odd((a << e) % m, b % m, m)
    if e:
        value *= _twisted_two_power((a * m) % (1 << e), b % (1 << e), e)
    return value


def gauss_sum_twisted_direct(a: int, b: int, q: int) -> complex:
    """Brute-force twisted sum; the oracle for gauss_sum_twisted."""
    x = np.arange(q, dtype=np.int64)
    residues = ((a % q) * ((x * x) % q) + b % q * x) % q
    return complex(np.exp(2j * np.pi * (residues / q)).sum())


# ---------------------------------------------------------------------------
# Arc-local theta evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaAtPoint:
    """One theta factor at an arc point, with its estimate ingredients.

    value     -- the theta factor itself
    tail      -- certified bound on the truncation error of value
    rhs       -- sum of Gaussian weights e^{-(pi/2) u^2 / s} over the window
    main      -- the single weight at the nearest arc-grid point
    rest      -- rhs - main (the off-center remainder)
    """

    value: complex
    tail: float
    rhs: float
    main: float
    rest: float


class ArcTheta:
    """Evaluator of theta factors for t = a/q + tau on one arc.

    One Poisson summation step turns the lattice theta sum into

        (-2iz)^{-1/2} q^{-1} sum_l S(a, l, q) e^{-pi i (beta + l/q)^2 / (2z)}

    with z = tau + i*eps and S the twisted quadratic Gauss sum.  The l-sum has
    Gaussian decay on the scale sqrt(eps + tau^2/eps), so a dozen terms buy
    full precision at any level; the twisted sums are closed-form, so the cost
    is O(log q) regardless of q.  Validated against theta_1d in the tests and
    inside the sweeps.
    """

    def __init__(self, a: int, q: int, eps: float, tol: float = 1e-18):
        if q < 1 or math.gcd(a, q) != 1:
            raise ParameterError("ArcTheta requires a reduced fraction")
        self.a, self.q, self.eps, self.tol = a, q, eps, tol
        self._twists: dict[int, complex] = {}

    def _twist(self, r: int) -> complex:
        if r not in self._twists:
            self._twists[r] = gauss_sum_twisted(self.a, r, self.q)
        return self._twists[r]

    def eval(self, tau, beta) -> ThetaAtPoint:
        q, eps = self.q, self.eps
        tau_f = float(tau)
        z = complex(tau_f, eps)
        s_scale = eps + tau_f * tau_f / eps
        cut = math.sqrt(2.0 * s_scale * math.log(1.0 / self.tol) / math.pi)
        beta = Fraction(beta) % 1
        beta_f = float(beta)
        center = -beta_f
        lo = math.floor(q * (center - cut)) - 1
        hi = math.ceil(q * (center + cut)) + 1
        pref = 1.0 / (q * cmath.sqrt(-2j * z))
        half_over = -1j * math.pi / (2 * z)
        coef = math.pi / (2.0 * s_scale)
        total = 0j
        rhs = 0.0
        best_main = 0.0
        nearest = round(q * beta_f)
        for l in range(lo, hi + 1):
            u = float(beta + Fraction(l, q))
            w = math.exp(-coef * u * u)
            rhs += w
            if l == -nearest:
                best_main = w
            S = self._twist(l % q)
            if S != 0:
                total += S * cmath.exp(half_over * (u * u))
        # terms past the window shrink at least by exp(-2 coef cut / q) each
        decay = math.exp(-2.0 * coef * cut / q)
        tail = abs(pref) * math.sqrt(2 * q) * 2.0 * math.exp(-coef * cut * cut)
        tail /= max(1.0 - decay, 1e-6)
        return ThetaAtPoint(
            value=pref * total,
            tail=tail,
            rhs=rhs,
            main=best_main,
            rest=max(rhs - best_main, 0.0),
        )


def st_rhs_bound(a: int, q: int, tau, k: int, alpha) -> tuple[float, float]:
    """Pointwise arc bound pair (refined, crude) at frequency alpha.

    crude   = q^{-d/2} (eps + |tau|)^{-d/2},            eps = 2^{-2k}
    refined = crude * prod_i sum_l e^{-(pi/2)(alpha_i - l/q)^2 / (eps + tau^2/eps)}

    The l-sums are truncated with certified tail below 1e-12.  Requires the
    arc guarantee |tau| <= 2^-k / q.
    """
    pt = as_torus_point(alpha)
    tau = Fraction(tau)
    if abs(tau) * q * (1 << k) > 1:
        raise ParameterError("st_rhs_bound requires |tau| <= 2^-k / q")
    eps = 0.25**k
    tau_f = float(tau)
    crude = float(q) ** (-pt.dim / 2.0) * (eps + abs(tau_f)) ** (-pt.dim / 2.0)
    s_scale = eps + tau_f * tau_f / eps
    coef = math.pi / (2.0 * s_scale)
    cut = math.sqrt(math.log(1e18) / coef)
    factor = 1.0
    for c in pt.coords:
        c_f = float(c)
        lo = math.floor(q * (c_f - cut)) - 1
        hi = math.ceil(q * (c_f + cut)) + 1
        acc = 0.0
        for l in range(lo, hi + 1):
            u = float(c - Fraction(l, q))
            acc += math.exp(-coef * u * u)
        factor *= acc
    return crude * factor, crude


# ---------------------------------------------------------------------------
# Exact totient summation (arc counts per stratum at any level)
# ---------------------------------------------------------------------------

_PHI_BASE = 1 << 21


@lru_cache(maxsize=1)
def _phi_cumsum(limit: int = _PHI_BASE) -> np.ndarray:
    phi = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if phi[p] == p:  # p prime
            phi[p::p] -= phi[p::p] // p
    phi[0] = 0
    return np.cumsum(phi)


_PHI_MEMO: dict[int, int] = {}


def totient_sum(x: int) -> int:
    """Phi(x) = sum_{q <= x} phi(q), exactly, for x up to ~2^40.

    Sieved below _PHI_BASE; above, the classical recursion
    Phi(x) = x(x+1)/2 - sum_{d >= 2} Phi(floor(x/d)) with divisor blocking.
    """
    if x < 0:
        return 0
    base = _phi_cumsum()
    if x <= _PHI_BASE:
        return int(base[x])
    if x in _PHI_MEMO:
        return _PHI_MEMO[x]
    total = x * (x + 1) // 2
    d = 2
    while d <= x:
        v = x // d
        d_hi = x // v
        total -= (d_hi - d + 1) * totient_sum(v)
        d = d_hi + 1
    _PHI_MEMO[x] = total
    return total


@lru_cache(maxsize=1)
def _trial_primes() -> list[int]:
    return primes_up_to(1 << 12)


def _is_prime_u64(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 2^64."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """A nontrivial factor of composite odd n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    seed = 1
    while True:
        x, c = 2 + seed, 1 + seed
        y, d = x, 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
        seed += 1


def euler_phi(q: int) -> int:
    """phi(q): trial division by small primes, then Miller-Rabin/rho for the
    large cofactor (which for q < 2^64 is 1, a prime, or a short product)."""
    result = q
    rem = q
    for p in _trial_primes():
        if p * p > rem:
            break
        if rem % p == 0:
            result -= result // p
            while rem % p == 0:
                rem //= p
    stack = [rem] if rem > 1 else []
    seen: set[int] = set()
    while stack:
        m = stack.pop()
        if m == 1 or m in seen:
            continue
        if _is_prime_u64(m):
            seen.add(m)
            continue
        d = _pollard_rho(m)
        stack.extend([d, m // d])
    for p in seen:
        result -= result // p
    return result


# ---------------------------------------------------------------------------
# Stratified estimation of the arc-integral bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingPlan:
    """Work budget for one stratified sweep.

    Arcs with q <= q_cut are enumerated exhaustively; beyond that, dyadic
    denominator bands are subsampled uniformly over arcs (denominators drawn
    proportionally to phi(q)) and reweighted by the exact band arc count.
    """

    q_cut: int = 32
    arcs_per_stratum: int = 48
    t_per_arc: int = 3
    alpha_random: int = 12
    boundary_steps: tuple = (
        Fraction(1),
        Fraction(17, 16),
        Fraction(9, 8),
        Fraction(3, 2),
        Fraction(2),
    )
    grid_anchor_tries: int = 12
    seed: int = 20260810
    validate_count: int = 24
    slack_reference: float = 4.0

    @property
    def has_alpha_samples(self) -> bool:
        return self.alpha_random > 0 or len(self.boundary_steps) > 0


@dataclass
class StratumStats:
    name: str
    arcs_seen: int = 0
    max_shat: float = 0.0
    max_main_factor: float = 0.0
    max_rest_factor: float = 0.0

    def absorb(self, shat: float, main: float, rest: float) -> None:
        self.arcs_seen += 1
        self.max_shat = max(self.max_shat, shat)
        self.max_main_factor = max(self.max_main_factor, main)
        self.max_rest_factor = max(self.max_rest_factor, rest)


@dataclass
class StBoundReport:
    """Outcome of one stratified sweep of the arc integral.

    integral_estimate under-estimates the true supremum integral (a max over
    samples sits below a sup); the alpha designs concentrate on box-boundary
    worst cases to shrink that bias.
    """

    j: int
    k: int
    dim: int
    integral_estimate: float
    paper_bound: float
    ratio: float
    strata: dict
    bands: list
    slack_max: float
    validation_max_rel_err: float
    n_arcs: int
    n_theta_evals: int
    valid: bool
    plan: SamplingPlan
    note: str = ""


def _paper_bound(j: int, k: int, d: int) -> float:
    eps = 0.25**k
    return eps ** (-(d - 2) / 2.0) * 2.0 ** (-j / 2.0) / j


class _ArcWorker:
    """Shared state for sweeping arcs of one (j, k, d) configuration."""

    def __init__(self, j, k, d, plan, rng):
        self.j, self.k, self.d, self.plan = j, k, d, plan
        self.rng = rng
        self.eps = 0.25**k
        self.h = Fraction(1 << j, 1 << k)
        self.qj = tower_value(j)
        self.tau_small = Fraction(
            round(2.0 ** (j / 2.0) * (1 << 20)), (1 << 20) * (1 << (2 * k))
        )
        self.strata = {
            "q_div_small_tau": StratumStats("q_div_small_tau"),
            "q_div_large_tau": StratumStats("q_div_large_tau"),
            "q_nondiv": StratumStats("q_nondiv"),
        }
        self.slack_max = 0.0
        self.n_theta = 0
        self.validation: list[tuple] = []

    # -- candidate frequencies per arc ------------------------------------

    def _candidates(self, a: int, q: int) -> list[tuple[Fraction, Fraction]]:
        """Per-coordinate frequency candidates (beta, dist to depth-j grid)."""
        plan, h, qj = self.plan, self.h, self.qj
        cands: list[tuple[Fraction, Fraction]] = []

        def add(beta: Fraction):
            beta %= 1
            cands.append((beta, dist_to_grid(beta, qj)))

        add(Fraction(0))
        for step in plan.boundary_steps:
            add(h * step)
        add(Fraction(1, 2 * qj))
        if q > 1:
            ls = {1, q - 1}
            for _ in range(plan.grid_anchor_tries):
                ls.add(self.rng.randint(1, q - 1))
            scored = sorted(
                ls, key=lambda l: dist_to_grid(Fraction(l, q), qj), reverse=True
            )
            for l in scored[:3]:
                anchor = Fraction(l, q)
                add(anchor)
                add(anchor + h)
                add(anchor + h * Fraction(17, 16))
        for _ in range(plan.alpha_random):
            add(Fraction(self.rng.randrange(1 << 40), 1 << 40))
        return cands

    def _tau_samples(self, arc: FareyArc) -> list[Fraction]:
        lo = arc.left - arc.center
        hi = arc.right - arc.center
        taus = [Fraction(0)]
        for frac in (Fraction(15, 16), Fraction(1, 2)):
            taus.append(hi * frac)
            taus.append(lo * frac)
        for s in (self.tau_small, -self.tau_small):
            if lo < s < hi:
                taus.append(s)
        # deterministic subset of the requested size, always keeping tau = 0
        return taus[: max(self.plan.t_per_arc, 1)]

    def sweep_arc(self, arc: FareyArc) -> float:
        """Max over sampled (t, admissible alpha) of |s_hat|, times arc length."""
        a, q = arc.a, arc.q
        evalr = ArcTheta(a, q, self.eps)
        cands = self._candidates(a, q)
        q_divides = self.qj % q == 0
        best_over_t = 0.0
        for tau in self._tau_samples(arc):
            evals = [(beta, dist, evalr.eval(tau, beta)) for beta, dist in cands]
            self.n_theta += len(evals)
            best_any = max(evals, key=lambda e: abs(e[2].value))
            far = [e for e in evals if e[1] >= self.h]
            if not far:
                continue
            best_far = max(far, key=lambda e: abs(e[2].value))
            v_any, v_far = abs(best_any[2].value), abs(best_far[2].value)
            if best_any[1] >= self.h:
                shat = v_any**self.d
            else:
                shat = v_any ** (self.d - 1) * v_far
            # per-coordinate slack of |theta| against q^{-1/2}(eps+|tau|)^{-1/2} rhs
            scale = float(q) ** -0.5 * (self.eps + abs(float(tau))) ** -0.5

            def coord_slack(entry):
                bound = scale * entry[2].rhs
                v = abs(entry[2].value)
                return v / bound if bound > 0 and v > 0 else 0.0

            if best_any[1] >= self.h:
                slack = coord_slack(best_any) ** self.d
            else:
                slack = coord_slack(best_any) ** (self.d - 1) * coord_slack(best_far)
            self.slack_max = max(self.slack_max, slack)
            small_tau = abs(tau) <= Fraction(self.tau_small)
            if q_divides:
                stratum = self.strata[
                    "q_div_small_tau" if small_tau else "q_div_large_tau"
                ]
            else:
                stratum = self.strata["q_nondiv"]
            stratum.absorb(shat, best_far[2].main, best_far[2].rest)
            if self.k <= 12 and len(self.validation) < self.plan.validate_count:
                t_exact = arc.center + tau
                direct = theta_1d(t_exact % 1, self.eps, best_far[0], _direct_m(self.eps))
                rel = abs(direct - best_far[2].value) / max(abs(direct), 1e-30)
                self.validation.append((float(rel),))
            best_over_t = max(best_over_t, shat)
        return float(arc.length) * best_over_t


def _direct_m(eps: float) -> int:
    return int(math.sqrt(math.log(1e14) / (2 * math.pi * eps))) + 2


def stbound_ratio(j: int, k: int, plan: Optional[SamplingPlan] = None, d: int = 5) -> StBoundReport:
    """Stratified estimate of the arc-integral of sup_{alpha admissible} |s_hat|
    against the target bound eps^{-(d-2)/2} 2^{-j/2} / j.

    Admissible alpha are those outside the depth-j scale-k frequency region
    (boundary points count: the sup over the open complement is a limit of
    boundary values).  Arcs with q <= q_cut are enumerated; dyadic denominator
    bands above are sampled and reweighted by their exact arc counts.
    """
    plan = plan or SamplingPlan()
    if not (1 <= j and (1 << (j + 2)) <= k):
        raise ParameterError(f"stbound needs 1 <= j <= log2(k) - 2, got (j={j}, k={k})")
    if not plan.has_alpha_samples:
        return StBoundReport(
            j=j, k=k, dim=d, integral_estimate=0.0, paper_bound=_paper_bound(j, k, d),
            ratio=0.0, strata={}, bands=[], slack_max=0.0,
            validation_max_rel_err=0.0, n_arcs=0, n_theta_evals=0, valid=False,
            plan=plan, note="degenerate plan: no alpha samples",
        )
    rng = Xorshift64Star(plan.seed ^ (j << 8) ^ k)
    worker = _ArcWorker(j, k, d, plan, rng)
    level = 1 << k
    total = 0.0
    n_arcs = 0
    bands = []

    q_cut = min(plan.q_cut, level)
    for q in range(1, q_cut + 1):
        for a in range(1, q + 1):
            if math.gcd(a, q) == 1:
                total += worker.sweep_arc(arc_of(a, q, k))
                n_arcs += 1
    bands.append({"q_lo": 1, "q_hi": q_cut, "arcs": n_arcs, "sampled": n_arcs})

    lo = q_cut
    while lo < level:
        hi = min(2 * lo, level)
        band_count = totient_sum(hi) - totient_sum(lo)
        if band_count <= 0:
            lo = hi
            continue
        n_sample = min(plan.arcs_per_stratum, band_count)
        contrib = []
        for _ in range(n_sample):
            while True:
                q = rng.randint(lo + 1, hi)
                if rng.uniform() * q < euler_phi(q):
                    break
            while True:
                a = rng.randint(1, q)
                if math.gcd(a, q) == 1:
                    break
            contrib.append(worker.sweep_arc(arc_of(a, q, k)))
            n_arcs += 1
        est = band_count * (sum(contrib) / len(contrib))
        total += est
        bands.append(
            {"q_lo": lo, "q_hi": hi, "arcs": band_count, "sampled": n_sample,
             "estimate": est}
        )
        lo = hi

    bound = _paper_bound(j, k, d)
    val_max = max((v[0] for v in worker.validation), default=0.0)
    return StBoundReport(
        j=j, k=k, dim=d,
        integral_estimate=total,
        paper_bound=bound,
        ratio=total / bound,
        strata={name: vars(stat) for name, stat in worker.strata.items()},
        bands=bands,
        slack_max=worker.slack_max,
        validation_max_rel_err=val_max,
        n_arcs=n_arcs,
        n_theta_evals=worker.n_theta,
        valid=True,
        plan=plan,
    )

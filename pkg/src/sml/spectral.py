"""Torus-side objects: Fourier evaluation, averaging and sampling multipliers,
frequency regions with exact-rational membership, and truncated theta sums.

Conventions fixed here and used everywhere else:

* Fourier transform of f on Z^d:  f^(alpha) = sum_n f(n) e^{-2 pi i n.alpha}.
* Sampling multiplier indices are [depth j, scale k]: the multiplier at (j, k)
  is the product over coordinates of bump(2^{k-j} * dist(alpha_i, grid(q_j)))
  where q_j = lcm{1..2^j} and dist is to the nearest q_j-rational.  The
  difference multiplier at (j, k) is the (j+1, k) value minus the (j, k) one.
* Frequency region (j, k): all alpha whose every coordinate lies within
  2^{j-k} (closed) of a q_j-rational.  Membership is exact rational
  arithmetic; no floats decide it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ParameterError, ResourceError
from .numtheory import tower_value

# ---------------------------------------------------------------------------
# Torus points
# ---------------------------------------------------------------------------


class TorusPoint:
    """A point of the d-torus with exact rational coordinates in [0, 1).

    Floats passed in are converted exactly (binary expansion), so membership
    tests downstream stay deterministic.  A cached float view serves the
    numeric code.
    """

    __slots__ = ("coords", "_floats")

    def __init__(self, coords):
        reduced = tuple(Fraction(c) % 1 for c in coords)
        object.__setattr__(self, "coords", reduced)
        object.__setattr__(
            self, "_floats", np.array([float(c) for c in reduced], dtype=np.float64)
        )

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def floats(self) -> np.ndarray:
        return self._floats

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __eq__(self, other):
        return isinstance(other, TorusPoint) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"TorusPoint({', '.join(str(c) for c in self.coords)})"


def as_torus_point(alpha, dim: int | None = None) -> TorusPoint:
    pt = alpha if isinstance(alpha, TorusPoint) else TorusPoint(alpha)
    if dim is not None and pt.dim != dim:
        raise ParameterError(f"expected a {dim}-dimensional frequency, got {pt.dim}")
    return pt


def dist_to_grid(x: Fraction, q: int) -> Fraction:
    """Exact distance from x to the nearest multiple of 1/q on the circle."""
    t = (x * q) % 1
    return min(t, 1 - t) / q


# ---------------------------------------------------------------------------
# Fourier evaluation and the averaging multiplier
# ---------------------------------------------------------------------------


def fourier_eval(f, alpha) -> complex:
    """sum_n f(n) e^{-2 pi i n.alpha} for a finitely supported f."""
    pt = as_torus_point(alpha, f.dim)
    a = pt.floats
    total = 0j
    for n, v in f.entries.items():
        total += v * cmath.exp(-2j * math.pi * float(np.dot(n, a)))
    return total


def avg_multiplier(shell, alpha) -> complex:
    """Normalized exponential sum over a sphere shell.

    Shell symmetry under sign flips forces a real value; the imaginary residue
    is checked to be below 1e-12 and kept only as a numerical diagnostic.
    """
    if shell.count == 0:
        raise ParameterError("averaging multiplier of an empty shell")
    pt = as_torus_point(alpha, shell.dim)
    phases = shell.points.astype(np.float64) @ pt.floats
    value = complex(np.exp(-2j * np.pi * phases).sum()) / shell.count
    if abs(value.imag) > 1e-12:
        raise AssertionError(f"shell multiplier not real: imag={value.imag}")
    return value


# ---------------------------------------------------------------------------
# The bump profile
# ---------------------------------------------------------------------------


def _glue(u):
    """Smooth step S(u) = phi(u) / (phi(u) + phi(1-u)), phi(u) = exp(-1/u) (u>0)."""
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(1 - u > 0, np.exp(-1.0 / np.maximum(1 - u, 1e-300)), 0.0)
    return np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, a / (a + b)))


def bump_eval(xi):
    """Even C^inf cutoff: 1 on |xi| <= 1/2, 0 on |xi| >= 1, glued in between.

    Scalar in, float out; arrays pass through element-wise.
    """
    x = np.abs(np.asarray(xi, dtype=np.float64))
    out = np.where(x <= 0.5, 1.0, np.where(x >= 1.0, 0.0, _glue(2.0 * (1.0 - x))))
    return float(out) if np.isscalar(xi) or out.ndim == 0 else out


class BumpProfile:
    """Namespace view of the fixed cutoff; the profile has no free parameters."""

    plateau = Fraction(1, 2)
    support = Fraction(1)

    @staticmethod
    def __call__(xi):
        return bump_eval(xi)


# ---------------------------------------------------------------------------
# Frequency regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreqRegion:
    """Region (j, k): q_j-rational grid thickened by closed half-width 2^{j-k}."""

    j: int
    k: int
    q: int
    halfwidth: Fraction

    def __init__(self, j: int, k: int):
        if j < 0 or (1 << j) > k:
            raise ParameterError(f"invalid region indices (j={j}, k={k}): need 2^j <= k")
        q = tower_value(j)
        halfwidth = Fraction(1 << j, 1 << k) if k >= j else Fraction(1 << (j - k))
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "halfwidth", halfwidth)
        assert self.halfwidth * (1 << k) == (1 << j)
        if k >= 4 and (1 << (j + 2)) <= k and not 2 * q * halfwidth < 1:
            raise AssertionError(f"boxes of region ({j},{k}) unexpectedly overlap")

    @property
    def boxes_disjoint(self) -> bool:
        """True when distinct grid boxes meet in at most a boundary point."""
        return 2 * self.q * self.halfwidth <= 1


def omega_member(region: FreqRegion, alpha) -> bool:
    """Exact membership: every coordinate within halfwidth of the q-grid.

    Closed boxes -- a coordinate exactly at distance halfwidth is inside.
    """
    pt = as_torus_point(alpha)
    return all(dist_to_grid(c, region.q) <= region.halfwidth for c in pt.coords)


def sampling_multiplier(region: FreqRegion, alpha) -> float:
    """Product over coordinates of bump(dist / halfwidth) on the region's grid.

    Equals the periodized bump because the grid boxes are disjoint (up to
    touching boundaries, where the bump vanishes anyway); regions with
    overlapping boxes are refused since the single-term formula would not be
    the periodization there.
    """
    if not region.boxes_disjoint:
        raise ParameterError(
            f"region ({region.j},{region.k}) has overlapping boxes; "
            "multiplier undefined by nearest-point evaluation"
        )
    pt = as_torus_point(alpha)
    value = 1.0
    for c in pt.coords:
        ratio = dist_to_grid(c, region.q) / region.halfwidth
        if ratio >= 1:
            return 0.0
        if ratio > Fraction(1, 2):
            value *= float(bump_eval(float(ratio)))
    return value


def delta_multiplier(j: int, k: int, alpha) -> float:
    """Difference of consecutive-depth sampling multipliers at one scale."""
    return sampling_multiplier(FreqRegion(j + 1, k), alpha) - sampling_multiplier(
        FreqRegion(j, k), alpha
    )


def delta_scale_floor(j: int) -> int:
    """Smallest scale k at which the depth-(j, j+1) difference is well formed.

    Needs region validity 2^{j+1} <= k and disjoint boxes at depth j+1,
    i.e. 2^k >= 2^{j+2} * q_{j+1}.  Below that scale the periodization has
    overlapping boxes and the construction carries no content.
    """
    q_next = tower_value(j + 1)
    need = (1 << (j + 2)) * q_next
    k = max(1 << (j + 1), (need - 1).bit_length())
    return k


def ortho_partial_sum(j: int, alpha, k_max: int) -> float:
    """sum over admissible scales k <= k_max of |delta multiplier|^2 at alpha.

    Scales below delta_scale_floor(j) contribute nothing (the sampling
    construction is not defined there); the uniform bound of interest is over
    the well-formed tail, which is where all decomposition scales live.
    """
    if k_max < (1 << j):
        raise ParameterError("k_max must be at least 2^j")
    pt = as_torus_point(alpha)
    total = 0.0
    for k in range(delta_scale_floor(j), k_max + 1):
        total += delta_multiplier(j, k, pt) ** 2
    return total


# vectorized grid/batch helpers ----------------------------------------------


def multiplier_on_grid_1d(j: int, k: int, side: int) -> np.ndarray:
    """Sampling multiplier evaluated at the 1-d grid frequencies i/side.

    Distances are computed in integers (i*q mod side), so plateau and support
    thresholds are exact; only the smooth transition uses floats.
    """
    region = FreqRegion(j, k)
    if not region.boxes_disjoint:
        raise ParameterError("overlapping boxes")
    q = region.q
    i = np.arange(side, dtype=np.int64)
    r = (i * q) % side
    m = np.minimum(r, side - r)  # dist = m / (side*q)
    # ratio = dist / halfwidth = m * 2^k / (side * q * 2^j)
    num = m * (1 << (k - j))
    den = side * q
    out = np.ones(side, dtype=np.float64)
    zero = num >= den
    mid = (~zero) & (2 * num > den)
    out[zero] = 0.0
    out[mid] = bump_eval(num[mid].astype(np.float64) / den)
    return out


def multiplier_on_grid(j: int, k: int, side: int, dim: int) -> np.ndarray:
    """Tensor-product multiplier on the full (side,)*dim frequency grid."""
    line = multiplier_on_grid_1d(j, k, side)
    out = line
    for _ in range(dim - 1):
        out = np.multiply.outer(out, line)
    return out


# ---------------------------------------------------------------------------
# Theta sums
# ---------------------------------------------------------------------------


def theta_tail_bound(epsilon: float, M: int) -> float:
    """Upper bound for the absolute truncation error of a theta sum at M.

    Dominates 2 * sum_{m > M} e^{-2 pi eps m^2} by a geometric series.
    """
    x = 2.0 * math.pi * epsilon
    top = 2.0 * math.exp(-x * M * M)
    denom = -math.expm1(-x * (2 * M + 1))  # 1 - e^{-x(2M+1)}, stable for tiny x
    return top / denom if denom > 0 else math.inf


@dataclass(frozen=True)
class ThetaParams:
    """Truncation certificate for one family of theta factors."""

    t: float
    epsilon: float
    truncation: int
    tail_bound: float

    @classmethod
    def build(cls, t, epsilon: float, truncation: int) -> "ThetaParams":
        return cls(
            t=float(t),
            epsilon=float(epsilon),
            truncation=truncation,
            tail_bound=theta_tail_bound(float(epsilon), truncation),
        )


def choose_truncation(epsilon: float, tail_target: float, m_cap: int) -> int:
    """Smallest power-of-two-ish M with certified tail below tail_target."""
    M = 4
    while theta_tail_bound(epsilon, M) > tail_target:
        M *= 2
        if M > m_cap:
            raise ResourceError(
                f"theta truncation would need M > {m_cap} at epsilon={epsilon}"
            )
    lo, hi = M // 2, M
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if theta_tail_bound(epsilon, mid) <= tail_target:
            hi = mid
        else:
            lo = mid
    return hi


def _quad_phases(t, m: np.ndarray) -> np.ndarray:
    """e^{2 pi i m^2 t} with the fractional part of m^2 t taken exactly
    when t is rational (the phase would otherwise lose precision for large m)."""
    if isinstance(t, Fraction):
        num, den = t.numerator, t.denominator
        frac = np.array(
            [((int(mm) * int(mm) * num) % den) / den for mm in m], dtype=np.float64
        )
        return np.exp(2j * np.pi * frac)
    return np.exp(2j * np.pi * (float(t) * (m.astype(np.float64) ** 2)))


def _lin_phases(beta, m: np.ndarray) -> np.ndarray:
    """e^{-2 pi i m beta}, exact fractional parts for rational beta."""
    if isinstance(beta, Fraction):
        num, den = beta.numerator, beta.denominator
        frac = np.array([((int(mm) * num) % den) / den for mm in m], dtype=np.float64)
        return np.exp(-2j * np.pi * frac)
    return np.exp(-2j * np.pi * (float(beta) * m.astype(np.float64)))


def theta_1d(t, epsilon: float, beta, M: int) -> complex:
    """Truncated quadratic theta sum

        sum_{|m| <= M} e^{2 pi i m^2 (t + i epsilon)} e^{-2 pi i m beta},

    whose truncation error is certified by theta_tail_bound(epsilon, M).
    """
    if epsilon <= 0 or M < 1:
        raise ParameterError("theta_1d requires epsilon > 0 and M >= 1")
    m = np.arange(1, M + 1, dtype=np.int64)
    damp = np.exp(-2.0 * np.pi * epsilon * (m.astype(np.float64) ** 2))
    quad = _quad_phases(t, m) * damp
    lin_pos = _lin_phases(beta, m)
    # m and -m share the quadratic factor
    return complex(1.0 + np.sum(quad * (lin_pos + np.conj(lin_pos))))


DEFAULT_M_CAP = 2_000_000


def s_hat_with_params(
    t, k: int, alpha, tail_target: float = 1e-12, m_cap: int = DEFAULT_M_CAP
):
    """Product of per-coordinate theta factors at epsilon = 2^{-2k}.

    M is chosen so each factor's absolute truncation error is below
    tail_target * theta_peak / dim, where theta_peak = 1 + (2 eps)^{-1/2}
    bounds any factor; the product error is then below tail_target on the
    scale of the largest possible product.  Returns (value, ThetaParams).
    """
    if tail_target <= 0:
        raise ParameterError("tail_target must be positive")
    pt = as_torus_point(alpha)
    epsilon = 0.25**k
    peak = 1.0 + (2.0 * epsilon) ** -0.5
    per_factor = tail_target * peak / max(pt.dim, 1)
    M = choose_truncation(epsilon, per_factor, m_cap)
    value = 1.0 + 0j
    for c in pt.coords:
        value *= theta_1d(_as_scalar(t), epsilon, c, M)
    return value, ThetaParams.build(_as_scalar_float(t), epsilon, M)


def s_hat(t, k: int, alpha, tail_target: float = 1e-12, m_cap: int = DEFAULT_M_CAP) -> complex:
    return s_hat_with_params(t, k, alpha, tail_target, m_cap)[0]


def _as_scalar(t):
    return t if isinstance(t, Fraction) else float(t)


def _as_scalar_float(t):
    return float(t)

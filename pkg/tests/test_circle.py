import cmath
import math
from fractions import Fraction

import pytest

from sml import (
    ParameterError,
    ResourceError,
    SamplingPlan,
    arc_of,
    farey_arcs,
    gauss_sum,
    locate,
    st_rhs_bound,
    stbound_ratio,
    theta_1d,
)
from sml.circle import (
    ArcTheta,
    euler_phi,
    farey_fractions,
    farey_neighbors,
    gauss_sum_compensated,
    gauss_sum_twisted,
    gauss_sum_twisted_direct,
    jacobi_symbol,
    totient_sum,
)
from sml.rng import Xorshift64Star


# ------------------------------------------------------------------ farey


def test_farey_level_zero():
    arcs = farey_arcs(0)
    assert len(arcs) == 1
    arc = arcs[0]
    assert (arc.a, arc.q) == (1, 1)
    assert (arc.left, arc.right) == (Fraction(0), Fraction(1))


def test_farey_level_two_example():
    arcs = farey_arcs(2)
    fracs = {(a.a, a.q) for a in arcs}
    assert fracs == {(1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (1, 1)}
    half = next(a for a in arcs if (a.a, a.q) == (1, 2))
    assert (half.left, half.right) == (Fraction(5, 12), Fraction(7, 12))
    assert half.length == Fraction(1, 6)
    assert Fraction(1, 8) <= half.length <= Fraction(1, 4)


def test_farey_tiling_and_length_bounds():
    for k in range(0, 7):
        arcs = farey_arcs(k)
        total = sum(a.length for a in arcs)
        assert total == 1  # exact rational tiling
        for a in arcs:
            assert a.left <= a.center <= a.right
            assert Fraction(1, 2**k * a.q) <= a.length
            assert a.length <= Fraction(1, a.q * (2**k - a.q + 1))
            if 2 * a.q <= 2**k + 2:
                assert a.length <= Fraction(2, 2**k * a.q)
        ordered = sorted(arcs, key=lambda x: x.left)
        for prev, nxt in zip(ordered, ordered[1:]):
            assert prev.right == nxt.left  # interiors disjoint, no gaps


def test_farey_fraction_count():
    # |F_Q| = sum of phi(q)
    for k in (1, 2, 3, 4, 5):
        assert len(farey_fractions(k)) == totient_sum(2**k)


def test_farey_enumeration_cap():
    with pytest.raises(ResourceError):
        farey_arcs(13)


def test_neighbors_match_enumeration():
    for k in (2, 3, 5):
        arcs = farey_arcs(k)
        for arc in arcs:
            again = arc_of(arc.a, arc.q, k)
            assert (again.left, again.right) == (arc.left, arc.right)


def test_neighbors_at_deep_level():
    low, high = farey_neighbors(1, 3, 30)
    # adjacency identities |a r - p q| = 1 hold and both sit inside F_{2^30}
    assert abs(1 * low.denominator - low.numerator * 3) == 1
    assert abs(1 * high.denominator - high.numerator * 3) == 1
    assert low < Fraction(1, 3) < high
    assert low.denominator <= 2**30 and high.denominator <= 2**30
    # each neighbour's denominator is maximal, so the gap obeys Dirichlet
    assert Fraction(1, 3) - low <= Fraction(2, 3 * 2**30)
    assert high - Fraction(1, 3) <= Fraction(2, 3 * 2**30)


# ------------------------------------------------------------------ locate


def test_locate_examples():
    assert locate(Fraction(13, 50), 2) == (1, 4, Fraction(1, 100))
    assert locate(Fraction(1, 2), 3) == (1, 2, Fraction(0))
    a, q, tau = locate(Fraction(1, 100), 2)
    assert (a, q) == (1, 1)
    assert tau == Fraction(1, 100)  # wraparound: distance to 1/1 through 0


def test_locate_tie_breaks():
    # t = 3/4 at level 2: 3/4 is itself a fraction -> exact
    assert locate(Fraction(3, 4), 2) == (3, 4, Fraction(0))
    # level 1: fractions {1/2, 1/1}; t = 3/4 equidistant -> smaller q wins
    a, q, tau = locate(Fraction(3, 4), 1)
    assert (a, q) == (1, 1)
    assert tau == Fraction(-1, 4)


def test_locate_dirichlet_guarantee():
    rng = Xorshift64Star(101)
    for _ in range(1500):
        k = rng.randint(1, 10)
        t = Fraction(rng.randrange(1 << 40), 1 << 40)
        a, q, tau = locate(t, k)
        assert 0 < a <= q <= 2**k
        assert math.gcd(a, q) == 1
        assert abs(tau) * q * 2**k <= 1  # |tau| <= 2^-k / q
        assert (Fraction(a, q) + tau - t) % 1 == 0


def test_locate_against_enumeration():
    rng = Xorshift64Star(103)
    for k in (2, 4, 6):
        arcs = farey_arcs(k)
        for _ in range(150):
            t = Fraction(rng.randrange(1 << 30), 1 << 30)
            a, q, _ = locate(t, k)
            # oracle: scan every fraction, keep the admissible ones, min by
            # (circle distance, q, a) exactly as the contract says
            scored = []
            for arc in arcs:
                dist = min(abs(t - arc.center), 1 - abs(t - arc.center))
                if dist * arc.q * 2**k <= 1:
                    scored.append((dist, arc.q, arc.a))
            best = min(scored)
            assert (a, q) == (best[2], best[1])


# ------------------------------------------------------------------ gauss


def test_gauss_examples():
    assert gauss_sum(1, 1) == pytest.approx(1 + 0j)
    assert gauss_sum(1, 2) == pytest.approx(0j, abs=1e-12)
    v = gauss_sum(1, 3)
    assert v == pytest.approx(complex(0, math.sqrt(3)), abs=1e-12)


def test_gauss_rejects_common_factor():
    with pytest.raises(ParameterError):
        gauss_sum(2, 4)


def test_gauss_magnitude_law_sample():
    for q in range(1, 61):
        for a in range(1, q + 1):
            if math.gcd(a, q) != 1:
                continue
            mag_sq = abs(gauss_sum(a, q)) ** 2
            if q % 4 == 0:
                want = 2 * q
            elif q % 4 == 2:
                want = 0
            else:
                want = q
            assert mag_sq == pytest.approx(want, abs=1e-9 * max(q, 1))
            # independent compensated-summation route agrees
            assert gauss_sum(a, q) == pytest.approx(
                gauss_sum_compensated(a, q), abs=1e-10
            )


def test_jacobi_symbol_small():
    # against Legendre by explicit squares mod p
    for p in (3, 5, 7, 11, 13):
        squares = {x * x % p for x in range(1, p)}
        for a in range(1, p):
            want = 1 if a in squares else -1
            assert jacobi_symbol(a, p) == want
    assert jacobi_symbol(2, 15) == 1
    assert jacobi_symbol(7, 9) == 1


def test_twisted_gauss_closed_form():
    for q in list(range(1, 80)) + [96, 128, 121, 125, 243, 250]:
        for a in range(1, min(q, 12) + 1):
            if math.gcd(a, q) != 1:
                continue
            for b in range(0, min(q, 9) + 1):
                got = gauss_sum_twisted(a, b, q)
                want = gauss_sum_twisted_direct(a, b, q)
                assert got == pytest.approx(want, abs=1e-8 * max(1.0, math.sqrt(q)))


def test_twisted_gauss_random_large():
    rng = Xorshift64Star(107)
    for _ in range(60):
        q = rng.randint(2, 3000)
        a = rng.randint(1, q)
        while math.gcd(a, q) != 1:
            a = rng.randint(1, q)
        b = rng.randrange(q)
        got = gauss_sum_twisted(a, b, q)
        want = gauss_sum_twisted_direct(a, b, q)
        assert got == pytest.approx(want, abs=1e-7 * math.sqrt(q))


# ------------------------------------------------------------------ theta on arcs


def test_arc_theta_matches_direct():
    rng = Xorshift64Star(109)
    for _ in range(40):
        q = rng.randint(1, 24)
        a = rng.randint(1, q)
        while math.gcd(a, q) != 1:
            a = rng.randint(1, q)
        k = rng.randint(3, 6)
        eps = 0.25**k
        tau = Fraction(rng.randint(-(1 << 10), 1 << 10), (1 << 10) * q * 2**k)
        beta = Fraction(rng.randrange(1 << 16), 1 << 16)
        t = (Fraction(a, q) + tau) % 1
        M = int(math.sqrt(math.log(1e15) / (2 * math.pi * eps))) + 2
        direct = theta_1d(t, eps, beta, M)
        res = ArcTheta(a, q, eps).eval(tau, beta)
        assert abs(res.value - direct) <= 1e-9 * max(1.0, abs(direct)) + res.tail


def test_arc_theta_peak_magnitude():
    # q = 1, tau = 0, beta = 0: the Gaussian peak (2 eps)^{-1/2} again
    eps = 0.25**4
    res = ArcTheta(1, 1, eps).eval(Fraction(0), Fraction(0))
    assert abs(res.value) == pytest.approx((2 * eps) ** -0.5, rel=1e-6)


# ------------------------------------------------------------------ rhs bound


def test_st_rhs_examples():
    refined, crude = st_rhs_bound(1, 1, Fraction(0), 2, (0, 0, 0, 0, 0))
    assert crude == pytest.approx(1024.0)  # (2^-4)^(-5/2)
    assert refined >= crude

    # on-grid alpha with q^2(eps + tau^2/eps) small: refined barely above crude
    refined2, crude2 = st_rhs_bound(1, 2, Fraction(0), 5, (Fraction(1, 2), 0))
    assert refined2 <= crude2 * (1 + 1e-6)
    assert refined2 >= crude2 * (1 - 1e-12)


def test_st_rhs_tau_guard():
    with pytest.raises(ParameterError):
        st_rhs_bound(1, 3, Fraction(1, 2), 4, (0,))


# ------------------------------------------------------------------ totients


def test_totient_sum_small():
    def brute(x):
        return sum(euler_phi(q) for q in range(1, x + 1))

    for x in (0, 1, 2, 10, 100, 1000):
        assert totient_sum(x) == brute(x)


def test_euler_phi_hard_cases():
    assert euler_phi(1) == 1
    assert euler_phi(2**20) == 2**19
    p1, p2 = 65537, 65539
    assert euler_phi(p1 * p2) == (p1 - 1) * (p2 - 1)  # semiprime above trial range
    assert euler_phi(999983) == 999982  # large prime


# ------------------------------------------------------------------ stratified sweep


def test_stbound_rejects_bad_indices():
    with pytest.raises(ParameterError):
        stbound_ratio(1, 7)
    with pytest.raises(ParameterError):
        stbound_ratio(0, 8)


def test_stbound_degenerate_plan_flagged():
    plan = SamplingPlan(alpha_random=0, boundary_steps=())
    rep = stbound_ratio(1, 8, plan)
    assert not rep.valid
    assert rep.integral_estimate == 0.0


def test_stbound_smoke():
    plan = SamplingPlan(q_cut=12, arcs_per_stratum=10, alpha_random=6, seed=3)
    rep = stbound_ratio(1, 8, plan)
    assert rep.valid
    assert rep.integral_estimate > 0
    assert rep.paper_bound == pytest.approx(2.0**24 / math.sqrt(2.0))
    assert 0 < rep.ratio < 1e3
    assert rep.slack_max <= 4.0
    assert rep.validation_max_rel_err < 1e-6
    assert rep.strata["q_div_small_tau"].get("max_main_factor", 1.0) <= math.exp(-0.5)

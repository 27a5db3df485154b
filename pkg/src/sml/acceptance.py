"""The acceptance suite: one callable per criterion, shared by pytest and the
`sml verify` subcommand.

Each criterion returns a CriterionResult with hard pass/fail, the measured
constants that back it, and its wall time.  Two criteria compare against
frozen golden values stored next to this module (goldens.json); running with
freeze=True rewrites them from the current measurement.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .circle import SamplingPlan, locate, gauss_sum, st_rhs_bound, stbound_ratio
from .lattice import count_reps, enumerate_sphere
from .numtheory import lcm_range, select_params, tail_sum, tower_value
from .rng import Xorshift64Star
from .signals import (
    PeriodicSignal,
    SparseSignal,
    dyadic_max_at,
    hl_max,
    spherical_average,
    telescope_decompose,
)
from .spectral import (
    FreqRegion,
    TorusPoint,
    avg_multiplier,
    bump_eval,
    delta_scale_floor,
    fourier_eval,
    omega_member,
    s_hat,
)

GOLDENS_PATH = Path(__file__).with_name("goldens.json")
STBOUND_PAIRS = [(1, 8), (1, 9), (1, 10), (1, 11), (2, 16), (3, 32)]
DEFAULT_SEED = 20260810


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.cid}: {self.name} -- {self.detail}"


def load_goldens() -> dict:
    if GOLDENS_PATH.exists():
        return json.loads(GOLDENS_PATH.read_text())
    return {}


def save_goldens(goldens: dict) -> None:
    GOLDENS_PATH.write_text(json.dumps(goldens, indent=2, sort_keys=True) + "\n")


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result

    return wrapper


# ---------------------------------------------------------------------------
# 1. lattice count bracket
# ---------------------------------------------------------------------------


@_timed
def criterion_1_lattice_counts(max_n: int = 400) -> CriterionResult:
    """d = 5 shells up to max_n: enumeration equals the convolution count and
    N / n^{3/2} stays inside a bracket of spread at most 50."""
    ratios = []
    for n in range(1, max_n + 1):
        shell = enumerate_sphere(5, n)  # raises if the count cross-check fails
        assert shell.count == count_reps(5, n)
        ratios.append(shell.count / n**1.5)
    ratios = np.array(ratios)
    lo, hi = float(ratios.min()), float(ratios.max())
    spread = hi / lo
    passed = spread <= 50.0
    return CriterionResult(
        1,
        "lattice-count bracket (d=5)",
        passed,
        f"N/n^1.5 in [{lo:.4f}, {hi:.4f}], spread {spread:.2f} (<= 50)",
        {"bracket_low": lo, "bracket_high": hi, "spread": spread, "max_n": max_n},
    )


# ---------------------------------------------------------------------------
# 2. Gauss-sum magnitude law
# ---------------------------------------------------------------------------


@_timed
def criterion_2_gauss_law(q_max: int = 200) -> CriterionResult:
    """|G(a,q)|^2 is q, 0, or 2q according to q mod 4, exhaustively."""
    worst = 0.0
    n_checked = 0
    for q in range(1, q_max + 1):
        want = 2.0 * q if q % 4 == 0 else (0.0 if q % 4 == 2 else float(q))
        for a in range(1, q + 1):
            if math.gcd(a, q) != 1:
                continue
            mag_sq = abs(gauss_sum(a, q)) ** 2
            err = abs(mag_sq - want) / max(q, 1)
            worst = max(worst, err)
            n_checked += 1
    passed = worst <= 1e-9
    return CriterionResult(
        2,
        "Gauss-sum magnitude law (q <= 200)",
        passed,
        f"{n_checked} sums, worst relative defect {worst:.2e} (<= 1e-9)",
        {"checked": n_checked, "worst_rel_err": worst},
    )


# ---------------------------------------------------------------------------
# 3. almost-orthogonality partial sums
# ---------------------------------------------------------------------------

_SAMPLE_DEN = (1 << 31) - 1  # prime, so samples never sit on any grid exactly


def _multiplier_columns(depth: int, k: int, ps: np.ndarray) -> np.ndarray:
    """Sampling-multiplier factors at alpha = ps / _SAMPLE_DEN, coordinatewise.

    Distances are exact in integers: dist = min(p q mod D, D - .)/(D q), and
    the plateau/support thresholds are integer comparisons.
    """
    q = tower_value(depth)
    r = (ps * q) % _SAMPLE_DEN
    m = np.minimum(r, _SAMPLE_DEN - r)
    num = m << (k - depth)
    den = _SAMPLE_DEN * q
    out = np.ones(ps.shape, dtype=np.float64)
    zero = num >= den
    mid = (~zero) & (2 * num > den)
    out[zero] = 0.0
    out[mid] = bump_eval(num[mid].astype(np.float64) / den)
    return out


@_timed
def criterion_3_ortho(samples: int = 10_000, seed: int = DEFAULT_SEED, dim: int = 2) -> CriterionResult:
    """Partial sums of squared difference multipliers stay below 10 uniformly,
    and plateau scales contribute exactly zero."""
    rng = Xorshift64Star(seed ^ 0x03)
    worst = 0.0
    plateau_violations = 0
    per_j = {}
    for j in (1, 2, 3):
        k_max = 2**j + 20
        ps = np.array(
            [[rng.randrange(_SAMPLE_DEN) for _ in range(dim)] for _ in range(samples)],
            dtype=np.int64,
        )
        total = np.zeros(samples)
        # plateau data at depth j: max over coords of dist * (D q) in ints
        qj = tower_value(j)
        r = (ps * qj) % _SAMPLE_DEN
        m = np.minimum(r, _SAMPLE_DEN - r).max(axis=1)  # dist = m/(D qj)
        for k in range(delta_scale_floor(j), k_max + 1):
            prod_j = _multiplier_columns(j, k, ps).prod(axis=1)
            prod_j1 = _multiplier_columns(j + 1, k, ps).prod(axis=1)
            delta = prod_j1 - prod_j
            total += delta * delta
            # 2^{k-j} * dist <= 1/2  <=>  m * 2^{k-j+1} <= D * qj
            on_plateau = (m << (k - j + 1)) <= _SAMPLE_DEN * qj
            plateau_violations += int(np.count_nonzero(delta[on_plateau]))
        per_j[f"j{j}"] = float(total.max())
        worst = max(worst, per_j[f"j{j}"])
    passed = worst <= 10.0 and plateau_violations == 0
    return CriterionResult(
        3,
        "difference-multiplier almost orthogonality",
        passed,
        f"max partial sum {worst:.4f} (<= 10), plateau violations {plateau_violations}",
        {"max_partial_sum": worst, "per_j": per_j, "samples": samples},
    )


# ---------------------------------------------------------------------------
# 4. non-divisor tail sums
# ---------------------------------------------------------------------------


@_timed
def criterion_4_tail_sums(q_max: int = 10**5) -> CriterionResult:
    """sum * k^{r-1} ln k <= 50 over k in 4..64, r in {1.5, 2, 2.5}; the
    reported truncation bound is under 1% of the sum for r >= 2."""
    worst_const = 0.0
    worst_trunc = 0.0
    per_r = {}
    ok = True
    for r in (1.5, 2.0, 2.5):
        consts = []
        for k in range(4, 65):
            res = tail_sum(r, k, q_max)
            const = res.sum * k ** (r - 1.0) * math.log(k)
            consts.append(const)
            if r >= 2.0 and res.sum > 0:
                frac = res.truncation_bound / res.sum
                worst_trunc = max(worst_trunc, frac)
                ok = ok and frac < 0.01
        per_r[f"r{r}"] = max(consts)
        worst_const = max(worst_const, per_r[f"r{r}"])
    ok = ok and worst_const <= 50.0
    return CriterionResult(
        4,
        "non-divisor tail-sum constants",
        ok,
        f"max constant {worst_const:.3f} (<= 50), worst truncation share {worst_trunc:.2e} (< 1%)",
        {"max_constant": worst_const, "per_r": per_r, "worst_truncation_share": worst_trunc},
    )


# ---------------------------------------------------------------------------
# 5. pointwise arc estimate with explicit slack
# ---------------------------------------------------------------------------


@_timed
def criterion_5_st_estimate(
    seed: int = DEFAULT_SEED,
    n_target: int = 540,
    goldens: dict | None = None,
    freeze: bool = False,
) -> CriterionResult:
    """|s_hat(t, alpha)| <= 4 * refined arc bound over sampled admissible
    frequencies at k in 4..9, d = 5, via the direct certified theta route."""
    d = 5
    rng = Xorshift64Star(seed ^ 0x05)
    slack_max = 0.0
    checked = 0
    violations = 0
    for k in range(4, 10):
        region = FreqRegion(1, k)
        h = region.halfwidth
        eps = 0.25**k
        # the direct theta route resolves |s_hat| down to roughly 1e-9 of the
        # largest possible factor product; below that floor the inequality is
        # decided by the bound alone
        noise = 1e-9 * (1.0 + (2.0 * eps) ** -0.5) ** d
        for _ in range(n_target // 6 + 1):
            t = Fraction(rng.randrange(1 << 40), 1 << 40)
            a, q, tau = locate(t, k)
            coords = []
            for _i in range(d):
                mode = rng.randrange(3)
                if mode == 0:
                    c = Fraction(rng.randrange(1 << 30), 1 << 30)
                elif mode == 1 and q > 1:
                    c = Fraction(rng.randrange(q), q) + h * Fraction(rng.randint(-8, 8), 4)
                else:
                    c = Fraction(rng.randrange(2), 2) + h * Fraction(17 + rng.randrange(16), 16)
                coords.append(c % 1)
            if omega_member(region, coords):
                i = rng.randrange(d)
                base = Fraction(round(coords[i] * 2), 2)
                coords[i] = (base + h * Fraction(17, 16)) % 1
            alpha = TorusPoint(coords)
            if omega_member(region, alpha):
                continue
            val = abs(s_hat(t, k, alpha))
            refined, _ = st_rhs_bound(a, q, tau, k, alpha)
            if val > 4.0 * refined + noise:
                violations += 1
            if refined > noise:
                slack_max = max(slack_max, val / refined)
            checked += 1
    passed = violations == 0 and slack_max <= 4.0 and checked >= 500
    goldens = goldens if goldens is not None else load_goldens()
    key = "c5_max_slack"
    if freeze:
        goldens[key] = slack_max
    golden = goldens.get(key)
    stable = golden is not None and abs(slack_max - golden) <= 0.05 * golden
    if golden is not None:
        passed = passed and stable
        extra = f", golden {golden:.4f} ({'stable' if stable else 'DRIFTED'})"
    else:
        extra = ", golden missing (run verify --freeze-goldens)"
        passed = False
    return CriterionResult(
        5,
        "pointwise arc-estimate slack",
        passed,
        f"{checked} tuples, {violations} violations, max slack {slack_max:.4f} (<= 4){extra}",
        {"checked": checked, "violations": violations, "max_slack": slack_max, "golden": golden},
    )


# ---------------------------------------------------------------------------
# 6. stratified arc-integral decay against frozen ratios
# ---------------------------------------------------------------------------


@_timed
def criterion_6_stbound_decay(
    seed: int = DEFAULT_SEED,
    goldens: dict | None = None,
    freeze: bool = False,
    plan: SamplingPlan | None = None,
) -> CriterionResult:
    """Arc-integral estimate over target bound stays at its frozen ratio
    (within 5%) for the minimal scales of depths 1..3 and k = 8..11 at
    depth 1, stable across two seeds."""
    plan = plan or SamplingPlan(
        q_cut=32, arcs_per_stratum=32, t_per_arc=3, alpha_random=8,
        grid_anchor_tries=8, seed=seed,
    )
    goldens = goldens if goldens is not None else load_goldens()
    ratios = {}
    ok = True
    details = []
    for j, k in STBOUND_PAIRS:
        rep = stbound_ratio(j, k, plan)
        rep2 = stbound_ratio(j, k, replace(plan, seed=plan.seed + 977))
        key = f"c6_ratio_j{j}_k{k}"
        drift = abs(rep.ratio - rep2.ratio) / rep.ratio
        seed_stable = drift <= 0.05
        ratios[key] = rep.ratio
        if freeze:
            goldens[key] = rep.ratio
        golden = goldens.get(key)
        frozen_ok = golden is not None and abs(rep.ratio - golden) <= 0.05 * golden
        slack_ok = rep.slack_max <= 4.0
        validation_ok = rep.k > 12 or rep.validation_max_rel_err < 1e-6
        # small-tau main factor must be exponentially small in 2^j
        stratum = rep.strata["q_div_small_tau"]
        main_ok = stratum["max_main_factor"] <= math.exp(-(2.0 ** (j - 1)))
        row_ok = seed_stable and frozen_ok and slack_ok and validation_ok and main_ok
        ok = ok and row_ok
        details.append(
            f"(j={j},k={k}) ratio {rep.ratio:.3f} drift {100 * drift:.1f}%"
            + ("" if golden is None else f" golden {golden:.3f}")
            + ("" if row_ok else " [FAIL]")
        )
    return CriterionResult(
        6,
        "arc-integral decay ratios",
        ok,
        "; ".join(details),
        {"ratios": ratios},
    )


# ---------------------------------------------------------------------------
# 7. physical-side substitutes for the single-scale gain
# ---------------------------------------------------------------------------


def _random_sparse(rng, d, spread=4, terms=8) -> SparseSignal:
    return SparseSignal(
        d,
        {
            tuple(rng.randint(-spread, spread) for _ in range(d)): rng.uniform() - 0.5
            for _ in range(terms)
        },
    )


def _omega_grid_mask_1d(j: int, k_loc: int, side: int) -> np.ndarray:
    """Which grid frequencies i/side lie within 2^{j-k_loc} of the depth-j grid."""
    q = tower_value(j)
    i = np.arange(side, dtype=np.int64)
    r = (i * q) % side
    m = np.minimum(r, side - r)
    return (m << k_loc) <= side * q * (1 << j)


def _localized_noise(rng, side, j, k_loc):
    """Random grid signal whose transform vanishes on the depth-j region."""
    shape = (side,) * 3
    re = (rng.uniform_array(side**3) - 0.5).reshape(shape)
    im = (rng.uniform_array(side**3) - 0.5).reshape(shape)
    spectrum = re + 1j * im
    near = _omega_grid_mask_1d(j, k_loc, side)
    inside = near[:, None, None] & near[None, :, None] & near[None, None, :]
    spectrum[inside] = 0.0
    return PeriodicSignal(np.fft.ifftn(spectrum))


@_timed
def criterion_7_physical_side(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Telescoping exactness, multiplier identity, contractivity, plus the
    report-only relaxed-parameter trend of the dyadic-block norm gain."""
    rng = Xorshift64Star(seed ^ 0x07)
    measured = {}
    ok = True

    # (a) telescoping reconstruction
    worst_recon = 0.0
    for side, k, dim in ((48, 16, 2), (24, 8, 3)):
        flat = (rng.uniform_array(side**dim) - 0.5) + 1j * (
            rng.uniform_array(side**dim) - 0.5
        )
        f = PeriodicSignal(flat.reshape((side,) * dim))
        rep = telescope_decompose(f, k)
        worst_recon = max(worst_recon, rep.reconstruction_error / f.norm2())
    measured["telescope_relative_error"] = worst_recon
    ok = ok and worst_recon <= 1e-9

    # (b) multiplier identity on random sparse signals
    worst_mult = 0.0
    for _ in range(30):
        d = (2, 3, 5)[rng.randrange(3)]
        n = 1 + rng.randrange(50)
        shell = enumerate_sphere(d, n)
        if shell.count == 0:
            continue
        f = _random_sparse(rng, d)
        av = spherical_average(f, shell)
        for _ in range(12):
            alpha = TorusPoint(
                [Fraction(rng.randrange(1 << 24), 1 << 24) for _ in range(d)]
            )
            diff = abs(
                fourier_eval(av, alpha) - avg_multiplier(shell, alpha) * fourier_eval(f, alpha)
            )
            worst_mult = max(worst_mult, diff)
    measured["multiplier_identity_max_err"] = worst_mult
    ok = ok and worst_mult <= 1e-10

    # (c) contractivity
    contractive = True
    for _ in range(100):
        d = (2, 3, 5)[rng.randrange(3)]
        n = 1 + rng.randrange(50)
        shell = enumerate_sphere(d, n)
        if shell.count == 0:
            continue
        f = _random_sparse(rng, d)
        contractive = contractive and (
            spherical_average(f, shell).norm(2) <= f.norm(2) + 1e-12
        )
    measured["contractive"] = contractive
    ok = ok and contractive

    # (d) report-only trend: relaxed parameters on a (Z/96Z)^3 grid
    side, k_loc, k_dyn, n_funcs, n_pts = 96, 7, 4, 5, 384
    medians = []
    for j in (0, 1, 2):
        ratios = []
        for _ in range(n_funcs):
            f = _localized_noise(rng, side, j, k_loc)
            pts = rng.integer_array(3 * n_pts, side).reshape(n_pts, 3)
            block_vals = dyadic_max_at(f, k_dyn, pts)
            norm_est = math.sqrt(float(np.mean(block_vals**2))) * side**1.5
            ratios.append(norm_est / f.norm2())
        medians.append(float(np.median(ratios)))
    measured["block_gain_medians_j012"] = medians
    measured["block_gain_non_increasing"] = bool(
        medians[0] >= medians[1] >= medians[2]
    )

    return CriterionResult(
        7,
        "physical-side identities and trend",
        ok,
        (
            f"telescope rel err {worst_recon:.2e} (<= 1e-9), "
            f"multiplier err {worst_mult:.2e} (<= 1e-10), contractive {contractive}, "
            f"trend medians {['%.3f' % m for m in medians]} (report only)"
        ),
        measured,
    )


# ---------------------------------------------------------------------------
# 8. box-maximal domination of the smooth-piece dyadic block
# ---------------------------------------------------------------------------


@_timed
def criterion_8_hl_domination(seed: int = DEFAULT_SEED, n_pts: int = 192) -> CriterionResult:
    """Pointwise ratio of the dyadic block of the smoothed signal against the
    box maximal function stays below 100 (d=2, k in 4..8)."""
    from .spectral import multiplier_on_grid

    rng = Xorshift64Star(seed ^ 0x08)
    worst = 0.0
    per_k = {}
    for k in range(4, 9):
        side = 2 ** (k + 2) + 8
        f = PeriodicSignal(rng.uniform_array(side**2).reshape(side, side))
        mult = multiplier_on_grid(0, k, side, 2)
        g = PeriodicSignal(np.fft.ifftn(np.fft.fftn(f.values) * mult).real)
        l_max = int(math.floor(math.log2((side - 1) / 2)))
        box = hl_max(f, l_max)
        pts = rng.integer_array(2 * n_pts, side).reshape(n_pts, 2)
        block = dyadic_max_at(g, k, pts)
        h_vals = box.values[pts[:, 0], pts[:, 1]]
        mask = h_vals > 0
        ratio = float((block[mask] / h_vals[mask]).max())
        per_k[f"k{k}"] = ratio
        worst = max(worst, ratio)
    passed = worst <= 100.0
    return CriterionResult(
        8,
        "box-maximal domination of smooth dyadic blocks",
        passed,
        f"max pointwise ratio {worst:.3f} (<= 100)",
        {"max_ratio": worst, "per_k": per_k},
    )


# ---------------------------------------------------------------------------
# 9. parameter selection inequalities
# ---------------------------------------------------------------------------


@_timed
def criterion_9_param_selection(seed: int = DEFAULT_SEED, trials: int = 1000) -> CriterionResult:
    """select_params output satisfies both displayed inequalities and the
    region-containment bound on random admissible inputs."""
    rng = Xorshift64Star(seed ^ 0x09)
    ok = True
    for _ in range(trials):
        den = rng.randint(1, 4)
        num = rng.randint(1, den)
        eta = Fraction(num, den)
        inv2 = 1 / (eta * eta)
        threshold = lcm_range(math.ceil(inv2)) ** 4
        L = threshold * rng.randint(1, 64) + rng.randrange(10**6)
        j, k = select_params(eta, L)
        ok = ok and Fraction(2) ** k <= inv2 * L <= Fraction(2) ** (k + 1)
        ok = ok and Fraction(2) ** j >= inv2
        ok = ok and (j == 0 or Fraction(2) ** (j - 1) < inv2)
        ok = ok and 2 ** (k - j) <= L
        if not ok:
            break
    return CriterionResult(
        9,
        "restricted-sup parameter selection",
        ok,
        f"{trials} random (eta, L) draws, all inequalities held: {ok}",
        {"trials": trials},
    )


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def run_all(seed: int = DEFAULT_SEED, freeze: bool = False) -> list[CriterionResult]:
    goldens = load_goldens()
    results = [
        criterion_1_lattice_counts(),
        criterion_2_gauss_law(),
        criterion_3_ortho(seed=seed),
        criterion_4_tail_sums(),
        criterion_5_st_estimate(seed=seed, goldens=goldens, freeze=freeze),
        criterion_6_stbound_decay(seed=seed, goldens=goldens, freeze=freeze),
        criterion_7_physical_side(seed=seed),
        criterion_8_hl_domination(seed=seed),
        criterion_9_param_selection(seed=seed),
    ]
    if freeze:
        save_goldens(goldens)
    return results

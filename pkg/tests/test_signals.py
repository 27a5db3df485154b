import math
from fractions import Fraction

import numpy as np
import pytest

from sml import (
    ParameterError,
    PeriodicSignal,
    SparseSignal,
    dyadic_max,
    dyadic_max_at,
    enumerate_sphere,
    hl_max,
    spherical_average,
    star_max,
    telescope_decompose,
)
from sml.rng import Xorshift64Star


def random_periodic(dim, side, seed, complex_values=False):
    rng = Xorshift64Star(seed)
    flat = np.array([rng.uniform() - 0.5 for _ in range(side**dim)])
    if complex_values:
        flat = flat + 1j * np.array([rng.uniform() - 0.5 for _ in range(side**dim)])
    return PeriodicSignal(flat.reshape((side,) * dim))


# ------------------------------------------------------------- averages


def test_average_delta_unit_shell():
    f = SparseSignal.delta(5)
    out = spherical_average(f, enumerate_sphere(5, 1))
    assert len(out.entries) == 10
    for v in out.entries.values():
        assert v == pytest.approx(0.1)


def test_average_preserves_constants_periodic():
    ones = PeriodicSignal(np.ones((16, 16)))
    out = spherical_average(ones, enumerate_sphere(2, 4))
    assert np.allclose(out.values, 1.0, atol=1e-12)


def test_average_superposition_overlap():
    f = SparseSignal(2, {(0, 0): 1.0, (2, 0): 1.0})
    out = spherical_average(f, enumerate_sphere(2, 1))
    assert out.get((1, 0)) == pytest.approx(0.5)  # both deltas reach it
    for p in [(-1, 0), (0, 1), (0, -1), (3, 0), (2, 1), (2, -1)]:
        assert out.get(p) == pytest.approx(0.25)
    assert len(out.entries) == 7


def test_average_errors():
    f = SparseSignal.delta(3)
    with pytest.raises(ParameterError):
        spherical_average(f, enumerate_sphere(3, 7))  # empty shell
    with pytest.raises(ParameterError):
        spherical_average(f, enumerate_sphere(2, 1))  # dim mismatch
    small = PeriodicSignal(np.ones((5, 5)))
    with pytest.raises(ParameterError):
        spherical_average(small, enumerate_sphere(2, 9))  # wrap ambiguity


def test_contractivity_random_sparse():
    rng = Xorshift64Star(13)
    for _ in range(100):
        d = (2, 3, 5)[rng.randrange(3)]
        n = 1 + rng.randrange(50)
        shell = enumerate_sphere(d, n)
        if shell.count == 0:
            continue
        f = SparseSignal(
            d,
            {
                tuple(rng.randint(-4, 4) for _ in range(d)): rng.uniform() - 0.5
                for _ in range(8)
            },
        )
        assert spherical_average(f, shell).norm(2) <= f.norm(2) + 1e-12


def test_translation_equivariance_exact():
    f = SparseSignal(2, {(0, 0): 3.0, (2, -1): -2.0, (1, 4): 7.0})
    shell = enumerate_sphere(2, 5)
    v = (3, -2)
    left = spherical_average(f.shift(v), shell)
    right = spherical_average(f, shell).shift(v)
    assert left == right


def test_periodic_fft_and_direct_agree():
    f = random_periodic(2, 24, seed=10)
    shell = enumerate_sphere(2, 5)  # count 8 -> fft path
    via_fft = spherical_average(f, shell)
    acc = np.zeros_like(f.values)
    for m in shell.points:
        acc += np.roll(f.values, shift=tuple(int(c) for c in m), axis=(0, 1))
    assert np.allclose(via_fft.values, acc / shell.count, atol=1e-12)


# ------------------------------------------------------------- dyadic max


def test_dyadic_max_examples():
    f = SparseSignal.delta(5)
    out = dyadic_max(f, 0)
    assert out.get((1, 0, 0, 0, 0)) == pytest.approx(1 / 10)
    assert out.get((2, 0, 0, 0, 0)) == pytest.approx(1 / 90)

    zero = SparseSignal(5, {})
    assert dyadic_max(zero, 0).entries == {}


def test_star_max_examples():
    f = SparseSignal.delta(5)
    assert star_max(f, 0).entries == dyadic_max(f, 0).entries
    out = star_max(f, 1)
    assert out.get((1, 0, 0, 0, 0)) == pytest.approx(1 / 10)
    assert star_max(SparseSignal(5, {}), 1).entries == {}


def test_dyadic_max_periodic_grid_guard():
    f = PeriodicSignal(np.ones((8, 8)))
    with pytest.raises(ParameterError):
        dyadic_max(f, 1)  # needs side >= 9


def test_dyadic_max_at_matches_dense():
    f = random_periodic(2, 24, seed=21)
    dense = dyadic_max(f, 1)
    pts = np.array([[0, 0], [3, 7], [11, 23], [9, 9], [20, 2]])
    sampled = dyadic_max_at(f, 1, pts)
    for row, val in zip(pts, sampled):
        assert val == pytest.approx(dense.values[tuple(row)], abs=1e-12)


# ------------------------------------------------------------- box maximal


def test_hl_examples():
    f = SparseSignal.delta(1)
    out = hl_max(f, 3)
    assert out.get((0,)) == pytest.approx(1 / 5)  # best window is l = 1

    ones = PeriodicSignal(np.ones((32,) * 2))
    h = hl_max(ones, 2)
    assert np.allclose(h.values, 1.0, atol=1e-12)

    short = hl_max(SparseSignal.delta(1), 1)
    assert short.get((3,)) == 0.0  # window [1, 5] misses the mass at 0


def test_hl_periodic_matches_direct():
    f = random_periodic(2, 16, seed=33)
    out = hl_max(f, 2)
    # direct check at a few points
    for n in [(0, 0), (5, 11), (15, 3)]:
        best = 0.0
        for l in (1, 2):
            half = 2**l
            acc = 0.0
            for dx in range(-half, half + 1):
                for dy in range(-half, half + 1):
                    acc += f.values[(n[0] - dx) % 16, (n[1] - dy) % 16]
            best = max(best, abs(acc) / (2 * half + 1) ** 2)
        assert out.values[n] == pytest.approx(best, abs=1e-12)


def test_hl_window_guard():
    f = PeriodicSignal(np.ones((8, 8)))
    with pytest.raises(ParameterError):
        hl_max(f, 2)  # window 9 > side 8


# ------------------------------------------------------------- telescope


def test_telescope_zero_signal():
    rep = telescope_decompose(PeriodicSignal.zeros(2, 24), 4)
    assert rep.reconstruction_error == 0.0
    assert len(rep.pieces) == 2  # J_4 = 0
    for p in rep.pieces:
        assert np.allclose(p.values, 0)


def test_telescope_random_two_term():
    f = random_periodic(2, 24, seed=55, complex_values=True)
    rep = telescope_decompose(f, 4)
    assert rep.reconstruction_error <= 1e-12 * f.norm2()


def test_telescope_delta_four_pieces():
    f = PeriodicSignal.delta(2, 48)
    rep = telescope_decompose(f, 16)
    assert rep.depth_count == 2
    assert len(rep.pieces) == 4
    total = sum(p.values for p in rep.pieces)
    assert np.abs(total - f.values).max() <= 1e-9
    assert rep.reconstruction_error <= 1e-9 * f.norm2()


def test_telescope_divisibility_guard():
    f = PeriodicSignal.zeros(2, 25)
    with pytest.raises(ParameterError) as err:
        telescope_decompose(f, 16)  # q_2 = 12 does not divide 25
    assert "12" in str(err.value)
    with pytest.raises(ParameterError):
        telescope_decompose(PeriodicSignal.zeros(2, 24), 3)  # k >= 4


# ------------------------------------------------------------- plumbing


def test_parseval_roundtrip():
    f = random_periodic(3, 12, seed=77)
    spectrum = f.fft()
    norm_phys = f.norm2()
    norm_freq = math.sqrt(float(np.sum(np.abs(spectrum) ** 2)) / 12**3)
    assert abs(norm_phys - norm_freq) <= 1e-10 * norm_phys
    back = np.fft.ifftn(spectrum)
    assert np.allclose(back.real, f.values, atol=1e-12)


def test_sparse_csv_roundtrip(tmp_path):
    f = SparseSignal(3, {(1, -2, 3): 1.5, (0, 0, 0): -0.25})
    path = tmp_path / "sig.csv"
    f.to_csv(path)
    g = SparseSignal.from_csv(path)
    assert f == g


def test_periodic_csv_roundtrip(tmp_path):
    f = random_periodic(2, 6, seed=88)
    path = tmp_path / "grid.csv"
    f.to_csv(path)
    g = PeriodicSignal.from_csv(path)
    assert g.dim == 2 and g.side == 6
    assert np.array_equal(g.values, f.values)


def test_norms():
    f = SparseSignal(1, {(0,): 3.0, (2,): -4.0})
    assert f.norm(1) == 7.0
    assert f.norm(2) == 5.0
    assert f.norm("inf") == 4.0

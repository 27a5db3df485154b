import numpy as np
import pytest

from sml import ResourceError, count_reps, enumerate_sphere, shell_to_csv
from sml.rng import Xorshift64Star


def brute_count(d, n):
    # independent oracle: full box scan
    r = int(np.floor(np.sqrt(n)))
    axes = [np.arange(-r, r + 1)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    norms = sum(g.astype(np.int64) ** 2 for g in grids)
    return int((norms == n).sum())


def test_count_examples():
    assert count_reps(5, 0) == 1
    assert count_reps(5, 1) == 10
    # brute force and the Jacobi four-square count 8 * sum_{d | 4, 4 !| d} d
    assert count_reps(4, 4) == brute_count(4, 4) == 8 * (1 + 2)
    assert count_reps(5, 4) == 90


def test_count_matches_bruteforce():
    for d in (1, 2, 3):
        for n in range(0, 60):
            assert count_reps(d, n) == brute_count(d, n)
    for n in range(0, 30):
        assert count_reps(4, n) == brute_count(4, n)
        assert count_reps(5, n) == brute_count(5, n)


def test_enumerate_examples():
    shell = enumerate_sphere(2, 25)
    assert shell.count == 12
    pts = {tuple(p) for p in shell.points}
    assert pts == {
        (5, 0), (-5, 0), (0, 5), (0, -5),
        (3, 4), (3, -4), (-3, 4), (-3, -4),
        (4, 3), (4, -3), (-4, 3), (-4, -3),
    }

    unit = enumerate_sphere(5, 1)
    assert unit.count == 10
    assert all(abs(p).sum() == 1 for p in unit.points)

    empty = enumerate_sphere(3, 7)  # 7 = 4^0 (8*0 + 7)
    assert empty.count == 0
    assert empty.points.shape == (0, 3)


def test_enumerate_lexicographic_and_exact():
    rng = Xorshift64Star(3)
    for _ in range(30):
        d = rng.randint(1, 4)
        n = rng.randrange(120)
        shell = enumerate_sphere(d, n)
        assert shell.count == count_reps(d, n)
        assert (np.sort(shell.points.view("i8,") if d == 1 else shell.points, axis=0) is not None)
        # ascending lexicographic order
        rows = [tuple(r) for r in shell.points]
        assert rows == sorted(rows)
        assert all(int((r * r).sum()) == n for r in shell.points.astype(np.int64))


def test_oracle_equivalence_grid():
    for d in (2, 3, 5):
        for n in range(0, 401, 7):
            assert enumerate_sphere(d, n).count == count_reps(d, n)


def test_shell_symmetry_under_signed_permutations():
    rng = Xorshift64Star(11)
    shell = enumerate_sphere(3, 26)
    pts = {tuple(p) for p in shell.points}
    for _ in range(25):
        perm = list(range(3))
        rng.shuffle(perm)
        signs = [1 - 2 * rng.randint(0, 1) for _ in range(3)]
        mapped = {tuple(signs[i] * p[perm[i]] for i in range(3)) for p in pts}
        assert mapped == pts


def test_memory_cap():
    with pytest.raises(ResourceError) as err:
        enumerate_sphere(5, 40000, max_points=1000)
    assert "points" in str(err.value)


def test_csv_dump(tmp_path):
    shell = enumerate_sphere(2, 25)
    path = tmp_path / "shell.csv"
    shell_to_csv(shell, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "m_1,m_2"
    assert len(lines) == 13


def test_points_read_only():
    shell = enumerate_sphere(2, 4)
    with pytest.raises(ValueError):
        shell.points[0, 0] = 9

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fuzzysel.dataset import Dataset
from fuzzysel.stats import correlation_matrix, correlation_set, pearson

vec = arrays(np.float64, 12, elements=st.floats(-100, 100))


def naive_pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)


def test_perfect_linear():
    assert pearson([1, 2, 3, 4], [2, 4, 6, 8]).rho == pytest.approx(1.0, abs=1e-15)
    assert pearson([1, 2, 3, 4], [8, 6, 4, 2]).rho == pytest.approx(-1.0, abs=1e-15)


def test_hand_example():
    # centred products sum to 8 and both centred sums of squares are 10
    assert pearson([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]).rho == pytest.approx(0.8, abs=1e-12)
    assert pearson([0, 1, 2, 3], [1, 3, 2, 9]).rho == pytest.approx(naive_pearson([0, 1, 2, 3], [1, 3, 2, 9]), rel=1e-12)


def test_constant_is_degenerate():
    r = pearson([3.0, 3.0, 3.0], [1.0, 2.0, 5.0])
    assert r == (0.0, True)


def test_length_errors():
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1], [1])


@given(a=vec, b=vec)
def test_symmetric_bounded(a, b):
    r1, r2 = pearson(a, b), pearson(b, a)
    assert r1.rho == pytest.approx(r2.rho, abs=1e-12)
    assert -1.0 <= r1.rho <= 1.0


@given(a=vec, b=vec, s=st.floats(0.1, 10), t=st.floats(-50, 50))
def test_affine_invariance(a, b, s, t):
    assume(np.std(a) > 1e-3 and np.std(b) > 1e-3)
    assert pearson(s * a + t, b).rho == pytest.approx(pearson(a, b).rho, abs=1e-9)
    assert pearson(-s * a + t, b).rho == pytest.approx(-pearson(a, b).rho, abs=1e-9)


def test_matrix_matches_pairwise(rng):
    X = rng.normal(size=(30, 4))
    X[:, 3] += X[:, 0]
    R, deg = correlation_matrix(X)
    assert not deg.any()
    np.testing.assert_allclose(R, R.T, atol=0)
    np.testing.assert_array_equal(np.diag(R), 1.0)
    for j in range(4):
        for m in range(4):
            if j != m:
                assert R[j, m] == pytest.approx(naive_pearson(X[:, j].tolist(), X[:, m].tolist()), abs=1e-12)


def test_matrix_degenerate_column(rng):
    X = rng.normal(size=(10, 3))
    X[:, 1] = 2.5
    R, deg = correlation_matrix(X)
    np.testing.assert_array_equal(deg, [False, True, False])
    assert np.all(R[1] == 0) and np.all(R[:, 1] == 0)


def test_class_correlation_exceeds_global(syn2):
    cs = correlation_set(syn2)
    # x1/x7 and x2/x8 are near copies inside class 1 only
    assert cs.class_rho[0, 0, 6] ** 2 > 0.9
    assert cs.class_rho[0, 1, 7] ** 2 > 0.9
    assert cs.class_rho[0, 0, 6] ** 2 > cs.global_rho[0, 6] ** 2
    assert cs.class_rho.shape == (3, 8, 8)


def test_class_correlation_needs_two_rows():
    d = Dataset(np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]]), [1, 2, 2], ("a", "b"), 2)
    with pytest.raises(ValueError, match="class 1"):
        correlation_set(d)


def test_to_csv(tmp_path, syn1):
    cs = correlation_set(syn1)
    paths = cs.to_csv(tmp_path, syn1.feature_names)
    assert [p.name for p in paths] == ["rho_global.csv", "rho_class1.csv", "rho_class2.csv", "rho_class3.csv"]
    lines = paths[0].read_text().splitlines()
    assert lines[0] == ",x1,x2,x3,x4,x5,x6"
    assert float(lines[1].split(",")[1]) == 1.0

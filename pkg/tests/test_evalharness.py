import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factseq.errors import InvalidInput
from factseq.evalharness import bin_correlation, rouge, sign_test, spearman


# -- ROUGE -------------------------------------------------------------------------

def test_rouge_identity():
    assert tuple(rouge("the cat sat", "the cat sat")) == (1.0, 1.0, 1.0)


def test_rouge_hand_example():
    r = rouge("a b c d", "a b x d")
    assert r.r1 == pytest.approx(0.75, abs=1e-12)
    assert r.rl == pytest.approx(0.75, abs=1e-12)
    assert r.r2 == pytest.approx(1 / 3, abs=1e-12)


def test_rouge_disjoint_and_empty():
    assert tuple(rouge("a b", "c d")) == (0.0, 0.0, 0.0)
    assert tuple(rouge("", "c d")) == (0.0, 0.0, 0.0)
    assert tuple(rouge("", "")) == (1.0, 1.0, 1.0)
    assert rouge("a b c", "a b c").total == 3.0
    assert tuple(rouge("a", "a")) == (1.0, 1.0, 1.0)
    assert rouge("a", "a b").r2 == 0.0
    assert tuple(rouge("a", "b")) == (0.0, 0.0, 0.0)


_text = st.lists(st.sampled_from(["a", "b", "c", "D", "e"]), min_size=1, max_size=8).map(" ".join)


@settings(max_examples=200, deadline=None)
@given(c=_text, r=_text)
def test_rouge_properties(c, r):
    s = rouge(c, r)
    assert all(0.0 <= v <= 1.0 for v in s)
    assert s.rl <= s.r1 + 1e-15
    assert rouge(c.upper() + "  ", r.lower()) == rouge(c, r)


# -- bins -------------------------------------------------------------------------

def test_bins_hand_example():
    xs = list(range(1, 11))
    rep = bin_correlation(xs, xs, 2)
    assert [b.mean for b in rep.bins] == [3.0, 8.0]
    assert rep.spearman == pytest.approx(1.0, abs=1e-12)
    assert [b.count for b in rep.bins] == [5, 5]
    assert (rep.bins[0].lower, rep.bins[1].upper) == (0.0, 100.0)


def test_bins_constant_partner():
    rep = bin_correlation([3, 1, 2, 5, 4, 6], [7.0] * 6, 3)
    assert {b.mean for b in rep.bins} == {7.0}
    assert rep.spearman == 0.0


def test_single_bin_is_global_mean():
    ys = [0.1, 0.5, 0.9, 0.3]
    rep = bin_correlation([4, 3, 2, 1], ys, 1)
    assert rep.bins[0].mean == pytest.approx(np.mean(ys))
    assert rep.bins[0].std == pytest.approx(np.std(ys))


def test_bins_errors():
    with pytest.raises(InvalidInput):
        bin_correlation([1, 2], [1], 1)
    with pytest.raises(InvalidInput):
        bin_correlation([1, 2], [1, 2], 3)


@settings(max_examples=100, deadline=None)
@given(data=st.lists(st.tuples(st.integers(-5, 5), st.floats(-1, 1)), min_size=1, max_size=40),
       k=st.integers(1, 10))
def test_bins_partition(data, k):
    if len(data) < k:
        return
    xs, ys = zip(*data)
    rep = bin_correlation(xs, ys, k)
    counts = [b.count for b in rep.bins]
    assert max(counts) - min(counts) <= 1 and sum(counts) == len(xs)
    assert [xs[i] for i in rep.order] == sorted(xs)
    assert list(rep.order) == sorted(range(len(xs)), key=lambda i: (xs[i], i))


def test_csv_and_dict(tmp_path):
    rep = bin_correlation([1, 2, 3, 4], [1, 1, 2, 2], 2)
    rep.write_csv(tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "percentile,mean,stdev" and len(lines) == 3
    assert rep.to_dict()["bins"][1]["mean"] == 2.0


def test_spearman_against_scipy():
    from scipy import stats

    rng = np.random.default_rng(0)
    x, y = rng.normal(size=50), rng.normal(size=50)
    assert spearman(x, y) == pytest.approx(stats.spearmanr(x, y).statistic, abs=1e-12)


# -- sign test ------------------------------------------------------------------------

def test_sign_test_counts_and_p():
    t = sign_test([1, 2, 3, None, 5], [0, 2, 4, 1, 1])
    assert (t.wins, t.losses, t.ties) == (2, 2, 1)
    assert t.p_value == pytest.approx(11 / 16)
    assert sign_test([1] * 10, [0] * 10).p_value == pytest.approx(2 ** -10)
    assert sign_test([], []).p_value == 1.0
    with pytest.raises(InvalidInput):
        sign_test([1], [])

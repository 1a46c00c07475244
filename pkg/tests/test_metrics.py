import numpy as np
import pytest
from hypothesis import given, strategies as st

from glocalfair import metrics
from glocalfair.errors import ShapeError, UndefinedMetricError


def binary_arrays(n_min=1, n_max=40, k=3):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(
            *[st.lists(st.integers(0, 1), min_size=n, max_size=n) for _ in range(k)]
        )
    )


class TestGroupRates:
    def test_perfect_classifier(self):
        y = np.array([1, 0, 1, 0])
        g = np.array([0, 0, 1, 1])
        r = metrics.group_rates(y, y, g)
        for gv in (0, 1):
            assert r.by_group[gv].tpr == 1.0
            assert r.by_group[gv].fpr == 0.0

    def test_hand_count(self):
        y = np.array([1, 1, 0, 0])
        g = np.array([0, 1, 0, 1])
        pred = np.array([1, 0, 0, 1])
        r = metrics.group_rates(pred, y, g)
        assert r.by_group[0].tpr == 1.0
        assert r.by_group[1].tpr == 0.0
        assert r.by_group[0].fpr == 0.0
        assert r.by_group[1].fpr == 1.0

    def test_empty_denominator_is_undefined(self):
        y = np.array([0, 0])
        g = np.array([1, 1])
        r = metrics.group_rates(np.array([0, 1]), y, g)
        assert r.by_group[1].tpr is None
        assert r.by_group[1].fnr is None
        assert r.by_group[1].n_pos == 0
        assert r.by_group[0].pos_rate is None  # group 0 empty entirely

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            metrics.group_rates([1, 0], [1], [0, 1])

    @given(binary_arrays())
    def test_complement_and_count_invariants(self, arrs):
        pred, y, g = (np.array(a) for a in arrs)
        r = metrics.group_rates(pred, y, g)
        for rs in list(r.by_group.values()) + [r.overall]:
            if rs.n_pos:
                assert rs.tpr + rs.fnr == pytest.approx(1.0)
            if rs.n_neg:
                assert rs.fpr + rs.tnr == pytest.approx(1.0)
        assert r.overall.n_pos == sum(rs.n_pos for rs in r.by_group.values())
        assert r.overall.n_neg == sum(rs.n_neg for rs in r.by_group.values())


class TestDPD:
    def test_equal_rates(self):
        assert metrics.dpd([1, 0, 1, 0], [0, 0, 1, 1]) == 0.0

    def test_hand_count(self):
        assert metrics.dpd([1, 0, 1, 1], [0, 0, 1, 1]) == pytest.approx(0.5)

    def test_constant_classifier(self):
        assert metrics.dpd([1, 1, 1, 1], [0, 1, 0, 1]) == 0.0

    def test_empty_group(self):
        with pytest.raises(UndefinedMetricError):
            metrics.dpd([1, 0], [0, 0])


class TestEOD:
    def test_perfect(self):
        y = [1, 0, 1, 0]
        assert metrics.eod(y, y, [0, 0, 1, 1]) == 0.0

    def test_hand_count(self):
        assert metrics.eod([1, 0, 0, 1], [1, 1, 0, 0], [0, 1, 0, 1]) == 1.0

    def test_group_symmetric(self):
        pred = [1, 0, 1, 0]
        y = [1, 0, 1, 0]
        g = [0, 0, 1, 1]
        assert metrics.eod(pred, y, g) == metrics.eod(pred, y, 1 - np.array(g))

    def test_missing_cell(self):
        with pytest.raises(UndefinedMetricError):
            metrics.eod([1, 0], [1, 0], [0, 0])


class TestDPDis:
    def test_equal(self):
        assert metrics.dp_dis([1, 0, 1, 0], [0, 0, 1, 1]) == 0.0

    def test_hand_count(self):
        assert metrics.dp_dis([1, 0, 1, 1], [0, 0, 1, 1]) == pytest.approx(0.25)

    def test_single_group(self):
        assert metrics.dp_dis([1, 0, 1], [0, 0, 0]) == 0.0


class TestFnedFped:
    def test_all_at_overall(self):
        y = [1, 0, 1, 0]
        r = metrics.group_rates(y, y, [0, 0, 1, 1])
        assert metrics.fned_fped(r) == (0.0, 0.0)

    def test_hand_value(self):
        # group FNRs 0.2 and 0.4 around overall 0.3 -> FNED 0.2
        y = np.array([1] * 10 + [1] * 10)
        g = np.array([0] * 10 + [1] * 10)
        pred = np.array([0] * 2 + [1] * 8 + [0] * 4 + [1] * 6)
        r = metrics.group_rates(pred, y, g)
        fned, fped = metrics.fned_fped(r)
        assert fned == pytest.approx(0.2)

    def test_one_group(self):
        y = [1, 0, 1, 1]
        r = metrics.group_rates([1, 0, 0, 1], y, [0, 0, 0, 0])
        fned, fped = metrics.fned_fped(r)
        assert fned == pytest.approx(0.0)
        assert fped == pytest.approx(0.0)


class TestUtilityDiscrepancy:
    def test_utility(self):
        assert metrics.utility([1, 0, 1], [1, 0, 1]) == 1.0
        assert metrics.utility([1, 0], [0, 1]) == 0.0
        assert metrics.utility([1, 1, 0, 0], [1, 1, 0, 1]) == 0.75

    def test_discrepancy(self):
        assert metrics.discrepancy([0.5, 0.5]) == 0.0
        assert metrics.discrepancy([0.9, 0.7, 0.8]) == pytest.approx(0.2)
        assert metrics.discrepancy([0.42]) == 0.0


class TestProperties:
    @given(binary_arrays(n_min=4), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, arrs, rnd):
        pred, y, g = (np.array(a) for a in arrs)
        perm = np.array(rnd.sample(range(len(pred)), len(pred)))
        try:
            before = (metrics.dpd(pred, g), metrics.eod(pred, y, g), metrics.dp_dis(pred, g))
        except UndefinedMetricError:
            return
        after = (
            metrics.dpd(pred[perm], g[perm]),
            metrics.eod(pred[perm], y[perm], g[perm]),
            metrics.dp_dis(pred[perm], g[perm]),
        )
        assert before == pytest.approx(after)

    @given(binary_arrays(n_min=4))
    def test_bounds_and_symmetry(self, arrs):
        pred, y, g = (np.array(a) for a in arrs)
        try:
            d = metrics.dpd(pred, g)
            e = metrics.eod(pred, y, g)
            dd = metrics.dp_dis(pred, g)
        except UndefinedMetricError:
            return
        assert 0.0 <= d <= 1.0 and 0.0 <= e <= 1.0 and 0.0 <= dd <= 1.0
        assert dd <= d + 1e-12  # max deviation from overall never exceeds the gap
        assert metrics.dpd(pred, 1 - g) == pytest.approx(d)
        assert metrics.eod(pred, y, 1 - g) == pytest.approx(e)

    @given(binary_arrays(n_min=4))
    def test_rates_match_direct_counting(self, arrs):
        pred, y, g = (np.array(a) for a in arrs)
        r = metrics.group_rates(pred, y, g)
        for gv in (0, 1):
            mask = g == gv
            pos = mask & (y == 1)
            if pos.sum():
                assert r.by_group[gv].tpr == pytest.approx(pred[pos].mean(), abs=1e-12)
            neg = mask & (y == 0)
            if neg.sum():
                assert r.by_group[gv].fpr == pytest.approx(pred[neg].mean(), abs=1e-12)

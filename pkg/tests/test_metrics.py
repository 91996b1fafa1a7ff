import numpy as np
import pytest

from maser.errors import ValidationError
from maser.metrics import (
    auroc,
    confusion,
    prevalence_by_group,
    render_pairwise_tables,
    render_summary_table,
    roc_curve,
    subgroup_metrics,
    summary_metrics,
)
from oracles import pairwise_auroc


class TestRocCurve:
    def test_perfect_separation_passes_through_corner(self):
        pts = roc_curve([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.2])
        assert (0.0, 1.0) in {(x, y) for x, y, _ in pts}

    def test_constant_scores_two_points(self):
        pts = roc_curve([1, 0, 1, 0], [0.5, 0.5, 0.5, 0.5])
        assert [(x, y) for x, y, _ in pts] == [(0.0, 0.0), (1.0, 1.0)]

    def test_five_point_staircase(self):
        # thresholds descending: 0.9 -> (0,1/2); 0.8 -> (1/2,1/2); 0.3 -> (1/2,1); 0.2 -> (1,1)
        pts = roc_curve([1, 0, 1, 0], [0.9, 0.8, 0.3, 0.2])
        assert [(x, y) for x, y, _ in pts] == [
            (0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)
        ]
        assert [t for _, _, t in pts] == [float("inf"), 0.9, 0.8, 0.3, 0.2]

    def test_monotone_coordinates(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(5, 100))
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                continue
            scores = rng.choice([0.1, 0.3, 0.5, 0.7], size=n)
            pts = roc_curve(labels, scores)
            xs = [x for x, _, _ in pts]
            ys = [y for _, y, _ in pts]
            assert xs == sorted(xs) and ys == sorted(ys)
            assert pts[0][:2] == (0.0, 0.0) and pts[-1][:2] == (1.0, 1.0)

    def test_single_class_error(self):
        with pytest.raises(ValidationError):
            roc_curve([1, 1], [0.2, 0.3])


class TestAuroc:
    def test_perfect(self):
        assert auroc([1, 1, 0, 0], [0.9, 0.8, 0.3, 0.2]) == 1.0

    def test_hand_case(self):
        # pairs: (.9,.8) win, (.9,.2) win, (.3,.8) loss, (.3,.2) win -> 3/4
        assert auroc([1, 0, 1, 0], [0.9, 0.8, 0.3, 0.2]) == pytest.approx(0.75)

    def test_all_ties_half(self):
        assert auroc([1, 0, 1, 0], [0.4] * 4) == pytest.approx(0.5)

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(4, 200))
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                continue
            # mix continuous and heavily tied scores
            if rng.uniform() < 0.5:
                scores = rng.normal(size=n)
            else:
                scores = rng.choice([0.1, 0.2, 0.5], size=n)
            assert auroc(labels, scores) == pytest.approx(
                pairwise_auroc(labels, scores), abs=1e-9
            )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(2)
        labels = rng.integers(0, 2, size=100)
        labels[0], labels[1] = 0, 1
        scores = rng.normal(size=100)
        base = auroc(labels, scores)
        for transform in (np.exp, np.tanh, lambda s: 3 * s + 7, lambda s: s**3):
            assert auroc(labels, transform(scores)) == pytest.approx(base, abs=1e-12)


class TestSummaryMetrics:
    def test_hand_computed_counts(self):
        labels = [1] * 10 + [0] * 90
        preds = [1] * 5 + [0] * 5 + [1] * 5 + [0] * 85
        rep = summary_metrics(labels, predictions=preds)
        assert rep.accuracy == pytest.approx(0.90)
        assert rep.sensitivity == pytest.approx(0.50)
        assert rep.specificity == pytest.approx(85 / 90)
        assert rep.ppv == pytest.approx(0.50)
        assert rep.npv == pytest.approx(85 / 90)
        assert rep.f1 == pytest.approx(0.50)

    def test_all_correct(self):
        labels = [1, 0, 1, 0]
        rep = summary_metrics(labels, predictions=labels)
        for m in (rep.accuracy, rep.sensitivity, rep.specificity, rep.ppv, rep.npv, rep.f1):
            assert m == 1.0

    def test_undefined_ppv_marker(self):
        rep = summary_metrics([1, 1, 0], predictions=[0, 0, 0])
        assert rep.ppv is None
        assert rep.f1 is None  # sensitivity 0 and ppv undefined

    def test_identities(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(10, 300))
            labels = rng.integers(0, 2, size=n)
            preds = rng.integers(0, 2, size=n)
            rep = summary_metrics(labels, predictions=preds)
            c = rep.counts
            if rep.sensitivity is not None:
                assert rep.sensitivity * (c.tp + c.fn) == pytest.approx(c.tp, abs=1e-9)
            if rep.f1 is not None and rep.ppv and rep.sensitivity:
                assert rep.f1 == pytest.approx(
                    2 * rep.ppv * rep.sensitivity / (rep.ppv + rep.sensitivity), abs=1e-12
                )

    def test_scores_with_threshold(self):
        labels = [1, 0, 1, 0]
        rep = summary_metrics(labels, scores=[0.9, 0.8, 0.3, 0.2], threshold=0.5)
        assert rep.auroc == pytest.approx(0.75)
        assert rep.counts.tp == 1 and rep.counts.fp == 1


class TestSubgroupMetrics:
    @staticmethod
    def two_group_data(tpr_a=0.8, tpr_b=0.5, n=1000, seed=0):
        rng = np.random.default_rng(seed)
        labels, preds, scores, groups = [], [], [], []
        for g, tpr in (("NH-White", tpr_a), ("NH-Black", tpr_b)):
            for _ in range(n):
                label = int(rng.uniform() < 0.5)
                if label:
                    pred = int(rng.uniform() < tpr)
                else:
                    pred = int(rng.uniform() < 0.2)
                labels.append(label)
                preds.append(pred)
                scores.append(rng.uniform(0.5, 1) if pred else rng.uniform(0, 0.5))
                groups.append(g)
        return map(np.array, (labels, preds, scores, groups))

    def test_identical_groups_p_one(self):
        labels = np.array([1, 1, 0, 0] * 25)
        preds = np.array([1, 0, 0, 1] * 25)
        scores = np.linspace(0, 1, 100)
        groups = np.array(["NH-White"] * 100)
        labels2 = np.concatenate([labels, labels])
        preds2 = np.concatenate([preds, preds])
        scores2 = np.concatenate([scores, scores])
        groups2 = np.concatenate([groups, np.array(["Hispanic"] * 100)])
        rep = subgroup_metrics(labels2, preds2, scores2, groups2, seed=1, n_boot=200)
        for metric in ("accuracy", "sensitivity", "specificity"):
            for t in rep.pairwise[metric].values():
                assert t.p_value == pytest.approx(1.0)

    def test_distinct_tpr_detected(self):
        labels, preds, scores, groups = self.two_group_data()
        rep = subgroup_metrics(labels, preds, scores, groups, seed=2, n_boot=200)
        assert rep.pairwise["sensitivity"][("NH-White", "NH-Black")].p_value < 1e-3

    def test_canonical_ordering(self):
        rng = np.random.default_rng(4)
        n = 300
        labels = rng.integers(0, 2, n)
        labels[:10] = 1
        labels[10:20] = 0
        preds = rng.integers(0, 2, n)
        scores = rng.uniform(size=n)
        groups = rng.choice(["Hispanic", "NH-Black", "NH-White", "NH-Other", "NH-Asian"], n)
        rep = subgroup_metrics(labels, preds, scores, groups, seed=5, n_boot=200)
        assert rep.order == ["NH-White", "NH-Asian", "NH-Black", "NH-Other", "Hispanic"]

    def test_single_class_group_flagged(self):
        labels = np.array([1, 1, 1, 1, 0, 1, 0, 1, 0, 1])
        preds = np.array([1, 0, 1, 0, 0, 1, 0, 1, 1, 0])
        scores = np.linspace(0, 1, 10)
        groups = np.array(["NH-White"] * 4 + ["Hispanic"] * 6)
        rep = subgroup_metrics(labels, preds, scores, groups, seed=6, n_boot=200)
        assert "NH-White" in rep.flagged
        assert rep.pairwise == {}

    def test_pooled_counts_equal_sum_of_groups(self):
        labels, preds, scores, groups = self.two_group_data(seed=7)
        rep = subgroup_metrics(labels, preds, scores, groups, seed=8, n_boot=200)
        pooled = confusion(labels, preds)
        total = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
        for g_rep in rep.per_group.values():
            for k in total:
                total[k] += getattr(g_rep.counts, k)
        assert total == {"tp": pooled.tp, "fp": pooled.fp, "fn": pooled.fn, "tn": pooled.tn}


class TestPrevalence:
    def test_all_positive_group(self):
        out = prevalence_by_group([1, 1, 1, 0], ["Hispanic"] * 3 + ["NH-White"])
        assert out["Hispanic"] == 1.0

    def test_one_to_three_mix(self):
        labels = [1] * 25 + [0] * 75
        out = prevalence_by_group(labels, ["NH-White"] * 100)
        assert out["NH-White"] == pytest.approx(0.25)

    def test_partition_identity(self):
        rng = np.random.default_rng(9)
        labels = rng.integers(0, 2, 500)
        groups = rng.choice(["NH-White", "Hispanic", "NH-Asian"], 500)
        out = prevalence_by_group(labels, groups)
        total = sum(out[g] * (groups == g).sum() for g in out)
        assert total == pytest.approx(labels.sum())


class TestRendering:
    def test_summary_table_includes_na(self):
        rep = summary_metrics([1, 1, 0], predictions=[0, 0, 0])
        text = render_summary_table({"model": rep})
        assert "n/a" in text and "Model" in text

    def test_pairwaise_table_shape(self):
        labels, preds, scores, groups = TestSubgroupMetrics.two_group_data(seed=10)
        rep = subgroup_metrics(labels, preds, scores, groups, seed=11, n_boot=200)
        text = render_pairwise_tables(rep)
        assert "SENSITIVITY" in text and "NH-Black" in text

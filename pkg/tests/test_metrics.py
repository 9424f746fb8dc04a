import numpy as np
import pytest

from roadseg import (
    average_precision,
    confusion,
    evaluate,
    evaluate_frames,
    f1_score,
    pr_curve,
)


def brute_force_ap(conf, gt, valid=None):
    """AP by literally evaluating the confusion matrix at every distinct score."""
    conf = np.asarray(conf, np.float64).ravel()
    gt = np.asarray(gt, bool).ravel()
    if valid is not None:
        keep = np.asarray(valid, bool).ravel()
        conf, gt = conf[keep], gt[keep]
    n_pos = gt.sum()
    ap = 0.0
    r_prev = 0.0
    for t in sorted(set(conf.tolist()), reverse=True):
        pred = conf >= t
        tp = (pred & gt).sum()
        fp = (pred & ~gt).sum()
        p = tp / (tp + fp)
        r = tp / n_pos
        ap += p * (r - r_prev)
        r_prev = r
    return ap


class TestConfusion:
    def test_perfect_predictor(self):
        gt = np.array([[1, 0], [0, 1]])
        c = confusion(gt.astype(float), gt, threshold=0.5)
        assert (c.fp, c.fn) == (0, 0)
        assert c.precision == 1.0 and c.recall == 1.0

    def test_all_zero_confidence(self):
        gt = np.array([1, 1, 1, 0, 0])
        c = confusion(np.zeros(5), gt, threshold=0.5)
        assert c.tp == 0 and c.fn == 3

    def test_four_pixel_enumeration(self):
        c = confusion(np.array([0.9, 0.4, 0.6, 0.1]), np.array([1, 1, 0, 0]),
                      threshold=0.5)
        assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)

    def test_valid_mask_excludes_pixels(self):
        conf = np.array([0.9, 0.9, 0.1])
        gt = np.array([1, 0, 1])
        valid = np.array([1, 0, 1])
        c = confusion(conf, gt, valid, 0.5)
        assert (c.tp, c.fp, c.fn, c.tn) == (1, 0, 1, 0)

    def test_ties_count_as_positive(self):
        c = confusion(np.array([0.5]), np.array([1]), threshold=0.5)
        assert c.tp == 1

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            confusion(np.zeros((2, 2)), np.zeros(4))

    def test_out_of_range_confidence(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            confusion(np.array([1.5]), np.array([1]))


class TestF1:
    def test_equal_p_r(self):
        assert f1_score(0.8, 0.8) == pytest.approx(0.8)

    def test_zero_recall(self):
        assert f1_score(1.0, 0.0) == 0.0

    def test_published_operating_point(self):
        # precision/recall pair for the strongest full-resolution BEV model
        assert round(f1_score(0.926, 0.945), 3) == 0.935


class TestAveragePrecision:
    def test_perfect_separation(self):
        conf = np.array([0.9, 0.8, 0.2, 0.1])
        gt = np.array([1, 1, 0, 0])
        assert average_precision(conf, gt) == 1.0

    def test_three_scores_enumerated(self):
        conf = np.array([0.9, 0.8, 0.3])
        gt = np.array([1, 0, 1])
        # t=0.9: P=1, R=1/2; t=0.8: P=1/2, R=1/2; t=0.3: P=2/3, R=1
        expect = 1.0 * 0.5 + 0.5 * 0.0 + (2 / 3) * 0.5
        assert average_precision(conf, gt) == pytest.approx(expect)

    def test_no_positives_is_error(self):
        with pytest.raises(ValueError, match="positives"):
            average_precision(np.array([0.5]), np.array([0]))

    def test_matches_brute_force_on_random_maps(self, rng):
        # tiny maps so the oracle's O(n^2) sweep stays cheap
        for _ in range(1000):
            n = int(rng.integers(2, 65))
            conf = rng.integers(0, 10, n) / 10.0  # duplicates guaranteed
            gt = rng.integers(0, 2, n)
            if gt.sum() == 0:
                gt[int(rng.integers(0, n))] = 1
            valid = rng.integers(0, 2, n) if rng.uniform() < 0.3 else None
            if valid is not None and gt[valid.astype(bool)].sum() == 0:
                valid = None
            ours = average_precision(conf, gt, valid)
            ref = brute_force_ap(conf, gt, valid)
            assert ours == pytest.approx(ref, abs=1e-12)

    def test_matches_sklearn(self, rng):
        from sklearn.metrics import average_precision_score

        for _ in range(50):
            conf = rng.uniform(0, 1, 500)
            gt = rng.integers(0, 2, 500)
            if gt.sum() == 0:
                gt[0] = 1
            assert average_precision(conf, gt) == pytest.approx(
                average_precision_score(gt, conf), abs=1e-12
            )

    def test_chance_level_on_balanced_map(self, rng):
        n = 200_000
        conf = rng.uniform(0, 1, n)
        gt = rng.integers(0, 2, n)
        assert average_precision(conf, gt) == pytest.approx(0.5, abs=0.05)

    def test_permutation_invariance(self, rng):
        conf = rng.uniform(0, 1, 300)
        gt = rng.integers(0, 2, 300)
        gt[0] = 1
        valid = rng.integers(0, 2, 300)
        valid[gt.astype(bool)] |= 1
        perm = rng.permutation(300)
        assert average_precision(conf, gt, valid) == pytest.approx(
            average_precision(conf[perm], gt[perm], valid[perm]), abs=1e-12
        )


class TestPRCurve:
    def test_perfect_predictor_pinned_at_one(self):
        # every recall level is reached at precision 1 before any FP appears
        conf = np.array([0.9, 0.8, 0.2, 0.1])
        gt = np.array([1, 1, 0, 0])
        curve = pr_curve(conf, gt)
        separating = curve.thresholds >= 0.8
        assert (curve.precision[separating] == 1.0).all()
        assert curve.recall[separating].max() == 1.0
        assert average_precision(conf, gt) == 1.0

    def test_three_score_curve(self):
        curve = pr_curve(np.array([0.9, 0.8, 0.3]), np.array([1, 0, 1]))
        np.testing.assert_allclose(curve.thresholds, [0.9, 0.8, 0.3])
        np.testing.assert_allclose(curve.precision, [1.0, 0.5, 2 / 3])
        np.testing.assert_allclose(curve.recall, [0.5, 0.5, 1.0])

    def test_duplicate_scores_collapse(self):
        curve = pr_curve(np.array([0.7, 0.7, 0.7, 0.2]), np.array([1, 0, 1, 0]))
        assert len(curve) == 2

    def test_recall_monotone_in_threshold(self, rng):
        conf = rng.uniform(0, 1, 1000)
        gt = rng.integers(0, 2, 1000)
        curve = pr_curve(conf, gt)  # thresholds descending
        assert (np.diff(curve.recall) >= 0).all()

    def test_thinning_caps_points(self, rng):
        conf = rng.uniform(0, 1, 5000)
        gt = rng.integers(0, 2, 5000)
        assert len(pr_curve(conf, gt, max_points=64)) <= 64


class TestEvaluate:
    def test_report_consistency(self, rng):
        conf = rng.uniform(0, 1, (32, 32))
        gt = rng.integers(0, 2, (32, 32))
        rep = evaluate(conf, gt)
        assert rep.tp + rep.fp + rep.fn + rep.tn == 32 * 32
        assert rep.f1 == pytest.approx(f1_score(rep.precision, rep.recall))
        c = confusion(conf, gt, threshold=0.5)
        assert (rep.tp, rep.fp, rep.fn, rep.tn) == (c.tp, c.fp, c.fn, c.tn)

    def test_report_serialization(self, rng):
        conf = rng.uniform(0, 1, 64)
        gt = rng.integers(0, 2, 64)
        gt[0] = 1
        rep = evaluate(conf, gt)
        lines = rep.to_lines()
        assert "ap=" in lines and "f1=" in lines
        assert rep.to_dict()["tp"] == rep.tp

    def test_micro_vs_macro(self, rng):
        frames = []
        for _ in range(4):
            conf = rng.uniform(0, 1, 256)
            gt = rng.integers(0, 2, 256)
            gt[0] = 1
            frames.append((conf, gt, None))
        micro = evaluate_frames(frames, mode="micro")
        macro = evaluate_frames(frames, mode="macro")
        assert micro.aggregation == "micro"
        assert macro.aggregation == "macro"
        assert micro.tp == macro.tp  # counts always sum
        pooled = np.concatenate([f[0] for f in frames]), np.concatenate(
            [f[1] for f in frames]
        )
        assert micro.ap == pytest.approx(average_precision(*pooled))
        assert macro.ap == pytest.approx(
            np.mean([average_precision(c, g) for c, g, _ in frames])
        )

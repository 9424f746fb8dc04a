"""Confidence-map scoring: confusion counts, F1, average precision, PR curves.

Predictions are thresholded with >=, so ties count as positive. Average
precision is the step-wise sum AP = sum_n P_n (R_n - R_{n-1}) over the
distinct confidence values taken in descending order, with R_0 = 0; no
11-point or trapezoidal smoothing. Pixels outside the ``valid`` mask never
enter any count, which is how sparse spherical-view ground truth is scored
(bird-eye-view ground truth is dense, so there the mask is all ones).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall at descending thresholds."""

    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray

    def __len__(self) -> int:
        return len(self.thresholds)

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.precision.tolist(),
                        self.recall.tolist()))


@dataclass(frozen=True)
class MetricsReport:
    """Scores of one confidence map (or one pooled/averaged set of maps)."""

    threshold: float
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    ap: float
    pr_curve: PRCurve | None = None
    aggregation: str = "single"

    def to_dict(self) -> dict:
        d = {
            "aggregation": self.aggregation,
            "threshold": self.threshold,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "ap": self.ap,
        }
        if self.pr_curve is not None:
            d["pr_curve"] = [list(p) for p in self.pr_curve.points()]
        return d

    def to_lines(self) -> str:
        keys = ("aggregation", "threshold", "tp", "fp", "fn", "tn",
                "precision", "recall", "f1", "ap")
        d = self.to_dict()
        return "".join(f"{k}={d[k]}\n" for k in keys)


def _flatten(conf, gt, valid):
    conf = np.asarray(conf, dtype=np.float64)
    gt = np.asarray(gt)
    if conf.shape != gt.shape:
        raise ValueError(f"confidence {conf.shape} vs ground truth {gt.shape}")
    if conf.size and (conf.min() < 0.0 or conf.max() > 1.0):
        raise ValueError("confidence values must lie in [0, 1]")
    if valid is None:
        keep = np.ones(conf.shape, dtype=bool)
    else:
        keep = np.asarray(valid).astype(bool)
        if keep.shape != conf.shape:
            raise ValueError(f"valid mask {keep.shape} vs confidence {conf.shape}")
    return conf[keep].ravel(), gt[keep].astype(bool).ravel()


def confusion(conf, gt, valid=None, threshold: float = 0.5) -> Confusion:
    """Counts over valid pixels with prediction = (confidence >= threshold)."""
    scores, truth = _flatten(conf, gt, valid)
    pred = scores >= threshold
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    fn = int(np.count_nonzero(~pred & truth))
    tn = int(np.count_nonzero(~pred & ~truth))
    return Confusion(tp, fp, fn, tn)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both vanish."""
    s = precision + recall
    return 2.0 * precision * recall / s if s > 0.0 else 0.0


def _threshold_sweep(scores: np.ndarray, truth: np.ndarray):
    """(thresholds desc, cumulative tp, cumulative fp) at each distinct score."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = truth[order]
    tp = np.cumsum(t)
    fp = np.cumsum(~t)
    # Last index of each run of equal scores: >= thresholding includes ties.
    last = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    return s[last], tp[last], fp[last]


def average_precision(conf, gt, valid=None) -> float:
    """Step-wise AP over the distinct confidence values, descending."""
    scores, truth = _flatten(conf, gt, valid)
    n_pos = int(truth.sum())
    if n_pos == 0:
        raise ValueError("average precision is undefined without positives")
    _, tp, fp = _threshold_sweep(scores, truth)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(recall, prepend=0.0) * precision))


def pr_curve(conf, gt, valid=None, max_points: int | None = None) -> PRCurve:
    """PR curve sampled at distinct scores, thinned to quantiles when too dense."""
    scores, truth = _flatten(conf, gt, valid)
    n_pos = int(truth.sum())
    if n_pos == 0:
        raise ValueError("PR curve is undefined without positives")
    thresholds, tp, fp = _threshold_sweep(scores, truth)
    if max_points is not None and len(thresholds) > max_points:
        pick = np.unique(
            np.linspace(0, len(thresholds) - 1, max_points).round().astype(int)
        )
        thresholds, tp, fp = thresholds[pick], tp[pick], fp[pick]
    return PRCurve(thresholds, tp / (tp + fp), tp / n_pos)


def evaluate(
    conf,
    gt,
    valid=None,
    threshold: float = 0.5,
    curve: bool = True,
    max_curve_points: int | None = None,
    aggregation: str = "single",
) -> MetricsReport:
    """Full report: confusion at ``threshold``, F1, AP, and optionally the curve."""
    c = confusion(conf, gt, valid, threshold)
    p, r = c.precision, c.recall
    return MetricsReport(
        threshold=threshold,
        tp=c.tp, fp=c.fp, fn=c.fn, tn=c.tn,
        precision=p,
        recall=r,
        f1=f1_score(p, r),
        ap=average_precision(conf, gt, valid),
        pr_curve=pr_curve(conf, gt, valid, max_curve_points) if curve else None,
        aggregation=aggregation,
    )


def evaluate_frames(
    items: list[tuple[np.ndarray, np.ndarray, np.ndarray | None]],
    threshold: float = 0.5,
    mode: str = "micro",
    curve: bool = True,
    max_curve_points: int | None = None,
) -> MetricsReport:
    """Aggregate scoring across frames.

    micro: pool all valid pixels, then score once (the default).
    macro: score each frame, average the metrics; counts are summed.
    """
    if not items:
        raise ValueError("no frames to aggregate")
    if mode == "micro":
        pooled = [_flatten(conf, gt, valid) for conf, gt, valid in items]
        scores = np.concatenate([s for s, _ in pooled])
        truth = np.concatenate([t for _, t in pooled])
        rep = evaluate(scores, truth, None, threshold, curve, max_curve_points)
        return dataclasses.replace(rep, aggregation="micro")
    if mode == "macro":
        reports = [
            evaluate(conf, gt, valid, threshold, curve=False)
            for conf, gt, valid in items
        ]
        n = len(reports)
        return MetricsReport(
            threshold=threshold,
            tp=sum(r.tp for r in reports),
            fp=sum(r.fp for r in reports),
            fn=sum(r.fn for r in reports),
            tn=sum(r.tn for r in reports),
            precision=sum(r.precision for r in reports) / n,
            recall=sum(r.recall for r in reports) / n,
            f1=sum(r.f1 for r in reports) / n,
            ap=sum(r.ap for r in reports) / n,
            pr_curve=None,
            aggregation="macro",
        )
    raise ValueError(f"unknown aggregation mode {mode!r}")

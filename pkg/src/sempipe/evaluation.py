"""Score segmentation predictions against ground truth.

Matching is greedy in descending confidence against mask IoU; AP uses the
101-point interpolated precision envelope; precision/recall are reported at
the confidence cutoff that maximizes F1 on the IoU-0.5 sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annotations import Annotation, rasterize
from .enhance import BinaryMask
from .errors import DimensionMismatch, InvalidConfig, MissingConfidence

DEFAULT_IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
RECALL_POINTS = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class MatchConfig:
    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_THRESHOLDS

    def __post_init__(self):
        ts = self.iou_thresholds
        if not ts or any(not (0 < t <= 1) for t in ts) or list(ts) != sorted(set(ts)):
            raise InvalidConfig("IoU thresholds must be strictly increasing in (0, 1]")


@dataclass(frozen=True)
class ImageCounts:
    image_id: str
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    map50: float
    map50_95: float
    fitness: float
    operating_confidence: float
    per_image: list[ImageCounts] = field(default_factory=list)


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union; 0 when both masks are empty."""
    if a.bits.shape != b.bits.shape:
        raise DimensionMismatch(
            f"mask shapes {a.bits.shape} vs {b.bits.shape}"
        )
    union = int(np.logical_or(a.bits, b.bits).sum())
    if union == 0:
        return 0.0
    inter = int(np.logical_and(a.bits, b.bits).sum())
    return inter / union


def _confidence_order(preds: list[Annotation]) -> list[int]:
    for p in preds:
        if p.confidence is None:
            raise MissingConfidence("prediction without confidence")
    return sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))


def _match_by_iou(
    iou: np.ndarray, order: list[int], iou_thr: float
) -> tuple[list[bool], set[int]]:
    """Greedy single-match assignment over a precomputed IoU matrix."""
    flags = [False] * iou.shape[0]
    matched: set[int] = set()
    for pi in order:
        best_gt, best_iou = -1, -1.0
        for gi in range(iou.shape[1]):
            if gi in matched:
                continue
            v = iou[pi, gi]
            if v >= iou_thr and v > best_iou:  # ties keep the lower GT index
                best_gt, best_iou = gi, v
        if best_gt >= 0:
            flags[pi] = True
            matched.add(best_gt)
    return flags, matched


def _iou_matrix(preds: list[Annotation], gts: list[Annotation], dims) -> np.ndarray:
    width, height = dims
    pred_masks = [rasterize(p.polygon, width, height) for p in preds]
    gt_masks = [rasterize(g.polygon, width, height) for g in gts]
    iou = np.zeros((len(preds), len(gts)))
    for i, pm in enumerate(pred_masks):
        for j, gm in enumerate(gt_masks):
            iou[i, j] = mask_iou(pm, gm)
    return iou


def match_predictions(
    preds: list[Annotation],
    gts: list[Annotation],
    iou_thr: float,
    dims: tuple[int, int],
) -> tuple[list[bool], set[int]]:
    """Per-prediction TP flags (file order) and the set of matched GT indices."""
    order = _confidence_order(preds)
    return _match_by_iou(_iou_matrix(preds, gts, dims), order, iou_thr)


def average_precision(flags: list[bool], n_gt: int) -> float:
    """101-point interpolated AP over confidence-ordered TP/FP flags."""
    if n_gt == 0:
        return 0.0  # no ground truth: AP is defined as 0 (flagged upstream)
    if not flags:
        return 0.0
    tp = np.cumsum(np.asarray(flags, dtype=np.float64))
    fp = np.cumsum(~np.asarray(flags, dtype=bool))
    recall = tp / n_gt
    precision = tp / (tp + fp)
    # Monotone envelope from the right.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    # Precision sampled at each recall point: first index with recall >= r.
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(sampled.mean())


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def fitness_score(map50: float, map50_95: float) -> float:
    """Model-selection scalar: 0.9 * mAP50 + 0.1 * mAP50-95."""
    return 0.9 * map50 + 0.1 * map50_95


def compute_metrics(
    pred_set: dict[str, list[Annotation]],
    gt_set: dict[str, list[Annotation]],
    cfg: MatchConfig = MatchConfig(),
    dims: tuple[int, int] = (1024, 1024),
) -> EvalReport:
    """Corpus-pooled single-class detection metrics.

    Images missing from pred_set count as zero predictions. The result is
    independent of image iteration order: pooled ordering sorts on
    (-confidence, image_id, in-file index).
    """
    unknown = set(pred_set) - set(gt_set)
    if unknown:
        raise InvalidConfig(f"predictions for unknown images: {sorted(unknown)}")

    n_gt = sum(len(v) for v in gt_set.values())
    pooled: list[tuple[float, str, int, list[bool]]] = []
    per_image: list[ImageCounts] = []

    for image_id in sorted(gt_set):
        gts = gt_set[image_id]
        preds = pred_set.get(image_id, [])
        order = _confidence_order(preds)
        if preds:
            iou = _iou_matrix(preds, gts, dims)
            flags_per_thr = [
                _match_by_iou(iou, order, thr)[0] for thr in cfg.iou_thresholds
            ]
        else:
            flags_per_thr = [[] for _ in cfg.iou_thresholds]
        for pi, p in enumerate(preds):
            pooled.append(
                (p.confidence, image_id, pi, [f[pi] for f in flags_per_thr])
            )
        thr50_idx = _nearest_threshold_index(cfg.iou_thresholds, 0.5)
        tp50 = sum(flags_per_thr[thr50_idx]) if preds else 0
        per_image.append(
            ImageCounts(image_id, tp=tp50, fp=len(preds) - tp50, fn=len(gts) - tp50)
        )

    pooled.sort(key=lambda rec: (-rec[0], rec[1], rec[2]))
    aps = []
    for ti in range(len(cfg.iou_thresholds)):
        aps.append(average_precision([rec[3][ti] for rec in pooled], n_gt))
    thr50_idx = _nearest_threshold_index(cfg.iou_thresholds, 0.5)
    map50 = aps[thr50_idx]
    map50_95 = float(np.mean(aps))

    # Operating point: the confidence cutoff maximizing F1 on the IoU-0.5 sweep.
    precision = recall = f1 = 0.0
    operating_confidence = 1.0
    tp = 0
    for i, rec in enumerate(pooled, start=1):
        tp += rec[3][thr50_idx]
        p = tp / i
        r = tp / n_gt if n_gt else 0.0
        f = _f1(p, r)
        if f > f1:
            precision, recall, f1 = p, r, f
            operating_confidence = rec[0]

    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1,
        map50=map50,
        map50_95=map50_95,
        fitness=fitness_score(map50, map50_95),
        operating_confidence=operating_confidence,
        per_image=per_image,
    )


def _nearest_threshold_index(thresholds: tuple[float, ...], target: float) -> int:
    return min(range(len(thresholds)), key=lambda i: abs(thresholds[i] - target))

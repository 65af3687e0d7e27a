import numpy as np
import pytest

from sempipe import (
    Annotation,
    BinaryMask,
    MatchConfig,
    Polygon,
    average_precision,
    compute_metrics,
    fitness_score,
    mask_iou,
    match_predictions,
)
from sempipe.errors import DimensionMismatch, InvalidConfig, MissingConfidence

from conftest import rect_polygon

DIMS = (64, 64)


def exact_ap_oracle(flags, n_gt):
    """Brute-force AP: integrate the exact step-function precision envelope."""
    if n_gt == 0 or not flags:
        return 0.0
    points = []
    tp = fp = 0
    for f in flags:
        tp += bool(f)
        fp += not f
        points.append((tp / n_gt, tp / (tp + fp)))
    area = 0.0
    prev_r = 0.0
    for r, _ in points:
        if r <= prev_r:
            continue
        env = max(p for rr, p in points if rr >= r)
        area += (r - prev_r) * env
        prev_r = r
    return area


def square(cx, cy, side=10):
    return rect_polygon(cx, cy, side, side, 0, DIMS)


def pred(poly, conf):
    return Annotation(0, poly, confidence=conf)


def gt(poly):
    return Annotation(0, poly)


# -------------------------------------------------------------------- IoU


def test_identical_masks():
    m = BinaryMask(np.eye(8, dtype=bool))
    assert mask_iou(m, m) == 1.0


def test_disjoint_masks():
    a = np.zeros((8, 8), dtype=bool)
    b = np.zeros((8, 8), dtype=bool)
    a[0, 0] = True
    b[7, 7] = True
    assert mask_iou(BinaryMask(a), BinaryMask(b)) == 0.0


def test_partial_overlap_one_third():
    a = np.zeros((20, 20), dtype=bool)
    b = np.zeros((20, 20), dtype=bool)
    a[0:10, 0:10] = True
    b[0:10, 5:15] = True  # 5x10 strip shared
    assert mask_iou(BinaryMask(a), BinaryMask(b)) == pytest.approx(1 / 3)


def test_both_empty_is_zero():
    e = BinaryMask(np.zeros((4, 4), dtype=bool))
    assert mask_iou(e, e) == 0.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mask_iou(BinaryMask(np.zeros((4, 4), dtype=bool)),
                 BinaryMask(np.zeros((4, 5), dtype=bool)))


# ---------------------------------------------------------------- matching


def test_exact_match_is_tp():
    g = square(32, 32)
    flags, matched = match_predictions([pred(g, 0.8)], [gt(g)], 0.5, DIMS)
    assert flags == [True] and matched == {0}


def test_single_match_rule():
    g = square(32, 32)
    near = square(33, 32)
    flags, _ = match_predictions(
        [pred(near, 0.9), pred(near, 0.8)], [gt(g)], 0.5, DIMS
    )
    assert flags == [True, False]


def test_below_threshold_is_fp():
    g = square(32, 32)
    far = square(40, 40)  # IoU well below 0.5
    flags, matched = match_predictions([pred(far, 0.9)], [gt(g)], 0.5, DIMS)
    assert flags == [False] and matched == set()


def test_missing_confidence_rejected():
    g = square(32, 32)
    with pytest.raises(MissingConfidence):
        match_predictions([Annotation(0, g)], [gt(g)], 0.5, DIMS)


# ---------------------------------------------------------------------- AP


def test_ap_all_tp():
    assert average_precision([True] * 5, 5) == 1.0


def test_ap_no_predictions():
    assert average_precision([], 3) == 0.0


def test_ap_tp_fp_tp():
    # envelope: p=1 for r<=0.5, p=2/3 above -> (51*1 + 50*(2/3)) / 101
    expected = (51 + 50 * (2 / 3)) / 101
    assert average_precision([True, False, True], 2) == pytest.approx(expected, abs=1e-12)


def test_ap_close_to_exact_envelope_oracle(rng):
    for _ in range(100):
        n_pred = int(rng.integers(1, 21))
        n_gt = int(rng.integers(1, 11))
        tps = min(n_gt, n_pred)
        flags = [bool(rng.random() < 0.5) for _ in range(n_pred)]
        while sum(flags) > tps:
            flags[flags.index(True)] = False
        assert average_precision(flags, n_gt) == pytest.approx(
            exact_ap_oracle(flags, n_gt), abs=0.01
        )


def test_ap_monotonicity(rng):
    for _ in range(30):
        flags = [bool(rng.random() < 0.5) for _ in range(10)]
        n_gt = int(sum(flags)) + int(rng.integers(1, 5))
        base = average_precision(flags, n_gt)
        assert average_precision([True] + flags, n_gt) >= base
        assert average_precision(flags + [False], n_gt) <= base


# ---------------------------------------------------------- compute_metrics


def test_perfect_predictions_identity():
    gts = {
        "a": [gt(square(20, 20)), gt(square(44, 44))],
        "b": [gt(square(32, 16))],
    }
    preds = {k: [pred(a.polygon, 1.0) for a in v] for k, v in gts.items()}
    rep = compute_metrics(preds, gts, dims=DIMS)
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)
    assert (rep.map50, rep.map50_95, rep.fitness) == (1.0, 1.0, 1.0)
    for c in rep.per_image:
        assert c.fp == 0 and c.fn == 0


def test_missing_prediction_image_counts_as_empty():
    gts = {"a": [gt(square(20, 20))], "b": [gt(square(44, 44))]}
    preds = {"a": [pred(square(20, 20), 1.0)]}
    rep = compute_metrics(preds, gts, dims=DIMS)
    assert rep.recall == pytest.approx(0.5)
    assert rep.precision == pytest.approx(1.0)


def test_unknown_prediction_image_rejected():
    with pytest.raises(InvalidConfig):
        compute_metrics({"zz": []}, {"a": []}, dims=DIMS)


def test_corpus_order_independence():
    gts = {f"im{i}": [gt(square(16 + 4 * i, 20))] for i in range(5)}
    preds = {
        f"im{i}": [pred(square(16 + 4 * i, 20), 0.5 + 0.1 * (i % 3))] for i in range(5)
    }
    rep1 = compute_metrics(preds, gts, dims=DIMS)
    shuffled_g = dict(reversed(list(gts.items())))
    shuffled_p = dict(reversed(list(preds.items())))
    rep2 = compute_metrics(shuffled_p, shuffled_g, dims=DIMS)
    assert rep1 == rep2


def test_fitness_formula_paper_row():
    # top row of the size comparison: mAP50 0.678, mAP50-95 0.468
    assert round(fitness_score(0.678, 0.468), 3) == 0.657


def test_f1_from_paper_precision_recall():
    p, r = 0.644, 0.678
    assert round(2 * p * r / (p + r), 3) == 0.661


def test_fitness_bounded_by_map_values(rng):
    for _ in range(50):
        m50, m95 = rng.random(), rng.random()
        f = fitness_score(m50, m95)
        assert min(m50, m95) - 1e-12 <= f <= max(m50, m95) + 1e-12


def test_match_config_validation():
    with pytest.raises(InvalidConfig):
        MatchConfig(iou_thresholds=(0.9, 0.5))
    with pytest.raises(InvalidConfig):
        MatchConfig(iou_thresholds=(0.0, 0.5))

"""Evaluation metrics: WHDR, SAW precision-recall / AP (unweighted and
gradient-weighted), and MIT-style MSE / LMSE / DSSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .annotations import SawAnnotationSet, dilate_points
from .image import LinearImage, LogImage, gradients, intensity
from .losses import log_channel_mean

LMSE_WINDOW = 20
LMSE_STRIDE = 10


# ---------------------------------------------------------------------------
# WHDR

def whdr(log_r: np.ndarray, judgments, delta: float = 0.10) -> float:
    """Weighted fraction of ordinal judgments the reflectance contradicts.

    The predicted relation comes from the linear-domain channel-mean ratio
    rho = R_i / R_j: rho > 1 + delta means j darker (+1), rho < 1/(1+delta)
    means i darker (-1), otherwise equal (0).
    """
    log_r = np.asarray(log_r, dtype=np.float64)
    if log_r.ndim == 2:
        log_r = log_r[:, :, None]
    refl = np.exp(log_r).mean(axis=2)
    h, w = refl.shape
    error_sum = 0.0
    weight_sum = 0.0
    for j in judgments:
        (xi, yi), (xj, yj) = j.point_i, j.point_j
        if not (0 <= xi < w and 0 <= yi < h and 0 <= xj < w and 0 <= yj < h):
            continue
        if j.weight <= 0:
            continue
        ri = max(refl[yi, xi], 1e-300)
        rj = max(refl[yj, xj], 1e-300)
        rho = ri / rj
        if rho > 1.0 + delta:
            pred = +1
        elif rho < 1.0 / (1.0 + delta):
            pred = -1
        else:
            pred = 0
        if pred != j.relation:
            error_sum += j.weight
        weight_sum += j.weight
    if weight_sum == 0:
        raise ValueError("zero total weight")
    return error_sum / weight_sum


# ---------------------------------------------------------------------------
# SAW precision-recall

@dataclass
class PrCurve:
    thresholds: np.ndarray  # descending
    precision: np.ndarray
    recall: np.ndarray
    ap: float


def shading_gradient_magnitude(log_s: np.ndarray) -> np.ndarray:
    """Per-pixel ||grad log S||_2 via forward differences of the scalar
    (channel-mean) log shading."""
    log_s = np.asarray(log_s, dtype=np.float64)
    if log_s.ndim == 2:
        log_s = log_s[:, :, None]
    scalar, _ = log_channel_mean(log_s)
    g = gradients(LogImage(scalar))
    return np.hypot(g.dx[:, :, 0], g.dy[:, :, 0])


def _saw_samples(log_s, image: LinearImage, saw: SawAnnotationSet,
                 challenge: bool, radius: float):
    """Scores and weights of the positive (non-smooth) and negative
    (smooth) annotated pixels."""
    score = shading_gradient_magnitude(log_s)
    h, w = score.shape
    valid = image.mask
    pos_mask = np.zeros((h, w), dtype=bool)
    if saw.shadow_points:
        pos_mask |= dilate_points(saw.shadow_points, radius, (h, w))
    if saw.discontinuity_points:
        pos_mask |= dilate_points(saw.discontinuity_points, radius, (h, w))
    pos_mask &= valid

    if challenge:
        g = gradients(intensity(image))
        img_grad = np.hypot(g.dx[:, :, 0], g.dy[:, :, 0])

    neg_scores, neg_weights = [], []
    flat_valid = valid.ravel()
    flat_pos = pos_mask.ravel()
    for region in saw.smooth_regions:
        idx = np.asarray(list(region), dtype=np.int64)
        idx = idx[flat_valid[idx]]
        if idx.size == 0:
            continue
        wgt = 1.0
        if challenge:
            wgt = float(img_grad.ravel()[idx].mean())
        keep = idx[~flat_pos[idx]]
        neg_scores.append(score.ravel()[keep])
        neg_weights.append(np.full(keep.size, wgt))

    pos_scores = score[pos_mask]
    neg_scores = np.concatenate(neg_scores) if neg_scores else np.zeros(0)
    neg_weights = np.concatenate(neg_weights) if neg_weights else np.zeros(0)
    return pos_scores, neg_scores, neg_weights


def saw_pr(log_s, image: LinearImage, saw: SawAnnotationSet,
           challenge: bool = False, radius: float = 5.0) -> PrCurve:
    """PR curve / AP for non-smooth shading detection.

    Positives are the radius-dilated shadow and discontinuity points;
    negatives are the constant-shading region pixels. A pixel is classified
    non-smooth when its shading gradient magnitude is >= the threshold; all
    distinct scores serve as thresholds. In challenge mode each smooth
    region's pixels are weighted by the region's mean image-gradient
    magnitude (positives always weigh 1). AP integrates precision over
    recall increments with the rectangular rule on the exact threshold set.
    """
    pos, neg, neg_w = _saw_samples(log_s, image, saw, challenge, radius)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("degenerate annotation set")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    order = np.argsort(neg, kind="stable")
    neg_sorted = neg[order]
    negw_cum = np.concatenate([[0.0], np.cumsum(neg_w[order][::-1])])

    tp = pos.size - np.searchsorted(pos_sorted, thresholds, side="left")
    n_ge = neg.size - np.searchsorted(neg_sorted, thresholds, side="left")
    fp_w = negw_cum[n_ge]

    precision = tp / np.maximum(tp + fp_w, 1e-300)
    recall = tp / pos.size
    ap = float(np.sum(np.diff(np.concatenate([[0.0], recall])) * precision))
    return PrCurve(thresholds, precision, recall, ap)


def saw_pr_reference(log_s, image: LinearImage, saw: SawAnnotationSet,
                     challenge: bool = False, radius: float = 5.0) -> PrCurve:
    """Direct-counting sweep over every threshold; the brute-force
    reference path for cross-checking saw_pr."""
    pos, neg, neg_w = _saw_samples(log_s, image, saw, challenge, radius)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("degenerate annotation set")
    thresholds = sorted(set(np.concatenate([pos, neg]).tolist()), reverse=True)
    precisions, recalls = [], []
    ap = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = float(np.sum(pos >= t))
        fp = float(np.sum(neg_w[neg >= t]))
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / pos.size
        ap += (rec - prev_recall) * prec
        prev_recall = rec
        precisions.append(prec)
        recalls.append(rec)
    return PrCurve(np.array(thresholds), np.array(precisions),
                   np.array(recalls), ap)


# ---------------------------------------------------------------------------
# MIT-style metrics

@dataclass
class MitMetrics:
    mse_r: float
    mse_s: float
    lmse_r: float
    lmse_s: float
    dssim_r: float
    dssim_s: float


def _lsq_scale(gt, pred, valid):
    denom = float((pred * pred * valid).sum())
    if denom < 1e-12:
        return 0.0
    return float((gt * pred * valid).sum()) / denom


def _si_mse_pair(gt: np.ndarray, pred: np.ndarray, valid: np.ndarray) -> float:
    v = valid[:, :, None]
    n = int(valid.sum()) * gt.shape[2]
    if n == 0:
        return 0.0
    c = _lsq_scale(gt, pred, v)
    res = (gt - c * pred) * v
    return float((res * res).sum()) / n


def _lmse(gt: np.ndarray, pred: np.ndarray, valid: np.ndarray,
          window: int = LMSE_WINDOW, stride: int = LMSE_STRIDE) -> float:
    h, w = valid.shape
    ys = list(range(0, h - window + 1, stride))
    xs = list(range(0, w - window + 1, stride))
    if not ys or not xs:
        return _si_mse_pair(gt, pred, valid)  # image smaller than one window
    vals = []
    for y in ys:
        for x in xs:
            sl = (slice(y, y + window), slice(x, x + window))
            if not valid[sl].any():
                continue
            vals.append(_si_mse_pair(gt[sl], pred[sl], valid[sl]))
    return float(np.mean(vals)) if vals else 0.0


def _dssim(gt: np.ndarray, pred: np.ndarray, valid: np.ndarray,
           sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03,
           dynamic_range: float = 1.0) -> float:
    x = np.where(valid, gt.mean(axis=2), 0.0)
    y = pred.mean(axis=2)
    c = _lsq_scale(x, np.where(valid, y, 0.0), valid)
    y = np.where(valid, c * y, 0.0)
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    mu_x = gaussian_filter(x, sigma)
    mu_y = gaussian_filter(y, sigma)
    var_x = gaussian_filter(x * x, sigma) - mu_x * mu_x
    var_y = gaussian_filter(y * y, sigma) - mu_y * mu_y
    cov = gaussian_filter(x * y, sigma) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
    if not valid.any():
        return 0.0
    return float((1.0 - ssim_map[valid].mean()) / 2.0)


def mit_metrics(pred_r: LinearImage, pred_s: LinearImage,
                gt_r: LinearImage, gt_s: LinearImage) -> MitMetrics:
    """Scale-invariant MSE, windowed LMSE (20 px windows, stride 10) and
    DSSIM = (1 - SSIM) / 2 on scale-aligned grayscale images, for the
    reflectance and shading channels."""
    out = {}
    for key, pred, gt in (("r", pred_r, gt_r), ("s", pred_s, gt_s)):
        valid = pred.mask & gt.mask
        out[f"mse_{key}"] = _si_mse_pair(gt.data, pred.data, valid)
        out[f"lmse_{key}"] = _lmse(gt.data, pred.data, valid)
        out[f"dssim_{key}"] = _dssim(gt.data, pred.data, valid)
    return MitMetrics(**out)

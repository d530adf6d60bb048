"""Decomposition loss terms with values and hand-derived gradients.

Every loss takes a Decomposition (log-reflectance / log-shading fields plus
a validity mask) and returns a LossResult whose gradients are with respect
to the log fields and vanish at invalid pixels. Conventions:

- Squared-error terms (scale-invariant MSE, reconstruction) are means over
  all valid samples, counting channels.
- L1 terms (multi-scale gradient matching, reflectance smoothness) sum the
  per-pixel channel L1 norm and divide by the valid pixel count N_l of each
  pyramid level.
- Subgradients of |.| and of hinge terms are 0 at exact ties.
- Wherever a scalar reflectance/shading value is needed at a pixel (ordinal
  pairs, shading variance terms), it is the log of the channel mean in the
  linear domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .annotations import SawAnnotationSet, dilate_points
from .bilateral import BilateralOperator
from .image import (
    Decomposition,
    LinearImage,
    LogImage,
    LOG_EPS,
    box_upsample_adjoint,
    build_pyramid,
    chromaticity,
    gradient_adjoint,
    gradients,
    intensity,
)


@dataclass
class LossWeights:
    """Weights of the composite objectives plus shared hyperparameters.

    Defaults are working starting points; all are configurable.
    """

    lambda_iiw: float = 1.0
    lambda_saw: float = 1.0
    lambda_ord: float = 0.1
    lambda_rec: float = 1.0
    lambda_rs: float = 1.0
    lambda_ss: float = 0.5
    lambda_sns: float = 1.0
    margin: float = 0.12
    pyramid_levels: int = 4

    def __post_init__(self):
        for name in ("lambda_iiw", "lambda_saw", "lambda_ord", "lambda_rec",
                     "lambda_rs", "lambda_ss", "lambda_sns", "margin"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be >= 1")


@dataclass
class LossResult:
    value: float
    grad_log_r: np.ndarray
    grad_log_s: np.ndarray
    aux: dict = field(default_factory=dict)


def _zeros_like_dec(dec: Decomposition):
    return np.zeros_like(dec.log_r), np.zeros_like(dec.log_s)


def log_channel_mean(log_field: np.ndarray):
    """Log of the per-pixel channel mean in the linear domain.

    Returns (scalar, chain) where chain[y, x, c] is the derivative of the
    scalar at (y, x) with respect to log_field[y, x, c].
    """
    lin = np.exp(log_field)
    mean = np.maximum(lin.mean(axis=2), 1e-300)
    return np.log(mean), lin / (mean[:, :, None] * log_field.shape[2])


def log_intensity(image: LinearImage) -> np.ndarray:
    """Per-pixel log of the channel-mean intensity, with the usual floor."""
    return np.log(np.maximum(intensity(image).data[:, :, 0], LOG_EPS))


# ---------------------------------------------------------------------------
# scale-invariant MSE

def least_squares_scale(gt: np.ndarray, pred: np.ndarray,
                        valid: np.ndarray) -> float:
    """argmin_c sum((gt - c * pred)^2) over valid samples."""
    v = valid[:, :, None]
    b = float((pred * pred * v).sum())
    if b <= 0:
        raise ValueError("degenerate prediction")
    return float((gt * pred * v).sum()) / b


def si_mse(dec: Decomposition, gt_r: LinearImage, gt_s: LinearImage) -> LossResult:
    """Scale-invariant MSE of both fields in the linear domain.

    The least-squares scales c_r, c_s make the value invariant to global
    rescaling of each predicted field; because they are optimal, the
    gradient treating them as functions of the prediction coincides with
    the fixed-scale gradient.
    """
    if gt_r.channels != dec.log_r.shape[2] or gt_s.channels != dec.log_s.shape[2]:
        raise ValueError("ground truth channel counts do not match prediction")
    valid = dec.mask & gt_r.mask & gt_s.mask
    v3 = valid[:, :, None]

    value = 0.0
    grads = []
    aux = {}
    for key, log_pred, gt in (("r", dec.log_r, gt_r.data),
                              ("s", dec.log_s, gt_s.data)):
        pred = np.exp(log_pred)
        b = float((pred * pred * v3).sum())
        if b <= 0:
            raise ValueError("degenerate prediction")
        c = float((gt * pred * v3).sum()) / b
        m = valid.sum() * pred.shape[2]
        res = np.where(v3, gt - c * pred, 0.0)
        value += float((res * res).sum()) / m
        grads.append((-2.0 * c / m) * res * pred)
        aux[f"c_{key}"] = c
        aux[f"sum_sq_{key}"] = b
        aux[f"value_{key}"] = float((res * res).sum()) / m
    return LossResult(value, grads[0], grads[1], aux)


# ---------------------------------------------------------------------------
# multi-scale gradient matching

def _field_grad_l1(pred_level, gt_level, c: float, norm: float):
    """L1 gradient mismatch at one pyramid level.

    Returns (value, cotangent on the level's data, d value / d c).
    """
    gp = gradients(pred_level)
    gg = gradients(gt_level)
    value = 0.0
    dval_dc = 0.0
    tx = np.zeros_like(gp.dx)
    ty = np.zeros_like(gp.dy)
    for d_pred, d_gt, vmask, t in ((gp.dx, gg.dx, gp.valid_dx, tx),
                                   (gp.dy, gg.dy, gp.valid_dy, ty)):
        vm = vmask[:, :, None]
        diff = np.where(vm, d_gt - c * d_pred, 0.0)
        value += norm * float(np.abs(diff).sum())
        sgn = np.sign(diff)
        t += np.where(vm, -c * norm * sgn, 0.0)
        dval_dc += norm * float((sgn * -d_pred * vm).sum())
    return value, gradient_adjoint(tx, ty), dval_dc


def grad_match(dec: Decomposition, gt_r: LinearImage, gt_s: LinearImage,
               c_r: float, c_s: float, levels: int) -> LossResult:
    """Multi-scale L1 matching of linear-domain forward gradients.

    c_r and c_s are the least-squares scales from si_mse on the same pair
    and are treated as fixed inputs; their sensitivities are reported in
    aux (d_value_d_c_r / d_value_d_c_s) for composite objectives that
    differentiate through them.
    """
    valid = dec.mask & gt_r.mask & gt_s.mask
    out_r, out_s = _zeros_like_dec(dec)
    value = 0.0
    aux = {"d_value_d_c_r": 0.0, "d_value_d_c_s": 0.0}
    for key, log_pred, gt, c, out in (("r", dec.log_r, gt_r.data, c_r, out_r),
                                      ("s", dec.log_s, gt_s.data, c_s, out_s)):
        pred_lin = np.exp(log_pred)
        pred_pyr = build_pyramid(LinearImage(pred_lin, valid), levels)
        gt_pyr = build_pyramid(LinearImage(gt, valid), levels)
        cotangents = []
        for pl, gl in zip(pred_pyr.levels, gt_pyr.levels):
            n_l = max(pl.valid_count, 1)
            val, cot, dvdc = _field_grad_l1(pl, gl, c, 1.0 / n_l)
            value += val
            aux[f"d_value_d_c_{key}"] += dvdc
            cotangents.append(cot)
        acc = cotangents[-1]
        for lvl in range(len(cotangents) - 2, -1, -1):
            acc = cotangents[lvl] + box_upsample_adjoint(
                acc, pred_pyr.levels[lvl].mask)
        out += acc * pred_lin  # chain through exp
    return LossResult(value, out_r, out_s, aux)


# ---------------------------------------------------------------------------
# ordinal reflectance loss

def ordinal_loss(dec: Decomposition, judgments, margin: float = 0.12) -> LossResult:
    """Hinge/equality penalties on pairwise darker-than judgments.

    Per pair: equal -> w (d)^2 with d = logR_i - logR_j; j darker (+1) ->
    w max(0, margin - d)^2; i darker (-1) -> w max(0, margin + d)^2.
    Pairs touching out-of-bounds or invalid pixels are skipped.
    """
    scalar, chain = log_channel_mean(dec.log_r)
    h, w = dec.shape
    cot = np.zeros((h, w))
    value = 0.0
    for j in judgments:
        (xi, yi), (xj, yj) = j.point_i, j.point_j
        if not (0 <= xi < w and 0 <= yi < h and 0 <= xj < w and 0 <= yj < h):
            continue
        if not (dec.mask[yi, xi] and dec.mask[yj, xj]) or j.weight <= 0:
            continue
        d = scalar[yi, xi] - scalar[yj, xj]
        if j.relation == 0:
            value += j.weight * d * d
            g = 2.0 * j.weight * d
        elif j.relation == +1:
            hgap = max(0.0, margin - d)
            value += j.weight * hgap * hgap
            g = -2.0 * j.weight * hgap
        else:
            hgap = max(0.0, margin + d)
            value += j.weight * hgap * hgap
            g = 2.0 * j.weight * hgap
        cot[yi, xi] += g
        cot[yj, xj] -= g
    grad_r = cot[:, :, None] * chain
    _, grad_s = _zeros_like_dec(dec)
    return LossResult(value, grad_r, grad_s, {})


# ---------------------------------------------------------------------------
# variance losses on annotated regions

def _variance_loss(x: np.ndarray):
    """Population variance of x and its gradient, computed in the centered
    form mean((x - mean)^2); exactly zero (value and gradient) when all
    entries are identical."""
    n = x.size
    if n == 0 or np.all(x == x.flat[0]):
        return 0.0, np.zeros_like(x)
    mean = x.mean()
    centered = x - mean
    value = float((centered * centered).mean())
    return value, (2.0 / n) * centered


def _region_scalar(dec: Decomposition, region):
    h, w = dec.shape
    idx = np.asarray(list(region), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= h * w):
        raise ValueError("region index out of bounds")
    idx = idx[dec.mask.ravel()[idx]]
    return idx


def constant_shading_loss(dec: Decomposition, region) -> LossResult:
    """Variance of log shading over a constant-shading region
    (row-major pixel indices); zero for empty or singleton regions."""
    scalar, chain = log_channel_mean(dec.log_s)
    idx = _region_scalar(dec, region)
    value, gx = _variance_loss(scalar.ravel()[idx])
    cot = np.zeros(dec.shape[0] * dec.shape[1])
    cot[idx] = gx
    grad_r, _ = _zeros_like_dec(dec)
    grad_s = cot.reshape(dec.shape)[:, :, None] * chain
    return LossResult(value, grad_r, grad_s, {"pixels": int(idx.size)})


def shadow_boundary_loss(dec: Decomposition, log_i: np.ndarray,
                         region) -> LossResult:
    """Variance of (log S - log I) over a dilated shadow-boundary region;
    zero whenever shading is proportional to the image there."""
    scalar, chain = log_channel_mean(dec.log_s)
    idx = _region_scalar(dec, region)
    x = scalar.ravel()[idx] - np.asarray(log_i).ravel()[idx]
    value, gx = _variance_loss(x)
    cot = np.zeros(dec.shape[0] * dec.shape[1])
    cot[idx] = gx
    grad_r, _ = _zeros_like_dec(dec)
    grad_s = cot.reshape(dec.shape)[:, :, None] * chain
    return LossResult(value, grad_r, grad_s, {"pixels": int(idx.size)})


# ---------------------------------------------------------------------------
# reflectance smoothness

_NEIGHBOR_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1),
                     (0, 1), (1, -1), (1, 0), (1, 1)]


def _smoothness_features(level_img: LinearImage, sigma_xy: float,
                         sigma_int: float, sigma_chroma: float) -> np.ndarray:
    """Per-pixel feature vector [x, y, intensity, chroma1, chroma2], each
    divided by its standard deviation. Pixels with degenerate chromaticity
    use the neutral point (1/3, 1/3)."""
    h, w = level_img.height, level_img.width
    py, px = np.mgrid[:h, :w].astype(np.float64)
    feats = [px / sigma_xy, py / sigma_xy,
             intensity(level_img).data[:, :, 0] / sigma_int]
    if level_img.channels == 3:
        ch = chromaticity(level_img)
        c = np.where(ch.mask[:, :, None], ch.data, 1.0 / 3.0)
        feats.append(c[:, :, 0] / sigma_chroma)
        feats.append(c[:, :, 1] / sigma_chroma)
    return np.stack(feats, axis=2)


def reflectance_smoothness(dec: Decomposition, image: LinearImage,
                           levels: int = 4, sigma_xy: float = 10.0,
                           sigma_int: float = 0.1,
                           sigma_chroma: float = 0.025) -> LossResult:
    """Multi-scale L1 smoothness of log reflectance over 8-neighborhoods,
    weighted by a Gaussian affinity in [position, intensity, chromaticity]
    feature space built from the input image pyramid. Both ordered visits
    of a neighbor pair are counted; level l is weighted by 1 / (N_l * l).
    """
    valid = dec.mask & image.mask
    log_pyr = build_pyramid(LogImage(dec.log_r, valid), levels)
    img_pyr = build_pyramid(LinearImage(image.data, valid), levels)
    value = 0.0
    cotangents = []
    for lidx, (ll, il) in enumerate(zip(log_pyr.levels, img_pyr.levels), start=1):
        feats = _smoothness_features(il, sigma_xy, sigma_int, sigma_chroma)
        lr = ll.data
        m = ll.mask
        norm = 1.0 / (max(ll.valid_count, 1) * lidx)
        cot = np.zeros_like(lr)
        h, w = m.shape
        for dy, dx in _NEIGHBOR_OFFSETS:
            ys0, ys1 = max(0, -dy), min(h, h - dy)
            xs0, xs1 = max(0, -dx), min(w, w - dx)
            yt0, yt1 = max(0, dy), min(h, h + dy)
            xt0, xt1 = max(0, dx), min(w, w + dx)
            pair = m[ys0:ys1, xs0:xs1] & m[yt0:yt1, xt0:xt1]
            if not pair.any():
                continue
            df = feats[ys0:ys1, xs0:xs1] - feats[yt0:yt1, xt0:xt1]
            v = np.exp(-0.5 * (df * df).sum(axis=2)) * pair
            dlr = lr[ys0:ys1, xs0:xs1] - lr[yt0:yt1, xt0:xt1]
            value += norm * float((v[:, :, None] * np.abs(dlr)).sum())
            t = norm * v[:, :, None] * np.sign(dlr)
            cot[ys0:ys1, xs0:xs1] += t
            cot[yt0:yt1, xt0:xt1] -= t
        cotangents.append(cot)
    acc = cotangents[-1]
    for lvl in range(len(cotangents) - 2, -1, -1):
        acc = cotangents[lvl] + box_upsample_adjoint(acc, log_pyr.levels[lvl].mask)
    _, grad_s = _zeros_like_dec(dec)
    return LossResult(value, acc, grad_s, {})


# ---------------------------------------------------------------------------
# dense shading smoothness via the bilateral operator

def shading_smoothness(dec: Decomposition, op: BilateralOperator) -> LossResult:
    """(1/N) s^T (I - W_hat) s over the operator's participating pixels,
    with gradient (2/N) (I - W_hat) s (exact because W_hat is symmetric).

    The operator determines which pixels participate; build it from the
    decomposition mask (optionally minus excluded regions).
    """
    grad_r, grad_s = _zeros_like_dec(dec)
    if op.n == 0:
        return LossResult(0.0, grad_r, grad_s, {})
    scalar, chain = log_channel_mean(dec.log_s)
    s_vec = scalar[op.mask]
    ws = op.apply(s_vec)
    value = float(s_vec @ (s_vec - ws)) / op.n
    g_vec = (2.0 / op.n) * (s_vec - ws)
    cot = np.zeros(dec.shape)
    cot[op.mask] = g_vec
    grad_s = cot[:, :, None] * chain
    return LossResult(value, grad_r, grad_s, {})


# ---------------------------------------------------------------------------
# reconstruction

def reconstruction_loss(dec: Decomposition, image: LinearImage) -> LossResult:
    """Linear-domain MSE between the image and exp(logR) * exp(logS);
    single-channel shading broadcasts across the reflectance channels."""
    if image.channels != dec.log_r.shape[2]:
        raise ValueError("image and reflectance channel counts differ")
    cs = dec.log_s.shape[2]
    if cs not in (1, dec.log_r.shape[2]):
        raise ValueError("shading channels must be 1 or match reflectance")
    valid = dec.mask & image.mask
    v3 = valid[:, :, None]
    recon = np.exp(dec.log_r + dec.log_s)  # broadcasts when cs == 1
    m = valid.sum() * image.channels
    if m == 0:
        gr, gs = _zeros_like_dec(dec)
        return LossResult(0.0, gr, gs, {})
    res = np.where(v3, image.data - recon, 0.0)
    value = float((res * res).sum()) / m
    g = (-2.0 / m) * res * recon
    grad_r = g
    grad_s = g.sum(axis=2, keepdims=True) if cs == 1 else g
    return LossResult(value, grad_r, grad_s.copy(), {})


# ---------------------------------------------------------------------------
# SAW smooth/non-smooth supervision

def shadow_boundary_regions(saw: SawAnnotationSet, dims,
                            radius: float = 5.0) -> list:
    """Dilate the shadow points and split the result into 4-connected
    regions (lists of row-major pixel indices)."""
    if not saw.shadow_points:
        return []
    mask = dilate_points(saw.shadow_points, radius, dims)
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    lab, n = ndimage.label(mask, structure=structure)
    flat = lab.ravel()
    return [np.flatnonzero(flat == c) for c in range(1, n + 1)]


def smoothness_participation_mask(base_mask: np.ndarray,
                                  saw: SawAnnotationSet,
                                  radius: float = 5.0) -> np.ndarray:
    """Pixels taking part in the dense shading smoothness term: the valid
    pixels minus the dilated depth/normal discontinuity regions."""
    out = base_mask.copy()
    if saw is not None and saw.discontinuity_points:
        out &= ~dilate_points(saw.discontinuity_points, radius, base_mask.shape)
    return out


def saw_sns_loss(dec: Decomposition, image: LinearImage,
                 saw: SawAnnotationSet, radius: float = 5.0) -> LossResult:
    """Sum of constant-shading variance losses over the smooth regions and
    shadow-boundary variance losses over the dilated shadow regions
    (equally weighted)."""
    grad_r, grad_s = _zeros_like_dec(dec)
    value = 0.0
    log_i = log_intensity(image)
    for region in saw.smooth_regions:
        part = constant_shading_loss(dec, region)
        value += part.value
        grad_s += part.grad_log_s
    for region in shadow_boundary_regions(saw, dec.shape, radius):
        part = shadow_boundary_loss(dec, log_i, region)
        value += part.value
        grad_s += part.grad_log_s
    return LossResult(value, grad_r, grad_s, {})


# ---------------------------------------------------------------------------
# composites

def _accumulate(total: LossResult, weight: float, part: LossResult,
                name: str) -> None:
    total.value += weight * part.value
    total.grad_log_r += weight * part.grad_log_r
    total.grad_log_s += weight * part.grad_log_s
    total.aux.setdefault("terms", {})[name] = part.value


def composite_cgi(dec: Decomposition, gt_r: LinearImage, gt_s: LinearImage,
                  image: LinearImage, judgments,
                  weights: LossWeights = None) -> LossResult:
    """Fully supervised objective: siMSE + multi-scale gradient matching,
    plus weighted ordinal and reconstruction terms.

    The gradient differentiates through the least-squares scales: the siMSE
    part needs no correction (the scales are optimal), while the gradient
    matching part picks up d_value/d_c times the scale sensitivities.
    """
    if weights is None:
        weights = LossWeights()
    gr, gs = _zeros_like_dec(dec)
    total = LossResult(0.0, gr, gs, {})

    mse = si_mse(dec, gt_r, gt_s)
    _accumulate(total, 1.0, mse, "si_mse")
    gm = grad_match(dec, gt_r, gt_s, mse.aux["c_r"], mse.aux["c_s"],
                    weights.pyramid_levels)
    _accumulate(total, 1.0, gm, "grad_match")

    # coupling of the L1 term through c(pred): dc/dlog_pred =
    # pred * (gt - 2 c pred) / sum(pred^2) at valid samples
    valid = (dec.mask & gt_r.mask & gt_s.mask)[:, :, None]
    for key, log_pred, gt, out in (("r", dec.log_r, gt_r.data, total.grad_log_r),
                                   ("s", dec.log_s, gt_s.data, total.grad_log_s)):
        pred = np.exp(log_pred)
        c = mse.aux[f"c_{key}"]
        dc = np.where(valid, pred * (gt - 2.0 * c * pred), 0.0)
        dc /= mse.aux[f"sum_sq_{key}"]
        out += gm.aux[f"d_value_d_c_{key}"] * dc

    if judgments is not None:
        _accumulate(total, weights.lambda_ord,
                    ordinal_loss(dec, judgments, weights.margin), "ordinal")
    _accumulate(total, weights.lambda_rec, reconstruction_loss(dec, image),
                "reconstruction")
    total.aux["c_r"] = mse.aux["c_r"]
    total.aux["c_s"] = mse.aux["c_s"]
    return total


def composite_iiw(dec: Decomposition, image: LinearImage, judgments,
                  op: BilateralOperator,
                  weights: LossWeights = None) -> LossResult:
    """Sparse-ordinal objective: weighted ordinal + smoothness terms plus
    an unweighted reconstruction term."""
    if weights is None:
        weights = LossWeights()
    gr, gs = _zeros_like_dec(dec)
    total = LossResult(0.0, gr, gs, {})
    _accumulate(total, weights.lambda_ord,
                ordinal_loss(dec, judgments, weights.margin), "ordinal")
    _accumulate(total, weights.lambda_rs,
                reflectance_smoothness(dec, image, weights.pyramid_levels),
                "reflectance_smoothness")
    _accumulate(total, weights.lambda_ss, shading_smoothness(dec, op),
                "shading_smoothness")
    _accumulate(total, 1.0, reconstruction_loss(dec, image), "reconstruction")
    return total


def composite_saw(dec: Decomposition, image: LinearImage,
                  saw: SawAnnotationSet, op: BilateralOperator,
                  weights: LossWeights = None,
                  radius: float = 5.0) -> LossResult:
    """Shading-annotation objective: weighted smooth/non-smooth variance
    terms + smoothness terms plus an unweighted reconstruction term.

    The operator should exclude the dilated discontinuity regions; see
    smoothness_participation_mask.
    """
    if weights is None:
        weights = LossWeights()
    gr, gs = _zeros_like_dec(dec)
    total = LossResult(0.0, gr, gs, {})
    _accumulate(total, weights.lambda_sns,
                saw_sns_loss(dec, image, saw, radius), "saw_sns")
    _accumulate(total, weights.lambda_rs,
                reflectance_smoothness(dec, image, weights.pyramid_levels),
                "reflectance_smoothness")
    _accumulate(total, weights.lambda_ss, shading_smoothness(dec, op),
                "shading_smoothness")
    _accumulate(total, 1.0, reconstruction_loss(dec, image), "reconstruction")
    return total

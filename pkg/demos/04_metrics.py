"""Evaluation metrics on synthetic annotations.

Shows the weighted human disagreement rate on ordinal judgments, the
smooth/non-smooth shading precision-recall sweep (plain and
gradient-weighted), and the MSE / LMSE / DSSIM image metrics.
"""

import numpy as np

from intrinsics import LinearImage, mit_metrics, saw_pr, whdr
from intrinsics.annotations import (
    OrdinalJudgment,
    OrdinalJudgmentSet,
    SawAnnotationSet,
    augment_judgments,
)
from intrinsics.synth import mondrian_scene

rng = np.random.default_rng(0)

# --- ordinal judgments and augmentation
js = OrdinalJudgmentSet("demo", [
    OrdinalJudgment((2, 2), (12, 3), -1, 1.0),   # first point darker
    OrdinalJudgment((12, 3), (20, 8), -1, 0.8),
    OrdinalJudgment((5, 9), (2, 2), 0, 0.5),     # equal reflectance
])
aug = augment_judgments(js)
print(f"{len(js)} judgments -> {len(aug)} after symmetry/transitivity")

log_r = np.log(rng.uniform(0.1, 1.0, size=(16, 24, 3)))
print(f"WHDR of a random reflectance: {whdr(log_r, aug):.3f}")

# --- smooth/non-smooth shading detection
img, _, _ = mondrian_scene(24, 24, seed=5)
log_s = np.zeros((24, 24, 1))
log_s[:, 12:] = 1.0  # one strong shading edge
saw = SawAnnotationSet(
    smooth_regions=[list(range(0, 6)) + list(range(24, 30))],
    shadow_points=[(11, 12)],
    discontinuity_points=[],
)
for challenge in (False, True):
    curve = saw_pr(log_s, img, saw, challenge=challenge, radius=2.0)
    tag = "challenge" if challenge else "unweighted"
    print(f"SAW {tag:10s} AP = {curve.ap:.4f} "
          f"({len(curve.thresholds)} thresholds)")

# --- MIT-style metrics
gt_r = LinearImage(rng.uniform(0.1, 1, (32, 32, 3)))
gt_s = LinearImage(rng.uniform(0.1, 1, (32, 32, 1)))
pred_r = LinearImage(np.abs(gt_r.data + 0.05 * rng.standard_normal(gt_r.data.shape)))
pred_s = LinearImage(2.0 * gt_s.data)  # pure rescale: metrics forgive it
m = mit_metrics(pred_r, pred_s, gt_r, gt_s)
print(f"MSE r/s   = {m.mse_r:.5f} / {m.mse_s:.5f}")
print(f"LMSE r/s  = {m.lmse_r:.5f} / {m.lmse_s:.5f}")
print(f"DSSIM r/s = {m.dssim_r:.5f} / {m.dssim_s:.5f}")

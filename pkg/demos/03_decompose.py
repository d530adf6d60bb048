"""Variational decomposition of a synthetic scene, end to end.

Solves for log reflectance / log shading by gradient descent with Armijo
backtracking, then evaluates the recovered reflectance against the
generating one: scale-invariant MSE and the weighted disagreement rate on
ordinal pairs sampled from the true reflectance.
"""

import time
from pathlib import Path

import numpy as np

from intrinsics import (
    Decomposition,
    LinearImage,
    LossWeights,
    SolveConfig,
    decompose,
    make_ground_truth,
    si_mse,
    whdr,
    write_png,
)
from intrinsics.annotations import sample_cgi_ordinals, slic_superpixels
from intrinsics.synth import mondrian_scene

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

img, refl, shading = mondrian_scene(64, 64, seed=11)
gt = make_ground_truth(img, refl)
gt_s1 = LinearImage(gt.shading.data.mean(axis=2, keepdims=True), gt.mask)

cfg = SolveConfig(weights=LossWeights(lambda_rs=0.002, lambda_ss=5.0),
                  max_iters=8000, sigma_p=2.0, rel_tol=1e-14)
t0 = time.time()
dec, report = decompose(img, cfg)
print(f"solved in {time.time() - t0:.1f}s, {report.iterations} iterations")
print(f"objective {report.trajectory[0]:.4f} -> {report.objective:.6f} "
      f"(monotone: {all(b <= a for a, b in zip(report.trajectory, report.trajectory[1:]))})")

solved_r = si_mse(dec, gt.reflectance, gt_s1).aux["value_r"]
baseline = Decomposition(np.log(np.maximum(img.data, 1e-6)),
                         np.zeros((64, 64, 1)), img.mask)
trivial_r = si_mse(baseline, gt.reflectance, gt_s1).aux["value_r"]
print(f"reflectance si-MSE: solved {solved_r:.5f} vs R=I baseline {trivial_r:.5f}")

labels = slic_superpixels(img, 36, compactness=0.1)
pairs = sample_cgi_ordinals(gt.reflectance, labels, seed=5)
print(f"ordinal disagreement on {len(pairs)} pairs: "
      f"solved {whdr(dec.log_r, pairs):.3f} vs baseline "
      f"{whdr(baseline.log_r, pairs):.3f}")

write_png(LinearImage(np.clip(img.data, 0, 1)), out_dir / "scene.png")
write_png(dec.reflectance(), out_dir / "reflectance.png")
write_png(dec.shading(), out_dir / "shading.png")
print(f"wrote scene/reflectance/shading PNGs under {out_dir}")

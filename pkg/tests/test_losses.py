import numpy as np
import pytest

from intrinsics.annotations import OrdinalJudgment, OrdinalJudgmentSet, SawAnnotationSet
from intrinsics.bilateral import build_operator
from intrinsics.image import Decomposition, LinearImage
from intrinsics.losses import (
    LossWeights,
    composite_cgi,
    composite_iiw,
    composite_saw,
    constant_shading_loss,
    grad_match,
    log_intensity,
    ordinal_loss,
    reconstruction_loss,
    reflectance_smoothness,
    saw_sns_loss,
    shading_smoothness,
    shadow_boundary_loss,
    si_mse,
    smoothness_participation_mask,
)
from tests.conftest import fd_relative_errors, random_decomposition, random_image

FD_TOL = 1e-4


def make_gt_pair(rng, dec, noise=0.0):
    """Ground truth near exp(dec) with optional perturbation."""
    r = np.exp(dec.log_r) + noise * rng.standard_normal(dec.log_r.shape)
    s = np.exp(dec.log_s) + noise * rng.standard_normal(dec.log_s.shape)
    return (LinearImage(np.abs(r) + 0.05, dec.mask),
            LinearImage(np.abs(s) + 0.05, dec.mask))


# ---------------------------------------------------------------------------
# oracles

def brute_force_si_mse(dec, gt_r, gt_s):
    """Grid search the scale over [1e-3, 1e3], refined below 1e-6."""
    valid = (dec.mask & gt_r.mask & gt_s.mask)[:, :, None]

    def best_scale(gt, pred):
        def sse(c):
            return float((((gt - c * pred) ** 2) * valid).sum())

        grid = np.logspace(-3, 3, 1201)
        c = min(grid, key=sse)
        step = c * (10 ** (6 / 1200.0) - 1)
        while step > 1e-7:
            cands = [c - step, c, c + step]
            c = min(cands, key=sse)
            step /= 2
        return c, sse(c)

    total = 0.0
    for log_pred, gt in ((dec.log_r, gt_r.data), (dec.log_s, gt_s.data)):
        pred = np.exp(log_pred)
        _, sse = best_scale(gt, pred)
        total += sse / (valid.sum() * pred.shape[2] / pred.shape[2]
                        * pred.shape[2])
    return total


def grad_match_oracle(dec, gt_r, gt_s, c_r, c_s, levels):
    """Loop-based direct evaluation of the multi-scale L1 gradient term."""
    valid = dec.mask & gt_r.mask & gt_s.mask

    def downsample(arr, mask):
        h2, w2 = mask.shape[0] // 2, mask.shape[1] // 2
        out = np.zeros((h2, w2, arr.shape[2]))
        om = np.zeros((h2, w2), dtype=bool)
        for y in range(h2):
            for x in range(w2):
                acc, n = 0.0, 0
                for dy in range(2):
                    for dx in range(2):
                        if mask[2 * y + dy, 2 * x + dx]:
                            acc += arr[2 * y + dy, 2 * x + dx]
                            n += 1
                if n:
                    out[y, x] = acc / n
                    om[y, x] = True
        return out, om

    def l1_grad_mismatch(pred, gt, mask, c):
        h, w, ch = pred.shape
        total = 0.0
        for y in range(h):
            for x in range(w):
                if x + 1 < w and mask[y, x] and mask[y, x + 1]:
                    d = (gt[y, x + 1] - gt[y, x]) - c * (pred[y, x + 1] - pred[y, x])
                    total += np.abs(d).sum()
                if y + 1 < h and mask[y, x] and mask[y + 1, x]:
                    d = (gt[y + 1, x] - gt[y, x]) - c * (pred[y + 1, x] - pred[y, x])
                    total += np.abs(d).sum()
        return total

    value = 0.0
    for log_pred, gt, c in ((dec.log_r, gt_r.data, c_r),
                            (dec.log_s, gt_s.data, c_s)):
        pred, g, m = np.exp(log_pred), gt, valid
        pyr = [(pred, g, m)]
        while len(pyr) < levels and min(m.shape[:2]) >= 4:
            pred, pm = downsample(pred, m)
            g, _ = downsample(g, m)
            m = pm
            pyr.append((pred, g, m))
        for pred_l, gt_l, m_l in pyr:
            n = m_l.sum()
            if n:
                value += l1_grad_mismatch(pred_l, gt_l, m_l, c) / n
    return value


# ---------------------------------------------------------------------------

class TestSiMse:
    def test_perfect_prediction(self, rng):
        dec = random_decomposition(rng)
        gt_r = LinearImage(np.exp(dec.log_r), dec.mask)
        gt_s = LinearImage(np.exp(dec.log_s), dec.mask)
        res = si_mse(dec, gt_r, gt_s)
        assert res.aux["c_r"] == pytest.approx(1.0)
        assert res.aux["c_s"] == pytest.approx(1.0)
        assert res.value == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(res.grad_log_r, 0.0, atol=1e-12)

    def test_doubled_prediction_scale_absorbed(self, rng):
        dec = random_decomposition(rng)
        gt_r = LinearImage(np.exp(dec.log_r), dec.mask)
        gt_s = LinearImage(np.exp(dec.log_s), dec.mask)
        dec2 = Decomposition(dec.log_r + np.log(2.0), dec.log_s, dec.mask)
        res = si_mse(dec2, gt_r, gt_s)
        assert res.aux["c_r"] == pytest.approx(0.5)
        assert res.aux["value_r"] == pytest.approx(0.0, abs=1e-15)

    def test_matches_brute_force_scale_search(self, rng):
        dec = random_decomposition(rng, 4, 4, invalid=0.0)
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.3)
        res = si_mse(dec, gt_r, gt_s)
        oracle = brute_force_si_mse(dec, gt_r, gt_s)
        assert res.value == pytest.approx(oracle, rel=1e-6)

    def test_scale_invariance(self, rng):
        dec = random_decomposition(rng)
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.2)
        base = si_mse(dec, gt_r, gt_s).value
        for c in (0.1, 1.0, 7.3):
            scaled = Decomposition(dec.log_r + np.log(c),
                                   dec.log_s + np.log(c), dec.mask)
            assert si_mse(scaled, gt_r, gt_s).value == pytest.approx(
                base, abs=1e-10, rel=1e-10)

    def test_degenerate_prediction(self, rng):
        dec = random_decomposition(rng, invalid=0.0)
        dec.log_r[:] = -800.0  # exp underflows to 0
        gt_r, gt_s = make_gt_pair(rng, dec)
        with pytest.raises(ValueError, match="degenerate prediction"):
            si_mse(dec, gt_r, gt_s)

    def test_gradient_fd(self, rng):
        dec = random_decomposition(rng, 8, 8)
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.3)
        errs = fd_relative_errors(lambda d: si_mse(d, gt_r, gt_s), dec, rng)
        assert max(errs) < FD_TOL


class TestGradMatch:
    def test_perfect_prediction(self, rng):
        dec = random_decomposition(rng)
        gt_r = LinearImage(np.exp(dec.log_r), dec.mask)
        gt_s = LinearImage(np.exp(dec.log_s), dec.mask)
        res = grad_match(dec, gt_r, gt_s, 1.0, 1.0, 4)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_single_level_plain_l1(self, rng):
        dec = random_decomposition(rng, 6, 6, invalid=0.0)
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.2)
        res = grad_match(dec, gt_r, gt_s, 0.9, 1.1, 1)
        oracle = grad_match_oracle(dec, gt_r, gt_s, 0.9, 1.1, 1)
        assert res.value == pytest.approx(oracle, rel=1e-12)

    def test_constant_offset_oracle(self, rng):
        dec = random_decomposition(rng, 8, 8, invalid=0.05)
        gt_r = LinearImage(np.exp(dec.log_r) + 0.3, dec.mask)
        gt_s = LinearImage(np.exp(dec.log_s) + 0.3, dec.mask)
        mse = si_mse(dec, gt_r, gt_s)
        c_r, c_s = mse.aux["c_r"], mse.aux["c_s"]
        res = grad_match(dec, gt_r, gt_s, c_r, c_s, 3)
        oracle = grad_match_oracle(dec, gt_r, gt_s, c_r, c_s, 3)
        assert res.value == pytest.approx(oracle, rel=1e-12)

    def test_gradient_fd_fixed_scales(self, rng):
        dec = random_decomposition(rng, 8, 8)
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.3)
        errs = fd_relative_errors(
            lambda d: grad_match(d, gt_r, gt_s, 0.8, 1.2, 3), dec, rng)
        assert max(errs) < FD_TOL


class TestOrdinal:
    def _dec_with(self, vals):
        log_r = np.log(np.asarray(vals))[None, :, None]
        return Decomposition(log_r, np.zeros((1, len(vals), 1)),
                             np.ones((1, len(vals)), dtype=bool))

    def test_satisfied_hinge_is_free(self):
        m = 0.12
        dec = self._dec_with([np.exp(m + 0.1), 1.0])
        js = [OrdinalJudgment((0, 0), (1, 0), +1, 1.0)]  # j darker
        res = ordinal_loss(dec, js, m)
        assert res.value == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(res.grad_log_r, 0.0)

    def test_equal_values_equal_relation(self):
        dec = self._dec_with([0.5, 0.5])
        res = ordinal_loss(dec, [OrdinalJudgment((0, 0), (1, 0), 0, 2.0)], 0.12)
        assert res.value == pytest.approx(0.0, abs=1e-15)

    def test_violated_hinge_value(self):
        # equal brightness but "j darker" with weight 2, margin 0.12:
        # contribution w * m^2 = 2 * 0.0144 = 0.0288
        dec = self._dec_with([0.5, 0.5])
        res = ordinal_loss(dec, [OrdinalJudgment((0, 0), (1, 0), +1, 2.0)], 0.12)
        assert res.value == pytest.approx(0.0288)

    def test_out_of_bounds_and_invalid_skipped(self, rng):
        dec = random_decomposition(rng, 4, 4, invalid=0.0)
        dec.mask[1, 1] = False
        js = [
            OrdinalJudgment((9, 9), (0, 0), +1, 1.0),
            OrdinalJudgment((1, 1), (0, 0), +1, 1.0),
        ]
        res = ordinal_loss(dec, js, 0.12)
        assert res.value == 0.0

    def test_gradient_fd(self, rng):
        dec = random_decomposition(rng, 8, 8, invalid=0.0)
        js = OrdinalJudgmentSet("x", [
            OrdinalJudgment(
                (int(rng.integers(8)), int(rng.integers(8))),
                (int(rng.integers(8)), int(rng.integers(8))),
                int(rng.integers(-1, 2)), float(rng.uniform(0.2, 1.0)))
            for _ in range(12)
        ])
        errs = fd_relative_errors(lambda d: ordinal_loss(d, js, 0.12), dec, rng)
        assert max(errs) < FD_TOL


class TestVarianceLosses:
    def _dec_log_s(self, vals):
        log_s = np.asarray(vals, dtype=float)[None, :, None]
        n = len(vals)
        return Decomposition(np.zeros((1, n, 3)), log_s,
                             np.ones((1, n), dtype=bool))

    def test_constant_shading_zero(self):
        dec = self._dec_log_s([0.7, 0.7, 0.7])
        res = constant_shading_loss(dec, [0, 1, 2])
        assert res.value == 0.0
        assert np.allclose(res.grad_log_s, 0.0)

    def test_two_pixel_variance(self):
        dec = self._dec_log_s([0.0, 2.0])
        res = constant_shading_loss(dec, [0, 1])
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_singleton_region(self):
        dec = self._dec_log_s([1.3])
        assert constant_shading_loss(dec, [0]).value == 0.0

    def test_shadow_proportional_shading(self, rng):
        img = random_image(rng, 1, 5, channels=1, invalid=0.0, lo=0.2)
        log_s = np.log(3.7 * img.data[:, :, 0])[:, :, None]
        dec = Decomposition(np.zeros((1, 5, 3)), log_s,
                            np.ones((1, 5), dtype=bool))
        res = shadow_boundary_loss(dec, log_intensity(img), range(5))
        assert res.value == pytest.approx(0.0, abs=1e-20)

    def test_shadow_two_identical_diffs(self):
        img = LinearImage(np.ones((1, 2, 1)))
        dec = self._dec_log_s([0.3, 0.3])
        res = shadow_boundary_loss(dec, log_intensity(img), [0, 1])
        assert res.value == pytest.approx(0.0, abs=1e-20)

    def test_shadow_variance_quarter(self):
        img = LinearImage(np.ones((1, 2, 1)))
        dec = self._dec_log_s([0.0, 1.0])
        res = shadow_boundary_loss(dec, log_intensity(img), [0, 1])
        assert res.value == pytest.approx(0.25, abs=1e-12)

    def test_hand_computed_population_variance(self, rng):
        for n in (2, 3, 5):
            vals = rng.uniform(-1, 1, size=n)
            dec = self._dec_log_s(vals)
            res = constant_shading_loss(dec, range(n))
            expect = float(np.mean(vals**2) - np.mean(vals) ** 2)
            assert res.value == pytest.approx(expect, abs=1e-12)

    def test_gradient_fd(self, rng):
        dec = random_decomposition(rng, 6, 6, invalid=0.0)
        region = list(rng.choice(36, size=9, replace=False))
        errs = fd_relative_errors(
            lambda d: constant_shading_loss(d, region), dec, rng)
        assert max(errs) < FD_TOL
        img = random_image(rng, 6, 6, invalid=0.0)
        li = log_intensity(img)
        errs = fd_relative_errors(
            lambda d: shadow_boundary_loss(d, li, region), dec, rng)
        assert max(errs) < FD_TOL


class TestReflectanceSmoothness:
    def test_constant_reflectance_zero(self, rng):
        img = random_image(rng, 8, 8, invalid=0.0)
        dec = Decomposition(np.full((8, 8, 3), -0.4), np.zeros((8, 8, 1)),
                            np.ones((8, 8), dtype=bool))
        res = reflectance_smoothness(dec, img)
        assert res.value == 0.0
        assert np.allclose(res.grad_log_r, 0.0)

    def test_two_pixel_unit_difference(self):
        # 1x2 grid, near-identical features via huge sigmas; both ordered
        # visits count: value = 2 * (1/(2*1)) * 1 = 1.0
        img = LinearImage(np.ones((1, 2, 3)))
        dec = Decomposition(
            np.stack([np.zeros((1, 2)), np.zeros((1, 2)), np.zeros((1, 2))],
                     axis=2),
            np.zeros((1, 2, 1)), np.ones((1, 2), dtype=bool))
        dec.log_r[0, 1, :] = [1.0, 0.0, 0.0]
        res = reflectance_smoothness(dec, img, levels=1, sigma_xy=1e9,
                                     sigma_int=1e9, sigma_chroma=1e9)
        assert res.value == pytest.approx(1.0, rel=1e-12)

    def test_distant_features_decouple(self):
        img = LinearImage(np.ones((1, 2, 3)))
        img.data[0, 1] = [50.0, 0.0, 0.0]  # wildly different chroma/intensity
        dec = Decomposition(np.zeros((1, 2, 3)), np.zeros((1, 2, 1)),
                            np.ones((1, 2), dtype=bool))
        dec.log_r[0, 1] = 1.0
        res = reflectance_smoothness(dec, img, levels=1)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_gradient_fd(self, rng):
        dec = random_decomposition(rng, 8, 8)
        img = random_image(rng, 8, 8)
        errs = fd_relative_errors(
            lambda d: reflectance_smoothness(d, img, levels=3), dec, rng)
        assert max(errs) < FD_TOL


class TestShadingSmoothness:
    def test_single_pixel_zero(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[1, 2] = True
        op = build_operator((4, 4), mask, 2.0)
        dec = Decomposition(np.zeros((4, 4, 3)),
                            np.full((4, 4, 1), 1.7), mask)
        res = shading_smoothness(dec, op)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_constant_bounded_by_residual(self):
        op = build_operator((16, 16), None, 4.0, sinkhorn_iters=20)
        dec = Decomposition(np.zeros((16, 16, 3)), np.full((16, 16, 1), 0.5),
                            np.ones((16, 16), dtype=bool))
        res = shading_smoothness(dec, op)
        assert abs(res.value) <= 1e-3

    def test_against_dense_oracle(self):
        from intrinsics.bilateral import brute_force_quadratic

        r = np.random.default_rng(21)
        mask = np.ones((16, 16), dtype=bool)
        log_s = r.standard_normal((16, 16, 1))
        dec = Decomposition(np.zeros((16, 16, 3)), log_s, mask)
        op = build_operator((16, 16), mask, 4.0)
        res = shading_smoothness(dec, op)
        oracle = brute_force_quadratic((16, 16), mask, 4.0, log_s[:, :, 0])
        assert res.value == pytest.approx(oracle, rel=0.02)

    def test_gradient_fd(self, rng):
        dec = random_decomposition(rng, 10, 10)
        op = build_operator((10, 10), dec.mask, 3.0)
        errs = fd_relative_errors(lambda d: shading_smoothness(d, op), dec, rng)
        assert max(errs) < FD_TOL

    def test_gradient_fd_multichannel_shading(self, rng):
        dec = random_decomposition(rng, 8, 8, cs=3)
        op = build_operator((8, 8), dec.mask, 2.0)
        errs = fd_relative_errors(lambda d: shading_smoothness(d, op), dec, rng)
        assert max(errs) < FD_TOL


class TestReconstruction:
    def test_exact_decomposition(self, rng):
        dec = random_decomposition(rng)
        img = LinearImage(np.exp(dec.log_r) * np.exp(dec.log_s), dec.mask)
        res = reconstruction_loss(dec, img)
        assert res.value == pytest.approx(0.0, abs=1e-20)

    def test_constant_residual(self, rng):
        dec = random_decomposition(rng, 6, 6, cr=1, cs=1, invalid=0.0)
        rs = np.exp(dec.log_r + dec.log_s)
        img = LinearImage(np.maximum(rs - 0.1, 0.0) + (rs - 0.1).clip(min=0) * 0,
                          dec.mask)
        # keep exactly I = RS - 0.1 (positive by construction of the ranges)
        assert np.all(rs - 0.1 > 0)
        img = LinearImage(rs - 0.1, dec.mask)
        res = reconstruction_loss(dec, img)
        assert res.value == pytest.approx(0.01, rel=1e-12)

    def test_gradient_fd(self, rng):
        dec = random_decomposition(rng, 9, 9)
        img = random_image(rng, 9, 9)
        errs = fd_relative_errors(lambda d: reconstruction_loss(d, img),
                                  dec, rng)
        assert max(errs) < FD_TOL


class TestComposites:
    def _setup(self, rng, h=10, w=10):
        dec = random_decomposition(rng, h, w)
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.25)
        img = LinearImage(gt_r.data * gt_s.data, dec.mask)
        js = OrdinalJudgmentSet("x", [
            OrdinalJudgment(
                (int(rng.integers(w)), int(rng.integers(h))),
                (int(rng.integers(w)), int(rng.integers(h))),
                int(rng.integers(-1, 2)), 1.0)
            for _ in range(10)
        ])
        saw = SawAnnotationSet(
            smooth_regions=[sorted(rng.choice(h * w, 8, replace=False).tolist()),
                            sorted(rng.choice(h * w, 6, replace=False).tolist())],
            shadow_points=[(3, 3), (6, 2)],
            discontinuity_points=[(1, 7)],
        )
        return dec, gt_r, gt_s, img, js, saw

    def test_zero_weights_reduce_to_reconstruction(self, rng):
        dec, gt_r, gt_s, img, js, saw = self._setup(rng)
        w = LossWeights(lambda_ord=0.0, lambda_rec=1.0)
        img_exact = LinearImage(np.exp(dec.log_r + dec.log_s), dec.mask)
        total = composite_cgi(dec, LinearImage(np.exp(dec.log_r), dec.mask),
                              LinearImage(np.exp(dec.log_s), dec.mask),
                              img_exact, js, w)
        assert total.value == pytest.approx(0.0, abs=1e-12)

    def test_composite_equals_sum_of_parts(self, rng):
        dec, gt_r, gt_s, img, js, saw = self._setup(rng)
        w = LossWeights()
        total = composite_cgi(dec, gt_r, gt_s, img, js, w)
        mse = si_mse(dec, gt_r, gt_s)
        parts = (
            mse.value
            + grad_match(dec, gt_r, gt_s, mse.aux["c_r"], mse.aux["c_s"],
                         w.pyramid_levels).value
            + w.lambda_ord * ordinal_loss(dec, js, w.margin).value
            + w.lambda_rec * reconstruction_loss(dec, img).value
        )
        assert total.value == pytest.approx(parts, rel=1e-12)

    def test_composite_cgi_gradient_fd(self, rng):
        dec, gt_r, gt_s, img, js, saw = self._setup(rng)
        errs = fd_relative_errors(
            lambda d: composite_cgi(d, gt_r, gt_s, img, js), dec, rng)
        assert max(errs) < FD_TOL

    def test_composite_iiw_gradient_fd(self, rng):
        dec, gt_r, gt_s, img, js, saw = self._setup(rng)
        op = build_operator((10, 10), dec.mask & img.mask, 3.0)
        errs = fd_relative_errors(
            lambda d: composite_iiw(d, img, js, op), dec, rng)
        assert max(errs) < FD_TOL

    def test_composite_saw_gradient_fd(self, rng):
        dec, gt_r, gt_s, img, js, saw = self._setup(rng)
        pmask = smoothness_participation_mask(dec.mask & img.mask, saw)
        op = build_operator((10, 10), pmask, 3.0)
        errs = fd_relative_errors(
            lambda d: composite_saw(d, img, saw, op), dec, rng)
        assert max(errs) < FD_TOL

    def test_saw_discontinuity_masks_smoothness(self, rng):
        dec, gt_r, gt_s, img, js, saw = self._setup(rng)
        pmask = smoothness_participation_mask(dec.mask, saw)
        from intrinsics.annotations import dilate_points

        disc = dilate_points(saw.discontinuity_points, 5.0, dec.shape)
        assert not (pmask & disc).any()
        assert (pmask | disc | ~dec.mask).all()


class TestInvalidPixelInvariance:
    def test_losses_ignore_invalid_pixels(self, rng):
        dec, = [random_decomposition(rng, 10, 10, invalid=0.25)]
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.2)
        img = LinearImage(gt_r.data * gt_s.data, dec.mask)
        js = OrdinalJudgmentSet("x", [
            OrdinalJudgment((1, 1), (8, 8), -1, 1.0),
            OrdinalJudgment((2, 5), (5, 2), 0, 0.5),
        ])
        saw = SawAnnotationSet(
            smooth_regions=[list(range(10)), list(range(40, 55))],
            shadow_points=[(4, 4)], discontinuity_points=[(8, 2)])
        op = build_operator((10, 10), dec.mask, 3.0)
        mse0 = si_mse(dec, gt_r, gt_s)

        def snapshot(d):
            return [
                si_mse(d, gt_r, gt_s).value,
                grad_match(d, gt_r, gt_s, mse0.aux["c_r"], mse0.aux["c_s"], 3).value,
                ordinal_loss(d, js, 0.12).value,
                constant_shading_loss(d, range(12)).value,
                shadow_boundary_loss(d, log_intensity(img), range(12)).value,
                reflectance_smoothness(d, img, 3).value,
                shading_smoothness(d, op).value,
                reconstruction_loss(d, img).value,
                saw_sns_loss(d, img, saw).value,
            ]

        before = snapshot(dec)
        mutated = Decomposition(dec.log_r.copy(), dec.log_s.copy(), dec.mask)
        mutated.log_r[~dec.mask] = 37.0
        mutated.log_s[~dec.mask] = -11.0
        after = snapshot(mutated)
        assert before == after

    def test_gradients_vanish_at_invalid_pixels(self, rng):
        dec = random_decomposition(rng, 10, 10, invalid=0.3)
        gt_r, gt_s = make_gt_pair(rng, dec, noise=0.2)
        img = LinearImage(gt_r.data * gt_s.data, dec.mask)
        op = build_operator((10, 10), dec.mask, 3.0)
        results = [
            si_mse(dec, gt_r, gt_s),
            grad_match(dec, gt_r, gt_s, 1.0, 1.0, 3),
            reflectance_smoothness(dec, img, 3),
            shading_smoothness(dec, op),
            reconstruction_loss(dec, img),
        ]
        inv = ~dec.mask
        for res in results:
            assert np.all(res.grad_log_r[inv] == 0.0)
            assert np.all(res.grad_log_s[inv] == 0.0)


class TestLossWeights:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(lambda_ord=-0.1)

    def test_pyramid_levels_validated(self):
        with pytest.raises(ValueError):
            LossWeights(pyramid_levels=0)

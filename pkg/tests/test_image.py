import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intrinsics.image import (
    Decomposition,
    LinearImage,
    LogImage,
    box_upsample_adjoint,
    build_pyramid,
    chromaticity,
    gradient_adjoint,
    gradients,
    intensity,
)


class TestPyramid:
    def test_constant_image_three_levels(self):
        img = LinearImage(np.full((8, 8, 1), 3.0))
        pyr = build_pyramid(img, 3)
        assert len(pyr) == 3
        for lv in pyr.levels:
            assert np.all(lv.data == 3.0)
            assert lv.mask.all()
        assert pyr.levels[1].data.shape == (4, 4, 1)
        assert pyr.levels[2].data.shape == (2, 2, 1)

    def test_stops_when_too_small(self):
        img = LinearImage(np.ones((4, 4, 1)))
        pyr = build_pyramid(img, 8)
        assert len(pyr) == 2  # a further level would be 1x1 < 4

    def test_checkerboard_average(self):
        yy, xx = np.mgrid[:6, :6]
        img = LinearImage(((yy + xx) % 2).astype(float)[:, :, None])
        pyr = build_pyramid(img, 2)
        assert np.all(pyr.levels[1].data == 0.5)
        assert pyr.levels[1].data.shape == (3, 3, 1)

    def test_level_one_is_input(self, rng):
        data = rng.uniform(size=(9, 7, 3))
        img = LinearImage(data)
        pyr = build_pyramid(img, 4)
        assert pyr.levels[0] is img
        assert pyr.levels[1].data.shape == (4, 3, 3)

    def test_valid_pixel_only_average(self):
        data = np.ones((4, 4, 1))
        data[:2, :2, 0] = [[1.0, 5.0], [3.0, 7.0]]
        mask = np.ones((4, 4), dtype=bool)
        mask[0, 1] = mask[1, 1] = False
        pyr = build_pyramid(LinearImage(data, mask), 2)
        # only valid sources (1 and 3) take part
        assert pyr.levels[1].data[0, 0, 0] == 2.0
        assert pyr.levels[1].mask[0, 0]

    def test_all_invalid_block_stays_invalid(self):
        data = np.ones((4, 4, 1))
        mask = np.ones((4, 4), dtype=bool)
        mask[:2, :2] = False
        pyr = build_pyramid(LinearImage(data, mask), 2)
        assert not pyr.levels[1].mask[0, 0]
        assert pyr.levels[1].mask[0, 1]

    def test_empty_image_rejected(self):
        with pytest.raises(ValueError, match="empty input"):
            build_pyramid(LinearImage(np.zeros((0, 4, 1))), 2)

    def test_log_image_pyramid(self):
        img = LogImage(np.zeros((6, 6, 1)))
        pyr = build_pyramid(img, 2)
        assert isinstance(pyr.levels[1], LogImage)


class TestGradients:
    def test_constant_zero(self):
        g = gradients(LinearImage(np.full((5, 5, 1), 2.0)))
        assert np.all(g.dx == 0) and np.all(g.dy == 0)

    def test_horizontal_ramp(self):
        xx = np.tile(np.arange(6.0), (4, 1))
        g = gradients(LinearImage(xx[:, :, None]))
        assert np.all(g.dx[:, :-1] == 1.0)
        assert np.all(g.dx[:, -1] == 0.0)
        assert np.all(g.dy == 0.0)

    def test_one_invalid_pixel_invalidates_four_samples(self):
        mask = np.ones((5, 5), dtype=bool)
        mask[2, 2] = False
        g = gradients(LinearImage(np.ones((5, 5, 1)), mask))
        bad_dx = np.argwhere(~g.valid_dx)
        bad_dy = np.argwhere(~g.valid_dy)
        assert {tuple(p) for p in bad_dx} == {(2, 1), (2, 2)}
        assert {tuple(p) for p in bad_dy} == {(1, 2), (2, 2)}

    def test_telescoping_rows(self, rng):
        data = rng.uniform(size=(6, 10, 1))
        g = gradients(LinearImage(data))
        recon = data[:, 0, 0] + g.dx[:, :-1, 0].sum(axis=1)
        assert np.allclose(recon, data[:, -1, 0], atol=1e-10)

    def test_adjoint_identity(self, rng):
        # <grad(u), t> == <u, grad_adjoint(t)> for the linear operator
        u = rng.standard_normal((7, 6, 2))
        tx = rng.standard_normal((7, 6, 2))
        ty = rng.standard_normal((7, 6, 2))
        tx[:, -1] = 0  # boundary samples are constant zero
        ty[-1, :] = 0
        g = gradients(LinearImage(u))
        lhs = (g.dx * tx).sum() + (g.dy * ty).sum()
        rhs = (u * gradient_adjoint(tx, ty)).sum()
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_box_adjoint_identity(self, rng):
        from intrinsics.image import _box_downsample

        fine = rng.standard_normal((9, 7, 2))
        mask = rng.random((9, 7)) > 0.2
        down, dmask = _box_downsample(fine, mask)
        cot = rng.standard_normal(down.shape)
        lhs = (down * cot).sum()
        rhs = (np.where(mask[:, :, None], fine, 0.0)
               * box_upsample_adjoint(cot, mask)).sum()
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestReductions:
    def test_intensity_mean(self):
        img = LinearImage(np.array([[[0.2, 0.4, 0.6]]]))
        assert intensity(img).data[0, 0, 0] == pytest.approx(0.4)

    def test_intensity_identity_single_channel(self, rng):
        img = LinearImage(rng.uniform(size=(3, 3, 1)))
        assert np.array_equal(intensity(img).data, img.data)

    def test_intensity_preserves_mask(self):
        mask = np.zeros((2, 2), dtype=bool)
        img = LinearImage(np.ones((2, 2, 3)), mask)
        assert not intensity(img).mask.any()

    def test_chromaticity_examples(self):
        img = LinearImage(np.array([[[1.0, 1.0, 1.0], [2.0, 0.0, 0.0],
                                     [0.0, 0.0, 0.0]]]))
        ch = chromaticity(img)
        assert ch.data[0, 0] == pytest.approx([1 / 3, 1 / 3])
        assert ch.data[0, 1] == pytest.approx([1.0, 0.0])
        assert not ch.mask[0, 2]
        assert ch.mask[0, 0] and ch.mask[0, 1]


class TestLogRoundTrip:
    @given(st.integers(1, 20))
    @settings(max_examples=20, deadline=None)
    def test_exp_log_identity(self, seed):
        r = np.random.default_rng(seed)
        img = LinearImage(r.uniform(1e-3, 10.0, size=(5, 4, 3)))
        back = img.to_log().to_linear()
        assert np.allclose(back.data, img.data, rtol=1e-12, atol=0)

    def test_zero_pixels_survive_log(self):
        img = LinearImage(np.zeros((2, 2, 1)))
        assert np.all(np.isfinite(img.to_log().data))


class TestDecomposition:
    def test_grid_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Decomposition(np.zeros((4, 4, 3)), np.zeros((5, 4, 1)),
                          np.ones((4, 4), dtype=bool))

    def test_reflectance_shading_views(self, rng):
        dec = Decomposition(rng.standard_normal((3, 3, 3)),
                            rng.standard_normal((3, 3, 1)),
                            np.ones((3, 3), dtype=bool))
        assert np.allclose(dec.reflectance().data, np.exp(dec.log_r))
        assert np.allclose(dec.shading().data, np.exp(dec.log_s))

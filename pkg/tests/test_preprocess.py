import numpy as np
import pytest

from core.errors import DimensionMismatchError, EmptyMaskError, InsufficientDataError
from core.models import NormalizationStats, WindowSpec
from core.volume import BinaryMask, VoxelGrid
from uq.config import LiverRecipe, TumorRecipe
from uq.preprocess import (
    compute_stats, fill_and_window_tumor, fit_recipe_stats, preprocess_liver, preprocess_tumor,
    resample, window, zscore,
)

LIVER_WINDOW = WindowSpec(lo=-120, hi=240)
TUMOR_WINDOW = WindowSpec(lo=-30, hi=200)


def _grid(values, dims=None):
    values = np.asarray(values, dtype=float)
    if dims is None:
        dims = (values.size, 1, 1)
    return VoxelGrid.from_flat(values, dims)


def test_window_examples():
    out = window(_grid([-500, 100, 300]), LIVER_WINDOW)
    np.testing.assert_array_equal(out.flat(), [-120, 100, 240])
    assert window(_grid([300]), TUMOR_WINDOW).flat()[0] == 200


def test_window_is_idempotent(rng):
    grid = VoxelGrid(rng.normal(0, 400, size=(6, 5, 4)))
    once = window(grid, LIVER_WINDOW)
    np.testing.assert_array_equal(window(once, LIVER_WINDOW).data, once.data)


def test_window_spec_requires_ordering():
    with pytest.raises(ValueError):
        WindowSpec(lo=10, hi=10)


def test_zscore_examples():
    stats = NormalizationStats(mean=40, std=10)
    np.testing.assert_array_equal(zscore(_grid([40, 50, 60]), stats).flat(), [0.0, 1.0, 2.0])


def test_compute_stats_examples():
    stats = compute_stats([_grid([0, 2])])
    assert stats.mean == pytest.approx(1.0)
    assert stats.std == pytest.approx(1.0)

    stats = compute_stats([_grid([1, 1]), _grid([1, 5])])
    assert stats.mean == pytest.approx(2.0, abs=1e-12)
    assert stats.std == pytest.approx(np.sqrt(3.0), abs=1e-12)


def test_compute_stats_errors():
    with pytest.raises(InsufficientDataError):
        compute_stats([])
    with pytest.raises(InsufficientDataError):
        compute_stats([_grid([5, 5, 5, 5])])
    with pytest.raises(InsufficientDataError):
        compute_stats([_grid([3])])


def test_zscore_with_fitted_stats_is_standardized(rng):
    grids = [VoxelGrid(rng.normal(80, 30, size=(5, 6, 7))) for _ in range(3)]
    stats = compute_stats(grids)
    pooled = np.concatenate([zscore(g, stats).flat() for g in grids])
    assert abs(pooled.mean()) < 1e-6
    assert abs(pooled.std() - 1.0) < 1e-6


def test_resample_linear_corner_alignment():
    out = resample(_grid([0.0, 1.0]), (3, 1, 1))
    np.testing.assert_allclose(out.flat(), [0.0, 0.5, 1.0], atol=1e-12)
    assert out.spacing == pytest.approx((2 / 3, 1.0, 1.0))


def test_resample_identity_and_constant(rng):
    grid = VoxelGrid(rng.normal(size=(4, 5, 6)))
    same = resample(grid, (4, 5, 6))
    np.testing.assert_array_equal(same.data, grid.data)

    constant = VoxelGrid(np.full((3, 4, 5), 7.25))
    out = resample(constant, (9, 2, 7))
    np.testing.assert_allclose(out.data, 7.25, atol=1e-12)


def test_resample_to_single_voxel_uses_center():
    out = resample(_grid([0.0, 1.0, 2.0, 3.0, 4.0]), (1, 1, 1))
    assert out.flat()[0] == pytest.approx(2.0)


def test_resample_preserves_bounds(rng):
    for _ in range(10):
        grid = VoxelGrid(rng.uniform(-50, 90, size=(5, 4, 6)))
        target = tuple(int(n) for n in rng.integers(1, 12, size=3))
        out = resample(grid, target)
        assert out.dims == target
        assert out.data.min() >= grid.data.min()
        assert out.data.max() <= grid.data.max()


def test_resample_mask_nearest_neighbour(rng, cube_mask):
    out = resample(cube_mask, (16, 16, 16))
    assert isinstance(out, BinaryMask)
    assert out.dims == (16, 16, 16)
    assert out.data.dtype == np.bool_
    assert 0 < out.count < out.size

    same = resample(cube_mask, cube_mask.dims)
    np.testing.assert_array_equal(same.data, cube_mask.data)


def test_liver_recipe_output_dims_and_clamping():
    recipe = LiverRecipe(target_dims=(16, 16, 16))
    stats = recipe.stats
    ct = VoxelGrid(np.full((5, 6, 7), -1000.0))
    out = preprocess_liver(ct, recipe)
    assert out.dims == (16, 16, 16)
    np.testing.assert_allclose(out.data, (-120 - stats.mean) / stats.std)


def test_liver_recipe_default_dims():
    out = preprocess_liver(VoxelGrid(np.zeros((4, 4, 4))))
    assert out.dims == (256, 256, 256)


def test_liver_recipe_constant_at_mean_is_zero():
    recipe = LiverRecipe(target_dims=(8, 8, 8), stats=NormalizationStats(mean=40, std=12))
    out = preprocess_liver(VoxelGrid(np.full((3, 3, 3), 40.0)), recipe)
    np.testing.assert_allclose(out.data, 0.0, atol=1e-12)


def _liver_case():
    ct = np.full((10, 10, 10), 250.0)
    ct[0, 0, 0] = -400.0
    mask = np.zeros((10, 10, 10), dtype=bool)
    mask[2:8, 3:7, 1:9] = True
    mask[2, 3, 1] = False
    return VoxelGrid(ct), BinaryMask(mask)


def test_fill_and_window_tumor():
    ct, mask = _liver_case()
    staged = fill_and_window_tumor(ct, mask)
    assert staged.dims == (6, 4, 8)
    assert staged.data[0, 0, 0] == -50.0       # вне маски
    assert staged.data[1, 1, 1] == 200.0       # 250 HU внутри печени
    assert set(np.unique(staged.data)) == {-50.0, 200.0}


def test_tumor_recipe_output_dims():
    ct, mask = _liver_case()
    recipe = TumorRecipe(target_dims=(12, 10, 6))
    assert preprocess_tumor(ct, mask, recipe).dims == (12, 10, 6)
    assert preprocess_tumor(ct, mask).dims == (284, 256, 133)


def test_tumor_recipe_errors():
    ct, mask = _liver_case()
    with pytest.raises(EmptyMaskError):
        preprocess_tumor(ct, BinaryMask(np.zeros((10, 10, 10), bool)))
    with pytest.raises(DimensionMismatchError):
        preprocess_tumor(ct, BinaryMask(np.ones((10, 10, 9), bool)))


def test_fit_recipe_stats_uses_pre_normalization_stages():
    ct, mask = _liver_case()
    recipe = TumorRecipe(target_dims=(6, 4, 8))
    stats = fit_recipe_stats("tumor", [ct], [mask], recipe)
    staged = fill_and_window_tumor(ct, mask, recipe)
    assert stats.mean == pytest.approx(staged.data.mean())
    assert stats.std == pytest.approx(staged.data.std())
    assert stats.provenance.startswith("tumor")

    liver = fit_recipe_stats("liver", [ct], config=LiverRecipe(target_dims=(10, 10, 10)))
    clamped = np.clip(ct.data, -120, 240)
    assert liver.mean == pytest.approx(clamped.mean())

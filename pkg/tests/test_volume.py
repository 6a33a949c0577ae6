import numpy as np
import pytest

from core.errors import DimensionMismatchError, EmptyMaskError, VolumeError
from core.volume import BinaryMask, VoxelGrid, binarize, bounding_box, crop, dice, foreground_count


def test_flat_order_is_x_fastest():
    grid = VoxelGrid.from_flat(np.arange(24), (2, 3, 4))
    assert grid.data[1, 0, 0] == 1
    assert grid.data[0, 1, 0] == 2
    assert grid.data[0, 0, 1] == 6
    np.testing.assert_array_equal(grid.flat(), np.arange(24))


def test_from_flat_rejects_wrong_length():
    with pytest.raises(VolumeError):
        VoxelGrid.from_flat(np.zeros(23), (2, 3, 4))


def test_grid_rejects_non_finite_and_bad_spacing():
    with pytest.raises(VolumeError):
        VoxelGrid(np.full((2, 2, 2), np.nan))
    with pytest.raises(VolumeError):
        VoxelGrid(np.zeros((2, 2, 2)), spacing=(1.0, 0.0, 1.0))
    with pytest.raises(VolumeError):
        VoxelGrid(np.zeros((2, 2)))


def test_grid_is_read_only():
    grid = VoxelGrid(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        grid.data[0, 0, 0] = 1.0


def test_mask_count_matches_recount():
    data = np.zeros((3, 3, 3), dtype=np.uint8)
    data[0, 0, 0] = data[2, 1, 1] = 1
    mask = BinaryMask(data)
    assert mask.count == 2 == foreground_count(mask)
    with pytest.raises(VolumeError):
        BinaryMask(np.full((2, 2, 2), 2))


@pytest.mark.parametrize("values,expected", [
    ([0.49, 0.5, 0.51], [False, True, True]),
    ([0.0, 0.0, 0.0], [False, False, False]),
    ([1.0, 1.0, 1.0], [True, True, True]),
])
def test_binarize_uses_greater_or_equal(values, expected):
    mask = binarize(VoxelGrid.from_flat(values, (3, 1, 1)))
    np.testing.assert_array_equal(mask.flat(), expected)


def test_binarize_validates_threshold_and_range():
    grid = VoxelGrid(np.full((2, 2, 2), 0.5))
    with pytest.raises(VolumeError):
        binarize(grid, 0.0)
    with pytest.raises(VolumeError):
        binarize(VoxelGrid(np.full((2, 2, 2), 1.5)))


def test_dice_examples():
    a = np.zeros((8, 1, 1), dtype=bool)
    b = np.zeros((8, 1, 1), dtype=bool)
    a[:4] = True
    b[2:6] = True
    assert dice(BinaryMask(a), BinaryMask(b)) == 0.5
    assert dice(BinaryMask(a), BinaryMask(a)) == 1.0
    empty = BinaryMask(np.zeros((8, 1, 1), dtype=bool))
    assert dice(empty, empty) == 1.0
    assert dice(BinaryMask(a), empty) == 0.0


def test_dice_is_symmetric_and_bounded(rng):
    for _ in range(20):
        a = BinaryMask(rng.random((5, 4, 3)) < 0.4)
        b = BinaryMask(rng.random((5, 4, 3)) < 0.4)
        assert dice(a, b) == dice(b, a)
        assert 0.0 <= dice(a, b) <= 1.0


def test_dice_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        dice(BinaryMask(np.zeros((2, 2, 2), bool)), BinaryMask(np.zeros((2, 2, 3), bool)))


def test_bounding_box_and_crop(cube_mask):
    box = bounding_box(cube_mask)
    assert box == ((2, 2, 2), (5, 5, 5))
    cropped = crop(cube_mask, box)
    assert cropped.dims == (4, 4, 4)
    assert cropped.count == cube_mask.count


def test_bounding_box_single_voxel():
    data = np.zeros((4, 5, 6), dtype=bool)
    data[1, 3, 5] = True
    assert bounding_box(BinaryMask(data)) == ((1, 3, 5), (1, 3, 5))


def test_bounding_box_empty_mask():
    with pytest.raises(EmptyMaskError):
        bounding_box(BinaryMask(np.zeros((3, 3, 3), bool)))


def test_crop_grid_keeps_values_and_spacing():
    grid = VoxelGrid.from_flat(np.arange(27, dtype=float), (3, 3, 3), spacing=(0.5, 1.0, 2.0))
    cropped = crop(grid, ((1, 0, 2), (2, 1, 2)))
    assert cropped.dims == (2, 2, 1)
    assert cropped.spacing == (0.5, 1.0, 2.0)
    assert cropped.data[0, 0, 0] == grid.data[1, 0, 2]
    with pytest.raises(VolumeError):
        crop(grid, ((0, 0, 0), (3, 0, 0)))


def _random_mask(rng):
    dims = tuple(int(d) for d in rng.integers(1, 17, size=3))
    return BinaryMask(rng.random(dims) < rng.random())


def test_binarize_of_mask_grid_reproduces_mask(rng):
    for _ in range(100):
        mask = _random_mask(rng)
        for t in (1.0 - rng.random(), 1.0, np.nextafter(0.0, 1.0)):
            np.testing.assert_array_equal(binarize(mask.as_grid(), t).data, mask.data)


def test_foreground_count_is_non_increasing_in_threshold(rng):
    for _ in range(100):
        dims = tuple(int(d) for d in rng.integers(1, 17, size=3))
        grid = VoxelGrid(rng.random(dims))
        thresholds = np.sort(np.append(1.0 - rng.random(10), 1.0))
        counts = [foreground_count(binarize(grid, float(t))) for t in thresholds]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_crop_to_bounding_box_keeps_foreground(rng):
    checked = 0
    while checked < 100:
        mask = _random_mask(rng)
        if mask.count == 0:
            continue
        cropped = crop(mask, bounding_box(mask))
        assert cropped.count == mask.count
        assert all(c <= d for c, d in zip(cropped.dims, mask.dims))
        checked += 1

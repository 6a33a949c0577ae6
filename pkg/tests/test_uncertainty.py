import math
import time
import tracemalloc
from itertools import permutations, product

import numpy as np
import pytest
from scipy.stats import binomtest

from core.errors import DimensionMismatchError, VolumeError
from core.models import CVVariant, EntropyVariant
from core.volume import BinaryMask, VoxelGrid
from uq.uncertainty import (
    SampleAggregator, SampleSet, analyze_case, analyze_case_full, coefficient_of_variation,
    consensus_mask, mean_labelled_uncertainty, mean_pairwise_dice, mean_probability,
    sample_set_from_arrays, uncertainty_map,
)


def _constant_samples(values, n=3):
    """n одинаковых сэмплов с заданными вероятностями вдоль оси x"""
    values = np.asarray(values, dtype=float).reshape(-1, 1, 1)
    return sample_set_from_arrays([values] * n)


def _masks_to_samples(masks):
    return sample_set_from_arrays([np.asarray(m, dtype=float) for m in masks])


# --- независимая переписка формул: чистый Python, без общих вспомогательных функций ---

def _oracle(arrays, threshold=0.5):
    n = len(arrays)
    nx, ny, nz = arrays[0].shape
    voxels = list(product(range(nx), range(ny), range(nz)))

    mean = {v: sum(sorted(float(a[v]) for a in arrays)) / n for v in voxels}
    consensus = {v: mean[v] >= threshold for v in voxels}

    def plogp(p):
        return 0.0 if p == 0.0 else p * math.log(p)

    u = {v: -sum(plogp(float(a[v])) for a in arrays) / n for v in voxels}

    binary = [{v: float(a[v]) >= threshold for v in voxels} for a in arrays]
    volumes = [sum(1 for v in voxels if b[v]) for b in binary]
    mean_volume = sum(volumes) / n
    variance = sum((x - mean_volume) ** 2 for x in volumes) / n
    cv = variance / (mean_volume + 1)

    scores = []
    for i in range(n):
        for j in range(i + 1, n):
            inter = sum(1 for v in voxels if binary[i][v] and binary[j][v])
            size = volumes[i] + volumes[j]
            scores.append(1.0 if size == 0 else 2.0 * inter / size)
    d_pw = sum(scores) / len(scores)

    labelled = [v for v in voxels if consensus[v]]
    u_labelled = sum(u[v] for v in labelled) / len(labelled) if labelled else None
    return consensus, u, cv, d_pw, u_labelled


def _random_sample_arrays(rng, n, dims):
    style = rng.integers(0, 3)
    if style == 0:
        return [rng.random(dims) for _ in range(n)]
    if style == 1:
        return [(rng.random(dims) < 0.5).astype(float) for _ in range(n)]
    # смесь точных 0, 0.5, 1 и непрерывных значений
    choices = np.array([0.0, 0.5, 1.0])
    return [np.where(rng.random(dims) < 0.5, choices[rng.integers(0, 3, dims)], rng.random(dims))
            for _ in range(n)]


def test_matches_brute_force_oracle(rng):
    for _ in range(200):
        n = int(rng.choice([2, 3, 5, 10]))
        dims = tuple(int(d) for d in rng.integers(1, 9, size=3))
        arrays = _random_sample_arrays(rng, n, dims)

        samples = sample_set_from_arrays(arrays)
        aggregator = SampleAggregator(samples)
        consensus, u, cv, d_pw, u_labelled = _oracle(arrays)

        expected_mask = np.zeros(dims, dtype=bool)
        expected_u = np.zeros(dims)
        for v, value in consensus.items():
            expected_mask[v] = value
            expected_u[v] = u[v]

        np.testing.assert_array_equal(aggregator.consensus.data, expected_mask)
        np.testing.assert_allclose(aggregator.uncertainty_map.grid.data, expected_u, rtol=0, atol=1e-9)
        assert aggregator.coefficient_of_variation() == pytest.approx(cv, abs=1e-9)
        assert aggregator.mean_pairwise_dice() == pytest.approx(d_pw, abs=1e-9)
        if u_labelled is None:
            assert aggregator.mean_labelled_uncertainty() is None
        else:
            assert aggregator.mean_labelled_uncertainty() == pytest.approx(u_labelled, abs=1e-9)


# --- простые случаи ---

def test_identical_binary_samples_are_perfect(cube_mask):
    gt = cube_mask
    samples = sample_set_from_arrays([gt.as_grid()] * 10)
    report = analyze_case(samples, gt)
    assert report.cv == 0.0
    assert report.d_pw == 1.0
    assert report.dice == 1.0
    assert report.u_labelled == 0.0
    assert (uncertainty_map(samples).grid.data == 0.0).all()


def test_all_zero_samples_against_ground_truth(cube_mask):
    samples = sample_set_from_arrays([np.zeros((8, 8, 8))] * 4)
    report = analyze_case(samples, cube_mask)
    assert report.dice == 0.0
    assert report.cv == 0.0
    assert report.u_labelled is None
    assert report.consensus_voxels == 0


def test_mean_probability_examples():
    two = sample_set_from_arrays([np.zeros((1, 1, 1)), np.ones((1, 1, 1))])
    assert mean_probability(two).data[0, 0, 0] == 0.5
    three = sample_set_from_arrays([np.full((1, 1, 1), p) for p in (0.2, 0.4, 0.9)])
    assert mean_probability(three).data[0, 0, 0] == pytest.approx(0.5)


def test_consensus_half_votes_is_foreground():
    arrays = [np.ones((1, 1, 1))] * 5 + [np.zeros((1, 1, 1))] * 5
    assert consensus_mask(sample_set_from_arrays(arrays)).data[0, 0, 0]


def test_uncertainty_constant_half():
    u = uncertainty_map(_constant_samples([0.5, 1.0, 0.0]))
    assert abs(u.grid.data[0, 0, 0] - 0.5 * math.log(2)) < 1e-12
    assert u.grid.data[1, 0, 0] == 0.0
    assert u.grid.data[2, 0, 0] == 0.0
    assert u.n_samples == 3


def test_binary_entropy_variant():
    u = uncertainty_map(_constant_samples([0.5]), entropy=EntropyVariant.BINARY)
    assert u.grid.data[0, 0, 0] == pytest.approx(math.log(2), abs=1e-12)


def test_cv_worked_value():
    masks = []
    for volume in (90, 100, 110):
        m = np.zeros((200, 1, 1))
        m[:volume] = 1.0
        masks.append(m)
    samples = _masks_to_samples(masks)
    assert abs(coefficient_of_variation(samples) - (200 / 3) / 101) < 1e-12
    std_over_mean = coefficient_of_variation(samples, variant=CVVariant.STD_OVER_MEAN)
    assert std_over_mean == pytest.approx(np.std([90, 100, 110]) / 100)


def test_cv_all_empty_is_zero():
    assert coefficient_of_variation(sample_set_from_arrays([np.zeros((2, 2, 2))] * 3)) == 0.0
    assert coefficient_of_variation(sample_set_from_arrays([np.zeros((2, 2, 2))] * 3),
                                    variant=CVVariant.STD_OVER_MEAN) == 0.0


def test_pairwise_dice_worked_values():
    a = np.zeros((8, 1, 1))
    b = np.zeros((8, 1, 1))
    a[:4] = 1
    b[2:6] = 1
    assert mean_pairwise_dice(_masks_to_samples([a, b])) == 0.5

    c = np.zeros((8, 1, 1))
    c[4:8] = 1
    assert mean_pairwise_dice(_masks_to_samples([a, a, c])) == pytest.approx(1 / 3)


def test_labelled_uncertainty_worked_value():
    value = mean_labelled_uncertainty(_constant_samples([0.9, 0.6, 0.2]))
    expected = (-0.9 * math.log(0.9) - 0.6 * math.log(0.6)) / 2
    assert value == pytest.approx(expected, abs=1e-12)
    assert value == pytest.approx(0.2006630, abs=1e-7)


def test_measures_are_permutation_invariant(rng):
    arrays = [rng.random((4, 4, 4)) for _ in range(5)]
    forward = analyze_case(sample_set_from_arrays(arrays))
    backward = analyze_case(sample_set_from_arrays(arrays[::-1]))
    assert forward.d_pw == pytest.approx(backward.d_pw, abs=1e-12)
    assert forward.cv == pytest.approx(backward.cv, abs=1e-12)
    assert forward.u_labelled == pytest.approx(backward.u_labelled, abs=1e-12)
    assert forward.consensus_voxels == backward.consensus_voxels


@pytest.mark.parametrize("values", [(0.2, 0.6, 0.7), (0.1, 0.4, 0.6, 0.9), (0.3, 0.3, 0.9), (0.7, 0.1, 0.2, 0.5, 1.0)])
def test_consensus_at_threshold_tie_ignores_sample_order(values):
    results = []
    for order in permutations(values):
        aggregator = SampleAggregator(sample_set_from_arrays([np.full((1, 1, 1), v) for v in order]))
        results.append((float(aggregator.mean_probability.data[0, 0, 0]), aggregator.consensus.count,
                        aggregator.mean_labelled_uncertainty()))
    means = {r[0] for r in results}
    counts = {r[1] for r in results}
    assert len(means) == 1
    assert len(counts) == 1
    assert means.pop() == pytest.approx(0.5, abs=1e-15)
    labelled = [r[2] for r in results]
    if counts.pop():
        assert all(u == pytest.approx(labelled[0], rel=1e-12) for u in labelled)
    else:
        assert all(u is None for u in labelled)


@pytest.mark.parametrize("values", [(0.25, 0.5, 0.75), (0.125, 0.375, 0.5, 1.0)])
def test_exact_threshold_mean_is_foreground_in_any_order(values):
    for order in permutations(values):
        report = analyze_case(sample_set_from_arrays([np.full((1, 1, 1), v) for v in order]))
        assert report.consensus_voxels == 1


def test_sample_set_validation():
    with pytest.raises(VolumeError):
        sample_set_from_arrays([np.zeros((2, 2, 2))])
    with pytest.raises(VolumeError):
        sample_set_from_arrays([np.zeros((2, 2, 2)), np.zeros((2, 2, 3))])
    with pytest.raises(VolumeError):
        sample_set_from_arrays([np.zeros((2, 2, 2)), np.full((2, 2, 2), 1.2)])
    with pytest.raises(VolumeError):
        SampleSet((VoxelGrid(np.zeros((2, 2, 2))), VoxelGrid(np.zeros((2, 2, 2)), spacing=(2, 1, 1))))


def test_analyze_case_ground_truth_mismatch():
    samples = sample_set_from_arrays([np.zeros((2, 2, 2))] * 2)
    with pytest.raises(DimensionMismatchError):
        analyze_case(samples, BinaryMask(np.zeros((3, 2, 2), bool)))


def test_analyze_case_full_carries_maps_and_labels(cube_mask):
    samples = sample_set_from_arrays([cube_mask.as_grid()] * 3, case_id="c7")
    analysis = analyze_case_full(samples, cube_mask, split="test", group="wcc")
    assert analysis.report.case_id == "c7"
    assert analysis.report.split == "test"
    assert analysis.report.group == "wcc"
    np.testing.assert_array_equal(analysis.consensus.data, cube_mask.data)
    assert analysis.uncertainty.grid.dims == cube_mask.dims


def _noisy_samples(rng, truth, level, n=6):
    """Бинарные сэмплы, притянутые к 0.5 независимым шумом величины level"""
    arrays = []
    for _ in range(n):
        e = rng.uniform(0.0, level, size=truth.shape)
        arrays.append(np.where(truth, 1.0 - e, e))
    return sample_set_from_arrays(arrays)


def test_more_voxel_noise_lowers_agreement_and_raises_uncertainty():
    truth = np.zeros((10, 10, 10), dtype=bool)
    truth[2:8, 2:8, 2:8] = True
    seeds = range(30)
    dpw_drops = 0
    u_rises = 0
    for seed in seeds:
        low = analyze_case(_noisy_samples(np.random.default_rng(seed), truth, 0.55))
        high = analyze_case(_noisy_samples(np.random.default_rng(seed + 1000), truth, 0.8))
        dpw_drops += high.d_pw < low.d_pw
        u_rises += high.u_labelled > low.u_labelled
    assert binomtest(dpw_drops, len(seeds), 0.5, alternative="greater").pvalue < 0.01
    assert binomtest(u_rises, len(seeds), 0.5, alternative="greater").pvalue < 0.01


@pytest.mark.slow
def test_full_size_case_fits_time_and_memory_budget():
    dims = (256, 256, 256)
    gen = np.random.default_rng(7)
    arrays = [gen.random(dims, dtype=np.float32) for _ in range(10)]
    samples = sample_set_from_arrays(arrays, case_id="full_size")
    ground_truth = BinaryMask(arrays[0] >= 0.5)
    sample_set_bytes = 10 * arrays[0].nbytes

    tracemalloc.start()
    started = time.perf_counter()
    report = analyze_case(samples, ground_truth)
    elapsed = time.perf_counter() - started
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()

    assert report.n_samples == 10
    assert 0.0 <= report.d_pw <= 1.0
    assert elapsed < 10.0
    assert peak < 4 * sample_set_bytes

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpp.imgio import HintSet
from vpp.occlusion import (
    OcclusionDetector,
    OcclusionParams,
    build_warp_grid,
    classify_occlusions,
)
from vpp.sampling_eval import sample_hints
from vpp.synthetic import two_rectangle_scene

from oracles import f1_score, geometric_occlusion


def test_collision_keeps_largest_disparity():
    hints = HintSet([10, 9], [5, 5], [4.0, 3.0])
    grid = build_warp_grid(hints, 20, 10)
    assert grid.values[5, 6] == 4.0
    assert grid.origin[5, 6] == 0
    assert grid.filled.sum() == 1


def test_identity_warp():
    grid = build_warp_grid(HintSet([10], [5], [0.0]), 20, 10)
    assert grid.filled[5, 10] and grid.values[5, 10] == 0.0


def test_out_of_target_excluded_and_flagged():
    hints = HintSet([2], [0], [5.0])
    grid = build_warp_grid(hints, 20, 10)
    assert not grid.filled.any()
    assert hints.out_of_target.tolist() == [True]
    flagged = classify_occlusions(hints, grid, OcclusionParams())
    assert flagged.out_of_target.tolist() == [True]
    assert flagged.occluded.tolist() == [False]


def test_equal_disparity_tie_keeps_smaller_source_x():
    # both land on column 6 after rounding half to even (6.5 -> 6, 5.5 -> 6)
    hints = HintSet([10, 9], [0, 0], [3.5, 3.5])
    grid = build_warp_grid(hints, 20, 1)
    assert grid.origin[0, 6] == 1


def test_occlusion_rule_hand_evaluation():
    # W(10,5)=40 beside W(11,5)=20: 40 - 20 - 2*(0.4375*1 + 0.5625*0) = 19.125 > 1
    hints = HintSet([50, 31], [5, 5], [40.0, 20.0])
    grid = build_warp_grid(hints, 64, 12)
    assert grid.values[5, 10] == 40 and grid.values[5, 11] == 20
    flags = classify_occlusions(hints, grid, OcclusionParams())
    assert flags.occluded.tolist() == [False, True]


def test_equal_disparities_never_occlude():
    hints = HintSet([10, 11, 12, 10], [3, 3, 3, 4], [5.0, 5.0, 5.0, 5.0])
    flags = OcclusionDetector().fit_predict(hints, (10, 30))
    assert not flags.any()


def test_isolated_hint_visible():
    assert not OcclusionDetector().fit_predict(HintSet([15], [4], [3.0]), (10, 30)).any()


def test_neighbors_outside_patch_ignored():
    # 5 columns apart exceeds the 9-wide patch half-width of 4
    hints = HintSet([30, 25], [5, 5], [20.0, 10.0])
    assert OcclusionDetector().fit_predict(hints, (12, 64)).tolist() == [False, False]
    hints = HintSet([30, 24], [5, 5], [20.0, 10.0])
    assert OcclusionDetector().fit_predict(hints, (12, 64)).tolist() == [False, True]


def test_collision_loser_flagged_by_margin():
    hints = HintSet([20, 10], [0, 0], [12.0, 2.0])
    flags = OcclusionDetector().fit_predict(hints, (1, 32))
    assert flags.tolist() == [False, True]


def test_params_validation():
    with pytest.raises(ValueError):
        OcclusionParams(rx=4)
    with pytest.raises(ValueError):
        OcclusionParams(gamma=1.5)


hint_sets = st.integers(0, 2**32 - 1).map(lambda s: np.random.default_rng(s))


def _random_hints(rng, n=60, w=48, h=16):
    idx = rng.choice(w * h, size=n, replace=False)
    y, x = np.divmod(idx, w)
    d = rng.integers(0, 20, size=n).astype(float)
    return HintSet(x, y, d)


@settings(max_examples=40, deadline=None)
@given(hint_sets)
def test_classification_independent_of_order(rng):
    hints = _random_hints(rng)
    perm = rng.permutation(len(hints))
    shuffled = HintSet(hints.x[perm], hints.y[perm], hints.d[perm])
    a = OcclusionDetector().fit_predict(hints, (16, 48))
    b = OcclusionDetector().fit_predict(shuffled, (16, 48))
    np.testing.assert_array_equal(a[perm], b)


@settings(max_examples=40, deadline=None)
@given(hint_sets, st.floats(0, 5), st.floats(0, 5))
def test_raising_t_shrinks_occluded_set(rng, t1, t2):
    hints = _random_hints(rng)
    lo, hi = sorted((t1, t2))
    a = OcclusionDetector(t=lo).fit_predict(hints, (16, 48))
    b = OcclusionDetector(t=hi).fit_predict(hints, (16, 48))
    assert not np.any(b & ~a)


def occlusion_f1(seed, density=0.05):
    scene = two_rectangle_scene(seed=seed)
    truth, outside = geometric_occlusion(scene.gt)
    hints = sample_hints(scene.gt, density, seed=seed)
    pred = OcclusionDetector(lam=2.0, gamma=0.4375, t=1.0, rx=9, ry=7).fit_predict(
        hints, scene.gt.shape)
    keep = ~outside[hints.y, hints.x]
    return f1_score(pred[keep], truth[hints.y, hints.x][keep])


def test_geometric_oracle_agrees_with_renderer():
    scene = two_rectangle_scene(seed=0)
    truth, outside = geometric_occlusion(scene.gt)
    ys, xs = np.nonzero(~outside)
    xr = xs - scene.gt[ys, xs].astype(int)
    rendered = scene.gt_right[ys, xr] != scene.gt[ys, xs]
    np.testing.assert_array_equal(truth[ys, xs], rendered)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_f1_against_geometric_oracle(seed):
    assert occlusion_f1(seed) >= 0.8

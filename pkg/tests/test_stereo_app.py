import math

import numpy as np
import pytest
from scenes import plane_field, synthetic_seed, two_plane_truth

from mscon import (
    SeedField,
    StereoParams,
    build_data_quadratics,
    build_outlier_costs,
    build_pyramid,
    initialize_scene,
    make_planar_disparity,
    occlusion_correct,
    run_stereo,
)
from mscon.solver import SceneMap
from mscon.stereo_app import build_variance_table


def full_seed(z):
    z = np.asarray(z, dtype=np.float64)
    valid = np.ones(z.shape, dtype=bool)
    return SeedField(z=z, valid=valid, weight=valid.astype(np.float64))


def row_seed(z, valid):
    z = np.asarray(z, dtype=np.float64)[None, :]
    valid = np.asarray(valid, dtype=bool)[None, :]
    return SeedField(z=np.where(valid, z, 0.0), valid=valid,
                     weight=valid.astype(np.float64))


def test_data_quadratics_vanish_without_valid_pixels():
    pyramid = build_pyramid(16, 16, 2)
    model = make_planar_disparity()
    z = np.zeros((16, 16))
    seed = SeedField(z=z, valid=np.zeros((16, 16), dtype=bool), weight=z.copy())
    for gram_a, corr_b, const_c in build_data_quadratics(seed, model, pyramid):
        assert not gram_a.any() and not corr_b.any() and not const_c.any()


def test_data_quadratics_single_pixel():
    pyramid = build_pyramid(8, 8, 1)
    model = make_planar_disparity()
    z = np.zeros((8, 8))
    z[2, 3] = 6.0
    valid = np.zeros((8, 8), dtype=bool)
    valid[2, 3] = True
    weight = np.where(valid, 0.25, 0.0)
    seed = SeedField(z=z, valid=valid, weight=weight)
    gram_a, corr_b, const_c = build_data_quadratics(seed, model, pyramid)[0]
    u = model.evaluate(3, 2)[0]
    np.testing.assert_allclose(gram_a[0, 0], 0.25 * np.outer(u, u))
    np.testing.assert_allclose(corr_b[0, 0], 0.25 * 6.0 * u)
    assert const_c[0, 0] == pytest.approx(0.25 * 36.0)
    # a region missing the pixel sees nothing
    assert not gram_a[4, 4].any()


def test_data_quadratics_match_direct_sums(rng):
    pyramid = build_pyramid(12, 12, 2)
    model = make_planar_disparity(coord_scale=12.0)
    truth = plane_field(12, 12, 0.1, -0.05, 3.0)
    seed = synthetic_seed(truth, rng, noise=0.3, dropout=0.2)
    quads = build_data_quadratics(seed, model, pyramid)
    u = model.grid(12, 12)
    for k in range(2):
        s = pyramid.side(k)
        ny, nx = pyramid.grid_shape(k)
        for y in range(0, ny, 3):
            for x in range(0, nx, 3):
                w = seed.weight[y : y + s, x : x + s]
                uu = u[y : y + s, x : x + s, 0]
                zz = seed.z[y : y + s, x : x + s]
                a = np.einsum("hw,hwi,hwj->ij", w, uu, uu)
                b = np.einsum("hw,hwi,hw->i", w, uu, zz)
                c = float(np.sum(w * zz * zz))
                np.testing.assert_allclose(quads[k][0][y, x], a, rtol=1e-10, atol=1e-12)
                np.testing.assert_allclose(quads[k][1][y, x], b, rtol=1e-10, atol=1e-12)
                assert quads[k][2][y, x] == pytest.approx(c, rel=1e-10)


def test_planar_seed_has_zero_residual():
    pyramid = build_pyramid(16, 16, 2)
    model = make_planar_disparity()
    truth = np.array([0.02, -0.01, 3.0])
    seed = full_seed(np.einsum("hwdm,m->hwd", model.grid(16, 16), truth)[..., 0])
    for gram_a, corr_b, const_c in build_data_quadratics(seed, model, pyramid):
        fit = (
            np.einsum("i,yxij,j->yx", truth, gram_a, truth)
            - 2.0 * np.einsum("yxi,i->yx", corr_b, truth)
            + const_c
        )
        assert np.abs(fit).max() < 1e-9


def test_outlier_costs_on_constant_image():
    pyramid = build_pyramid(24, 24, 2)
    costs, table = build_outlier_costs(np.full((24, 24), 50.0), pyramid, 1.44)
    for k in range(2):
        assert not table.variance[k].any()
        assert not table.sharer_count[k].any()
    np.testing.assert_allclose(costs[0], 1.44 * 16.0)
    np.testing.assert_allclose(costs[1], 1.44 * 64.0)


def test_sharer_counts_on_diagonal_gradient():
    # variance grows strictly along x + y, so the strictly-lower sharers of
    # an interior region are exactly its three lower-diagonal neighbors
    xs = np.arange(24)[None, :]
    ys = np.arange(24)[:, None]
    gray = ((xs + ys) ** 2).astype(np.float64)
    pyramid = build_pyramid(24, 24, 2)
    costs, table = build_outlier_costs(gray, pyramid, 1.44)
    count = table.sharer_count[1]
    assert count[8, 8] == 3
    assert count[0, 0] == 0
    assert count[4, 0] == 1
    base = 1.44 * 64.0
    assert costs[1][8, 8] == pytest.approx(base * 0.5)
    assert costs[1][0, 0] == pytest.approx(base)
    assert costs[1][4, 0] == pytest.approx(base * math.exp(-0.25))
    # the finest scale never discounts
    np.testing.assert_allclose(costs[0], 1.44 * 16.0)


def test_variance_table_matches_direct_computation(rng):
    gray = rng.normal(size=(20, 20)) * 10
    pyramid = build_pyramid(20, 20, 2)
    table = build_variance_table(gray, pyramid)
    for k in range(2):
        s = pyramid.side(k)
        for y, x in [(0, 0), (3, 7), (5, 5)]:
            patch = gray[y : y + s, x : x + s]
            assert table.variance[k][y, x] == pytest.approx(patch.var(), rel=1e-10)


def test_initialize_row_fill_and_tie_rule():
    scene = initialize_scene(row_seed([10, 0, 0, 12], [1, 0, 0, 1]))
    np.testing.assert_allclose(scene.z[0, :, 0], [10, 10, 12, 12])
    # the equidistant pixel takes the lower disparity, whichever side it is on
    scene = initialize_scene(row_seed([10, 0, 12], [1, 0, 1]))
    assert scene.z[0, 1, 0] == 10.0
    scene = initialize_scene(row_seed([12, 0, 10], [1, 0, 1]))
    assert scene.z[0, 1, 0] == 10.0


def test_initialize_column_and_median_fallbacks():
    z = np.zeros((2, 3))
    z[0, 0], z[0, 1] = 4.0, 8.0
    valid = np.zeros((2, 3), dtype=bool)
    valid[0, 0] = valid[0, 1] = True
    scene = initialize_scene(SeedField(z=z, valid=valid, weight=valid.astype(float)))
    np.testing.assert_allclose(scene.z[0, :, 0], [4, 8, 8])
    assert scene.z[1, 0, 0] == 4.0
    assert scene.z[1, 1, 0] == 8.0
    # no valid pixel in row 1 or column 2: global median of the seed values
    assert scene.z[1, 2, 0] == 6.0
    assert scene.count.max() == 0


def test_initialize_rejects_empty_seed():
    z = np.zeros((4, 4))
    seed = SeedField(z=z, valid=np.zeros((4, 4), dtype=bool), weight=z.copy())
    with pytest.raises(ValueError):
        initialize_scene(seed)


def test_occlusion_correct_takes_minimum():
    seed = row_seed([12, 0, 0, 30], [1, 0, 0, 1])
    scene = SceneMap.from_values(np.array([[99.0, 25.0, 25.0, 99.0]]))
    out = occlusion_correct(scene, seed)
    # invalid pixel near the low side drops, the one near the high side stays
    assert out.z[0, 1, 0] == 12.0
    assert out.z[0, 2, 0] == 25.0
    # valid pixels are untouched even when far from their seed value
    assert out.z[0, 0, 0] == 99.0
    assert out.z[0, 3, 0] == 99.0


def test_occlusion_correct_tie_takes_lower():
    seed = row_seed([12, 0, 30], [1, 0, 1])
    scene = SceneMap.from_values(np.array([[0.0, 50.0, 0.0]]))
    out = occlusion_correct(scene, seed)
    assert out.z[0, 1, 0] == 12.0


def test_occlusion_correct_skips_rows_without_seed():
    z = np.zeros((2, 3))
    z[0, 0] = 5.0
    valid = np.zeros((2, 3), dtype=bool)
    valid[0, 0] = True
    seed = SeedField(z=z, valid=valid, weight=valid.astype(float))
    scene = SceneMap.from_values(np.full((2, 3), 40.0))
    out = occlusion_correct(scene, seed)
    np.testing.assert_allclose(out.z[1, :, 0], 40.0)
    np.testing.assert_allclose(out.z[0, 1:, 0], 5.0)


def quick_params(**kw):
    defaults = dict(
        num_scales=3,
        occlusion_iteration=8,
        post_occlusion_iterations=4,
        growth_interval=2,
        start_weight_scale=2.0 ** -8,
    )
    defaults.update(kw)
    return StereoParams(**defaults)


def test_fronto_parallel_converges_to_constant():
    params = quick_params(num_scales=2, occlusion_correction=False,
                          occlusion_iteration=4, post_occlusion_iterations=2)
    seed = full_seed(np.full((32, 32), 6.0))
    result = run_stereo(np.full((32, 32), 80.0), params=params, seed=seed)
    assert np.abs(result.disparity - 6.0).max() < 1e-3
    assert sum(result.trace[-1].outliers) == 0
    np.testing.assert_array_equal(result.confidence, result.pyramid.coverage_map())


def test_two_plane_scene_recovered(rng):
    truth = two_plane_truth(64, 32, (0.05, 0.0, 4.0), (-0.02, 0.01, 12.0))
    seed = synthetic_seed(truth, rng, noise=0.25, dropout=0.1)
    result = run_stereo(np.full((64, 64), 100.0), params=quick_params(), seed=seed)
    err = np.abs(result.disparity - truth)
    xs = np.arange(64)[None, :]
    far = np.broadcast_to(np.abs(xs - 32) > 8, err.shape)
    assert np.quantile(err[far], 0.9) < 0.5
    assert len(result.trace) == 12
    assert result.trace[0].weight == pytest.approx(0.4 * 2.0 ** -8)
    assert result.trace[-1].weight == pytest.approx(0.4)


def test_outliers_do_not_grow_with_larger_base_cost(rng):
    truth = two_plane_truth(64, 32, (0.05, 0.0, 4.0), (-0.02, 0.01, 12.0))
    seed = synthetic_seed(truth, rng, noise=0.25, dropout=0.1)
    gray = np.full((64, 64), 100.0)
    cheap = run_stereo(gray, params=quick_params(base_outlier_cost=0.3), seed=seed)
    costly = run_stereo(gray, params=quick_params(base_outlier_cost=6.0), seed=seed)
    assert sum(costly.trace[-1].outliers) <= sum(cheap.trace[-1].outliers)


def test_run_stereo_validates_inputs(rng):
    with pytest.raises(ValueError):
        run_stereo(np.zeros((32, 32)))
    seed = full_seed(np.full((16, 16), 3.0))
    with pytest.raises(ValueError):
        run_stereo(np.zeros((32, 32)), params=quick_params(), seed=seed)


def test_params_validation_and_solver_mapping():
    with pytest.raises(ValueError):
        StereoParams(base_outlier_cost=-1.0)
    with pytest.raises(ValueError):
        StereoParams(start_weight_scale=0.0)
    with pytest.raises(ValueError):
        StereoParams(occlusion_iteration=0)
    params = StereoParams()
    config = params.solver_config()
    assert config.max_iters == 80
    assert config.start_weight == pytest.approx(0.4 * 2.0 ** -18)
    assert config.consistency_weight == 0.4

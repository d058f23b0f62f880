import math

import numpy as np
import pytest
from scenes import install_variables, random_instance, random_variables

from mscon import DenseReference, SolverConfig, build_pyramid, make_planar_disparity
from mscon.solver import (
    SolverState,
    downsweep,
    evaluate_cost,
    evaluate_cost_split,
    run,
    update_regions,
    upsweep,
)


def test_split_cost_equals_direct_objective(rng):
    pyramid, model, state, quads, outlier_costs = random_instance(rng, 24, 24, 2, outlier_level=4.0)
    coefs, inliers = random_variables(rng, pyramid, model)
    install_variables(state, coefs, inliers)
    downsweep(state)
    ref = DenseReference(24, 24, 2, 4, model)
    direct = ref.cost(coefs, inliers, quads, outlier_costs, 0.7)
    split = evaluate_cost(state, 0.7)
    assert split == pytest.approx(direct, rel=1e-10)


def test_consensus_minimizes_split_cost(rng):
    pyramid, model, state, quads, outlier_costs = random_instance(rng, 20, 20, 2, outlier_level=6.0)
    coefs, inliers = random_variables(rng, pyramid, model)
    install_variables(state, coefs, inliers)
    downsweep(state)
    at_consensus = evaluate_cost(state, 0.5)
    for _ in range(5):
        scene_z = rng.normal(size=(20, 20, 1))
        assert evaluate_cost_split(state, scene_z, 0.5) >= at_consensus - 1e-9


def test_data_free_update_recovers_planar_scene(rng):
    pyramid = build_pyramid(16, 16, 2)
    model = make_planar_disparity()
    state = SolverState.build(pyramid, model)
    truth = np.array([0.03, -0.07, 2.0])
    scene_z = np.einsum("hwdm,m->hwd", model.grid(16, 16), truth)
    upsweep(state, scene_z)
    update_regions(state, 0.4)
    for s in state.scales:
        np.testing.assert_allclose(s.coef, np.broadcast_to(truth, s.coef.shape),
                                   rtol=1e-9, atol=1e-9)
        assert s.inlier.all()
    # a second weight gives identical coefficients: no data term to trade off
    update_regions(state, 0.01)
    np.testing.assert_allclose(state.scales[0].coef[3, 3], truth, rtol=1e-9, atol=1e-9)


def test_fit_on_outlier_threshold_stays_inlier():
    pyramid = build_pyramid(8, 8, 1)
    model = make_planar_disparity()
    ny, nx = pyramid.grid_shape(0)
    gram_a = np.tile(np.eye(3), (ny, nx, 1, 1))
    corr_b = np.zeros((ny, nx, 3))
    const_c = np.full((ny, nx), 2.0)
    const_c[0, 1] = np.nextafter(2.0, 3.0)
    outlier_costs = [np.full((ny, nx), 2.0)]
    state = SolverState.build(pyramid, model, [(gram_a, corr_b, const_c)], outlier_costs)
    upsweep(state, np.zeros((8, 8, 1)))
    update_regions(state, 0.5)
    inl = state.scales[0].inlier
    # minimized fit equals const_c exactly; ties stay in, strict excess leaves
    assert not inl[0, 1]
    assert inl.sum() == ny * nx - 1


def test_degenerate_system_forces_outlier(rng):
    pyramid = build_pyramid(8, 8, 1)
    model = make_planar_disparity()
    ny, nx = pyramid.grid_shape(0)
    gram_a = np.tile(np.eye(3), (ny, nx, 1, 1))
    gram_a[0, 0] = 0.0
    quads = [(gram_a, np.zeros((ny, nx, 3)), np.zeros((ny, nx)))]
    state = SolverState.build(pyramid, model, quads, [np.full((ny, nx), 1.0)])
    sentinel = np.full((ny, nx, 3), 7.0)
    install_variables(state, [sentinel], [np.ones((ny, nx), dtype=bool)])
    upsweep(state, np.zeros((8, 8, 1)))
    update_regions(state, 0.0)
    s = state.scales[0]
    assert state.degenerate_events == 1
    assert not s.inlier[0, 0]
    np.testing.assert_allclose(s.coef[0, 0], [7.0, 7.0, 7.0])
    # the healthy regions solved normally and kept their zero-cost fit
    assert s.inlier[1:].all()
    # same weight reuses the cache, a regular weight clears the flag
    update_regions(state, 0.0)
    assert state.degenerate_events == 1
    update_regions(state, 0.1)
    assert state.degenerate_events == 1
    assert not s.degenerate.any()


def test_all_outlier_run_holds_initial_scene(rng):
    # without data terms the minimized fit is a nonnegative residual, so a
    # negative outlier cost rejects every region and the scene never moves
    pyramid = build_pyramid(16, 16, 2)
    model = make_planar_disparity()
    config = SolverConfig(consistency_weight=0.4, max_iters=2, audit_every=1)
    scene0 = rng.normal(size=(16, 16, 1))
    result = run(config, pyramid, model, None, -1.0, scene0)
    np.testing.assert_array_equal(result.scene.z, scene0)
    assert result.scene.count.max() == 0
    total_regions = sum(pyramid.num_regions(k) for k in range(2))
    assert sum(result.trace[-1].outliers) == total_regions
    assert result.trace[-1].cost == pytest.approx(-float(total_regions))


def test_fixed_weight_descent_is_monotone(rng):
    for seed in range(3):
        local = np.random.default_rng(900 + seed)
        pyramid, model, _, quads, outlier_costs = random_instance(local, 24, 24, 2, outlier_level=8.0)
        config = SolverConfig(consistency_weight=0.6, max_iters=12, audit_every=1)
        scene0 = local.normal(size=(24, 24, 1))
        result = run(config, pyramid, model, quads, outlier_costs, scene0)
        costs = [row.cost for row in result.trace]
        for prev, cur in zip(costs, costs[1:]):
            assert cur <= prev + 1e-9 * max(1.0, abs(prev))


def test_weight_schedule_and_audit_cadence(rng):
    pyramid, model, _, quads, outlier_costs = random_instance(rng, 16, 16, 2)
    config = SolverConfig(
        consistency_weight=0.8,
        start_weight=0.8 / 64,
        weight_growth=4.0,
        growth_interval=2,
        max_iters=8,
        audit_every=4,
    )
    result = run(config, pyramid, model, quads, outlier_costs, np.zeros((16, 16, 1)))
    weights = [row.weight for row in result.trace]
    f = 0.8
    np.testing.assert_allclose(
        weights, [f / 64, f / 64, f / 16, f / 16, f / 4, f / 4, f, f]
    )
    for row in result.trace:
        if row.iteration % 4 == 0:
            assert math.isfinite(row.cost)
        else:
            assert math.isnan(row.cost)


def test_weight_never_exceeds_final(rng):
    pyramid, model, _, quads, outlier_costs = random_instance(rng, 16, 16, 2)
    config = SolverConfig(
        consistency_weight=0.4,
        start_weight=0.4 / 8,
        weight_growth=64.0,
        growth_interval=1,
        max_iters=4,
        audit_every=0,
    )
    result = run(config, pyramid, model, quads, outlier_costs, np.zeros((16, 16, 1)))
    assert [row.weight for row in result.trace] == [0.4 / 8, 0.4, 0.4, 0.4]
    # audit_every=0 still audits the final iteration
    assert math.isfinite(result.trace[-1].cost)
    assert all(math.isnan(row.cost) for row in result.trace[:-1])


def test_hooks_observe_and_edit(rng):
    pyramid, model, _, quads, outlier_costs = random_instance(rng, 16, 16, 2)
    config = SolverConfig(consistency_weight=0.4, max_iters=3, audit_every=1)
    seen = []

    from mscon.solver import Hooks

    def observer(it, scene, state, weight):
        seen.append((it, float(weight)))

    def edit(scene):
        out = scene.copy()
        out.z[...] = 5.0
        return out

    result = run(config, pyramid, model, quads, outlier_costs, np.zeros((16, 16, 1)),
                 hooks=Hooks(observer=observer, scene_edits={3: edit}))
    assert [it for it, _ in seen] == [1, 2, 3]
    # an edit on the last iteration is returned as the final scene
    np.testing.assert_array_equal(result.scene.z, 5.0)


def test_run_rejects_mismatched_scene(rng):
    pyramid, model, _, quads, outlier_costs = random_instance(rng, 16, 16, 2)
    config = SolverConfig(consistency_weight=0.4, max_iters=1)
    with pytest.raises(ValueError):
        run(config, pyramid, model, quads, outlier_costs, np.zeros((8, 16, 1)))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(consistency_weight=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(consistency_weight=0.4, weight_growth=0.5)
    with pytest.raises(ValueError):
        SolverConfig(consistency_weight=0.4, max_iters=0)

"""Binocular stereo assembled on the consensus machinery.

Pipeline: semi-dense matcher seed (or an externally supplied one), per-region
quadratic data costs weighted by seed confidence, texture-adaptive outlier
costs, row-filled scene initialization, then the annealed alternating
minimization with an occlusion edit late in the schedule.  The scene model is
a disparity plane per region; coordinates inside the basis are divided by the
larger image dimension so the 3x3 region systems stay well conditioned.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import solver
from .boxsum import quadrant_sum, window_sum
from .local_model import make_planar_disparity
from .region_pyramid import build_pyramid
from .sgm_seed import SgmParams, classify_weights, compute_seed
from .solver import Hooks, SceneMap, SolverConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StereoParams:
    """Stereo schedule and cost parameters.

    The consistency weight is annealed from ``consistency_weight *
    start_weight_scale`` up to ``consistency_weight``, multiplying by
    ``weight_growth`` every ``growth_interval`` iterations.  The occlusion
    edit fires once, after ``occlusion_iteration`` iterations, with
    ``post_occlusion_iterations`` further iterations to absorb it.
    """

    base_outlier_cost: float = 1.44
    consistency_weight: float = 0.4
    start_weight_scale: float = 2.0 ** -18
    weight_growth: float = 8.0
    growth_interval: int = 6
    occlusion_iteration: int = 50
    post_occlusion_iterations: int = 30
    occlusion_correction: bool = True
    num_scales: int = 5
    finest_side: int = 4
    jump_threshold: float = 1.0
    audit_every: int = 1

    def __post_init__(self):
        if self.base_outlier_cost <= 0:
            raise ValueError("base_outlier_cost must be positive")
        if not 0.0 < self.start_weight_scale <= 1.0:
            raise ValueError("start_weight_scale must lie in (0, 1]")
        if self.occlusion_iteration < 1 or self.post_occlusion_iterations < 1:
            raise ValueError("occlusion must fire at least one iteration before the end")

    @property
    def total_iterations(self):
        return self.occlusion_iteration + self.post_occlusion_iterations

    def solver_config(self):
        w = self.consistency_weight
        return SolverConfig(
            consistency_weight=w,
            start_weight=w * self.start_weight_scale,
            weight_growth=self.weight_growth,
            growth_interval=self.growth_interval,
            max_iters=self.total_iterations,
            audit_every=self.audit_every,
        )


@dataclass
class VarianceTable:
    """Per-region intensity statistics feeding the outlier costs.

    ``variance`` holds the population variance of left-image gray values over
    each region; ``sharer_count`` the number of same-scale regions sharing at
    least one child whose variance is strictly lower.  Low-variance regions
    among higher-variance peers are texture-poor and get their outlier cost
    reduced, making them easier to discard.
    """

    variance: list
    sharer_count: list


def build_variance_table(gray, pyramid):
    g = np.asarray(gray, dtype=np.float64)
    if g.shape != (pyramid.height, pyramid.width):
        raise ValueError("image does not match the pyramid grid")
    sums = [window_sum(g, pyramid.side(0))]
    sqs = [window_sum(g * g, pyramid.side(0))]
    for k in range(1, pyramid.num_scales):
        step = pyramid.side(k - 1)
        shape = pyramid.grid_shape(k)
        sums.append(quadrant_sum(sums[k - 1], step, shape))
        sqs.append(quadrant_sum(sqs[k - 1], step, shape))
    variance = []
    for k in range(pyramid.num_scales):
        n = pyramid.side(k) ** 2
        mean = sums[k] / n
        variance.append(np.maximum(sqs[k] / n - mean * mean, 0.0))
    sharer_count = [np.zeros(pyramid.grid_shape(0), dtype=np.int64)]
    for k in range(1, pyramid.num_scales):
        var = variance[k]
        s = pyramid.side(k - 1)  # same-scale regions offset by a child side share children
        ny, nx = var.shape
        padded = np.pad(var, s, constant_values=np.inf)
        count = np.zeros((ny, nx), dtype=np.int64)
        for dy in (-s, 0, s):
            for dx in (-s, 0, s):
                if dy == 0 and dx == 0:
                    continue
                nb = padded[s + dy : s + dy + ny, s + dx : s + dx + nx]
                count += nb < var
        sharer_count.append(count)
    return VarianceTable(variance=variance, sharer_count=sharer_count)


def build_outlier_costs(gray, pyramid, base_cost):
    """Per-region outlier costs: base_cost * region size * texture factor.

    The factor is max(0.5, exp(-0.25 * sharer_count^2)): one lower-variance
    child-sharer costs 0.7788 of the plain price, two or more clamp at half.
    Returns the per-scale cost arrays and the VarianceTable behind them.
    """
    table = build_variance_table(gray, pyramid)
    costs = []
    for k in range(pyramid.num_scales):
        size = pyramid.side(k) ** 2
        v = table.sharer_count[k].astype(np.float64)
        factor = np.maximum(0.5, np.exp(-0.25 * v * v))
        costs.append(base_cost * size * factor)
    return costs, table


def build_data_quadratics(seed, model, pyramid):
    """Per-region quadratic data costs from the weighted seed.

    For coefficient vector t the region's data cost is t'At - 2b't + c with
    A, b, c the weight-multiplied sums of basis/seed products over the
    region's pixels; invalid pixels carry weight 0 and vanish regardless of
    their stored disparity.  Accumulation is hierarchical: finest scale sums
    pixels, parents sum children.
    """
    if model.d != 1:
        raise ValueError("data quadratics assume a single-channel scene model")
    u = model.grid(pyramid.width, pyramid.height)
    w = seed.weight
    zf = seed.z[..., None]
    a_pix = np.einsum("hw,hwdi,hwdj->hwij", w, u, u)
    b_pix = np.einsum("hw,hwdi,hwd->hwi", w, u, zf)
    c_pix = w * seed.z * seed.z
    side0 = pyramid.side(0)
    quads = [(window_sum(a_pix, side0), window_sum(b_pix, side0), window_sum(c_pix, side0))]
    for k in range(1, pyramid.num_scales):
        step = pyramid.side(k - 1)
        shape = pyramid.grid_shape(k)
        quads.append(tuple(quadrant_sum(part, step, shape) for part in quads[k - 1]))
    return quads


def _nearest_valid_fill(values, valid):
    """Per-row nearest-valid lookup; distance ties take the lower value.

    Returns (filled, has): entries of rows with no valid pixel come back
    unchanged with has=False.
    """
    h, w = values.shape
    pos = np.broadcast_to(np.arange(w)[None, :], (h, w))
    left = np.maximum.accumulate(np.where(valid, pos, -1), axis=1)
    rev = np.maximum.accumulate(np.where(valid[:, ::-1], pos, -1), axis=1)[:, ::-1]
    right = np.where(rev >= 0, w - 1 - rev, -1)
    far = w + 1
    dist_l = np.where(left >= 0, pos - left, far)
    dist_r = np.where(right >= 0, right - pos, far)
    lv = np.take_along_axis(values, np.maximum(left, 0), axis=1)
    rv = np.take_along_axis(values, np.maximum(right, 0), axis=1)
    use_left = (dist_l < dist_r) | ((dist_l == dist_r) & (lv <= rv))
    has = (left >= 0) | (right >= 0)
    filled = np.where(has, np.where(use_left, lv, rv), values)
    return filled, has


def initialize_scene(seed):
    """Dense starting scene: seed values with holes row-filled.

    Rows without any valid pixel fall back to their column's nearest valid
    seed value, and pixels still uncovered take the global median.  The same
    tie rule (equidistant neighbors take the lower disparity) applies in both
    passes.
    """
    if not seed.valid.any():
        raise ValueError("seed field has no valid pixels")
    z0, filled = _nearest_valid_fill(seed.z, seed.valid)
    if not filled.all():
        zc, fc = _nearest_valid_fill(seed.z.T, seed.valid.T)
        z0 = np.where(filled, z0, zc.T)
        filled |= fc.T
        if not filled.all():
            z0 = np.where(filled, z0, np.median(seed.z[seed.valid]))
    return SceneMap.from_values(z0)


def occlusion_correct(scene, seed):
    """Pull estimates at seed-invalid pixels down to the local background.

    Each invalid pixel takes the minimum of its current value and the seed
    disparity of the nearest valid pixel on its row (equidistant neighbors
    resolve to the lower disparity).  Valid pixels and rows without any valid
    pixel are untouched; no value ever increases.
    """
    background, has = _nearest_valid_fill(seed.z, seed.valid)
    z = scene.z.copy()
    target = ~seed.valid & has
    z[..., 0][target] = np.minimum(z[..., 0][target], background[target])
    return SceneMap(z=z, count=scene.count.copy())


@dataclass
class StereoResult:
    scene: SceneMap
    state: solver.SolverState
    trace: list
    seed: object
    pyramid: object
    model: object
    params: StereoParams
    variance: VarianceTable

    @property
    def disparity(self):
        return self.scene.scalar()

    @property
    def confidence(self):
        return self.scene.count


def run_stereo(left, right=None, params=None, sgm_params=None, seed=None, observer=None):
    """Full pipeline; pass ``seed`` to skip matching (``right`` then optional).

    The left image always participates: it drives the texture term of the
    outlier costs.  Returns the final consensus scene plus everything needed
    for diagnostics and evaluation.
    """
    params = params or StereoParams()
    left = np.asarray(left, dtype=np.float64)
    if left.ndim != 2:
        raise ValueError("left image must be single-channel")
    if seed is None:
        if right is None:
            raise ValueError("need either a right image or a precomputed seed")
        seed = compute_seed(left, np.asarray(right, dtype=np.float64), sgm_params or SgmParams())
        seed = classify_weights(seed, params.jump_threshold)
    if seed.z.shape != left.shape:
        raise ValueError("seed does not match the image grid")
    h, w = left.shape
    pyramid = build_pyramid(w, h, params.num_scales, params.finest_side)
    model = make_planar_disparity(coord_scale=float(max(w, h)))
    quads = build_data_quadratics(seed, model, pyramid)
    costs, variance = build_outlier_costs(left, pyramid, params.base_outlier_cost)
    scene0 = initialize_scene(seed)
    edits = {}
    if params.occlusion_correction:
        edits[params.occlusion_iteration] = lambda sc: occlusion_correct(sc, seed)
    out = solver.run(
        params.solver_config(),
        pyramid,
        model,
        quads,
        costs,
        scene0,
        hooks=Hooks(observer=observer, scene_edits=edits),
    )
    return StereoResult(
        scene=out.scene,
        state=out.state,
        trace=out.trace,
        seed=seed,
        pyramid=pyramid,
        model=model,
        params=params,
        variance=variance,
    )

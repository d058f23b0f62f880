"""Alternating minimization over the region pyramid.

One iteration: aggregate per-region consistency terms from the current scene
map (finest scale sums its own pixels, coarser scales sum their four
children), solve every region's small linear system and test it against its
outlier cost, accumulate the coefficient and inlier sums down the hierarchy,
and rebuild the scene map as the per-pixel mean prediction of inlying
covering regions.  All per-region work at one scale is expressed as batched
array operations over the dense anchor grid, so regions never exist as
individual objects in the hot path.

Numeric conventions: coefficients, aggregates, and factorizations are
float64; inlier counts are exact int64.  All reductions have a fixed order,
so repeated runs are bitwise reproducible.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .boxsum import parent_scatter, quadrant_sum, scatter_sum, window_sum

logger = logging.getLogger(__name__)

# Relative determinant floor below which a region's system is declared
# degenerate and the region forced outlier instead of solved.
_DET_RTOL = 1e-12


@dataclass
class SceneMap:
    """Scene field over the pixel grid plus per-pixel consensus degree.

    ``z`` has shape (H, W, d); ``count`` holds the number of inlying regions
    covering each pixel, 0 marking pixels whose value is not defined by any
    inlier (they carry a fill value chosen by the producer).
    """

    z: np.ndarray
    count: np.ndarray

    @property
    def height(self):
        return self.z.shape[0]

    @property
    def width(self):
        return self.z.shape[1]

    def scalar(self):
        """(H, W) view of a single-channel field."""
        if self.z.shape[2] != 1:
            raise ValueError("scalar() requires a single-channel scene map")
        return self.z[..., 0]

    def copy(self):
        return SceneMap(self.z.copy(), self.count.copy())

    @classmethod
    def from_values(cls, values, d=None):
        """Wrap raw values; a 2-D array becomes a single-channel field."""
        z = np.asarray(values, dtype=np.float64)
        if z.ndim == 2:
            z = z[..., None]
        if d is not None and z.shape[2] != d:
            raise ValueError(f"expected {d} channels, got {z.shape[2]}")
        return cls(z=z, count=np.zeros(z.shape[:2], dtype=np.int64))


@dataclass
class SolverConfig:
    """Iteration schedule for the consistency weight.

    The weight starts at ``start_weight`` and is multiplied by
    ``weight_growth`` every ``growth_interval`` iterations until it reaches
    ``consistency_weight``; ``start_weight=None`` disables annealing.  The
    region threshold test always uses the current (annealed) weight, so the
    objective actually minimized during a plateau is the one descended.
    ``audit_every`` controls how often the full cost is evaluated (1 = every
    iteration; the final iteration is always audited).
    """

    consistency_weight: float
    start_weight: float | None = None
    weight_growth: float = 8.0
    growth_interval: int = 6
    max_iters: int = 80
    audit_every: int = 10

    def __post_init__(self):
        if self.consistency_weight <= 0:
            raise ValueError("consistency_weight must be positive")
        if self.start_weight is not None and self.start_weight > self.consistency_weight:
            raise ValueError("start_weight must not exceed consistency_weight")
        if self.weight_growth <= 1:
            raise ValueError("weight_growth must be > 1")
        if self.growth_interval < 1:
            raise ValueError("growth_interval must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.audit_every < 0:
            raise ValueError("audit_every must be >= 0")

    @property
    def initial_weight(self):
        return self.consistency_weight if self.start_weight is None else self.start_weight


@dataclass
class ScaleState:
    """Per-region variables for one scale, stored over the anchor grid."""

    gram: np.ndarray        # (ny, nx, M, M) basis Gram matrix
    data_gram: np.ndarray   # (ny, nx, M, M) quadratic data-cost matrix
    data_corr: np.ndarray   # (ny, nx, M) data-cost linear term
    data_const: np.ndarray  # (ny, nx) data-cost constant
    outlier_cost: np.ndarray
    coef: np.ndarray        # (ny, nx, M) current model coefficients
    inlier: np.ndarray      # (ny, nx) bool
    corr: np.ndarray        # (ny, nx, M) scene/basis correlation
    energy: np.ndarray      # (ny, nx) scene squared norm over the region
    coef_acc: np.ndarray    # (ny, nx, M) parent-accumulated coef sums
    inlier_acc: np.ndarray  # (ny, nx) int64 parent-accumulated inlier counts
    degenerate: np.ndarray  # (ny, nx) bool, singular system at current weight
    solve_inv: np.ndarray | None = None
    solve_weight: float | None = None  # weight the cached inverse was built for


@dataclass
class RegionView:
    """Read-only snapshot of a single region's variables (diagnostics)."""

    scale: int
    x: int
    y: int
    coef: np.ndarray
    inlier: bool
    corr: np.ndarray
    energy: float
    coef_acc: np.ndarray
    inlier_acc: int
    gram: np.ndarray
    outlier_cost: float


class SolverState:
    """All per-region variables plus the shared basis field."""

    def __init__(self, pyramid, model, scales, u_field):
        self.pyramid = pyramid
        self.model = model
        self.scales = scales
        self.u_field = u_field
        self.degenerate_events = 0

    @classmethod
    def build(cls, pyramid, model, data_quads=None, outlier_costs=None):
        """Allocate state and precompute the per-region Gram matrices.

        ``data_quads`` is a per-scale list of (matrix, linear, constant)
        arrays, or None for regions with no data term.  ``outlier_costs`` is
        a per-scale list of arrays or a scalar applied everywhere.
        """
        u = model.grid(pyramid.width, pyramid.height)
        m = model.M
        gram_pixel = np.einsum("hwdi,hwdj->hwij", u, u)
        grams = [window_sum(gram_pixel, pyramid.side(0))]
        for k in range(1, pyramid.num_scales):
            grams.append(
                quadrant_sum(grams[k - 1], pyramid.side(k - 1), pyramid.grid_shape(k))
            )
        scales = []
        for k in range(pyramid.num_scales):
            ny, nx = pyramid.grid_shape(k)
            if data_quads is None:
                dg = np.zeros((ny, nx, m, m))
                dc = np.zeros((ny, nx, m))
                dk = np.zeros((ny, nx))
            else:
                dg, dc, dk = (np.asarray(a, dtype=np.float64) for a in data_quads[k])
            if outlier_costs is None:
                oc = np.full((ny, nx), np.inf)
            elif np.isscalar(outlier_costs):
                oc = np.full((ny, nx), float(outlier_costs))
            else:
                oc = np.asarray(outlier_costs[k], dtype=np.float64)
            scales.append(
                ScaleState(
                    gram=grams[k],
                    data_gram=dg,
                    data_corr=dc,
                    data_const=dk,
                    outlier_cost=oc,
                    coef=np.zeros((ny, nx, m)),
                    inlier=np.ones((ny, nx), dtype=bool),
                    corr=np.zeros((ny, nx, m)),
                    energy=np.zeros((ny, nx)),
                    coef_acc=np.zeros((ny, nx, m)),
                    inlier_acc=np.zeros((ny, nx), dtype=np.int64),
                    degenerate=np.zeros((ny, nx), dtype=bool),
                )
            )
        return cls(pyramid, model, scales, u)

    def region(self, k, x, y):
        """Snapshot of one region's variables, for tests and diagnostics."""
        s = self.scales[k]
        return RegionView(
            scale=k,
            x=x,
            y=y,
            coef=s.coef[y, x].copy(),
            inlier=bool(s.inlier[y, x]),
            corr=s.corr[y, x].copy(),
            energy=float(s.energy[y, x]),
            coef_acc=s.coef_acc[y, x].copy(),
            inlier_acc=int(s.inlier_acc[y, x]),
            gram=s.gram[y, x].copy(),
            outlier_cost=float(s.outlier_cost[y, x]),
        )

    def outlier_counts(self):
        return tuple(int((~s.inlier).sum()) for s in self.scales)


def consistency_terms(pyramid, u_field, scene_z):
    """Per-region correlation and energy sums via the child recursion.

    Finest-scale regions sum their own pixels; every coarser region sums its
    four children.  Returns per-scale lists.
    """
    z = np.asarray(scene_z, dtype=np.float64)
    proj = np.einsum("hwdm,hwd->hwm", u_field, z)
    sq = np.sum(z * z, axis=-1)
    corr = [window_sum(proj, pyramid.side(0))]
    energy = [window_sum(sq, pyramid.side(0))]
    for k in range(1, pyramid.num_scales):
        step = pyramid.side(k - 1)
        shape = pyramid.grid_shape(k)
        corr.append(quadrant_sum(corr[k - 1], step, shape))
        energy.append(quadrant_sum(energy[k - 1], step, shape))
    return corr, energy


def upsweep(state, scene_z):
    """Refresh every region's consistency terms from the scene map."""
    corr, energy = consistency_terms(state.pyramid, state.u_field, scene_z)
    for s, ck, ek in zip(state.scales, corr, energy):
        s.corr = ck
        s.energy = ek


def _refresh_solve_cache(state, weight):
    """(Re)build the cached inverses of (data_gram + weight * gram).

    Regions whose system is numerically singular are flagged degenerate; they
    will be forced outlier with coefficients left untouched.
    """
    for s in state.scales:
        if s.solve_weight == weight and s.solve_inv is not None:
            continue
        system = s.data_gram + weight * s.gram
        det = np.linalg.det(system)
        det_scale = np.prod(np.abs(system).max(axis=-1), axis=-1)
        ok = np.abs(det) > _DET_RTOL * det_scale
        ok &= det_scale > 0
        n_bad = int((~ok).sum())
        if n_bad:
            state.degenerate_events += n_bad
            logger.warning(
                "%d region system(s) singular at weight %.3g; forcing outlier", n_bad, weight
            )
            system = system.copy()
            system[~ok] = np.eye(s.gram.shape[-1])
        s.solve_inv = np.linalg.inv(system)
        s.degenerate = ~ok
        s.solve_weight = weight


def _quad(coef, gram, corr, const):
    """Evaluate coef^T gram coef - 2 corr^T coef + const over the grid."""
    return (
        np.einsum("yxi,yxij,yxj->yx", coef, gram, coef)
        - 2.0 * np.einsum("yxi,yxi->yx", corr, coef)
        + const
    )


def update_regions(state, weight):
    """Best-fit coefficients and inlier decisions for every region.

    Minimizes the data term plus ``weight`` times the consistency term; a
    region becomes an outlier only when that minimized fit strictly exceeds
    its outlier cost.  The system inverses are cached per weight value.
    """
    _refresh_solve_cache(state, weight)
    for s in state.scales:
        rhs = s.data_corr + weight * s.corr
        coef = np.einsum("yxij,yxj->yxi", s.solve_inv, rhs)
        if s.degenerate.any():
            coef[s.degenerate] = s.coef[s.degenerate]
        fit = _quad(coef, s.data_gram, s.data_corr, s.data_const) + weight * _quad(
            coef, s.gram, s.corr, s.energy
        )
        inlier = fit <= s.outlier_cost
        inlier[s.degenerate] = False
        s.coef = coef
        s.inlier = inlier


def accumulate_down(pyramid, coef_list, inlier_list):
    """Parent-to-child accumulation of coefficient and inlier-count sums."""
    top = pyramid.num_scales - 1
    coef_acc = [None] * pyramid.num_scales
    count_acc = [None] * pyramid.num_scales
    coef_acc[top] = coef_list[top] * inlier_list[top][..., None]
    count_acc[top] = inlier_list[top].astype(np.int64)
    for k in range(top - 1, -1, -1):
        step = pyramid.side(k)
        shape = pyramid.grid_shape(k)
        own = coef_list[k] * inlier_list[k][..., None]
        coef_acc[k] = own + parent_scatter(coef_acc[k + 1], step, shape)
        count_acc[k] = inlier_list[k].astype(np.int64) + parent_scatter(
            count_acc[k + 1], step, shape
        )
    return coef_acc, count_acc


def downsweep(state):
    """Store the accumulated sums that let the finest scale speak for all."""
    coef_acc, count_acc = accumulate_down(
        state.pyramid,
        [s.coef for s in state.scales],
        [s.inlier for s in state.scales],
    )
    for s, ca, na in zip(state.scales, coef_acc, count_acc):
        s.coef_acc = ca
        s.inlier_acc = na


def consensus_from_sums(pyramid, u_field, coef_acc0, count_acc0, fill=None):
    side = pyramid.side(0)
    coef_sum = scatter_sum(coef_acc0, side)
    count = scatter_sum(count_acc0, side)
    pred = np.einsum("hwdm,hwm->hwd", u_field, coef_sum)
    z = np.zeros_like(pred)
    if fill is not None:
        z[...] = fill
    covered = count > 0
    z[covered] = pred[covered] / count[covered, None]
    return SceneMap(z=z, count=count)


def reconstruct_consensus(state, fill=None):
    """Scene map as the mean prediction of inlying covering regions.

    Requires a completed downsweep.  Pixels covered by no inlier keep
    ``fill`` (an array or scalar; default 0) and are marked by count 0.
    """
    s0 = state.scales[0]
    return consensus_from_sums(state.pyramid, state.u_field, s0.coef_acc, s0.inlier_acc, fill)


def _cost_from_terms(state, corr_list, energy_list, weight):
    total = 0.0
    for s, ck, ek in zip(state.scales, corr_list, energy_list):
        data_fit = _quad(s.coef, s.data_gram, s.data_corr, s.data_const)
        cons_fit = _quad(s.coef, s.gram, ck, ek)
        inl = s.inlier
        total += float(np.sum(np.where(inl, data_fit + weight * cons_fit, s.outlier_cost)))
    return total


def evaluate_cost_split(state, scene_z, weight):
    """Cost of the current region variables against an explicit scene map.

    Outliers pay their outlier cost; inliers pay their data fit plus
    ``weight`` times their summed squared deviation from ``scene_z``,
    evaluated through the per-region quadratic forms.
    """
    corr, energy = consistency_terms(state.pyramid, state.u_field, scene_z)
    return _cost_from_terms(state, corr, energy, weight)


def evaluate_cost(state, weight):
    """The consensus objective of the current region variables.

    The per-pixel spread term (count times the population variance of the
    inlying predictions) is evaluated through the identity that makes it
    equal the inlier deviation sums against the consensus map, so the audit
    costs one sweep rather than a dense enumeration.  Pixels covered by no
    inlier contribute nothing.
    """
    coef_acc, count_acc = accumulate_down(
        state.pyramid,
        [s.coef for s in state.scales],
        [s.inlier for s in state.scales],
    )
    scene = consensus_from_sums(state.pyramid, state.u_field, coef_acc[0], count_acc[0])
    return evaluate_cost_split(state, scene.z, weight)


@dataclass
class TraceRow:
    iteration: int
    weight: float
    cost: float  # NaN when the iteration was not audited
    outliers: tuple
    degenerate_events: int


@dataclass
class Hooks:
    """Application intervention points.

    ``observer(iteration, scene, state, weight)`` runs after every consensus
    reconstruction, before any scene edit.  ``scene_edits`` maps an iteration
    number to a function receiving the SceneMap and returning the edited one;
    the edit feeds the next iteration.
    """

    observer: object = None
    scene_edits: dict = field(default_factory=dict)


@dataclass
class RunResult:
    scene: SceneMap
    state: SolverState
    trace: list


def run(config, pyramid, model, data_quads, outlier_costs, scene0, hooks=None):
    """Execute the full alternating minimization.

    Per iteration: upsweep, per-region update at the current weight,
    downsweep, consensus reconstruction (uncovered pixels hold their previous
    value), hooks, then the weight schedule step.  The recorded cost is
    always evaluated at the final consistency weight, whatever the annealed
    weight of the iteration.  Degenerate region systems are diagnostics, not
    errors; the run never aborts on them.
    """
    state = SolverState.build(pyramid, model, data_quads, outlier_costs)
    z0 = np.asarray(scene0.z if isinstance(scene0, SceneMap) else scene0, dtype=np.float64)
    if z0.ndim == 2:
        z0 = z0[..., None]
    if z0.shape != (pyramid.height, pyramid.width, model.d):
        raise ValueError("initial scene map does not match the image grid")
    scene = SceneMap(z=z0.copy(), count=np.zeros(z0.shape[:2], dtype=np.int64))
    weight = config.initial_weight
    trace = []
    for it in range(1, config.max_iters + 1):
        upsweep(state, scene.z)
        update_regions(state, weight)
        downsweep(state)
        scene = reconstruct_consensus(state, fill=scene.z)
        audit = it == config.max_iters or (
            config.audit_every > 0 and it % config.audit_every == 0
        )
        cost = evaluate_cost(state, config.consistency_weight) if audit else math.nan
        trace.append(
            TraceRow(
                iteration=it,
                weight=weight,
                cost=cost,
                outliers=state.outlier_counts(),
                degenerate_events=state.degenerate_events,
            )
        )
        if hooks is not None:
            if hooks.observer is not None:
                hooks.observer(it, scene, state, weight)
            edit = hooks.scene_edits.get(it)
            if edit is not None:
                scene = edit(scene)
        if it % config.growth_interval == 0:
            weight = min(weight * config.weight_growth, config.consistency_weight)
    return RunResult(scene=scene, state=state, trace=trace)

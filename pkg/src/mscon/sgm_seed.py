"""Semi-global stereo matcher producing the semi-dense disparity seed.

The matching cost blends a census-transform Hamming distance with a capped
absolute difference of horizontal intensity gradients.  Costs are aggregated
along eight scanline directions with the usual two-tier smoothness penalty
(small for one-level disparity changes, large and inversely scaled by the
intensity step for bigger jumps), followed by winner-take-all selection and
a left-right consistency check.  Pixels failing the check are invalid; they
approximate half-occlusions and drive the occlusion handling downstream.

This is a deliberately plain matcher: the consensus stage is the component
under study, and any semi-dense LR-checked seed source can replace this one
through ``load_seed``.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import imageio.v3 as iio
import numpy as np

logger = logging.getLogger(__name__)

# Path directions (dy, dx); aggregation sums all eight.
_DIRECTIONS = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))

# Sidecar weight image encoding: {0, 1/4, 1} as 8-bit {0, 64, 255}.
_WEIGHT_CODES = ((0.0, 0), (0.25, 64), (1.0, 255))


@dataclass(frozen=True)
class SgmParams:
    """Matcher configuration; defaults are ordinary SGM practice."""

    max_disparity: int = 256
    census_window: int = 5
    cost_alpha: float = 0.7
    grad_cap: float = 8.0
    p1: float = 7.0
    p2: float = 100.0
    lr_tolerance: int = 1

    def __post_init__(self):
        if self.max_disparity < 1:
            raise ValueError("max_disparity must be >= 1")
        if self.census_window < 3 or self.census_window % 2 == 0:
            raise ValueError("census_window must be odd and >= 3")
        if self.census_window ** 2 - 1 > 32:
            raise ValueError("census descriptor exceeds 32 bits; window must be <= 5")
        if not 0.0 <= self.cost_alpha <= 1.0:
            raise ValueError("cost_alpha must lie in [0, 1]")
        if self.grad_cap <= 0:
            raise ValueError("grad_cap must be positive")
        if self.p1 <= 0 or self.p2 < self.p1:
            raise ValueError("penalties need 0 < p1 <= p2")
        if self.lr_tolerance < 0:
            raise ValueError("lr_tolerance must be >= 0")


@dataclass
class SeedField:
    """Semi-dense disparity estimates with validity and confidence weights.

    ``z`` holds left-frame disparities in pixels, ``valid`` the survivors of
    the consistency check, ``weight`` the per-pixel data-term weight in
    {0, 1/4, 1} with 0 exactly on invalid pixels.
    """

    z: np.ndarray
    valid: np.ndarray
    weight: np.ndarray

    @property
    def density(self):
        return float(self.valid.mean())

    def validate(self, max_disparity=None):
        """Raise unless the field invariants hold."""
        if not (self.z.shape == self.valid.shape == self.weight.shape):
            raise ValueError("seed component shapes differ")
        if np.any((self.weight == 0) != ~self.valid):
            raise ValueError("weight must be zero exactly on invalid pixels")
        if not np.isin(self.weight, [0.0, 0.25, 1.0]).all():
            raise ValueError("weights must lie in {0, 1/4, 1}")
        zv = self.z[self.valid]
        if zv.size and (zv.min() < 0 or (max_disparity is not None and zv.max() > max_disparity)):
            raise ValueError("valid disparities outside [0, max_disparity]")


def census_transform(gray, window=5):
    """Per-pixel descriptor: one bit per neighbor, set when neighbor < center.

    Bits are ordered row-major over the window with the center skipped;
    borders compare against edge-replicated samples.  Depends only on
    intensity ordering, so adding a constant to the image changes nothing.
    """
    g = np.asarray(gray, dtype=np.float64)
    r = window // 2
    padded = np.pad(g, r, mode="edge")
    h, w = g.shape
    code = np.zeros((h, w), dtype=np.uint32)
    bit = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[r + dy : r + dy + h, r + dx : r + dx + w]
            code |= (nb < g).astype(np.uint32) << np.uint32(bit)
            bit += 1
    return code


def matching_cost_volume(left, right, params):
    """(H, W, max_disparity + 1) float32 volume of raw matching costs.

    Candidate d matches left pixel (y, x) to right pixel (y, x - d);
    candidates reaching outside the right image carry the worst attainable
    cost so aggregation stays finite yet never prefers them.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape or left.ndim != 2:
        raise ValueError("need two equally sized grayscale images")
    h, w = left.shape
    if params.max_disparity >= w:
        raise ValueError(f"max_disparity {params.max_disparity} must be < image width {w}")
    census_l = census_transform(left, params.census_window)
    census_r = census_transform(right, params.census_window)
    grad_l = np.gradient(left, axis=1)
    grad_r = np.gradient(right, axis=1)
    bits = params.census_window ** 2 - 1
    worst = params.cost_alpha * bits + (1.0 - params.cost_alpha) * params.grad_cap
    vol = np.full((h, w, params.max_disparity + 1), worst, dtype=np.float32)
    for d in range(params.max_disparity + 1):
        ham = np.bitwise_count(census_l[:, d:] ^ census_r[:, : w - d])
        grad = np.minimum(np.abs(grad_l[:, d:] - grad_r[:, : w - d]), params.grad_cap)
        vol[:, d:, d] = params.cost_alpha * ham + (1.0 - params.cost_alpha) * grad
    return vol


def _sweep_forward(vol, gray, row_shift, p1, p2):
    """Path aggregation along direction (row_shift, +1), column by column.

    Rows whose predecessor falls off the image restart from the raw cost.
    The large penalty adapts per step: p2 / max(|intensity step|, 1), floored
    at 2 * p1 so it never undercuts the small penalty.
    """
    h, w, _ = vol.shape
    inf = np.float32(np.inf)
    out = np.empty_like(vol)
    out[:, 0] = vol[:, 0]
    for x in range(1, w):
        prev = out[:, x - 1]
        gray_prev = gray[:, x - 1]
        if row_shift == 1:
            prev = np.vstack([prev[:1], prev[:-1]])
            gray_prev = np.concatenate([gray_prev[:1], gray_prev[:-1]])
        elif row_shift == -1:
            prev = np.vstack([prev[1:], prev[-1:]])
            gray_prev = np.concatenate([gray_prev[1:], gray_prev[-1:]])
        step = np.abs(gray[:, x] - gray_prev)
        p2_eff = np.maximum(2.0 * p1, p2 / np.maximum(step, 1.0)).astype(np.float32)
        base = prev.min(axis=1)
        up = np.empty_like(prev)
        up[:, 1:] = prev[:, :-1] + p1
        up[:, 0] = inf
        down = np.empty_like(prev)
        down[:, :-1] = prev[:, 1:] + p1
        down[:, -1] = inf
        cand = np.minimum(np.minimum(prev, base[:, None] + p2_eff[:, None]), np.minimum(up, down))
        slab = vol[:, x] + cand - base[:, None]
        if row_shift == 1:
            slab[0] = vol[0, x]
        elif row_shift == -1:
            slab[-1] = vol[-1, x]
        out[:, x] = slab
    return out


def _aggregate_direction(vol, gray, dy, dx, p1, p2):
    transposed = dx == 0
    if transposed:
        vol, gray = vol.transpose(1, 0, 2), gray.T
        dy, dx = 0, dy
    flipped = dx < 0
    if flipped:
        vol, gray = vol[:, ::-1], gray[:, ::-1]
    out = _sweep_forward(np.ascontiguousarray(vol), np.ascontiguousarray(gray), dy, p1, p2)
    if flipped:
        out = out[:, ::-1]
    if transposed:
        out = out.transpose(1, 0, 2)
    return out


def aggregate_costs(vol, gray, params):
    """Sum of the eight directional path costs."""
    gray = np.asarray(gray, dtype=np.float64)
    p1 = np.float32(params.p1)
    p2 = np.float32(params.p2)
    total = np.zeros_like(vol)
    for dy, dx in _DIRECTIONS:
        total += _aggregate_direction(vol, gray, dy, dx, p1, p2)
    return total


def _right_disparity(aggregated):
    """Right-frame winner-take-all read out of the left-frame volume.

    Right pixel (y, xr) at disparity d corresponds to left pixel (y, xr + d),
    so its cost column is the diagonal slice of the aggregated volume and no
    second matching pass is needed.
    """
    h, w, nd = aggregated.shape
    costs = np.full((h, w, nd), np.inf, dtype=aggregated.dtype)
    for d in range(nd):
        costs[:, : w - d, d] = aggregated[:, d:, d]
    return np.argmin(costs, axis=2).astype(np.int64)


def compute_seed(left, right, params=None):
    """Full matcher: cost volume, 8-path aggregation, WTA, LR check.

    Returns a SeedField with weight 1 on every surviving pixel; run
    :func:`classify_weights` afterwards to down-weight discontinuities.
    """
    params = params or SgmParams()
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    vol = matching_cost_volume(left, right, params)
    aggregated = aggregate_costs(vol, left, params)
    d_left = np.argmin(aggregated, axis=2).astype(np.int64)
    d_right = _right_disparity(aggregated)
    h, w = left.shape
    xr = np.arange(w)[None, :] - d_left
    in_frame = xr >= 0
    partner = np.take_along_axis(d_right, np.clip(xr, 0, w - 1), axis=1)
    valid = in_frame & (np.abs(d_left - partner) <= params.lr_tolerance)
    z = d_left.astype(np.float64)
    z[~valid] = 0.0
    return SeedField(z=z, valid=valid, weight=valid.astype(np.float64))


def _shifted(a, dy, dx, fill):
    """a sampled at (y + dy, x + dx), out-of-range entries set to fill."""
    h, w = a.shape[:2]
    out = np.full_like(a, fill)
    ys = slice(max(-dy, 0), h - max(dy, 0))
    xs = slice(max(-dx, 0), w - max(dx, 0))
    ys_src = slice(max(dy, 0), h + min(dy, 0))
    xs_src = slice(max(dx, 0), w + min(dx, 0))
    out[ys, xs] = a[ys_src, xs_src]
    return out


def classify_weights(seed, jump_threshold=1.0):
    """Down-weight pixels sitting on a disparity discontinuity.

    A valid pixel gets weight 1/4 when any valid 8-neighbor differs in
    disparity by more than ``jump_threshold``, weight 1 otherwise; invalid
    pixels stay at 0.  An isolated valid pixel has nobody to disagree with
    and keeps weight 1.
    """
    disagree = np.zeros(seed.z.shape, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            nz = _shifted(seed.z, dy, dx, 0.0)
            nv = _shifted(seed.valid, dy, dx, False)
            disagree |= seed.valid & nv & (np.abs(seed.z - nz) > jump_threshold)
    weight = np.where(seed.valid, np.where(disagree, 0.25, 1.0), 0.0)
    return SeedField(z=seed.z.copy(), valid=seed.valid.copy(), weight=weight)


def _weight_sidecar(path):
    path = Path(path)
    return path.with_name(path.stem + ".weight.png")


def save_seed(seed, path):
    """Write the 16-bit disparity image (value = disparity * 256, 0 = invalid)
    plus the 8-bit weight sidecar.

    Disparities round to 1/256 px.  A valid pixel whose disparity rounds to 0
    becomes indistinguishable from invalid on disk; that lossiness is part of
    the sentinel format, not an error.  Values that would overflow 16 bits
    are refused.
    """
    path = Path(path)
    q = np.round(seed.z * 256.0)
    q = np.where(seed.valid, q, 0.0)
    if q.min() < 0 or q.max() > 65535:
        raise ValueError("disparity out of range for the 16-bit format")
    iio.imwrite(path, q.astype(np.uint16))
    codes = np.zeros(seed.weight.shape, dtype=np.uint8)
    for value, code in _WEIGHT_CODES:
        codes[seed.weight == value] = code
    iio.imwrite(_weight_sidecar(path), codes)


def load_seed(path, jump_threshold=1.0):
    """Read a seed written by :func:`save_seed` or by an external matcher.

    The disparity image is 16-bit with value = disparity * 256 and 0 marking
    invalid.  When the weight sidecar exists its codes are used; otherwise
    (the external-matcher case) weights are derived by the discontinuity
    rule, making foreign seeds drop-in usable.
    """
    raw = np.asarray(iio.imread(path))
    if raw.ndim != 2 or not np.issubdtype(raw.dtype, np.integer):
        raise ValueError(f"{path}: expected a single-channel integer disparity image")
    z = raw.astype(np.float64) / 256.0
    valid = raw > 0
    sidecar = _weight_sidecar(path)
    if sidecar.exists():
        codes = np.asarray(iio.imread(sidecar))
        if codes.shape != raw.shape:
            raise ValueError(f"{sidecar}: weight sidecar shape differs from disparity")
        weight = np.zeros(z.shape)
        known = np.zeros(z.shape, dtype=bool)
        for value, code in _WEIGHT_CODES:
            hit = codes == code
            weight[hit] = value
            known |= hit
        if not known.all():
            raise ValueError(f"{sidecar}: weight codes must be 0, 64, or 255")
        weight[~valid] = 0.0
        weight[valid & (weight == 0.0)] = 1.0
        return SeedField(z=z, valid=valid, weight=weight)
    return classify_weights(
        SeedField(z=z, valid=valid, weight=valid.astype(np.float64)), jump_threshold
    )

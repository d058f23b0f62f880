"""Brute-force reference implementations for the hierarchical machinery.

Everything here evaluates the defining summations region by region, with no
child/parent reuse anywhere, and serves as ground truth for the solver's
recursive sweeps and cost audit.  The loop-based paths refuse instances large
enough to make accidental use in production painful; the ``dense_*`` variants
are vectorized but still hierarchy-free, and exist so wall-clock comparisons
against the recursive sweeps can run at realistic sizes.
"""

import numpy as np

from .boxsum import scatter_sum, window_sum

MAX_SIDE = 64
MAX_SCALES = 3


class DenseReference:
    """Per-region reference computations over explicit patch extents.

    Shares only the ``LocalModel`` contract with the solver; all aggregation
    is re-derived here from the region definitions.  Single-threaded, double
    precision, fixed summation order.
    """

    def __init__(self, width, height, num_scales, finest_side, model):
        if width > MAX_SIDE or height > MAX_SIDE or num_scales > MAX_SCALES:
            raise ValueError(
                f"reference instance {width}x{height} with {num_scales} scales is too "
                f"large; limits are {MAX_SIDE}x{MAX_SIDE} and {MAX_SCALES} scales"
            )
        self.width = width
        self.height = height
        self.model = model
        self.sides = [finest_side * 2**k for k in range(num_scales)]
        if width < self.sides[-1] or height < self.sides[-1]:
            raise ValueError("image smaller than the coarsest patch")
        self.grid_shapes = [(height - s + 1, width - s + 1) for s in self.sides]
        self.u = model.grid(width, height)

    def regions(self, k):
        ny, nx = self.grid_shapes[k]
        s = self.sides[k]
        for y in range(ny):
            for x in range(nx):
                yield x, y, s

    def consistency_terms(self, scene_z):
        """Literal per-region sums of basis^T z and |z|^2 at every scale."""
        z = np.asarray(scene_z, dtype=np.float64)
        corr, energy = [], []
        for k in range(len(self.sides)):
            ny, nx = self.grid_shapes[k]
            ck = np.zeros((ny, nx, self.model.M))
            ek = np.zeros((ny, nx))
            for x, y, s in self.regions(k):
                up = self.u[y : y + s, x : x + s]
                zp = z[y : y + s, x : x + s]
                ck[y, x] = np.einsum("hwdm,hwd->m", up, zp)
                ek[y, x] = np.sum(zp * zp)
            corr.append(ck)
            energy.append(ek)
        return corr, energy

    def grams(self):
        """Literal per-region Gram matrices of the basis at every scale."""
        out = []
        for k in range(len(self.sides)):
            ny, nx = self.grid_shapes[k]
            gk = np.zeros((ny, nx, self.model.M, self.model.M))
            for x, y, s in self.regions(k):
                up = self.u[y : y + s, x : x + s]
                gk[y, x] = np.einsum("hwdi,hwdj->ij", up, up)
            out.append(gk)
        return out

    def prediction_moments(self, coefs, inliers):
        """Per-pixel raw moments of the inlying regions' predictions.

        Returns (pred_sum, sq_sum, count): the sum of predicted values
        (H, W, d), the sum of their squared norms (H, W), and the number of
        inlying covering regions (H, W), accumulated region by region.
        """
        d = self.model.d
        pred_sum = np.zeros((self.height, self.width, d))
        sq_sum = np.zeros((self.height, self.width))
        count = np.zeros((self.height, self.width), dtype=np.int64)
        for k in range(len(self.sides)):
            for x, y, s in self.regions(k):
                if not inliers[k][y, x]:
                    continue
                up = self.u[y : y + s, x : x + s]
                pred = up @ coefs[k][y, x]
                pred_sum[y : y + s, x : x + s] += pred
                sq_sum[y : y + s, x : x + s] += np.sum(pred * pred, axis=-1)
                count[y : y + s, x : x + s] += 1
        return pred_sum, sq_sum, count

    def consensus(self, coefs, inliers, fill=0.0):
        """Point-wise mean prediction of inlying covering regions.

        Pixels no inlying region covers get ``fill`` (broadcast over
        channels) and count 0.
        """
        pred_sum, _, count = self.prediction_moments(coefs, inliers)
        z = np.empty_like(pred_sum)
        z[...] = fill
        covered = count > 0
        z[covered] = pred_sum[covered] / count[covered, None]
        return z, count

    def cost(self, coefs, inliers, data_quads, outlier_costs, consistency_weight):
        """The full objective, with the per-pixel spread term taken literally.

        The spread term at each pixel is the population variance of the
        inlying predictions times their count, evaluated from the raw
        prediction moments; uncovered pixels contribute nothing.
        """
        total = 0.0
        for k in range(len(self.sides)):
            gram_a, corr_b, const_c = data_quads[k]
            for x, y, _ in self.regions(k):
                if inliers[k][y, x]:
                    coef = coefs[k][y, x]
                    total += (
                        coef @ gram_a[y, x] @ coef
                        - 2.0 * corr_b[y, x] @ coef
                        + const_c[y, x]
                    )
                else:
                    total += outlier_costs[k][y, x]
        pred_sum, sq_sum, count = self.prediction_moments(coefs, inliers)
        covered = count > 0
        spread = sq_sum[covered] - np.sum(pred_sum[covered] ** 2, axis=-1) / count[covered]
        total += consistency_weight * float(np.sum(spread))
        return total

    def cost_pixel_loop(self, coefs, inliers, data_quads, outlier_costs, consistency_weight):
        """Pixel-by-pixel variance evaluation for very small fixtures.

        Enumerates the inlying covering set of every pixel explicitly; kept
        as the deepest cross-check of :meth:`cost`.
        """
        if self.width > 16 or self.height > 16:
            raise ValueError("pixel-loop cost is restricted to instances up to 16x16")
        total = 0.0
        for k in range(len(self.sides)):
            gram_a, corr_b, const_c = data_quads[k]
            for x, y, _ in self.regions(k):
                if inliers[k][y, x]:
                    coef = coefs[k][y, x]
                    total += (
                        coef @ gram_a[y, x] @ coef
                        - 2.0 * corr_b[y, x] @ coef
                        + const_c[y, x]
                    )
                else:
                    total += outlier_costs[k][y, x]
        for py in range(self.height):
            for px in range(self.width):
                preds = []
                for k, s in enumerate(self.sides):
                    ny, nx = self.grid_shapes[k]
                    for ay in range(max(0, py - s + 1), min(py, ny - 1) + 1):
                        for ax in range(max(0, px - s + 1), min(px, nx - 1) + 1):
                            if inliers[k][ay, ax]:
                                preds.append(self.u[py, px] @ coefs[k][ay, ax])
                if preds:
                    preds = np.asarray(preds)
                    mean = preds.mean(axis=0)
                    total += consistency_weight * float(np.sum((preds - mean) ** 2))
        return total


def dense_consistency_terms(sides, u_field, scene_z):
    """Vectorized hierarchy-free consistency sums, one window pass per scale.

    Computationally equivalent to :meth:`DenseReference.consistency_terms`
    (every region sums all of its own pixels); exists for timing the naive
    strategy at sizes the loop-based reference refuses.
    """
    z = np.asarray(scene_z, dtype=np.float64)
    proj = np.einsum("hwdm,hwd->hwm", u_field, z)
    sq = np.sum(z * z, axis=-1)
    corr = [window_sum(proj, s) for s in sides]
    energy = [window_sum(sq, s) for s in sides]
    return corr, energy


def dense_consensus(sides, u_field, coefs, inliers, fill=0.0):
    """Vectorized hierarchy-free consensus: one scatter pass per scale."""
    height, width = u_field.shape[:2]
    d = u_field.shape[2]
    coef_sum = np.zeros((height, width, u_field.shape[3]))
    count = np.zeros((height, width), dtype=np.int64)
    for k, s in enumerate(sides):
        masked = coefs[k] * inliers[k][..., None]
        coef_sum += scatter_sum(masked, s)
        count += scatter_sum(inliers[k].astype(np.int64), s)
    pred = np.einsum("hwdm,hwm->hwd", u_field, coef_sum)
    z = np.empty((height, width, d))
    z[...] = fill
    covered = count > 0
    z[covered] = pred[covered] / count[covered, None]
    return z, count


def count_operations(mode, num_points, num_scales):
    """Scalar-addition count for one aggregation round on a 1-D dyadic pyramid.

    The pyramid has regions of length 2, 4, ..., 2**num_scales at stride 1,
    each longer region split into two halves.  Counted are the additions in
    the consistency sums (one scalar correlation channel plus the energy
    channel) and in forming the per-pixel consensus numerator and denominator;
    the hierarchical mode additionally pays for its parent-to-child
    accumulation.  Multiplications and the per-region solves are identical
    between modes and excluded.
    """
    if mode not in ("naive", "hierarchical"):
        raise ValueError(f"unknown mode {mode!r}")
    n = int(num_points)
    lengths = [2 ** (k + 1) for k in range(num_scales)]
    if n < lengths[-1]:
        raise ValueError("too few points for the coarsest region")
    counts = [n - L + 1 for L in lengths]
    adds = 0
    if mode == "naive":
        for L, nk in zip(lengths, counts):
            adds += nk * (L - 1) * 2
        for x in range(n):
            cover = 0
            for L in lengths:
                cover += min(x, n - L) - max(0, x - L + 1) + 1
            adds += 2 * (cover - 1)
        return adds
    # hierarchical: scale-0 sums two pixels, larger scales two children
    for nk in counts:
        adds += nk * 1 * 2
    for k in range(num_scales - 1):
        L = lengths[k]
        for a in range(counts[k]):
            parents = int(a <= n - 2 * L) + int(a - L >= 0)
            adds += 2 * parents
    for x in range(n):
        cover0 = min(x, n - 2) - max(0, x - 1) + 1
        adds += 2 * (cover0 - 1)
    return adds

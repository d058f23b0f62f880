"""Dense overlapping region pyramid with quadrant child partitions.

Regions are square patches anchored at every integer offset (stride 1) at
every scale; only patches fully inside the image exist.  Scale 0 is the
finest.  A patch at scale k > 0 is exactly partitioned by its four quadrant
children at scale k - 1, and a patch at scale k < K - 1 has up to four
parents at scale k + 1.  Regions are addressed implicitly as (scale, anchor)
over dense per-scale 2-D anchor grids; nothing materializes adjacency lists.
"""

from dataclasses import dataclass

import numpy as np

from .boxsum import scatter_sum


@dataclass(frozen=True)
class RegionId:
    """A single region: scale index (0 = finest) plus top-left anchor."""

    scale: int
    x: int
    y: int


@dataclass(frozen=True)
class RegionPyramid:
    width: int
    height: int
    num_scales: int
    finest_side: int
    sides: tuple
    grid_shapes: tuple  # per-scale (ny, nx) anchor-grid shapes

    def side(self, k):
        return self.sides[k]

    def grid_shape(self, k):
        return self.grid_shapes[k]

    def num_regions(self, k):
        ny, nx = self.grid_shapes[k]
        return ny * nx

    def contains(self, rid):
        ny, nx = self.grid_shapes[rid.scale]
        return 0 <= rid.x < nx and 0 <= rid.y < ny

    def region_slice(self, rid):
        """Pixel extent of a region as a pair of slices (rows, cols)."""
        s = self.sides[rid.scale]
        return slice(rid.y, rid.y + s), slice(rid.x, rid.x + s)

    def children(self, rid):
        """The four quadrant children at the next finer scale (empty at scale 0)."""
        if rid.scale == 0:
            return []
        s = self.sides[rid.scale - 1]
        k = rid.scale - 1
        return [
            RegionId(k, rid.x, rid.y),
            RegionId(k, rid.x + s, rid.y),
            RegionId(k, rid.x, rid.y + s),
            RegionId(k, rid.x + s, rid.y + s),
        ]

    def parents(self, rid):
        """All regions one scale up whose child set contains this region."""
        if rid.scale >= self.num_scales - 1:
            return []
        s = self.sides[rid.scale]
        k = rid.scale + 1
        out = []
        for dy in (0, -s):
            for dx in (0, -s):
                cand = RegionId(k, rid.x + dx, rid.y + dy)
                if self.contains(cand):
                    out.append(cand)
        return out

    def covering_regions(self, x, y):
        """Every region at every scale containing pixel (x, y).

        Enumeration is O(sum of side^2); it exists for the reference
        implementations and diagnostics, never for the solver hot path.
        """
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ValueError(f"pixel ({x}, {y}) outside {self.width}x{self.height} image")
        out = []
        for k, s in enumerate(self.sides):
            ny, nx = self.grid_shapes[k]
            x0, x1 = max(0, x - s + 1), min(x, nx - 1)
            y0, y1 = max(0, y - s + 1), min(y, ny - 1)
            for ay in range(y0, y1 + 1):
                for ax in range(x0, x1 + 1):
                    out.append(RegionId(k, ax, ay))
        return out

    def coverage_count(self, x, y):
        """Number of regions covering pixel (x, y), computed arithmetically."""
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ValueError(f"pixel ({x}, {y}) outside {self.width}x{self.height} image")
        total = 0
        for k, s in enumerate(self.sides):
            ny, nx = self.grid_shapes[k]
            cx = min(x, nx - 1) - max(0, x - s + 1) + 1
            cy = min(y, ny - 1) - max(0, y - s + 1) + 1
            if cx > 0 and cy > 0:
                total += cx * cy
        return total

    def coverage_map(self):
        """(H, W) int64 map of geometric coverage per pixel."""
        out = np.zeros((self.height, self.width), dtype=np.int64)
        for k, s in enumerate(self.sides):
            ny, nx = self.grid_shapes[k]
            out += scatter_sum(np.ones((ny, nx), dtype=np.int64), s)
        return out

    def sweep_order_up(self):
        """Scale batches finest to coarsest; children precede parents."""
        return list(range(self.num_scales))

    def sweep_order_down(self):
        """Scale batches coarsest to finest; parents precede children."""
        return list(range(self.num_scales - 1, -1, -1))


def build_pyramid(width, height, num_scales=5, finest_side=4):
    """Construct the dense region pyramid for a ``width`` x ``height`` image.

    Patch side doubles per scale starting at ``finest_side``.  Raises if the
    coarsest patch does not fit, which is the caller's cue to reduce
    ``num_scales``.
    """
    if num_scales < 1:
        raise ValueError("num_scales must be >= 1")
    if finest_side < 2:
        raise ValueError("finest_side must be >= 2")
    sides = tuple(finest_side * 2**k for k in range(num_scales))
    if width < sides[-1] or height < sides[-1]:
        raise ValueError(
            f"image {width}x{height} is smaller than the coarsest {sides[-1]}-pixel patch; "
            "reduce num_scales"
        )
    shapes = tuple((height - s + 1, width - s + 1) for s in sides)
    return RegionPyramid(
        width=width,
        height=height,
        num_scales=num_scales,
        finest_side=finest_side,
        sides=sides,
        grid_shapes=shapes,
    )

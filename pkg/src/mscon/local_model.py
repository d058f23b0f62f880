"""Local scene models: per-region linear bases and their Gram matrices.

A local model constrains the scene values inside a region to a low-dimensional
subspace: the value at pixel (x, y) is ``basis(x, y) @ coef`` for an M-vector
``coef`` owned by the region.  Because every region shares the same basis
field, two overlapping regions with equal coefficients predict identical
values, which is what makes regional estimates comparable at all.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class LocalModel:
    """A basis field mapping pixel coordinates to a (d x M) matrix.

    ``d`` is the number of scene-value channels, ``M`` the coefficient count.
    ``basis`` must be a pure function of (x, y): it accepts scalars or
    broadcastable arrays and returns an array of shape (..., d, M).  Repeated
    evaluation at the same coordinate is bitwise reproducible.
    """

    d: int
    M: int
    basis: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    name: str = ""

    def __post_init__(self):
        if self.d < 1 or self.M < 1:
            raise ValueError("model dimensions must be >= 1")

    def evaluate(self, x, y):
        """Basis matrix at a single pixel, shape (d, M)."""
        out = np.asarray(self.basis(np.float64(x), np.float64(y)), dtype=np.float64)
        return out.reshape(self.d, self.M)

    def grid(self, width, height):
        """Basis matrices for the full pixel grid, shape (H, W, d, M)."""
        xs = np.arange(width, dtype=np.float64)[None, :]
        ys = np.arange(height, dtype=np.float64)[:, None]
        out = np.asarray(self.basis(xs, ys), dtype=np.float64)
        return np.broadcast_to(out, (height, width, self.d, self.M)).copy()

    def predict(self, x, y, coef):
        """Scene value at (x, y) for coefficient vector ``coef``, shape (d,)."""
        return self.evaluate(x, y) @ np.asarray(coef, dtype=np.float64)


@dataclass(frozen=True)
class RegionMoment:
    """Gram matrix of the basis over a region: sum of basis(n)^T basis(n).

    Symmetric by construction (each term is, and summation preserves it).
    """

    gram: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gram must be a square matrix")
        object.__setattr__(self, "gram", g)


def make_planar_disparity(coord_scale=1.0):
    """Scalar disparity varying as a plane: basis [x, y, 1], d=1, M=3.

    ``coord_scale`` divides the absolute pixel coordinates inside the basis.
    It is a fixed invertible reparameterization, applied identically at every
    pixel, so consensus predictions are unchanged; passing the maximum image
    dimension keeps the per-region 3x3 systems well conditioned.
    """
    s = float(coord_scale)
    if s <= 0:
        raise ValueError("coord_scale must be positive")

    def basis(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, np.float64), np.asarray(y, np.float64))
        out = np.empty(x.shape + (1, 3))
        out[..., 0, 0] = x / s
        out[..., 0, 1] = y / s
        out[..., 0, 2] = 1.0
        return out

    return LocalModel(d=1, M=3, basis=basis, name="planar_disparity")


def make_quadratic_normals():
    """Surface-gradient field of a quadratic height surface: d=2, M=5.

    The coefficient vector weights the monomials [x^2, y^2, xy, x, y] of a
    height function; the model predicts its two first derivatives, so the
    basis rows are [2x, 0, y, 1, 0] and [0, 2y, x, 0, 1].
    """

    def basis(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, np.float64), np.asarray(y, np.float64))
        out = np.zeros(x.shape + (2, 5))
        out[..., 0, 0] = 2.0 * x
        out[..., 0, 2] = y
        out[..., 0, 3] = 1.0
        out[..., 1, 1] = 2.0 * y
        out[..., 1, 2] = x
        out[..., 1, 4] = 1.0
        return out

    return LocalModel(d=2, M=5, basis=basis, name="quadratic_normals")


def make_affine_flow():
    """Two-channel flow varying affinely: block-diagonal [x, y, 1], d=2, M=6."""

    def basis(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, np.float64), np.asarray(y, np.float64))
        out = np.zeros(x.shape + (2, 6))
        out[..., 0, 0] = x
        out[..., 0, 1] = y
        out[..., 0, 2] = 1.0
        out[..., 1, 3] = x
        out[..., 1, 4] = y
        out[..., 1, 5] = 1.0
        return out

    return LocalModel(d=2, M=6, basis=basis, name="affine_flow")


def moment_of_region(model, pixels):
    """Gram matrix over an explicit pixel list.

    ``pixels`` is a sequence of (x, y) coordinates.  Accumulation runs in
    float64 regardless of how the scene map is stored.
    """
    pts = np.asarray(list(pixels), dtype=np.float64)
    if pts.size == 0:
        raise ValueError("region has no pixels")
    u = np.asarray(model.basis(pts[:, 0], pts[:, 1]), dtype=np.float64)
    u = u.reshape(len(pts), model.d, model.M)
    return RegionMoment(np.einsum("ndi,ndj->ij", u, u))


def moment_from_children(child_moments):
    """Parent Gram matrix as the sum of its children's.

    Valid whenever the children partition the parent's pixel set, which the
    pyramid construction guarantees.
    """
    moments = list(child_moments)
    if not moments:
        raise ValueError("no child moments given")
    total = moments[0].gram.copy()
    for m in moments[1:]:
        total += m.gram
    return RegionMoment(total)

"""Windowed summation primitives shared by the sweep and accumulation code.

All sums are direct (every term is read once, no prefix-sum cancellation), so
results are deterministic and carry no catastrophic-cancellation risk.  Input
dtype is preserved: pass float64 or int64 depending on whether the sum must be
exact in integers.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def window_sum(field, win):
    """Sum ``field`` over every fully-inside ``win`` x ``win`` window.

    ``field`` has shape (H, W, *rest); the result has shape
    (H - win + 1, W - win + 1, *rest), entry (y, x) being the sum over the
    window whose top-left corner is (y, x).
    """
    view = sliding_window_view(field, (win, win), axis=(0, 1))
    return view.sum(axis=(-2, -1))


def scatter_sum(field, win):
    """Transpose of :func:`window_sum`: spread each entry over its window.

    ``field`` has shape (ny, nx, *rest); the result has shape
    (ny + win - 1, nx + win - 1, *rest) with
    out[j, i] = sum of field[j - dy, i - dx] over 0 <= dy, dx < win
    (out-of-range entries count as zero).  Equivalently: out[j, i] sums the
    values of all windows that cover cell (j, i).
    """
    pad = [(win - 1, win - 1), (win - 1, win - 1)] + [(0, 0)] * (field.ndim - 2)
    return window_sum(np.pad(field, pad), win)


def quadrant_sum(child, step, out_shape):
    """Sum the four quadrant children of each parent cell.

    ``child`` is a per-anchor grid at the child scale, shape (nyc, nxc, *rest);
    ``step`` is the child patch side.  Parent (y, x) sums children at
    (y, x), (y, x+step), (y+step, x), (y+step, x+step).
    """
    ny, nx = out_shape
    return (
        child[:ny, :nx]
        + child[:ny, step : step + nx]
        + child[step : step + ny, :nx]
        + child[step : step + ny, step : step + nx]
    )


def parent_scatter(parent, step, out_shape, dtype=None):
    """Accumulate each parent cell into its four quadrant children.

    Inverse addressing of :func:`quadrant_sum`: child (y, x) receives the
    parents anchored at (y, x), (y, x-step), (y-step, x), (y-step, x-step)
    that exist in the parent grid.  ``step`` is the child patch side.
    """
    nyp, nxp = parent.shape[:2]
    acc = np.zeros(out_shape + parent.shape[2:], dtype or parent.dtype)
    acc[:nyp, :nxp] += parent
    acc[:nyp, step : step + nxp] += parent
    acc[step : step + nyp, :nxp] += parent
    acc[step : step + nyp, step : step + nxp] += parent
    return acc

"""
Helpers for locating features of sampled line shapes.
"""

from typing import Optional

import numpy as np


def local_minima(values: np.ndarray) -> np.ndarray:
    """
    Interior indices i with values[i-1] > values[i] <= values[i+1].

    NaN samples never qualify and never count as a neighbour lower than a
    candidate. On a flat bottom only the left edge is reported.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return np.array([], dtype=int)
    left = v[:-2]
    centre = v[1:-1]
    right = v[2:]
    with np.errstate(invalid="ignore"):
        mask = (left > centre) & (centre <= right)
    return np.flatnonzero(mask) + 1


def parabolic_vertex(x: np.ndarray, y: np.ndarray, index: int) -> tuple[float, float]:
    """
    Vertex of the parabola through the samples index-1, index, index+1.

    Works on non-uniform grids. The fit is done in coordinates centred on
    x[index] and scaled by the local spacing so that rad/s grids stay well
    conditioned.

    Returns:
        (x_vertex, y_vertex); the sample itself if the three points are collinear
    """
    xs = np.asarray(x[index - 1:index + 2], dtype=float)
    ys = np.asarray(y[index - 1:index + 2], dtype=float)
    scale = 0.5 * (xs[2] - xs[0])
    u = (xs - xs[1]) / scale
    a, b, c = np.polyfit(u, ys, 2)
    if a <= 0:
        return float(xs[1]), float(ys[1])
    u_vertex = -b / (2.0 * a)
    # The vertex of a bracketed minimum lies inside the three-point window.
    u_vertex = float(np.clip(u_vertex, u[0], u[2]))
    return xs[1] + u_vertex * scale, float(np.polyval([a, b, c], u_vertex))


def half_width_at_half_depth(x: np.ndarray, depth: np.ndarray, index: int) -> Optional[float]:
    """
    Half width of a peak in ``depth`` at half its height, by linear interpolation.

    Uses both flanks when both cross half height; a single crossing is
    mirrored. Returns None if neither flank reaches half height.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(depth, dtype=float)
    if not d[index] > 0:
        return None
    half = 0.5 * d[index]
    widths = []

    right = np.flatnonzero(d[index:] <= half)
    if right.size:
        k = index + int(right[0])
        widths.append(np.interp(half, [d[k], d[k - 1]], [x[k], x[k - 1]]) - x[index])

    left = np.flatnonzero(d[:index + 1][::-1] <= half)
    if left.size:
        k = index - int(left[0])
        widths.append(x[index] - np.interp(half, [d[k], d[k + 1]], [x[k], x[k + 1]]))

    if not widths:
        return None
    return float(np.mean(widths))

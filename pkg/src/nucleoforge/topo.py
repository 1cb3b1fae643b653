"""Skeleton maps: per-nucleus erosion depth plus medial-axis skeleton.

The skeleton map is the conditioning input for the image generator. Each
nucleus contributes a normalized erosion-depth ramp (0 outside, 1 at its
innermost pixels) and a +1 bump on its medial axis, so touching nuclei stay
distinguishable even when their binary masks merge.
"""

import numpy as np
from scipy import ndimage

from ._validation import check_label_map
from .raster import shifted

#: Contour pixels whose distance exceeds the nearest one by at most this
#: much count as tied. One pixel lets the two middle rows of an even-width
#: strand see both sides.
TIE_TOLERANCE = 1.0
#: Tied contour pixels must span more than this angle around a pixel for it
#: to lie on the medial axis; straight edges never exceed 90 degrees.
MIN_SPREAD = np.deg2rad(135.0)
_EPS = 1e-9


def erosion_depth(labels):
    """Iteration at which each pixel vanishes under repeated 4-erosion.

    Erosion runs on every nucleus independently: a neighbor with a different
    label counts as background. Contour pixels get 1, background 0.
    Computed per nucleus as the taxicab distance to the nearest pixel
    outside it, which is exactly the vanishing iteration of 4-erosion.
    """
    lab = check_label_map(labels)
    depth = np.zeros(lab.shape, dtype=np.int64)
    for sl, inside in _nuclei(lab):
        depth[sl] += _window_depth(inside)[1:-1, 1:-1]
    return depth


def _nuclei(lab):
    """Yield ``(slice, padded boolean window)`` for every nucleus."""
    for label, sl in enumerate(ndimage.find_objects(lab), start=1):
        if sl is not None:
            # one pixel of padding so the window border is outside the nucleus
            yield sl, np.pad(lab[sl] == label, 1)


def _window_depth(inside):
    return ndimage.distance_transform_cdt(inside, metric="taxicab").astype(np.int64)


def _normalized(depth):
    return depth / depth.max()


def distance_map(labels):
    """Erosion depth normalized per nucleus to (0, 1], background 0."""
    lab = check_label_map(labels)
    out = np.zeros(lab.shape, dtype=np.float64)
    for sl, inside in _nuclei(lab):
        out[sl] += _normalized(_window_depth(inside))[1:-1, 1:-1]
    return out


def _covering_arc(row, angle, nrows):
    """Smallest arc (radians) containing each row's angles.

    ``row``/``angle`` are flat parallel arrays; every row in ``range(nrows)``
    must occur at least once.
    """
    # rows are integers and angles span less than 8, so one float sort
    # orders by (row, angle)
    key = np.sort(row * 8.0 + (angle + np.pi))
    row = np.floor(key / 8.0).astype(np.int64)
    angle = key - row * 8.0
    new_row = np.empty(row.size, dtype=bool)
    new_row[0] = True
    np.not_equal(row[1:], row[:-1], out=new_row[1:])
    starts = np.flatnonzero(new_row)
    ends = np.empty_like(starts)
    ends[:-1] = starts[1:] - 1
    ends[-1] = row.size - 1
    gaps = np.zeros(row.size)
    gaps[:-1] = np.diff(angle)
    gaps[ends] = 0.0
    largest = np.maximum(np.maximum.reduceat(gaps, starts), angle[starts] + 2 * np.pi - angle[ends])
    return 2 * np.pi - largest


def _nucleus_skeleton(inside, depth=None):
    """Medial-axis pixels of one nucleus given as a padded boolean window.

    Interior pixels are on the axis when the contour pixels tied for nearest
    surround them rather than sit on one side. Contour pixels qualify only
    as one-pixel-wide strands, which are their own axis.
    """
    up, down = shifted(inside, -1, 0, False), shifted(inside, 1, 0, False)
    left, right = shifted(inside, 0, -1, False), shifted(inside, 0, 1, False)
    interior = inside & up & down & left & right
    contour = inside & ~interior
    out = contour & ((~up & ~down) | (~left & ~right))

    pr, pc = np.nonzero(interior)
    if pr.size:
        # squared distances of small windows fit int16, which halves memory traffic
        dtype = np.int16 if max(inside.shape) < 128 else np.int32
        pr, pc = pr.astype(dtype), pc.astype(dtype)
        cr, cc = (a.astype(dtype) for a in np.nonzero(contour))
        vr = cr[None, :] - pr[:, None]
        vc = cc[None, :] - pc[:, None]
        d2 = vr * vr
        d2 += vc * vc
        reach = np.sqrt(d2.min(axis=1)) + TIE_TOLERANCE + _EPS
        # integer threshold: d2 <= reach**2 iff d2 <= floor(reach**2)
        limit = np.floor(reach * reach).astype(dtype)
        ti, tj = np.nonzero(d2 <= limit[:, None])
        angle = np.arctan2(vr[ti, tj].astype(np.float64), vc[ti, tj].astype(np.float64))
        spread = _covering_arc(ti, angle, pr.size)
        on_axis = spread > MIN_SPREAD + _EPS
        out[pr[on_axis], pc[on_axis]] = True

    if not out.any():
        if depth is None:
            depth = _window_depth(inside)
        out = depth == depth.max()
    return out


def topo_skeleton(labels):
    """Union over nuclei of each nucleus's medial-axis pixels."""
    lab = check_label_map(labels)
    skel = np.zeros(lab.shape, dtype=bool)
    for sl, inside in _nuclei(lab):
        skel[sl] |= _nucleus_skeleton(inside)[1:-1, 1:-1]
    return skel


def skeleton_map(labels):
    """``distance_map(labels)`` plus 1 on the skeleton; values in [0, 2]."""
    lab = check_label_map(labels)
    out = np.zeros(lab.shape, dtype=np.float64)
    for sl, inside in _nuclei(lab):
        depth = _window_depth(inside)
        window = _normalized(depth) + _nucleus_skeleton(inside, depth)
        out[sl] += window[1:-1, 1:-1]
    return out


def encode_skeleton_map(smap):
    """8-bit encoding ``round_half_up(value * 127.5)``, so 2.0 maps to 255."""
    return np.floor(np.asarray(smap, dtype=np.float64) * 127.5 + 0.5).astype(np.uint8)


def decode_skeleton_map(encoded):
    return np.asarray(encoded, dtype=np.float64) / 127.5


def encode_unit_map(fmap):
    """8-bit preview of a [0, 1] map, ``round_half_up(value * 255)``."""
    return np.floor(np.asarray(fmap, dtype=np.float64) * 255.0 + 0.5).astype(np.uint8)

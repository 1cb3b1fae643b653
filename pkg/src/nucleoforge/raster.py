"""Grid primitives: grayscale conversion, erosion, components and contours.

Images are plain numpy arrays indexed ``[row, col]``:

* gray images are float arrays in [0, 1] with shape ``(H, W)``
* RGB images are float arrays in [0, 1] with shape ``(H, W, 3)``
* binary masks are bool arrays, label maps are non-negative integer arrays
  with 0 as background

Pixels outside the grid are treated as background everywhere.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._validation import check_binary_mask, check_label_map, check_rgb_image

REC601_WEIGHTS = (0.299, 0.587, 0.114)

#: 8-neighborhood offsets as (drow, dcol); closed under negation.
NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
NEIGHBORS_4 = ((-1, 0), (0, -1), (0, 1), (1, 0))


def to_grayscale(img):
    """Rec. 601 luma of an ``(H, W, 3)`` RGB image in [0, 1]."""
    rgb = check_rgb_image(img)
    r, g, b = REC601_WEIGHTS
    gray = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    # weights sum to 1 but rounding may overshoot by one ulp
    return np.clip(gray, 0.0, 1.0)


def shifted(arr, dr, dc, fill):
    """``out[r, c] = arr[r + dr, c + dc]``, with ``fill`` outside the grid."""
    out = np.full_like(arr, fill)
    h, w = arr.shape[:2]
    src_r = slice(max(dr, 0), h + min(dr, 0))
    dst_r = slice(max(-dr, 0), h + min(-dr, 0))
    src_c = slice(max(dc, 0), w + min(dc, 0))
    dst_c = slice(max(-dc, 0), w + min(-dc, 0))
    out[dst_r, dst_c] = arr[src_r, src_c]
    return out


def _offsets(conn):
    if conn == 4:
        return NEIGHBORS_4
    if conn == 8:
        return NEIGHBORS_8
    raise ValueError(f"conn must be 4 or 8, got {conn}")


def erode_once(mask, conn=4):
    """One-pixel binary erosion; out-of-bounds neighbors count as background."""
    m = check_binary_mask(mask)
    out = m.copy()
    for dr, dc in _offsets(conn):
        out &= shifted(m, dr, dc, False)
    return out


def connected_components(mask, conn=8):
    """Label ``conn``-connected foreground regions 1..K in raster-scan order."""
    _offsets(conn)
    m = check_binary_mask(mask)
    structure = ndimage.generate_binary_structure(2, 1 if conn == 4 else 2)
    labels, _ = ndimage.label(m, structure=structure)
    return labels.astype(np.int64)


def contour_mask(labels):
    """Boolean mask of contour pixels of a label map.

    A foreground pixel is on the contour when at least one 4-neighbor is
    background, outside the grid, or carries a different label.
    """
    lab = check_label_map(labels)
    fg = lab > 0
    edge = np.zeros_like(fg)
    for dr, dc in NEIGHBORS_4:
        edge |= shifted(lab, dr, dc, 0) != lab
    return fg & edge


@dataclass(frozen=True)
class ContourSet:
    """Contour pixel coordinates with their owning labels.

    ``rows``/``cols``/``labels`` are parallel int arrays in raster order;
    ``shape`` is the grid the coordinates live in.
    """

    rows: np.ndarray
    cols: np.ndarray
    labels: np.ndarray
    shape: tuple
    mask: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def from_mask(cls, mask, labels=None):
        m = check_binary_mask(mask)
        rows, cols = np.nonzero(m)
        if labels is None:
            owners = np.ones(rows.size, dtype=np.int64)
        else:
            owners = check_label_map(labels)[rows, cols]
        return cls(rows.astype(np.int64), cols.astype(np.int64), owners, m.shape, m.copy())

    @classmethod
    def from_coords(cls, coords, shape, labels=None):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        h, w = shape
        if coords.size and (coords.min() < 0 or coords[:, 0].max() >= h or coords[:, 1].max() >= w):
            raise ValueError("contour coordinates outside the grid")
        mask = np.zeros(shape, dtype=bool)
        mask[coords[:, 0], coords[:, 1]] = True
        if mask.sum() != len(coords):
            raise ValueError("duplicate contour coordinates")
        owners = np.ones(len(coords), dtype=np.int64) if labels is None else np.asarray(labels, np.int64)
        return cls(coords[:, 0].copy(), coords[:, 1].copy(), owners, tuple(shape), mask)

    def __len__(self):
        return int(self.rows.size)

    def __contains__(self, coord):
        r, c = coord
        h, w = self.shape
        return 0 <= r < h and 0 <= c < w and bool(self.mask[r, c])

    def coords(self):
        return np.stack([self.rows, self.cols], axis=1)


def extract_contours(labels):
    """Contour set of a label map (see :func:`contour_mask`)."""
    lab = check_label_map(labels)
    return ContourSet.from_mask(contour_mask(lab), lab)

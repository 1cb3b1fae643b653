"""Contour-aware regularizers and their analytic gradients.

For a gray image ``g`` and contour set ``c`` with ``n`` pixels::

    L_s1 = (1/n) sum_{a in c} sum_{b in N8(a), b in c}  2 / (1 + exp(-(g_a - g_b)**2 / lam**2)) - 1
    L_s2 = (1/n) sum_{a in c} sum_{b in N8(a), b not in c}  exp(-(g_a - g_b)**2 / (2 lam**2)) / |a - b|

``L_s1`` rewards smooth intensity along contours, ``L_s2`` rewards contrast
across them. Neighbors outside the grid are skipped. The total objective
adds the two adversarial terms ``-log D(x, y)`` and ``-log(1 - D(x, G(x)))``
and weights ``L_s2`` by ``beta``.

All sums run over whole arrays in a fixed order, so results are bit-stable.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_gray_image
from .errors import DimensionMismatch, EmptyContourSet, NotAContourPixel, ScoreOutOfRange
from .raster import NEIGHBORS_8

SCORE_CLAMP = 1e-7


@dataclass(frozen=True)
class LossParams:
    """Contrast scale ``lam`` (intensity units) and sharpness weight ``beta``."""

    lam: float
    beta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be a finite positive number, got {self.lam}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and non-negative, got {self.beta}")


@dataclass(frozen=True)
class LossBreakdown:
    l1: float
    l2: float
    ls1: float
    ls2: float
    beta: float
    total: float

    def to_dict(self, lam=None):
        out = {"l1": self.l1, "l2": self.l2, "ls1": self.ls1, "ls2": self.ls2, "beta": self.beta}
        if lam is not None:
            out["lambda"] = lam
        out["total"] = self.total
        return out


# summands and their derivatives with respect to the difference d = g_a - g_b


def _s1(d, lam):
    # 2 / (1 + exp(-u)) - 1 == tanh(u / 2), which avoids cancellation near 0
    return np.tanh(0.5 * (d / lam) ** 2)


def _s1_prime(d, lam):
    t = np.tanh(0.5 * (d / lam) ** 2)
    return (1.0 - t * t) * d / lam**2


def _s2(d, lam):
    return np.exp(-0.5 * (d / lam) ** 2)


def _s2_prime(d, lam):
    return -d / lam**2 * np.exp(-0.5 * (d / lam) ** 2)


def _prepare(g, c):
    g = check_gray_image(g)
    if tuple(c.shape) != g.shape:
        raise DimensionMismatch(f"image shape {g.shape} does not match contour grid {tuple(c.shape)}")
    return g


def _require_nonempty(c):
    if len(c) == 0:
        raise EmptyContourSet("contour set is empty; the regularizers are undefined")


def _pairs(c):
    """Yield ``(offset, dist, along, cross)`` for each 8-neighbor offset.

    ``along[r, c]`` marks contour pixels whose neighbor at the offset is also
    a contour pixel, ``cross`` those whose in-bounds neighbor is not.
    """
    mask = c.mask
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.int8)  # -1 outside, 1 contour, 0 other
    padded[:] = -1
    padded[1:-1, 1:-1] = mask
    for dr, dc in NEIGHBORS_8:
        nb = padded[1 + dr : h + 1 + dr, 1 + dc : w + 1 + dc]
        yield (dr, dc), math.hypot(dr, dc), mask & (nb == 1), mask & (nb == 0)


def _neighbor_view(arr, dr, dc):
    """``out[r, c] = arr[r + dr, c + dc]``, zero outside the grid."""
    h, w = arr.shape
    padded = np.zeros((h + 2, w + 2), dtype=arr.dtype)
    padded[1:-1, 1:-1] = arr
    return padded[1 + dr : h + 1 + dr, 1 + dc : w + 1 + dc]


def _term(g, c, at, params, along):
    g = _prepare(g, c)
    r, col = (int(v) for v in at)
    if (r, col) not in c:
        raise NotAContourPixel(f"pixel {(r, col)} is not in the contour set")
    h, w = g.shape
    total = 0.0
    for dr, dc in NEIGHBORS_8:
        pr, pc = r + dr, col + dc
        if not (0 <= pr < h and 0 <= pc < w):
            continue
        if ((pr, pc) in c) != along:
            continue
        d = g[r, col] - g[pr, pc]
        if along:
            total += float(_s1(d, params.lam))
        else:
            total += float(_s2(d, params.lam)) / math.hypot(dr, dc)
    return total


def s1_term(g, c, at, params):
    """Smoothness summand at contour pixel ``at``: sum over contour 8-neighbors."""
    return _term(g, c, at, params, along=True)


def s2_term(g, c, at, params):
    """Sharpness summand at contour pixel ``at``: sum over in-bounds non-contour 8-neighbors."""
    return _term(g, c, at, params, along=False)


def _regularizers(g, c, lam):
    ls1 = np.zeros(g.shape)
    ls2 = np.zeros(g.shape)
    for (dr, dc), dist, along, cross in _pairs(c):
        d = g - _neighbor_view(g, dr, dc)
        ls1 += np.where(along, _s1(d, lam), 0.0)
        ls2 += np.where(cross, _s2(d, lam) / dist, 0.0)
    n = len(c)
    return float(ls1.sum()) / n, float(ls2.sum()) / n


def smoothness_loss(g, c, params):
    g = _prepare(g, c)
    _require_nonempty(c)
    return _regularizers(g, c, params.lam)[0]


def sharpness_loss(g, c, params):
    g = _prepare(g, c)
    _require_nonempty(c)
    return _regularizers(g, c, params.lam)[1]


def adversarial_terms(d_real, d_fake):
    """``(-log d_real, -log(1 - d_fake))`` for discriminator outputs in [0, 1].

    Scores are clamped ``1e-7`` away from 0 and 1 so both logs stay finite.
    """
    scores = []
    for name, value in (("d_real", d_real), ("d_fake", d_fake)):
        value = float(value)
        if not 0.0 <= value <= 1.0:  # also rejects NaN
            raise ScoreOutOfRange(f"{name} must lie in [0, 1], got {value}")
        scores.append(min(max(value, SCORE_CLAMP), 1.0 - SCORE_CLAMP))
    real, fake = scores
    return -math.log(real), -math.log1p(-fake)


def total_loss(l1, l2, ls1, ls2, params):
    total = l1 + l2 + ls1 + params.beta * ls2
    return LossBreakdown(float(l1), float(l2), float(ls1), float(ls2), params.beta, float(total))


def regularizer_breakdown(g, c, params, d_real=None, d_fake=None):
    """Full :class:`LossBreakdown` for one image.

    The adversarial terms are 0 unless discriminator scores are supplied.
    """
    g = _prepare(g, c)
    _require_nonempty(c)
    ls1, ls2 = _regularizers(g, c, params.lam)
    l1 = adversarial_terms(d_real, 0.0)[0] if d_real is not None else 0.0
    l2 = adversarial_terms(1.0, d_fake)[1] if d_fake is not None else 0.0
    return total_loss(l1, l2, ls1, ls2, params)


def loss_gradient(g, c, params):
    """Gradient of ``L_s1 + beta * L_s2`` with respect to every pixel of ``g``.

    Each ordered pair ``(a, b)`` contributes ``+f'(d)`` to ``a`` and ``-f'(d)``
    to ``b``; contour pairs appear once from each end.
    """
    g = _prepare(g, c)
    _require_nonempty(c)
    lam, beta = params.lam, params.beta
    h, w = g.shape
    grad = np.zeros((h + 2, w + 2))
    core = grad[1:-1, 1:-1]
    for (dr, dc), dist, along, cross in _pairs(c):
        d = g - _neighbor_view(g, dr, dc)
        slope = np.where(along, _s1_prime(d, lam), 0.0)
        slope += np.where(cross, beta * _s2_prime(d, lam) / dist, 0.0)
        core += slope
        grad[1 + dr : h + 1 + dr, 1 + dc : w + 1 + dc] -= slope
    return core / len(c)


def optimize_patch(g0, c, params, step, iters):
    """Backtracking gradient descent on ``L_s1 + beta * L_s2`` in pixel space.

    Each iteration starts from ``step`` and halves it (at most 20 times)
    until the clamped update does not increase the objective. Stops early
    when the gradient vanishes or no trial step is accepted.

    Returns
    -------
    g : ndarray
        Final image, clamped to [0, 1].
    trace : list of LossBreakdown
        Regularizer values before the first and after every accepted step;
        non-increasing in ``total``.
    """
    g = _prepare(g0, c).copy()
    _require_nonempty(c)
    if not step > 0:
        raise ValueError("step must be positive")
    if int(iters) != iters or iters < 1:
        raise ValueError("iters must be a positive integer")

    def objective(img):
        return total_loss(0.0, 0.0, *_regularizers(img, c, params.lam), params)

    current = objective(g)
    trace = [current]
    for _ in range(int(iters)):
        grad = loss_gradient(g, c, params)
        if not grad.any():
            break
        t = step
        for _ in range(21):
            trial = np.clip(g - t * grad, 0.0, 1.0)
            candidate = objective(trial)
            if candidate.total <= current.total:
                break
            t *= 0.5
        else:
            break
        if np.array_equal(trial, g):
            break
        g, current = trial, candidate
        trace.append(current)
    return g, trace


def contrast_report(g, c):
    """Mean absolute intensity step across and along the contour.

    ``cross`` averages over (contour, non-contour in-bounds neighbor) pairs,
    ``along`` over (contour, contour neighbor) pairs; an empty set gives 0.
    """
    g = _prepare(g, c)
    _require_nonempty(c)
    sums = {"cross": 0.0, "along": 0.0}
    counts = {"cross": 0, "along": 0}
    for (dr, dc), _, along, cross in _pairs(c):
        d = np.abs(g - _neighbor_view(g, dr, dc))
        for key, sel in (("along", along), ("cross", cross)):
            sums[key] += float(d[sel].sum())
            counts[key] += int(sel.sum())
    return {key: sums[key] / counts[key] if counts[key] else 0.0 for key in sums}

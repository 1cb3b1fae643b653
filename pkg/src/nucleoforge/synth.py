"""Seeded generation of nucleus-like polygon label maps.

Each nucleus is an area-preserving ellipse whose radius is perturbed at
``vertex_count`` equally spaced angles::

    r_k = R * (1 + irregularity * eta_k)

with ``eta_k`` uniform in [-1, 1] smoothed by a circular 3-tap moving
average. Polygons are rasterized with an even-odd scan-line fill that tests
pixel centers, half-open on the right.

Randomness comes from numpy's PCG64 bit generator seeded with the 64-bit
config seed; only ``Generator.random()`` (53-bit doubles from the raw
stream) is used, so outputs are bit-identical across platforms.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .errors import ConfigError, PlacementExhausted

_SEED_MOD = 2**64


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the nucleus mask sampler.

    Ranges are inclusive ``(low, high)`` pairs. ``aspect_ratio`` is the
    major/minor axis ratio of the base ellipse; axes are scaled so the
    ellipse area stays ``pi * R**2``. ``max_attempts`` bounds the rejection
    sampler per nucleus.
    """

    width: int = 256
    height: int = 256
    nuclei_count: tuple = (10, 40)
    radius: tuple = (6.0, 18.0)
    irregularity: float = 0.3
    vertex_count: int = 16
    aspect_ratio: tuple = (1.0, 1.5)
    allow_overlap: bool = False
    max_overlap_fraction: float = 0.2
    min_gap: float = 1.0
    max_attempts: int = 200
    seed: int = 0

    def __post_init__(self):
        for name in ("nuclei_count", "radius", "aspect_ratio"):
            value = getattr(self, name)
            if len(value) != 2 or value[0] > value[1]:
                raise ConfigError(f"{name} must be a (low, high) pair, got {value!r}")
            object.__setattr__(self, name, tuple(value))
        if self.width < 1 or self.height < 1:
            raise ConfigError("width and height must be positive")
        if self.nuclei_count[0] < 1:
            raise ConfigError("nuclei_count must be at least 1")
        if self.radius[0] < 2:
            raise ConfigError("radius minimum must be at least 2 px")
        if not 0.0 <= self.irregularity <= 1.0:
            raise ConfigError("irregularity must lie in [0, 1]")
        if self.vertex_count < 8:
            raise ConfigError("vertex_count must be at least 8")
        if self.aspect_ratio[0] < 1.0:
            raise ConfigError("aspect_ratio must be >= 1")
        if not 0.0 <= self.max_overlap_fraction < 1.0:
            raise ConfigError("max_overlap_fraction must lie in [0, 1)")
        if self.min_gap < 1.0:
            raise ConfigError("min_gap must be at least 1 px")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be positive")
        if not 0 <= self.seed < _SEED_MOD:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out


def _uniform(rng, low, high, size=None):
    return low + (high - low) * rng.random(size)


@lru_cache(maxsize=8)
def _unit_circle(n):
    theta = 2.0 * np.pi * np.arange(n) / n
    prev, nxt = np.r_[n - 1, 0:n - 1], np.r_[1:n, 0]
    return np.cos(theta), np.sin(theta), prev, nxt


def polygon_vertices(rng, cfg, radius):
    """Vertices (row, col offsets from the center) of one perturbed ellipse."""
    cos_t, sin_t, prev, nxt = _unit_circle(cfg.vertex_count)
    stretch = np.sqrt(_uniform(rng, *cfg.aspect_ratio))
    tilt = _uniform(rng, 0.0, np.pi)
    eta = _uniform(rng, -1.0, 1.0, cfg.vertex_count)
    eta = (eta[prev] + eta + eta[nxt]) / 3.0
    scale = radius * (1.0 + cfg.irregularity * eta)
    x = stretch * cos_t * scale
    y = sin_t * scale / stretch
    c, s = np.cos(tilt), np.sin(tilt)
    return np.stack([s * x + c * y, c * x - s * y], axis=1)


def rasterize_polygon(vertices, shape):
    """Fill a polygon given in continuous (row, col) coordinates.

    Pixel ``(r, c)`` covers ``[r, r+1) x [c, c+1)``; it is filled when its
    center lies inside under the even-odd rule, with edges half-open in both
    directions so shared edges are never double-counted.

    Returns ``(rows, cols)`` of filled pixels, clipped to ``shape``.
    """
    v = np.asarray(vertices, dtype=np.float64)
    h, w = shape
    r0 = max(int(np.floor(v[:, 0].min())), 0)
    r1 = min(int(np.ceil(v[:, 0].max())), h)
    c0 = max(int(np.floor(v[:, 1].min())), 0)
    c1 = min(int(np.ceil(v[:, 1].max())), w)
    if r0 >= r1 or c0 >= c1:
        return np.empty(0, np.int64), np.empty(0, np.int64)

    y0, x0 = v[:, 0], v[:, 1]
    nxt = np.arange(1, len(v) + 1)
    nxt[-1] = 0
    y1, x1 = y0[nxt], x0[nxt]
    yc = np.arange(r0, r1) + 0.5
    crosses = (y0[None, :] <= yc[:, None]) != (y1[None, :] <= yc[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (yc[:, None] - y0[None, :]) / (y1 - y0)[None, :]
    xcross = np.where(crosses, x0[None, :] + t * (x1 - x0)[None, :], np.inf)
    xc = np.arange(c0, c1) + 0.5
    count = (xcross[:, :, None] <= xc[None, None, :]).sum(axis=1)
    rr, cc = np.nonzero(count % 2 == 1)
    return rr + r0, cc + c0


_EIGHT = np.ones((3, 3), dtype=bool)


def _is_connected(mask):
    return ndimage.label(mask, structure=_EIGHT)[1] == 1


def _try_place(rng, cfg, labels, areas, lost, boxes, label):
    """One placement attempt; returns True and writes ``labels`` on success."""
    h, w = labels.shape
    radius = _uniform(rng, *cfg.radius)
    verts = polygon_vertices(rng, cfg, radius)
    extent_r = np.abs(verts[:, 0]).max()
    extent_c = np.abs(verts[:, 1]).max()
    cy = _uniform(rng, extent_r, h - extent_r)
    cx = _uniform(rng, extent_c, w - extent_c)
    if not (extent_r <= cy <= h - extent_r and extent_c <= cx <= w - extent_c):
        return False
    # cheap pre-check: a polygon centered on a claimed pixel almost surely collides
    if not cfg.allow_overlap and labels[int(cy), int(cx)]:
        return False
    rows, cols = rasterize_polygon(verts + (cy, cx), (h, w))
    if rows.size == 0:
        return False
    r0, r1, c0, c1 = rows.min(), rows.max() + 1, cols.min(), cols.max() + 1
    new = np.zeros((r1 - r0, c1 - c0), dtype=bool)
    new[rows - r0, cols - c0] = True
    if not _is_connected(new):
        return False

    if not cfg.allow_overlap:
        pad = int(np.ceil(cfg.min_gap))
        wr0, wr1 = max(r0 - pad, 0), min(r1 + pad, h)
        wc0, wc1 = max(c0 - pad, 0), min(c1 + pad, w)
        others = labels[wr0:wr1, wc0:wc1] > 0
        if others.any():
            window = np.zeros(others.shape, dtype=bool)
            window[rows - wr0, cols - wc0] = True
            gap = ndimage.distance_transform_edt(~window)
            if gap[others].min() < cfg.min_gap:
                return False
    else:
        hit = labels[rows, cols]
        hit_labels, hit_counts = np.unique(hit[hit > 0], return_counts=True)
        for other, count in zip(hit_labels, hit_counts):
            if (lost[other] + count) / areas[other] > cfg.max_overlap_fraction:
                return False
        if hit_labels.size:
            trial = labels.copy()
            trial[rows, cols] = label
            for other in hit_labels:
                if not _is_connected(trial[boxes[other]] == other):
                    return False
        for other, count in zip(hit_labels, hit_counts):
            lost[other] += int(count)

    labels[rows, cols] = label
    areas[label] = int(rows.size)
    lost[label] = 0
    boxes[label] = (slice(r0, r1), slice(c0, c1))
    return True


def gen_nuclei_masks(cfg):
    """Sample one label map of nucleus-like polygons.

    Deterministic in ``cfg`` (including its seed). Later nuclei win
    contested pixels when overlap is allowed.

    Raises
    ------
    PlacementExhausted
        When some nucleus cannot be placed within ``cfg.max_attempts``.
    """
    if not isinstance(cfg, SynthConfig):
        raise TypeError("cfg must be a SynthConfig")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    lo, hi = cfg.nuclei_count
    target = lo + min(int(rng.random() * (hi - lo + 1)), hi - lo)
    labels = np.zeros((cfg.height, cfg.width), dtype=np.int64)
    areas, lost, boxes = {}, {}, {}
    for label in range(1, target + 1):
        for _ in range(cfg.max_attempts):
            if _try_place(rng, cfg, labels, areas, lost, boxes, label):
                break
        else:
            raise PlacementExhausted(
                f"could not place nucleus {label} of {target} within "
                f"{cfg.max_attempts} attempts (seed {cfg.seed})"
            )
    return labels


def _thread_cap():
    value = os.environ.get("NUCLEOFORGE_THREADS")
    if not value:
        return os.cpu_count() or 1
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"NUCLEOFORGE_THREADS must be an integer, got {value!r}") from None


def _render_one(args):
    # imported lazily to keep worker start-up light
    from .io import write_label_png, write_u8_png
    from .topo import encode_skeleton_map, skeleton_map

    cfg, index, out_dir, with_skeleton = args
    seed = (cfg.seed + index) % _SEED_MOD
    labels = gen_nuclei_masks(replace(cfg, seed=seed))
    name = f"mask_{index:05d}.png"
    entry = {"file": name, "nuclei": int(labels.max()), "seed": seed}
    try:
        write_label_png(os.path.join(out_dir, name), labels)
        if with_skeleton:
            smap_name = f"skelmap_{index:05d}.png"
            write_u8_png(os.path.join(out_dir, smap_name), encode_skeleton_map(skeleton_map(labels)))
            entry["skeleton_map"] = smap_name
    except OSError as exc:
        raise OSError(f"failed writing into {out_dir}: {exc}") from exc
    return entry


def batch_gen(cfg, count, out_dir, skeleton_maps=False, workers=None):
    """Write ``count`` label maps plus ``manifest.json`` into ``out_dir``.

    Image ``i`` uses seed ``cfg.seed + i``, so serial and parallel runs
    produce identical files. With ``skeleton_maps`` each mask also gets an
    8-bit encoded skeleton map. ``workers`` defaults to the
    ``NUCLEOFORGE_THREADS`` cap.

    Returns the manifest as a dict.
    """
    from .io import atomic_write

    if count < 1:
        raise ValueError("count must be positive")
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(cfg, i, os.fspath(out_dir), skeleton_maps) for i in range(count)]
    workers = min(workers or _thread_cap(), _thread_cap(), count)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            images = list(pool.map(_render_one, jobs, chunksize=max(1, count // (8 * workers))))
    else:
        images = [_render_one(job) for job in jobs]
    manifest = {"config": cfg.to_dict(), "images": images}
    path = os.path.join(out_dir, "manifest.json")
    atomic_write(path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    return manifest

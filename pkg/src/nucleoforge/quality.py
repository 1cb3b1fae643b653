"""Full-reference image quality: SSIM, GMSD and FSIM on luminance.

Constants follow the metrics' reference implementations and live in one
record, :class:`QualityConstants`. Inputs are gray images in [0, 1] or RGB
images, which are reduced to Rec. 601 luma first.
"""

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from ._validation import check_gray_image, check_min_size, check_same_shape
from .raster import to_grayscale


@dataclass(frozen=True)
class QualityConstants:
    """Pinned metric constants, all on the [0, 1] intensity scale.

    FSIM runs internally at the 0-255 scale of its reference code, so its
    phase-congruency ``epsilon`` keeps the reference value unchanged.
    """

    ssim_window: int = 11
    ssim_sigma: float = 1.5
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    gmsd_c: float = 170.0 / 255.0**2
    fsim_scales: int = 4
    fsim_orientations: int = 4
    fsim_min_wavelength: float = 6.0
    fsim_mult: float = 2.0
    fsim_sigma_onf: float = 0.55
    fsim_d_theta_on_sigma: float = 1.2
    fsim_k: float = 2.0
    fsim_epsilon: float = 1e-4
    fsim_t1: float = 0.85
    fsim_t2: float = 160.0 / 255.0**2

    @classmethod
    def from_dict(cls, data):
        from .errors import ConfigError

        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown quality constants: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


DEFAULT_CONSTANTS = QualityConstants()


@dataclass(frozen=True)
class QualityReport:
    ssim: float
    fsim: float
    gmsd: float

    def to_dict(self):
        return asdict(self)


def _luma(img, name):
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = to_grayscale(arr)
    return check_gray_image(arr, name)


def _pair(a, b, min_size, what):
    a, b = _luma(a, "a"), _luma(b, "b")
    check_same_shape(a, b)
    check_min_size(a, min_size, what)
    return a, b


# ---------------------------------------------------------------- SSIM


def _gaussian_window(size, sigma):
    x = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-(x**2) / (2.0 * sigma**2))
    return w / w.sum()


def _valid_filter(img, w1d):
    """Separable correlation keeping only fully covered positions."""
    k = w1d.size
    rows = sum(w1d[i] * img[i : img.shape[0] - k + 1 + i] for i in range(k))
    return sum(w1d[j] * rows[:, j : img.shape[1] - k + 1 + j] for j in range(k))


def ssim(a, b, constants=DEFAULT_CONSTANTS):
    """Mean structural similarity over Gaussian windows (valid region only).

    >>> import numpy as np
    >>> round(ssim(np.full((16, 16), 0.25), np.full((16, 16), 0.75)), 6)
    0.600064
    """
    k = constants
    a, b = _pair(a, b, k.ssim_window, "ssim")
    w = _gaussian_window(k.ssim_window, k.ssim_sigma)
    c1, c2 = k.ssim_k1**2, k.ssim_k2**2
    mu_a, mu_b = _valid_filter(a, w), _valid_filter(b, w)
    var_a = _valid_filter(a * a, w) - mu_a * mu_a
    var_b = _valid_filter(b * b, w) - mu_b * mu_b
    cov = _valid_filter(a * b, w) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


# ---------------------------------------------------------------- GMSD

_PREWITT = np.array([1.0, 0.0, -1.0]) / 3.0


def _gmsd_downsample(img):
    """2x2 box mean anchored at the top-left, then every second pixel."""
    p = np.pad(img, ((0, 1), (0, 1)), mode="edge")
    box = (p[:-1, :-1] + p[1:, :-1] + p[:-1, 1:] + p[1:, 1:]) / 4.0
    return box[::2, ::2]


def _prewitt_magnitude(img):
    p = np.pad(img, 1, mode="edge")
    h, w = img.shape
    # derivative along one axis, box sum along the other
    gx = sum(p[i : i + h, 2 : w + 2] - p[i : i + h, 0:w] for i in range(3)) / 3.0
    gy = sum(p[2 : h + 2, j : j + w] - p[0:h, j : j + w] for j in range(3)) / 3.0
    return np.sqrt(gx * gx + gy * gy)


def gmsd_map(a, b, constants=DEFAULT_CONSTANTS):
    """Gradient magnitude similarity map on the downsampled grid."""
    a, b = _pair(a, b, 3, "gmsd")
    ma = _prewitt_magnitude(_gmsd_downsample(a))
    mb = _prewitt_magnitude(_gmsd_downsample(b))
    c = constants.gmsd_c
    return (2.0 * ma * mb + c) / (ma * ma + mb * mb + c)


def gmsd(a, b, constants=DEFAULT_CONSTANTS):
    """Sample standard deviation (``ddof=1``) of :func:`gmsd_map`.

    Borders are replicated rather than zero-filled, so ``gmsd(x, 1 - x)`` is
    exactly 0 as the gradient magnitudes of an inverted image are unchanged.
    """
    gms = gmsd_map(a, b, constants)
    if gms.size < 2:
        return 0.0
    return float(np.std(gms, ddof=1))


# ---------------------------------------------------------------- FSIM


def _frequency_grid(rows, cols):
    """Normalized frequency coordinates laid out like ``fft2`` output."""

    def axis(n):
        if n % 2:
            return np.arange(-(n - 1) / 2, (n - 1) / 2 + 1) / (n - 1)
        return np.arange(-n / 2, n / 2) / n

    x, y = np.meshgrid(axis(cols), axis(rows))
    return np.fft.ifftshift(x), np.fft.ifftshift(y)


def _lowpass(x, y, cutoff=0.45, order=15):
    radius = np.sqrt(x * x + y * y)
    return 1.0 / (1.0 + (radius / cutoff) ** (2 * order))


def phase_congruency(img, constants=DEFAULT_CONSTANTS):
    """Phase congruency from a log-Gabor bank with noise compensation.

    ``img`` is expected on the 0-255 scale. Filtering happens in the
    frequency domain, so boundaries are periodic.
    """
    k = constants
    rows, cols = img.shape
    nscale, norient = k.fsim_scales, k.fsim_orientations
    theta_sigma = np.pi / norient / k.fsim_d_theta_on_sigma
    spectrum = np.fft.fft2(img)

    x, y = _frequency_grid(rows, cols)
    radius = np.sqrt(x * x + y * y)
    radius[0, 0] = 1.0
    theta = np.arctan2(-y, x)
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    lp = _lowpass(x, y)

    log_gabor = []
    for s in range(nscale):
        fo = 1.0 / (k.fsim_min_wavelength * k.fsim_mult**s)
        lg = np.exp(-(np.log(radius / fo) ** 2) / (2.0 * np.log(k.fsim_sigma_onf) ** 2)) * lp
        lg[0, 0] = 0.0
        log_gabor.append(lg)

    energy_all = np.zeros((rows, cols))
    an_all = np.zeros((rows, cols))
    for o in range(norient):
        angle = o * np.pi / norient
        ds = sin_t * np.cos(angle) - cos_t * np.sin(angle)
        dc = cos_t * np.cos(angle) + sin_t * np.sin(angle)
        spread = np.exp(-(np.arctan2(ds, dc) ** 2) / (2.0 * theta_sigma**2))

        eo, spatial = [], []
        for s in range(nscale):
            filt = log_gabor[s] * spread
            spatial.append(np.real(np.fft.ifft2(filt)) * np.sqrt(rows * cols))
            eo.append(np.fft.ifft2(spectrum * filt))
            if s == 0:
                em_n = np.sum(filt * filt)
        sum_e = sum(np.real(e) for e in eo)
        sum_o = sum(np.imag(e) for e in eo)
        sum_an = sum(np.abs(e) for e in eo)

        x_energy = np.sqrt(sum_e**2 + sum_o**2) + k.fsim_epsilon
        mean_e, mean_o = sum_e / x_energy, sum_o / x_energy
        energy = np.zeros((rows, cols))
        for e in eo:
            er, ei = np.real(e), np.imag(e)
            energy += er * mean_e + ei * mean_o - np.abs(er * mean_o - ei * mean_e)

        # noise model from the smallest scale's response distribution
        mean_e2n = -np.median(np.abs(eo[0]) ** 2) / np.log(0.5)
        noise_power = mean_e2n / em_n
        sum_an2 = sum(np.sum(f * f) for f in spatial)
        sum_aiaj = sum(
            np.sum(spatial[i] * spatial[j]) for i in range(nscale) for j in range(i + 1, nscale)
        )
        noise_energy2 = 2.0 * noise_power * sum_an2 + 4.0 * noise_power * sum_aiaj
        tau = np.sqrt(noise_energy2 / 2.0)
        threshold = tau * np.sqrt(np.pi / 2.0) + k.fsim_k * np.sqrt((2.0 - np.pi / 2.0) * tau**2)
        energy_all += np.maximum(energy - threshold / 1.7, 0.0)
        an_all += sum_an

    pc = np.zeros((rows, cols))
    # flat images have no filter response anywhere; their congruency is 0
    np.divide(energy_all, an_all, out=pc, where=an_all > 0)
    return pc


def _box_same(img, f):
    """``conv2(img, ones(f, f) / f**2, 'same')`` with zero fill."""
    if f == 1:
        return img
    lo, hi = (f + 1) // 2 - 1, f // 2
    p = np.pad(img, ((lo, hi), (lo, hi)))
    h, w = img.shape
    return sum(p[i : i + h, j : j + w] for i in range(f) for j in range(f)) / f**2


_SCHARR = np.array([[3.0, 0.0, -3.0], [10.0, 0.0, -10.0], [3.0, 0.0, -3.0]]) / 16.0


def _scharr_magnitude(img):
    # convolution flips the kernel; the sign is irrelevant for the magnitude
    gx = ndimage.correlate(img, _SCHARR[:, ::-1], mode="constant")
    gy = ndimage.correlate(img, _SCHARR.T[::-1, :], mode="constant")
    return np.sqrt(gx * gx + gy * gy)


def fsim(a, b, constants=DEFAULT_CONSTANTS):
    """Feature similarity: phase congruency and gradient similarity pooled by PC.

    Returns a value in [0, 1], exactly 1 for identical inputs.
    """
    k = constants
    a, b = _pair(a, b, 32, "fsim")
    f = max(1, int(np.floor(min(a.shape) / 256.0 + 0.5)))
    ya = _box_same(255.0 * a, f)[::f, ::f]
    yb = _box_same(255.0 * b, f)[::f, ::f]

    pc_a, pc_b = phase_congruency(ya, k), phase_congruency(yb, k)
    ga, gb = _scharr_magnitude(ya), _scharr_magnitude(yb)
    t2 = k.fsim_t2 * 255.0**2
    s_pc = (2.0 * pc_a * pc_b + k.fsim_t1) / (pc_a**2 + pc_b**2 + k.fsim_t1)
    s_g = (2.0 * ga * gb + t2) / (ga**2 + gb**2 + t2)
    pc_m = np.maximum(pc_a, pc_b)
    weight = pc_m.sum()
    if weight == 0:
        # no phase structure in either image: fall back to unweighted pooling
        return float(np.mean(s_pc * s_g))
    return float(np.sum(s_pc * s_g * pc_m) / weight)


def quality_report(a, b, constants=DEFAULT_CONSTANTS):
    return QualityReport(ssim(a, b, constants), fsim(a, b, constants), gmsd(a, b, constants))

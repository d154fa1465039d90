"""Image quality indexes: RSE, PSNR, SSIM, FSIM.

RSE follows the convention 10*log10(||X - T||_F / ||T||_F) — note the
unsquared norm ratio — so published magnitudes stay comparable.  Infinite
dB values are capped at +/-300 so serialized reports remain finite.

SSIM uses the standard 11x11 Gaussian window (sigma 1.5) with valid
boundaries, averaged over the map and the three channels.  FSIM runs on
luminance: phase congruency from a log-Gabor filter bank plus a Scharr
gradient similarity, pooled with the pointwise phase-congruency maximum
as weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d, fftconvolve

from ._errors import DataError

__all__ = ["MetricsConfig", "rse", "psnr", "ssim", "fsim", "DB_CAP"]

DB_CAP = 300.0


@dataclass(frozen=True)
class MetricsConfig:
    peakval: float = 255.0
    ssim_window: int = 11
    ssim_sigma: float = 1.5
    fsim_scales: int = 4
    fsim_orientations: int = 4
    fsim_min_wavelength: float = 6.0
    fsim_mult: float = 2.0
    fsim_sigma_onf: float = 0.55      # log-Gabor bandwidth parameter
    fsim_delta_theta: float = 1.2     # angular interval / angular sigma
    fsim_noise_k: float = 2.0         # noise threshold, std devs above mean
    fsim_t1: float = 0.85             # phase-congruency similarity constant
    fsim_t2: float = 160.0            # gradient similarity constant

    @property
    def c1(self) -> float:
        return (0.01 * self.peakval) ** 2

    @property
    def c2(self) -> float:
        return (0.03 * self.peakval) ** 2


DEFAULT_METRICS = MetricsConfig()


def _check_pair(x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if x.shape != t.shape:
        raise DataError(f"image shapes differ: {x.shape} vs {t.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
        raise DataError("images contain non-finite values")
    return x, t


def rse(x, t) -> float:
    """Relative error in dB: 10*log10(||x - t||_F / ||t||_F)."""
    x, t = _check_pair(x, t)
    denom = np.linalg.norm(t)
    if denom == 0.0:
        raise DataError("reference image is identically zero; RSE undefined")
    num = np.linalg.norm(x - t)
    if num == 0.0:
        return -DB_CAP
    return max(10.0 * math.log10(num / denom), -DB_CAP)


def psnr(x, t, cfg: MetricsConfig = DEFAULT_METRICS) -> float:
    """Peak signal-to-noise ratio in dB over all values of the array."""
    x, t = _check_pair(x, t)
    mse = float(np.mean((x - t) ** 2))
    if mse == 0.0:
        return DB_CAP
    return min(10.0 * math.log10(cfg.peakval ** 2 / mse), DB_CAP)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    g = np.exp(-((np.arange(size) - half) ** 2) / (2.0 * sigma ** 2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(x, t, cfg: MetricsConfig = DEFAULT_METRICS) -> float:
    """Mean structural similarity, averaged over channels."""
    x, t = _check_pair(x, t)
    if x.ndim == 2:
        x = x[:, :, None]
        t = t[:, :, None]
    if min(x.shape[0], x.shape[1]) < cfg.ssim_window:
        raise DataError(
            f"image must be at least {cfg.ssim_window} pixels on each side")
    win = _gaussian_window(cfg.ssim_window, cfg.ssim_sigma)
    c1, c2 = cfg.c1, cfg.c2
    scores = []
    for ch in range(x.shape[2]):
        a = x[:, :, ch]
        b = t[:, :, ch]
        mu_a = fftconvolve(a, win, mode="valid")
        mu_b = fftconvolve(b, win, mode="valid")
        var_a = fftconvolve(a * a, win, mode="valid") - mu_a ** 2
        var_b = fftconvolve(b * b, win, mode="valid") - mu_b ** 2
        cov = fftconvolve(a * b, win, mode="valid") - mu_a * mu_b
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


# -- FSIM ---------------------------------------------------------------

_SCHARR_X = np.array([[3.0, 0.0, -3.0],
                      [10.0, 0.0, -10.0],
                      [3.0, 0.0, -3.0]]) / 16.0


def _luminance(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return img
    return 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]


def _block_mean_downsample(img: np.ndarray, f: int) -> np.ndarray:
    if f <= 1:
        return img
    m, n = img.shape
    img = img[: m // f * f, : n // f * f]
    return img.reshape(m // f, f, n // f, f).mean(axis=(1, 3))


def _frequency_grids(rows: int, cols: int):
    # normalized frequency coordinates with DC moved to [0, 0]
    if cols % 2:
        xr = np.arange(-(cols - 1) // 2, (cols - 1) // 2 + 1) / (cols - 1)
    else:
        xr = np.arange(-(cols // 2), cols // 2) / cols
    if rows % 2:
        yr = np.arange(-(rows - 1) // 2, (rows - 1) // 2 + 1) / (rows - 1)
    else:
        yr = np.arange(-(rows // 2), rows // 2) / rows
    x, y = np.meshgrid(xr, yr)
    radius = np.fft.ifftshift(np.sqrt(x ** 2 + y ** 2))
    theta = np.fft.ifftshift(np.arctan2(-y, x))
    radius[0, 0] = 1.0
    return radius, theta


def _phase_congruency(img: np.ndarray, cfg: MetricsConfig) -> np.ndarray:
    """Phase congruency map from a log-Gabor quadrature filter bank."""
    rows, cols = img.shape
    eps = 1e-4
    nscale = cfg.fsim_scales
    norient = cfg.fsim_orientations
    theta_sigma = math.pi / norient / cfg.fsim_delta_theta

    radius, theta = _frequency_grids(rows, cols)
    sintheta, costheta = np.sin(theta), np.cos(theta)
    lowpass = 1.0 / (1.0 + (radius / 0.45) ** 30)

    log_gabor = []
    for s in range(nscale):
        f0 = 1.0 / (cfg.fsim_min_wavelength * cfg.fsim_mult ** s)
        g = np.exp(-(np.log(radius / f0) ** 2) / (2.0 * math.log(cfg.fsim_sigma_onf) ** 2))
        g *= lowpass
        g[0, 0] = 0.0  # no DC component; makes the map invariant to intensity shifts
        log_gabor.append(g)

    imgfft = np.fft.fft2(img)
    energy_all = np.zeros((rows, cols))
    an_all = np.zeros((rows, cols))

    for o in range(norient):
        angl = o * math.pi / norient
        ds = sintheta * math.cos(angl) - costheta * math.sin(angl)
        dc = costheta * math.cos(angl) + sintheta * math.sin(angl)
        dtheta = np.abs(np.arctan2(ds, dc))
        spread = np.exp(-(dtheta ** 2) / (2.0 * theta_sigma ** 2))

        eo = []
        ifft_filters = []
        sum_an = np.zeros((rows, cols))
        sum_e = np.zeros((rows, cols))
        sum_o = np.zeros((rows, cols))
        for s in range(nscale):
            filt = log_gabor[s] * spread
            resp = np.fft.ifft2(imgfft * filt)
            eo.append(resp)
            ifft_filters.append(np.real(np.fft.ifft2(filt)) * math.sqrt(rows * cols))
            sum_an += np.abs(resp)
            sum_e += resp.real
            sum_o += resp.imag

        x_energy = np.sqrt(sum_e ** 2 + sum_o ** 2) + eps
        mean_e = sum_e / x_energy
        mean_o = sum_o / x_energy
        energy = np.zeros((rows, cols))
        for resp in eo:
            energy += resp.real * mean_e + resp.imag * mean_o
            energy -= np.abs(resp.real * mean_o - resp.imag * mean_e)

        # noise threshold estimated from the smallest-scale response
        median_e2n = float(np.median(np.abs(eo[0]) ** 2))
        mean_e2n = -median_e2n / math.log(0.5)
        em_n = float(np.sum((log_gabor[0] * spread) ** 2))
        noise_power = mean_e2n / em_n if em_n > 0 else 0.0
        est_sum_an2 = 0.0
        est_sum_ai_aj = 0.0
        for si in range(nscale):
            est_sum_an2 += float(np.sum(ifft_filters[si] ** 2))
            for sj in range(si + 1, nscale):
                est_sum_ai_aj += float(np.sum(ifft_filters[si] * ifft_filters[sj]))
        noise_energy2 = 2.0 * noise_power * est_sum_an2 + 4.0 * noise_power * est_sum_ai_aj
        tau = math.sqrt(max(noise_energy2, 0.0) / 2.0)
        noise_energy = tau * math.sqrt(math.pi / 2.0)
        noise_sigma = math.sqrt(max(2.0 - math.pi / 2.0, 0.0)) * tau
        threshold = (noise_energy + cfg.fsim_noise_k * noise_sigma) / 1.7

        energy_all += np.maximum(energy - threshold, 0.0)
        an_all += sum_an

    return energy_all / (an_all + np.finfo(float).eps)


def fsim(x, t, cfg: MetricsConfig = DEFAULT_METRICS) -> float:
    """Feature similarity on luminance, in [0, 1]; 1 for identical images."""
    x, t = _check_pair(x, t)
    if min(x.shape[0], x.shape[1]) < 32:
        raise DataError("image must be at least 32 pixels on each side")
    lum_x = _luminance(x)
    lum_t = _luminance(t)
    factor = max(1, round(min(lum_x.shape) / 256))
    lum_x = _block_mean_downsample(lum_x, factor)
    lum_t = _block_mean_downsample(lum_t, factor)

    pc_x = _phase_congruency(lum_x, cfg)
    pc_t = _phase_congruency(lum_t, cfg)

    gx = np.hypot(convolve2d(lum_x, _SCHARR_X, mode="same"),
                  convolve2d(lum_x, _SCHARR_X.T, mode="same"))
    gt = np.hypot(convolve2d(lum_t, _SCHARR_X, mode="same"),
                  convolve2d(lum_t, _SCHARR_X.T, mode="same"))

    s_pc = (2.0 * pc_x * pc_t + cfg.fsim_t1) / (pc_x ** 2 + pc_t ** 2 + cfg.fsim_t1)
    s_g = (2.0 * gx * gt + cfg.fsim_t2) / (gx ** 2 + gt ** 2 + cfg.fsim_t2)
    pc_max = np.maximum(pc_x, pc_t)
    weight = float(np.sum(pc_max))
    if weight == 0.0:
        # featureless pair (e.g. two constant images): nothing to compare
        return 1.0
    return float(np.sum(s_pc * s_g * pc_max) / weight)

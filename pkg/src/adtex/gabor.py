"""Gabor filter bank, 2D convolution and energy features.

The bank follows the usual dyadic texture design: centre frequencies are
spaced geometrically from ``high_freq`` down to ``low_freq`` and the
Gaussian spreads are chosen so neighbouring filters meet at their
half-magnitude contours, both across scales and across orientations.
Kernels are complex and DC-corrected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .imgcore import as_gray

LN2 = math.log(2.0)


class InvalidBankParams(ValueError):
    pass


class KernelTooLarge(ValueError):
    pass


class SizeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BankParams:
    scales: int = 5
    orientations: int = 8
    low_freq: float = 0.05
    high_freq: float = 0.4

    def __post_init__(self):
        if self.scales < 1 or self.orientations < 1:
            raise InvalidBankParams("scales and orientations must be >= 1")
        if not 0 < self.low_freq < self.high_freq < 0.5:
            raise InvalidBankParams(
                f"need 0 < low_freq < high_freq < 0.5, got {self.low_freq}, {self.high_freq}"
            )

    @property
    def size(self) -> int:
        return self.scales * self.orientations


@dataclass(frozen=True, eq=False)
class GaborFilter:
    scale_index: int  # 1-based, 1 = highest frequency
    orientation_index: int  # 1-based
    center_frequency: float  # cycles/pixel
    orientation: float  # radians
    sigma_x: float  # envelope spread along the carrier
    sigma_y: float  # envelope spread across the carrier
    kernel: np.ndarray = field(repr=False)

    @property
    def radius(self) -> int:
        return self.kernel.shape[0] // 2


@dataclass(eq=False)
class FilterBank:
    filters: list[GaborFilter]
    params: BankParams
    _spectra: dict = field(default_factory=dict, init=False, repr=False)

    def __len__(self):
        return len(self.filters)

    def __iter__(self):
        return iter(self.filters)

    @property
    def max_radius(self) -> int:
        return max(f.radius for f in self.filters)

    def spectra(self, shape: tuple[int, int]) -> np.ndarray:
        """Kernel transforms on an FFT grid of ``shape``, origin-centred; cached."""
        if shape not in self._spectra:
            stack = np.zeros((len(self.filters),) + shape, dtype=np.complex128)
            for i, f in enumerate(self.filters):
                stack[i] = _kernel_spectrum(f.kernel, shape)
            self._spectra[shape] = stack
        return self._spectra[shape]


@dataclass(frozen=True)
class FeatureVector:
    energies: np.ndarray
    source_tag: str = "f"

    def __len__(self):
        return len(self.energies)


def _bank_spreads(params: BankParams) -> tuple[float, float, float]:
    """Frequency ratio between scales and the finest filter's spatial spreads."""
    uh, ul = params.high_freq, params.low_freq
    if params.scales > 1:
        a = (uh / ul) ** (1.0 / (params.scales - 1))
    else:
        a = uh / ul
    sigma_u = (a - 1.0) * uh / ((a + 1.0) * math.sqrt(2.0 * LN2))
    sigma_v = (
        math.tan(math.pi / (2.0 * params.orientations))
        * (uh - 2.0 * LN2 * sigma_u**2 / uh)
        / math.sqrt(2.0 * LN2 - (2.0 * LN2) ** 2 * sigma_u**2 / uh**2)
    )
    return a, 1.0 / (2.0 * math.pi * sigma_u), 1.0 / (2.0 * math.pi * sigma_v)


def gabor_kernel(freq: float, theta: float, sigma_x: float, sigma_y: float) -> np.ndarray:
    """DC-corrected complex Gabor kernel, square, radius ceil(3 * max spread).

    ``x`` runs along columns and ``y`` along rows; ``theta = 0`` puts the
    carrier along ``x``.
    """
    r = math.ceil(3.0 * max(sigma_x, sigma_y))
    y, x = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    xr = x * math.cos(theta) + y * math.sin(theta)
    yr = -x * math.sin(theta) + y * math.cos(theta)
    env = np.exp(-0.5 * (xr**2 / sigma_x**2 + yr**2 / sigma_y**2))
    env /= 2.0 * math.pi * sigma_x * sigma_y
    phase = 2.0 * math.pi * freq * xr
    # Gaussian-weighted offset removes the DC response of the real part
    offset = np.sum(env * np.cos(phase)) / np.sum(env)
    return env * (np.cos(phase) - offset) + 1j * env * np.sin(phase)


def build_filter_bank(params: BankParams = BankParams()) -> FilterBank:
    a, sx, sy = _bank_spreads(params)
    filters = []
    for m in range(params.scales):
        freq = params.high_freq / a**m
        for n in range(params.orientations):
            theta = math.pi * n / params.orientations
            filters.append(
                GaborFilter(
                    scale_index=m + 1,
                    orientation_index=n + 1,
                    center_frequency=freq,
                    orientation=theta,
                    sigma_x=sx * a**m,
                    sigma_y=sy * a**m,
                    kernel=gabor_kernel(freq, theta, sx * a**m, sy * a**m),
                )
            )
    return FilterBank(filters, params)


# -- convolution ----------------------------------------------------------


def _check_fit(img: np.ndarray, kernel: np.ndarray) -> tuple[int, int]:
    kh, kw = kernel.shape
    if kernel.ndim != 2 or kh % 2 == 0 or kw % 2 == 0:
        raise SizeMismatch(f"kernel must be 2D with odd sides, got {kernel.shape}")
    ry, rx = kh // 2, kw // 2
    h, w = img.shape
    if ry >= h or rx >= w:
        raise KernelTooLarge(f"kernel {kernel.shape} too large for image {img.shape}")
    return ry, rx


def _pad(img: np.ndarray, ry: int, rx: int) -> np.ndarray:
    return np.pad(img, ((ry, ry), (rx, rx)), mode="symmetric")


def _kernel_spectrum(kernel: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    ry, rx = kernel.shape[0] // 2, kernel.shape[1] // 2
    grid = np.zeros(shape, dtype=np.complex128)
    grid[: kernel.shape[0], : kernel.shape[1]] = kernel
    return sfft.fft2(np.roll(grid, (-ry, -rx), axis=(0, 1)))


def convolve_direct(img, kernel: np.ndarray) -> np.ndarray:
    """Shift-and-add convolution over a reflect-padded image (reference path)."""
    img = as_gray(img)
    ry, rx = _check_fit(img, kernel)
    h, w = img.shape
    padded = _pad(img, ry, rx)
    out = np.zeros((h, w), dtype=np.result_type(kernel.dtype, np.float64))
    kh, kw = kernel.shape
    for a in range(kh):
        for b in range(kw):
            # out[i, j] += k[a, b] * img[i - (a - ry), j - (b - rx)]
            sy, sx = 2 * ry - a, 2 * rx - b
            out += kernel[a, b] * padded[sy : sy + h, sx : sx + w]
    return out


def convolve_fft(img, kernel: np.ndarray) -> np.ndarray:
    """Same result as :func:`convolve_direct` via a circular FFT product.

    The padded image is at least ``h + 2r`` long per axis, so the circular
    wrap never reaches the cropped output window.
    """
    img = as_gray(img)
    ry, rx = _check_fit(img, kernel)
    h, w = img.shape
    padded = _pad(img, ry, rx)
    shape = (sfft.next_fast_len(padded.shape[0]), sfft.next_fast_len(padded.shape[1]))
    spec = sfft.fft2(padded, s=shape) * _kernel_spectrum(kernel, shape)
    return sfft.ifft2(spec)[ry : ry + h, rx : rx + w]


def _pick_method(img: np.ndarray, method: str) -> str:
    if method == "auto":
        return "fft" if min(img.shape) >= 64 else "direct"
    if method not in ("fft", "direct"):
        raise ValueError(f"unknown convolution method {method!r}")
    return method


def convolve(img, filt: GaborFilter | np.ndarray, method: str = "auto") -> np.ndarray:
    """Complex response ``img * kernel`` over the input extent."""
    img = as_gray(img)
    kernel = filt.kernel if isinstance(filt, GaborFilter) else np.asarray(filt)
    if _pick_method(img, method) == "fft":
        return convolve_fft(img, kernel)
    return convolve_direct(img, kernel)


def energy(response) -> float:
    """Sum of squared magnitudes of a (complex) filter response."""
    r = np.asarray(response)
    return float(np.sum(r.real**2 + r.imag**2)) if np.iscomplexobj(r) else float(np.sum(r * r))


def extract_features(img, bank: FilterBank, method: str = "auto", source_tag: str = "f") -> FeatureVector:
    """Energy of each bank response, scale-major then orientation."""
    img = as_gray(img)
    if _pick_method(img, method) == "direct":
        energies = [energy(convolve_direct(img, f.kernel)) for f in bank]
        return FeatureVector(np.array(energies), source_tag)

    # pad once with the largest radius and reuse one image transform
    r = bank.max_radius
    _check_fit(img, np.zeros((2 * r + 1, 2 * r + 1)))
    h, w = img.shape
    padded = _pad(img, r, r)
    shape = (sfft.next_fast_len(padded.shape[0]), sfft.next_fast_len(padded.shape[1]))
    img_spec = sfft.fft2(padded, s=shape)
    energies = np.empty(len(bank))
    spectra = bank.spectra(shape)
    for i in range(len(bank)):
        resp = sfft.ifft2(img_spec * spectra[i])[r : r + h, r : r + w]
        energies[i] = energy(resp)
    return FeatureVector(energies, source_tag)

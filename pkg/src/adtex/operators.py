"""Linear baseline operators: Gaussian, Laplacian and Laplacian-of-Gaussian.

All convolutions use half-sample symmetric reflection at the borders
(``d c b a | a b c d``), matching the Gabor module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy import ndimage

from .imgcore import as_gray

LAPLACIAN_STENCIL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


class InvalidSigma(ValueError):
    pass


@dataclass(frozen=True)
class OperatorKind:
    """Which baseline to apply; ``sigma`` is only used by gaussian and log."""

    name: str
    sigma: float | None = None

    def __post_init__(self):
        if self.name not in ("gaussian", "laplacian", "log"):
            raise ValueError(f"unknown operator {self.name!r}")
        if self.name == "laplacian":
            object.__setattr__(self, "sigma", None)
        elif self.sigma is None or not self.sigma > 0:
            raise InvalidSigma(f"{self.name} needs sigma > 0, got {self.sigma}")

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "OperatorKind":
        return cls("gaussian", sigma)

    @classmethod
    def laplacian(cls) -> "OperatorKind":
        return cls("laplacian")

    @classmethod
    def log(cls, sigma: float = 2.0) -> "OperatorKind":
        return cls("log", sigma)

    @property
    def is_highpass(self) -> bool:
        return self.name != "gaussian"

    def label(self) -> str:
        return self.name if self.sigma is None else f"{self.name}(sigma={self.sigma:g})"


def _grid(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    r = math.ceil(3 * sigma)
    y, x = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    return x, y


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled isotropic Gaussian, radius ceil(3 sigma), normalized to sum 1."""
    if not sigma > 0:
        raise InvalidSigma(f"sigma must be positive, got {sigma}")
    x, y = _grid(sigma)
    k = np.exp(-(x * x + y * y) / (2 * sigma * sigma))
    return k / k.sum()


def log_kernel(sigma: float) -> np.ndarray:
    """Sampled Laplacian of Gaussian, radius ceil(3 sigma), shifted to zero mean."""
    if not sigma > 0:
        raise InvalidSigma(f"sigma must be positive, got {sigma}")
    x, y = _grid(sigma)
    r2 = (x * x + y * y) / (2 * sigma * sigma)
    k = -(1.0 - r2) * np.exp(-r2) / (math.pi * sigma**4)
    return k - k.mean()


def operator_kernel(kind: OperatorKind) -> np.ndarray:
    if kind.name == "gaussian":
        return gaussian_kernel(kind.sigma)
    if kind.name == "log":
        return log_kernel(kind.sigma)
    return LAPLACIAN_STENCIL


def apply_operator(img, kind: OperatorKind) -> np.ndarray:
    return ndimage.convolve(as_gray(img), operator_kernel(kind), mode="reflect")


def operator_series(img, kind: OperatorKind, t_values: Iterable[int]) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield ``(t, smooth, residual)`` for sorted distinct iteration counts.

    Gaussian smoothing is iterated ``t`` times and the residual is
    ``img - smooth``. Laplacian and LoG are already high-pass, so their
    single response is the residual for every ``t`` and
    ``smooth = img - response``.
    """
    img = as_gray(img)
    ts = sorted(set(int(t) for t in t_values))
    if ts and ts[0] < 0:
        raise ValueError(f"iteration counts must be >= 0, got {ts[0]}")
    if kind.is_highpass:
        smooth = img - apply_operator(img, kind)
        # re-deriving the residual keeps smooth + residual == img exact on 8-bit input
        residual = img - smooth
        for t in ts:
            yield t, smooth, residual
        return
    kernel = operator_kernel(kind)
    smooth = img.copy()
    done = 0
    for t in ts:
        for _ in range(t - done):
            smooth = ndimage.convolve(smooth, kernel, mode="reflect")
        done = t
        yield t, smooth, img - smooth


def operator_decompose(img, kind: OperatorKind, iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(smooth, residual)`` playing the roles of the cartoon and texture."""
    (_, smooth, residual), = operator_series(img, kind, [iterations])
    return smooth, residual

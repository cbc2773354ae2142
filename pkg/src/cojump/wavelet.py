"""Maximal-overlap discrete wavelet transform for return series.

The transform is non-decimated: every scale keeps one coefficient per
input sample, so coefficients line up with return indices once the filter
phase shift is removed.  Two boundary treatments are provided: circular
(exact energy preservation, used by the covariance estimators) and
reflecting (the series is mirrored before filtering, which avoids wrapping
artifacts and is the default for jump localization).
"""

from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .errors import TransformError

BOUNDARY_CIRCULAR = "circular"
BOUNDARY_REFLECTING = "reflecting"
_BOUNDARIES = (BOUNDARY_CIRCULAR, BOUNDARY_REFLECTING)

MAX_DEFAULT_LEVELS = 6

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class WaveletFilter:
    """A scaling/wavelet filter pair in maximal-overlap normalization
    (squared coefficients of each filter sum to 1/2)."""

    name: str
    scaling: np.ndarray
    wavelet: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.scaling, dtype=np.float64)
        h = np.asarray(self.wavelet, dtype=np.float64)
        object.__setattr__(self, "scaling", g)
        object.__setattr__(self, "wavelet", h)
        if g.ndim != 1 or h.shape != g.shape or g.shape[0] < 2:
            raise TransformError("filter pair must be 1-D arrays of equal length >= 2")
        if abs(h.sum()) > 1e-12:
            raise TransformError("wavelet filter must sum to zero")
        if abs((g * g).sum() - 0.5) > 1e-12 or abs((h * h).sum() - 0.5) > 1e-12:
            raise TransformError("filters must carry maximal-overlap normalization")

    @property
    def width(self) -> int:
        return int(self.scaling.shape[0])

    def scale_width(self, level: int) -> int:
        """Equivalent filter width at ``level``: 2^(j-1)(L-1)+1."""
        return (1 << (level - 1)) * (self.width - 1) + 1


def d4_filters() -> WaveletFilter:
    """Daubechies extremal-phase width-4 pair, maximal-overlap scaled."""
    g = np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / 8.0
    # quadrature mirror: h_l = (-1)^l g_{L-1-l}
    h = (g[::-1] * np.array([1.0, -1.0, 1.0, -1.0])).copy()
    return WaveletFilter(name="d4", scaling=g, wavelet=h)


def max_levels(n: int, wavelet: WaveletFilter | None = None,
               cap: int = MAX_DEFAULT_LEVELS) -> int:
    """Default transform depth for ``n`` samples: the deepest level whose
    equivalent filter still fits, never more than ``cap``."""
    wavelet = wavelet or d4_filters()
    return backend.max_usable_levels(int(n), wavelet.width, int(cap))


@dataclass(frozen=True)
class ModwtCoefficients:
    """Result of :func:`modwt`.

    ``details[j-1]`` holds scale-j wavelet coefficients, ``smooth`` the
    final scaling band; every array has the input length.  ``aligned``
    records whether the filter phase shift has been removed.
    """

    wavelet: WaveletFilter
    boundary: str
    aligned: bool
    details: np.ndarray
    smooth: np.ndarray

    @property
    def levels(self) -> int:
        return int(self.details.shape[0])

    @property
    def n(self) -> int:
        return int(self.smooth.shape[0])

    def boundary_mask(self) -> np.ndarray:
        """Boolean (levels+1, n) matrix flagging coefficients whose filter
        support crosses the series start; last row covers the smooth band."""
        mask = np.zeros((self.levels + 1, self.n), dtype=bool)
        for j in range(1, self.levels + 1):
            mask[j - 1, : min(self.wavelet.scale_width(j) - 1, self.n)] = True
        mask[-1, : min(self.wavelet.scale_width(self.levels) - 1, self.n)] = True
        if self.aligned:
            shifts = phase_shifts(self.wavelet, self.levels)
            for row, shift in enumerate(shifts):
                mask[row] = np.roll(mask[row], -shift)
        return mask

    def matches(self, other: "ModwtCoefficients") -> bool:
        return (
            self.wavelet.name == other.wavelet.name
            and np.array_equal(self.wavelet.scaling, other.wavelet.scaling)
            and self.boundary == other.boundary
            and self.levels == other.levels
            and self.n == other.n
            and self.aligned == other.aligned
        )


def _validate_depth(n: int, levels: int, wavelet: WaveletFilter) -> None:
    if levels < 1:
        raise TransformError("transform depth must be >= 1")
    if wavelet.scale_width(levels) > n or (1 << levels) > n:
        raise TransformError(
            f"depth {levels} does not fit {n} samples "
            f"(needs >= {max(wavelet.scale_width(levels), 1 << levels)})"
        )


def modwt(series, levels: int | None = None, boundary: str = BOUNDARY_REFLECTING,
          wavelet: WaveletFilter | None = None) -> ModwtCoefficients:
    """Transform a series into per-scale detail coefficients plus a smooth.

    ``levels=None`` picks the default depth for the series length.  The
    reflecting boundary mirrors the series to twice its length, runs the
    circular recursion there and keeps the first half, so no coefficient
    mixes the series start with its end.
    """
    x = np.ascontiguousarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise TransformError("series must be 1-D")
    n = x.shape[0]
    if n < 2:
        raise TransformError("series must have at least 2 samples")
    if not np.isfinite(x).all():
        raise TransformError("series contains non-finite values")
    if boundary not in _BOUNDARIES:
        raise TransformError(f"unknown boundary {boundary!r}")
    wavelet = wavelet or d4_filters()
    if levels is None:
        levels = max_levels(n, wavelet)
        if levels == 0:
            raise TransformError(f"series of {n} samples too short for any scale")
    _validate_depth(n, levels, wavelet)

    if boundary == BOUNDARY_CIRCULAR:
        details, smooth = backend.modwt_forward(x, wavelet.wavelet, wavelet.scaling, levels)
    else:
        ext = np.concatenate([x, x[::-1]])
        details, smooth = backend.modwt_forward(ext, wavelet.wavelet, wavelet.scaling, levels)
        details = np.ascontiguousarray(details[:, :n])
        smooth = np.ascontiguousarray(smooth[:n])
    return ModwtCoefficients(
        wavelet=wavelet, boundary=boundary, aligned=False,
        details=details, smooth=smooth,
    )


def phase_shifts(wavelet: WaveletFilter, levels: int) -> np.ndarray:
    """Per-band circular advance of each equivalent filter, measured as the
    position of its largest-magnitude tap.  Entries 0..levels-1 cover the
    detail scales, the last entry the smooth band."""
    support = wavelet.scale_width(levels)
    impulse = np.zeros(support)
    impulse[0] = 1.0
    details, smooth = backend.modwt_forward(
        impulse, wavelet.wavelet, wavelet.scaling, levels
    )
    shifts = np.empty(levels + 1, dtype=np.int64)
    for j in range(levels):
        shifts[j] = int(np.argmax(np.abs(details[j])))
    shifts[levels] = int(np.argmax(np.abs(smooth)))
    return shifts


def align_coefficients(coeffs: ModwtCoefficients) -> ModwtCoefficients:
    """Remove the filter phase shift so coefficient k describes the series
    around index k.  Raises if already aligned."""
    if coeffs.aligned:
        raise TransformError("coefficients are already aligned")
    shifts = phase_shifts(coeffs.wavelet, coeffs.levels)
    details = np.empty_like(coeffs.details)
    for j in range(coeffs.levels):
        details[j] = np.roll(coeffs.details[j], -int(shifts[j]))
    smooth = np.roll(coeffs.smooth, -int(shifts[-1]))
    return replace(coeffs, aligned=True, details=details, smooth=smooth)


def unalign_coefficients(coeffs: ModwtCoefficients) -> ModwtCoefficients:
    """Undo :func:`align_coefficients`."""
    if not coeffs.aligned:
        raise TransformError("coefficients are not aligned")
    shifts = phase_shifts(coeffs.wavelet, coeffs.levels)
    details = np.empty_like(coeffs.details)
    for j in range(coeffs.levels):
        details[j] = np.roll(coeffs.details[j], int(shifts[j]))
    smooth = np.roll(coeffs.smooth, int(shifts[-1]))
    return replace(coeffs, aligned=False, details=details, smooth=smooth)

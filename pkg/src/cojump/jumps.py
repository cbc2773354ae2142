"""Jump localization through first-scale wavelet coefficients.

A return whose first-scale coefficient magnitude exceeds a universal
threshold (median-based noise scale times sqrt(2 log N)) is flagged as a
jump; its size is read straight off the return series.  Co-jumps are
flagged indices shared by both assets of a pair.
"""

from dataclasses import dataclass, replace
from datetime import date as date_type

import numpy as np

from . import backend
from .errors import EstimatorError
from .wavelet import (
    BOUNDARY_REFLECTING,
    ModwtCoefficients,
    WaveletFilter,
    align_coefficients,
    d4_filters,
    modwt,
    phase_shifts,
)

_MAD_NORMAL = 0.6745


@dataclass(frozen=True)
class JumpSeries:
    """Flagged jump positions for one return series of length ``n``."""

    n: int
    indices: np.ndarray
    sizes: np.ndarray
    threshold: float

    @property
    def count(self) -> int:
        return int(self.indices.shape[0])

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[self.indices] = True
        return out


@dataclass(frozen=True)
class CoJumpRecord:
    """One simultaneous jump of both assets at a refresh-time index."""

    index: int
    size_1: float
    size_2: float
    direction: int
    date: date_type | None = None
    session: str | None = None


def universal_threshold(first_scale: np.ndarray, n: int | None = None) -> float:
    """Median-calibrated universal threshold for first-scale coefficients:
    sqrt(2) * median|W| / 0.6745 * sqrt(2 log N)."""
    w = np.asarray(first_scale, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] == 0:
        raise EstimatorError("first-scale coefficient set must be non-empty")
    if n is None:
        n = w.shape[0]
    if n < 2:
        raise EstimatorError("threshold needs a sample count of at least 2")
    noise_scale = np.sqrt(2.0) * np.median(np.abs(w)) / _MAD_NORMAL
    return float(noise_scale * np.sqrt(2.0 * np.log(n)))


def detect_jumps(returns: np.ndarray, coeffs: ModwtCoefficients,
                 threshold: float) -> JumpSeries:
    """Flag indices whose aligned first-scale coefficient magnitude exceeds
    ``threshold`` (strictly); sizes are the raw returns at those indices."""
    r = np.asarray(returns, dtype=np.float64)
    if not coeffs.aligned:
        raise EstimatorError("jump detection requires aligned coefficients")
    if coeffs.n != r.shape[0]:
        raise EstimatorError("coefficients and return series length mismatch")
    flags = np.abs(coeffs.details[0]) > threshold
    idx = np.flatnonzero(flags)
    return JumpSeries(n=int(r.shape[0]), indices=idx, sizes=r[idx].copy(),
                      threshold=float(threshold))


def adjust_returns(returns: np.ndarray, jumps: JumpSeries) -> np.ndarray:
    """Copy of the return series with flagged returns replaced by zero."""
    r = np.asarray(returns, dtype=np.float64)
    if jumps.n != r.shape[0]:
        raise EstimatorError("jump series does not match return series length")
    out = r.copy()
    out[jumps.indices] = 0.0
    return out


def cojump_variation(j1: JumpSeries, j2: JumpSeries) -> tuple[float, list[CoJumpRecord]]:
    """Sum of size products over indices flagged in both series, plus one
    record per common index."""
    if j1.n != j2.n:
        raise EstimatorError("jump series live on different refresh grids")
    common, i1, i2 = np.intersect1d(j1.indices, j2.indices, return_indices=True)
    records = []
    total = 0.0
    for k, idx in enumerate(common):
        s1 = float(j1.sizes[i1[k]])
        s2 = float(j2.sizes[i2[k]])
        prod = s1 * s2
        total += prod
        records.append(CoJumpRecord(
            index=int(idx), size_1=s1, size_2=s2,
            direction=int(np.sign(prod)),
        ))
    return total, records


def cojump_matrix(j1: JumpSeries, j2: JumpSeries) -> np.ndarray:
    """2x2 jump-variation matrix: diagonals sum squared sizes of each
    series, off-diagonal the co-jump variation."""
    cj12, _ = cojump_variation(j1, j2)
    return np.array([
        [float(np.sum(j1.sizes ** 2)), cj12],
        [cj12, float(np.sum(j2.sizes ** 2))],
    ])


def detect_pair(r1: np.ndarray, r2: np.ndarray,
                wavelet: WaveletFilter | None = None,
                boundary: str = BOUNDARY_REFLECTING,
                ) -> tuple[JumpSeries, JumpSeries]:
    """Full detection for a return pair: first-scale transform, per-series
    threshold, flags.  The convenience wrapper the pipeline and bootstrap
    replicates share."""
    wavelet = wavelet or d4_filters()
    out = []
    shift = int(phase_shifts(wavelet, 1)[0])
    for r in (r1, r2):
        r = np.ascontiguousarray(r, dtype=np.float64)
        n = r.shape[0]
        if n < 4:
            raise EstimatorError("detection needs at least 4 returns")
        if boundary == BOUNDARY_REFLECTING:
            ext = np.concatenate([r, r[::-1]])
            details, _ = backend.modwt_forward(ext, wavelet.wavelet, wavelet.scaling, 1)
            w1 = np.roll(details[0][:n], -shift)
        else:
            details, _ = backend.modwt_forward(r, wavelet.wavelet, wavelet.scaling, 1)
            w1 = np.roll(details[0], -shift)
        xi = universal_threshold(w1, n)
        flags = np.abs(w1) > xi
        idx = np.flatnonzero(flags)
        out.append(JumpSeries(n=n, indices=idx, sizes=r[idx].copy(), threshold=xi))
    return out[0], out[1]


def annotate_records(records: list[CoJumpRecord], day: date_type,
                     session: str) -> list[CoJumpRecord]:
    """Stamp records with their trading day and session."""
    return [replace(rec, date=day, session=session) for rec in records]

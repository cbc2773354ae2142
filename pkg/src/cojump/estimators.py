"""Covariance estimators on synchronized return panels.

Four estimators of the pair's second-moment structure:

* realized covariance (RC): plain cross-products, estimates total
  quadratic covariation including jumps and any noise bias;
* bipower covariance (BC): jump-robust, via the polarization identity
  from univariate bipower variations of the sum and difference series;
* two-scale realized covariance (TSCV): subgrid-averaged RC with a
  full-grid correction, cancels i.i.d. microstructure noise exactly in
  expectation;
* jump- and noise-robust wavelet estimator (JWC): the two-scale
  construction applied per wavelet scale to jump-adjusted returns, whose
  per-scale terms sum to TSCV when nothing is flagged.

The small-sample factor applied to the two-scale difference makes TSCV
exactly unbiased for constant volatility without noise at any grid count.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import EstimatorError
from .sync import ReturnPanel
from .wavelet import (
    BOUNDARY_CIRCULAR,
    ModwtCoefficients,
    WaveletFilter,
    d4_filters,
    max_levels,
)

MAX_LEVEL_CAP = 6


@dataclass(frozen=True)
class EstimatorSettings:
    """Resolved or default two-scale parameters.

    ``grids=None`` picks ceil(N^(2/3)) subgrids; ``levels=None`` picks the
    deepest usable transform depth capped at 6.
    """

    grids: int | None = None
    levels: int | None = None
    wavelet: WaveletFilter | None = None

    def filter_pair(self) -> WaveletFilter:
        return self.wavelet or d4_filters()

    def resolve(self, n_returns: int) -> tuple[int, int]:
        grids = self.grids
        if grids is None:
            grids = math.ceil(n_returns ** (2.0 / 3.0))
        grids = int(grids)
        if not 1 < grids < n_returns:
            raise EstimatorError(
                f"grid count must satisfy 1 < G < N, got G={grids}, N={n_returns}"
            )
        usable = max_levels(n_returns, self.filter_pair(), cap=MAX_LEVEL_CAP)
        if self.levels is None:
            levels = usable
        else:
            levels = int(self.levels)
            if levels < 1 or levels > max_levels(n_returns, self.filter_pair(), cap=levels):
                raise EstimatorError(
                    f"depth {levels} does not fit {n_returns} returns"
                )
        if levels < 1:
            raise EstimatorError(f"{n_returns} returns are too few for any wavelet scale")
        return grids, levels


def two_scale_constants(n_returns: int, grids: int) -> tuple[float, float]:
    """(mean subgrid size n-bar, unbiasing factor c) for N returns and G
    subgrids.  c = N*G / ((G-1)(N-G+1)) makes the two-scale difference an
    unbiased estimate of N times the per-interval covariance when
    volatility is constant and there is no noise."""
    if not 1 < grids < n_returns:
        raise EstimatorError(
            f"grid count must satisfy 1 < G < N, got G={grids}, N={n_returns}"
        )
    nbar = (n_returns - grids + 1) / grids
    c = n_returns * grids / ((grids - 1) * (n_returns - grids + 1))
    return nbar, c


def _panel_returns(panel: ReturnPanel) -> tuple[np.ndarray, np.ndarray]:
    r = panel.returns
    if r.shape[0] != 2:
        raise EstimatorError("panel must hold exactly two return series")
    return np.ascontiguousarray(r[0]), np.ascontiguousarray(r[1])


def realized_covariance(panel: ReturnPanel) -> float:
    """Sum of return cross-products over the refresh grid."""
    r1, r2 = _panel_returns(panel)
    if r1.shape[0] < 1:
        raise EstimatorError("realized covariance needs at least one return")
    return float(r1 @ r2)


def realized_matrix(panel: ReturnPanel) -> np.ndarray:
    r1, r2 = _panel_returns(panel)
    return np.array([[float(r1 @ r1), float(r1 @ r2)],
                     [float(r1 @ r2), float(r2 @ r2)]])


def _bipower_variation(x: np.ndarray) -> float:
    return float((np.pi / 2.0) * np.sum(np.abs(x[1:]) * np.abs(x[:-1])))


def bipower_covariance(panel: ReturnPanel) -> float:
    """Jump-robust covariance through the polarization identity:
    (BV(r1+r2) - BV(r1-r2)) / 4."""
    r1, r2 = _panel_returns(panel)
    if r1.shape[0] < 2:
        raise EstimatorError("bipower covariance needs at least two returns")
    return (_bipower_variation(r1 + r2) - _bipower_variation(r1 - r2)) / 4.0


def bipower_matrix(panel: ReturnPanel) -> np.ndarray:
    r1, r2 = _panel_returns(panel)
    if r1.shape[0] < 2:
        raise EstimatorError("bipower covariance needs at least two returns")
    off = (_bipower_variation(r1 + r2) - _bipower_variation(r1 - r2)) / 4.0
    return np.array([[_bipower_variation(r1), off],
                     [off, _bipower_variation(r2)]])


def wavelet_realized_covariance(c1: ModwtCoefficients, c2: ModwtCoefficients,
                                ) -> tuple[float, np.ndarray]:
    """Cross-products of same-scale coefficients, summed per band.

    Returns (total, per_scale) where per_scale has levels+1 entries, the
    last being the smooth band.  Requires matching circular transforms:
    under the circular boundary this reproduces realized covariance
    exactly.
    """
    if not c1.matches(c2):
        raise EstimatorError("coefficient pair has mismatched transform settings")
    if c1.boundary != BOUNDARY_CIRCULAR:
        raise EstimatorError("wavelet covariance requires the circular transform")
    per_scale = np.empty(c1.levels + 1)
    per_scale[:-1] = np.einsum("jk,jk->j", c1.details, c2.details)
    per_scale[-1] = c1.smooth @ c2.smooth
    return float(per_scale.sum()), per_scale


def wavelet_covariance_trimmed(c1: ModwtCoefficients, c2: ModwtCoefficients,
                               ) -> np.ndarray:
    """Diagnostic per-scale covariance with boundary-affected coefficients
    dropped: entry j averages cross-products over the N - L_j + 1
    interior positions (last entry: smooth band).  Requires raw
    (unaligned) circular or reflecting coefficients."""
    if not c1.matches(c2):
        raise EstimatorError("coefficient pair has mismatched transform settings")
    if c1.aligned:
        raise EstimatorError("trimmed covariance works on raw coefficients")
    n = c1.n
    out = np.empty(c1.levels + 1)
    for j in range(1, c1.levels + 1):
        start = c1.wavelet.scale_width(j) - 1
        m = n - start
        if m < 1:
            raise EstimatorError(f"no interior coefficients left at scale {j}")
        out[j - 1] = float(c1.details[j - 1, start:] @ c2.details[j - 1, start:]) / m
    start = c1.wavelet.scale_width(c1.levels) - 1
    out[-1] = float(c1.smooth[start:] @ c2.smooth[start:]) / (n - start)
    return out


def _tscv_value(r1: np.ndarray, r2: np.ndarray, grids: int) -> float:
    n = r1.shape[0]
    nbar, c = two_scale_constants(n, grids)
    cum1 = np.concatenate(([0.0], np.cumsum(r1)))
    cum2 = np.concatenate(([0.0], np.cumsum(r2)))
    acc = 0.0
    for off in range(grids):
        stamps = np.arange(off, n + 1, grids)
        if stamps.shape[0] < 2:
            continue
        a1 = cum1[stamps[1:]] - cum1[stamps[:-1]]
        a2 = cum2[stamps[1:]] - cum2[stamps[:-1]]
        acc += float(a1 @ a2)
    avg = acc / grids
    return c * (avg - (nbar / n) * float(r1 @ r2))


def tscv(panel: ReturnPanel, grids: int | None = None) -> float:
    """Two-scale realized covariance of the pair."""
    r1, r2 = _panel_returns(panel)
    n = r1.shape[0]
    if grids is None:
        grids = math.ceil(n ** (2.0 / 3.0))
    return _tscv_value(r1, r2, int(grids))


@dataclass(frozen=True)
class JwcEstimate:
    """JWC value with its per-scale decomposition.

    ``per_scale`` has levels+1 entries: wavelet scales 1..levels then the
    pooled scaling band; their sum is ``total``.
    """

    total: float
    per_scale: np.ndarray
    n_returns: int
    grids: int
    levels: int
    nbar: float
    c_n: float


def _jwc_per_scale(r1: np.ndarray, r2: np.ndarray, grids: int, levels: int,
                   wavelet: WaveletFilter) -> np.ndarray:
    n = r1.shape[0]
    nbar, c = two_scale_constants(n, grids)
    h, g = wavelet.wavelet, wavelet.scaling
    sub = backend.subsampled_scale_sums(r1, r2, grids, levels, h, g)
    details1, smooth1 = backend.modwt_forward(r1, h, g, levels)
    details2, smooth2 = backend.modwt_forward(r2, h, g, levels)
    full = np.empty(levels + 1)
    full[:-1] = np.einsum("jk,jk->j", details1, details2)
    full[-1] = smooth1 @ smooth2
    return c * (sub - (nbar / n) * full)


def jwc(panel: ReturnPanel, grids: int | None = None, levels: int | None = None,
        settings: EstimatorSettings | None = None) -> JwcEstimate:
    """Per-scale two-scale covariance of a (jump-adjusted) panel.

    The caller is responsible for jump adjustment; on a jump-free panel
    the per-scale terms sum to the TSCV value exactly (up to rounding)
    because every band of every subgrid is counted once.
    """
    if settings is None:
        settings = EstimatorSettings(grids=grids, levels=levels)
    r1, r2 = _panel_returns(panel)
    g_count, lv = settings.resolve(r1.shape[0])
    nbar, c = two_scale_constants(r1.shape[0], g_count)
    per_scale = _jwc_per_scale(r1, r2, g_count, lv, settings.filter_pair())
    return JwcEstimate(
        total=float(per_scale.sum()), per_scale=per_scale,
        n_returns=int(r1.shape[0]), grids=g_count, levels=lv,
        nbar=nbar, c_n=c,
    )


def ic_matrix(panel: ReturnPanel, grids: int | None = None,
              levels: int | None = None,
              settings: EstimatorSettings | None = None) -> np.ndarray:
    """2x2 integrated-covariance matrix from the jump-adjusted panel:
    univariate JWC on the diagonal, pairwise JWC off it."""
    if settings is None:
        settings = EstimatorSettings(grids=grids, levels=levels)
    r1, r2 = _panel_returns(panel)
    g_count, lv = settings.resolve(r1.shape[0])
    wav = settings.filter_pair()
    d11 = _jwc_per_scale(r1, r1, g_count, lv, wav).sum()
    d22 = _jwc_per_scale(r2, r2, g_count, lv, wav).sum()
    d12 = _jwc_per_scale(r1, r2, g_count, lv, wav).sum()
    return np.array([[d11, d12], [d12, d22]])


@dataclass(frozen=True)
class PairMatrices:
    """Every estimator output for one synchronized pair, with the
    constants of the two-scale formula that produced them."""

    n_returns: int
    grids: int
    levels: int
    nbar: float
    c_n: float
    rc: np.ndarray
    bc: np.ndarray
    qv_tscv: np.ndarray
    ic_jwc: np.ndarray
    cj: np.ndarray
    jwc_per_scale: np.ndarray


def compute_pair_matrices(raw_panel: ReturnPanel, adjusted_panel: ReturnPanel,
                          cj_matrix: np.ndarray,
                          settings: EstimatorSettings | None = None) -> PairMatrices:
    """Assemble all estimator matrices for one pair.

    ``raw_panel`` feeds RC, BC and the TSCV-based total-variation matrix;
    ``adjusted_panel`` (jumps zeroed) feeds the JWC-based IC matrix.
    """
    settings = settings or EstimatorSettings()
    r1, r2 = _panel_returns(raw_panel)
    a1, a2 = _panel_returns(adjusted_panel)
    if a1.shape[0] != r1.shape[0]:
        raise EstimatorError("raw and adjusted panels differ in length")
    n = r1.shape[0]
    grids, levels = settings.resolve(n)
    nbar, c = two_scale_constants(n, grids)
    wav = settings.filter_pair()

    qv = np.array([
        [_tscv_value(r1, r1, grids), _tscv_value(r1, r2, grids)],
        [0.0, _tscv_value(r2, r2, grids)],
    ])
    qv[1, 0] = qv[0, 1]

    scale12 = _jwc_per_scale(a1, a2, grids, levels, wav)
    ic = np.array([
        [_jwc_per_scale(a1, a1, grids, levels, wav).sum(), scale12.sum()],
        [0.0, _jwc_per_scale(a2, a2, grids, levels, wav).sum()],
    ])
    ic[1, 0] = ic[0, 1]

    return PairMatrices(
        n_returns=n, grids=grids, levels=levels, nbar=nbar, c_n=c,
        rc=realized_matrix(raw_panel),
        bc=bipower_matrix(raw_panel),
        qv_tscv=qv,
        ic_jwc=ic,
        cj=np.asarray(cj_matrix, dtype=np.float64),
        jwc_per_scale=scale12,
    )

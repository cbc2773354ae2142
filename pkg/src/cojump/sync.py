"""Refresh-time synchronization of two asynchronous tick series.

A refresh time is reached once every asset has traded at least once since
the previous refresh time; prices are carried forward from each asset's
latest trade.  The resulting common grid supports covariance estimation
without interpolating prices.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SyncError
from .ingest import TickSeries


@dataclass(frozen=True)
class ReturnPanel:
    """Synchronized log-return panel for an asset pair.

    ``refresh_times`` has N+1 stamps; ``log_prices`` is (2, N+1) and
    ``returns`` (2, N) with ``returns[:, i]`` spanning stamps i..i+1.
    """

    asset_ids: tuple[str, str]
    refresh_times: np.ndarray
    log_prices: np.ndarray
    returns: np.ndarray

    @property
    def n_returns(self) -> int:
        return int(self.returns.shape[1])

    def scaled(self, factor: float) -> "ReturnPanel":
        """Panel with every return multiplied by ``factor`` (prices are
        rebuilt from the scaled returns, anchored at the first stamp)."""
        returns = self.returns * factor
        log_prices = np.concatenate(
            [self.log_prices[:, :1],
             self.log_prices[:, :1] + np.cumsum(returns, axis=1)],
            axis=1,
        )
        return ReturnPanel(
            asset_ids=self.asset_ids,
            refresh_times=self.refresh_times,
            log_prices=log_prices,
            returns=returns,
        )


def refresh_time(a: TickSeries, b: TickSeries) -> tuple[np.ndarray, np.ndarray]:
    """Synchronize two tick series onto their refresh-time grid.

    Returns the refresh stamps (int64 ns) and a (2, len(stamps)) matrix of
    prices carried forward from each asset's latest trade at or before each
    stamp.  Requires strictly increasing timestamps in both inputs (run
    dedupe first).
    """
    ta, pa = a.timestamps, a.prices
    tb, pb = b.timestamps, b.prices
    if ta.shape[0] == 0 or tb.shape[0] == 0:
        raise SyncError("cannot synchronize an empty tick series")
    for name, ts in ((a.asset_id, ta), (b.asset_id, tb)):
        if ts.shape[0] > 1 and not (np.diff(ts) > 0).all():
            raise SyncError(f"{name}: timestamps must be strictly increasing")

    stamps = []
    ia = ib = 0
    t = max(ta[0], tb[0])
    while True:
        # advance each pointer to the last trade at or before t
        ia = int(np.searchsorted(ta, t, side="right")) - 1
        ib = int(np.searchsorted(tb, t, side="right")) - 1
        stamps.append((t, pa[ia], pb[ib]))
        na, nb = ia + 1, ib + 1
        if na >= ta.shape[0] or nb >= tb.shape[0]:
            break
        t = max(ta[na], tb[nb])

    times = np.array([s[0] for s in stamps], dtype=np.int64)
    prices = np.array([[s[1] for s in stamps], [s[2] for s in stamps]])
    return times, prices


def log_returns(times: np.ndarray, prices: np.ndarray,
                asset_ids: tuple[str, str] = ("a", "b")) -> ReturnPanel:
    """Build a log-return panel from a synchronized price matrix."""
    times = np.asarray(times, dtype=np.int64)
    prices = np.asarray(prices, dtype=np.float64)
    if prices.ndim != 2 or prices.shape[0] != 2 or prices.shape[1] != times.shape[0]:
        raise SyncError("prices must be (2, len(times))")
    if times.shape[0] > 1 and not (np.diff(times) > 0).all():
        raise SyncError("refresh stamps must be strictly increasing")
    if not (prices > 0).all():
        raise SyncError("prices must be positive")
    logp = np.log(prices)
    return ReturnPanel(
        asset_ids=asset_ids,
        refresh_times=times,
        log_prices=logp,
        returns=np.diff(logp, axis=1),
    )


def synchronize(a: TickSeries, b: TickSeries) -> ReturnPanel:
    """Refresh-time sync plus log returns in one step."""
    times, prices = refresh_time(a, b)
    return log_returns(times, prices, asset_ids=(a.asset_id, b.asset_id))


def panel_from_log_prices(times: np.ndarray, logp: np.ndarray,
                          asset_ids: tuple[str, str] = ("a", "b")) -> ReturnPanel:
    """Panel straight from already-synchronized log prices (simulation path)."""
    times = np.asarray(times, dtype=np.int64)
    logp = np.asarray(logp, dtype=np.float64)
    return ReturnPanel(
        asset_ids=asset_ids,
        refresh_times=times,
        log_prices=logp,
        returns=np.diff(logp, axis=1),
    )

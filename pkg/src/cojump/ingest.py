"""Tick ingestion, deduplication, and trading-calendar filtering.

Timestamps are carried as int64 nanoseconds on the exchange-local clock
(a fixed UTC offset; no daylight saving).  A trading day runs from 17:00
local to 16:00 the next calendar day and is labeled by the date of its
close; the 16:00-17:00 maintenance gap belongs to no session.
"""

import configparser
import csv
import io
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import CalendarError, DataError, TickParseError

NS_PER_SEC = 1_000_000_000
NS_PER_DAY = 86_400 * NS_PER_SEC
_EPOCH = datetime(1970, 1, 1)
_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()


class Session(str, Enum):
    ASIA = "asia"
    EU = "eu"
    US = "us"


class Tick(NamedTuple):
    timestamp: int
    price: float
    volume: float | None = None


@dataclass(frozen=True)
class TickSeries:
    """Column-oriented tick storage for one asset."""

    asset_id: str
    timestamps: np.ndarray
    prices: np.ndarray
    volumes: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.timestamps.shape[0])

    def __getitem__(self, i: int) -> Tick:
        vol = None if self.volumes is None else float(self.volumes[i])
        return Tick(int(self.timestamps[i]), float(self.prices[i]), vol)

    def slice(self, start_ns: int, stop_ns: int) -> "TickSeries":
        """Ticks with start_ns <= timestamp < stop_ns."""
        lo = int(np.searchsorted(self.timestamps, start_ns, side="left"))
        hi = int(np.searchsorted(self.timestamps, stop_ns, side="left"))
        return TickSeries(
            asset_id=self.asset_id,
            timestamps=self.timestamps[lo:hi],
            prices=self.prices[lo:hi],
            volumes=None if self.volumes is None else self.volumes[lo:hi],
        )


def _parse_hhmm(text: str) -> int:
    """'17:00' -> seconds of day."""
    parts = text.strip().split(":")
    if len(parts) not in (2, 3):
        raise CalendarError(f"bad time of day: {text!r}")
    try:
        h, m = int(parts[0]), int(parts[1])
        s = int(parts[2]) if len(parts) == 3 else 0
    except ValueError as exc:
        raise CalendarError(f"bad time of day: {text!r}") from exc
    if not (0 <= h < 24 and 0 <= m < 60 and 0 <= s < 60):
        raise CalendarError(f"time of day out of range: {text!r}")
    return h * 3600 + m * 60 + s


@dataclass(frozen=True)
class SessionCalendar:
    """Session boundaries (seconds of local day), UTC offset, and holidays.

    Sessions partition the trading day: Asia [asia_start, midnight) plus
    [0, eu_start), Europe [eu_start, us_start), US [us_start, close).
    Weekends, configured holidays, Dec 24-26, and Dec 31-Jan 2 are always
    excluded, judged on the trading-day label.
    """

    asia_start: int = 17 * 3600
    eu_start: int = 2 * 3600
    us_start: int = 8 * 3600
    close: int = 16 * 3600
    utc_offset_hours: int = -6
    holidays: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not (0 <= self.eu_start < self.us_start < self.close < self.asia_start < 86400):
            raise CalendarError(
                "session boundaries must satisfy "
                "0 <= eu_start < us_start < close < asia_start < 24h"
            )

    @classmethod
    def from_file(cls, path) -> "SessionCalendar":
        parser = configparser.ConfigParser()
        read = parser.read(str(path))
        if not read:
            raise DataError(f"calendar file not found: {path}")
        kwargs = {}
        if parser.has_section("sessions"):
            sec = parser["sessions"]
            for key, attr in (("asia_start", "asia_start"), ("eu_start", "eu_start"),
                              ("us_start", "us_start"), ("close", "close")):
                if key in sec:
                    kwargs[attr] = _parse_hhmm(sec[key])
        if parser.has_section("calendar"):
            sec = parser["calendar"]
            if "utc_offset_hours" in sec:
                try:
                    kwargs["utc_offset_hours"] = int(sec["utc_offset_hours"])
                except ValueError as exc:
                    raise CalendarError("utc_offset_hours must be an integer") from exc
            if "holidays" in sec:
                days = set()
                for token in sec["holidays"].replace(",", "\n").split():
                    try:
                        days.add(date.fromisoformat(token))
                    except ValueError as exc:
                        raise CalendarError(f"bad holiday date: {token!r}") from exc
                kwargs["holidays"] = frozenset(days)
        return cls(**kwargs)

    def session_of_tod(self, tod_seconds: float) -> Session:
        if self.eu_start <= tod_seconds < self.us_start:
            return Session.EU
        if self.us_start <= tod_seconds < self.close:
            return Session.US
        if tod_seconds >= self.asia_start or tod_seconds < self.eu_start:
            return Session.ASIA
        raise CalendarError(
            f"time of day {tod_seconds}s falls in the {self.close}-{self.asia_start}s gap"
        )

    def session_window(self, day: date, session: Session) -> tuple[int, int]:
        """Local-ns [start, stop) of ``session`` within trading day ``day``."""
        close_day = local_date_to_ns(day)
        open_day = close_day - NS_PER_DAY
        table = {
            Session.ASIA: (open_day + self.asia_start * NS_PER_SEC,
                           close_day + self.eu_start * NS_PER_SEC),
            Session.EU: (close_day + self.eu_start * NS_PER_SEC,
                         close_day + self.us_start * NS_PER_SEC),
            Session.US: (close_day + self.us_start * NS_PER_SEC,
                         close_day + self.close * NS_PER_SEC),
        }
        return table[session]

    def day_window(self, day: date) -> tuple[int, int]:
        """Local-ns [open, close) of the whole trading day."""
        close_day = local_date_to_ns(day)
        return (close_day - NS_PER_DAY + self.asia_start * NS_PER_SEC,
                close_day + self.close * NS_PER_SEC)


def local_date_to_ns(d: date) -> int:
    """Midnight of ``d`` on the exchange-local clock, as int ns."""
    return (d.toordinal() - _EPOCH_ORDINAL) * NS_PER_DAY


def ns_to_local_datetime(ns: int) -> datetime:
    """Naive local datetime for an exchange-local ns stamp."""
    return _EPOCH + timedelta(microseconds=ns / 1000)


def _iso_to_local_ns(text: str, utc_offset_hours: int) -> int:
    raw = text.strip()
    if raw.endswith("Z") or raw.endswith("z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
        dt = dt + timedelta(hours=utc_offset_hours)
    delta = dt - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * NS_PER_SEC + delta.microseconds * 1000


def load_ticks(source, asset_id: str | None = None,
               calendar: SessionCalendar | None = None) -> TickSeries:
    """Read a tick CSV with header ``timestamp,price[,volume]``.

    Timestamps are either integer nanoseconds (already exchange-local) or
    ISO-8601 datetimes; zone-aware ISO stamps are converted to the
    exchange-local clock using the calendar's UTC offset, naive stamps are
    taken as already local.  Rows must be non-decreasing in time; prices
    must be positive and finite.
    """
    offset = (calendar or SessionCalendar()).utc_offset_hours
    close_me = False
    if isinstance(source, (str, Path)):
        if asset_id is None:
            asset_id = Path(source).stem
        handle = open(source, "r", newline="")
        close_me = True
    elif isinstance(source, (bytes, bytearray)):
        handle = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, io.BufferedIOBase) or (hasattr(source, "read") and "b" in getattr(source, "mode", "")):
        handle = io.TextIOWrapper(source, encoding="utf-8")
    else:
        handle = source
    if asset_id is None:
        asset_id = "asset"

    try:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise TickParseError("empty file", 1) from None
        cols = [c.strip().lower() for c in header]
        if cols[:2] != ["timestamp", "price"]:
            raise TickParseError(f"header must start with 'timestamp,price', got {header!r}", 1)
        has_volume = len(cols) > 2 and cols[2] == "volume"

        ts_list: list[int] = []
        px_list: list[float] = []
        vol_list: list[float] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise TickParseError(f"expected at least 2 fields, got {len(row)}", line_no)
            raw_ts = row[0].strip()
            try:
                ts = int(raw_ts)
            except ValueError:
                try:
                    ts = _iso_to_local_ns(raw_ts, offset)
                except ValueError as exc:
                    raise TickParseError(f"bad timestamp {raw_ts!r}: {exc}", line_no) from None
            try:
                price = float(row[1])
            except ValueError:
                raise TickParseError(f"bad price {row[1]!r}", line_no) from None
            if not np.isfinite(price) or price <= 0:
                raise TickParseError(f"price must be positive and finite, got {row[1]}", line_no)
            if ts_list and ts < ts_list[-1]:
                raise TickParseError("timestamps must be non-decreasing", line_no)
            ts_list.append(ts)
            px_list.append(price)
            if has_volume and len(row) > 2 and row[2].strip():
                try:
                    vol_list.append(float(row[2]))
                except ValueError:
                    raise TickParseError(f"bad volume {row[2]!r}", line_no) from None
            elif has_volume:
                vol_list.append(0.0)
    finally:
        if close_me:
            handle.close()

    return TickSeries(
        asset_id=asset_id,
        timestamps=np.array(ts_list, dtype=np.int64),
        prices=np.array(px_list, dtype=np.float64),
        volumes=np.array(vol_list, dtype=np.float64) if has_volume else None,
    )


def dedupe_timestamps(series: TickSeries) -> TickSeries:
    """Collapse equal-timestamp runs to one tick at their average price
    (volumes are summed).  Idempotent; preserves order."""
    ts = series.timestamps
    if ts.shape[0] == 0:
        return series
    if not (np.diff(ts) >= 0).all():
        raise DataError(f"{series.asset_id}: timestamps must be sorted before dedupe")
    uniq, starts, counts = np.unique(ts, return_index=True, return_counts=True)
    if uniq.shape[0] == ts.shape[0]:
        return series
    price_sums = np.add.reduceat(series.prices, starts)
    prices = price_sums / counts
    volumes = None
    if series.volumes is not None:
        volumes = np.add.reduceat(series.volumes, starts)
    return TickSeries(series.asset_id, uniq, prices, volumes)


def trading_day_label(ts_ns, calendar: SessionCalendar):
    """Trading-day label (date of the 16:00 close) for local-ns stamps.

    Stamps at or after the 17:00 open are labeled with the next calendar
    date; accepts a scalar (returns date) or array (returns epoch-day ints).
    """
    scalar = np.isscalar(ts_ns)
    ts = np.asarray(ts_ns, dtype=np.int64)
    days = ts // NS_PER_DAY
    tod = ts - days * NS_PER_DAY
    label = days + (tod >= calendar.asia_start * NS_PER_SEC)
    if scalar:
        return date.fromordinal(int(label) + _EPOCH_ORDINAL)
    return label


def epoch_day_to_date(day: int) -> date:
    return date.fromordinal(int(day) + _EPOCH_ORDINAL)


def trading_day_origin(label: date) -> date:
    """Calendar date on which the trading day labeled ``label`` opened."""
    return label - timedelta(days=1)


def is_excluded_date(d: date, calendar: SessionCalendar) -> bool:
    """Weekends, configured holidays, Dec 24-26, Dec 31-Jan 2."""
    if d.weekday() >= 5:
        return True
    if d in calendar.holidays:
        return True
    if d.month == 12 and d.day in (24, 25, 26, 31):
        return True
    if d.month == 1 and d.day in (1, 2):
        return True
    return False


def assign_session(ts_ns: int, calendar: SessionCalendar) -> Session:
    """Session of a single local-ns stamp; raises in the daily gap."""
    tod = (int(ts_ns) % NS_PER_DAY) / NS_PER_SEC
    return calendar.session_of_tod(tod)


def filter_calendar(series: TickSeries, calendar: SessionCalendar) -> TickSeries:
    """Drop ticks in the daily maintenance gap and ticks belonging to
    excluded trading days."""
    ts = series.timestamps
    if ts.shape[0] == 0:
        return series
    days = ts // NS_PER_DAY
    tod_ns = ts - days * NS_PER_DAY
    close_ns = calendar.close * NS_PER_SEC
    open_ns = calendar.asia_start * NS_PER_SEC
    in_gap = (tod_ns >= close_ns) & (tod_ns < open_ns)
    labels = days + (tod_ns >= open_ns)
    keep = ~in_gap
    for day in np.unique(labels):
        if is_excluded_date(epoch_day_to_date(day), calendar):
            keep &= labels != day
    return TickSeries(
        asset_id=series.asset_id,
        timestamps=ts[keep],
        prices=series.prices[keep],
        volumes=None if series.volumes is None else series.volumes[keep],
    )


def trading_days(series: TickSeries, calendar: SessionCalendar) -> list[date]:
    """Sorted distinct trading-day labels present in a series."""
    if len(series) == 0:
        return []
    labels = trading_day_label(series.timestamps, calendar)
    return [epoch_day_to_date(d) for d in np.unique(labels)]

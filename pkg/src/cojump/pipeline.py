"""Tick files to day results: the full per-day, per-session estimation run.

For every trading day and requested session window the pipeline slices the
tick streams, synchronizes them on refresh times, detects jumps, computes the
estimator matrices, bootstraps the co-jump test, and assembles one
:class:`~cojump.results.DayResult` plus any flagged co-jump records.

Replicated day runs are independent, so days can be processed in parallel;
results are merged in day order and every bootstrap stream is keyed by the
day's date ordinal, which makes output independent of the worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ingest
from .cojump_test import ic_star, run_cojump_test
from .errors import EstimatorError, NumericalError, SyncError
from .estimators import EstimatorSettings, compute_pair_matrices
from .ingest import Session, SessionCalendar, TickSeries
from .jumps import adjust_returns, annotate_records, cojump_matrix, cojump_variation, detect_pair
from .results import DayResult
from .sync import ReturnPanel, synchronize

SESSION_NAMES = ("asia", "eu", "us", "total")

# An estimation window needs enough refresh returns for one wavelet scale,
# a subgrid split, and a meaningful threshold median.
MIN_RETURNS = 4


@dataclass(frozen=True)
class PipelineSettings:
    """Knobs for a full estimation run."""

    sessions: tuple = SESSION_NAMES
    alpha: float = 0.05
    bootstrap_reps: int = 999
    seed: int = 0
    min_returns: int = MIN_RETURNS
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)

    def __post_init__(self):
        unknown = [s for s in self.sessions if s not in SESSION_NAMES]
        if unknown:
            raise EstimatorError(
                f"unknown sessions {unknown}; choose from {SESSION_NAMES}")
        if not 0.0 < self.alpha <= 1.0:
            raise EstimatorError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.bootstrap_reps < 2:
            raise EstimatorError(
                f"bootstrap needs at least 2 replicates, got {self.bootstrap_reps}")
        if self.min_returns < 4:
            raise EstimatorError(
                f"min_returns must be at least 4, got {self.min_returns}")


def _safe_corr(m: np.ndarray, off: float) -> float:
    if m[0, 0] > 0.0 and m[1, 1] > 0.0:
        return float(off / math.sqrt(m[0, 0] * m[1, 1]))
    return float("nan")


def process_window(panel: ReturnPanel, label, session: str,
                   settings: PipelineSettings) -> tuple[DayResult, list]:
    """Estimate one synchronized window and run the co-jump test.

    The bootstrap stream is keyed by (seed, date ordinal, session index),
    so a day's result does not depend on which other days are in the run.
    """
    warnings = []
    j1, j2 = detect_pair(panel.returns[0], panel.returns[1],
                         wavelet=settings.estimator.wavelet)
    cj12, records = cojump_variation(j1, j2)
    cj_mat = cojump_matrix(j1, j2)
    adjusted = ReturnPanel(
        asset_ids=panel.asset_ids,
        refresh_times=panel.refresh_times,
        log_prices=panel.log_prices,
        returns=np.vstack([adjust_returns(panel.returns[0], j1),
                           adjust_returns(panel.returns[1], j2)]),
    )
    pm = compute_pair_matrices(panel, adjusted, cj_mat, settings.estimator)

    ic = pm.ic_jwc
    rc12 = float(pm.rc[0, 1])
    ic12 = float(ic[0, 1])
    ic_ok = ic[0, 0] > 0.0 and ic[1, 1] > 0.0 and \
        abs(ic12) <= math.sqrt(ic[0, 0] * ic[1, 1])
    z_stat = float("nan")
    rejected = False
    if ic_ok:
        session_idx = SESSION_NAMES.index(session)
        seed_path = (settings.seed, label.toordinal(), session_idx)
        try:
            test = run_cojump_test(
                qv_rc=rc12, ic_jwc=ic12, ic_mat=ic,
                n_returns=panel.n_returns, alpha=settings.alpha,
                b_reps=settings.bootstrap_reps, seed_path=seed_path,
                settings=settings.estimator,
            )
            z_stat = test.z
            rejected = test.rejected
            ic12_screened = ic_star(rc12, ic12, test)
            if test.n_discarded:
                warnings.append(f"bootstrap_discarded_{test.n_discarded}")
        except (EstimatorError, NumericalError) as exc:
            warnings.append(f"test_failed:{exc}")
            ic12_screened = rc12
    else:
        warnings.append("ic_matrix_degenerate")
        ic12_screened = rc12

    total_corr = _safe_corr(pm.qv_tscv, float(pm.qv_tscv[0, 1]))
    cont_corr = _safe_corr(ic, ic12_screened)
    if math.isnan(total_corr) or math.isnan(cont_corr):
        warnings.append("correlation_undefined")

    cojump_day = bool(rejected and records)
    result = DayResult(
        date=label, session=session, n_returns=panel.n_returns,
        qv=pm.qv_tscv, ic=ic, cj=cj_mat, ic12_star=float(ic12_screened),
        rc12=rc12, bc12=float(pm.bc[0, 1]), z_stat=z_stat,
        rejected=rejected, cojump_day=cojump_day, n_cojumps=len(records),
        total_corr=total_corr, cont_corr=cont_corr,
        warnings=tuple(warnings),
    )
    return result, annotate_records(records, label, session)


def _session_window(calendar: SessionCalendar, label, session: str):
    if session == "total":
        return calendar.day_window(label)
    return calendar.session_window(label, Session(session))


def _day_task(args):
    label, a_day, b_day, calendar, settings = args
    results, records, skipped = [], [], []
    for session in settings.sessions:
        start, stop = _session_window(calendar, label, session)
        a = a_day.slice(start, stop)
        b = b_day.slice(start, stop)
        if len(a) == 0 or len(b) == 0:
            skipped.append(f"{label.isoformat()}/{session}: no ticks in window")
            continue
        try:
            panel = synchronize(a, b)
        except SyncError as exc:
            skipped.append(f"{label.isoformat()}/{session}: {exc}")
            continue
        if panel.n_returns < settings.min_returns:
            skipped.append(
                f"{label.isoformat()}/{session}: "
                f"{panel.n_returns} refresh returns (need {settings.min_returns})")
            continue
        result, recs = process_window(panel, label, session, settings)
        results.append(result)
        records.extend(recs)
    return label, results, records, skipped


def estimate_pair(ticks_a: TickSeries, ticks_b: TickSeries,
                  calendar: SessionCalendar | None = None,
                  settings: PipelineSettings | None = None,
                  workers: int = 1,
                  ) -> tuple[list[DayResult], list, list[str]]:
    """Run the full pipeline over every trading day two tick series share.

    Tick streams are calendar-filtered and deduplicated, then each day is
    processed per session.  Windows with too few refresh returns are skipped
    and reported in the returned log rather than raising.

    Returns
    -------
    (day_results, cojump_records, skipped)
        Day results ordered by (date, session), annotated co-jump records,
        and one log line per skipped window.
    """
    calendar = calendar or SessionCalendar()
    settings = settings or PipelineSettings()
    if workers < 1:
        raise EstimatorError(f"workers must be >= 1, got {workers}")

    a = ingest.dedupe_timestamps(ingest.filter_calendar(ticks_a, calendar))
    b = ingest.dedupe_timestamps(ingest.filter_calendar(ticks_b, calendar))
    days = sorted(set(ingest.trading_days(a, calendar))
                  | set(ingest.trading_days(b, calendar)))

    tasks = []
    for label in days:
        start, stop = calendar.day_window(label)
        tasks.append((label, a.slice(start, stop), b.slice(start, stop),
                      calendar, settings))

    if workers == 1 or len(tasks) <= 1:
        outputs = [_day_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_day_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))

    results, records, skipped = [], [], []
    for _, day_results, day_records, day_skipped in outputs:
        results.extend(day_results)
        records.extend(day_records)
        skipped.extend(day_skipped)
    return results, records, skipped

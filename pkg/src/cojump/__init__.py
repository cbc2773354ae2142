"""Quadratic-covariation decomposition for high-frequency price pairs.

Estimates total covariation of two asynchronously traded assets, splits it
into a continuous (integrated covariance) part and a co-jump part with a
wavelet-based two-scale estimator, and tests each day for co-jumps with a
seeded bootstrap.  Ships a Monte Carlo study, a session-aware tick
pipeline, and correlation/regression analytics.
"""

__version__ = "0.1.0"

from .analysis import (RegressionResult, gls_ratio_regression, logit_cojump,
                       matrix_correlation, ols_wald, regression_battery,
                       session_report)
from .backend import BACKEND_NAME, COMPILED
from .cojump_test import (CojumpTestResult, bootstrap_distribution, ic_star,
                          run_cojump_test, simulate_null_returns, z_statistic)
from .errors import (CalendarError, CojumpError, DataError, EstimatorError,
                     NumericalError, SyncError, TickParseError, TransformError)
from .estimators import (EstimatorSettings, JwcEstimate, PairMatrices,
                         bipower_covariance, bipower_matrix,
                         compute_pair_matrices, ic_matrix, jwc,
                         realized_covariance, realized_matrix, tscv,
                         two_scale_constants, wavelet_realized_covariance)
from .ingest import (Session, SessionCalendar, Tick, TickSeries,
                     dedupe_timestamps, filter_calendar, load_ticks,
                     trading_day_label, trading_days)
from .jumps import (CoJumpRecord, JumpSeries, adjust_returns, cojump_matrix,
                    cojump_variation, detect_jumps, detect_pair,
                    universal_threshold)
from .pipeline import PipelineSettings, estimate_pair, process_window
from .results import DayResult, read_day_results_csv, write_day_results_csv
from .simulate import (JumpPlan, SimConfig, SimDay, add_noise,
                       day_tick_series, inject_fixed_cojump, inject_jumps,
                       run_experiment, sample_panel, simulate_day)
from .sync import ReturnPanel, log_returns, refresh_time, synchronize
from .wavelet import (ModwtCoefficients, WaveletFilter, align_coefficients,
                      d4_filters, max_levels, modwt, phase_shifts,
                      unalign_coefficients)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Monte Carlo generator for correlated two-asset price paths.

Each asset follows a diffusion with lognormal stochastic volatility driven
by a mean-reverting Ornstein-Uhlenbeck factor; the volatility shock of
each asset is (negatively) correlated with its own price shock, and a
common Brownian term induces cross-asset correlation.  Jumps are injected
on top of the diffusion and i.i.d. Gaussian noise on top of the observed
log price.

Time inside a day is measured in day fractions, so with n steps the step
size is 1/n and a parameter set with exp(2*beta0) of order v produces an
expected daily integrated variance of order v.
"""

import math
from dataclasses import dataclass, field, replace
from datetime import date, timedelta

import numpy as np
from scipy.signal import lfilter

from ._rng import STREAM_JUMPS, STREAM_NOISE, STREAM_PATH, stream_rng
from .errors import EstimatorError
from .estimators import EstimatorSettings, _tscv_value, _jwc_per_scale
from .ingest import NS_PER_SEC, SessionCalendar, TickSeries, is_excluded_date, local_date_to_ns
from .jumps import adjust_returns, detect_pair
from .sync import ReturnPanel, panel_from_log_prices

ESTIMATOR_NAMES = ("rc", "bc", "tscv", "jwc")


@dataclass(frozen=True)
class JumpPlan:
    """How many jumps to inject per day and how to size them.

    ``cojumps`` simultaneous jumps add one shared size draw to both
    assets; ``idiosyncratic`` jumps per asset land at steps no other jump
    uses.  Sizes are Gaussian with standard deviation ``size_scale`` times
    the day's realized integrated volatility (asset 1's for the shared
    co-jump sizes, each asset's own for idiosyncratic ones).  With
    ``timing="poisson"`` the counts are Poisson draws with the configured
    numbers as means instead of fixed.
    """

    cojumps: int = 0
    idiosyncratic: int = 0
    size_scale: float = 1.0
    timing: str = "fixed"

    def __post_init__(self):
        if self.timing not in ("fixed", "poisson"):
            raise EstimatorError(f"unknown jump timing {self.timing!r}")
        if self.cojumps < 0 or self.idiosyncratic < 0 or self.size_scale < 0:
            raise EstimatorError("jump plan values must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    """Model parameters for one simulated trading day."""

    mu: tuple = (0.0, 0.0)
    beta0: float = -5.0 / 16.0
    beta1: float = 1.0 / 8.0
    mean_reversion: float = -1.0 / 40.0
    gamma: tuple = (-0.3, -0.3)
    n_steps: int = 23400
    delta_seconds: float = 1.0
    noise_std: float = 0.0
    jumps: JumpPlan = field(default_factory=JumpPlan)
    replications: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_steps < 2:
            raise EstimatorError("need at least 2 steps per day")
        if self.mean_reversion >= 0:
            raise EstimatorError("volatility factor must mean-revert (negative coefficient)")
        if not all(-1.0 < g < 1.0 for g in self.gamma):
            raise EstimatorError("leverage loadings must lie in (-1, 1)")

    @property
    def day_seconds(self) -> float:
        return self.n_steps * self.delta_seconds

    @property
    def spot_correlation(self) -> float:
        g1, g2 = self.gamma
        return math.sqrt((1.0 - g1 * g1) * (1.0 - g2 * g2))

    @classmethod
    def calibrated(cls, daily_vol: float = 0.01, **overrides) -> "SimConfig":
        """Parameter set rescaled so the expected daily integrated
        variance of each asset is daily_vol**2 (the intercept of the
        volatility equation shifts by log(daily_vol))."""
        beta0 = overrides.pop("beta0", -5.0 / 16.0) + math.log(daily_vol)
        return cls(beta0=beta0, **overrides)


@dataclass(frozen=True)
class SimDay:
    """One simulated day: latent path, spot volatilities, and exact truth
    bookkeeping (integrated covariance and injected jump variation)."""

    config: SimConfig
    index: int
    latent: np.ndarray          # (2, n+1) log prices including jumps
    sigma: np.ndarray           # (2, n) spot volatility at interval left ends
    true_ic: np.ndarray         # (2, 2) integrated covariance of the diffusion
    true_cj: np.ndarray         # (2, 2) injected jump variation
    observed: np.ndarray | None = None   # (2, n+1) latent plus noise
    jump_steps: tuple = ((), ())         # per-asset step indices
    jump_sizes: tuple = ((), ())         # per-asset sizes, aligned with steps

    @property
    def true_qv(self) -> np.ndarray:
        return self.true_ic + self.true_cj

    @property
    def n_steps(self) -> int:
        return int(self.sigma.shape[1])


def simulate_day(config: SimConfig, rng: np.random.Generator, index: int = 0) -> SimDay:
    """Euler path of the jump-free diffusion over one day.

    Draw order is fixed: volatility-factor starting values, the two
    asset-specific Brownian increment rows, then the common row.
    """
    n = config.n_steps
    dt = 1.0 / n
    kappa = config.mean_reversion
    v0 = rng.standard_normal(2) * math.sqrt(1.0 / (-2.0 * kappa))
    db = rng.standard_normal((2, n)) * math.sqrt(dt)
    dw = rng.standard_normal(n) * math.sqrt(dt)

    # v_{k+1} = (1 + kappa dt) v_k + dB_k, run as an AR(1) filter
    decay = 1.0 + kappa * dt
    sigma = np.empty((2, n))
    latent = np.empty((2, n + 1))
    for i in range(2):
        drive = np.concatenate(([v0[i]], db[i]))
        v = lfilter([1.0], [1.0, -decay], drive)
        sigma[i] = np.exp(config.beta0 + config.beta1 * v[:n])
        g = config.gamma[i]
        incr = config.mu[i] * dt + sigma[i] * (g * db[i] + math.sqrt(1.0 - g * g) * dw)
        latent[i, 0] = 0.0
        latent[i, 1:] = np.cumsum(incr)

    ic11 = float(np.sum(sigma[0] ** 2) * dt)
    ic22 = float(np.sum(sigma[1] ** 2) * dt)
    ic12 = float(config.spot_correlation * np.sum(sigma[0] * sigma[1]) * dt)
    true_ic = np.array([[ic11, ic12], [ic12, ic22]])
    return SimDay(
        config=config, index=index, latent=latent, sigma=sigma,
        true_ic=true_ic, true_cj=np.zeros((2, 2)),
    )


def inject_jumps(day: SimDay, plan: JumpPlan, rng: np.random.Generator) -> SimDay:
    """Add the plan's jumps to the latent path and update the truth.

    Draw order is fixed: Poisson counts (if used), co-jump steps, co-jump
    sizes, then per-asset idiosyncratic steps and sizes.  All jump steps
    within a day are distinct, so idiosyncratic jumps never create true
    co-jumps.
    """
    n = day.n_steps
    n_co = plan.cojumps
    n_idio = [plan.idiosyncratic, plan.idiosyncratic]
    if plan.timing == "poisson":
        n_co = int(rng.poisson(plan.cojumps))
        n_idio = [int(rng.poisson(plan.idiosyncratic)) for _ in range(2)]
    total = n_co + sum(n_idio)
    if total == 0:
        return replace(day, true_cj=day.true_cj.copy())
    if total > n:
        raise EstimatorError("more jumps requested than steps in the day")

    scale = [plan.size_scale * math.sqrt(day.true_ic[i, i]) for i in range(2)]
    used = np.array([], dtype=np.int64)

    def draw_steps(count):
        nonlocal used
        avail = np.setdiff1d(np.arange(n, dtype=np.int64), used)
        steps = np.sort(rng.choice(avail, size=count, replace=False))
        used = np.concatenate([used, steps])
        return steps

    co_steps = draw_steps(n_co)
    co_sizes = scale[0] * rng.standard_normal(n_co)
    idio_steps = []
    idio_sizes = []
    for i in range(2):
        steps = draw_steps(n_idio[i])
        idio_steps.append(steps)
        idio_sizes.append(scale[i] * rng.standard_normal(n_idio[i]))

    latent = day.latent.copy()
    steps_per_asset = []
    sizes_per_asset = []
    for i in range(2):
        steps = np.concatenate([co_steps, idio_steps[i]])
        sizes = np.concatenate([co_sizes, idio_sizes[i]])
        order = np.argsort(steps)
        steps, sizes = steps[order], sizes[order]
        delta = np.zeros(n)
        delta[steps] = sizes
        latent[i, 1:] += np.cumsum(delta)
        steps_per_asset.append(tuple(int(s) for s in steps))
        sizes_per_asset.append(tuple(float(s) for s in sizes))

    cj = day.true_cj.copy()
    co_var = float(np.sum(co_sizes ** 2))
    cj[0, 0] += co_var + float(np.sum(idio_sizes[0] ** 2))
    cj[1, 1] += co_var + float(np.sum(idio_sizes[1] ** 2))
    cj[0, 1] += co_var
    cj[1, 0] += co_var
    return replace(day, latent=latent, true_cj=cj,
                   jump_steps=tuple(steps_per_asset),
                   jump_sizes=tuple(sizes_per_asset))


def inject_fixed_cojump(day: SimDay, step: int | None = None,
                        size_scale: float = 1.0) -> SimDay:
    """Add one deterministic co-jump of the model's typical daily magnitude.

    Both assets jump by ``size_scale * sqrt(true_ic[0, 0])`` at the same
    step (mid-day by default).  Unlike :func:`inject_jumps` nothing is
    random, which makes this the right tool for power studies against a
    jump of known, reproducible size.
    """
    n = day.n_steps
    step = n // 2 if step is None else int(step)
    if not 0 <= step < n:
        raise EstimatorError(f"jump step {step} outside [0, {n})")
    if any(day.jump_steps):
        raise EstimatorError("day already carries jumps; start from a jump-free day")
    size = size_scale * math.sqrt(day.true_ic[0, 0])
    latent = day.latent.copy()
    latent[:, step + 1:] += size
    cj = day.true_cj.copy()
    cj += size * size
    return replace(day, latent=latent, true_cj=cj,
                   jump_steps=((step,), (step,)),
                   jump_sizes=((size,), (size,)))


def add_noise(day: SimDay, std: float, rng: np.random.Generator) -> SimDay:
    """Observed prices: latent plus i.i.d. Gaussian log-price noise."""
    if std < 0:
        raise EstimatorError("noise standard deviation must be non-negative")
    if std == 0.0:
        return replace(day, observed=day.latent.copy())
    eps = rng.standard_normal(day.latent.shape)
    return replace(day, observed=day.latent + std * eps)


def sample_panel(day: SimDay, every_seconds: float,
                 asset_ids: tuple[str, str] = ("a1", "a2")) -> ReturnPanel:
    """Sparse-sample the day at a fixed interval.

    Keeps every stride-th step starting at the open; when the interval
    does not divide the day the final (shorter) interval to the close is
    kept so the panel spans the whole day.  Uses the noisy observation
    when present, the latent path otherwise.
    """
    cfg = day.config
    stride = int(round(every_seconds / cfg.delta_seconds))
    if stride < 1:
        raise EstimatorError("sampling interval shorter than the simulation step")
    n = day.n_steps
    idx = np.arange(0, n + 1, stride)
    if idx[-1] != n:
        idx = np.append(idx, n)
    path = day.observed if day.observed is not None else day.latent
    times = (idx * cfg.delta_seconds * NS_PER_SEC).astype(np.int64)
    return panel_from_log_prices(times, path[:, idx], asset_ids=asset_ids)


def _estimator_errors(panel: ReturnPanel, truth: float,
                      settings: EstimatorSettings) -> dict[str, float]:
    r1, r2 = panel.returns[0], panel.returns[1]
    n = r1.shape[0]
    grids, levels = settings.resolve(n)
    rc = float(r1 @ r2)
    bp = lambda x: float((np.pi / 2.0) * np.sum(np.abs(x[1:]) * np.abs(x[:-1])))
    bc = (bp(r1 + r2) - bp(r1 - r2)) / 4.0
    ts = _tscv_value(r1, r2, grids)
    j1, j2 = detect_pair(r1, r2, wavelet=settings.filter_pair())
    a1 = adjust_returns(r1, j1)
    a2 = adjust_returns(r2, j2)
    jw = float(_jwc_per_scale(a1, a2, grids, levels, settings.filter_pair()).sum())
    return {"rc": rc - truth, "bc": bc - truth, "tscv": ts - truth, "jwc": jw - truth}


def _experiment_chunk(config: SimConfig, plans: tuple, noise_stds: tuple,
                      frequencies: tuple, seed: int, r_start: int, r_stop: int,
                      settings: EstimatorSettings) -> dict:
    """Errors for replications [r_start, r_stop); keys are
    (plan_index, noise_index, frequency_index, estimator)."""
    errors: dict[tuple, list[float]] = {}
    for r in range(r_start, r_stop):
        base = simulate_day(config, stream_rng(seed, r, STREAM_PATH), index=r)
        noise_eps = {}
        for ni, std in enumerate(noise_stds):
            if std > 0.0:
                noise_eps[ni] = stream_rng(seed, r, STREAM_NOISE, ni).standard_normal(
                    base.latent.shape)
        for pi, plan in enumerate(plans):
            day = inject_jumps(base, plan, stream_rng(seed, r, STREAM_JUMPS, pi))
            truth = float(day.true_ic[0, 1])
            for ni, std in enumerate(noise_stds):
                if std > 0.0:
                    observed = day.latent + std * noise_eps[ni]
                else:
                    observed = day.latent
                day_obs = replace(day, observed=observed)
                for fi, freq in enumerate(frequencies):
                    panel = sample_panel(day_obs, freq)
                    errs = _estimator_errors(panel, truth, settings)
                    for name, err in errs.items():
                        errors.setdefault((pi, ni, fi, name), []).append(err)
    return errors


def run_experiment(config: SimConfig, plans: dict[str, JumpPlan],
                   noise_stds: tuple = (0.0, 0.0015),
                   frequencies: tuple = (60.0, 300.0, 1800.0, 3600.0),
                   replications: int | None = None, seed: int | None = None,
                   settings: EstimatorSettings | None = None,
                   workers: int = 1) -> list[dict]:
    """Bias/variance table of the off-diagonal estimators over a grid of
    jump plans, noise levels, and sampling frequencies.

    Per replication one diffusion day is drawn; every cell reuses that day
    (common random numbers), with jump and noise draws on independent
    streams keyed by (seed, replication, purpose).  Errors are taken
    against the day's true integrated covariance; reported bias and
    variance are moments of the error scaled by 1e4.  Results are
    invariant to ``workers``.
    """
    settings = settings or EstimatorSettings()
    reps = config.replications if replications is None else int(replications)
    seed_val = config.seed if seed is None else int(seed)
    plan_names = tuple(plans.keys())
    plan_objs = tuple(plans.values())
    freqs = tuple(float(f) for f in frequencies)
    stds = tuple(float(s) for s in noise_stds)

    chunks = _chunk_ranges(reps, workers)
    args = [(config, plan_objs, stds, freqs, seed_val, a, b, settings)
            for a, b in chunks]
    if workers <= 1 or len(args) <= 1:
        partials = [_experiment_chunk(*a) for a in args]
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(_experiment_chunk_star, args))

    merged: dict[tuple, list[float]] = {}
    for part in partials:
        for key, vals in part.items():
            merged.setdefault(key, []).extend(vals)

    rows = []
    for pi, pname in enumerate(plan_names):
        for ni, std in enumerate(stds):
            for fi, freq in enumerate(freqs):
                for name in ESTIMATOR_NAMES:
                    errs = np.array(merged.get((pi, ni, fi, name), []))
                    scaled = errs * 1e4
                    rows.append({
                        "plan": pname,
                        "noise_std": std,
                        "frequency_seconds": freq,
                        "estimator": name,
                        "replications": int(errs.shape[0]),
                        "bias_1e4": float(scaled.mean()) if errs.size else float("nan"),
                        "variance_1e4": float(scaled.var(ddof=1)) if errs.size > 1 else float("nan"),
                    })
    return rows


def _experiment_chunk_star(args):
    return _experiment_chunk(*args)


def _chunk_ranges(total: int, workers: int) -> list[tuple[int, int]]:
    """Split range(total) into at most 4*workers contiguous chunks."""
    if total <= 0:
        return []
    n_chunks = max(1, min(total, 4 * max(1, workers)))
    size = math.ceil(total / n_chunks)
    return [(a, min(a + size, total)) for a in range(0, total, size)]


def next_trading_day(start: date, calendar: SessionCalendar) -> date:
    """First non-excluded trading-day label at or after ``start``."""
    d = start
    for _ in range(3660):
        if not is_excluded_date(d, calendar):
            return d
        d = d + timedelta(days=1)
    raise EstimatorError("no valid trading day within ten years of start")


def day_tick_series(day: SimDay, label: date, calendar: SessionCalendar,
                    asset_ids: tuple[str, str] = ("a1", "a2"),
                    ) -> tuple[TickSeries, TickSeries]:
    """Render a simulated day as two tick series on the exchange clock.

    The path is placed at the start of the US session of trading day
    ``label`` (a 6.5-hour day then spans 08:00-14:30 local).  Prices are
    the exponential of the observed log path.
    """
    if day.observed is None:
        raise EstimatorError("attach noise (or a zero-noise observation) before emitting ticks")
    n = day.n_steps
    open_ns = local_date_to_ns(label) + calendar.us_start * NS_PER_SEC
    step_ns = int(round(day.config.delta_seconds * NS_PER_SEC))
    times = open_ns + np.arange(n + 1, dtype=np.int64) * step_ns
    out = []
    for i in range(2):
        out.append(TickSeries(
            asset_id=asset_ids[i],
            timestamps=times.copy(),
            prices=np.exp(day.observed[i]),
        ))
    return out[0], out[1]

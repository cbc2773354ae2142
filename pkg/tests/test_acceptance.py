"""Acceptance gate: one test per release criterion, ordered 1-10.

Every test prints the figures it measured (worst-case errors, bias
tables, rejection rates) through ``capsys.disabled()`` so the numbers are
visible next to each pass/fail line in a verbose run.  Tolerances are the
release targets; they are fixed here, not derived from the code under
test.
"""

import filecmp
import math
import time
from datetime import date

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from cojump._rng import (STREAM_NOISE, STREAM_PATH, stream_rng)
from cojump.analysis import gls_ratio_regression, logit_cojump, ols_wald
from cojump.cli import main
from cojump.cojump_test import ic_star, run_cojump_test
from cojump.errors import CojumpError
from cojump.estimators import (EstimatorSettings, compute_pair_matrices,
                               ic_matrix, realized_covariance,
                               wavelet_realized_covariance)
from cojump.ingest import TickSeries
from cojump.jumps import adjust_returns, cojump_matrix, cojump_variation, detect_pair
from cojump.simulate import (JumpPlan, SimConfig, add_noise,
                             inject_fixed_cojump, run_experiment, sample_panel,
                             simulate_day)
from cojump.sync import ReturnPanel, panel_from_log_prices, refresh_time
from cojump.wavelet import BOUNDARY_CIRCULAR, max_levels, modwt


def _note(capsys, text: str) -> None:
    with capsys.disabled():
        print(f"\n      {text}", end="")


def _panel(r1, r2) -> ReturnPanel:
    r1 = np.asarray(r1, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    logp = np.zeros((2, r1.shape[0] + 1))
    logp[0, 1:] = np.cumsum(r1)
    logp[1, 1:] = np.cumsum(r2)
    times = np.arange(r1.shape[0] + 1, dtype=np.int64)
    return panel_from_log_prices(times, logp)


def test_criterion_01_wavelet_covariance_equals_realized_covariance(capsys):
    # The per-scale cross-products of a circular transform must add back
    # to realized covariance as a floating-point identity, at every panel
    # size, inside a 10 s budget for 1,000 panels.
    rng = np.random.default_rng(101)
    sizes = 2 ** rng.integers(6, 15, size=1000)  # 64 .. 16384
    start = time.perf_counter()
    worst = 0.0
    for n in sizes:
        n = int(n)
        r1 = rng.standard_normal(n) * 1e-3
        r2 = 0.5 * r1 + rng.standard_normal(n) * 1e-3
        panel = _panel(r1, r2)
        rc = realized_covariance(panel)
        c1 = modwt(panel.returns[0], boundary=BOUNDARY_CIRCULAR)
        c2 = modwt(panel.returns[1], boundary=BOUNDARY_CIRCULAR)
        total, _ = wavelet_realized_covariance(c1, c2)
        worst = max(worst, abs(total - rc) / max(1.0, abs(rc)))
    elapsed = time.perf_counter() - start
    _note(capsys, f"[c1] worst relative gap {worst:.3e}, {elapsed:.2f}s")
    assert worst <= 1e-12
    assert elapsed < 10.0


def test_criterion_02_energy_and_covariance_reconstruction(capsys):
    # Coefficient energy reproduces the series energy, and same-scale
    # cross-products reproduce the cross-moment, both to 1e-10 relative
    # on 1,000 random pairs.  The cross-moment of a pair can be near
    # zero, so its gap is measured against the scale of the two series.
    rng = np.random.default_rng(202)
    worst_energy = 0.0
    worst_cross = 0.0
    for _ in range(1000):
        n = int(rng.integers(32, 2049))
        x = rng.standard_normal(n)
        y = 0.6 * x + 0.8 * rng.standard_normal(n)
        cx = modwt(x, boundary=BOUNDARY_CIRCULAR)
        cy = modwt(y, boundary=BOUNDARY_CIRCULAR)
        energy = float(np.sum(cx.details ** 2) + cx.smooth @ cx.smooth)
        cross = float(np.einsum("jk,jk->", cx.details, cy.details)
                      + cx.smooth @ cy.smooth)
        worst_energy = max(worst_energy, abs(energy - x @ x) / (x @ x))
        scale = math.sqrt(float(x @ x) * float(y @ y))
        worst_cross = max(worst_cross, abs(cross - x @ y) / scale)
    _note(capsys, f"[c2] worst energy gap {worst_energy:.3e}, "
                  f"worst cross-moment gap {worst_cross:.3e}")
    assert worst_energy <= 1e-10
    assert worst_cross <= 1e-10


def _brute_refresh(ta, pa, tb, pb):
    """Direct transcription of the recursive refresh-time definition."""
    stamps = [max(ta[0], tb[0])]
    while True:
        t = stamps[-1]
        next_a = [u for u in ta if u > t]
        next_b = [u for u in tb if u > t]
        if not next_a or not next_b:
            break
        stamps.append(max(next_a[0], next_b[0]))
    prices = np.empty((2, len(stamps)))
    for k, t in enumerate(stamps):
        prices[0, k] = pa[max(i for i, u in enumerate(ta) if u <= t)]
        prices[1, k] = pb[max(i for i, u in enumerate(tb) if u <= t)]
    return np.array(stamps, dtype=np.int64), prices


def test_criterion_03_refresh_time_matches_brute_force(capsys):
    rng = np.random.default_rng(303)
    checked = 0
    for _ in range(10_000):
        na, nb = rng.integers(1, 21, size=2)
        ta = np.sort(rng.choice(200, size=int(na), replace=False)).astype(np.int64)
        tb = np.sort(rng.choice(200, size=int(nb), replace=False)).astype(np.int64)
        pa = 100.0 + rng.standard_normal(int(na))
        pb = 50.0 + rng.standard_normal(int(nb))
        a = TickSeries(asset_id="a", timestamps=ta, prices=pa)
        b = TickSeries(asset_id="b", timestamps=tb, prices=pb)
        times, prices = refresh_time(a, b)
        exp_times, exp_prices = _brute_refresh(ta, pa, tb, pb)
        assert_array_equal(times, exp_times)
        assert_array_equal(prices, exp_prices)
        checked += 1
    _note(capsys, f"[c3] {checked} random instances matched exactly")
    assert checked == 10_000


def test_criterion_04_desk_scale_bias_table(capsys):
    # 1,000 zero-noise replications at 1-minute sampling, three jump
    # plans.  Biases are in units of 1e-4 (the scale of one day's true
    # integrated covariance).
    start = time.perf_counter()
    config = SimConfig.calibrated()
    plans = {
        "none": JumpPlan(),
        "cojump": JumpPlan(cojumps=1),
        "idiosyncratic": JumpPlan(idiosyncratic=1),
    }
    rows = run_experiment(config, plans, noise_stds=(0.0,),
                          frequencies=(60.0,), replications=1000, seed=0)
    elapsed = time.perf_counter() - start
    cell = {(r["plan"], r["estimator"]): r for r in rows}

    msg = ", ".join(
        f"{p}/{e}: {cell[(p, e)]['bias_1e4']:+.4f}"
        for p in plans for e in ("rc", "jwc"))
    _note(capsys, f"[c4] biases(1e-4) {msg}, {elapsed:.1f}s")

    for est in ("rc", "bc", "tscv", "jwc"):
        assert abs(cell[("none", est)]["bias_1e4"]) <= 0.05, est
    assert 0.7 <= cell[("cojump", "rc")]["bias_1e4"] <= 1.3
    assert abs(cell[("cojump", "jwc")]["bias_1e4"]) <= 0.05
    assert abs(cell[("idiosyncratic", "jwc")]["bias_1e4"]) <= 0.05
    assert abs(cell[("idiosyncratic", "rc")]["bias_1e4"]) <= 0.05
    assert (cell[("idiosyncratic", "rc")]["variance_1e4"]
            >= 2.0 * cell[("none", "rc")]["variance_1e4"])
    assert elapsed < 600.0


def _variance_estimates(panel: ReturnPanel) -> dict:
    pm = compute_pair_matrices(panel, panel, np.zeros((2, 2)),
                               EstimatorSettings())
    return {"rc": float(pm.rc[0, 0]), "bc": float(pm.bc[0, 0]),
            "tscv": float(pm.qv_tscv[0, 0]), "jwc": float(pm.ic_jwc[0, 0])}


def test_criterion_05_noise_robustness_of_variance_estimates(capsys):
    # At 1-second sampling with noise std 0.0015 the plain sum of squares
    # absorbs the noise variance while the two-scale family does not;
    # with no noise the four variance estimates must be mutually
    # consistent at Monte Carlo resolution.
    reps = 40
    config = SimConfig.calibrated()
    names = ("rc", "bc", "tscv", "jwc")
    noisy = {k: [] for k in names}
    clean = {k: [] for k in names}
    for r in range(reps):
        day = simulate_day(config, stream_rng(5, r, STREAM_PATH))
        truth = float(day.true_ic[0, 0])
        with_noise = add_noise(day, 0.0015, stream_rng(5, r, STREAM_NOISE))
        no_noise = add_noise(day, 0.0, stream_rng(5, r, STREAM_NOISE))
        for store, obs in ((noisy, with_noise), (clean, no_noise)):
            est = _variance_estimates(sample_panel(obs, 1.0))
            for k in names:
                store[k].append(est[k] - truth)
    bias = {k: float(np.mean(noisy[k])) for k in names}
    _note(capsys, "[c5] noisy biases " + ", ".join(
        f"{k} {bias[k]:+.2e}" for k in names))
    # direction: spurious volatility from noise inflates the plain sum
    assert bias["rc"] > 0.0
    assert bias["rc"] > 10.0 * abs(bias["tscv"])
    assert bias["rc"] > 10.0 * abs(bias["jwc"])

    pairs = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            diff = np.array(clean[a]) - np.array(clean[b])
            se = float(diff.std(ddof=1)) / math.sqrt(reps)
            pairs.append((a, b, float(diff.mean()), se))
    worst = max(abs(m) / s for _, _, m, s in pairs)
    _note(capsys, f"[c5] zero-noise worst pairwise gap {worst:.2f} se")
    for a, b, mean_diff, se in pairs:
        assert abs(mean_diff) <= 4.0 * se, (a, b, mean_diff, se)


def test_criterion_06_continuous_correlation_recovery(capsys):
    # Jump-screened correlation over 1,000 one-minute days should average
    # to the model's spot correlation of 0.91.  Three subsampling grids:
    # with no noise, light subsampling keeps the estimator variance low.
    start = time.perf_counter()
    config = SimConfig.calibrated()
    settings = EstimatorSettings(grids=3)
    vals = np.empty(1000)
    for r in range(1000):
        day = simulate_day(config, stream_rng(0, r, STREAM_PATH))
        day = add_noise(day, 0.0, stream_rng(0, r, STREAM_NOISE))
        panel = sample_panel(day, 60.0)
        j1, j2 = detect_pair(panel.returns[0], panel.returns[1])
        adj = _panel(adjust_returns(panel.returns[0], j1),
                     adjust_returns(panel.returns[1], j2))
        ic = ic_matrix(adj, settings=settings)
        vals[r] = ic[0, 1] / math.sqrt(ic[0, 0] * ic[1, 1])
    mean = float(vals.mean())
    se = float(vals.std(ddof=1)) / math.sqrt(vals.shape[0])
    elapsed = time.perf_counter() - start
    _note(capsys, f"[c6] mean correlation {mean:.4f} (se {se:.4f}, "
                  f"target 0.91 +- 0.02), {elapsed:.1f}s")
    assert abs(mean - config.spot_correlation) <= 0.02


def _bootstrap_decision(panel: ReturnPanel, seed_path: tuple,
                        settings: EstimatorSettings) -> bool:
    j1, j2 = detect_pair(panel.returns[0], panel.returns[1])
    adjusted = ReturnPanel(
        asset_ids=panel.asset_ids,
        refresh_times=panel.refresh_times,
        log_prices=panel.log_prices,
        returns=np.vstack([adjust_returns(panel.returns[0], j1),
                           adjust_returns(panel.returns[1], j2)]),
    )
    pm = compute_pair_matrices(panel, adjusted, cojump_matrix(j1, j2), settings)
    test = run_cojump_test(
        qv_rc=float(pm.rc[0, 1]), ic_jwc=float(pm.ic_jwc[0, 1]),
        ic_mat=pm.ic_jwc, n_returns=panel.n_returns, alpha=0.05,
        b_reps=999, seed_path=seed_path, settings=settings)
    return test.rejected


def test_criterion_07_bootstrap_test_size_and_power(capsys):
    # Size: rejection rate on 500 jump-free days must sit in [0.03, 0.08]
    # at the 5% level.  Power: the same test must reject at least 90% of
    # days carrying one co-jump of the model's typical daily magnitude.
    start = time.perf_counter()
    config = SimConfig.calibrated()
    settings = EstimatorSettings(grids=3)
    days = 500
    size_hits = 0
    power_hits = 0
    for d in range(days):
        day = simulate_day(config, stream_rng(96, d, STREAM_PATH))
        day = add_noise(day, 0.0, stream_rng(96, d, STREAM_NOISE))
        if _bootstrap_decision(sample_panel(day, 60.0), (96, d), settings):
            size_hits += 1
        day = simulate_day(config, stream_rng(97, d, STREAM_PATH))
        day = inject_fixed_cojump(day)
        day = add_noise(day, 0.0, stream_rng(97, d, STREAM_NOISE))
        if _bootstrap_decision(sample_panel(day, 60.0), (97, d), settings):
            power_hits += 1
    size = size_hits / days
    power = power_hits / days
    elapsed = time.perf_counter() - start
    _note(capsys, f"[c7] size {size:.4f} (target [0.03, 0.08]), "
                  f"power {power:.4f} (target >= 0.9), {elapsed:.0f}s")
    assert 0.03 <= size <= 0.08
    assert power >= 0.9


def test_criterion_08_jump_localization_and_false_cojump_screen(capsys):
    # A 10x-std return must be flagged at its exact index nearly always,
    # clean days must stay nearly flag-free, and a day whose only jump is
    # idiosyncratic must never yield a co-jump record.
    inject_at = 200
    days = 1000
    config = SimConfig.calibrated()
    detected = 0
    false_flags = 0
    indices = 0
    record_days = 0
    for d in range(days):
        day = simulate_day(config, stream_rng(0, d, STREAM_PATH))
        day = add_noise(day, 0.0, stream_rng(0, d, STREAM_NOISE))
        panel = sample_panel(day, 60.0)
        r1, r2 = panel.returns[0], panel.returns[1]
        c1, c2 = detect_pair(r1, r2)
        false_flags += c1.count + c2.count
        indices += 2 * r1.shape[0]
        spiked = r1.copy()
        spiked[inject_at] += 10.0 * r1.std()
        j1, j2 = detect_pair(spiked, r2)
        if inject_at in j1.indices:
            detected += 1
        _, records = cojump_variation(j1, j2)
        if records:
            record_days += 1
    rate = detected / days
    fp = false_flags / indices
    _note(capsys, f"[c8] exact-index detection {rate:.4f}, false-flag rate "
                  f"{fp:.2e}, idiosyncratic days with records {record_days}")
    assert rate >= 0.99
    assert fp <= 0.02
    assert record_days == 0


def test_criterion_09_regression_battery(capsys):
    # Exact case: regressing a series on itself.
    rng = np.random.default_rng(909)
    v = rng.standard_normal(300)
    res = ols_wald(v, v)
    assert res.coef[0] == 0.0 and res.coef[1] == 1.0
    assert res.wald == 0.0

    # Simulated-data recovery for the three regression flavours, each
    # within 3 Monte Carlo standard errors of the generating values.
    reps = 200
    ols_est = np.empty((reps, 2))
    gls_est = np.empty((reps, 2))
    logit_est = np.empty((reps, 2))
    for r in range(reps):
        rr = np.random.default_rng(10_000 + r)
        x = rr.uniform(-1.0, 2.0, 250)
        y = 0.5 + 1.5 * x + rr.standard_normal(250) * 0.4
        ols_est[r] = ols_wald(y, x).coef
        xg = rr.uniform(0.5, 3.0, 250)
        yg = 0.2 + 1.3 * xg + rr.standard_normal(250) * 0.2 * xg
        gls_est[r] = gls_ratio_regression(yg, xg).coef
        # the logit maximum-likelihood fit carries an O(1/n) slope bias,
        # so its recovery check needs a larger per-rep sample than the
        # linear models for the bias to sit below Monte Carlo resolution
        xl = rr.standard_normal(4000)
        pl = 1.0 / (1.0 + np.exp(-(-1.5 + 1.2 * xl)))
        yl = (rr.uniform(size=4000) < pl).astype(float)
        logit_est[r] = logit_cojump(yl, xl).coef
    for name, est, truth in (("ols", ols_est, (0.5, 1.5)),
                             ("gls", gls_est, (0.2, 1.3)),
                             ("logit", logit_est, (-1.5, 1.2))):
        mean = est.mean(axis=0)
        se = est.std(axis=0, ddof=1) / math.sqrt(reps)
        _note(capsys, f"[c9] {name} mean ({mean[0]:+.4f}, {mean[1]:+.4f}) "
                      f"truth {truth}")
        assert abs(mean[0] - truth[0]) <= 3.0 * se[0], name
        assert abs(mean[1] - truth[1]) <= 3.0 * se[1], name

    # Size of the slope test when the indicator is pure noise.
    size_reps = 1500
    rejections = 0
    used = 0
    for r in range(size_reps):
        rr = np.random.default_rng(20_000 + r)
        y = (rr.uniform(size=500) < 0.15).astype(float)
        if y.sum() in (0.0, 500.0):
            continue
        x = rr.standard_normal(500)
        try:
            fit = logit_cojump(y, x)
        except CojumpError:
            continue
        used += 1
        rejections += fit.wald_pvalue < 0.05
    rate = rejections / used
    _note(capsys, f"[c9] logit size {rate:.4f} over {used} runs "
                  f"(target <= 0.07)")
    assert rate <= 0.07


def _run_cli(args) -> None:
    code = main(args)
    assert code == 0, f"cojump {' '.join(args)} exited {code}"


def _assert_dirs_identical(dir_a, dir_b) -> list:
    names_a = sorted(p.name for p in dir_a.iterdir())
    names_b = sorted(p.name for p in dir_b.iterdir())
    assert names_a == names_b
    for name in names_a:
        equal = filecmp.cmp(dir_a / name, dir_b / name, shallow=False)
        assert equal, f"{name} differs between worker counts"
    return names_a


def test_criterion_10_outputs_identical_across_worker_counts(capsys, tmp_path):
    # The same seed must give byte-identical files whether the run uses
    # one worker or eight, for both the simulation study and the tick
    # pipeline (manifests included: they do not record the worker count).
    sim = {1: tmp_path / "sim1", 8: tmp_path / "sim8"}
    for workers, out in sim.items():
        _run_cli(["simulate", "--out", str(out), "--seed", "11",
                  "--replications", "6", "--noise", "0",
                  "--frequency", "60", "--emit-ticks", "3",
                  "--workers", str(workers)])
    sim_files = _assert_dirs_identical(sim[1], sim[8])

    est = {1: tmp_path / "est1", 8: tmp_path / "est8"}
    ticks = sorted(str(p) for p in sim[1].glob("ticks_*.csv"))
    assert len(ticks) == 2
    for workers, out in est.items():
        _run_cli(["estimate", *ticks, "--out", str(out), "--seed", "11",
                  "--sessions", "us,total", "--bootstrap-reps", "25",
                  "--grids", "3", "--workers", str(workers)])
    est_files = _assert_dirs_identical(est[1], est[8])
    _note(capsys, f"[c10] {len(sim_files)} simulate files and "
                  f"{len(est_files)} estimate files byte-identical at "
                  f"workers 1 vs 8")

"""Jump flagging, size read-off, and co-jump intersection."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from cojump.errors import EstimatorError
from cojump.jumps import (CoJumpRecord, JumpSeries, adjust_returns,
                          annotate_records, cojump_matrix, cojump_variation,
                          detect_jumps, detect_pair, universal_threshold)
from cojump.wavelet import align_coefficients, modwt

RNG = np.random.default_rng(2024)


def test_universal_threshold_worked_example():
    # median |W| = 1 and N = 4: sqrt(2) * 1 / 0.6745 * sqrt(2 ln 4)
    w = np.array([1.0, -1.0, 1.0, -1.0])
    expected = np.sqrt(2.0) / 0.6745 * np.sqrt(2.0 * np.log(4.0))
    got = universal_threshold(w, 4)
    assert_allclose(got, expected, rtol=1e-15)
    assert round(got, 5) == 3.49121


def test_universal_threshold_homogeneous():
    w = RNG.standard_normal(200)
    base = universal_threshold(w)
    assert_allclose(universal_threshold(3.0 * w), 3.0 * base, rtol=1e-12)


def test_universal_threshold_validation():
    with pytest.raises(EstimatorError):
        universal_threshold(np.array([]))
    with pytest.raises(EstimatorError):
        universal_threshold(np.array([1.0]), n=1)


def test_detect_flags_strictly_above():
    n = 64
    r = RNG.standard_normal(n) * 1e-3
    coeffs = align_coefficients(modwt(r, levels=1, boundary="circular"))
    w1 = coeffs.details[0]
    # set the threshold exactly at the largest magnitude: nothing flagged
    at_max = float(np.max(np.abs(w1)))
    assert detect_jumps(r, coeffs, at_max).count == 0
    # just below it: the argmax index is flagged
    jumps = detect_jumps(r, coeffs, at_max * (1 - 1e-12))
    assert int(np.argmax(np.abs(w1))) in jumps.indices


def test_detect_requires_aligned():
    r = RNG.standard_normal(32)
    coeffs = modwt(r, levels=1)
    with pytest.raises(EstimatorError):
        detect_jumps(r, coeffs, 1.0)


def test_sizes_are_raw_returns():
    n = 128
    r = RNG.standard_normal(n) * 1e-4
    k = 50
    r[k] += 0.05  # overwhelming single move
    j1, _ = detect_pair(r, r)
    assert k in j1.indices
    pos = int(np.flatnonzero(j1.indices == k)[0])
    assert j1.sizes[pos] == r[k]


def test_adjust_returns_zeroes_only_flags():
    r = np.array([1.0, 2.0, 3.0, 4.0])
    jumps = JumpSeries(n=4, indices=np.array([1, 3]), sizes=np.array([2.0, 4.0]),
                       threshold=0.5)
    out = adjust_returns(r, jumps)
    assert_array_equal(out, [1.0, 0.0, 3.0, 0.0])
    assert_array_equal(r, [1.0, 2.0, 3.0, 4.0])  # input untouched
    with pytest.raises(EstimatorError):
        adjust_returns(np.ones(3), jumps)


def test_cojump_variation_intersection():
    j1 = JumpSeries(n=10, indices=np.array([2, 5, 7]),
                    sizes=np.array([0.1, -0.2, 0.3]), threshold=0.05)
    j2 = JumpSeries(n=10, indices=np.array([5, 7, 9]),
                    sizes=np.array([0.4, -0.1, 0.2]), threshold=0.05)
    total, records = cojump_variation(j1, j2)
    assert_allclose(total, (-0.2) * 0.4 + 0.3 * (-0.1))
    assert [rec.index for rec in records] == [5, 7]
    assert records[0].size_1 == -0.2 and records[0].size_2 == 0.4
    assert records[0].direction == -1 and records[1].direction == -1


def test_cojump_disjoint_gives_nothing():
    j1 = JumpSeries(n=10, indices=np.array([1]), sizes=np.array([0.5]), threshold=0.1)
    j2 = JumpSeries(n=10, indices=np.array([2]), sizes=np.array([0.5]), threshold=0.1)
    total, records = cojump_variation(j1, j2)
    assert total == 0.0 and records == []
    with pytest.raises(EstimatorError):
        cojump_variation(j1, JumpSeries(n=8, indices=np.array([], dtype=int),
                                        sizes=np.array([]), threshold=0.1))


def test_cojump_matrix_psd_shape():
    j1 = JumpSeries(n=10, indices=np.array([2, 5]),
                    sizes=np.array([0.1, -0.2]), threshold=0.05)
    j2 = JumpSeries(n=10, indices=np.array([5, 9]),
                    sizes=np.array([0.4, 0.2]), threshold=0.05)
    cj = cojump_matrix(j1, j2)
    assert cj.shape == (2, 2)
    assert cj[0, 1] == cj[1, 0]
    assert_allclose(np.diag(cj), [0.1 ** 2 + 0.2 ** 2, 0.4 ** 2 + 0.2 ** 2])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cojump_matrix_cauchy_schwarz(seed):
    rng = np.random.default_rng(seed)
    n = 64
    r1 = rng.standard_normal(n) * 1e-3
    r2 = rng.standard_normal(n) * 1e-3
    # plant a few large common and idiosyncratic moves
    for k in rng.integers(0, n, size=3):
        r1[k] += rng.choice([-1, 1]) * 0.05
        r2[k] += rng.choice([-1, 1]) * 0.05
    j1, j2 = detect_pair(r1, r2)
    cj = cojump_matrix(j1, j2)
    assert abs(cj[0, 1]) <= np.sqrt(cj[0, 0] * cj[1, 1]) + 1e-15


def test_detect_pair_localizes_planted_cojump():
    n = 390
    r1 = RNG.standard_normal(n) * 1e-3
    r2 = RNG.standard_normal(n) * 1e-3
    k = 200
    r1[k] += 0.03
    r2[k] -= 0.03
    j1, j2 = detect_pair(r1, r2)
    total, records = cojump_variation(j1, j2)
    assert any(rec.index == k for rec in records)
    assert total < 0  # opposite-signed common move


def test_detect_pair_idiosyncratic_only_no_records():
    n = 256
    r1 = np.full(n, 1e-4) * np.sign(RNG.standard_normal(n))
    r2 = np.full(n, 1e-4) * np.sign(RNG.standard_normal(n))
    r1[100] += 0.05  # jump in asset 1 only
    j1, j2 = detect_pair(r1, r2)
    assert 100 in j1.indices
    _, records = cojump_variation(j1, j2)
    assert records == []


def test_detect_pair_validation():
    with pytest.raises(EstimatorError):
        detect_pair(np.ones(3), np.ones(3))


def test_annotate_records():
    from datetime import date
    recs = [CoJumpRecord(index=5, size_1=0.1, size_2=0.2, direction=1)]
    out = annotate_records(recs, date(2013, 4, 2), "us")
    assert out[0].date == date(2013, 4, 2)
    assert out[0].session == "us"
    assert recs[0].date is None  # originals untouched

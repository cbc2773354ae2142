"""Transform-level properties: filters, energy, reconstruction, alignment."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cojump.errors import TransformError
from cojump.wavelet import (ModwtCoefficients, WaveletFilter, align_coefficients,
                            d4_filters, max_levels, modwt, phase_shifts,
                            unalign_coefficients)

RNG = np.random.default_rng(1234)


def test_d4_filter_values_exact():
    filt = d4_filters()
    root3 = np.sqrt(3.0)
    expected_scaling = np.array([1 + root3, 3 + root3, 3 - root3, 1 - root3]) / 8.0
    assert_array_equal(filt.scaling, expected_scaling)
    # Quadrature mirror: wavelet taps are the reversed scaling taps with
    # alternating signs.
    assert_array_equal(filt.wavelet, expected_scaling[::-1] * np.array([1, -1, 1, -1]))


def test_filter_normalization():
    filt = d4_filters()
    assert abs(filt.wavelet.sum()) < 1e-15
    assert abs(filt.scaling.sum() - 1.0) < 1e-15
    assert abs(np.sum(filt.wavelet ** 2) - 0.5) < 1e-15
    assert abs(np.sum(filt.scaling ** 2) - 0.5) < 1e-15
    assert filt.width == 4
    assert filt.scale_width(1) == 4
    assert filt.scale_width(3) == 13  # (2**2)(4-1)+1


def test_filter_validation_rejects_bad_taps():
    with pytest.raises(TransformError):
        WaveletFilter(name="bad", scaling=np.array([0.5, 0.5]),
                      wavelet=np.array([0.5, 0.5]))


def test_max_levels_small_series():
    # Level j needs its equivalent filter (width 3*2^(j-1)+1) inside the
    # series and at least 2^j points.
    assert max_levels(4, d4_filters()) == 1
    assert max_levels(8, d4_filters()) == 2
    assert max_levels(16, d4_filters()) == 3
    assert max_levels(16384, d4_filters()) == 6  # capped
    assert max_levels(3, d4_filters()) == 0  # nothing fits


def test_energy_identity_circular():
    for n in (64, 127, 256, 1000):
        x = RNG.standard_normal(n)
        coeffs = modwt(x, boundary="circular")
        energy = sum(float(w @ w) for w in coeffs.details) + float(coeffs.smooth @ coeffs.smooth)
        assert_allclose(energy, float(x @ x), rtol=1e-12)


def test_covariance_reconstruction_circular():
    # Cross-moments of two series are recovered exactly from their
    # coefficients scale by scale.
    for n in (128, 500):
        x = RNG.standard_normal(n)
        y = RNG.standard_normal(n)
        cx = modwt(x, boundary="circular")
        cy = modwt(y, boundary="circular")
        total = sum(float(wx @ wy) for wx, wy in zip(cx.details, cy.details))
        total += float(cx.smooth @ cy.smooth)
        assert_allclose(total, float(x @ y), rtol=1e-10, atol=1e-12)


def test_linearity():
    n = 256
    x = RNG.standard_normal(n)
    y = RNG.standard_normal(n)
    a, b = 2.5, -1.25
    cz = modwt(a * x + b * y, boundary="circular")
    cx = modwt(x, boundary="circular")
    cy = modwt(y, boundary="circular")
    for wz, wx, wy in zip(cz.details, cx.details, cy.details):
        assert_allclose(wz, a * wx + b * wy, rtol=1e-12, atol=1e-14)
    assert_allclose(cz.smooth, a * cx.smooth + b * cy.smooth, rtol=1e-12, atol=1e-14)


def test_phase_shifts_d4():
    shifts = phase_shifts(d4_filters(), 4)
    # one entry per detail scale plus one for the smooth band
    assert list(shifts[:4]) == [2, 5, 11, 23]
    assert shifts.shape == (5,)


def test_impulse_alignment():
    # After phase alignment the dominant coefficient of every scale sits at
    # the impulse position.
    n = 512
    pos = 137
    x = np.zeros(n)
    x[pos] = 1.0
    coeffs = align_coefficients(modwt(x, levels=4, boundary="circular"))
    for w in coeffs.details:
        assert int(np.argmax(np.abs(w))) == pos


def test_align_unalign_round_trip():
    x = RNG.standard_normal(300)
    coeffs = modwt(x, levels=3)
    aligned = align_coefficients(coeffs)
    back = unalign_coefficients(aligned)
    for w0, w1 in zip(coeffs.details, back.details):
        assert_array_equal(w0, w1)
    assert_array_equal(coeffs.smooth, back.smooth)
    with pytest.raises(TransformError):
        align_coefficients(aligned)
    with pytest.raises(TransformError):
        unalign_coefficients(coeffs)


def test_reflecting_boundary_shape_and_finite():
    x = RNG.standard_normal(200)
    coeffs = modwt(x, boundary="reflecting")
    assert coeffs.details.shape == (coeffs.levels, 200)
    assert coeffs.smooth.shape == (200,)
    assert np.all(np.isfinite(coeffs.details))


def test_boundary_mask_width():
    x = RNG.standard_normal(64)
    coeffs = modwt(x, levels=2, boundary="circular")
    mask = coeffs.boundary_mask()
    filt = d4_filters()
    for j in range(coeffs.levels):
        assert mask[j].sum() == filt.scale_width(j + 1) - 1


def test_modwt_input_validation():
    with pytest.raises(TransformError):
        modwt(np.array([1.0, np.nan, 0.0, 0.0]))
    with pytest.raises(TransformError):
        modwt(np.ones(10), levels=9)
    with pytest.raises(TransformError):
        modwt(np.ones((2, 8)))

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from nslab import moments, reconstruct
from nslab.gridfn import Grid, Interval, SampledFunction, make_bump, norm
from nslab.moments import PrecisionConfig
from nslab.reconstruct import (RemoteData, expansion_basis, invert,
                               recover_moments, sample_remote, select_order,
                               stability_sweep)

I01 = Interval(0.0, 1.0)
J23 = Interval(2.0, 3.0)


def closed_form_hilbert_data(f_j, J, num=64, bits=320, terms=400):
    """Extended-precision samples of (1/pi) sum_j f_j x^{-j-1} on J.

    f_j are exact moments of a source on (0,1); the series is the analytic
    continuation of the transform off the source interval, so this is an
    independent data oracle for the moment-recovery fit.
    """
    pts = np.linspace(J.a, J.b, num)
    vals = np.empty(num, dtype=object)
    with mpmath.workprec(bits):
        for i, x in enumerate(pts):
            xm = mpmath.mpf(float(x))
            acc = mpmath.mpf(0)
            for j in range(terms):
                fj = f_j(j)
                acc += fj * xm ** (-j - 1)
            vals[i] = acc / mpmath.pi
    return RemoteData("Hilbert", I01, pts, vals, noise_level=0.0)


class TestExpansionBasis:
    def test_hilbert_j0(self):
        assert expansion_basis("Hilbert", 0, 2.0) == pytest.approx(
            1.0 / (2.0 * math.pi))

    def test_riesz_alpha_quarter_j1(self):
        # c_1 = 1 - 2*0.25 = 0.5
        assert expansion_basis("RieszInverse", 1, 2.0, alpha=0.25) == \
            pytest.approx(0.5 * 2.0 ** -1.5)

    def test_fourier_laplace_j2(self):
        val = expansion_basis("FourierLaplace", 2, 1.0, alpha=0.0, beta=-1.0)
        assert val == pytest.approx(-0.5)


class TestRemoteData:
    def test_sample_points_inside_source_rejected(self):
        with pytest.raises(ValueError):
            RemoteData("Hilbert", I01, [0.5, 2.0], [0.0, 0.0])

    def test_fourier_laplace_overlap_allowed(self):
        RemoteData("FourierLaplace", I01, [0.5], [0.0], alpha=0.0, beta=-1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            RemoteData("Mellin", I01, [2.0], [0.0])


class TestRecoverMoments:
    def test_polynomial_closed_form(self):
        # f(x) = x(1-x) on (0,1): f_j = 1/(j+2) - 1/(j+3)
        def f_j(j):
            return mpmath.mpf(1) / (j + 2) - mpmath.mpf(1) / (j + 3)

        data = closed_form_hilbert_data(f_j, J23)
        got = recover_moments(data, 6, PrecisionConfig(bits=320))
        errs = [abs(float(got.values[j].real) - (1.0 / (j + 2) - 1.0 / (j + 3)))
                for j in range(7)]
        assert max(errs) <= 1e-8

    def test_zero_data_zero_moments(self):
        data = RemoteData("Hilbert", I01, np.linspace(2, 3, 64), np.zeros(64))
        got = recover_moments(data, 4, PrecisionConfig())
        assert all(abs(complex(v)) == 0.0 for v in got.values)

    def test_sample_count_guard(self):
        data = RemoteData("Hilbert", I01, np.linspace(2, 3, 8), np.zeros(8))
        with pytest.raises(ValueError):
            recover_moments(data, 6, PrecisionConfig())

    def test_fourier_laplace_overlapping_window(self, grid):
        f = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)
        data = sample_remote("FourierLaplace", f, I01, Interval(-0.5, 0.5),
                             num=64, alpha=0.0, beta=-1.0)
        got = recover_moments(data, 4, PrecisionConfig())
        mask = I01.contains(grid.x)
        integral = float(np.sum(f.values[mask]) * grid.dx)
        assert abs(float(got.values[0].real) - integral) <= 1e-6

    def test_gauge_invariance_power_of_two(self, grid):
        f = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)
        data = sample_remote("Hilbert", f, I01, J23, num=64)
        lam = 8.0
        scaled = RemoteData("Hilbert", I01, data.points, lam * data.values)
        a = recover_moments(data, 4, PrecisionConfig())
        b = recover_moments(scaled, 4, PrecisionConfig())
        for j in range(5):
            assert complex(b.values[j]) == complex(lam * a.values[j])

    def test_modified_hilbert_f0_recovery(self, grid):
        # the pullback moment F_0 equals f_0 by the change of variables
        delta = 0.05
        f = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)
        data = sample_remote("ModifiedHilbert", f, I01, J23, num=64,
                             delta=delta)
        got = recover_moments(data, 4, PrecisionConfig())
        mask = I01.contains(grid.x)
        f0 = float(np.sum(f.values[mask]) * grid.dx)
        assert abs(float(got.values[0].real) - f0) <= 1e-5

    def test_riesz_f0_recovery(self, grid):
        f = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)
        data = sample_remote("RieszInverse", f, I01, J23, num=64, alpha=0.25)
        got = recover_moments(data, 4, PrecisionConfig())
        mask = I01.contains(grid.x)
        f0 = float(np.sum(f.values[mask]) * grid.dx)
        assert abs(float(got.values[0].real) - f0) <= 1e-5


class TestInvert:
    def test_polynomial_roundtrip(self, grid):
        def f_j(j):
            return mpmath.mpf(1) / (j + 2) - mpmath.mpf(1) / (j + 3)

        data = closed_form_hilbert_data(f_j, J23)
        mask = I01.contains(grid.x)
        truth_vals = np.where(mask, grid.x * (1.0 - grid.x), 0.0)
        truth = SampledFunction(grid, truth_vals)
        rec, err = invert(data, 6, grid, PrecisionConfig(bits=320), truth=truth)
        assert err <= 1e-10

    def test_order_zero_zero_mean(self, grid):
        # odd-about-center source: f_0 = 0, so the order-0 projection vanishes
        base = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)
        f = SampledFunction(grid, base.values * (grid.x - 0.5))
        data = sample_remote("Hilbert", f, I01, J23, num=64)
        rec, _ = invert(data, 0, grid, PrecisionConfig())
        # floor set by the quadrature accuracy of the data oracle
        assert np.max(np.abs(rec.values)) <= 1e-5 * np.max(np.abs(f.values))

    def test_noisy_auto_order_error_shrinks_with_noise(self, grid):
        f = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)
        nrm = norm(f, "L2", region=I01)
        f = SampledFunction(grid, f.values / nrm)
        errs = []
        for noise in (1e-6, 1e-8):
            rng = np.random.default_rng(5)
            data = sample_remote("Hilbert", f, I01, J23, num=64,
                                 noise_level=noise, rng=rng)
            N = select_order(data, 10, PrecisionConfig())
            _, err = invert(data, N, grid, PrecisionConfig(), truth=f)
            errs.append(err)
        assert errs[1] <= 0.5
        assert errs[1] <= errs[0]


class TestStabilitySweep:
    def test_too_few_levels(self, grid, unit_bump):
        with pytest.raises(ValueError):
            stability_sweep("Hilbert", unit_bump, Interval(-1, 1),
                            Interval(2, 3), [1e-2, 1e-4], trials=1)

    def test_zero_level_matches_noise_free_floor(self, grid):
        f = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)
        f = SampledFunction(grid, f.values / norm(f, "L2", region=I01))
        curve = stability_sweep("Hilbert", f, I01, Interval(1.05, 2.05),
                                [0.0, 1e-3, 1e-4, 1e-5, 1e-6], trials=1,
                                num_samples=48, N_max=8)
        zero_err = dict(curve.pairs)[0.0]
        clean = sample_remote("Hilbert", f, I01, Interval(1.05, 2.05), num=48)
        N = select_order(clean, 8, PrecisionConfig())
        _, floor = invert(clean, N, grid, PrecisionConfig(), truth=f)
        assert zero_err == pytest.approx(floor, rel=1e-12)

    def test_riesz_constant_sign_family_completes(self, grid):
        f = make_bump(Interval(0.2, 0.8), 0.0, 1.0, grid)  # f >= 0
        f = SampledFunction(grid, f.values / norm(f, "L2", region=I01))
        curve = stability_sweep("RieszInverse", f, I01, Interval(1.05, 2.05),
                                [1e-3, 1e-4, 1e-5, 1e-6], trials=1,
                                num_samples=48, N_max=6, alpha=0.25)
        assert len(curve.pairs) == 4
        assert all(e >= 0 for _, e in curve.pairs)

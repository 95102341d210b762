import math

import numpy as np
import pytest

from emfnet import antenna as ant


def make(kind, n=16, **kw):
    return ant.AntennaPattern(kind=kind, n_elements=n, **kw)


class TestGain:
    def test_ula_boresight(self):
        assert ant.gain(make("theoretical_ula"), 0.0) == 1.0

    def test_trunccos_boundary(self):
        p = make("truncated_cos", n=16)
        assert ant.gain(p, 2 / 16) == pytest.approx(0.0, abs=1e-15)

    def test_multicos_first_lobe_peak(self):
        # the band maximum of the multi-cos model's first side lobe is chi_1
        n = 16
        p = make("multi_cos", n=n, k_max=2)
        chi1 = p.lobe_table.chi_k[1]
        phi = np.linspace(2 / n + 1e-9, 4 / n, 20001)
        assert ant.gain(p, phi).max() == pytest.approx(chi1, rel=1e-6)

    def test_even_symmetry(self):
        rng = np.random.default_rng(2)
        phi = rng.uniform(0, math.pi / 3, 200)
        for kind in ant.PATTERN_KINDS:
            p = make(kind, n=16, k_max=3 if kind == "multi_cos" else 0)
            np.testing.assert_array_equal(ant.gain(p, phi), ant.gain(p, -phi))

    def test_bounds(self):
        phi = np.linspace(-math.pi / 3, math.pi / 3, 4001)
        for kind in ("theoretical_ula", "truncated_cos", "multi_cos"):
            p = make(kind, n=8, k_max=1 if kind == "multi_cos" else 0)
            g = ant.gain(p, phi)
            assert np.all(g >= 0) and np.all(g <= 1 + 1e-12)
        ft = ant.gain(make("flat_top", n=8, side_lobe_g=0.2), phi)
        assert set(np.round(np.unique(ft), 12)) == {0.2, 1.0}

    def test_domain_error(self):
        with pytest.raises(ValueError):
            ant.gain(make("flat_top"), 1.1)

    def test_gaussian_peak_and_half_power(self):
        p = make("gaussian", n=64)
        assert ant.gain(p, 0.0) == pytest.approx(64.0)
        assert ant.gain(p, p.phi_3db) == pytest.approx(32.0, rel=1e-12)


class TestHalfPowerAngle:
    def test_is_root(self):
        for n in (2, 8, 64):
            phi = ant.half_power_angle(n)
            assert ant.gain(make("theoretical_ula", n=n), phi) == pytest.approx(0.5, abs=1e-9)

    def test_classical_value(self):
        # sin(phi_3dB) ~ 0.886/N for a uniform half-wavelength array
        phi = ant.half_power_angle(64)
        assert math.sin(phi) == pytest.approx(0.886 / 64, rel=0.01)

    def test_halving(self):
        for n in (8, 16, 32):
            assert ant.half_power_angle(2 * n) == pytest.approx(
                0.5 * ant.half_power_angle(n), rel=0.02
            )


class TestSideLobeTable:
    def test_k0(self):
        t = ant.side_lobe_table(16, 0)
        assert t.x_k[0] == 0.0 and t.chi_k[0] == 1.0

    def test_first_lobe_level(self):
        # classical first side lobe of a uniform array: about -13.3 dB
        t = ant.side_lobe_table(64, 1)
        assert t.chi_k[1] == pytest.approx(0.047, abs=0.002)

    def test_monotone(self):
        t = ant.side_lobe_table(16, 3)
        assert np.all(np.diff(t.chi_k[1:]) < 0)
        assert np.all(np.diff(t.x_k) > 0)

    def test_peaks_match_ula_extrema(self):
        # each x_k maps to an azimuth where the ULA gain attains the
        # lobe maximum found by direct grid search
        n = 16
        t = ant.side_lobe_table(n, 3)
        p = make("theoretical_ula", n=n)
        for k in range(1, 4):
            phi_k = math.asin(2 * t.x_k[k] / math.pi)
            assert ant.gain(p, phi_k) == pytest.approx(t.chi_k[k], rel=1e-10)
            lo, hi = math.asin(2 * k / n), math.asin(2 * (k + 1) / n)
            grid = np.linspace(lo, hi, 30001)
            assert ant.gain(p, grid).max() == pytest.approx(t.chi_k[k], rel=1e-6)

    def test_kmax_limit(self):
        with pytest.raises(ValueError):
            ant.side_lobe_table(8, ant.max_side_lobes(8) + 1)


class TestGainMoment:
    def test_flat_top_small_g(self):
        p = make("flat_top", n=32, side_lobe_g=1e-14)
        assert ant.gain_moment(p, 1) == pytest.approx(3 * p.phi_3db / math.pi, rel=1e-10)

    def test_trunccos_first_moment(self):
        p = make("truncated_cos", n=64)
        assert ant.gain_moment(p, 1) == pytest.approx(3 / (64 * math.pi), rel=1e-14)
        assert ant.gain_moment(p, 1) == pytest.approx(0.014920, abs=2e-6)

    def test_multicos_kmax0_equals_trunccos(self):
        for k in (1, 2, 3):
            a = ant.gain_moment(make("multi_cos", n=16, k_max=0), k)
            b = ant.gain_moment(make("truncated_cos", n=16), k)
            assert a == b

    def test_ula_rejected(self):
        with pytest.raises(ValueError):
            ant.gain_moment(make("theoretical_ula"), 1)

    def test_closed_form_vs_quadrature(self):
        for n in (8, 16, 64):
            for kind in ("flat_top", "truncated_cos", "gaussian", "multi_cos"):
                k_max = min(2, ant.max_side_lobes(n)) if kind == "multi_cos" else 0
                p = make(kind, n=n, k_max=k_max)
                for k in (1, 2, 3, 4):
                    closed = ant.gain_moment(p, k)
                    oracle = ant.gain_moment_quadrature(p, k)
                    assert closed == pytest.approx(oracle, rel=1e-8, abs=1e-12), (
                        kind,
                        n,
                        k,
                    )

    def test_nonincreasing_in_k(self):
        for kind in ("flat_top", "truncated_cos", "multi_cos"):
            p = make(kind, n=16, k_max=2 if kind == "multi_cos" else 0)
            moments = [ant.gain_moment(p, k) for k in range(1, 6)]
            assert all(a >= b for a, b in zip(moments, moments[1:]))

    def test_ula_quadrature_bounded(self):
        val = ant.gain_moment_quadrature(make("theoretical_ula", n=16), 1)
        assert 0 < val < 1

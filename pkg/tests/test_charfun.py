import math

import numpy as np
import pytest

from emfnet import charfun as cf
from emfnet import network as net
from emfnet.antenna import AntennaPattern
from emfnet.specfun import ConvergenceError


def cfg_for(kind, n=16, m=1, k_max=2, **kw):
    pat = AntennaPattern(kind=kind, n_elements=n, k_max=k_max if kind == "multi_cos" else 0)
    return net.table1_config(pattern=pat, nakagami_m=m, **kw)


REDUCED = dict(disk_radius=500.0, density=10e-6)

PATTERNS = ("flat_top", "gaussian", "truncated_cos", "multi_cos")


class TestSignalAu:
    def test_q_zero(self):
        c = cfg_for("multi_cos")
        assert cf.cf_signal_au(c, 0.0, 200.0) == 1.0

    def test_exponential_fading_form(self):
        c = cfg_for("multi_cos", m=1)
        q, r0 = 1e9, 200.0
        pbar = net.mean_rx_power(c, r0)
        assert cf.cf_signal_au(c, q, r0) == pytest.approx(1 / (1 - 1j * q * pbar))

    def test_vs_fading_quadrature(self):
        c = cfg_for("multi_cos", m=3)
        q, r0 = 1e12, 200.0
        closed = cf.cf_signal_au(c, q, r0)
        oracle = cf.cf_signal_au_oracle(c, q, r0)
        assert abs(closed - oracle) < 1e-8


class TestSignalIu:
    def test_d_zero_collapses_to_au(self):
        c = cfg_for("multi_cos", separation=0.0)
        for q in (1e8, 1e10):
            assert cf.cf_signal_iu(c, q, 150.0, 0.9) == pytest.approx(
                cf.cf_signal_au(c, q, 150.0)
            )

    def test_out_of_sector_is_orientation_average(self):
        # a nearby BS (r0 = 4 m) at theta = pi/2 sees the IU 68 degrees
        # away from the AU, outside the 60-degree sector
        c = cfg_for("multi_cos")
        r0, theta = 4.0, math.pi / 2
        w0, delta0 = net.iu_geometry(r0, theta, c.separation)
        assert abs(delta0) > math.pi / 3
        q = 1e9
        pbar = net.mean_rx_power(c, w0)
        assert cf.cf_signal_iu(c, q, r0, theta) == pytest.approx(
            complex(cf.orientation_averaged_cf(c, q, pbar))
        )

    @pytest.mark.parametrize("kind", PATTERNS)
    @pytest.mark.parametrize("m", [1, 3])
    def test_vs_quadrature_oracle(self, kind, m):
        c = cfg_for(kind, m=m)
        r0, theta = 150.0, 0.7
        qs = np.geomspace(1e3, 3e7 if kind == "gaussian" else 1e12, 8)
        for q in qs:
            closed = complex(cf.cf_signal_iu(c, q, r0, theta))
            oracle = cf.cf_signal_iu_oracle(c, q, r0, theta)
            assert abs(closed - oracle) < 1e-6


class TestInterference:
    def test_q_zero(self):
        c = cfg_for("multi_cos")
        assert cf.cf_interference(c, 0.0, 150.0) == pytest.approx(1.0)

    def test_vanishing_density(self):
        c = cfg_for("multi_cos", density=1e-15)
        for q in (1e6, 1e10):
            assert abs(cf.cf_interference(c, q, 150.0) - 1.0) < 1e-6

    @pytest.mark.parametrize("kind", PATTERNS)
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_vs_oracle(self, kind, m):
        c = cfg_for(kind, m=m)
        q_hi = 3e7 if kind == "gaussian" else 1e13
        for r0 in (80.0, 300.0):
            for q in np.geomspace(1e3, q_hi, 8):
                closed = complex(cf.cf_interference(c, q, r0))
                oracle = cf.cf_interference_oracle(c, q, r0)
                assert abs(closed - oracle) < 1e-5

    def test_gaussian_series_raises_beyond_convergence(self):
        c = cfg_for("gaussian")
        with pytest.raises(ConvergenceError):
            cf.cf_interference(c, 1e12, 150.0)

    def test_truncated_cos_equals_multicos_kmax0(self):
        c_cos = cfg_for("truncated_cos")
        c_mc0 = cfg_for("multi_cos", k_max=0)
        for q in (1e6, 1e9, 1e12):
            assert cf.cf_interference(c_cos, q, 150.0) == pytest.approx(
                cf.cf_interference(c_mc0, q, 150.0)
            )
            assert cf.cf_signal_iu(c_cos, q, 150.0, 2.5) == pytest.approx(
                cf.cf_signal_iu(c_mc0, q, 150.0, 2.5)
            )


class TestCfAxioms:
    @pytest.mark.parametrize("kind", PATTERNS)
    def test_axioms_on_random_points(self, kind):
        c = cfg_for(kind, m=2)
        rng = np.random.default_rng(7)
        for _ in range(50):
            r0 = rng.uniform(50.0, 500.0)
            q = 10 ** rng.uniform(3, 7 if kind == "gaussian" else 12)
            for fn in (
                lambda q_: complex(cf.cf_signal_au(c, q_, r0)),
                lambda q_: complex(cf.cf_interference(c, q_, r0)),
                lambda q_: complex(cf.cf_signal_iu(c, q_, r0, 1.1)),
            ):
                v = fn(q)
                assert abs(v) <= 1 + 1e-9
                assert fn(-q) == pytest.approx(v.conjugate(), abs=1e-12)

    def test_sinr_integrand_modulus(self):
        c = cfg_for("multi_cos")
        for q in (1e5, 1e9, 1e12):
            v = cf.cf_sinr_integrand(c, q, 10.0, 150.0)
            assert abs(v) <= 1 + 1e-9
        assert cf.cf_sinr_integrand(c, 0.0, 10.0, 150.0) == pytest.approx(1.0)


class TestGammaPm:
    def test_trivial_and_marginal(self):
        c = cfg_for("multi_cos", n=8, k_max=1, **REDUCED)
        r0 = 120.0
        assert cf.gamma_pm(c, 0.0, 0.0, r0) == 1.0
        # q' = 0 reduces to the plain interference CF
        q = 1e10
        assert cf.gamma_pm(c, q, 0.0, r0) == pytest.approx(
            complex(cf.cf_interference(c, q, r0))
        )

    def test_variance_inequality(self):
        c = cfg_for("multi_cos", n=8, k_max=1, **REDUCED)
        r0, q = 120.0, 1e10
        gm = cf.gamma_pm(c, q, q, r0, sign=-1)
        assert abs(gm.imag) < 1e-10
        assert gm.real >= abs(cf.cf_interference(c, q, r0)) ** 2 - 1e-12

    def test_closed_form_vs_grid(self):
        c = cfg_for("multi_cos", n=8, k_max=1, **REDUCED)
        r0 = 120.0
        qs = np.geomspace(1e8, 1e12, 5)
        for q in qs:
            for qp in qs[:3]:
                for sign in (+1, -1):
                    g1 = cf.gamma_pm(c, q, qp, r0, sign)
                    g2 = cf.gamma_pm_grid(c, np.array([q]), np.array([qp]), r0, sign)[0, 0]
                    assert abs(g1 - g2) < 1e-5

    def test_closed_form_vs_mc_oracle(self):
        c = cfg_for("multi_cos", n=8, k_max=1, **REDUCED)
        r0 = 120.0
        for q, qp in [(1e10, 1e9), (1e11, 1e10)]:
            for sign in (+1, -1):
                g1 = cf.gamma_pm(c, q, qp, r0, sign)
                est, se = cf.gamma_pm_oracle(c, q, qp, r0, sign, n_realizations=60000, seed=11)
                assert abs(g1 - est) < max(1e-4, 4 * se)

    def test_symmetry_and_conjugation(self):
        c = cfg_for("multi_cos", n=8, k_max=1, **REDUCED)
        r0, q, qp = 120.0, 3e10, 8e9
        assert cf.gamma_pm(c, q, qp, r0, +1) == pytest.approx(cf.gamma_pm(c, qp, q, r0, +1))
        # gamma_-(q, q') = conj(gamma_+(-q, q')) for real q, q'
        gm = cf.gamma_pm(c, q, qp, r0, -1)
        gp = cf.gamma_pm(c, -q, qp, r0, +1)
        assert gm == pytest.approx(gp.conjugate())

    def test_requires_lobe_pattern(self):
        c = cfg_for("flat_top")
        with pytest.raises(ValueError):
            cf.gamma_pm(c, 1e9, 1e9, 120.0)

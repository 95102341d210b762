import math

import numpy as np
import pytest
from scipy.integrate import quad

from emfnet import network as net
from emfnet.antenna import AntennaPattern


def cfg(**kw):
    return net.table1_config(**kw)


class TestConfig:
    def test_table1_values(self):
        c = cfg()
        assert c.carrier_freq == 3.5e9
        assert c.density == pytest.approx(1e-5)
        assert c.eirp == pytest.approx(63.0957, rel=1e-4)
        assert net.noise_power(c) == pytest.approx(net.dbm_to_watts(-95.40))

    def test_alpha_guard(self):
        with pytest.raises(net.ConfigError):
            cfg(pathloss_exp=2.0)

    def test_d_guard(self):
        # mean cell radius at 10 BS/km^2 is about 158 m
        with pytest.raises(net.ConfigError):
            cfg(separation=200.0)

    def test_m_guard(self):
        with pytest.raises(net.ConfigError):
            cfg(nakagami_m=0)

    def test_hash_stable_and_sensitive(self):
        a, b = cfg(), cfg()
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != cfg(separation=11.0).config_hash()

    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "net.cfg"
        c = cfg()
        net.save_config(c, path)
        c2 = net.load_config(path)
        assert c2.to_dict() == pytest.approx(c.to_dict())
        assert c2.config_hash() == c.config_hash()

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "net.cfg"
        net.save_config(cfg(), path)
        with open(path, "a") as fh:
            fh.write("bogus_key = 3\n")
        with pytest.raises(net.ConfigError, match="bogus_key"):
            net.load_config(path)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "net.cfg"
        path.write_text("f_hz = 3.5e9\n")
        with pytest.raises(net.ConfigError, match="missing"):
            net.load_config(path)

    def test_comments_allowed(self, tmp_path):
        path = tmp_path / "net.cfg"
        net.save_config(cfg(), path)
        text = "# header comment\n" + path.read_text().replace(
            "alpha = 3.25", "alpha = 3.25  # path loss exponent"
        )
        path.write_text(text)
        assert net.load_config(path).pathloss_exp == 3.25


class TestNearestBsPdf:
    def test_normalization(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            c = cfg(
                density=rng.uniform(1, 50) * 1e-6,
                disk_radius=rng.uniform(500, 5000),
                exclusion_radius=rng.uniform(0.1, 5.0),
                separation=1.0,
            )
            val, _ = quad(
                lambda r: net.nearest_bs_pdf(c, r),
                c.exclusion_radius * (1 + 1e-12),
                c.disk_radius,
                limit=200,
            )
            assert val == pytest.approx(1.0, abs=1e-9)

    def test_support_error(self):
        c = cfg()
        with pytest.raises(ValueError):
            net.nearest_bs_pdf(c, 0.1)
        with pytest.raises(ValueError):
            net.nearest_bs_pdf(c, 4000.0)

    def test_formula(self):
        c = cfg()
        lam = c.density
        r = 100.0
        norm = math.exp(-lam * math.pi * 0.3 ** 2) - math.exp(-lam * math.pi * 3000 ** 2)
        expect = 2 * math.pi * lam * r * math.exp(-lam * math.pi * r ** 2) / norm
        assert net.nearest_bs_pdf(c, r) == pytest.approx(expect, rel=1e-14)


class TestPathloss:
    def test_unit_distance(self):
        # in the free-space limit alpha -> 2, gain is 1 at r = c/(4 pi f)
        c = cfg(bs_height=0.0, pathloss_exp=2.0 + 1e-9)
        r = net.SPEED_OF_LIGHT / (4 * math.pi * c.carrier_freq)
        assert net.pathloss(c, r) == pytest.approx(1.0, rel=1e-7)

    def test_monotone(self):
        c = cfg()
        r = np.linspace(1, 2000, 100)
        assert np.all(np.diff(net.pathloss(c, r)) < 0)


class TestIuGeometry:
    def test_d_zero(self):
        assert net.iu_geometry(100.0, 0.7, 0.0) == (100.0, 0.0)

    def test_collinear(self):
        w, delta = net.iu_geometry(100.0, 0.0, 10.0)
        assert w == pytest.approx(90.0)
        assert delta == 0.0

    def test_right_angle(self):
        w, delta = net.iu_geometry(100.0, math.pi / 2, 10.0)
        assert w == pytest.approx(math.sqrt(10100.0))
        assert delta == pytest.approx(math.acos(100.0 / math.sqrt(10100.0)))

    def test_triangle_inequality_and_sign(self):
        rng = np.random.default_rng(4)
        r0 = rng.uniform(5, 500, 500)
        theta = rng.uniform(-math.pi, math.pi, 500)
        d = 10.0
        w, delta = net.iu_geometry(r0, theta, d)
        assert np.all(w >= np.abs(r0 - d) - 1e-9)
        assert np.all(w <= r0 + d + 1e-9)
        w2, delta2 = net.iu_geometry(r0, -theta, d)
        np.testing.assert_allclose(w2, w)
        np.testing.assert_allclose(delta2, -delta)


class TestNoisePower:
    def test_formula(self):
        c = cfg(noise_power_override=None)
        dbm = net.watts_to_dbm(net.noise_power(c))
        assert dbm == pytest.approx(-94.96, abs=0.02)

    def test_thermal_floor(self):
        c = cfg(noise_power_override=None, bandwidth=1.0, noise_figure_db=0.0)
        assert net.watts_to_dbm(net.noise_power(c)) == pytest.approx(-174.0, abs=0.1)


class TestEmfeToIpd:
    def test_zero_and_linearity(self):
        c = cfg()
        assert net.emfe_to_ipd(c, 0.0) == 0.0
        assert net.emfe_to_ipd(c, 2e-7) == pytest.approx(2 * net.emfe_to_ipd(c, 1e-7))

    def test_anchor(self):
        # -40 dBm at 3.5 GHz corresponds to about 171 uW/m^2
        c = cfg()
        ipd = net.emfe_to_ipd(c, net.dbm_to_watts(-40.0))
        assert ipd == pytest.approx(171e-6, rel=0.02)

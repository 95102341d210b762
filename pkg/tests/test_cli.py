"""End-to-end tests of the command-line interface: artifact schemas,
manifest round-trips, reproducibility, and exit codes."""

import csv

import numpy as np
import pytest

from emfnet import cli
from emfnet import network as net
from emfnet.antenna import AntennaPattern
from emfnet.network import table1_config, save_config


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    cfg = table1_config(
        disk_radius=500.0,
        pattern=AntennaPattern(kind="multi_cos", n_elements=8, k_max=1),
    )
    path = tmp_path_factory.mktemp("cfg") / "small.cfg"
    save_config(cfg, path)
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParsing:
    def test_grid_syntax(self):
        assert np.allclose(cli._parse_float_list("-90:-60:4"), [-90, -80, -70, -60])
        assert np.allclose(cli._parse_float_list("1,2,5"), [1, 2, 5])
        with pytest.raises(net.ConfigError):
            cli._parse_float_list("1:2")
        with pytest.raises(net.ConfigError):
            cli._parse_float_list("a,b")
        with pytest.raises(net.ConfigError):
            cli._parse_int_list("1.5,2")

    def test_missing_config_is_config_error(self, tmp_path):
        rc = cli.main([
            "emfe", str(tmp_path / "nope.cfg"), "--user", "iu",
            "--te-grid=-90,-80", "--out", str(tmp_path / "o.csv"),
        ])
        assert rc == cli.EXIT_CONFIG

    def test_unknown_config_key(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("nonsense = 1\n")
        rc = cli.main([
            "emfe", str(bad), "--user", "iu",
            "--te-grid=-90,-80", "--out", str(tmp_path / "o.csv"),
        ])
        assert rc == cli.EXIT_CONFIG

    def test_bad_subcommand_flag(self, config_path, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main([
                "contour", config_path, "--n-list", "8,16", "--d-list", "5,20",
                "--metric", "Nope", "--levels", "0.5", "--te=-75",
                "--out", str(tmp_path / "g.csv"),
            ])
        assert exc.value.code == 2


class TestEmfe:
    def test_analytic_curve_and_manifest(self, config_path, tmp_path):
        out = str(tmp_path / "iu.csv")
        rc = cli.main([
            "emfe", config_path, "--user", "iu", "--te-grid=-90:-70:3",
            "--out", out,
        ])
        assert rc == cli.EXIT_OK
        rows = read_rows(out)
        assert len(rows) == 3
        assert set(rows[0]) == {
            "threshold", "value", "method", "config_hash", "threshold_dbm"
        }
        vals = [float(r["value"]) for r in rows]
        assert vals == sorted(vals)
        cfg = net.load_config(config_path)
        assert rows[0]["config_hash"] == cfg.config_hash()
        # manifest echo re-parses to the identical config
        echoed = cli.parse_manifest_config(out + ".manifest.txt")
        assert echoed.config_hash() == cfg.config_hash()

    def test_byte_identical_rerun(self, config_path, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        args = ["emfe", config_path, "--user", "au", "--te-grid=-80,-70"]
        assert cli.main(args + ["--out", a]) == 0
        assert cli.main(args + ["--out", b]) == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_mc_companion(self, config_path, tmp_path):
        out = str(tmp_path / "iu.csv")
        rc = cli.main([
            "emfe", config_path, "--user", "iu", "--te-grid=-90,-80",
            "--out", out, "--mc", "1000", "7",
        ])
        assert rc == cli.EXIT_OK
        rows = read_rows(str(tmp_path / "iu.mc.csv"))
        assert {"ci_lo", "ci_hi", "n", "seed"} <= set(rows[0])
        assert rows[0]["seed"] == "7"
        for r in rows:
            assert float(r["ci_lo"]) <= float(r["value"]) <= float(r["ci_hi"])

    def test_theoretical_ula_needs_mc(self, config_path, tmp_path):
        rc = cli.main([
            "emfe", config_path, "--user", "iu", "--pattern", "theoretical_ula",
            "--te-grid=-90,-80", "--out", str(tmp_path / "o.csv"),
        ])
        assert rc == cli.EXIT_CONFIG
        rc = cli.main([
            "emfe", config_path, "--user", "iu", "--pattern", "theoretical_ula",
            "--te-grid=-90,-80", "--out", str(tmp_path / "o.csv"),
            "--mc", "1000", "3",
        ])
        assert rc == cli.EXIT_OK

    def test_descending_grid_rejected(self, config_path, tmp_path):
        rc = cli.main([
            "emfe", config_path, "--user", "iu", "--te-grid=-70,-80",
            "--out", str(tmp_path / "o.csv"),
        ])
        assert rc == cli.EXIT_CONFIG


class TestCoverage:
    def test_snr_dominates_sinr(self, config_path, tmp_path):
        out = str(tmp_path / "cov.csv")
        rc = cli.main([
            "coverage", config_path, "--tc-grid=0:20:3", "--include-snr",
            "--out", out,
        ])
        assert rc == cli.EXIT_OK
        rows = read_rows(out)
        sinr = {r["threshold_db"]: float(r["value"])
                for r in rows if r["method"] == "analytic-sinr"}
        snr = {r["threshold_db"]: float(r["value"])
               for r in rows if r["method"] == "analytic-snr"}
        assert set(sinr) == set(snr) and len(sinr) == 3
        for k in sinr:
            assert snr[k] >= sinr[k] - 1e-12


class TestScaiu:
    def test_columns_and_identities(self, config_path, tmp_path):
        out = str(tmp_path / "sc.csv")
        rc = cli.main([
            "scaiu", config_path, "--tc", "10", "--te-grid=-80,-70",
            "--d-grid", "10,60", "--bounds", "--out", out,
        ])
        assert rc == cli.EXIT_OK
        rows = read_rows(out)
        assert len(rows) == 4
        for r in rows:
            j = float(r["value"])
            h = float(r["scaiu_h"])
            f_cov = float(r["f_cov"])
            assert j == pytest.approx(h * f_cov, abs=1e-12)
            assert float(r["flb"]) - 1e-12 <= j <= float(r["fub"]) + 1e-12


class TestContour:
    def test_grid_and_level_files(self, config_path, tmp_path):
        out = str(tmp_path / "grid.csv")
        rc = cli.main([
            "contour", config_path, "--n-list", "8,16", "--d-list", "5,20",
            "--metric", "EmfeCdf", "--levels", "0.2,0.4", "--te=-75",
            "--out", out,
        ])
        assert rc == cli.EXIT_OK
        rows = read_rows(out)
        assert len(rows) == 4
        for i in range(2):
            lines = (tmp_path / f"grid.level{i}.csv").read_text().splitlines()
            assert lines[0] == "level,n_elements,d_m"


class TestValidate:
    def test_moments_suite_passes(self, config_path, tmp_path):
        out = str(tmp_path / "rep.txt")
        rc = cli.main([
            "validate", config_path, "--suite", "moments", "--out", out,
        ])
        assert rc == cli.EXIT_OK
        text = open(out).read()
        assert "status: PASS" in text

    def test_gilpelaez_suite_passes(self, config_path):
        rc = cli.main(["validate", config_path, "--suite", "gilpelaez"])
        assert rc == cli.EXIT_OK

    def test_unknown_suite(self, config_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["validate", config_path, "--suite", "nope"])
        assert exc.value.code == 2

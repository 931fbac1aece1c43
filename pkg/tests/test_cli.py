"""CLI tests: exit codes, artifact shapes, config precedence, reruns."""

import json

import pytest

from polarflip.cli import main, parse_grid, CliError


class TestParseGrid:
    def test_range(self):
        assert parse_grid("0:2.5:25") == [0.0, 2.5, 5.0, 7.5, 10.0, 12.5,
                                          15.0, 17.5, 20.0, 22.5, 25.0]

    def test_comma_list(self):
        assert parse_grid("1.0,2,3.5") == [1.0, 2.0, 3.5]

    def test_empty_rejected(self):
        with pytest.raises(CliError):
            parse_grid("")

    def test_bad_bounds_rejected(self):
        with pytest.raises(CliError):
            parse_grid("5:1:2")


class TestConstruct:
    def test_writes_golden_file(self, tmp_path):
        out = tmp_path / "code.json"
        rc = main(["construct", "--n", "1024", "--k", "170", "--crc", "7",
                   "--design-ebn0", "2.5", "-o", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert sum(1 for f in doc["frozen_mask"] if not f) == 177

    def test_fig1_frozen_set(self, tmp_path):
        out = tmp_path / "pc85.json"
        rc = main(["construct", "--n", "8", "--k", "5", "--crc", "0",
                   "-o", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert [i for i, f in enumerate(doc["frozen_mask"]) if f] == [0, 1, 2]

    def test_missing_k_is_usage_error(self, tmp_path):
        rc = main(["construct", "--n", "8",
                   "-o", str(tmp_path / "x.json")])
        assert rc == 2

    def test_invalid_n_is_usage_error(self, tmp_path):
        rc = main(["construct", "--n", "100", "--k", "50",
                   "-o", str(tmp_path / "x.json")])
        assert rc == 2

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["construct", "--n", "64", "--k", "32", "--crc", "7"]
        assert main(argv + ["-o", str(a)]) == 0
        assert main(argv + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestProfile:
    def common(self, tmp_path, **kw):
        prof = tmp_path / "e1.csv"
        cs = tmp_path / "cs.json"
        argv = ["profile", "--n", "64", "--k", "32", "--crc", "7",
                "--ebn0", "2.0", "--min-events", "200",
                "--max-frames", "100000", "--seed", "4",
                "--profile-output", str(prof),
                "--critical-set-output", str(cs)]
        for k, v in kw.items():
            argv += [f"--{k.replace('_', '-')}", str(v)]
        return main(argv), prof, cs

    def test_produces_artifacts(self, tmp_path):
        rc, prof, cs = self.common(tmp_path)
        assert rc == 0
        assert prof.read_text().splitlines()[1] == "index,freq"
        doc = json.loads(cs.read_text())
        assert doc["gamma"] == 0.9999
        assert doc["entries"]
        freqs = [e["freq"] for e in doc["entries"]]
        assert freqs == sorted(freqs, reverse=True)

    def test_gamma_above_one_rejected(self, tmp_path):
        rc, _, _ = self.common(tmp_path, gamma="1.01")
        assert rc == 2

    def test_noiseless_insufficient_data(self, tmp_path):
        rc, _, _ = self.common(tmp_path, ebn0="40.0", max_frames="2000")
        assert rc == 3

    def test_rerun_identical(self, tmp_path):
        rc1, prof1, cs1 = self.common(tmp_path)
        body1 = prof1.read_bytes(), cs1.read_bytes()
        rc2, prof2, cs2 = self.common(tmp_path)
        assert (prof2.read_bytes(), cs2.read_bytes()) == body1


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    """Construction + critical set produced once for the campaign tests."""
    d = tmp_path_factory.mktemp("cli")
    code = d / "code.json"
    cs = d / "cs.json"
    assert main(["construct", "--n", "64", "--k", "32", "--crc", "7",
                 "-o", str(code)]) == 0
    assert main(["profile", "--code", str(code), "--ebn0", "2.0",
                 "--min-events", "200", "--max-frames", "100000",
                 "--seed", "4", "--profile-output", str(d / "e1.csv"),
                 "--critical-set-output", str(cs)]) == 0
    return code, cs


class TestSimulate:
    def test_csv_row_per_point(self, tmp_path, artifacts):
        code, cs = artifacts
        out = tmp_path / "res.csv"
        rc = main(["simulate", "--code", str(code), "--decoder", "tscf",
                   "--omega", "6", "--tmax", "6", "--critical-set", str(cs),
                   "--ebn0", "1.5:0.5:2.5", "--target-errors", "20",
                   "--max-frames", "3000", "--seed", "5", "-o", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2 + 3

    def test_omega_zero_equals_sc(self, tmp_path, artifacts):
        code, cs = artifacts
        out_sc = tmp_path / "sc.csv"
        out_t = tmp_path / "tscf.csv"
        common = ["--code", str(code), "--ebn0", "2.0", "--target-errors",
                  "50", "--max-frames", "5000", "--seed", "6"]
        assert main(["simulate", "--decoder", "sc", *common,
                     "-o", str(out_sc)]) == 0
        assert main(["simulate", "--decoder", "tscf", "--omega", "0",
                     "--tmax", "8", "--critical-set", str(cs), *common,
                     "-o", str(out_t)]) == 0
        fer_sc = out_sc.read_text().splitlines()[2].split(",")
        fer_t = out_t.read_text().splitlines()[2].split(",")
        # same frames, same frame_errors, same fer
        assert fer_sc[7:10] == fer_t[7:10]

    def test_sco1_lower_bounds_family(self, tmp_path, artifacts):
        code, cs = artifacts
        out = tmp_path / "all.csv"
        rc = main(["simulate", "--code", str(code), "--decoder", "sc",
                   "--decoder", "scflip", "--decoder", "sco1",
                   "--tmax", "6", "--ebn0", "2.0", "--target-errors", "100",
                   "--max-frames", "20000", "--seed", "7", "-o", str(out)])
        assert rc == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()[2:]]
        fer = {r[0]: float(r[9]) for r in rows}
        assert fer["sco1"] <= fer["scflip"] <= fer["sc"]

    def test_missing_decoder_usage_error(self, tmp_path, artifacts):
        code, _ = artifacts
        rc = main(["simulate", "--code", str(code), "--ebn0", "2.0"])
        assert rc == 2

    def test_tscf_without_critical_set_rejected(self, tmp_path, artifacts):
        code, _ = artifacts
        rc = main(["simulate", "--code", str(code), "--decoder", "tscf",
                   "--omega", "5", "--ebn0", "2.0"])
        assert rc == 2


class TestSweeps:
    def test_omega_grid_shape(self, tmp_path, artifacts):
        code, cs = artifacts
        out = tmp_path / "sw.csv"
        rc = main(["sweep-omega", "--code", str(code), "--critical-set",
                   str(cs), "--ebn0", "2.0", "--omega-grid", "0:2.5:25",
                   "--tmax", "6", "--frames", "2000", "--seed", "8",
                   "-o", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2 + 11  # 11 thresholds, one ebn0 point

    def test_empty_grid_usage_error(self, tmp_path, artifacts):
        code, cs = artifacts
        rc = main(["sweep-omega", "--code", str(code), "--critical-set",
                   str(cs), "--ebn0", "2.0", "--omega-grid", "",
                   "--frames", "100", "-o", str(tmp_path / "x.csv")])
        assert rc == 2

    def test_tmax_sweep(self, tmp_path, artifacts):
        code, cs = artifacts
        out = tmp_path / "tm.csv"
        rc = main(["sweep-tmax", "--code", str(code), "--critical-set",
                   str(cs), "--omega", "6", "--ebn0", "2.0",
                   "--tmax-grid", "1,2,4,8", "--frames", "2000",
                   "--seed", "9", "-o", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[1] == "decoder,t_max,fer"
        assert len(lines) == 2 + 2 * 4

    def test_crc_sweep_single_c(self, tmp_path):
        out = tmp_path / "crc.csv"
        rc = main(["sweep-crc", "--n", "64", "--k", "32", "--crc-list", "7",
                   "--ebn0", "2.0", "--tmax", "4", "--target-errors", "20",
                   "--max-frames", "2000", "--seed", "10", "-o", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3  # comment, header, one row


class TestConfigFile:
    def test_flags_beat_config(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text('n = 64\nk = 32\ncrc = 7\n\n[construct]\nk = 16\n')
        out = tmp_path / "c.json"
        rc = main(["construct", "--config", str(cfg), "--k", "24",
                   "-o", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["K"] == 24

    def test_command_table_beats_top_level(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text('n = 64\nk = 32\n\n[construct]\nk = 16\n')
        out = tmp_path / "c.json"
        rc = main(["construct", "--config", str(cfg), "-o", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["K"] == 16

    def test_whole_experiment_from_config(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        out = tmp_path / "res.csv"
        cfg.write_text(
            'n = 64\nk = 32\ncrc = 7\nseed = 3\n\n'
            '[simulate]\ndecoder = "sc"\nebn0 = "2.0"\n'
            f'target_errors = 20\nmax_frames = 2000\noutput = "{out}"\n')
        rc = main(["simulate", "--config", str(cfg)])
        assert rc == 0
        assert len(out.read_text().splitlines()) == 3

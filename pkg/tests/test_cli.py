"""Configuration loading, run modes, snapshots and exit codes."""

import json

import numpy as np
import pytest
import yaml

import gpquintic.fredholm as fredholm
from gpquintic.cli import EXIT_CONFIG, EXIT_OK, EXIT_SINGULAR, main, run
from gpquintic.config import ConfigError, RunConfig, config_from_dict, load_config, parse_complex


def write_config(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data) if data is not None else "")
    return path


def small(tmp_path, **extra):
    base = {"nx": 32, "T": 0.2, "checkpoints": [0.0, 0.1, 0.2], "out": str(tmp_path / "out")}
    base.update(extra)
    return config_from_dict(base)


def read_csv(path):
    return np.loadtxt(path, delimiter=",", comments="#", skiprows=4)


class TestLoadConfig:
    def test_empty_file_gives_reference_defaults(self, tmp_path):
        cfg = load_config(write_config(tmp_path, None))
        assert (cfg.mu2, cfg.mu3, cfg.mu4) == (-1j, 1.0, 1j)
        assert (cfg.L, cfg.nx, cfg.nquad, cfg.dt) == (40.0, 256, 128, 1e-3)
        assert (cfg.profile, cfg.amplitude, cfg.width) == ("sech", 0.15, 40.0)
        assert cfg.checkpoints == pytest.approx(np.linspace(0, 100, 11))
        assert cfg.variant == "adjoint"

    def test_negative_horizon(self, tmp_path):
        with pytest.raises(ConfigError, match="^T:"):
            load_config(write_config(tmp_path, {"T": -1}))

    def test_transpose_with_mu3(self, tmp_path):
        with pytest.raises(ConfigError, match="requires mu3 = 0") as err:
            load_config(write_config(tmp_path, {"variant": "rst", "mu3": 1}))
        assert err.value.field == "variant"

    def test_transpose_with_zero_mu3(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {"variant": "rst", "mu3": 0}))
        assert cfg.variant == "reverse-space-time-transpose"

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="colour: unknown key"):
            load_config(write_config(tmp_path, {"colour": "red"}))

    @pytest.mark.parametrize("data, field", [
        ({"nx": 100}, "nx"),
        ({"mode": "plot"}, "mode"),
        ({"checkpoints": [0, 200]}, "checkpoints"),
        ({"dt": 0}, "dt"),
        ({"mu2": "abc"}, "mu2"),
        ({"mu2": 1}, "mu2"),
        ({"variant": "unitary"}, "variant"),
        ({"profile": "file"}, "profile_path"),
        ({"formats": ["xml"]}, "formats"),
        ({"nx": 32.5}, "nx"),
    ])
    def test_validation_names_field(self, tmp_path, data, field):
        with pytest.raises(ConfigError) as err:
            load_config(write_config(tmp_path, data))
        assert err.value.field == field

    def test_parse_error(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("T: [1, 2\n")
        with pytest.raises(ConfigError, match="parse error"):
            load_config(path)

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.yaml")

    @pytest.mark.parametrize("value, expected", [
        ([0, -1], -1j), ("0,-1", -1j), ("-1j", -1j), (2, 2 + 0j), ("1.5", 1.5 + 0j),
    ])
    def test_complex_forms(self, value, expected):
        assert parse_complex(value) == expected

    def test_round_trip(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {"mu2": [0, -2], "nx": 64, "block": [[1, "0.5j"], [0, 1]],
                                                  "T": 3, "variant": "negated"}))
        echo = json.loads(json.dumps(cfg.to_dict()))
        assert config_from_dict(echo) == cfg
        again = load_config(write_config(tmp_path, echo, "echo.yaml"))
        assert again == cfg


class TestRun:
    def test_zero_profile(self, tmp_path):
        cfg = small(tmp_path, amplitude=0.0)
        summary = run(cfg)
        assert summary["files"] == ["t0.csv", "t0.1.csv", "t0.2.csv"]
        for name in summary["files"]:
            data = read_csv(tmp_path / "out" / name)
            assert data.shape == (32, 6)
            assert not np.any(data[:, 1:4])
            np.testing.assert_array_equal(data[:, 4], 1.0)
            np.testing.assert_array_equal(data[:, 5], 0.0)

    def test_snapshot_is_self_describing(self, tmp_path):
        cfg = small(tmp_path)
        run(cfg)
        lines = (tmp_path / "out" / "t0.1.csv").read_text().splitlines()
        assert lines[0] == "# mode: gp-solve"
        assert lines[1] == "# t: 0.1"
        echo = json.loads(lines[2][len("# config: "):])
        assert config_from_dict(echo) == cfg
        assert lines[3] == "x,re_g,im_g,abs_g,det_re,det_im"

    def test_reproducible(self, tmp_path):
        outs = []
        for k in range(2):
            cfg = small(tmp_path, out=str(tmp_path / "same"))
            run(cfg)
            outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / "same").iterdir())
                         if p.name != "timings.json"})
        assert outs[0] == outs[1]
        assert "summary.json" in outs[0]

    def test_compare_summary(self, tmp_path):
        cfg = small(tmp_path, mode="compare")
        summary = run(cfg)
        res = summary["results"]
        assert res["times"] == pytest.approx([0.0, 0.1, 0.2])
        assert len(res["max_difference"]) == 3
        header = (tmp_path / "out" / "t0.2.csv").read_text().splitlines()[3]
        assert header.endswith("re_g_ss,im_g_ss,abs_g_ss,abs_diff")

    def test_determinant_monitor(self, tmp_path):
        summary = run(small(tmp_path, mode="determinant-monitor"))
        assert min(summary["results"]["min_abs"]) >= 1 - 1e-8

    def test_direct_solve(self, tmp_path):
        summary = run(small(tmp_path, mode="direct-solve", dt=0.01))
        assert summary["results"]["steps"] == 20
        data = read_csv(tmp_path / "out" / "t0.2.csv")
        assert np.all(np.isnan(data[:, 4]))

    def test_matrix_block_columns(self, tmp_path):
        run(small(tmp_path, block=[[1, 0], [0.5, 1]], checkpoints=[0.0]))
        header = (tmp_path / "out" / "t0.csv").read_text().splitlines()[3].split(",")
        assert header[:4] == ["x", "re_g00", "im_g00", "abs_g00"]
        assert len(header) == 1 + 4 * 3 + 2

    def test_profile_file(self, tmp_path):
        x = np.linspace(-20, 20, 32, endpoint=False)
        np.savetxt(tmp_path / "p.txt", np.column_stack([0.1 / np.cosh(x / 40), np.zeros(32)]))
        a = run(small(tmp_path, profile="file", profile_path=str(tmp_path / "p.txt"), out=str(tmp_path / "a")))
        b = run(small(tmp_path, amplitude=0.1, out=str(tmp_path / "b")))
        da = read_csv(tmp_path / "a" / "t0.2.csv")
        db = read_csv(tmp_path / "b" / "t0.2.csv")
        np.testing.assert_allclose(da, db, atol=1e-15)
        assert a["files"] == b["files"]

    def test_verify_identities(self, tmp_path):
        summary = run(small(tmp_path, mode="verify-identities", nx=64))
        names = [r["name"] for r in summary["results"]["reports"]]
        assert names == ["kernel product rule", "inverse operator identity dU = -U dQ U",
                         "adjoint pair g~ = g^dagger", "key identity (i)", "PDE residual"]
        assert summary["results"]["t"] == 0.2
        assert summary["files"] == []

    def test_json_only(self, tmp_path):
        summary = run(small(tmp_path, formats=["json"]))
        assert summary["files"] == []
        assert (tmp_path / "out" / "summary.json").exists()


class TestMain:
    def test_success_with_overrides(self, tmp_path, capsys):
        path = write_config(tmp_path, {"nx": 32, "checkpoints": [0.0, 0.5]})
        code = main(["--config", str(path), "--out", str(tmp_path / "o"), "--T", "0.5",
                     "--mu2", "0,-2", "--nquad", "8"])
        assert code == EXIT_OK
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["config"]["mu2"] == [0.0, -2.0]
        assert summary["config"]["nquad"] == 8
        assert "wrote 2 snapshot(s)" in capsys.readouterr().out

    def test_default_checkpoints_follow_horizon(self, tmp_path):
        assert main(["--nx", "32", "--T", "0.2", "--out", str(tmp_path / "o")]) == EXIT_OK
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["checkpoints"] == pytest.approx(np.linspace(0, 0.2, 11))
        assert summary["config"]["nquad"] == 16

    def test_config_error_exit(self, tmp_path, capsys):
        assert main(["--T", "-1", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "T:" in capsys.readouterr().err

    def test_transpose_override_error(self, tmp_path, capsys):
        assert main(["--variant", "rst", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "mu3 = 0" in capsys.readouterr().err

    def test_near_singular_exit(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr(fredholm, "SINGULARITY_THRESHOLD", 1e6)
        assert main(["--nx", "32", "--T", "1", "--out", str(tmp_path / "o")]) == EXIT_SINGULAR
        err = capsys.readouterr().err
        assert "near-singular" in err and "x=" in err and "t=" in err

import json

import numpy as np
import pytest

from liesde import LangevinConfig, Potential, build_basis, simulate
from liesde.cli import (
    EXIT_CONFIG,
    EXIT_DIAGNOSTIC,
    EXIT_IO,
    EXIT_OK,
    ConfigError,
    RunConfig,
    emit_histogram,
    emit_plot_data,
    main,
    parse_config,
    run,
)
from liesde.diagnostics import MomentReport


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("LIESDE_OUTPUT_DIR", str(tmp_path / "out"))
    return tmp_path / "out"


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return header, body[0].split(","), [list(map(float, r.split(","))) for r in body[1:]]


class TestParse:
    def test_minimal_defaults(self, tmp_path):
        cfg = parse_config(write(tmp_path / "c.json", {"command": "rbm", "group": "so3"}))
        assert (cfg.h, cfg.T, cfg.beta, cfg.gamma, cfg.seed, cfg.record_every) == (1e-3, 10.0, 1.0, 1.0, 0, 10)
        assert cfg.potential == {"kind": "zero"} and cfg.format == "csv"

    def test_flag_overrides(self, tmp_path):
        path = write(tmp_path / "c.json", {"command": "rbm", "h": 0.1, "T": 1.0})
        assert parse_config(path, ["--h=0.01"]).h == 0.01
        assert parse_config(path, ["--h", "0.05"]).h == 0.05
        assert parse_config(path).h == 0.1

    @pytest.mark.parametrize("doc,key", [
        ({"command": "rbm", "group": "so0"}, "group"),
        ({"command": "rbm", "colour": 1}, "colour"),
        ({"command": "rbm", "h": -1}, "h"),
        ({"command": "rbm", "beta": "hot"}, "beta"),
        ({"command": "rbm", "seed": 1.5}, "seed"),
        ({"command": "dance"}, "command"),
        ({"command": "rbm", "variant": "lateral"}, "variant"),
        ({"command": "rbm", "potential": {"kind": "trace", "B": 1}}, "potential.B"),
        ({"command": "rbm", "potential": {"kind": "trace", "A_file": "/nonexistent/a.csv"}}, "potential.A_file"),
        ({"command": "rbm", "T": 1.0, "h": 0.3}, "T"),
        ({"command": "rbm", "format": "xml"}, "format"),
        ({"command": "rbm", "m0": [1, 2]}, "m0"),
        ({"group": "so3"}, "command"),
    ])
    def test_rejects_naming_key(self, tmp_path, doc, key):
        with pytest.raises(ConfigError, match=f"'{key}'"):
            parse_config(write(tmp_path / "c.json", doc))

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="malformed JSON"):
            parse_config(p)

    def test_unknown_flag(self):
        with pytest.raises(ConfigError, match="'bogus'"):
            parse_config(None, ["--bogus=1"], command="rbm")

    def test_round_trip(self):
        cfg = parse_config(None, ["--group=su3", "--variant=symplectic", "--gamma2=0.5", "--m0=[1,0,0,0,0,0,0,2]",
                                  '--potential={"kind":"trace","A":[[1,0,0],[0,2,0],[0,0,3]]}', "--plot=true"],
                           command="compare")
        again = parse_config(None, {k: v for k, v in json.loads(json.dumps(cfg.to_dict())).items()})
        assert again == cfg
        assert again.sha256() == cfg.sha256()

    def test_hash_ignores_output_location(self):
        a = parse_config(None, ["--output_dir=/tmp/a"], command="rbm")
        b = parse_config(None, ["--output_dir=/tmp/b", "--output=x"], command="rbm")
        c = parse_config(None, ["--seed=1"], command="rbm")
        assert a.sha256() == b.sha256() != c.sha256()

    def test_matrix_from_file(self, tmp_path):
        np.savetxt(tmp_path / "A.csv", np.diag([1.0, 2.0, 3.0]), delimiter=",")
        cfg = parse_config(None, [f'--potential={{"kind":"trace","A_file":"{tmp_path / "A.csv"}"}}'],
                           command="langevin")
        assert cfg.potential["A_file"].endswith("A.csv")

    def test_complex_matrix(self):
        cfg = parse_config(None, ['--group=su2', '--potential={"kind":"trace","A":[[[1,0],[0,1]],[[0,0],[1,0]]]}'],
                           command="langevin")
        from liesde.cli import build_potential

        np.testing.assert_array_equal(build_potential(cfg).A, [[1, 1j], [0, 1]])


class TestRun:
    def test_rbm_byte_identical(self, outdir):
        assert main(["rbm", "--seed", "7", "--T=0.5", "--record_every=50"]) == EXIT_OK
        first = (outdir / "rbm.csv").read_bytes()
        assert main(["rbm", "--seed", "7", "--T=0.5", "--record_every=50"]) == EXIT_OK
        assert (outdir / "rbm.csv").read_bytes() == first
        header, cols, rows = read_csv(outdir / "rbm.csv")
        assert header[0].startswith("# config_sha256=")
        assert cols == ["t"] + [f"g_{i}{j}" for i in range(3) for j in range(3)] + ["defect"]
        assert len(rows) == 11 and rows[0][1:10] == [1, 0, 0, 0, 1, 0, 0, 0, 1]

    def test_langevin_trajectory_schema(self, outdir):
        assert main(["langevin", "--group=su2", "--T=0.1", "--h=0.01", "--record_every=1",
                     '--potential={"kind":"trace"}', "--plot=true"]) == EXIT_OK
        _, cols, rows = read_csv(outdir / "langevin.csv")
        gcols = [f"g_{i}{j}_{p}" for i in range(2) for j in range(2) for p in ("re", "im")]
        assert cols == ["t"] + gcols + ["m_1", "m_2", "m_3", "energy", "casimir", "defect"]
        assert len(rows) == 11
        report = json.loads((outdir / "langevin_report.json").read_text())
        assert report["conservation"]["passed"] and report["config_sha256"]
        plot = (outdir / "langevin_plot.csv").read_text().splitlines()
        assert plot[0] == "t,series,value" and len(plot) == 1 + 3 * 11

    def test_jsonl(self, outdir):
        assert main(["langevin", "--T=0.05", "--h=0.01", "--record_every=1", "--format=jsonl"]) == EXIT_OK
        lines = (outdir / "langevin.jsonl").read_text().splitlines()
        first = json.loads(lines[0])
        assert len(lines) == 6 and first["t"] == 0.0 and "config_sha256" in first and "casimir" in first

    def test_lie_poisson(self, outdir):
        assert main(["lie-poisson", "--inertia=[1,2,3]", "--T=1"]) == EXIT_OK
        rep = json.loads((outdir / "lie-poisson_report.json").read_text())
        assert rep["spectrum_drift_max"] < 1e-12 and not rep["stochastic"]
        _, cols, _ = read_csv(outdir / "lie-poisson.csv")
        assert cols[-1] == "spectrum_drift"

    def test_lie_poisson_rejects_abelian(self, outdir):
        assert main(["lie-poisson", "--group=rn:2", "--T=1"]) == EXIT_CONFIG

    def test_gibbs_oracle(self, outdir):
        assert main(["gibbs-oracle", "--n_samples=500", "--beta=2", '--potential={"kind":"trace"}',
                     "--plot=true"]) == EXIT_OK
        _, cols, rows = read_csv(outdir / "gibbs-oracle.csv")
        assert len(rows) == 500 and cols[0] == "index" and cols[-1] == "energy"
        hist = (outdir / "gibbs-oracle_trace_hist.csv").read_text().splitlines()
        assert len(hist) == 51 and sum(int(r.split(",")[2]) for r in hist[1:]) == 500

    def test_compare_pass_and_wrong_beta(self, outdir, capsys):
        args = ["compare", "--beta=2", "--h=0.01", "--T=2000", '--potential={"kind":"trace"}', "--n_samples=20000"]
        assert main(args) == EXIT_OK
        assert json.loads((outdir / "compare.json").read_text())["passed"]
        capsys.readouterr()
        assert main(args + ["--oracle_beta=1"]) == EXIT_DIAGNOSTIC
        out = capsys.readouterr().out
        assert "FAIL Q(m,m)" in out
        rep = json.loads((outdir / "compare.json").read_text())
        failing = [r["name"] for r in rep["reports"] if not r["passed"]]
        assert "Q(m,m)" in failing

    def test_check_subset(self, outdir, capsys):
        assert main(["check", "--check_groups=[\"so3\"]"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "property groups, all passed" in out
        rep = json.loads((outdir / "check.json").read_text())
        assert rep["summary"]["passed"] and rep["summary"]["n_groups"] >= 30

    def test_config_error_exit(self, outdir):
        assert main(["rbm", "--group=so0"]) == EXIT_CONFIG

    def test_io_error_exit(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["rbm", "--T=0.01", f"--output_dir={blocker}"]) == EXIT_IO

    def test_run_api(self, tmp_path):
        cfg = RunConfig("rbm", T=0.01, output_dir=str(tmp_path))
        assert run(cfg, log=lambda s: None) == EXIT_OK
        assert (tmp_path / "rbm.csv").exists()


class TestPlotData:
    def test_energy_series(self, tmp_path):
        p = emit_plot_data((np.array([0.0, 0.1]), np.array([1.5, 1.25])), tmp_path / "e.csv")
        assert p.read_text().splitlines() == ["t,value", "0,1.5", "0.10000000000000001,1.25"]

    def test_histogram(self, tmp_path):
        lines = emit_histogram([-1.0, 0.0, 2.99, 3.0], tmp_path / "h.csv").read_text().splitlines()
        assert lines[0] == "bin_left,bin_right,count" and len(lines) == 51
        assert lines[1].startswith("-1,") and lines[-1].split(",")[1] == "3"
        assert sum(int(r.split(",")[2]) for r in lines[1:]) == 4

    def test_empty_record(self, tmp_path):
        b = build_basis("so3")
        rec = simulate(LangevinConfig(T=0.0), b.descriptor, Potential.zero(b.descriptor), basis=b)
        rec = rec.tail(0.0)
        empty = type(rec)(rec.times[:0], rec.g[:0], rec.m[:0], b, rec.potential)
        assert emit_plot_data(empty, tmp_path / "x.csv").read_text() == "t,series,value\n"

    def test_reports(self, tmp_path):
        r = MomentReport("tr_g", 1.0, 0.1, 1.1, 0.05, 0.89, True)
        lines = emit_plot_data([r], tmp_path / "r.csv").read_text().splitlines()
        assert lines[0].startswith("name,ergodic_mean") and lines[1].endswith(",true")

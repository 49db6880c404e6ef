"""Command-line front end: CSV schemas, units, reproducibility, exit codes."""

import math
import subprocess
import sys

import numpy as np
import pytest

from spreadmi.cli import main

LN2 = math.log(2.0)


def rows_of(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestMiSweep:
    def test_fig2_style_sweep(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["mi-sweep", "--prior", "binary", "--spectrum", "mp",
                     "--spectrum", "wbe", "--beta", "1.5",
                     "--sigma2-grid", "0.1:2:20", "--out", str(out)])
        assert code == 0
        header, rows = rows_of(out)
        assert header == ["spectrum", "sigma2", "E", "theta", "C", "F",
                          "n_fixed_points"]
        assert len(rows) == 40
        c_mp = {r["sigma2"]: float(r["C"]) for r in rows if r["spectrum"] == "mp"}
        c_wbe = {r["sigma2"]: float(r["C"]) for r in rows if r["spectrum"] == "wbe"}
        assert all(c_wbe[s2] >= c_mp[s2] for s2 in c_mp)

    def test_gaussian_wbe_known_value(self, tmp_path):
        out = tmp_path / "g.csv"
        code = main(["mi-sweep", "--prior", "gaussian", "--spectrum", "wbe",
                     "--beta", "1.5", "--sigma2-grid", "0.5", "--out", str(out)])
        assert code == 0
        _, rows = rows_of(out)
        assert float(rows[0]["C"]) == pytest.approx(math.log(4.0) / 3.0,
                                                    abs=1e-9)
        # 12 significant digits in the rendered value
        assert rows[0]["C"] == "0.462098120373"

    def test_bits_are_nats_over_ln2(self, tmp_path):
        nats = tmp_path / "nats.csv"
        bits = tmp_path / "bits.csv"
        base = ["mi-sweep", "--prior", "binary", "--spectrum", "wbe", "--beta",
                "1.5", "--sigma2-grid", "0.25:1:3"]
        assert main(base + ["--out", str(nats)]) == 0
        assert main(base + ["--units", "bits", "--out", str(bits)]) == 0
        _, rn = rows_of(nats)
        _, rb = rows_of(bits)
        for a, b in zip(rn, rb):
            assert float(b["C"]) == pytest.approx(float(a["C"]) / LN2, rel=1e-10)
            assert b["E"] == a["E"] and b["theta"] == a["theta"]

    def test_ebn0_axis_labelled(self, tmp_path):
        out = tmp_path / "eb.csv"
        code = main(["mi-sweep", "--prior", "binary", "--spectrum", "wbe",
                     "--beta", "1.5", "--ebn0-grid", "0:8:3", "--out", str(out)])
        assert code == 0
        header, rows = rows_of(out)
        assert header[:3] == ["spectrum", "ebn0_db", "sigma2"]
        # sigma2 = 1/(2 * 10^(EbN0/10))
        assert float(rows[0]["sigma2"]) == pytest.approx(0.5, abs=1e-12)
        assert float(rows[2]["sigma2"]) == pytest.approx(
            1.0 / (2.0 * 10.0 ** 0.8), rel=1e-10)

    def test_byte_reproducible(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        args = ["mi-sweep", "--prior", "binary", "--spectrum", "mp", "--beta",
                "1.5", "--sigma2-grid", "0.2:1:4", "--seed", "3"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(
            "# sweep configuration\n"
            'prior = "binary"\n'
            'spectrum = ["wbe"]\n'
            "beta = 1.5\n"
            'sigma2_grid = "0.5"\n'
            'units = "nats"\n')
        out = tmp_path / "c.csv"
        code = main(["mi-sweep", "--config", str(cfg), "--units", "bits",
                     "--out", str(out)])
        assert code == 0
        _, rows = rows_of(out)
        # the bits flag overrides the nats in the file
        nats_value = 0.45075083582577746
        assert float(rows[0]["C"]) == pytest.approx(nats_value / LN2, rel=1e-8)

    def test_missing_grid_is_config_error(self, tmp_path):
        code = main(["mi-sweep", "--prior", "binary", "--spectrum", "wbe",
                     "--beta", "1.5", "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_bad_prior_is_config_error(self, tmp_path):
        code = main(["mi-sweep", "--prior", "trinary", "--spectrum", "wbe",
                     "--beta", "1.5", "--sigma2-grid", "0.5",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_spectrum_file(self, tmp_path):
        spec_file = tmp_path / "two_atom.spectrum"
        spec_file.write_text(
            'kind = "discrete"\n'
            "beta = 1.5\n"
            "pi_atoms = [[0.5, 0.5], [2.5, 0.5]]\n")
        out = tmp_path / "s.csv"
        code = main(["mi-sweep", "--prior", "binary", "--spectrum",
                     str(spec_file), "--sigma2-grid", "0.5", "--out", str(out)])
        assert code == 0
        _, rows = rows_of(out)
        assert rows[0]["spectrum"] == "two_atom"

    def test_spectrum_file_carries_its_own_beta(self, tmp_path):
        spec_file = tmp_path / "mp2.spectrum"
        spec_file.write_text('kind = "mp"\nbeta = 2.0\n')
        out = tmp_path / "s.csv"
        code = main(["mi-sweep", "--prior", "gaussian", "--spectrum",
                     str(spec_file), "--sigma2-grid", "0.5", "--out", str(out)])
        assert code == 0
        _, rows = rows_of(out)
        assert rows[0]["spectrum"] == "mp2"

    def test_inline_discrete_prior_normalized_on_load(self, tmp_path):
        out = tmp_path / "d.csv"
        # a shifted, unnormalized alphabet; the loader standardizes it, so a
        # symmetric shape reproduces the binary result
        code = main(["mi-sweep", "--prior", "discrete:[[0,0.5],[10,0.5]]",
                     "--spectrum", "wbe", "--beta", "1.5",
                     "--sigma2-grid", "0.5", "--out", str(out)])
        assert code == 0
        _, rows = rows_of(out)
        assert float(rows[0]["C"]) == pytest.approx(0.45075083582577746,
                                                    abs=1e-8)

    def test_single_point_alphabet_rejected(self, tmp_path):
        code = main(["mi-sweep", "--prior", "discrete:[[3,1.0]]",
                     "--spectrum", "wbe", "--beta", "1.5",
                     "--sigma2-grid", "0.5", "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_solver_failure_names_grid_point(self, tmp_path, monkeypatch, capsys):
        from spreadmi import NumericsError
        import spreadmi.cli as cli_mod

        def explode(spec, options=None):
            raise NumericsError("forced failure")

        monkeypatch.setattr(cli_mod, "solve_saddle", explode)
        code = main(["mi-sweep", "--prior", "binary", "--spectrum", "wbe",
                     "--beta", "1.5", "--sigma2-grid", "0.5",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 3
        err = capsys.readouterr().err
        assert "spectrum=wbe" in err and "sigma2=0.5" in err


class TestVerifyOptimality:
    def test_sampled_candidates_pass(self, tmp_path):
        out = tmp_path / "opt"
        code = main(["verify-optimality", "--beta", "1.5", "--candidates", "3",
                     "--seed", "1", "--sigma2-grid", "0.5", "--out", str(out)])
        assert code == 0
        header, rows = rows_of(tmp_path / "opt_mi.csv")
        assert header == ["candidate", "sigma2", "candidate_C", "wbe_C", "margin"]
        assert len(rows) == 3
        assert all(float(r["margin"]) >= -1e-9 for r in rows)
        assert (tmp_path / "opt_r_dominance.csv").exists()
        assert (tmp_path / "opt_hilbert_dominance.csv").exists()

    def test_zero_candidates_empty_report(self, tmp_path):
        out = tmp_path / "opt"
        code = main(["verify-optimality", "--beta", "1.5", "--candidates", "0",
                     "--sigma2-grid", "0.5", "--out", str(out)])
        assert code == 0
        header, rows = rows_of(tmp_path / "opt_mi.csv")
        assert rows == []

    def test_wbe_candidate_has_zero_margins(self, tmp_path):
        out = tmp_path / "opt"
        code = main(["verify-optimality", "--beta", "1.5", "--candidates", "0",
                     "--candidate", "wbe", "--sigma2-grid", "0.5",
                     "--out", str(out)])
        assert code == 0
        _, rows = rows_of(tmp_path / "opt_mi.csv")
        assert len(rows) == 1
        assert abs(float(rows[0]["margin"])) <= 1e-10


class TestSimulate:
    def test_columns_and_gap(self, tmp_path):
        out = tmp_path / "sim.csv"
        code = main(["simulate", "--K", "6", "--L", "4", "--prior", "binary",
                     "--sigma2-grid", "0.5", "--n-samples", "2000",
                     "--seed", "3", "--out", str(out)])
        assert code == 0
        header, rows = rows_of(out)
        assert header == ["K", "L", "kind", "sigma2", "mi", "stderr",
                          "n_samples", "seed", "replica_C", "gap"]
        assert {r["kind"] for r in rows} == {"iid", "wbe"}
        for r in rows:
            gap = ((float(r["mi"]) - float(r["replica_C"]))
                   / float(r["replica_C"]))
            assert float(r["gap"]) == pytest.approx(gap, abs=1e-10)

    def test_single_user_matches_scalar_channel(self, tmp_path):
        out = tmp_path / "sim1.csv"
        code = main(["simulate", "--K", "1", "--L", "1", "--kind", "iid",
                     "--prior", "binary", "--sigma2-grid", "1",
                     "--n-samples", "20000", "--seed", "11", "--out", str(out)])
        assert code == 0
        _, rows = rows_of(out)
        from spreadmi import binary_prior, scalar_mutual_information
        oracle = scalar_mutual_information(binary_prior(), 1.0)
        assert abs(float(rows[0]["mi"]) - oracle) <= 3 * float(rows[0]["stderr"])

    def test_byte_reproducible(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        args = ["simulate", "--K", "4", "--L", "2", "--prior", "binary",
                "--sigma2-grid", "0.5:1:2", "--n-samples", "1500", "--seed", "9"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_enumeration_bound_exit_code(self, tmp_path):
        code = main(["simulate", "--K", "24", "--L", "16", "--kind", "iid",
                     "--prior", "binary", "--sigma2-grid", "0.5",
                     "--n-samples", "1000", "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_wbe_needs_overload(self, tmp_path):
        code = main(["simulate", "--K", "4", "--L", "4", "--kind", "wbe",
                     "--prior", "binary", "--sigma2-grid", "0.5",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 2

    def test_matrix_dump(self, tmp_path):
        out = tmp_path / "sim.csv"
        code = main(["simulate", "--K", "3", "--L", "2", "--kind", "wbe",
                     "--prior", "binary", "--sigma2-grid", "0.5",
                     "--n-samples", "1000", "--seed", "2", "--out", str(out),
                     "--dump-matrix-dir", str(tmp_path)])
        assert code == 0
        from spreadmi import read_matrix
        mat = read_matrix(tmp_path / "matrix_wbe_K3_L2.txt")
        assert mat.K == 3 and mat.L == 2 and mat.seed == 2


class TestTransform:
    def test_table_satisfies_defining_relation(self, tmp_path):
        out = tmp_path / "t.csv"
        code = main(["transform", "--spectrum", "wbe", "--beta", "1.5",
                     "--z-grid=-5:-0.001:40", "--out", str(out)])
        assert code == 0
        header, rows = rows_of(out)
        assert header == ["spectrum", "z", "R", "G", "gamma", "hilbert"]
        for r in rows:
            assert float(r["hilbert"]) == pytest.approx(float(r["z"]),
                                                        rel=1e-8, abs=1e-10)
            assert float(r["R"]) > 0.0
            assert float(r["G"]) <= 0.0

    def test_rejects_nonnegative_grid(self, tmp_path):
        code = main(["transform", "--spectrum", "wbe", "--beta", "1.5",
                     "--z-grid", "0.5:1:3", "--out", str(tmp_path / "x.csv")])
        assert code == 2


class TestEntryPoint:
    def test_console_script_runs(self, tmp_path):
        out = tmp_path / "g.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "spreadmi.cli", "mi-sweep", "--prior",
             "gaussian", "--spectrum", "wbe", "--beta", "1.5",
             "--sigma2-grid", "0.5", "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert out.exists()

    def test_worker_env_does_not_change_output(self, tmp_path, monkeypatch):
        args = ["mi-sweep", "--prior", "binary", "--spectrum", "wbe", "--beta",
                "1.5", "--sigma2-grid", "0.25:1:4"]
        a = tmp_path / "a.csv"
        assert main(args + ["--out", str(a)]) == 0
        monkeypatch.setenv("SPREADMI_WORKERS", "4")
        b = tmp_path / "b.csv"
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

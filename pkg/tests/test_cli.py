"""End-to-end CLI tests: exit codes, table schemas, determinism, figures."""

import numpy as np
import pytest

from spafda.cli import main
from spafda.dataio import SpatialDataset, load_dataset, save_dataset
from spafda.fdcore import Grid, SampledFunction


def run(argv):
    return main([str(a) for a in argv])


def make_small_csv(path, n=5, T=41, seed=0):
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(T)
    t = grid.points
    sites = rng.uniform(0.0, 4.0, size=(n, 2))
    fns = tuple(
        SampledFunction(
            grid,
            (4.0 + rng.normal(0, 0.5)) * np.sin(2 * np.pi * t) + rng.normal(0, 0.1, T),
            site=(sites[i, 0], sites[i, 1]),
        )
        for i in range(n)
    )
    save_dataset(SpatialDataset(grid, fns), path)


class TestSimulate:
    def test_byte_identical_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "--design", "bimodal", "--seed", 3,
                        "--grid-size", 31, "--out", out]) == 0
        for name in ("dataset.csv", "true_amplitudes.csv", "true_phases.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_cluster_design_writes_partitions(self, tmp_path):
        out = tmp_path / "sim"
        assert run(["simulate", "--design", "agree", "--seed", 1,
                    "--grid-size", 31, "--out", out]) == 0
        lines = (out / "true_partitions.csv").read_text().splitlines()
        assert lines[0] == "site_id,amplitude_cluster,phase_cluster"
        assert len(lines) == 17  # header + 16 sites

    def test_dataset_round_trips(self, tmp_path):
        out = tmp_path / "sim"
        run(["simulate", "--design", "bimodal", "--seed", 0,
             "--grid-size", 31, "--out", out])
        ds = load_dataset(out / "dataset.csv")
        assert ds.n == 25
        assert ds.grid.size == 31


class TestKrige:
    def test_predictions_table_and_figures(self, tmp_path):
        data = tmp_path / "data.csv"
        make_small_csv(data, n=6)
        out = tmp_path / "krige"
        assert run(["krige", "--data", data, "--target", "2.0", "2.0",
                    "--target", "1.0", "3.0", "--out", out,
                    "--max-iterations", 2, "--n-bins", 4]) == 0
        lines = (out / "predictions.csv").read_text().splitlines()
        assert lines[0].startswith("x,y,method,t_0,")
        assert len(lines) == 5  # header + (apk, ok) x 2 targets
        methods = [l.split(",")[2] for l in lines[1:]]
        assert methods == ["apk", "ok", "apk", "ok"]
        for stem in ("predictions_plot", "variograms"):
            assert (out / f"{stem}.svg").exists()
            assert (out / f"{stem}.csv").exists()

    def test_missing_target_is_usage_error(self, tmp_path):
        data = tmp_path / "data.csv"
        make_small_csv(data)
        assert run(["krige", "--data", data, "--out", tmp_path / "o"]) == 2

    def test_figures_deterministic(self, tmp_path):
        data = tmp_path / "data.csv"
        make_small_csv(data, n=6)
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            run(["krige", "--data", data, "--target", "2.0", "2.0",
                 "--out", out, "--max-iterations", 2, "--n-bins", 4])
        assert (a / "variograms.svg").read_bytes() == (b / "variograms.svg").read_bytes()


class TestLoocv:
    def test_means_table_schema(self, tmp_path):
        data = tmp_path / "data.csv"
        make_small_csv(data, n=5)
        out = tmp_path / "loocv"
        assert run(["loocv", "--data", data, "--out", out,
                    "--max-iterations", 2, "--n-bins", 4]) == 0
        lines = (out / "loocv_means.csv").read_text().splitlines()
        cols = lines[0].split(",")
        assert cols == [
            "E1_apk", "E2_apk", "E3_apk", "E4_apk", "E5_apk",
            "E1_ok", "E2_ok", "E3_ok", "E4_ok", "E5_ok",
        ]
        vals = [float(v) for v in lines[1].split(",")]
        assert len(vals) == 10
        assert all(v >= 0 for v in vals)
        per = (out / "loocv_per_site.csv").read_text().splitlines()
        assert len(per) == 6  # header + 5 sites
        assert (out / "variograms.svg").exists()

    def test_plot_csv_parses_back(self, tmp_path):
        data = tmp_path / "data.csv"
        make_small_csv(data, n=5)
        out = tmp_path / "loocv"
        run(["loocv", "--data", data, "--out", out,
             "--max-iterations", 2, "--n-bins", 4])
        lines = (out / "variograms.csv").read_text().splitlines()
        assert lines[0] == "panel,lag,empirical_semivariance,pair_count,fitted_semivariance"
        panels = {l.split(",")[0] for l in lines[1:]}
        assert panels == {"raw", "amplitude", "phase"}
        for l in lines[1:]:
            cells = l.split(",")
            float(cells[1]), float(cells[2]), int(cells[3]), float(cells[4])


class TestCluster:
    def test_partitions_and_rand_indices(self, tmp_path):
        sim = tmp_path / "sim"
        run(["simulate", "--design", "agree", "--seed", 2,
             "--grid-size", 41, "--out", sim])
        out = tmp_path / "cl"
        assert run(["cluster", "--data", sim / "dataset.csv", "--k", 4,
                    "--truth", sim / "true_partitions.csv", "--out", out,
                    "--n-bins", 6]) == 0
        lines = (out / "partitions.csv").read_text().splitlines()
        assert lines[0] == "site_id,amplitude_cluster,phase_cluster,l2_cluster"
        assert len(lines) == 17
        for l in lines[1:]:
            cells = l.split(",")
            assert all(1 <= int(c) <= 4 for c in cells[1:])
        rand = (out / "rand_indices.csv").read_text().splitlines()
        assert rand[0] == "index,method,value"
        assert len(rand) == 7  # 2 indices x 3 methods
        for l in rand[1:]:
            assert 0.0 <= float(l.split(",")[2]) <= 1.0
        for name in ("amplitude", "phase", "l2"):
            assert (out / f"map_{name}.svg").exists()
            assert (out / f"map_{name}.csv").exists()

    def test_map_csv_matches_partition(self, tmp_path):
        sim = tmp_path / "sim"
        run(["simulate", "--design", "agree", "--seed", 2,
             "--grid-size", 41, "--out", sim])
        out = tmp_path / "cl"
        run(["cluster", "--data", sim / "dataset.csv", "--k", 4,
             "--out", out, "--n-bins", 6])
        part = {
            l.split(",")[0]: l.split(",")[1]
            for l in (out / "partitions.csv").read_text().splitlines()[1:]
        }
        map_lines = (out / "map_amplitude.csv").read_text().splitlines()
        assert map_lines[0] == "site_id,x,y,cluster"
        for l in map_lines[1:]:
            cells = l.split(",")
            assert cells[3] == part[cells[0]]


class TestErrors:
    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["loocv"])  # missing required --data/--out
        assert exc.value.code == 2

    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_malformed_csv_exits_one_with_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("site_id,x,y,t_0,t_1\na,0,0,1,2\nb,1,0,oops,2\n")
        assert run(["loocv", "--data", bad, "--out", tmp_path / "o"]) == 1
        err = capsys.readouterr().err
        assert "error" in err
        assert ":3:" in err

    def test_missing_file_exits_one(self, tmp_path):
        assert run(["loocv", "--data", tmp_path / "nope.csv",
                    "--out", tmp_path / "o"]) == 1


class TestStudy:
    def test_cluster_study_table(self, tmp_path):
        out = tmp_path / "study"
        assert run(["study", "--design", "agree", "--replicates", 2,
                    "--seed", 0, "--out", out, "--n-bins", 6]) == 0
        lines = (out / "study_cluster.csv").read_text().splitlines()
        assert lines[0] == "seed,amp_rand_apc,amp_rand_l2,phase_rand_apc,phase_rand_l2"
        assert len(lines) == 4  # header + 2 replicates + mean row
        assert lines[-1].startswith("mean,")

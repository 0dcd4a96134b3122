import json

import numpy as np
import pytest
from click.testing import CliRunner

from jive.cli import cli, main
from jive.io import read_json, read_matrix


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def toy_dir(tmp_path, runner):
    out = tmp_path / "toy"
    result = runner.invoke(cli, ["simulate", "toy", "--seed", "1", "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def blocks_args(d, names=("X", "Y")):
    args = []
    for n in names:
        args += ["--block", f"{n}={d / (n + '.tsv')}"]
    return args


class TestDecompose:
    def test_fixed_ranks(self, runner, toy_dir, tmp_path):
        out = tmp_path / "fit"
        result = runner.invoke(cli, ["decompose", *blocks_args(toy_dir), "--ranks", "1:1,1",
                                     "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "ranks\t1:1,1" in result.output
        manifest = read_json(out / "manifest.json")
        assert manifest["ranks"] == {"joint": 1, "individual": [1, 1]}
        for row in manifest["variation_explained"]:
            assert row["joint"] + row["individual"] + row["residual"] == pytest.approx(100, abs=0.5)
        x = read_matrix(toy_dir / "X.tsv").data
        parts = [read_matrix(out / f"X_{p}.tsv").data for p in ("joint", "individual", "residual")]
        # components add up to the centered, block-scaled input
        centered = x - x.mean(axis=1, keepdims=True)
        norm = manifest["blocks"][0]["norm"]
        np.testing.assert_allclose(sum(parts), centered / norm, atol=1e-12)
        for fname in manifest["files"]:
            assert (out / fname).exists()
        assert manifest["command_line"][:2] == ["jive", "decompose"]

    def test_manifest_command_line_reruns(self, runner, toy_dir, tmp_path):
        out = tmp_path / "fit"
        runner.invoke(cli, ["decompose", *blocks_args(toy_dir), "--ranks", "1:1,1",
                            "--out", str(out)])
        argv = read_json(out / "manifest.json")["command_line"]
        again = runner.invoke(cli, argv[1:])
        assert again.exit_code == 0

    def test_auto_ranks(self, runner, toy_dir, tmp_path):
        out = tmp_path / "auto"
        result = runner.invoke(cli, ["decompose", *blocks_args(toy_dir), "--n-perm", "100",
                                     "--out", str(out)])
        assert result.exit_code == 0, result.output
        manifest = read_json(out / "manifest.json")
        assert manifest["ranks"] == {"joint": 1, "individual": [1, 1]}
        assert manifest["rank_selection"]["effective_ranks"] == [2, 2]

    def test_sparse(self, runner, toy_dir, tmp_path):
        out = tmp_path / "sparse"
        result = runner.invoke(cli, ["decompose", *blocks_args(toy_dir), "--ranks", "1:1,1",
                                     "--sparse", "0.05,0,0", "--out", str(out)])
        assert result.exit_code == 0, result.output
        loadings = read_matrix(out / "X_joint_loadings.tsv").data
        assert np.any(loadings == 0.0)
        assert read_json(out / "manifest.json")["config"]["sparse"] == [0.05, 0.0, 0.0]

    def test_sparse_weight_count(self, runner, toy_dir, tmp_path):
        result = runner.invoke(cli, ["decompose", *blocks_args(toy_dir), "--ranks", "1:1,1",
                                     "--sparse", "0.1,0.2", "--out", str(tmp_path / "o")])
        assert result.exit_code == 2

    def test_mismatched_samples_name_both_files(self, runner, toy_dir, tmp_path):
        short = tmp_path / "short.tsv"
        lines = (toy_dir / "Y.tsv").read_text().splitlines()
        short.write_text("\n".join("\t".join(l.split("\t")[:-1]) for l in lines) + "\n")
        result = runner.invoke(cli, ["decompose", "--block", f"X={toy_dir / 'X.tsv'}",
                                     "--block", f"Y={short}", "--ranks", "1:1,1",
                                     "--out", str(tmp_path / "o")])
        assert result.exit_code == 2
        assert "X.tsv" in result.output and "short.tsv" in result.output

    def test_rank_bounds(self, runner, toy_dir, tmp_path):
        result = runner.invoke(cli, ["decompose", *blocks_args(toy_dir), "--ranks", "1:1",
                                     "--out", str(tmp_path / "o")])
        assert result.exit_code == 2


class TestRanks:
    def test_deterministic_output(self, runner, toy_dir):
        args = ["ranks", *blocks_args(toy_dir), "--n-perm", "30", "--seed", "4"]
        a, b = runner.invoke(cli, args), runner.invoke(cli, args)
        assert a.exit_code == 0
        assert a.output == b.output
        assert "stage2_pvalues" in a.output

    def test_null_data(self, runner, tmp_path):
        rng = np.random.default_rng(0)
        for name in ("A", "B"):
            m = rng.standard_normal((20, 40))
            rows = "\n".join(f"v{i}\t" + "\t".join(repr(float(x)) for x in r) for i, r in enumerate(m))
            header = "\t" + "\t".join(f"s{j}" for j in range(40))
            (tmp_path / f"{name}.tsv").write_text(header + "\n" + rows + "\n")
        out = tmp_path / "r.json"
        result = runner.invoke(cli, ["ranks", *blocks_args(tmp_path, ("A", "B")),
                                     "--n-perm", "50", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "joint_rank\t0" in result.output
        assert json.loads(out.read_text())["joint_rank"] == 0


class TestSimulate:
    def test_noiseless_random(self, runner, tmp_path):
        out = tmp_path / "r"
        result = runner.invoke(cli, ["simulate", "random", "--seed", "3", "--sigma", "0",
                                     "--out", str(out)])
        assert result.exit_code == 0, result.output
        truth = read_json(out / "truth.json", format_tag="jive-truth/1")
        assert truth["noiseless"] is True
        np.testing.assert_array_equal(read_matrix(out / "truth_X1_noise.tsv").data, 0.0)

    def test_regeneration_identical(self, runner, tmp_path):
        for d in ("a", "b"):
            runner.invoke(cli, ["simulate", "random", "--seed", "8", "--out", str(tmp_path / d)])
        assert (tmp_path / "a" / "X1.tsv").read_bytes() == (tmp_path / "b" / "X1.tsv").read_bytes()

    def test_overrides(self, runner, tmp_path):
        out = tmp_path / "r"
        result = runner.invoke(cli, ["simulate", "random", "--n-samples", "12", "--dims", "10,11,9",
                                     "--ranks", "1:0,1,2", "--sigma", "0.5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert read_matrix(out / "X3.tsv").data.shape == (9, 12)

    def test_planted_from_files(self, runner, toy_dir, tmp_path):
        out = tmp_path / "p"
        result = runner.invoke(cli, ["simulate", "planted", *blocks_args(toy_dir),
                                     "--fraction", "0.1", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "labels.tsv").exists() and (out / "X.tsv").exists()


class TestSwiss:
    def test_scores_and_pvalues(self, runner, toy_dir):
        x = str(toy_dir / "X.tsv")
        result = runner.invoke(cli, ["swiss", "--block", f"a={x}", "--block", f"b={x}",
                                     "--labels", str(toy_dir / "labels_X.tsv"),
                                     "--n-perm", "99"])
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert lines[0] == "matrix\tswiss\tp_value"
        name, score, p = lines[2].split("\t")
        assert len(score.split(".")[1]) == 4
        assert float(p) == 1.0

    def test_missing_label(self, runner, toy_dir, tmp_path):
        labels = (toy_dir / "labels_X.tsv").read_text().splitlines()[:-1]
        (tmp_path / "l.tsv").write_text("\n".join(labels) + "\n")
        result = runner.invoke(cli, ["swiss", "--block", f"a={toy_dir / 'X.tsv'}",
                                     "--labels", str(tmp_path / "l.tsv")])
        assert result.exit_code == 2
        assert "no group label" in result.output


class TestExitCodes:
    def test_validation(self, tmp_path):
        assert main(["decompose", "--block", "bad", "--out", str(tmp_path)]) == 2

    def test_numerical(self, tmp_path):
        (tmp_path / "c.tsv").write_text("\ts1\ts2\nv\t1\t1\n")
        code = main(["decompose", "--block", f"C={tmp_path / 'c.tsv'}", "--ranks", "0:0",
                     "--out", str(tmp_path / "o")])
        assert code == 3

    def test_io(self, tmp_path):
        assert main(["ranks", "--block", f"A={tmp_path / 'missing.tsv'}"]) == 4

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "jive" in capsys.readouterr().out

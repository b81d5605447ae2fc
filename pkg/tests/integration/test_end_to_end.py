"""End-to-end tests driving the command line over a small generated dataset."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

import pandas as pd
import pytest
from typer.testing import CliRunner

from gazemodal.cli import app
from gazemodal.evaluation.experiments import experiment_matrix

pytestmark = pytest.mark.integration

runner = CliRunner()

RUN_CONFIG = """\
# small models for quick runs
image_size = 16
channels = 2,4
lstm_hidden = 4
embedding_dim = 8
embedding_epochs = 1
min_count = 1
folds = 2
epochs = 1
batch_size = 16
"""


def invoke(*args):
    result = runner.invoke(app, [str(a) for a in args])
    assert result.exit_code == 0, result.stdout
    return result


def tree_bytes(root):
    """File contents under root, leaving out the echo since it records the output path."""
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != "config.echo"
    }


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Generated data, a run config and trained embeddings."""
    root = tmp_path_factory.mktemp("e2e")
    invoke("gen-data", "--out", root / "data", "--n-studies", 40, "--image-size", 16, "--frames", 3,
           "--corpus-size", 60, "--seed", 5)
    config = root / "run.cfg"
    config.write_text(RUN_CONFIG)
    invoke("train-embed", "--data", root / "data", "--out", root / "emb", "--config", config, "--seed", 5)
    return root


class TestPipeline:
    """Test the subcommands in sequence."""

    def test_gen_data_deterministic(self, workspace, tmp_path):
        """Generating with the same seed twice gives identical trees."""
        invoke("gen-data", "--out", tmp_path, "--n-studies", 40, "--image-size", 16, "--frames", 3,
               "--corpus-size", 60, "--seed", 5)
        assert tree_bytes(tmp_path) == tree_bytes(workspace / "data")

    def test_train_embed_outputs(self, workspace):
        """Embeddings, the loss trace, both projections and the echo are written."""
        emb = workspace / "emb"
        for name in ("embeddings.txt", "embedding_loss.csv", "pca_indication.svg", "pca_full.svg", "config.echo"):
            assert (emb / name).is_file(), name
        assert (emb / "embeddings.txt").read_text().splitlines()[0].startswith("8 ")

    def test_run_exp_fusion(self, workspace):
        """A text and image run writes its AUC table."""
        out = workspace / "runs"
        result = invoke("run-exp", "--experiment", "img_text_full", "--data", workspace / "data",
                        "--embeddings", workspace / "emb" / "embeddings.txt", "--out", out,
                        "--config", workspace / "run.cfg", "--seed", 5)
        table = pd.read_csv(out / "img_text_full" / "auc.csv", index_col="Class")
        assert list(table.columns) == ["Fold1", "Fold2", "Average"]
        assert table.shape == (4, 3)
        assert "Average AUC" in result.stdout

    def test_attention_scores_match(self, workspace):
        """Scoring the saved maps reproduces the run's own overlap values."""
        out = workspace / "runs"
        invoke("run-exp", "--arch", "GAZE_SUPERVISED_UNET", "--data", workspace / "data", "--out", out,
               "--config", workspace / "run.cfg", "--seed", 5)
        invoke("eval-attn", "--attention", out / "attn_img" / "attention", "--data", workspace / "data",
               "--out", workspace / "eval")
        scored = pd.read_csv(workspace / "eval" / "attention_scores.csv")
        during_run = pd.read_csv(out / "attn_img" / "overlap.csv")
        pd.testing.assert_frame_equal(scored, during_run)

    def test_report(self, workspace):
        """report collects every run under --out."""
        invoke("run-exp", "--experiment", "img", "--data", workspace / "data", "--out", workspace / "runs",
               "--config", workspace / "run.cfg")
        invoke("report", "--out", workspace / "runs")
        summary = pd.read_csv(workspace / "runs" / "summary.csv", index_col="experiment")
        assert "img" in summary.index
        assert list(summary.columns) == ["Normal", "CHF", "Pneumonia", "Average AUC"]

    def test_echo_reproduces(self, workspace, tmp_path):
        """Re-running from config.echo reproduces the AUC table byte for byte."""
        first = tmp_path / "first"
        invoke("run-exp", "--experiment", "hmap_static", "--data", workspace / "data", "--out", first,
               "--config", workspace / "run.cfg", "--seed", 9)
        second = tmp_path / "second"
        invoke("run-exp", "--config", first / "config.echo", "--out", second)
        assert (first / "hmap_static" / "auc.csv").read_bytes() == (second / "hmap_static" / "auc.csv").read_bytes()

    def test_outputs_stay_in_out(self, workspace, tmp_path):
        """A run writes nothing next to the dataset."""
        before = tree_bytes(workspace / "data")
        invoke("run-exp", "--experiment", "img", "--data", workspace / "data", "--out", tmp_path / "o",
               "--config", workspace / "run.cfg")
        assert tree_bytes(workspace / "data") == before


@pytest.mark.slow
class TestMatrix:
    """Test the full experiment matrix."""

    def test_run_matrix(self, workspace, tmp_path):
        """One AUC table per distinct run, the overlap summaries, and repeatable CSVs."""
        args = ["run-matrix", "--data", workspace / "data", "--embeddings", workspace / "emb" / "embeddings.txt",
                "--config", workspace / "run.cfg", "--seed", 5]
        invoke(*args, "--out", tmp_path / "a", "--jobs", 2)
        invoke(*args, "--out", tmp_path / "b")

        tables = sorted((tmp_path / "a").glob("*/auc.csv"))
        assert len(tables) == len(experiment_matrix()) == 14
        for name in ("summary.csv", "attention_overlap.csv", "overlap_summary.csv"):
            assert (tmp_path / "a" / name).is_file()
        overlap_summary = pd.read_csv(tmp_path / "a" / "overlap_summary.csv")
        assert len(overlap_summary) == 3

        for path in sorted((tmp_path / "a").rglob("*.csv")):
            twin = tmp_path / "b" / path.relative_to(tmp_path / "a")
            assert path.read_bytes() == twin.read_bytes(), path.name

    def test_text_beats_chance(self, workspace, tmp_path):
        """With a few epochs the full-report text model separates the classes."""
        invoke("run-exp", "--experiment", "text_full", "--data", workspace / "data",
               "--embeddings", workspace / "emb" / "embeddings.txt", "--out", tmp_path,
               "--config", workspace / "run.cfg", "--epochs", 15, "--lr", 0.01, "--seed", 5)
        table = pd.read_csv(tmp_path / "text_full" / "auc.csv", index_col="Class")
        assert table.loc["Average AUC", "Average"] > 0.5

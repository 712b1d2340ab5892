import shutil
import subprocess
import sys

import pytest

from mdresolve.cli import main
from mdresolve.errors import PipelineError
from mdresolve.pipeline import load_config, run_pipeline


def test_mini_corpus_end_to_end(bibsample, tmp_path):
    state = run_pipeline(bibsample / "pipeline.ini", tmp_path)
    assert state.candidates["md"]["Paper"] == {(123, 205), (195, 769)}
    assert state.duplicates["Paper"] == {(123, 205), (195, 769)}
    metrics = (tmp_path / "metrics.txt").read_text()
    assert "md.Paper.recall=1.000000" in metrics and "md.Paper.precision=1.000000" in metrics
    assert "standard.Paper.candidate_pairs=" in metrics
    resolved = (tmp_path / "resolved" / "Paper.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in resolved] == ["123", "195"]
    assert (tmp_path / "duplicates.tsv").read_text() == "Paper\t123\t205\nPaper\t195\t769\n"
    for name in ("validation.txt", "simcache.tsv", "blocks.md.tsv", "lineage.md.tsv", "candidates.standard.tsv"):
        assert (tmp_path / name).exists()


def test_synthetic_corpus_full_run(synthetic, tmp_path):
    assert main(["pipeline", "--config", str(synthetic / "pipeline.ini"), "--out-dir", str(tmp_path)]) == 0
    metrics = (tmp_path / "metrics.txt").read_text()
    assert metrics.startswith("seed=7\nblocking=both\n")
    assert "classify.Paper.test_accuracy=" in metrics
    assert (tmp_path / "resolved" / "Author.csv").exists()
    assert (tmp_path / "model.Author.txt").exists()


def test_seed_override_changes_only_the_header(synthetic, tmp_path):
    a = run_pipeline(synthetic / "pipeline.ini", tmp_path / "a", classify=False)
    b = run_pipeline(synthetic / "pipeline.ini", tmp_path / "b", classify=False, seed=99)
    assert a.assignments["md"] == b.assignments["md"]
    assert a.metrics.splitlines()[1:] == b.metrics.splitlines()[1:]


def test_missing_model_fails_at_classify(bibsample, tmp_path):
    for name in ("schema.txt", "rules.txt", "author.csv", "paper.csv", "paperauthor.csv",
                 "conference.csv", "journal.csv", "pipeline.ini", "gold.tsv"):
        shutil.copy(bibsample / name, tmp_path / name)
    with pytest.raises(PipelineError) as info:
        run_pipeline(tmp_path / "pipeline.ini", tmp_path / "out")
    assert info.value.stage == "classify"
    assert "no model file and no training data for Paper" in str(info.value)
    # blocking alone still works without a model
    run_pipeline(tmp_path / "pipeline.ini", tmp_path / "out", until="block")


@pytest.mark.parametrize("text, message", [
    ("[pipeline]\nrules = r.txt\n", "schema"),
    ("[pipeline]\nschema = s.txt\nseed = many\n", "invalid literal"),
    ("[pipeline]\nschema = s.txt\nblocking = fuzzy\n", "blocking"),
    ("not an ini", "config"),
])
def test_config_errors(tmp_path, text, message):
    path = tmp_path / "p.ini"
    path.write_text(text)
    with pytest.raises(PipelineError, match=message):
        load_config(path)


def test_stage_errors_are_tagged(tmp_path, bibsample):
    path = tmp_path / "p.ini"
    path.write_text(f"[pipeline]\nschema = {bibsample / 'schema.txt'}\n[data]\nAuthor = missing.csv\n")
    with pytest.raises(PipelineError) as info:
        run_pipeline(path)
    assert info.value.stage == "ingest"


def test_cli_reports_errors(tmp_path, capsys):
    path = tmp_path / "p.ini"
    path.write_text("[pipeline]\n")
    assert main(["block", "--config", str(path), "--out-dir", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith("mdresolve: ")


def test_cli_stage_commands(bibsample, tmp_path):
    assert main(["block", "--config", str(bibsample / "pipeline.ini"), "--out-dir", str(tmp_path),
                 "--blocking", "md"]) == 0
    assert (tmp_path / "candidates.md.tsv").read_text() == "Author\t612\t4994\nPaper\t123\t205\nPaper\t195\t769\n"
    assert not (tmp_path / "candidates.standard.tsv").exists()
    assert main(["evaluate", "--config", str(bibsample / "pipeline.ini"), "--out-dir", str(tmp_path / "e")]) == 0
    assert not (tmp_path / "e" / "duplicates.tsv").exists()


def test_module_entry_point(bibsample, tmp_path):
    out = subprocess.run([sys.executable, "-m", "mdresolve", "ingest", "--config", str(bibsample / "pipeline.ini"),
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "validation.txt").read_text().startswith("dangling_references=0\n")

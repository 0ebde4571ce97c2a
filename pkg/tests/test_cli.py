import json

import pytest

from ecgemo import cli
from ecgemo.features import FEATURE_NAMES, write_feature_csv

from conftest import toy_table

FAST = "NB_Gaussian,LDA"


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    assert cli.main(["synth", "--out", str(data), "--subjects", "5", "--epochs", "12", "--seed", "1"]) == 0
    out = root / "extract"
    assert cli.main(["extract", "--data-dir", str(data), "--out", str(out)]) == 0
    return data, out / "features.csv"


def test_extract_header_and_rows(dataset):
    _, features = dataset
    lines = features.read_text().splitlines()
    assert lines[0].split(",") == [*FEATURE_NAMES, "subject_id", "emotion", "label", "epoch_index"]
    assert len(lines) == 1 + 5 * 2 * 12
    assert json.loads((features.parent / "manifest.json").read_text())["stage"] == "extract"


def test_extract_is_byte_identical(dataset, tmp_path):
    data, features = dataset
    assert cli.main(["extract", "--data-dir", str(data), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "features.csv").read_bytes() == features.read_bytes()


def test_extract_empty_dir(tmp_path, capsys):
    (tmp_path / "in").mkdir()
    assert cli.main(["extract", "--data-dir", str(tmp_path / "in"), "--out", str(tmp_path / "o")]) == 2
    assert "no usable" in capsys.readouterr().err


def test_extract_skips_bad_files(dataset, tmp_path, capsys):
    import shutil

    data, _ = dataset
    src = tmp_path / "in"
    shutil.copytree(data, src)
    (src / "S999_sadness.csv").write_text("ecg\n1.0\nabc\n")
    assert cli.main(["extract", "--data-dir", str(src), "--out", str(tmp_path / "o")]) == 0
    captured = capsys.readouterr()
    assert "skipped S999_sadness.csv" in captured.err
    assert "files read: 10, skipped: 1" in captured.out


def test_evaluate_default_models_include_ensemble(dataset, tmp_path):
    _, features = dataset
    code = cli.main(["evaluate", "--features", str(features), "--out", str(tmp_path),
                     "--models", "Ensemble,NB_Gaussian", "--fs", "hybrid"])
    assert code == 0
    rows = (tmp_path / "report.csv").read_text().splitlines()
    assert rows[0] == "model,accuracy,precision,recall,f1"
    assert sorted(r.split(",")[0] for r in rows[1:]) == ["Ensemble", "NB_Gaussian"]
    for name in ("report.json", "selection.json", "manifest.json"):
        assert (tmp_path / name).exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 0 and str(features) in manifest["inputs"]
    assert not (tmp_path / ".lock").exists()


def test_evaluate_report_byte_identical(dataset, tmp_path):
    _, features = dataset
    args = ["evaluate", "--features", str(features), "--models", FAST, "--seed", "4"]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_generalized_prints_test_subjects(dataset, tmp_path, capsys):
    _, features = dataset
    assert cli.main(["evaluate", "--features", str(features), "--out", str(tmp_path),
                     "--protocol", "generalized", "--models", FAST]) == 0
    assert "test subjects: S00" in capsys.readouterr().out


def test_split_error_exit_code(tmp_path, capsys):
    path = tmp_path / "f.csv"
    write_feature_csv(toy_table(n_subjects=4), path)
    assert cli.main(["evaluate", "--features", str(path), "--out", str(tmp_path / "o"),
                     "--protocol", "generalized", "--models", FAST]) == 3
    assert "protocol error" in capsys.readouterr().err


def test_unknown_model_is_input_error(dataset, tmp_path):
    _, features = dataset
    assert cli.main(["evaluate", "--features", str(features), "--out", str(tmp_path),
                     "--models", "NoSuchModel"]) == 2


def test_missing_features_is_input_error(tmp_path):
    assert cli.main(["evaluate", "--out", str(tmp_path)]) == 2


def test_locked_output_dir(dataset, tmp_path):
    _, features = dataset
    (tmp_path / ".lock").write_text("1")
    assert cli.main(["evaluate", "--features", str(features), "--out", str(tmp_path), "--models", FAST]) == 2


def test_ablation_outputs(dataset, tmp_path, capsys):
    _, features = dataset
    assert cli.main(["ablation", "--features", str(features), "--out", str(tmp_path), "--models", FAST]) == 0
    out = capsys.readouterr().out
    counts = {line.split("] ")[1] for line in out.splitlines() if line.startswith("[")}
    assert len(counts) == 1
    header = (tmp_path / "ablation.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "model" and header[-1] == "Best FS"
    for stem in ("no_fs", "hybrid_fs", "kbest_only"):
        assert (tmp_path / f"report_{stem}.csv").exists()
    assert (tmp_path / "manifest.json").exists()

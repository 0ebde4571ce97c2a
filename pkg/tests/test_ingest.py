import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecgemo.errors import EmptyFile, MissingColumn, NonNumericSample, UnsupportedEmotion
from ecgemo.ingest import (
    NEGATIVE_EMOTIONS,
    POSITIVE_EMOTIONS,
    EcgRecording,
    Emotion,
    IngestSchema,
    load_directory,
    load_recording,
    load_schema,
    map_label,
    parse_filename,
    write_recording,
)


def test_identity_read(tmp_path):
    path = tmp_path / "S001_amusement.csv"
    path.write_text("ecg\n0.1\n0.2\n0.3\n")
    rec = load_recording(path, IngestSchema(ecg_column="ecg", sampling_rate_hz=1000))
    np.testing.assert_array_equal(rec.samples, [0.1, 0.2, 0.3])
    assert rec.sampling_rate_hz == 1000


def test_nan_row_rejected(tmp_path):
    path = tmp_path / "S001_amusement.csv"
    path.write_text("ecg\n0.1\nNaN\n0.3\n")
    with pytest.raises(NonNumericSample):
        load_recording(path)


@pytest.mark.parametrize("body, exc", [
    ("", EmptyFile),
    ("ecg\n", EmptyFile),
    ("voltage\n1.0\n", MissingColumn),
    ("ecg\n1.0\nabc\n", NonNumericSample),
    ("ecg\n1.0\ninf\n", NonNumericSample),
])
def test_bad_files(tmp_path, body, exc):
    path = tmp_path / "S001_anger.csv"
    path.write_text(body)
    with pytest.raises(exc):
        load_recording(path)


def test_filename_metadata(tmp_path):
    path = tmp_path / "S012_anger.csv"
    path.write_text("ecg\n1\n2\n")
    # independent oracle: split the stem on the last underscore
    subject, emotion = path.stem.rsplit("_", 1)
    rec = load_recording(path, IngestSchema(filename_pattern="{subject}_{emotion}.csv"))
    assert (rec.subject_id, rec.emotion.value) == (subject, emotion) == ("S012", "anger")
    assert rec.label == 0


def test_parse_filename_subject_with_underscore():
    assert parse_filename("study2_P07_gratitude.csv", "{subject}_{emotion}.csv") == {
        "subject": "study2_P07", "emotion": "gratitude"}


def test_numeric_codes_and_metadata_columns(tmp_path, ):
    path = tmp_path / "rec.csv"
    path.write_text("timestamp;ECG;subject;affect\n0;0.5;P9;3\n1;0.6;P9;3\n")
    schema = IngestSchema(ecg_column="ECG", filename_pattern=None, subject_column="subject",
                          emotion_column="affect", delimiter=";", label_map={"3": "tenderness"})
    rec = load_recording(path, schema)
    assert rec.subject_id == "P9" and rec.emotion is Emotion.TENDERNESS and rec.label == 1


def test_schema_file(tmp_path):
    cfg = tmp_path / "schema.yaml"
    cfg.write_text("ecg_column: ECG\nsampling_rate_hz: 500\nfilename_pattern: '{subject}-{emotion}.csv'\n"
                   "label_map:\n  1: amusement\n  2: anger\n")
    schema = load_schema(cfg)
    assert schema.ecg_column == "ECG" and schema.sampling_rate_hz == 500
    assert schema.label_map == {"1": "amusement", "2": "anger"}
    cfg.write_text("ecg_colum: x\n")
    with pytest.raises(ValueError):
        load_schema(cfg)


@pytest.mark.parametrize("emotion, label", [
    ("gratitude", 1), ("amusement", 1), ("tenderness", 1),
    ("disgust", 0), ("sadness", 0), ("anger", 0),
])
def test_map_label(emotion, label):
    assert map_label(emotion) == label


@pytest.mark.parametrize("emotion", ["fear", "excitement", "threat", "neutral", Emotion.OTHER])
def test_map_label_rejects_out_of_scope(emotion):
    with pytest.raises(UnsupportedEmotion):
        map_label(emotion)


def test_label_mapping_is_total_and_balanced():
    labels = {e: map_label(e) for e in POSITIVE_EMOTIONS | NEGATIVE_EMOTIONS}
    assert len(labels) == 6
    assert sorted(labels.values()) == [0, 0, 0, 1, 1, 1]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=50))
def test_csv_round_trip_is_bitwise(tmp_path_factory, values):
    out = tmp_path_factory.mktemp("rt")
    rec = EcgRecording("S1", "sadness", values, 1000.0)
    path = write_recording(rec, out)
    back = load_recording(path)
    assert back.samples.tobytes() == rec.samples.tobytes()
    assert (back.subject_id, back.emotion) == ("S1", Emotion.SADNESS)


def test_directory_skips_bad_and_non_target(tmp_path, caplog):
    (tmp_path / "S1_amusement.csv").write_text("ecg\n1\n2\n")
    (tmp_path / "S1_fear.csv").write_text("ecg\n1\n2\n")
    (tmp_path / "S2_anger.csv").write_text("ecg\n1\nx\n")
    (tmp_path / "junk.csv").write_text("ecg\n1\n")
    recs, skipped = load_directory(tmp_path)
    assert [r.subject_id for r in recs] == ["S1"]
    assert sorted(name for name, _ in skipped) == ["S1_fear.csv", "S2_anger.csv", "junk.csv"]


def test_recording_is_immutable():
    rec = EcgRecording("S1", "anger", [1.0, 2.0])
    with pytest.raises(ValueError):
        rec.samples[0] = 5.0

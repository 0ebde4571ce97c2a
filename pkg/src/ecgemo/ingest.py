"""Reading POPANE-style CSV exports into :class:`EcgRecording` values.

The export layout is not fixed, so everything about it lives in an
:class:`IngestSchema`: which column holds the ECG trace, the sampling rate,
how subject and emotion are recovered (filename pattern or columns), and an
optional map from raw numeric emotion codes to emotion names.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .errors import (
    EmptyFile,
    FilenameMismatch,
    IngestError,
    MissingColumn,
    NonNumericSample,
    UnsupportedEmotion,
)

logger = logging.getLogger(__name__)


class Emotion(str, Enum):
    AMUSEMENT = "amusement"
    TENDERNESS = "tenderness"
    GRATITUDE = "gratitude"
    SADNESS = "sadness"
    DISGUST = "disgust"
    ANGER = "anger"
    OTHER = "other"


POSITIVE_EMOTIONS = frozenset({Emotion.AMUSEMENT, Emotion.TENDERNESS, Emotion.GRATITUDE})
NEGATIVE_EMOTIONS = frozenset({Emotion.SADNESS, Emotion.DISGUST, Emotion.ANGER})
TARGET_EMOTIONS = POSITIVE_EMOTIONS | NEGATIVE_EMOTIONS


def parse_emotion(raw) -> Emotion:
    """Normalize a raw emotion name; anything outside the six targets is ``OTHER``."""
    if isinstance(raw, Emotion):
        return raw
    name = str(raw).strip().lower()
    try:
        return Emotion(name)
    except ValueError:
        return Emotion.OTHER


def map_label(emotion) -> int:
    """Binary target: 1 for positive emotions, 0 for negative ones."""
    emo = parse_emotion(emotion)
    if emo in POSITIVE_EMOTIONS:
        return 1
    if emo in NEGATIVE_EMOTIONS:
        return 0
    raise UnsupportedEmotion(f"emotion {emotion!r} is not one of the six target classes")


@dataclass(frozen=True)
class EcgRecording:
    subject_id: str
    emotion: Emotion
    samples: np.ndarray
    sampling_rate_hz: float = 1000.0
    source: str | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise EmptyFile("recording has no samples")
        if not np.all(np.isfinite(samples)):
            raise NonNumericSample("recording contains non-finite samples")
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "emotion", parse_emotion(self.emotion))

    @property
    def label(self) -> int:
        return map_label(self.emotion)


@dataclass(frozen=True)
class IngestSchema:
    """Where to find things in an export file.

    ``filename_pattern`` uses ``{subject}`` and ``{emotion}`` placeholders;
    set it to ``None`` and fill ``subject_column`` / ``emotion_column`` to read
    metadata from the table instead. ``label_map`` translates raw emotion
    codes (e.g. ``"3"``) to emotion names before anything else happens.
    """

    ecg_column: str = "ecg"
    sampling_rate_hz: float = 1000.0
    filename_pattern: str | None = "{subject}_{emotion}.csv"
    label_map: dict[str, str] = field(default_factory=dict)
    subject_column: str | None = None
    emotion_column: str | None = None
    timestamp_column: str | None = None
    delimiter: str = ","

    def resolve_emotion(self, raw) -> Emotion:
        key = str(raw).strip()
        if key in self.label_map:
            key = self.label_map[key]
        else:
            # numeric columns come back as floats ("3.0")
            try:
                as_int = str(int(float(key)))
            except ValueError:
                as_int = None
            if as_int is not None and as_int in self.label_map:
                key = self.label_map[as_int]
        return parse_emotion(key)


SCHEMA_KEYS = {
    "ecg_column",
    "sampling_rate_hz",
    "filename_pattern",
    "label_map",
    "subject_column",
    "emotion_column",
    "timestamp_column",
    "delimiter",
}


def load_schema(path: str | Path) -> IngestSchema:
    """Read an :class:`IngestSchema` from a YAML or JSON key-value document."""
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    unknown = set(doc) - SCHEMA_KEYS
    if unknown:
        raise ValueError(f"unknown schema keys: {sorted(unknown)}")
    if "label_map" in doc:
        doc["label_map"] = {str(k): str(v) for k, v in (doc["label_map"] or {}).items()}
    return IngestSchema(**doc)


def dump_schema(schema: IngestSchema, path: str | Path) -> None:
    doc = {k: getattr(schema, k) for k in sorted(SCHEMA_KEYS)}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _pattern_regex(pattern: str) -> re.Pattern:
    parts = re.split(r"(\{subject\}|\{emotion\})", pattern)
    rx = []
    for part in parts:
        if part == "{subject}":
            rx.append(r"(?P<subject>.+?)")
        elif part == "{emotion}":
            rx.append(r"(?P<emotion>[^_/\\]+?)")
        else:
            rx.append(re.escape(part))
    return re.compile("^" + "".join(rx) + "$")


def parse_filename(name: str, pattern: str) -> dict[str, str]:
    """Extract ``subject`` / ``emotion`` fields from a file name.

    >>> parse_filename("S012_anger.csv", "{subject}_{emotion}.csv")
    {'subject': 'S012', 'emotion': 'anger'}
    """
    m = _pattern_regex(pattern).match(name)
    if m is None:
        raise FilenameMismatch(f"{name!r} does not match pattern {pattern!r}")
    return m.groupdict()


def load_recording(path: str | Path, schema: IngestSchema | None = None) -> EcgRecording:
    """Load one CSV export. Raises an :class:`IngestError` subclass on bad input."""
    schema = schema or IngestSchema()
    path = Path(path)
    try:
        table = pd.read_csv(
            path,
            sep=schema.delimiter,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise EmptyFile(f"{path.name}: empty file") from exc
    if schema.ecg_column not in table.columns:
        raise MissingColumn(f"{path.name}: no column {schema.ecg_column!r}")
    if len(table) == 0:
        raise EmptyFile(f"{path.name}: no data rows")

    raw = table[schema.ecg_column].str.strip()
    try:
        # float() is correctly rounded, so repr-written values read back bit-for-bit
        samples = np.array([float(v) for v in raw], dtype=float)
    except ValueError as exc:
        raise NonNumericSample(f"{path.name}: {exc}") from exc
    bad = ~np.isfinite(samples)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise NonNumericSample(f"{path.name}: non-finite sample {raw.iloc[row]!r} at row {row}")

    meta: dict[str, str] = {}
    if schema.filename_pattern:
        meta = parse_filename(path.name, schema.filename_pattern)
    for key, col in (("subject", schema.subject_column), ("emotion", schema.emotion_column)):
        if col is None:
            continue
        if col not in table.columns:
            raise MissingColumn(f"{path.name}: no column {col!r}")
        meta[key] = table[col].iloc[0]
    if "subject" not in meta or "emotion" not in meta:
        raise IngestError(f"{path.name}: schema yields no subject/emotion metadata")

    return EcgRecording(
        subject_id=str(meta["subject"]),
        emotion=schema.resolve_emotion(meta["emotion"]),
        samples=samples,
        sampling_rate_hz=float(schema.sampling_rate_hz),
        source=str(path),
    )


def write_recording(recording: EcgRecording, path: str | Path, schema: IngestSchema | None = None) -> Path:
    """Export a recording so that :func:`load_recording` reproduces it exactly."""
    schema = schema or IngestSchema()
    path = Path(path)
    if path.is_dir() or not path.suffix:
        if not schema.filename_pattern:
            raise ValueError("a directory target needs a schema with filename_pattern")
        name = schema.filename_pattern.format(
            subject=recording.subject_id, emotion=recording.emotion.value
        )
        path = path / name
    columns = {schema.ecg_column: [repr(float(v)) for v in recording.samples]}
    if schema.subject_column:
        columns[schema.subject_column] = recording.subject_id
    if schema.emotion_column:
        columns[schema.emotion_column] = recording.emotion.value
    pd.DataFrame(columns).to_csv(path, sep=schema.delimiter, index=False, encoding="utf-8")
    return path


def load_directory(
    data_dir: str | Path, schema: IngestSchema | None = None, pattern: str = "*.csv"
) -> tuple[list[EcgRecording], list[tuple[str, str]]]:
    """Load every conforming file under ``data_dir``.

    Bad files are skipped and logged, as are recordings whose emotion is not
    one of the six targets. Returns ``(recordings, skipped)`` where
    ``skipped`` holds ``(file name, reason)`` pairs.
    """
    schema = schema or IngestSchema()
    recordings, skipped = [], []
    for path in sorted(Path(data_dir).glob(pattern)):
        try:
            rec = load_recording(path, schema)
        except IngestError as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            skipped.append((path.name, str(exc)))
            continue
        if rec.emotion not in TARGET_EMOTIONS:
            logger.info("dropping %s: non-target emotion", path.name)
            skipped.append((path.name, "non-target emotion"))
            continue
        recordings.append(rec)
    return recordings, skipped

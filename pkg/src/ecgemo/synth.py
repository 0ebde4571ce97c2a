"""Seeded synthetic ECG and synthetic feature tables used as test oracles.

QRS complexes are Gaussian pulses at exact RR spacing with small P/T bumps.
This is not a physiological model; it only has to give detectors and the
heart-rate features a known ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .dsp import EPOCH_SECONDS, preprocess, segment
from .features import WelchParams, extract, feature_table
from .ingest import EcgRecording, Emotion, IngestSchema, map_label, write_recording


@dataclass(frozen=True)
class SynthEcgSpec:
    heart_rate_bpm: float = 60.0
    duration_s: float = 10.0
    fs_hz: float = 1000.0
    qrs_amplitude: float = 1.0
    qrs_width_s: float = 0.020
    p_t_waves: bool = True
    noise_std: float = 0.0
    hum_50hz_amplitude: float = 0.0
    drift_amplitude: float = 0.0
    drift_freq_hz: float = 0.005
    seed: int = 0

    def __post_init__(self):
        for name in ("qrs_amplitude", "noise_std", "hum_50hz_amplitude", "drift_amplitude"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.heart_rate_bpm <= 0 or self.duration_s <= 0:
            raise ValueError("heart rate and duration must be positive")
        top = max(50.0 if self.hum_50hz_amplitude else 0.0, self.drift_freq_hz, 1 / self.qrs_width_s)
        if self.fs_hz <= 2 * top:
            raise ValueError("sampling rate too low for the requested components")

    @property
    def rr_samples(self) -> int:
        return int(round(self.fs_hz * 60.0 / self.heart_rate_bpm))


def beat_template(spec: SynthEcgSpec) -> np.ndarray:
    """One RR period of waveform with the R peak at index ``rr // 2``."""
    rr = spec.rr_samples
    centre = rr // 2
    t = (np.arange(rr) - centre) / spec.fs_hz
    # width is read as +-2 sigma
    sigma = spec.qrs_width_s / 4.0
    beat = spec.qrs_amplitude * np.exp(-0.5 * (t / sigma) ** 2)
    if spec.p_t_waves:
        period = rr / spec.fs_hz
        p_at, t_at = -0.16 * min(period, 1.0), 0.25 * min(period, 1.0)
        beat += 0.12 * spec.qrs_amplitude * np.exp(-0.5 * ((t - p_at) / 0.020) ** 2)
        beat += 0.25 * spec.qrs_amplitude * np.exp(-0.5 * ((t - t_at) / 0.040) ** 2)
    return beat


def generate(spec: SynthEcgSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(samples, true_peak_indices)``."""
    n = int(round(spec.duration_s * spec.fs_hz))
    rr = spec.rr_samples
    n_beats = -(-n // rr)
    x = np.tile(beat_template(spec), n_beats)[:n]
    peaks = np.arange(n_beats) * rr + rr // 2
    peaks = peaks[peaks < n]

    t = np.arange(n) / spec.fs_hz
    if spec.hum_50hz_amplitude:
        x = x + spec.hum_50hz_amplitude * np.sin(2 * np.pi * 50.0 * t)
    if spec.drift_amplitude:
        x = x + spec.drift_amplitude * np.sin(2 * np.pi * spec.drift_freq_hz * t)
    if spec.noise_std:
        x = x + np.random.default_rng(spec.seed).normal(0.0, spec.noise_std, n)
    return x, peaks


DEFAULT_EMOTION_BPM = {Emotion.SADNESS: 70.0, Emotion.AMUSEMENT: 80.0}


@dataclass(frozen=True)
class SynthDatasetSpec:
    n_subjects: int = 10
    emotion_bpm: tuple[tuple[Emotion, float], ...] = tuple(DEFAULT_EMOTION_BPM.items())
    epochs_per_group: int = 12
    noise_std: float = 0.05
    subject_bpm_std: float = 0.0
    subject_amplitude_std: float = 0.0
    recording_bpm_jitter: float = 0.0
    hum_50hz_amplitude: float = 0.0
    drift_amplitude: float = 0.0
    fs_hz: float = 1000.0
    epoch_seconds: float = EPOCH_SECONDS
    seed: int = 0


def synth_recordings(spec: SynthDatasetSpec) -> list[EcgRecording]:
    """One continuous recording per (subject, emotion), with seeded subject offsets.

    Each subject draws a heart-rate offset (``subject_bpm_std``) and a QRS
    amplitude factor (``subject_amplitude_std``, log-normal); these model
    between-person differences that a subject-exclusive split cannot see.
    """
    if spec.n_subjects < 1:
        raise ValueError("need at least one subject")
    emotions = [Emotion(e) for e, _ in spec.emotion_bpm]
    if len({map_label(e) for e in emotions}) < 2:
        raise ValueError("emotion_bpm must cover both labels")
    rng = np.random.default_rng(spec.seed)
    recordings = []
    for s in range(spec.n_subjects):
        offset = rng.normal(0.0, spec.subject_bpm_std) if spec.subject_bpm_std else 0.0
        amp = float(np.exp(rng.normal(0.0, spec.subject_amplitude_std))) if spec.subject_amplitude_std else 1.0
        for emotion, bpm in spec.emotion_bpm:
            jitter = rng.normal(0.0, spec.recording_bpm_jitter) if spec.recording_bpm_jitter else 0.0
            ecg = SynthEcgSpec(
                heart_rate_bpm=float(np.clip(bpm + offset + jitter, 35.0, 200.0)),
                duration_s=spec.epochs_per_group * spec.epoch_seconds,
                fs_hz=spec.fs_hz,
                qrs_amplitude=amp,
                noise_std=spec.noise_std,
                hum_50hz_amplitude=spec.hum_50hz_amplitude,
                drift_amplitude=spec.drift_amplitude,
                seed=int(rng.integers(2**31)),
            )
            samples, _ = generate(ecg)
            recordings.append(EcgRecording(f"S{s:03d}", Emotion(emotion), samples, spec.fs_hz))
    return recordings


def generate_dataset(spec: SynthDatasetSpec = SynthDatasetSpec(),
                     welch: WelchParams = WelchParams()) -> pd.DataFrame:
    """Synthetic feature table produced by the real preprocess/segment/extract path."""
    vectors = []
    for rec in synth_recordings(spec):
        clean = preprocess(rec)
        for epoch in segment(clean, rec.sampling_rate_hz, spec.epoch_seconds, rec.subject_id, rec.emotion):
            vectors.append(extract(epoch, welch))
    return feature_table(vectors)


def write_dataset_csvs(spec: SynthDatasetSpec, out_dir: str | Path,
                       schema: IngestSchema | None = None) -> list[Path]:
    """Emit one CSV per synthetic recording in the ingest schema layout."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [write_recording(rec, out, schema) for rec in synth_recordings(spec)]

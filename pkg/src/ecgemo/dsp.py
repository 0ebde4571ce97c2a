"""ECG conditioning and epoching.

All filters run causally (single forward pass, zero initial state) in double
precision as cascaded second-order sections. Startup transients are left in
place; callers that need steady state discard them explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import signal as sps

from .errors import InvalidFrequency, UnstableFilter
from .ingest import EcgRecording, Emotion, map_label

NOTCH_HZ = 50.0
NOTCH_Q = 30.0
HIGHPASS_HZ = 0.01
HIGHPASS_ORDER = 4
LOWPASS_HZ = 40.0
LOWPASS_ORDER = 3
BASELINE_HZ = 0.05
BASELINE_ORDER = 2
EPOCH_SECONDS = 10.0


@dataclass(frozen=True)
class FilterSpec:
    kind: str  # "notch" | "butterworth_highpass" | "butterworth_lowpass"
    cutoff_hz: float
    order: int = 2
    quality_factor: float = NOTCH_Q

    def validate(self, fs: float) -> None:
        if self.kind not in ("notch", "butterworth_highpass", "butterworth_lowpass"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not 0 < self.cutoff_hz < fs / 2:
            raise InvalidFrequency(
                f"cutoff {self.cutoff_hz} Hz must lie strictly inside (0, {fs / 2}) Hz"
            )
        if self.kind == "notch":
            if not self.quality_factor > 0:
                raise ValueError("quality_factor must be positive")
        elif int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be a positive integer")


def design_sos(spec: FilterSpec, fs: float) -> np.ndarray:
    """Second-order-section coefficients for ``spec`` at sampling rate ``fs``.

    Butterworth designs use the analog prototype mapped through the bilinear
    transform with the cutoff pre-warped; the notch is the standard biquad
    with bandwidth ``f0 / Q``.
    """
    spec.validate(fs)
    if spec.kind == "notch":
        b, a = sps.iirnotch(spec.cutoff_hz, spec.quality_factor, fs=fs)
        sos = sps.tf2sos(b, a)
    else:
        btype = "highpass" if spec.kind == "butterworth_highpass" else "lowpass"
        sos = sps.butter(int(spec.order), spec.cutoff_hz, btype=btype, fs=fs, output="sos")
    poles = np.concatenate([np.roots(section[3:]) for section in sos])
    if poles.size and np.max(np.abs(poles)) >= 1.0:
        raise UnstableFilter(f"{spec.kind} at {spec.cutoff_hz} Hz has a pole with |p| >= 1")
    return sos


def apply_filter(signal: Sequence[float], fs: float, spec: FilterSpec) -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    return sps.sosfilt(design_sos(spec, fs), x)


def notch_filter(signal, fs: float, f0: float = NOTCH_HZ, q: float = NOTCH_Q) -> np.ndarray:
    return apply_filter(signal, fs, FilterSpec("notch", f0, quality_factor=q))


def butterworth_filter(signal, fs: float, spec: FilterSpec) -> np.ndarray:
    if spec.kind == "notch":
        raise ValueError("use notch_filter for notch specs")
    return apply_filter(signal, fs, spec)


def highpass(signal, fs: float, cutoff: float = HIGHPASS_HZ, order: int = HIGHPASS_ORDER) -> np.ndarray:
    return butterworth_filter(signal, fs, FilterSpec("butterworth_highpass", cutoff, order))


def lowpass(signal, fs: float, cutoff: float = LOWPASS_HZ, order: int = LOWPASS_ORDER) -> np.ndarray:
    return butterworth_filter(signal, fs, FilterSpec("butterworth_lowpass", cutoff, order))


def baseline_correct(signal, fs: float, cutoff: float = BASELINE_HZ, order: int = BASELINE_ORDER) -> np.ndarray:
    """Subtract the slow (``cutoff`` Hz low-passed) component from ``signal``."""
    x = np.asarray(signal, dtype=float)
    if x.size == 0:
        raise ValueError("empty signal")
    return x - lowpass(x, fs, cutoff, order)


Stage = Callable[[np.ndarray, float], np.ndarray]

DEFAULT_STAGES: tuple[Stage, ...] = (
    lambda x, fs: notch_filter(x, fs, NOTCH_HZ, NOTCH_Q),
    lambda x, fs: highpass(x, fs, HIGHPASS_HZ, HIGHPASS_ORDER),
    lambda x, fs: lowpass(x, fs, LOWPASS_HZ, LOWPASS_ORDER),
    lambda x, fs: baseline_correct(x, fs, BASELINE_HZ, BASELINE_ORDER),
)


def preprocess(recording, fs: float | None = None, stages: Sequence[Stage] = DEFAULT_STAGES) -> np.ndarray:
    """Notch 50 Hz -> high-pass 0.01 Hz -> low-pass 40 Hz -> baseline correction.

    Accepts an :class:`EcgRecording` or a raw sample array plus ``fs``.
    """
    if isinstance(recording, EcgRecording):
        x, fs = recording.samples, recording.sampling_rate_hz
    else:
        if fs is None:
            raise ValueError("fs is required for raw sample input")
        x = recording
    y = np.array(x, dtype=float)
    for stage in stages:
        y = stage(y, fs)
    return y


@dataclass(frozen=True)
class EcgEpoch:
    samples: np.ndarray
    sampling_rate_hz: float
    subject_id: str = ""
    emotion: Emotion = Emotion.OTHER
    label: int | None = None
    epoch_index: int = 0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if not np.all(np.isfinite(samples)):
            raise ValueError("epoch contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


def epoch_length(fs: float, epoch_seconds: float = EPOCH_SECONDS) -> int:
    return int(round(epoch_seconds * fs))


def segment(
    signal,
    fs: float,
    epoch_seconds: float = EPOCH_SECONDS,
    subject_id: str = "",
    emotion=Emotion.OTHER,
) -> list[EcgEpoch]:
    """Cut ``signal`` into non-overlapping epochs; the trailing remainder is dropped."""
    if not fs > 0 or not epoch_seconds > 0:
        raise ValueError("fs and epoch_seconds must be positive")
    x = np.asarray(signal, dtype=float)
    n = epoch_length(fs, epoch_seconds)
    emotion = Emotion(emotion) if not isinstance(emotion, Emotion) else emotion
    label = map_label(emotion) if emotion is not Emotion.OTHER else None
    return [
        EcgEpoch(x[i * n:(i + 1) * n], fs, subject_id, emotion, label, i)
        for i in range(len(x) // n)
    ]


def recording_epochs(recording: EcgRecording, epoch_seconds: float = EPOCH_SECONDS) -> list[EcgEpoch]:
    """Preprocess a recording and segment it."""
    clean = preprocess(recording)
    return segment(
        clean, recording.sampling_rate_hz, epoch_seconds, recording.subject_id, recording.emotion
    )

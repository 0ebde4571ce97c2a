"""Per-epoch multidomain features: 11 time-domain, 6 spectral, 5 RR-interval.

Feature order is frozen in :data:`FEATURE_NAMES`; selection indices refer to it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import signal as sps

from .dsp import EcgEpoch
from .errors import BandOutsideGrid, DegenerateEpochWarning, SegmentTooLong

TIME_FEATURES = (
    "mean", "std", "min", "max", "q1", "q3", "median",
    "skewness", "kurtosis", "abs_sum", "energy",
)
FREQ_FEATURES = ("psd_mean", "psd_std", "psd_max", "total_power", "lf_power", "hf_power")
HRV_FEATURES = ("rr_mean", "rr_std", "heart_rate", "rr_min", "rr_max")
FEATURE_NAMES: tuple[str, ...] = TIME_FEATURES + FREQ_FEATURES + HRV_FEATURES
N_FEATURES = len(FEATURE_NAMES)
META_COLUMNS = ("subject_id", "emotion", "label", "epoch_index")

LF_BAND = (0.03, 0.15)
HF_BAND = (0.15, 0.4)


def time_features(epoch) -> np.ndarray:
    x = _samples(epoch)
    if x.size < 2:
        raise ValueError("need at least two samples")
    n = x.size
    mu = x.sum() / n
    dev = x - mu
    sigma = np.sqrt(np.dot(dev, dev) / n)
    if sigma > 0:
        z = dev / sigma
        skew = np.sum(z**3) / n
        kurt = np.sum(z**4) / n
    else:
        warnings.warn("zero-variance epoch", DegenerateEpochWarning, stacklevel=2)
        skew = kurt = 0.0
    q1, median, q3 = np.percentile(x, [25, 50, 75])
    return np.array(
        [mu, sigma, x.min(), x.max(), q1, q3, median, skew, kurt, np.abs(x).sum(), np.dot(x, x)]
    )


@dataclass(frozen=True)
class WelchParams:
    window: str = "hann"
    max_segment_length: int = 4096
    overlap: float = 0.5
    detrend: str = "constant"

    def segment_length(self, n: int) -> int:
        return min(n, self.max_segment_length)


@dataclass(frozen=True)
class PsdEstimate:
    frequencies: np.ndarray
    power: np.ndarray


def welch_psd(epoch, params: WelchParams = WelchParams(), fs: float | None = None,
              segment_length: int | None = None) -> PsdEstimate:
    """One-sided Welch PSD (density scaling, so ``sum(P) * df`` ~ signal power)."""
    x = _samples(epoch)
    fs = _fs(epoch, fs)
    nperseg = segment_length if segment_length is not None else params.segment_length(x.size)
    if nperseg > x.size:
        raise SegmentTooLong(f"segment length {nperseg} exceeds epoch length {x.size}")
    freqs, power = sps.welch(
        x,
        fs=fs,
        window=params.window,
        nperseg=nperseg,
        noverlap=int(nperseg * params.overlap),
        detrend=params.detrend,
        scaling="density",
        return_onesided=True,
    )
    return PsdEstimate(freqs, np.maximum(power, 0.0))


def band_power(psd: PsdEstimate, lo: float, hi: float) -> float:
    """Trapezoidal integral of the PSD over ``[lo, hi]`` with interpolated endpoints."""
    f, p = psd.frequencies, psd.power
    if lo < f[0] or hi > f[-1] or lo >= hi:
        raise BandOutsideGrid(f"band [{lo}, {hi}] Hz outside grid [{f[0]}, {f[-1]}] Hz")
    inner = (f > lo) & (f < hi)
    ff = np.concatenate([[lo], f[inner], [hi]])
    pp = np.concatenate([[np.interp(lo, f, p)], p[inner], [np.interp(hi, f, p)]])
    return float(np.trapezoid(pp, ff))


def freq_features(psd: PsdEstimate) -> np.ndarray:
    p = psd.power
    total = float(np.trapezoid(p, psd.frequencies))
    return np.array(
        [p.mean(), p.std(), p.max(), total, band_power(psd, *LF_BAND), band_power(psd, *HF_BAND)]
    )


@dataclass(frozen=True)
class RrSeries:
    peak_indices: np.ndarray
    rr_intervals: np.ndarray = field(init=False)
    fs: float = 1000.0

    def __post_init__(self):
        peaks = np.asarray(self.peak_indices, dtype=int)
        object.__setattr__(self, "peak_indices", peaks)
        object.__setattr__(self, "rr_intervals", np.diff(peaks) / self.fs)


def detect_r_peaks(epoch, fs: float | None = None, smoothing_s: float = 0.150,
                   refractory_s: float = 0.200, threshold_ratio: float = 0.5,
                   threshold_percentile: float = 98.0) -> RrSeries:
    """Adaptive-threshold R-peak detector.

    The squared first difference is smoothed with a centred moving average;
    samples above ``threshold_ratio`` times its ``threshold_percentile``
    percentile form candidate QRS regions, and the peak of each region is the
    sample of largest absolute deviation from the epoch median. Both the
    threshold and the peak choice are relative, so the result does not depend
    on signal scale.
    """
    x = _samples(epoch)
    fs = _fs(epoch, fs)
    if x.size < 3:
        return RrSeries(np.empty(0, dtype=int), fs)
    energy = np.diff(x, prepend=x[0]) ** 2
    width = max(1, int(round(smoothing_s * fs)))
    smooth = np.convolve(energy, np.ones(width) / width, mode="same")
    threshold = threshold_ratio * np.percentile(smooth, threshold_percentile)
    above = smooth > threshold
    if threshold <= 0 or not above.any():
        return RrSeries(np.empty(0, dtype=int), fs)

    edges = np.diff(above.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    stops = np.flatnonzero(edges == -1) + 1
    if above[0]:
        starts = np.r_[0, starts]
    if above[-1]:
        stops = np.r_[stops, x.size]

    amplitude = np.abs(x - np.median(x))
    refractory = int(round(refractory_s * fs))
    candidates = [a + int(np.argmax(amplitude[a:b])) for a, b in zip(starts, stops)]
    # strongest candidates claim their refractory neighbourhood first
    accepted: list[int] = []
    for idx in sorted(candidates, key=lambda i: (-amplitude[i], i)):
        if all(abs(idx - p) >= refractory for p in accepted):
            accepted.append(idx)
    return RrSeries(np.array(sorted(accepted), dtype=int), fs)


def hrv_features(rr: RrSeries | np.ndarray) -> np.ndarray:
    """RR mean, RR std, heart rate, RR min, RR max; all zero when no interval exists."""
    intervals = rr.rr_intervals if isinstance(rr, RrSeries) else np.asarray(rr, dtype=float)
    if intervals.size == 0:
        return np.zeros(len(HRV_FEATURES))
    mean = intervals.mean()
    return np.array([mean, intervals.std(), 60.0 / mean, intervals.min(), intervals.max()])


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    label: int | None
    subject_id: str
    emotion: str
    epoch_index: int

    def as_dict(self) -> dict:
        row = dict(zip(FEATURE_NAMES, self.values.tolist()))
        row.update(subject_id=self.subject_id, emotion=self.emotion,
                   label=self.label, epoch_index=self.epoch_index)
        return row


def extract(epoch: EcgEpoch, params: WelchParams = WelchParams()) -> FeatureVector:
    values = np.concatenate([
        time_features(epoch),
        freq_features(welch_psd(epoch, params)),
        hrv_features(detect_r_peaks(epoch)),
    ])
    emotion = getattr(epoch.emotion, "value", epoch.emotion)
    return FeatureVector(values, epoch.label, epoch.subject_id, emotion, epoch.epoch_index)


def feature_table(vectors) -> pd.DataFrame:
    """Stack feature vectors into the canonical table (features then metadata)."""
    rows = [v.as_dict() for v in vectors]
    table = pd.DataFrame(rows, columns=list(FEATURE_NAMES) + list(META_COLUMNS))
    if len(table):
        table["label"] = table["label"].astype(int)
        table["epoch_index"] = table["epoch_index"].astype(int)
        table["subject_id"] = table["subject_id"].astype(str)
    return table


def write_feature_csv(table: pd.DataFrame, path) -> None:
    table.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def read_feature_csv(path) -> pd.DataFrame:
    table = pd.read_csv(path, dtype={"subject_id": str, "emotion": str},
                        float_precision="round_trip")
    missing = [c for c in (*FEATURE_NAMES, *META_COLUMNS) if c not in table.columns]
    if missing:
        raise ValueError(f"feature table is missing columns: {missing}")
    return table


def _samples(epoch) -> np.ndarray:
    return np.asarray(getattr(epoch, "samples", epoch), dtype=float)


def _fs(epoch, fs):
    if fs is not None:
        return float(fs)
    if hasattr(epoch, "sampling_rate_hz"):
        return float(epoch.sampling_rate_hz)
    raise ValueError("fs is required for raw sample input")

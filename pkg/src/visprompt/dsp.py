"""Signal-processing backends for the visualization catalog.

Spectral analysis (STFT/PSD), zero-phase band cleaning, peak detection for
ECG/PPG/EOG, beat aggregation, EDA tonic/phasic decomposition, and EMG
activation segmentation. Everything is a pure function of its arguments.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps
from scipy.ndimage import median_filter, uniform_filter1d

from .errors import BadBand, BadParams, SignalTooShort, TooFewPeaks

# Cleaning bands applied before each physiological plot. Not dataset facts:
# ordinary defaults, overridable by callers. EMG's upper edge is clipped to
# stay below Nyquist at low sampling rates.
MODALITY_BANDS: dict[str, tuple[float, float]] = {
    "ecg": (0.5, 40.0),
    "ppg": (0.5, 8.0),
    "eda": (0.0, 3.0),
    "emg": (20.0, 450.0),
    "eog": (0.1, 10.0),
    "respiration": (0.05, 2.0),
}


def modality_band(modality, fs: float) -> tuple[float, float]:
    key = getattr(modality, "value", modality)
    low, high = MODALITY_BANDS.get(key, (0.0, 0.45 * fs))
    return low, min(high, 0.45 * fs)


class PeakKind(str, enum.Enum):
    R_PEAK = "r_peak"
    SYSTOLIC = "systolic"
    SCR_ONSET = "scr_onset"
    SCR_PEAK = "scr_peak"
    BLINK = "blink"
    GENERIC = "generic"


@dataclass(frozen=True)
class SpectrogramParams:
    nfft: int
    nperseg: int
    noverlap: int
    mode: str = "psd"

    _MODES = ("psd", "complex", "magnitude", "angle", "phase")

    def __post_init__(self):
        if self.mode not in self._MODES:
            raise BadParams(f"mode must be one of {self._MODES}, got {self.mode!r}")
        if not (0 <= self.noverlap < self.nperseg <= self.nfft):
            raise BadParams(
                f"need noverlap < nperseg <= nfft, got "
                f"noverlap={self.noverlap} nperseg={self.nperseg} nfft={self.nfft}"
            )


@dataclass(frozen=True)
class SpectrogramMatrix:
    values: np.ndarray  # (freq_bins, time_frames); complex only for mode="complex"
    freqs_hz: np.ndarray
    times_s: np.ndarray
    mode: str


@dataclass(frozen=True)
class PeakSet:
    indices: np.ndarray
    kind: PeakKind

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValueError("peak indices must be strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class BeatEnsemble:
    beats: np.ndarray  # (n_beats, beat_len)
    mean_beat: np.ndarray
    r_offset: int  # index of the anchoring peak within each beat
    landmarks: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class ScrEvent:
    onset: int
    peak: int
    half_recovery: int | None


@dataclass(frozen=True)
class EdaDecomposition:
    tonic: np.ndarray
    phasic: np.ndarray
    scr_events: tuple[ScrEvent, ...]


@dataclass(frozen=True)
class ActivationSegments:
    segments: tuple[tuple[int, int], ...]
    threshold_used: float


def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _frames(x: np.ndarray, nperseg: int, step: int) -> np.ndarray:
    n_frames = 1 + (len(x) - nperseg) // step
    idx = np.arange(nperseg)[None, :] + step * np.arange(n_frames)[:, None]
    return x[idx]


def _psd_scale(spec: np.ndarray, fs: float, nperseg: int, nfft: int) -> np.ndarray:
    # One-sided density scaled so that sum(psd) * (fs/nfft) recovers the
    # mean square of the windowed segment (checked by the Parseval test).
    p = (np.abs(spec) ** 2) / (fs * nperseg)
    p[..., 1:] *= 2.0
    if nfft % 2 == 0:
        p[..., -1] /= 2.0
    return p


def spectrogram(signal, fs: float, params: SpectrogramParams) -> SpectrogramMatrix:
    """Hann-windowed one-sided STFT of a real signal.

    Frame count is 1 + floor((len - nperseg) / (nperseg - noverlap)); times
    are frame centers. ``mode`` selects psd / complex / magnitude / angle /
    phase (phase unwrapped along time).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise BadParams("spectrogram expects a single channel")
    if len(x) < params.nperseg:
        raise SignalTooShort(f"need at least nperseg={params.nperseg} samples, got {len(x)}")
    step = params.nperseg - params.noverlap
    frames = _frames(x, params.nperseg, step) * _hann_periodic(params.nperseg)
    spec = np.fft.rfft(frames, n=params.nfft, axis=1)
    if params.mode == "complex":
        values = spec.T
    elif params.mode == "magnitude":
        values = np.abs(spec).T
    elif params.mode == "angle":
        values = np.angle(spec).T
    elif params.mode == "phase":
        values = np.unwrap(np.angle(spec), axis=0).T
    else:
        values = _psd_scale(spec, fs, params.nperseg, params.nfft).T
    freqs = np.fft.rfftfreq(params.nfft, 1.0 / fs)
    times = (params.nperseg / 2.0 + step * np.arange(frames.shape[0])) / fs
    return SpectrogramMatrix(values=values, freqs_hz=freqs, times_s=times, mode=params.mode)


def power_spectral_density(signal, fs: float, nperseg: int | None = None):
    """Welch-style PSD: averaged Hann periodograms of 50%-overlapped segments.

    Each segment is mean-removed before windowing and the removed DC power is
    re-injected into bin 0, so constant offsets show up at 0 Hz instead of
    leaking into neighbouring bins.

    Returns (freqs_hz, psd).
    """
    x = np.asarray(signal, dtype=np.float64)
    if len(x) < 8:
        raise SignalTooShort(f"need at least 8 samples, got {len(x)}")
    if nperseg is None:
        nperseg = min(256, len(x))
    nperseg = min(nperseg, len(x))
    step = max(1, nperseg - nperseg // 2)
    frames = _frames(x, nperseg, step)
    means = frames.mean(axis=1, keepdims=True)
    window = _hann_periodic(nperseg)
    spec = np.fft.rfft((frames - means) * window, n=nperseg, axis=1)
    psd = _psd_scale(spec, fs, nperseg, nperseg).mean(axis=0)
    df = fs / nperseg
    psd[0] += float(np.mean(means**2)) / df
    freqs = np.fft.rfftfreq(nperseg, 1.0 / fs)
    return freqs, psd


def bandpass_clean(signal, fs: float, low_hz: float, high_hz: float) -> np.ndarray:
    """Zero-phase Butterworth band cleaning (lowpass when low_hz == 0).

    Forward-backward filtering keeps features aligned with the raw signal;
    output length equals input length.
    """
    if not (0 <= low_hz < high_hz < fs / 2):
        raise BadBand(f"need 0 <= low < high < fs/2, got [{low_hz}, {high_hz}] at fs={fs}")
    x = np.asarray(signal, dtype=np.float64)
    if low_hz == 0:
        b, a = sps.butter(4, high_hz, btype="lowpass", fs=fs)
    else:
        b, a = sps.butter(4, [low_hz, high_hz], btype="bandpass", fs=fs)
    padlen = min(3 * (max(len(a), len(b)) - 1), len(x) - 1)
    if padlen < 1:
        return x.copy()
    return sps.filtfilt(b, a, x, padlen=padlen)


# Peak-detection presets: (min inter-peak distance s, assigned kind).
_PEAK_PRESETS = {
    "ecg_r": (0.2, PeakKind.R_PEAK),
    "ppg_systolic": (0.3, PeakKind.SYSTOLIC),
    "eog_blink": (0.25, PeakKind.BLINK),
    "generic": (0.2, PeakKind.GENERIC),
}


def detect_peaks(signal, fs: float, preset: str = "generic") -> PeakSet:
    """Locate physiological peaks with a per-preset strategy.

    ``ecg_r`` runs a derivative-energy detector (bandpass 5-15 Hz, square,
    moving integration, adaptive threshold, 200 ms refractory). The other
    presets use smoothed prominence-based local maxima with a
    modality-specific minimum spacing.
    """
    if preset not in _PEAK_PRESETS:
        raise ValueError(f"unknown preset {preset!r}")
    x = np.asarray(signal, dtype=np.float64)
    min_dist_s, kind = _PEAK_PRESETS[preset]
    if len(x) < max(8, int(round(2 * fs * min_dist_s))):
        raise SignalTooShort(f"{len(x)} samples is too short for preset {preset}")
    if preset == "ecg_r":
        indices = _detect_r_peaks(x, fs)
    else:
        indices = _detect_prominent_maxima(x, fs, min_dist_s)
    return PeakSet(indices=indices, kind=kind)


def _detect_r_peaks(x: np.ndarray, fs: float) -> np.ndarray:
    high = min(15.0, 0.45 * fs)
    low = min(5.0, high / 2)
    band = bandpass_clean(x, fs, low, high)
    energy = np.gradient(band) ** 2
    integ = uniform_filter1d(energy, size=max(1, int(round(0.15 * fs))), mode="nearest")
    refractory = max(1, int(round(0.2 * fs)))
    cand, _ = sps.find_peaks(integ, distance=refractory)
    if cand.size == 0:
        return np.empty(0, dtype=np.int64)

    # Adaptive signal/noise threshold in the classic running-estimate form.
    head = integ[: max(1, int(round(2 * fs)))]
    spk = float(head.max()) / 3.0
    npk = float(head.mean()) / 2.0
    accepted = []
    for c in cand:
        thr = npk + 0.25 * (spk - npk)
        if integ[c] >= thr:
            accepted.append(c)
            spk = 0.125 * integ[c] + 0.875 * spk
        else:
            npk = 0.125 * integ[c] + 0.875 * npk
    if not accepted:
        return np.empty(0, dtype=np.int64)

    # Refine to the bandpassed maximum near each acceptance (zero-phase
    # filtering keeps the QRS apex aligned with the raw R sample).
    half = max(1, int(round(0.1 * fs)))
    refined = []
    for c in accepted:
        lo, hi = max(0, c - half), min(len(x), c + half + 1)
        refined.append(lo + int(np.argmax(band[lo:hi])))
    refined = sorted(set(refined))

    # Re-enforce the refractory after refinement, keeping the larger apex.
    out: list[int] = []
    for r in refined:
        if out and r - out[-1] < refractory:
            if band[r] > band[out[-1]]:
                out[-1] = r
        else:
            out.append(r)
    return np.asarray(out, dtype=np.int64)


def _detect_prominent_maxima(x: np.ndarray, fs: float, min_dist_s: float) -> np.ndarray:
    smooth = uniform_filter1d(x, size=max(1, int(round(0.05 * fs))), mode="nearest")
    span = float(np.percentile(smooth, 98) - np.percentile(smooth, 2))
    if span <= 0:
        return np.empty(0, dtype=np.int64)
    peaks, _ = sps.find_peaks(
        smooth,
        prominence=0.25 * span,
        distance=max(1, int(round(min_dist_s * fs))),
    )
    # Snap each smoothed peak to the local maximum of the raw signal.
    half = max(1, int(round(0.05 * fs)))
    snapped = []
    for p in peaks:
        lo, hi = max(0, p - half), min(len(x), p + half + 1)
        snapped.append(lo + int(np.argmax(x[lo:hi])))
    return np.asarray(sorted(set(snapped)), dtype=np.int64)


def rate_series(peaks: PeakSet, fs: float, n_samples: int):
    """Instantaneous event rate (per minute) interpolated to every sample.

    Returns (per-sample rates, mean of the per-interval instantaneous rates).
    """
    idx = peaks.indices
    if len(idx) < 2:
        raise TooFewPeaks(f"need >= 2 peaks, got {len(idx)}")
    ibis = np.diff(idx) / fs
    inst = 60.0 / ibis
    mids = (idx[:-1] + idx[1:]) / 2.0
    rates = np.interp(np.arange(n_samples, dtype=np.float64), mids, inst)
    return rates, float(np.mean(inst))


def segment_beats(
    signal,
    peaks: PeakSet,
    fs: float,
    pre_s: float = 0.25,
    post_s: float = 0.45,
    with_landmarks: bool = True,
) -> BeatEnsemble:
    """Extract per-peak segments and their elementwise mean.

    Beats clipped by the signal edges are dropped. Landmark search windows
    (classic resting-ECG offsets around the anchoring peak) are applied to
    the mean beat; a landmark is omitted when its window does not fit.
    """
    x = np.asarray(signal, dtype=np.float64)
    if len(peaks) < 2:
        raise TooFewPeaks(f"need >= 2 peaks, got {len(peaks)}")
    pre = int(round(pre_s * fs))
    post = int(round(post_s * fs))
    rows = [x[r - pre : r + post] for r in peaks.indices if r - pre >= 0 and r + post <= len(x)]
    if not rows:
        raise TooFewPeaks("all beats clipped by the signal edges")
    beats = np.vstack(rows)
    mean_beat = beats.mean(axis=0)

    landmarks: dict[str, int] = {}
    if with_landmarks:
        windows = {
            "Q": (pre - int(round(0.08 * fs)), pre + 1, np.argmin),
            "S": (pre, pre + int(round(0.08 * fs)) + 1, np.argmin),
            "P": (pre - int(round(0.25 * fs)), pre - int(round(0.08 * fs)) + 1, np.argmax),
            "T": (pre + int(round(0.12 * fs)), pre + int(round(0.40 * fs)) + 1, np.argmax),
        }
        for name, (lo, hi, pick) in windows.items():
            if 0 <= lo < hi <= len(mean_beat):
                landmarks[name] = lo + int(pick(mean_beat[lo:hi]))
    return BeatEnsemble(beats=beats, mean_beat=mean_beat, r_offset=pre, landmarks=landmarks)


def eda_decompose(
    signal,
    fs: float,
    smooth_s: float = 4.0,
    scr_prominence: float = 0.01,
) -> EdaDecomposition:
    """Split electrodermal activity into tonic level and phasic responses.

    Tonic is a moving median then moving mean (both ``smooth_s`` wide);
    phasic is the residual, so tonic + phasic reproduces the input exactly.
    Each phasic peak above ``scr_prominence`` becomes an event with its
    preceding zero-up-crossing onset and, when reached, the first index
    after the peak at which the response decays to half its rise amplitude.
    """
    x = np.asarray(signal, dtype=np.float64)
    if fs < 1 or len(x) < 4 * fs:
        raise SignalTooShort(f"need >= {int(4 * fs)} samples at fs={fs}, got {len(x)}")
    win = max(1, int(round(smooth_s * fs)))
    tonic = median_filter(x, size=win, mode="nearest")
    tonic = uniform_filter1d(tonic, size=win, mode="nearest")
    phasic = x - tonic

    peaks, _ = sps.find_peaks(phasic, prominence=scr_prominence)
    events = []
    for p in peaks:
        rising = np.nonzero((phasic[:p] <= 0) & (np.roll(phasic, -1)[:p] > 0))[0]
        if rising.size == 0:
            continue
        onset = int(rising[-1])
        half_level = phasic[onset] + 0.5 * (phasic[p] - phasic[onset])
        after = np.nonzero(phasic[p + 1 :] <= half_level)[0]
        half_recovery = int(p + 1 + after[0]) if after.size else None
        events.append(ScrEvent(onset=onset, peak=int(p), half_recovery=half_recovery))
    return EdaDecomposition(tonic=tonic, phasic=phasic, scr_events=tuple(events))


def emg_activation(
    signal,
    fs: float,
    rms_window_s: float = 0.025,
    k_std: float = 1.0,
    min_segment_s: float = 0.02,
    merge_gap_s: float = 0.02,
) -> ActivationSegments:
    """Find muscle-activation intervals from a moving-RMS envelope.

    Threshold is mean + k_std * std of the envelope over the whole window;
    sub-20 ms segments are discarded and near-adjacent segments merged.
    """
    x = np.asarray(signal, dtype=np.float64)
    if len(x) < fs * 0.05:
        raise SignalTooShort(f"need >= {fs * 0.05:.0f} samples, got {len(x)}")
    env = np.sqrt(uniform_filter1d(x**2, size=max(1, int(round(rms_window_s * fs))), mode="nearest"))
    theta = float(env.mean() + k_std * env.std())
    mask = env > theta

    segments: list[tuple[int, int]] = []
    start = None
    for i, on in enumerate(mask):
        if on and start is None:
            start = i
        elif not on and start is not None:
            segments.append((start, i))
            start = None
    if start is not None:
        segments.append((start, len(mask)))

    min_len = int(round(min_segment_s * fs))
    segments = [(a, b) for a, b in segments if b - a >= min_len]

    merged: list[tuple[int, int]] = []
    gap = int(round(merge_gap_s * fs))
    for a, b in segments:
        if merged and a - merged[-1][1] < gap:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return ActivationSegments(segments=tuple(merged), threshold_used=theta)

"""Seeded synthetic signal generators.

Stand-ins for the licensed benchmark datasets: label-parameterized waveform
families per modality, the sine/sawtooth generators for the motivation
study, and ground-truth-bearing physiological generators used by the DSP
test oracles. Everything is reproducible from explicit seeds.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from ..errors import SignalTooShort
from ..signal_core import Modality, TimeSeries, Window
from .registry import DatasetConfig


@dataclass(frozen=True)
class WaveTask:
    kind: str  # "sine" | "sawtooth"
    length: int
    frequency_cycles: float
    amplitude: float = 1.0
    phase: float = 0.0
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sine", "sawtooth"):
            raise ValueError("kind must be sine or sawtooth")
        if self.length < 8:
            raise ValueError("length must be >= 8")
        if self.frequency_cycles <= 0:
            raise ValueError("frequency_cycles must be positive")


def gen_wave(task: WaveTask) -> np.ndarray:
    """A·sin(theta) or A·saw(theta) with theta = 2*pi*f*t/L + phase.

    saw rises linearly from -1 to 1 over each cycle then wraps.
    """
    t = np.arange(task.length, dtype=np.float64)
    theta = 2.0 * np.pi * task.frequency_cycles * t / task.length + task.phase
    if task.kind == "sine":
        clean = task.amplitude * np.sin(theta)
    else:
        frac = (theta / (2.0 * np.pi)) % 1.0
        clean = task.amplitude * (2.0 * frac - 1.0)
    noise = np.random.default_rng(task.seed).normal(0.0, task.noise_std, task.length)
    return clean + noise


def oracle_mean(seq) -> float:
    """Exactly rounded arithmetic mean (ground truth for mean prediction)."""
    x = np.asarray(seq, dtype=np.float64)
    if len(x) < 8:
        raise SignalTooShort(f"need >= 8 samples, got {len(x)}")
    return math.fsum(x.tolist()) / len(x)


def oracle_wave_kind(seq, threshold: float = 0.15) -> str:
    """Classify sine vs sawtooth from the second-harmonic power ratio.

    A sawtooth carries 1/n-amplitude harmonics (power ratio h2/h1 = 0.25);
    a sine has none. Estimated on a Hann-windowed zero-padded spectrum with
    the harmonic located by a neighbourhood max around twice the fundamental.
    """
    x = np.asarray(seq, dtype=np.float64)
    if len(x) < 8:
        raise SignalTooShort(f"need >= 8 samples, got {len(x)}")
    n = len(x)
    pad = 8
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    power = np.abs(np.fft.rfft((x - x.mean()) * window, n=pad * n)) ** 2
    k_min = pad // 2 + 1
    k1 = k_min + int(np.argmax(power[k_min:]))
    delta = 2 * pad
    p1 = float(power[max(0, k1 - delta) : k1 + delta + 1].max())
    k2 = 2 * k1
    lo, hi = k2 - delta, min(k2 + delta + 1, len(power))
    if p1 <= 0 or lo >= len(power):
        return "sine"
    p2 = float(power[max(0, lo) : hi].max())
    return "sawtooth" if p2 / p1 > threshold else "sine"


# ---------------------------------------------------------------------------
# physiological generators with ground truth
# ---------------------------------------------------------------------------


def synth_ecg(
    fs: float,
    duration_s: float,
    bpm: float,
    rng: np.random.Generator,
    qrs_width_s: float = 0.02,
    r_amp: float = 1.0,
    q_amp: float = -0.15,
    s_amp: float = -0.2,
    p_amp: float = 0.15,
    t_amp: float = 0.3,
    st_offset: float = 0.0,
    noise_std: float = 0.03,
    wander_amp: float = 0.1,
):
    """Synthetic single-lead ECG; returns (signal, true R-peak indices)."""
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    x = np.zeros(n)
    period = 60.0 / bpm
    centers = []
    c = 0.35 * period + rng.uniform(0.0, 0.2 * period)
    while c < duration_s - 0.05:
        centers.append(c)
        c += period

    def bump(center_s: float, amp: float, width_s: float) -> None:
        x[:] += amp * np.exp(-0.5 * ((t - center_s) / width_s) ** 2)

    r_indices = []
    for c in centers:
        bump(c, r_amp, qrs_width_s)
        bump(c - 0.045, q_amp, 0.012)
        bump(c + 0.045, s_amp, 0.014)
        bump(c - 0.18, p_amp, 0.03)
        bump(c + 0.25, t_amp, 0.06)
        if st_offset:
            seg = (t > c + 0.06) & (t < c + 0.18)
            x[seg] += st_offset
        r_indices.append(int(round(c * fs)))
    x += wander_amp * np.sin(2.0 * np.pi * 0.3 * t + rng.uniform(0, 2 * np.pi))
    x += rng.normal(0.0, noise_std, n)
    return x, np.asarray(r_indices, dtype=np.int64)


def synth_ppg(fs: float, duration_s: float, bpm: float, rng: np.random.Generator):
    """Synthetic PPG pulse train; returns (signal, systolic peak indices)."""
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    x = np.zeros(n)
    period = 60.0 / bpm
    centers = []
    c = 0.4 * period
    while c < duration_s - 0.3:
        centers.append(c)
        c += period
    for c in centers:
        x += 1.0 * np.exp(-0.5 * ((t - c) / 0.06) ** 2)
        x += 0.35 * np.exp(-0.5 * ((t - (c + 0.25)) / 0.07) ** 2)
    x += rng.normal(0.0, 0.02, n)
    return x, np.asarray([int(round(c * fs)) for c in centers], dtype=np.int64)


def synth_eda(
    fs: float,
    duration_s: float,
    rng: np.random.Generator,
    n_scrs: int = 2,
    scr_amp: float = 0.5,
):
    """Synthetic EDA: slow drift plus Gaussian SCR bumps; returns (signal, bump centers)."""
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    x = 2.0 + 0.3 * t / duration_s + 0.2 * np.sin(2 * np.pi * t / (2 * duration_s))
    centers = np.linspace(0.25 * duration_s, 0.75 * duration_s, max(n_scrs, 1))
    for c in centers[:n_scrs]:
        x += scr_amp * np.exp(-0.5 * ((t - c) / 0.8) ** 2)
    x += rng.normal(0.0, 0.003, n)
    return x, np.asarray([int(round(c * fs)) for c in centers[:n_scrs]], dtype=np.int64)


def synth_emg_burst(
    fs: float,
    duration_s: float,
    rng: np.random.Generator,
    burst: tuple[float, float] = (0.4, 0.6),
    burst_amp: float = 1.0,
    rest_amp: float = 0.05,
):
    """Synthetic EMG with one activation burst; returns (signal, (start, end) indices)."""
    n = int(round(fs * duration_s))
    x = rng.normal(0.0, rest_amp, n)
    a = int(burst[0] * n)
    b = int(burst[1] * n)
    x[a:b] += rng.normal(0.0, burst_amp, b - a)
    return x, (a, b)


def synth_eog(fs: float, duration_s: float, rng: np.random.Generator, blink_every_s: float = 1.5):
    """Synthetic EOG with periodic blink bumps; returns (signal, blink centers)."""
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    x = 0.05 * np.sin(2 * np.pi * 0.25 * t)
    centers = []
    c = 0.6
    while c < duration_s - 0.4:
        centers.append(c)
        c += blink_every_s
    for c in centers:
        x += 1.0 * np.exp(-0.5 * ((t - c) / 0.05) ** 2)
    x += rng.normal(0.0, 0.02, n)
    return x, np.asarray([int(round(c * fs)) for c in centers], dtype=np.int64)


# ---------------------------------------------------------------------------
# label-parameterized dataset stand-ins
# ---------------------------------------------------------------------------


def _label_index(cfg: DatasetConfig, label: str) -> int:
    return cfg.label_set.index(label)


def _synth_accel(cfg: DatasetConfig, label: str, rng: np.random.Generator) -> np.ndarray:
    n = cfg.window_samples
    t = np.arange(n) / cfg.sampling_rate_hz
    i = _label_index(cfg, label)
    freq = 0.6 + 0.45 * i
    amp = 0.15 + 0.12 * (i % 5)
    data = np.zeros((cfg.channels, n))
    for ch in range(cfg.channels):
        phase = rng.uniform(0, 2 * np.pi)
        data[ch] = (
            amp * (0.8 + 0.2 * ch) * np.sin(2 * np.pi * freq * t + phase)
            + 0.35 * amp * np.sin(2 * np.pi * 2 * freq * t + 0.7 * phase)
            + 0.1 * i
            + rng.normal(0.0, 0.05, n)
        )
    return data


def _synth_ecg_labeled(cfg: DatasetConfig, label: str, rng: np.random.Generator) -> np.ndarray:
    morph = {}
    if label != "normal":
        condition = label
        if "conduction" in condition:
            morph = {"qrs_width_s": 0.045, "r_amp": 0.8}
        elif "infarction" in condition:
            morph = {"q_amp": -0.5, "t_amp": -0.25, "st_offset": -0.1}
        elif "hypertrophy" in condition:
            morph = {"r_amp": 1.9, "s_amp": -0.45}
        else:  # st/t change
            morph = {"st_offset": 0.18, "t_amp": 0.55}
    bpm = rng.uniform(55.0, 90.0)
    x, _ = synth_ecg(cfg.sampling_rate_hz, cfg.window_s, bpm, rng, **morph)
    return x[np.newaxis, :]


def _synth_emg_labeled(cfg: DatasetConfig, label: str, rng: np.random.Generator) -> np.ndarray:
    n = cfg.window_samples
    i = _label_index(cfg, label)
    data = np.zeros((cfg.channels, n))
    for ch in range(cfg.channels):
        # per-label channel involvement pattern
        active = (i + ch) % 3 != 0 and i != 0
        amp = 0.6 + 0.08 * i if active else 0.04
        x = rng.normal(0.0, 0.04, n)
        if active:
            a = int(n * (0.15 + 0.04 * ((i + ch) % 4)))
            b = int(n * (0.6 + 0.08 * (i % 4)))
            x[a:b] += rng.normal(0.0, amp, b - a)
        data[ch] = x
    return data


def _synth_resp_labeled(cfg: DatasetConfig, label: str, rng: np.random.Generator) -> np.ndarray:
    n = cfg.window_samples
    t = np.arange(n) / cfg.sampling_rate_hz
    i = _label_index(cfg, label)
    freq = (0.18, 0.42, 0.28)[i % 3]
    amp = (1.0, 0.6, 1.3)[i % 3]
    x = amp * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    x += 0.15 * np.sin(2 * np.pi * 2.1 * freq * t)
    x += rng.normal(0.0, 0.05, n)
    return x[np.newaxis, :]


def synth_window_series(cfg: DatasetConfig, label: str, user_id: str, rng: np.random.Generator) -> TimeSeries:
    """One window-length TimeSeries for a registry dataset stand-in."""
    if cfg.modality == Modality.ACCELEROMETER:
        data = _synth_accel(cfg, label, rng)
    elif cfg.modality == Modality.ECG:
        data = _synth_ecg_labeled(cfg, label, rng)
    elif cfg.modality == Modality.EMG:
        data = _synth_emg_labeled(cfg, label, rng)
    elif cfg.modality == Modality.RESPIRATION:
        data = _synth_resp_labeled(cfg, label, rng)
    else:
        raise ValueError(f"no synthetic generator for modality {cfg.modality}")
    return TimeSeries(
        channel_names=cfg.channel_names,
        data=data,
        sampling_rate_hz=cfg.sampling_rate_hz,
        modality=cfg.modality,
        user_id=user_id,
        label=label,
    )


def _slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")


def synthetic_pool(cfg: DatasetConfig, per_class: int, seed: int = 0) -> list[Window]:
    """A labeled window pool shaped like the given dataset config."""
    rng = np.random.default_rng(seed)
    pool = []
    for label in cfg.label_set:
        for k in range(per_class):
            series = synth_window_series(cfg, label, user_id=f"user{k % 3}", rng=rng)
            pool.append(
                Window(
                    series=series,
                    start_index=0,
                    duration_s=cfg.window_s,
                    sample_id=f"{cfg.id}_{_slug(label)}_{k:03d}",
                )
            )
    return pool


# representative single-window fixtures for rendering and demos
_FIXTURE_FS = {"eda": 20.0, "eog": 100.0, "ppg": 100.0, "ecg": 100.0, "emg": 1000.0}


def fixture_window(modality: Modality | str, seed: int = 7) -> Window:
    """A deterministic representative window of the given modality."""
    modality = Modality(modality)
    rng = np.random.default_rng(seed)
    if modality == Modality.ACCELEROMETER:
        from .registry import get_dataset

        cfg = get_dataset("hhar")
        series = synth_window_series(cfg, "walk", "fixture", rng)
        return Window(series=series, start_index=0, duration_s=cfg.window_s, sample_id="fix_accel")
    if modality == Modality.ECG:
        x, _ = synth_ecg(100.0, 10.0, 72.0, rng)
        fs, dur = 100.0, 10.0
    elif modality == Modality.PPG:
        x, _ = synth_ppg(100.0, 10.0, 75.0, rng)
        fs, dur = 100.0, 10.0
    elif modality == Modality.EDA:
        x, _ = synth_eda(20.0, 30.0, rng)
        fs, dur = 20.0, 30.0
    elif modality == Modality.EMG:
        x, _ = synth_emg_burst(1000.0, 2.0, rng)
        fs, dur = 1000.0, 2.0
    elif modality == Modality.EOG:
        x, _ = synth_eog(100.0, 10.0, rng)
        fs, dur = 100.0, 10.0
    elif modality == Modality.RESPIRATION:
        t = np.arange(int(700 * 10.0)) / 700.0
        x = np.sin(2 * np.pi * 0.25 * t) + rng.normal(0, 0.05, len(t))
        fs, dur = 700.0, 10.0
    else:
        t = np.arange(500) / 100.0
        x = np.sin(2 * np.pi * 1.5 * t) + rng.normal(0, 0.1, len(t))
        fs, dur = 100.0, 5.0
    series = TimeSeries(
        channel_names=("signal",),
        data=x[np.newaxis, :],
        sampling_rate_hz=fs,
        modality=modality,
        user_id="fixture",
    )
    return Window(series=series, start_index=0, duration_s=dur, sample_id=f"fix_{modality.value}")

"""The visualization toolbox: deterministic raster plots of sensor windows.

Every catalog tool renders a :class:`Window` into a fixed-size RGB
:class:`PlotImage` with the title / visualization-method-subtitle layout the
prompt templates expect. Rendering is a pure function of (window values,
tool, title, style): bytes are reproducible across runs and machines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .. import dsp
from ..errors import IncompatibleModality, SignalTooShort, TooFewPeaks, TooManyChannels
from ..signal_core import Modality, Window
from . import png
from .canvas import BLACK, RGB, Canvas
from .plotting import GRAY, LIGHT_GRAY, Axes, pad_range

TARGET_TITLE = "target data"

# Okabe-Ito colorblind-safe palette.
DEFAULT_PALETTE: tuple[RGB, ...] = (
    (0, 114, 178),
    (230, 159, 0),
    (0, 158, 115),
    (204, 121, 167),
    (86, 180, 233),
    (213, 94, 0),
    (148, 103, 189),
    (0, 0, 0),
)

ACCENT = (213, 94, 0)  # event markers
ACCENT2 = (0, 158, 115)  # onsets / secondary markers
ACCENT3 = (86, 180, 233)  # recovery markers
SPAN_FILL = (252, 224, 210)

SINGLE_PLOT = "single_plot"
SUBPLOTS = "subplots"

# tool id -> (display name, required modality or None for any)
TOOL_INFO: dict[str, tuple[str, str | None]] = {
    "raw_waveform": ("Raw waveform", None),
    "spectrogram": ("Spectrogram", None),
    "psd": ("Power spectral density", None),
    "eda_signal": ("EDA signal", "eda"),
    "eda_scr": ("EDA skin conductance response (SCR)", "eda"),
    "eda_scl": ("EDA skin conductance level (SCL)", "eda"),
    "ecg_signal_peaks": ("ECG signal and peaks", "ecg"),
    "ecg_heart_rate": ("ECG heart rate", "ecg"),
    "ecg_individual_beats": ("ECG individual heartbeats", "ecg"),
    "ppg_signal_peaks": ("PPG signal and peaks", "ppg"),
    "ppg_heart_rate": ("PPG heart rate", "ppg"),
    "ppg_individual_beats": ("PPG individual heartbeats", "ppg"),
    "emg_signal": ("EMG signal", "emg"),
    "emg_activation": ("EMG muscle activation", "emg"),
    "eog_signal": ("EOG signal", "eog"),
    "eog_blink_rate": ("EOG blink rate", "eog"),
    "eog_individual_blinks": ("EOG individual blinks", "eog"),
}

TOOL_IDS: tuple[str, ...] = tuple(TOOL_INFO)

DEFAULT_SPECTROGRAM_PARAMS = dsp.SpectrogramParams(nfft=128, nperseg=128, noverlap=64, mode="psd")


@dataclass(frozen=True)
class VizTool:
    """A catalog tool identity: id, prompt description, optional STFT params."""

    id: str
    description: str
    params: dsp.SpectrogramParams | None = None

    def __post_init__(self):
        if self.id not in TOOL_INFO:
            raise ValueError(f"unknown tool id {self.id!r}; valid ids: {', '.join(TOOL_IDS)}")
        if not self.description:
            raise ValueError("tool description must be non-empty")
        if (self.params is not None) != (self.id == "spectrogram"):
            raise ValueError("params are required for spectrogram and disallowed otherwise")

    @property
    def display_name(self) -> str:
        return TOOL_INFO[self.id][0]


@dataclass(frozen=True)
class RenderStyle:
    width_px: int = 512
    height_px: int = 512
    channel_palette: tuple[RGB, ...] = DEFAULT_PALETTE
    layout: str = SINGLE_PLOT
    margin_left: int = 58
    margin_right: int = 14
    margin_top: int = 54
    margin_bottom: int = 40
    line_width: int = 2
    font_scale: int = 1

    def __post_init__(self):
        if self.layout not in (SINGLE_PLOT, SUBPLOTS):
            raise ValueError(f"layout must be {SINGLE_PLOT!r} or {SUBPLOTS!r}")
        if len(set(self.channel_palette)) != len(self.channel_palette):
            raise ValueError("palette colors must be pairwise distinct")


@dataclass(frozen=True)
class PlotImage:
    width_px: int
    height_px: int
    rgb: bytes
    producing_tool: str
    title: str
    subtitle: str

    def __post_init__(self):
        if len(self.rgb) != self.width_px * self.height_px * 3:
            raise ValueError("pixel buffer size does not match dimensions")


def channel_legend(window: Window) -> list[str]:
    """Channel names as shown in legends/pane labels (same for both layouts)."""
    return list(window.series.channel_names)


def render(
    window: Window,
    tool: VizTool,
    title: str,
    style: RenderStyle = RenderStyle(),
    allow_modality_mismatch: bool = False,
) -> PlotImage:
    """Render one catalog visualization of ``window`` to a fixed-size raster."""
    display_name, required = TOOL_INFO[tool.id]
    modality = window.modality.value
    if required is not None:
        if modality != required and not allow_modality_mismatch:
            raise IncompatibleModality(
                f"tool {tool.id} expects {required} data, window is {modality}"
            )
        if window.series.n_channels != 1:
            raise IncompatibleModality(
                f"tool {tool.id} requires a single channel, window has "
                f"{window.series.n_channels}"
            )
    if window.series.n_channels > len(style.channel_palette):
        raise TooManyChannels(
            f"{window.series.n_channels} channels exceed the {len(style.channel_palette)}-color palette"
        )

    canvas = Canvas(style.width_px, style.height_px)
    if title:
        canvas.text_centered(style.width_px // 2, 8, title, BLACK, scale=2)
    canvas.text_centered(style.width_px // 2, 34, display_name, GRAY)
    rect = (
        style.margin_left,
        style.margin_top,
        style.width_px - style.margin_right,
        style.height_px - style.margin_bottom,
    )
    _RENDERERS[tool.id](canvas, rect, window, style, tool)
    return PlotImage(
        width_px=style.width_px,
        height_px=style.height_px,
        rgb=canvas.to_bytes(),
        producing_tool=tool.id,
        title=title,
        subtitle=display_name,
    )


def render_labeled_example(
    window: Window,
    tool: VizTool,
    label: str,
    style: RenderStyle = RenderStyle(),
    allow_modality_mismatch: bool = False,
) -> PlotImage:
    """Render a few-shot example plot whose title is exactly its label."""
    if not label:
        raise ValueError("example label must be non-empty")
    return render(window, tool, label, style, allow_modality_mismatch)


def encode_png(image: PlotImage) -> bytes:
    return png.encode_rgb(image.width_px, image.height_px, image.rgb)


def decode_png(data: bytes) -> tuple[int, int, bytes]:
    return png.decode_rgb(data)


# ---------------------------------------------------------------------------
# per-tool drawing
# ---------------------------------------------------------------------------


def _time_axis(window: Window) -> np.ndarray:
    return np.arange(window.n_samples) / window.series.sampling_rate_hz


def _make_axes(canvas, rect, xlim, ylim) -> Axes:
    ax = Axes(canvas, *rect, xlim=pad_range(*xlim, 0.0), ylim=pad_range(*ylim))
    ax.grid_and_ticks()
    ax.frame()
    return ax


def _split_panes(rect, n: int, gap: int = 10) -> list[tuple[int, int, int, int]]:
    x0, y0, x1, y1 = rect
    total = y1 - y0
    pane_h = (total - gap * (n - 1)) // n
    panes = []
    for i in range(n):
        top = y0 + i * (pane_h + gap)
        panes.append((x0, top, x1, top + pane_h))
    return panes


def _draw_raw(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
    t = _time_axis(window)
    data = window.series.data
    names = channel_legend(window)
    if style.layout == SUBPLOTS and len(names) > 1:
        panes = _split_panes(rect, len(names))
        for i, pane in enumerate(panes):
            ax = Axes(
                canvas, *pane,
                xlim=pad_range(t[0], t[-1], 0.0),
                ylim=pad_range(float(data[i].min()), float(data[i].max())),
            )
            ax.grid_and_ticks(x_ticks=(i == len(names) - 1))
            ax.frame()
            ax.polyline(t, data[i], style.channel_palette[i], style.line_width)
            ax.annotation(names[i])
            if i == len(names) - 1:
                ax.xlabel("time (s)")
            if i == len(names) // 2:
                ax.ylabel("amplitude")
    else:
        ax = _make_axes(canvas, rect, (t[0], t[-1]), (float(data.min()), float(data.max())))
        for i, name in enumerate(names):
            ax.polyline(t, data[i], style.channel_palette[i], style.line_width)
        if len(names) > 1:
            ax.legend([(n, style.channel_palette[i]) for i, n in enumerate(names)])
        ax.xlabel("time (s)")
        ax.ylabel("amplitude")


def _spectrogram_matrix(x: np.ndarray, fs: float, params: dsp.SpectrogramParams):
    nperseg = min(params.nperseg, len(x))
    noverlap = min(params.noverlap, nperseg - 1)
    nfft = max(params.nfft, nperseg)
    eff = dsp.SpectrogramParams(nfft=nfft, nperseg=nperseg, noverlap=noverlap, mode=params.mode)
    return dsp.spectrogram(x, fs, eff)


def _draw_spectrogram(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
    params = tool.params or DEFAULT_SPECTROGRAM_PARAMS
    fs = window.series.sampling_rate_hz
    names = channel_legend(window)
    panes = _split_panes(rect, len(names)) if len(names) > 1 else [rect]
    for i, pane in enumerate(panes):
        spec = _spectrogram_matrix(window.series.data[i], fs, params)
        values = spec.values
        if spec.mode == "complex":
            values = np.abs(values)
        if spec.mode in ("psd", "magnitude"):
            values = np.log10(np.asarray(values, dtype=np.float64) + 1e-12)
        ax = Axes(
            canvas, *pane,
            xlim=(float(spec.times_s[0]), float(spec.times_s[-1]) or 1.0),
            ylim=(float(spec.freqs_hz[0]), float(spec.freqs_hz[-1])),
        )
        ax.heatmap(values)
        ax.grid_and_ticks(x_ticks=(i == len(panes) - 1), y_ticks=True)
        ax.frame()
        if len(names) > 1:
            ax.annotation(names[i], (255, 255, 255))
        if i == len(panes) - 1:
            ax.xlabel("time (s)")
        if i == len(panes) // 2:
            ax.ylabel("frequency (Hz)")


def _draw_psd(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
    fs = window.series.sampling_rate_hz
    names = channel_legend(window)
    curves = []
    for i in range(len(names)):
        try:
            freqs, p = dsp.power_spectral_density(window.series.data[i], fs)
        except SignalTooShort:
            freqs, p = np.array([0.0, fs / 2]), np.array([1e-20, 1e-20])
        curves.append((freqs, 10.0 * np.log10(p + 1e-20)))
    lo = min(float(c[1].min()) for c in curves)
    hi = max(float(c[1].max()) for c in curves)
    ax = _make_axes(canvas, rect, (0.0, fs / 2), (lo, hi))
    for i, (freqs, db) in enumerate(curves):
        ax.polyline(freqs, db, style.channel_palette[i], style.line_width)
    if len(names) > 1:
        ax.legend([(n, style.channel_palette[i]) for i, n in enumerate(names)])
    ax.xlabel("frequency (Hz)")
    ax.ylabel("power (dB/Hz)")


def _cleaned(window: Window) -> np.ndarray:
    x = window.series.data[0]
    fs = window.series.sampling_rate_hz
    low, high = dsp.modality_band(window.modality, fs)
    if high <= low or len(x) < 2:
        return np.asarray(x, dtype=np.float64)
    return dsp.bandpass_clean(x, fs, low, high)


def _raw_plus_clean(canvas, rect, window: Window, style: RenderStyle):
    t = _time_axis(window)
    raw = window.series.data[0]
    clean = _cleaned(window)
    lo = min(float(raw.min()), float(clean.min()))
    hi = max(float(raw.max()), float(clean.max()))
    ax = _make_axes(canvas, rect, (t[0], t[-1]), (lo, hi))
    ax.polyline(t, raw, LIGHT_GRAY, 1)
    ax.polyline(t, clean, style.channel_palette[0], style.line_width)
    ax.xlabel("time (s)")
    ax.ylabel("amplitude")
    return ax, t, clean


def _draw_signal_with_peaks(preset: str, label: str):
    def draw(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
        ax, t, clean = _raw_plus_clean(canvas, rect, window, style)
        fs = window.series.sampling_rate_hz
        try:
            peaks = dsp.detect_peaks(clean, fs, preset)
        except SignalTooShort:
            peaks = dsp.PeakSet(indices=np.empty(0, dtype=np.int64), kind=dsp.PeakKind.GENERIC)
        idx = peaks.indices
        ax.dots(t[idx], clean[idx], ACCENT)
        ax.legend([("raw", LIGHT_GRAY), ("cleaned", style.channel_palette[0]), (label, ACCENT)])

    return draw


def _draw_rate(preset: str, unit_label: str):
    def draw(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
        clean = _cleaned(window)
        fs = window.series.sampling_rate_hz
        t = _time_axis(window)
        try:
            peaks = dsp.detect_peaks(clean, fs, preset)
            rates, mean_rate = dsp.rate_series(peaks, fs, window.n_samples)
        except (SignalTooShort, TooFewPeaks):
            ax = _make_axes(canvas, rect, (t[0], t[-1]), (0.0, 1.0))
            ax.annotation("not enough events detected")
            ax.xlabel("time (s)")
            return
        ax = _make_axes(canvas, rect, (t[0], t[-1]), (float(rates.min()), float(rates.max())))
        ax.polyline(t, rates, style.channel_palette[0], style.line_width)
        ax.hline(mean_rate, ACCENT, dashed=True)
        ax.annotation(f"mean {mean_rate:.1f} {unit_label}")
        ax.xlabel("time (s)")
        ax.ylabel(unit_label)

    return draw


def _draw_beats(preset: str, average: str, landmarks: bool):
    def draw(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
        clean = _cleaned(window)
        fs = window.series.sampling_rate_hz
        try:
            peaks = dsp.detect_peaks(clean, fs, preset)
            ensemble = dsp.segment_beats(clean, peaks, fs, with_landmarks=landmarks)
            _, mean_rate = dsp.rate_series(peaks, fs, window.n_samples)
        except (SignalTooShort, TooFewPeaks):
            t = _time_axis(window)
            ax = _make_axes(canvas, rect, (t[0], t[-1]), (0.0, 1.0))
            ax.annotation("not enough events detected")
            ax.xlabel("time (s)")
            return
        beats = ensemble.beats
        center = np.median(beats, axis=0) if average == "median" else ensemble.mean_beat
        bt = (np.arange(beats.shape[1]) - ensemble.r_offset) / fs
        ax = _make_axes(
            canvas, rect,
            (float(bt[0]), float(bt[-1])),
            (float(beats.min()), float(beats.max())),
        )
        for row in beats:
            ax.polyline(bt, row, LIGHT_GRAY, 1)
        ax.polyline(bt, center, style.channel_palette[0], style.line_width + 1)
        if landmarks:
            for name, li in sorted(ensemble.landmarks.items()):
                ax.dots([bt[li]], [center[li]], ACCENT)
                canvas.text(ax.x_to_px(bt[li]) + 5, ax.y_to_px(center[li]) - 12, name, ACCENT)
        ax.annotation(f"{average} of {beats.shape[0]} events, mean rate {mean_rate:.1f}/min")
        ax.xlabel("time relative to peak (s)")
        ax.ylabel("amplitude")

    return draw


def _draw_eda_signal(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
    _raw_plus_clean(canvas, rect, window, style)[0].legend(
        [("raw", LIGHT_GRAY), ("cleaned", style.channel_palette[0])]
    )


def _eda(window: Window):
    clean = _cleaned(window)
    return clean, dsp.eda_decompose(clean, window.series.sampling_rate_hz)


def _draw_eda_scr(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
    t = _time_axis(window)
    try:
        _, deco = _eda(window)
    except SignalTooShort:
        ax = _make_axes(canvas, rect, (t[0], t[-1]), (0.0, 1.0))
        ax.annotation("window too short for decomposition")
        return
    ph = deco.phasic
    ax = _make_axes(canvas, rect, (t[0], t[-1]), (float(ph.min()), float(ph.max())))
    ax.polyline(t, ph, style.channel_palette[0], style.line_width)
    onsets = [e.onset for e in deco.scr_events]
    pk = [e.peak for e in deco.scr_events]
    rec = [e.half_recovery for e in deco.scr_events if e.half_recovery is not None]
    ax.dots(t[onsets], ph[onsets], ACCENT2)
    ax.dots(t[pk], ph[pk], ACCENT)
    ax.dots(t[rec], ph[rec], ACCENT3)
    ax.legend(
        [("phasic", style.channel_palette[0]), ("onset", ACCENT2), ("peak", ACCENT),
         ("half-recovery", ACCENT3)]
    )
    ax.xlabel("time (s)")
    ax.ylabel("phasic amplitude")


def _draw_eda_scl(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
    t = _time_axis(window)
    try:
        _, deco = _eda(window)
    except SignalTooShort:
        ax = _make_axes(canvas, rect, (t[0], t[-1]), (0.0, 1.0))
        ax.annotation("window too short for decomposition")
        return
    tonic = deco.tonic
    ax = _make_axes(canvas, rect, (t[0], t[-1]), (float(tonic.min()), float(tonic.max())))
    ax.polyline(t, tonic, style.channel_palette[0], style.line_width)
    ax.annotation(f"mean level {float(tonic.mean()):.3f}")
    ax.xlabel("time (s)")
    ax.ylabel("tonic level")


def _draw_emg_activation(canvas, rect, window: Window, style: RenderStyle, tool) -> None:
    t = _time_axis(window)
    clean = _cleaned(window)
    fs = window.series.sampling_rate_hz
    try:
        acts = dsp.emg_activation(clean, fs)
    except SignalTooShort:
        ax = _make_axes(canvas, rect, (t[0], t[-1]), (0.0, 1.0))
        ax.annotation("window too short")
        return
    lo, hi = float(clean.min()), float(clean.max())
    ax = Axes(canvas, *rect, xlim=pad_range(t[0], t[-1], 0.0), ylim=pad_range(lo, hi))
    for a, b in acts.segments:
        ax.vspan(t[a], t[min(b, len(t) - 1)], SPAN_FILL)
    ax.grid_and_ticks()
    ax.frame()
    ax.polyline(t, clean, style.channel_palette[0], 1)
    for a, b in acts.segments:
        ax.hbar(t[a], t[min(b, len(t) - 1)], 6, ACCENT)
    ax.annotation(f"{len(acts.segments)} active segment(s)")
    ax.xlabel("time (s)")
    ax.ylabel("amplitude")


_RENDERERS = {
    "raw_waveform": _draw_raw,
    "spectrogram": _draw_spectrogram,
    "psd": _draw_psd,
    "eda_signal": _draw_eda_signal,
    "eda_scr": _draw_eda_scr,
    "eda_scl": _draw_eda_scl,
    "ecg_signal_peaks": _draw_signal_with_peaks("ecg_r", "R peaks"),
    "ecg_heart_rate": _draw_rate("ecg_r", "bpm"),
    "ecg_individual_beats": _draw_beats("ecg_r", "mean", landmarks=True),
    "ppg_signal_peaks": _draw_signal_with_peaks("ppg_systolic", "systolic peaks"),
    "ppg_heart_rate": _draw_rate("ppg_systolic", "bpm"),
    "ppg_individual_beats": _draw_beats("ppg_systolic", "mean", landmarks=False),
    "emg_signal": lambda c, r, w, s, t: _raw_plus_clean(c, r, w, s)[0].legend(
        [("raw", LIGHT_GRAY), ("cleaned", s.channel_palette[0])]
    ),
    "emg_activation": _draw_emg_activation,
    "eog_signal": _draw_signal_with_peaks("eog_blink", "blinks"),
    "eog_blink_rate": _draw_rate("eog_blink", "blinks/min"),
    "eog_individual_blinks": _draw_beats("eog_blink", "median", landmarks=False),
}

assert set(_RENDERERS) == set(TOOL_INFO)

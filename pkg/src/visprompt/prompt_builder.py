"""Prompt assembly and token accounting.

Builds the visual few-shot prompt (instruction text followed by labeled
example plots and a "target data" plot), the information-parity text-only
prompt, the chain-of-thought variant, and the two-stage summarize-then-
classify text pipeline. Image token costs use the tiled-image pricing rule
(85 + 170 per 512x512 tile); text is counted by :mod:`visprompt.tokenizer`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp
from .errors import EmptySummary, IncompatibleModality, NoTextPart
from .render import TARGET_TITLE, PlotImage, RenderStyle, VizTool, render, render_labeled_example
from .signal_core import Window
from .tokenizer import Tokenizer, default_tokenizer

TEMPLATE_DIR = Path(__file__).parent / "templates"

COT_SUFFIX = "Let's think step-by-step."
DEFAULT_ANSWER_FORMAT = (
    'End your response with a single line formatted exactly as "Answer: <label>".'
)
DEFAULT_TOKEN_LIMIT = 120_000


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    image: PlotImage


Part = TextPart | ImagePart


@dataclass(frozen=True)
class PromptMessage:
    parts: tuple[Part, ...]
    role: str = "user"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("a prompt message needs at least one part")
        if self.role not in ("system", "user"):
            raise ValueError(f"role must be system or user, got {self.role!r}")
        if self.role != "user" and any(isinstance(p, ImagePart) for p in self.parts):
            raise ValueError("image parts are only allowed in user messages")

    @property
    def text_parts(self) -> list[TextPart]:
        return [p for p in self.parts if isinstance(p, TextPart)]

    @property
    def image_parts(self) -> list[ImagePart]:
        return [p for p in self.parts if isinstance(p, ImagePart)]


@dataclass(frozen=True)
class TaskSpec:
    task_description: str
    data_description: str
    label_set: tuple[str, ...]
    answer_format_instruction: str = DEFAULT_ANSWER_FORMAT

    def __post_init__(self):
        object.__setattr__(self, "label_set", tuple(self.label_set))
        if not self.label_set:
            raise ValueError("label_set must be non-empty")
        if len(set(self.label_set)) != len(self.label_set):
            raise ValueError("label_set entries must be unique")


@dataclass(frozen=True)
class TokenReport:
    text_tokens: int
    image_tokens: int
    total: int
    per_part: tuple[tuple[str, int], ...]
    approximate: bool = False
    feature_fallback: bool = False


@dataclass(frozen=True)
class FeatureSerialization:
    """Directive: mirror this visualization's derived features in text."""

    tool_id: str


def image_token_cost(width_px: int, height_px: int) -> int:
    """Image cost in tokens: 85 + 170 per covering 512x512 tile."""
    if width_px <= 0 or height_px <= 0:
        raise ValueError("image dimensions must be positive")
    tiles = math.ceil(width_px / 512) * math.ceil(height_px / 512)
    return 85 + 170 * tiles


def count_text_tokens(text: str, tokenizer: Tokenizer | None = None) -> int:
    tok = tokenizer or default_tokenizer()
    return tok.count(text)


def token_report(
    messages: PromptMessage | list[PromptMessage],
    tokenizer: Tokenizer | None = None,
) -> TokenReport:
    tok = tokenizer or default_tokenizer()
    msgs = [messages] if isinstance(messages, PromptMessage) else list(messages)
    per_part: list[tuple[str, int]] = []
    text_tokens = image_tokens = 0
    fallback = False
    for msg in msgs:
        fallback = fallback or bool(msg.meta.get("feature_fallback"))
        for part in msg.parts:
            if isinstance(part, TextPart):
                n = tok.count(part.text)
                text_tokens += n
                per_part.append(("text", n))
            else:
                n = image_token_cost(part.image.width_px, part.image.height_px)
                image_tokens += n
                per_part.append(("image", n))
    return TokenReport(
        text_tokens=text_tokens,
        image_tokens=image_tokens,
        total=text_tokens + image_tokens,
        per_part=tuple(per_part),
        approximate=not tok.is_exact,
        feature_fallback=fallback,
    )


# ---------------------------------------------------------------------------
# templates
# ---------------------------------------------------------------------------

_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


def render_template(name: str, mapping: dict[str, str], template_dir: Path | None = None) -> str:
    path = (template_dir or TEMPLATE_DIR) / name
    text = path.read_text(encoding="utf-8")

    def sub(m: re.Match) -> str:
        key = m.group(1)
        if key not in mapping:
            raise KeyError(f"template {name} references unknown placeholder {key!r}")
        return mapping[key]

    return _PLACEHOLDER.sub(sub, text)


def _label_list(task: TaskSpec) -> str:
    return ", ".join(task.label_set)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def serialize_window(window: Window, decimals: int = 2) -> str:
    """One line per channel: ``name: v, v, v`` at fixed decimal precision."""
    lines = []
    for name, values in window.series.channels:
        joined = ", ".join(f"{v:.{decimals}f}" for v in values)
        lines.append(f"{name}: {joined}")
    return "\n".join(lines)


def feature_block(feature: FeatureSerialization, window: Window, decimals: int = 2) -> str | None:
    """Structured text mirroring a visualization's derived features.

    Returns None for tools whose plot carries no information beyond the raw
    values, or when the window is too short for the underlying analysis.
    """
    tool = feature.tool_id
    x = np.asarray(window.series.data[0], dtype=np.float64)
    fs = window.series.sampling_rate_hz
    low, high = dsp.modality_band(window.modality, fs)
    try:
        clean = dsp.bandpass_clean(x, fs, low, high) if high > low else x
        if tool in ("ecg_signal_peaks", "ppg_signal_peaks", "eog_signal"):
            preset = {"ecg_signal_peaks": "ecg_r", "ppg_signal_peaks": "ppg_systolic"}.get(
                tool, "eog_blink"
            )
            peaks = dsp.detect_peaks(clean, fs, preset)
            pairs = "; ".join(f"{i}: {clean[i]:.{decimals}f}" for i in peaks.indices)
            return f"Detected peaks (index: value): {pairs if pairs else 'none'}"
        if tool in ("ecg_heart_rate", "ppg_heart_rate", "eog_blink_rate"):
            preset = {"ecg_heart_rate": "ecg_r", "ppg_heart_rate": "ppg_systolic"}.get(
                tool, "eog_blink"
            )
            peaks = dsp.detect_peaks(clean, fs, preset)
            _, mean_rate = dsp.rate_series(peaks, fs, window.n_samples)
            ibis = np.diff(peaks.indices) / fs
            inst = ", ".join(f"{60.0 / v:.1f}" for v in ibis)
            return (
                f"Instantaneous rate per minute at inter-event midpoints: {inst}; "
                f"mean {mean_rate:.1f}"
            )
        if tool in ("ecg_individual_beats", "ppg_individual_beats", "eog_individual_blinks"):
            preset = {
                "ecg_individual_beats": "ecg_r",
                "ppg_individual_beats": "ppg_systolic",
            }.get(tool, "eog_blink")
            peaks = dsp.detect_peaks(clean, fs, preset)
            ens = dsp.segment_beats(clean, peaks, fs, with_landmarks=False)
            avg = ", ".join(f"{v:.{decimals}f}" for v in ens.mean_beat)
            return f"Average event shape over {ens.beats.shape[0]} events: {avg}"
        if tool == "eda_scr":
            deco = dsp.eda_decompose(clean, fs)
            ev = "; ".join(
                f"(onset {e.onset}, peak {e.peak}, half-recovery "
                f"{e.half_recovery if e.half_recovery is not None else 'n/a'})"
                for e in deco.scr_events
            )
            return f"SCR events as sample indices: {ev if ev else 'none'}"
        if tool == "eda_scl":
            deco = dsp.eda_decompose(clean, fs)
            step = max(1, len(deco.tonic) // 50)
            vals = ", ".join(f"{v:.{decimals}f}" for v in deco.tonic[::step])
            return f"Tonic level every {step} samples: {vals}"
        if tool == "emg_activation":
            acts = dsp.emg_activation(clean, fs)
            seg = "; ".join(f"{a}-{b}" for a, b in acts.segments)
            return (
                f"Active segments (start-end sample): {seg if seg else 'none'}; "
                f"threshold {acts.threshold_used:.{decimals}f}"
            )
        if tool == "spectrogram":
            params = dsp.SpectrogramParams(
                nfft=min(128, len(x)), nperseg=min(128, len(x)),
                noverlap=min(64, min(128, len(x)) - 1), mode="psd",
            )
            spec = dsp.spectrogram(x, fs, params)
            dom = spec.freqs_hz[np.argmax(spec.values, axis=0)]
            vals = ", ".join(f"{v:.1f}" for v in dom)
            return f"Dominant frequency per frame (Hz): {vals}"
        if tool == "psd":
            freqs, p = dsp.power_spectral_density(x, fs)
            top = np.argsort(p)[::-1][:5]
            top = top[np.argsort(freqs[top])]
            vals = "; ".join(f"{freqs[i]:.1f} Hz" for i in top)
            return f"Strongest frequency components: {vals}"
    except Exception:
        return None
    return None


# ---------------------------------------------------------------------------
# prompt builders
# ---------------------------------------------------------------------------


def _check_same_modality(windows: list[Window]) -> None:
    modalities = {w.modality for w in windows}
    if len(modalities) > 1:
        raise IncompatibleModality(f"windows mix modalities: {sorted(m.value for m in modalities)}")


def build_visual_prompt(
    examples: list[tuple[Window, str]],
    target: Window,
    tool: VizTool,
    task: TaskSpec,
    style: RenderStyle = RenderStyle(),
    template_dir: Path | None = None,
    allow_modality_mismatch: bool = False,
) -> PromptMessage:
    """Instruction text, then one labeled plot per example, then the target
    plot titled "target data"."""
    _check_same_modality([w for w, _ in examples] + [target])
    n = len(examples)
    if n == 0:
        examples_sentence = ""
    else:
        plural = "images are labeled examples" if n > 1 else "image is a labeled example"
        examples_sentence = (
            f"The first {n} {plural}; the title above each plot is its label.\n"
        )
    instruction = render_template(
        "visual_instruction.txt",
        {
            "task_description": task.task_description,
            "data_description": task.data_description,
            "examples_sentence": examples_sentence,
            "label_list": _label_list(task),
            "answer_format_instruction": task.answer_format_instruction,
        },
        template_dir,
    )
    parts: list[Part] = [TextPart(instruction)]
    for window, label in examples:
        parts.append(
            ImagePart(render_labeled_example(window, tool, label, style, allow_modality_mismatch))
        )
    parts.append(ImagePart(render(target, tool, TARGET_TITLE, style, allow_modality_mismatch)))
    return PromptMessage(parts=tuple(parts))


def build_text_prompt(
    examples: list[tuple[Window, str]],
    target: Window,
    task: TaskSpec,
    parity_features: FeatureSerialization | None = None,
    decimals: int = 2,
    tokenizer: Tokenizer | None = None,
    token_limit: int = DEFAULT_TOKEN_LIMIT,
    template_dir: Path | None = None,
) -> PromptMessage:
    """Text-only prompt with fixed-precision serialized values.

    When ``parity_features`` is given, each window's serialization is
    followed by the corresponding derived-feature block so the prompt carries
    the same information as the mirrored visualization. If that would exceed
    ``token_limit`` tokens, the feature blocks are dropped (raw waveform
    values only) and the message is flagged.
    """
    _check_same_modality([w for w, _ in examples] + [target])

    def body(with_features: bool) -> str:
        def block(window: Window) -> str:
            text = serialize_window(window, decimals)
            if with_features and parity_features is not None:
                extra = feature_block(parity_features, window, decimals)
                if extra:
                    text += "\n" + extra
            return text

        examples_block = ""
        for i, (window, label) in enumerate(examples, start=1):
            examples_block += f"Example {i} (label: {label}):\n{block(window)}\n\n"
        return render_template(
            "text_instruction.txt",
            {
                "task_description": task.task_description,
                "data_description": task.data_description,
                "sampling_rate_hz": f"{target.series.sampling_rate_hz:g}",
                "examples_block": examples_block,
                "target_block": block(target),
                "label_list": _label_list(task),
                "answer_format_instruction": task.answer_format_instruction,
            },
            template_dir,
        )

    meta: dict = {}
    text = body(with_features=True)
    if parity_features is not None:
        tok = tokenizer or default_tokenizer()
        if tok.count(text) > token_limit:
            text = body(with_features=False)
            meta["feature_fallback"] = True
    return PromptMessage(parts=(TextPart(text),), meta=meta)


def apply_cot(prompt: PromptMessage) -> PromptMessage:
    """Append the step-by-step suffix to the last text part (idempotence is
    the caller's responsibility; applying twice stacks the suffix)."""
    last_text_i = None
    for i, part in enumerate(prompt.parts):
        if isinstance(part, TextPart):
            last_text_i = i
    if last_text_i is None:
        raise NoTextPart("prompt has no text part to extend")
    parts = list(prompt.parts)
    old = parts[last_text_i].text
    sep = "" if old.endswith("\n") else "\n"
    parts[last_text_i] = TextPart(old + sep + COT_SUFFIX)
    return PromptMessage(parts=tuple(parts), role=prompt.role, meta=dict(prompt.meta))


def build_summarization_prompt(
    target: Window,
    task: TaskSpec,
    decimals: int = 2,
    template_dir: Path | None = None,
) -> PromptMessage:
    """Stage 1 of the text-summarization pipeline: ask for a pattern summary."""
    text = render_template(
        "summarize_instruction.txt",
        {
            "sampling_rate_hz": f"{target.series.sampling_rate_hz:g}",
            "data_block": serialize_window(target, decimals),
        },
        template_dir,
    )
    return PromptMessage(parts=(TextPart(text),))


def build_summary_classification_prompt(
    summary: str,
    task: TaskSpec,
    template_dir: Path | None = None,
) -> PromptMessage:
    """Stage 2: classify from the stage-1 summary instead of raw numbers."""
    if not summary or not summary.strip():
        raise EmptySummary("stage-1 summary is empty")
    text = render_template(
        "summary_classification.txt",
        {
            "task_description": task.task_description,
            "data_description": task.data_description,
            "summary": summary.strip(),
            "label_list": _label_list(task),
            "answer_format_instruction": task.answer_format_instruction,
        },
        template_dir,
    )
    return PromptMessage(parts=(TextPart(text),))

"""Length-scaling study: how text-prompt accuracy degrades with sequence length.

Two 1-shot text tasks over generated waves: mean prediction (arithmetic) and
sine/sawtooth classification (pattern recognition). Model answers are scored
against the local oracles, producing a per-length table and a line plot.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..errors import NoLabelFound, AmbiguousLabel
from ..mllm_client import MllmClient, extract_label
from ..prompt_builder import PromptMessage, TextPart
from ..render.canvas import BLACK, Canvas
from ..render.plotting import Axes, pad_range
from ..render import png
from .synthetic import WaveTask, gen_wave, oracle_mean, oracle_wave_kind

WAVE_LABELS = ("sine", "sawtooth")

_NUMBER_RE = re.compile(r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")


@dataclass(frozen=True)
class MotivationRow:
    length: int
    mean_error_rate: float
    classification_accuracy: float
    n_trials: int


def _fmt_seq(x: np.ndarray, decimals: int = 2) -> str:
    return ", ".join(f"{v:.{decimals}f}" for v in x)


def build_mean_prompt(seq: np.ndarray, example: np.ndarray, example_mean: float) -> PromptMessage:
    text = (
        "You are given numeric sequences sampled from a sensor.\n\n"
        f"Example sequence: {_fmt_seq(example)}\n"
        f"The mean value of the example sequence is {example_mean:.4f}.\n\n"
        "Now compute the mean value of the following sequence:\n"
        f"{_fmt_seq(seq)}\n\n"
        'End your response with a single line formatted exactly as "Answer: <number>".'
    )
    return PromptMessage(parts=(TextPart(text),))


def build_wave_prompt(seq: np.ndarray, example: np.ndarray, example_kind: str) -> PromptMessage:
    text = (
        "You are given numeric sequences sampled from waveform generators.\n\n"
        f"Example sequence ({example_kind} wave): {_fmt_seq(example)}\n\n"
        "Classify the following sequence as one of: sine, sawtooth.\n"
        f"{_fmt_seq(seq)}\n\n"
        'End your response with a single line formatted exactly as "Answer: <label>".'
    )
    return PromptMessage(parts=(TextPart(text),))


def parse_number(text: str) -> float | None:
    matches = _NUMBER_RE.findall(text or "")
    return float(matches[-1]) if matches else None


def run_motivation_study(
    lengths: list[int],
    n_trials: int,
    client: MllmClient,
    seed: int = 0,
) -> list[MotivationRow]:
    """Per length: mean relative error on mean prediction and accuracy on
    wave classification, over ``n_trials`` seeded trials each."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rows = []
    for length in lengths:
        rel_errors = []
        correct = 0
        for trial in range(n_trials):
            base_seed = seed * 1_000_003 + length * 101 + trial
            rng = np.random.default_rng(base_seed)

            # mean prediction: offset keeps |true mean| away from zero so the
            # relative error is well-defined
            kind = WAVE_LABELS[rng.integers(0, 2)]
            offset = rng.uniform(1.0, 3.0)
            seq = gen_wave(
                WaveTask(
                    kind=kind, length=length,
                    frequency_cycles=float(rng.uniform(1.0, 8.0)),
                    amplitude=float(rng.uniform(0.5, 2.0)),
                    phase=float(rng.uniform(0, 2 * np.pi)),
                    noise_std=0.02, seed=base_seed,
                )
            ) + offset
            example = gen_wave(
                WaveTask(kind="sine", length=length, frequency_cycles=2.0, seed=base_seed + 1)
            ) + 1.5
            response = client.send(client.request(build_mean_prompt(seq, example, oracle_mean(example))))
            predicted = parse_number(response.text)
            true_mean = oracle_mean(seq)
            if predicted is None:
                rel_errors.append(1.0)
            else:
                rel_errors.append(abs(predicted - true_mean) / abs(true_mean))

            # wave classification
            kind2 = WAVE_LABELS[rng.integers(0, 2)]
            seq2 = gen_wave(
                WaveTask(
                    kind=kind2, length=length,
                    frequency_cycles=float(rng.uniform(1.0, 8.0)),
                    amplitude=1.0, phase=float(rng.uniform(0, 2 * np.pi)),
                    noise_std=0.02, seed=base_seed + 2,
                )
            )
            example_kind = WAVE_LABELS[rng.integers(0, 2)]
            example2 = gen_wave(
                WaveTask(kind=example_kind, length=length, frequency_cycles=3.0, seed=base_seed + 3)
            )
            response2 = client.send(client.request(build_wave_prompt(seq2, example2, example_kind)))
            try:
                label, _ = extract_label(response2.text, WAVE_LABELS)
            except (NoLabelFound, AmbiguousLabel):
                label = None
            if label == oracle_wave_kind(seq2):
                correct += 1
        rows.append(
            MotivationRow(
                length=length,
                mean_error_rate=float(np.mean(rel_errors)),
                classification_accuracy=correct / n_trials,
                n_trials=n_trials,
            )
        )
    return rows


def plot_motivation(rows: list[MotivationRow], width: int = 512, height: int = 512) -> bytes:
    """Line plot of error rate and accuracy versus sequence length (PNG)."""
    canvas = Canvas(width, height)
    canvas.text_centered(width // 2, 8, "text prompts vs sequence length", BLACK, scale=2)
    lengths = [r.length for r in rows]
    errors = [r.mean_error_rate for r in rows]
    accs = [r.classification_accuracy for r in rows]
    lo = min(0.0, min(errors + accs))
    hi = max(1.0, max(errors + accs))
    ax = Axes(canvas, 58, 54, width - 14, height - 40,
              xlim=pad_range(min(lengths), max(lengths), 0.02), ylim=pad_range(lo, hi))
    ax.grid_and_ticks()
    ax.frame()
    ax.polyline(lengths, errors, (213, 94, 0), 2)
    ax.dots(lengths, errors, (213, 94, 0), 3)
    ax.polyline(lengths, accs, (0, 114, 178), 2)
    ax.dots(lengths, accs, (0, 114, 178), 3)
    ax.legend([("mean rel. error", (213, 94, 0)), ("classification acc.", (0, 114, 178))])
    ax.xlabel("sequence length")
    ax.ylabel("rate")
    return png.encode_rgb(width, height, canvas.to_bytes())

"""Few-shot evaluation loop: sampling, prompting, scoring, reporting.

Given a labeled window pool and a client, resolves the visualization choice
(for visual and feature-parity text runs), builds one prompt per test
window, queries the client, extracts labels, and aggregates accuracy,
confusion counts, and token costs into a deterministic report.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .. import visgen
from ..errors import (
    AmbiguousLabel,
    EmptySummary,
    InsufficientSamples,
    NoLabelFound,
    VisPromptError,
)
from ..mllm_client import MllmClient, extract_label
from ..prompt_builder import (
    FeatureSerialization,
    PromptMessage,
    TokenReport,
    apply_cot,
    build_summarization_prompt,
    build_summary_classification_prompt,
    build_text_prompt,
    build_visual_prompt,
    token_report,
)
from ..render import SINGLE_PLOT, RenderStyle
from ..signal_core import Window
from ..tokenizer import Tokenizer, default_tokenizer
from .registry import DatasetConfig

UNPARSED = "(unparsed)"

PROMPT_KINDS = ("visual", "text_only", "text_summarized")


@dataclass(frozen=True)
class EvalConfig:
    dataset: DatasetConfig
    prompt_kind: str = "visual"
    shots: int = 1
    cot: bool = False
    layout: str = SINGLE_PLOT
    seed: int = 0
    transport_mode: str = "replay"
    jobs: int = 1
    balanced: bool = True
    per_sample_choice: bool = False
    decimals: int = 2

    def __post_init__(self):
        if self.prompt_kind not in PROMPT_KINDS:
            raise ValueError(f"prompt_kind must be one of {PROMPT_KINDS}")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class PerSample:
    sample_id: str
    gold: str
    predicted: str
    digest: str


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: dict
    token_report: TokenReport
    per_sample: tuple[PerSample, ...]
    config: dict
    choice: dict | None = None
    extras: dict = field(default_factory=dict)


def sample_eval_set(
    pool: list[Window],
    cfg: DatasetConfig,
    shots: int,
    seed: int,
    balanced: bool = True,
) -> tuple[list[tuple[Window, str]], list[Window]]:
    """Seeded split into few-shot examples and a per-class-balanced test set.

    Examples never overlap the test set. Balanced mode assigns example slots
    round-robin over a seeded label order; unbalanced mode samples examples
    uniformly from the leftovers.
    """
    by_label: dict[str, list[Window]] = {label: [] for label in cfg.label_set}
    for w in pool:
        if w.label in by_label:
            by_label[w.label].append(w)
    need = cfg.test_per_class + shots
    for label in cfg.label_set:
        if len(by_label[label]) < need:
            raise InsufficientSamples(label, len(by_label[label]), need)

    rng = random.Random(seed)
    test: list[Window] = []
    leftovers: dict[str, list[Window]] = {}
    for label in cfg.label_set:
        group = sorted(by_label[label], key=lambda w: w.sample_id)
        rng.shuffle(group)
        test.extend(group[: cfg.test_per_class])
        leftovers[label] = group[cfg.test_per_class :]

    examples: list[tuple[Window, str]] = []
    if shots > 0:
        if balanced:
            label_order = list(cfg.label_set)
            rng.shuffle(label_order)
            for i in range(shots):
                label = label_order[i % len(label_order)]
                examples.append((leftovers[label].pop(0), label))
        else:
            flat = [(w, label) for label, ws in leftovers.items() for w in ws]
            flat.sort(key=lambda pair: pair[0].sample_id)
            examples = rng.sample(flat, shots)
    test.sort(key=lambda w: w.sample_id)
    return examples, test


def run_eval(
    cfg: EvalConfig,
    pool: list[Window],
    client: MllmClient,
    catalog: visgen.VizCatalog | None = None,
    tokenizer: Tokenizer | None = None,
) -> EvalReport:
    """Evaluate one configuration over the pool; returns the aggregated report.

    Per-sample label-extraction failures count as wrong predictions (bucketed
    as "(unparsed)") rather than aborting the run. Output is deterministic:
    samples are processed from a seeded split and re-sorted by id, so the
    report does not depend on ``jobs``.
    """
    catalog = catalog or visgen.load_catalog()
    tok = tokenizer or default_tokenizer()
    examples, test = sample_eval_set(pool, cfg.dataset, cfg.shots, cfg.seed, cfg.balanced)
    task = cfg.dataset.task_spec()
    style = RenderStyle(layout=cfg.layout)

    choice = None
    if cfg.prompt_kind in ("visual", "text_only"):
        representative = examples[0][0] if examples else test[0]
        cache = None if cfg.per_sample_choice else visgen.ChoiceCache()
        choice = visgen.generate(
            representative, task, client, catalog,
            dataset_id=cfg.dataset.id, cache=cache, style=style,
        )

    def build_prompt(window: Window) -> PromptMessage:
        if cfg.prompt_kind == "visual":
            prompt = build_visual_prompt(
                examples, window, catalog.get(choice.selected), task, style
            )
        else:
            prompt = build_text_prompt(
                examples, window, task,
                parity_features=FeatureSerialization(choice.selected) if choice else None,
                decimals=cfg.decimals, tokenizer=tok,
            )
        return apply_cot(prompt) if cfg.cot else prompt

    def evaluate(window: Window) -> tuple[PerSample, TokenReport]:
        if cfg.prompt_kind == "text_summarized":
            stage1 = build_summarization_prompt(window, task, decimals=cfg.decimals)
            summary = client.send(client.request(stage1))
            try:
                prompt = build_summary_classification_prompt(summary.text, task)
            except EmptySummary:
                report = token_report([stage1], tok)
                return PerSample(window.sample_id, window.label, UNPARSED, ""), report
            if cfg.cot:
                prompt = apply_cot(prompt)
            tokens = token_report([stage1, prompt], tok)
        else:
            prompt = build_prompt(window)
            tokens = token_report(prompt, tok)
        request = client.request(prompt)
        response = client.send(request)
        try:
            predicted, _ = extract_label(response.text, task.label_set)
        except (NoLabelFound, AmbiguousLabel):
            predicted = UNPARSED
        return PerSample(window.sample_id, window.label, predicted, request.request_digest), tokens

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool_exec:
            results = list(pool_exec.map(evaluate, test))
    else:
        results = [evaluate(w) for w in test]

    results.sort(key=lambda pair: pair[0].sample_id)
    per_sample = tuple(r[0] for r in results)

    confusion: dict[str, dict[str, int]] = {
        gold: {pred: 0 for pred in (*task.label_set, UNPARSED)} for gold in task.label_set
    }
    correct = 0
    for ps in per_sample:
        confusion[ps.gold][ps.predicted] += 1
        if ps.gold == ps.predicted:
            correct += 1
    accuracy = correct / len(per_sample)

    text_tokens = sum(r[1].text_tokens for r in results)
    image_tokens = sum(r[1].image_tokens for r in results)
    aggregated = TokenReport(
        text_tokens=text_tokens,
        image_tokens=image_tokens,
        total=text_tokens + image_tokens,
        per_part=(),
        approximate=any(r[1].approximate for r in results),
        feature_fallback=any(r[1].feature_fallback for r in results),
    )

    extras = {}
    if cfg.prompt_kind == "visual":
        # text-equivalent cost of the same windows, for the reduction factor
        text_total = 0
        for window in test:
            text_prompt = build_text_prompt(
                examples, window, task,
                parity_features=FeatureSerialization(choice.selected) if choice else None,
                decimals=cfg.decimals, tokenizer=tok,
            )
            text_total += token_report(text_prompt, tok).total
        extras["text_equivalent_tokens"] = text_total
        if aggregated.total > 0:
            extras["token_reduction_factor"] = round(text_total / aggregated.total, 2)

    return EvalReport(
        accuracy=accuracy,
        confusion=confusion,
        token_report=aggregated,
        per_sample=per_sample,
        config={
            "dataset": cfg.dataset.id,
            "prompt_kind": cfg.prompt_kind,
            "shots": cfg.shots,
            "cot": cfg.cot,
            "layout": cfg.layout,
            "seed": cfg.seed,
            "transport_mode": cfg.transport_mode,
            "balanced": cfg.balanced,
            "decimals": cfg.decimals,
        },
        choice=(
            {
                "filtered": list(choice.filtered),
                "selected": choice.selected,
                "selection_transcript_digest": choice.selection_transcript_digest,
            }
            if choice
            else None
        ),
        extras=extras,
    )


def report_to_json(report: EvalReport) -> str:
    """Deterministic JSON serialization (byte-stable across runs and jobs)."""
    payload = {
        "accuracy": report.accuracy,
        "confusion": report.confusion,
        "tokens": {
            "text_tokens": report.token_report.text_tokens,
            "image_tokens": report.token_report.image_tokens,
            "total": report.token_report.total,
            "approximate": report.token_report.approximate,
            "feature_fallback": report.token_report.feature_fallback,
        },
        "per_sample": [
            {"id": ps.sample_id, "gold": ps.gold, "predicted": ps.predicted, "digest": ps.digest}
            for ps in report.per_sample
        ],
        "config": report.config,
        "choice": report.choice,
        "extras": report.extras,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_to_markdown(report: EvalReport) -> str:
    lines = [
        f"# Evaluation report: {report.config['dataset']}",
        "",
        f"- prompt kind: {report.config['prompt_kind']}, shots: {report.config['shots']}, "
        f"cot: {report.config['cot']}, seed: {report.config['seed']}",
    ]
    if report.choice:
        lines.append(
            f"- visualization: {report.choice['selected']} "
            f"(filtered: {', '.join(report.choice['filtered'])})"
        )
    lines += [
        "",
        "| metric | value |",
        "| --- | --- |",
        f"| accuracy | {report.accuracy:.3f} |",
        f"| samples | {len(report.per_sample)} |",
        "",
        "| tokens | value |",
        "| --- | --- |",
        f"| text | {report.token_report.text_tokens} |",
        f"| image | {report.token_report.image_tokens} |",
        f"| total | {report.token_report.total} |",
    ]
    if "text_equivalent_tokens" in report.extras:
        lines.append(f"| text-only equivalent | {report.extras['text_equivalent_tokens']} |")
    if "token_reduction_factor" in report.extras:
        lines.append(f"| reduction factor | {report.extras['token_reduction_factor']}x |")
    lines.append("")
    return "\n".join(lines)


def write_report(report: EvalReport, run_dir: str | Path) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "report.json").write_text(report_to_json(report), encoding="utf-8")
    (run_dir / "report.md").write_text(report_to_markdown(report), encoding="utf-8")
    if report.choice is not None:
        (run_dir / "choices.json").write_text(
            json.dumps(report.choice, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return run_dir / "report.json"

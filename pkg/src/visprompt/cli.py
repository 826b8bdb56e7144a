"""Command-line entry point.

Subcommands: visualize, build-prompt, generate, eval, motivation,
token-report. Exit codes: 0 success, 2 usage/validation error, 3 replay
transcript miss, 4 missing live credentials.
"""

from __future__ import annotations

import json
import platform
import sys
import uuid
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np
import scipy

from . import __version__, visgen
from .errors import AuthMissing, MissingTranscript, VisPromptError
from .eval_harness import (
    EvalConfig,
    get_dataset,
    plot_motivation,
    registry,
    run_eval,
    run_motivation_study,
    synthetic_pool,
    write_report,
)
from .mllm_client import MllmClient, TranscriptStore, request_to_wire
from .prompt_builder import (
    FeatureSerialization,
    TaskSpec,
    build_text_prompt,
    build_visual_prompt,
    token_report,
)
from .render import SINGLE_PLOT, SUBPLOTS, TOOL_IDS, RenderStyle, encode_png, render
from .signal_core import Window, read_csv_with_sidecar
from .tokenizer import Tokenizer, default_tokenizer

EXIT_USAGE = 2
EXIT_REPLAY_MISS = 3
EXIT_AUTH = 4


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map package errors onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MissingTranscript as exc:
            _fail(str(exc), EXIT_REPLAY_MISS)
        except AuthMissing as exc:
            _fail(str(exc), EXIT_AUTH)
        except VisPromptError as exc:
            _fail(str(exc), EXIT_USAGE)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _write_manifest(out_dir: Path, config: dict, seed: int | None, mode: str | None,
                    started: str, run_id: str) -> None:
    manifest = {
        "run_id": run_id,
        "config": config,
        "seed": seed,
        "transport_mode": mode,
        "versions": {
            "visprompt": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _make_client(mode: str, store_path: str | None, jobs: int = 4) -> MllmClient:
    store = TranscriptStore(store_path) if store_path else None
    if mode in ("replay", "record") and store is None:
        raise click.UsageError(f"--mode {mode} requires --store PATH")
    return MllmClient(mode=mode, store=store, max_concurrency=jobs)


def _load_window(csv_path: str) -> Window:
    series = read_csv_with_sidecar(csv_path)
    return Window(series=series, start_index=0, duration_s=series.duration_s,
                  sample_id=Path(csv_path).stem)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Sensor time-series to visual prompts for multimodal LLMs."""


# ---------------------------------------------------------------------------
# visualize
# ---------------------------------------------------------------------------


@main.command()
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--tool", "tool_id", default="raw_waveform", show_default=True,
              help=f"Tool id or 'all'. Valid: {', '.join(TOOL_IDS)}")
@click.option("--layout", type=click.Choice([SINGLE_PLOT, SUBPLOTS]), default=SINGLE_PLOT,
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="plots",
              show_default=True)
@click.option("--title", default="", help="Plot title (defaults to the window label, if any).")
@click.option("--allow-mismatch", is_flag=True,
              help="Render physiological tools on other modalities.")
@_guard
def visualize(input_csv, tool_id, layout, out_dir, title, allow_mismatch) -> None:
    """Render catalog visualizations of a CSV+sidecar recording to PNG files."""
    if tool_id != "all" and tool_id not in TOOL_IDS:
        raise click.UsageError(f"unknown tool {tool_id!r}; valid ids: {', '.join(TOOL_IDS)} or 'all'")
    window = _load_window(input_csv)
    catalog = visgen.load_catalog()
    style = RenderStyle(layout=layout)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = list(TOOL_IDS) if tool_id == "all" else [tool_id]
    written = 0
    for tid in ids:
        tool = catalog.get(tid)
        try:
            image = render(window, tool, title or (window.label or ""), style,
                           allow_modality_mismatch=allow_mismatch)
        except VisPromptError as exc:
            if tool_id == "all":
                click.echo(f"skipping {tid}: {exc}", err=True)
                continue
            raise
        name = f"{window.series.modality.value}_{window.sample_id}_{tid}.png"
        (out / name).write_bytes(encode_png(image))
        written += 1
    click.echo(f"wrote {written} plot(s) to {out}")


# ---------------------------------------------------------------------------
# build-prompt
# ---------------------------------------------------------------------------


def _task_from_options(dataset, task_description, data_description, labels) -> TaskSpec:
    if dataset:
        return get_dataset(dataset).task_spec()
    if not (task_description and data_description and labels):
        raise click.UsageError(
            "provide --dataset or all of --task-description/--data-description/--labels"
        )
    return TaskSpec(
        task_description=task_description,
        data_description=data_description,
        label_set=tuple(s.strip() for s in labels.split(",")),
    )


@main.command("build-prompt")
@click.option("--target", "target_csv", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--example", "example_specs", multiple=True, metavar="CSV:LABEL",
              help="Labeled example recording; repeatable.")
@click.option("--kind", type=click.Choice(["visual", "text"]), default="visual", show_default=True)
@click.option("--tool", "tool_id", default="raw_waveform", show_default=True)
@click.option("--dataset", default=None, help="Registry dataset id supplying the task context.")
@click.option("--task-description", default=None)
@click.option("--data-description", default=None)
@click.option("--labels", default=None, help="Comma-separated label set.")
@click.option("--layout", type=click.Choice([SINGLE_PLOT, SUBPLOTS]), default=SINGLE_PLOT)
@click.option("--vocab-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Optional BPE vocabulary (.tiktoken format) for exact token counts.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="prompt_out",
              show_default=True)
@_guard
def build_prompt(target_csv, example_specs, kind, tool_id, dataset, task_description,
                 data_description, labels, layout, vocab_file, out_dir) -> None:
    """Build a visual or text prompt from recordings and report its token cost."""
    if tool_id not in TOOL_IDS:
        raise click.UsageError(f"unknown tool {tool_id!r}; valid ids: {', '.join(TOOL_IDS)}")
    task = _task_from_options(dataset, task_description, data_description, labels)
    target = _load_window(target_csv)
    examples = []
    for spec in example_specs:
        path, sep, label = spec.rpartition(":")
        if not sep or not path:
            raise click.UsageError(f"--example must be CSV:LABEL, got {spec!r}")
        examples.append((_load_window(path), label))
    catalog = visgen.load_catalog()
    style = RenderStyle(layout=layout)
    if kind == "visual":
        prompt = build_visual_prompt(examples, target, catalog.get(tool_id), task, style)
    else:
        prompt = build_text_prompt(examples, target, task,
                                   parity_features=FeatureSerialization(tool_id))
    tokenizer = Tokenizer.from_vocab_file(vocab_file) if vocab_file else default_tokenizer()
    report = token_report(prompt, tokenizer)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wire = request_to_wire(
        MllmClient.scripted(lambda r: "").request(prompt)
    )
    (out / "prompt.json").write_text(json.dumps(wire, indent=2) + "\n", encoding="utf-8")
    (out / "tokens.json").write_text(
        json.dumps(
            {
                "text_tokens": report.text_tokens,
                "image_tokens": report.image_tokens,
                "total": report.total,
                "approximate": report.approximate,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    click.echo(
        f"{kind} prompt: text={report.text_tokens} image={report.image_tokens} "
        f"total={report.total} tokens -> {out}"
    )


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


@main.command()
@click.option("--input", "input_csv", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", required=True, help="Registry dataset id supplying the task context.")
@click.option("--mode", type=click.Choice(["live", "record", "replay"]), default="replay",
              show_default=True)
@click.option("--store", "store_path", type=click.Path(), default=None,
              help="Transcript store path (required for record/replay).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="visgen_out",
              show_default=True)
@_guard
def generate(input_csv, dataset, mode, store_path, out_dir) -> None:
    """Run the two-stage visualization generator on one recording."""
    cfg = get_dataset(dataset)
    window = _load_window(input_csv)
    client = _make_client(mode, store_path)
    catalog = visgen.load_catalog()
    choice = visgen.generate(window, cfg.task_spec(), client, catalog, dataset_id=cfg.id)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "choice.json").write_text(
        json.dumps(
            {
                "dataset": cfg.id,
                "filtered": list(choice.filtered),
                "selected": choice.selected,
                "selection_transcript_digest": choice.selection_transcript_digest,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    click.echo(f"selected {choice.selected} from {list(choice.filtered)}")


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@main.command("eval")
@click.option("--dataset", required=True)
@click.option("--prompt", "prompt_kind", type=click.Choice(["visual", "text", "summarized"]),
              default="visual", show_default=True)
@click.option("--shots", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--cot", is_flag=True)
@click.option("--layout", type=click.Choice([SINGLE_PLOT, SUBPLOTS]), default=SINGLE_PLOT)
@click.option("--mode", type=click.Choice(["live", "record", "replay"]), default="replay",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--store", "store_path", type=click.Path(), default=None)
@click.option("--data-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory of CSV+sidecar samples; defaults to synthetic data.")
@click.option("--per-class", "per_class", type=int, default=None,
              help="Synthetic pool size per class (default: test-per-class + shots).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="results",
              show_default=True)
@click.option("--json", "json_out", is_flag=True, help="Print the report JSON to stdout.")
@_guard
def eval_cmd(dataset, prompt_kind, shots, cot, layout, mode, seed, jobs, store_path,
             data_dir, per_class, out_dir, json_out) -> None:
    """Run a few-shot evaluation and write report files."""
    cfg = get_dataset(dataset)
    kind = {"visual": "visual", "text": "text_only", "summarized": "text_summarized"}[prompt_kind]
    eval_cfg = EvalConfig(
        dataset=cfg, prompt_kind=kind, shots=shots, cot=cot, layout=layout,
        seed=seed, transport_mode=mode, jobs=jobs,
    )
    if data_dir:
        pool = []
        for csv_path in sorted(Path(data_dir).glob("*.csv")):
            pool.append(_load_window(str(csv_path)))
    else:
        pool = synthetic_pool(cfg, per_class or (cfg.test_per_class + shots), seed=seed)
    client = _make_client(mode, store_path, jobs)
    started = datetime.now(timezone.utc).isoformat()
    report = run_eval(eval_cfg, pool, client)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_report(report, out)
    _write_manifest(out, report.config, seed, mode, started, uuid.uuid4().hex[:12])
    if json_out:
        click.echo((out / "report.json").read_text(), nl=False)
    click.echo(
        f"accuracy {report.accuracy:.3f} | tokens text={report.token_report.text_tokens} "
        f"image={report.token_report.image_tokens} total={report.token_report.total} "
        f"| n={len(report.per_sample)} -> {out}"
    )


# ---------------------------------------------------------------------------
# motivation
# ---------------------------------------------------------------------------


@main.command()
@click.option("--lengths", default="50,100,200,500", show_default=True,
              help="Comma-separated sequence lengths.")
@click.option("--trials", type=click.IntRange(min=1), default=30, show_default=True)
@click.option("--mode", type=click.Choice(["live", "record", "replay"]), default="replay",
              show_default=True)
@click.option("--store", "store_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="motivation_out",
              show_default=True)
@_guard
def motivation(lengths, trials, mode, store_path, seed, out_dir) -> None:
    """Run the length-scaling study for text prompts."""
    try:
        length_list = [int(s) for s in lengths.split(",") if s.strip()]
    except ValueError:
        raise click.UsageError(f"--lengths must be comma-separated integers, got {lengths!r}")
    client = _make_client(mode, store_path)
    started = datetime.now(timezone.utc).isoformat()
    rows = run_motivation_study(length_list, trials, client, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = [
        {
            "length": r.length,
            "mean_error_rate": r.mean_error_rate,
            "classification_accuracy": r.classification_accuracy,
            "n_trials": r.n_trials,
        }
        for r in rows
    ]
    (out / "motivation.json").write_text(json.dumps(table, indent=2) + "\n", encoding="utf-8")
    (out / "motivation.png").write_bytes(plot_motivation(rows))
    _write_manifest(out, {"lengths": length_list, "trials": trials}, seed, mode, started,
                    uuid.uuid4().hex[:12])
    for r in rows:
        click.echo(
            f"length {r.length}: mean rel. error {r.mean_error_rate:.3f}, "
            f"classification accuracy {r.classification_accuracy:.3f}"
        )


# ---------------------------------------------------------------------------
# token-report
# ---------------------------------------------------------------------------


@main.command("token-report")
@click.option("--dataset", required=True)
@click.option("--shots", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--tool", "tool_id", default="raw_waveform", show_default=True,
              help="Visualization assumed for the visual prompt.")
@click.option("--json", "json_out", is_flag=True)
@_guard
def token_report_cmd(dataset, shots, tool_id, json_out) -> None:
    """Compare text vs visual token cost for a dataset's geometry (no MLLM calls)."""
    cfg = get_dataset(dataset)
    if tool_id not in TOOL_IDS:
        raise click.UsageError(f"unknown tool {tool_id!r}; valid ids: {', '.join(TOOL_IDS)}")
    pool = synthetic_pool(cfg, per_class=max(1, shots) + 1, seed=0)
    target = pool[0]
    labels = list(cfg.label_set)
    examples = []
    for i in range(shots):
        label = labels[i % len(labels)]
        examples.append((next(w for w in pool if w.label == label and w is not target), label))
    task = cfg.task_spec()
    catalog = visgen.load_catalog()
    visual = build_visual_prompt(examples, target, catalog.get(tool_id), task,
                                 allow_modality_mismatch=True)
    text = build_text_prompt(examples, target, task)
    visual_report = token_report(visual)
    text_report = token_report(text)
    factor = text_report.total / visual_report.total if visual_report.total else float("inf")
    payload = {
        "dataset": cfg.id,
        "shots": shots,
        "tool": tool_id,
        "text_prompt_tokens": text_report.total,
        "visual_prompt_tokens": visual_report.total,
        "visual_image_tokens": visual_report.image_tokens,
        "reduction_factor": round(factor, 2),
    }
    if json_out:
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(
            f"{cfg.id} ({shots}-shot): text={text_report.total} tokens, "
            f"visual={visual_report.total} tokens "
            f"(images {visual_report.image_tokens}), reduction {factor:.1f}x"
        )


@main.command("datasets")
def datasets_cmd() -> None:
    """List registry datasets."""
    for cfg in registry():
        click.echo(
            f"{cfg.id}: {cfg.modality.value}, {cfg.sampling_rate_hz:g} Hz, "
            f"{cfg.window_s:g} s, {cfg.channels} ch, {len(cfg.label_set)} labels, "
            f"{cfg.test_per_class}/class"
        )


if __name__ == "__main__":
    main()

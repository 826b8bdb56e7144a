"""Two-stage visualization generator.

Stage one (tool filtering) asks the model to shortlist catalog tools from
their descriptions plus task/data context, answering as a JSON array. Stage
two (selection) renders the shortlisted tools on a representative window and
asks the model to pick the single most informative image. Choices are cached
per (dataset, task) by default since selections within a dataset are stable;
per-sample selection stays available for callers that want it.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from . import dsp
from .errors import (
    AllIdsUnknown,
    EmptyCatalog,
    FilterFailed,
    IncompatibleModality,
    NoJsonArray,
    SelectionFailed,
    TooFewCandidates,
)
from .mllm_client import ChatResponse, MllmClient
from .prompt_builder import PromptMessage, TaskSpec, TextPart, ImagePart, render_template
from .render import PlotImage, RenderStyle, VizTool, render
from .signal_core import Window

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"

# total attempts per stage: the initial request plus one retry that re-sends
# with a format reminder appended
MAX_ATTEMPTS = 2

FILTER_REMINDER = (
    'Reminder: respond with only a JSON array of tool ids from the list, '
    'for example ["raw_waveform", "spectrogram"].'
)
SELECTION_REMINDER = (
    'Reminder: end your response with a single line formatted exactly as '
    '"Selection: <tool_id>".'
)


@dataclass(frozen=True)
class Demonstration:
    task_description: str
    data_description: str
    chosen_tools: tuple[str, ...]
    rationale: str


@dataclass(frozen=True)
class VizCatalog:
    tools: tuple[VizTool, ...]
    demonstrations: tuple[Demonstration, ...] = ()

    def __post_init__(self):
        ids = [t.id for t in self.tools]
        if not ids:
            raise EmptyCatalog("catalog has no tools")
        if len(set(ids)) != len(ids):
            raise ValueError("catalog tool ids must be unique")
        known = set(ids)
        for demo in self.demonstrations:
            unknown = set(demo.chosen_tools) - known
            if unknown:
                raise ValueError(f"demonstration references unknown tools {sorted(unknown)}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.tools)

    def get(self, tool_id: str) -> VizTool:
        for tool in self.tools:
            if tool.id == tool_id:
                return tool
        raise KeyError(f"tool {tool_id!r} not in catalog")


def load_catalog(path: str | Path | None = None) -> VizCatalog:
    """Load the tool catalog + demonstrations (default: packaged data file)."""
    raw = json.loads(Path(path or DATA_DIR / "catalog.json").read_text(encoding="utf-8"))
    tools = []
    for entry in raw["tools"]:
        params = None
        if "params" in entry:
            params = dsp.SpectrogramParams(**entry["params"])
        tools.append(VizTool(id=entry["id"], description=entry["description"], params=params))
    demos = tuple(
        Demonstration(
            task_description=d["task_description"],
            data_description=d["data_description"],
            chosen_tools=tuple(d["chosen_tools"]),
            rationale=d["rationale"],
        )
        for d in raw.get("demonstrations", [])
    )
    return VizCatalog(tools=tuple(tools), demonstrations=demos)


@dataclass(frozen=True)
class VisualizationChoice:
    filtered: tuple[str, ...]
    selected: str
    selection_transcript_digest: str = ""

    def __post_init__(self):
        object.__setattr__(self, "filtered", tuple(self.filtered))
        if not self.filtered:
            raise ValueError("filtered tool list must be non-empty")
        if self.selected not in self.filtered:
            raise ValueError(f"selected {self.selected!r} not in filtered {self.filtered}")


# ---------------------------------------------------------------------------
# prompts and parsing
# ---------------------------------------------------------------------------


def build_filter_prompt(
    catalog: VizCatalog, task: TaskSpec, template_dir: Path | None = None
) -> PromptMessage:
    """Text-only tool-filtering prompt: full catalog, context, demonstrations."""
    if not catalog.tools:
        raise EmptyCatalog("catalog has no tools")
    tool_list = "\n".join(f"- {t.id}: {t.description}" for t in catalog.tools)
    demos = ""
    if catalog.demonstrations:
        blocks = []
        for d in catalog.demonstrations:
            chosen = json.dumps(list(d.chosen_tools))
            blocks.append(
                f"Task: {d.task_description}\nData collection: {d.data_description}\n"
                f"Chosen tools: {chosen}\nRationale: {d.rationale}"
            )
        demos = "Demonstrations of tool choices for other tasks:\n\n" + "\n\n".join(blocks) + "\n\n"
    text = render_template(
        "filter_instruction.txt",
        {
            "task_description": task.task_description,
            "data_description": task.data_description,
            "tool_list": tool_list,
            "demonstrations_block": demos,
        },
        template_dir,
    )
    return PromptMessage(parts=(TextPart(text),))


_ARRAY_RE = re.compile(r"\[[^\[\]]*\]", re.DOTALL)


def parse_tool_list(response_text: str, catalog: VizCatalog) -> list[str]:
    """Extract tool ids from the first JSON array in a response.

    Tolerates code fences and surrounding prose; unknown ids are dropped with
    a warning and duplicates removed order-preservingly.
    """
    array = None
    for m in _ARRAY_RE.finditer(response_text or ""):
        try:
            candidate = json.loads(m.group())
        except json.JSONDecodeError:
            continue
        if isinstance(candidate, list):
            array = candidate
            break
    if array is None:
        raise NoJsonArray("response contains no parseable JSON array")
    known = set(catalog.ids)
    out: list[str] = []
    for item in array:
        tool_id = str(item).strip()
        if tool_id not in known:
            logger.warning("dropping unknown tool id %r from filter response", tool_id)
            continue
        if tool_id not in out:
            out.append(tool_id)
    if not out:
        raise AllIdsUnknown(f"no valid tool ids among {array!r}")
    return out


def build_selection_prompt(
    candidates: list[tuple[VizTool, PlotImage]],
    task: TaskSpec,
    template_dir: Path | None = None,
) -> PromptMessage:
    """Leading context, one image per candidate, closing instruction."""
    if len(candidates) < 2:
        raise TooFewCandidates(f"selection needs >= 2 candidates, got {len(candidates)}")
    candidate_list = ", ".join(tool.id for tool, _ in candidates)
    header = render_template(
        "selection_header.txt", {"n_candidates": str(len(candidates))}, template_dir
    )
    closing = render_template(
        "selection_instruction.txt",
        {
            "task_description": task.task_description,
            "data_description": task.data_description,
            "candidate_list": candidate_list,
        },
        template_dir,
    )
    parts = [TextPart(header)]
    parts += [ImagePart(image) for _, image in candidates]
    parts.append(TextPart(closing))
    return PromptMessage(parts=tuple(parts))


_SELECTION_LINE = re.compile(r"^\s*selection\s*[:\-]\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


def parse_selection(response_text: str, candidate_ids: list[str]) -> str:
    matches = _SELECTION_LINE.findall(response_text or "")
    if matches:
        cand = matches[-1].strip().strip("\"'`.").strip()
        for cid in candidate_ids:
            if cand.lower() == cid.lower():
                return cid
    mentioned = [
        cid
        for cid in candidate_ids
        if re.search(r"(?<![A-Za-z0-9_])" + re.escape(cid) + r"(?![A-Za-z0-9_])",
                     response_text or "", re.IGNORECASE)
    ]
    if len(mentioned) == 1:
        return mentioned[0]
    raise SelectionFailed(f"could not extract a unique candidate from {response_text!r:.120}")


# ---------------------------------------------------------------------------
# generation with caching
# ---------------------------------------------------------------------------


class ChoiceCache:
    """Concurrent (dataset, task) -> choice map with one in-flight compute per key."""

    def __init__(self):
        self._values: dict = {}
        self._locks: dict = {}
        self._guard = threading.Lock()

    def get_or_compute(self, key, compute):
        with self._guard:
            if key in self._values:
                return self._values[key]
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            with self._guard:
                if key in self._values:
                    return self._values[key]
            value = compute()
            with self._guard:
                self._values[key] = value
            return value

    def items(self):
        with self._guard:
            return list(self._values.items())


def task_digest(task: TaskSpec) -> str:
    blob = json.dumps(
        {
            "task": task.task_description,
            "data": task.data_description,
            "labels": list(task.label_set),
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _with_reminder(prompt: PromptMessage, reminder: str) -> PromptMessage:
    parts = list(prompt.parts)
    for i in range(len(parts) - 1, -1, -1):
        if isinstance(parts[i], TextPart):
            parts[i] = TextPart(parts[i].text + "\n\n" + reminder)
            break
    return PromptMessage(parts=tuple(parts), role=prompt.role, meta=dict(prompt.meta))


def generate(
    window: Window,
    task: TaskSpec,
    client: MllmClient,
    catalog: VizCatalog,
    dataset_id: str = "default",
    cache: ChoiceCache | None = None,
    style: RenderStyle = RenderStyle(),
    template_dir: Path | None = None,
) -> VisualizationChoice:
    """Run filtering then selection for one window's task.

    With a cache, the first call per (dataset_id, task) does the two client
    calls and later calls reuse the stored choice; pass ``cache=None`` for
    per-sample selection.
    """

    def compute() -> VisualizationChoice:
        filtered = _run_filter(task, client, catalog, template_dir)
        if len(filtered) == 1:
            return VisualizationChoice(filtered=tuple(filtered), selected=filtered[0])
        candidates = []
        for tool_id in filtered:
            tool = catalog.get(tool_id)
            try:
                image = render(window, tool, "", style, allow_modality_mismatch=True)
            except IncompatibleModality as exc:
                logger.warning("skipping candidate %s: %s", tool_id, exc)
                continue
            candidates.append((tool, image))
        if not candidates:
            raise SelectionFailed("no filtered tool could render this window")
        if len(candidates) == 1:
            return VisualizationChoice(filtered=tuple(filtered), selected=candidates[0][0].id)
        selected, digest = _run_selection(candidates, task, client, template_dir)
        return VisualizationChoice(
            filtered=tuple(filtered), selected=selected, selection_transcript_digest=digest
        )

    if cache is None:
        return compute()
    return cache.get_or_compute((dataset_id, task_digest(task)), compute)


def _run_filter(task, client, catalog, template_dir) -> list[str]:
    prompt = build_filter_prompt(catalog, task, template_dir)
    last_error: Exception | None = None
    for attempt in range(MAX_ATTEMPTS):
        request = client.request(prompt)
        response: ChatResponse = client.send(request)
        try:
            return parse_tool_list(response.text, catalog)
        except (NoJsonArray, AllIdsUnknown) as exc:
            last_error = exc
            prompt = _with_reminder(prompt, FILTER_REMINDER)
    raise FilterFailed(f"unparseable filter response after {MAX_ATTEMPTS} attempts: {last_error}")


def _run_selection(candidates, task, client, template_dir) -> tuple[str, str]:
    prompt = build_selection_prompt(candidates, task, template_dir)
    candidate_ids = [tool.id for tool, _ in candidates]
    last_error: Exception | None = None
    for attempt in range(MAX_ATTEMPTS):
        request = client.request(prompt)
        response = client.send(request)
        try:
            return parse_selection(response.text, candidate_ids), request.request_digest
        except SelectionFailed as exc:
            last_error = exc
            prompt = _with_reminder(prompt, SELECTION_REMINDER)
    raise SelectionFailed(f"unparseable selection response after {MAX_ATTEMPTS} attempts: {last_error}")

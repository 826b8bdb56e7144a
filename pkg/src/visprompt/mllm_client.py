"""Transport-agnostic multimodal chat client with record/replay.

Requests are keyed by a canonical digest (model, sampling settings, and the
full interleaved text/image content, images hashed by pixel bytes). Replay
mode answers exclusively from a persisted transcript store and fails loudly
on a miss, so evaluation pipelines stay offline-deterministic; record mode
sends live and persists every response for later replay.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Callable

import requests

from .errors import AmbiguousLabel, AuthMissing, HttpError, MissingTranscript, NoLabelFound
from .prompt_builder import ImagePart, PromptMessage, TextPart
from .render import encode_png

ENV_API_BASE = "VISPROMPT_API_BASE"
ENV_API_KEY = "VISPROMPT_API_KEY"
ENV_MODEL = "VISPROMPT_MODEL"

LIVE, RECORD, REPLAY = "live", "record", "replay"

# callable (request) -> (text, usage or None); stands in for HTTP in tests
Transport = Callable[["ChatRequest"], tuple[str, tuple[int, int] | None]]


@dataclass(frozen=True)
class ChatRequest:
    model_name: str
    messages: tuple[PromptMessage, ...]
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    @cached_property
    def request_digest(self) -> str:
        return canonical_digest(self)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: tuple[int, int] | None
    transport: str
    empty_ok: bool = False

    def __post_init__(self):
        if not self.text and not self.empty_ok:
            raise ValueError("empty response text without the empty-response flag")


def canonical_digest(request: ChatRequest) -> str:
    """Stable hash of the semantic request content.

    Field order, process, and machine do not affect it; any text change,
    pixel change, or part reordering does.
    """
    canon_messages = []
    for msg in request.messages:
        parts = []
        for part in msg.parts:
            if isinstance(part, TextPart):
                parts.append(["text", part.text])
            else:
                img = part.image
                parts.append(
                    [
                        "image",
                        img.width_px,
                        img.height_px,
                        hashlib.sha256(img.rgb).hexdigest(),
                    ]
                )
        canon_messages.append({"role": msg.role, "parts": parts})
    canon = {
        "model": request.model_name,
        "temperature": request.temperature,
        "max_output_tokens": request.max_output_tokens,
        "messages": canon_messages,
    }
    blob = json.dumps(canon, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class TranscriptStore:
    """Append-only digest -> response map persisted as JSON lines.

    The first record wins for a given digest; appends of known digests are
    no-ops, so re-recording a run never rewrites history.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._records.setdefault(rec["digest"], rec)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, digest: str) -> bool:
        return digest in self._records

    def get(self, digest: str) -> dict | None:
        return self._records.get(digest)

    def put(self, digest: str, model: str, response_text: str, usage=None) -> None:
        with self._lock:
            if digest in self._records:
                return
            rec = {
                "digest": digest,
                "model": model,
                "response_text": response_text,
                "usage": list(usage) if usage else None,
                "recorded_at": datetime.now(timezone.utc).isoformat(),
            }
            self._records[digest] = rec
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _message_to_wire(msg: PromptMessage) -> dict:
    content = []
    for part in msg.parts:
        if isinstance(part, TextPart):
            content.append({"type": "text", "text": part.text})
        else:
            b64 = base64.b64encode(encode_png(part.image)).decode("ascii")
            content.append(
                {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}
            )
    return {"role": msg.role, "content": content}


def request_to_wire(request: ChatRequest) -> dict:
    """OpenAI-compatible chat-completions payload with data-URL PNG images."""
    return {
        "model": request.model_name,
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
        "messages": [_message_to_wire(m) for m in request.messages],
    }


class MllmClient:
    """Chat client with live / record / replay modes.

    Live and record need an endpoint plus credential (constructor arguments
    or the VISPROMPT_API_BASE / VISPROMPT_API_KEY / VISPROMPT_MODEL
    environment variables) unless a ``transport`` callable is injected.
    Thread-safe; in-flight requests are capped by ``max_concurrency``.
    """

    BACKOFF_BASE_S = 1.0
    BACKOFF_FACTOR = 2.0
    MAX_TRIES = 5

    def __init__(
        self,
        mode: str = REPLAY,
        store: TranscriptStore | None = None,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        transport: Transport | None = None,
        max_concurrency: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        timeout_s: float = 120.0,
    ):
        if mode not in (LIVE, RECORD, REPLAY):
            raise ValueError(f"mode must be one of {LIVE}/{RECORD}/{REPLAY}")
        if mode in (REPLAY, RECORD) and store is None:
            raise ValueError(f"{mode} mode requires a transcript store")
        self.mode = mode
        self.store = store
        self.endpoint = endpoint or os.environ.get(ENV_API_BASE)
        self.api_key = api_key or os.environ.get(ENV_API_KEY)
        self.model = model or os.environ.get(ENV_MODEL) or "gpt-4o"
        self.transport = transport
        self.calls = 0
        self._sleep = sleep
        self._timeout_s = timeout_s
        self._sem = threading.Semaphore(max_concurrency)
        self._count_lock = threading.Lock()

    @classmethod
    def scripted(cls, fn: Callable[[ChatRequest], str], **kwargs) -> "MllmClient":
        """A live-mode client whose transport is a plain function (testing)."""
        kwargs.setdefault("mode", LIVE)
        return cls(transport=lambda req: (fn(req), None), **kwargs)

    def request(self, messages, temperature: float = 0.0, max_output_tokens: int = 1024) -> ChatRequest:
        msgs = (messages,) if isinstance(messages, PromptMessage) else tuple(messages)
        return ChatRequest(
            model_name=self.model,
            messages=msgs,
            temperature=temperature,
            max_output_tokens=max_output_tokens,
        )

    def send(self, request: ChatRequest, mode: str | None = None) -> ChatResponse:
        mode = mode or self.mode
        digest = request.request_digest
        if mode == REPLAY:
            rec = self.store.get(digest) if self.store else None
            if rec is None:
                raise MissingTranscript(digest)
            with self._count_lock:
                self.calls += 1
            usage = tuple(rec["usage"]) if rec.get("usage") else None
            return ChatResponse(
                text=rec["response_text"], usage=usage, transport=REPLAY,
                empty_ok=not rec["response_text"],
            )
        with self._sem:
            text, usage = self._call_live(request)
        with self._count_lock:
            self.calls += 1
        if mode == RECORD:
            self.store.put(digest, request.model_name, text, usage)
        return ChatResponse(text=text, usage=usage, transport=LIVE, empty_ok=not text)

    def _call_live(self, request: ChatRequest) -> tuple[str, tuple[int, int] | None]:
        if self.transport is not None:
            return self.transport(request)
        if not self.endpoint:
            raise AuthMissing(f"no endpoint configured (set {ENV_API_BASE})")
        if not self.api_key:
            raise AuthMissing(f"no API key configured (set {ENV_API_KEY})")
        url = self.endpoint.rstrip("/") + "/chat/completions"
        payload = request_to_wire(request)
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error = "unknown"
        for attempt in range(self.MAX_TRIES):
            if attempt:
                self._sleep(self.BACKOFF_BASE_S * self.BACKOFF_FACTOR ** (attempt - 1))
            try:
                resp = requests.post(url, json=payload, headers=headers, timeout=self._timeout_s)
            except requests.RequestException as exc:
                last_error = f"connection error: {exc}"
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise HttpError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            body = resp.json()
            try:
                text = body["choices"][0]["message"]["content"] or ""
            except (KeyError, IndexError, TypeError) as exc:
                raise HttpError(f"malformed completion payload: {exc}") from exc
            usage = None
            if isinstance(body.get("usage"), dict):
                u = body["usage"]
                if "prompt_tokens" in u and "completion_tokens" in u:
                    usage = (int(u["prompt_tokens"]), int(u["completion_tokens"]))
            return text, usage
        raise HttpError(f"giving up after {self.MAX_TRIES} tries ({last_error})")


# ---------------------------------------------------------------------------
# answer extraction
# ---------------------------------------------------------------------------

_ANSWER_LINE = re.compile(r"^\s*answer\s*[:\-]\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


def _normalize(s: str) -> str:
    return s.strip().strip("\"'`*.").strip().lower()


def extract_label(response_text: str, label_set) -> tuple[str, str]:
    """Pull a predicted label out of free-form model output.

    First honors the anchored ``Answer: <label>`` format (last occurrence
    wins); otherwise falls back to a whole-word scan that must match exactly
    one label. Returns (canonical label, "format" | "fuzzy").
    """
    labels = list(label_set)
    if not labels:
        raise ValueError("label_set must be non-empty")
    by_norm = {_normalize(l): l for l in labels}

    matches = _ANSWER_LINE.findall(response_text or "")
    if matches:
        cand = _normalize(matches[-1])
        if cand in by_norm:
            return by_norm[cand], "format"

    found = []
    for label in labels:
        pattern = r"(?<![A-Za-z0-9])" + re.escape(label) + r"(?![A-Za-z0-9])"
        if re.search(pattern, response_text or "", re.IGNORECASE):
            found.append(label)
    if len(found) == 1:
        return found[0], "fuzzy"
    if len(found) > 1:
        raise AmbiguousLabel(f"{len(found)} labels matched: {found}")
    raise NoLabelFound(f"no label from {labels} found in response")

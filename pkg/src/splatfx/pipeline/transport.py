"""Model transport: a chat-completions-style message protocol with
record/replay.

The wire shape is pinned here: a request is
    {"model": str, "temperature": float, "logprobs": bool,
     "messages": [{"role": "system"|"user", "content": str | parts}]}
where parts are {"type": "text", "text": str} or
{"type": "image_png_b64", "data": str}.  A response is
    {"content": str, "logprobs": {token: logprob} | None}.

Replay never touches the network; record persists every exchange keyed by
a sha256 of the canonical request JSON.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time

import httpx

from ..errors import ArgumentError, IoError, ReplayMissError

ENV_BASE = "SPLATFX_API_BASE"
ENV_KEY = "SPLATFX_API_KEY"
ENV_MODEL = "SPLATFX_MODEL"

TRANSCRIPT_FILE = "transcript.json"


def text_message(role: str, text: str) -> dict:
    return {"role": role, "content": text}


def image_message(role: str, text: str, png_frames: list[bytes]) -> dict:
    parts = [{"type": "text", "text": text}]
    for png in png_frames:
        parts.append({"type": "image_png_b64",
                      "data": base64.b64encode(png).decode("ascii")})
    return {"role": role, "content": parts}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def request_hash(request: dict) -> str:
    return hashlib.sha256(canonical_json(request).encode("utf-8")).hexdigest()


class TranscriptStore:
    """Content-hash-keyed transcript of model exchanges, one JSON file per
    fixture bundle."""

    def __init__(self, directory):
        self.directory = str(directory)
        self.path = os.path.join(self.directory, TRANSCRIPT_FILE)
        self._lock = threading.Lock()
        self.entries: dict[str, dict] = {}
        if os.path.exists(self.path):
            try:
                with open(self.path) as f:
                    self.entries = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise IoError(f"cannot read transcript {self.path}: {e}") from e

    def get(self, key: str) -> dict | None:
        return self.entries.get(key)

    def put(self, key: str, request: dict, response: dict, timestamp: float) -> None:
        with self._lock:
            self.entries[key] = {
                "request": request, "response": response, "timestamp": timestamp}
            os.makedirs(self.directory, exist_ok=True)
            tmp = self.path + ".tmp"
            with open(tmp, "w") as f:
                json.dump(self.entries, f, sort_keys=True, indent=1)
            os.replace(tmp, self.path)

    def verify(self) -> list[str]:
        """Return keys whose stored request no longer hashes to the key."""
        return [k for k, e in self.entries.items()
                if request_hash(e["request"]) != k]


class HttpBackend:
    """Live chat-completions endpoint; configured via environment."""

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 timeout: float = 120.0, max_retries: int = 2):
        self.base_url = (base_url or os.environ.get(ENV_BASE, "")).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_KEY, "")
        if not self.base_url:
            raise ArgumentError(f"live transport requires {ENV_BASE} to be set")
        self.timeout = timeout
        self.max_retries = max_retries

    def _to_provider(self, request: dict) -> dict:
        messages = []
        for msg in request["messages"]:
            content = msg["content"]
            if isinstance(content, list):
                parts = []
                for part in content:
                    if part["type"] == "text":
                        parts.append({"type": "text", "text": part["text"]})
                    else:
                        parts.append({"type": "image_url", "image_url": {
                            "url": "data:image/png;base64," + part["data"]}})
                content = parts
            messages.append({"role": msg["role"], "content": content})
        body = {"model": request["model"], "messages": messages,
                "temperature": request["temperature"]}
        if request.get("logprobs"):
            body["logprobs"] = True
            body["top_logprobs"] = 5
        return body

    def __call__(self, request: dict) -> dict:
        body = self._to_provider(request)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = httpx.post(f"{self.base_url}/chat/completions",
                                  json=body, headers=headers, timeout=self.timeout)
                resp.raise_for_status()
                data = resp.json()
                choice = data["choices"][0]
                logprobs = None
                lp = choice.get("logprobs")
                if lp and lp.get("content"):
                    logprobs = {}
                    for tok in lp["content"][0].get("top_logprobs", []):
                        logprobs[tok["token"]] = tok["logprob"]
                return {"content": choice["message"]["content"], "logprobs": logprobs}
            except (httpx.HTTPError, KeyError, ValueError) as e:
                last = e
                if attempt < self.max_retries:
                    time.sleep(min(2.0 ** attempt, 8.0))
        raise IoError(f"model call failed after retries: {last}")


class ModelTransport:
    """Unified send() over live/record/replay modes.

    In record mode every exchange (from any backend, live or scripted) is
    persisted; in replay mode only the transcript is consulted.
    """

    def __init__(self, mode: str, store: TranscriptStore | None = None,
                 backend=None, model: str | None = None):
        if mode not in ("live", "record", "replay"):
            raise ArgumentError(f"unknown transport mode {mode!r}")
        if mode in ("record", "replay") and store is None:
            raise ArgumentError(f"{mode} mode requires a transcript store")
        if mode in ("live", "record") and backend is None:
            backend = HttpBackend()
        self.mode = mode
        self.store = store
        self.backend = backend
        self.model = model or os.environ.get(ENV_MODEL, "gpt-4o-mini")

    def build_request(self, messages: list[dict], temperature: float = 0.0,
                      logprobs: bool = False) -> dict:
        return {"model": self.model, "messages": messages,
                "temperature": round(float(temperature), 4), "logprobs": logprobs}

    def send(self, request: dict) -> dict:
        key = request_hash(request)
        if self.mode == "replay":
            entry = self.store.get(key)
            if entry is None:
                raise ReplayMissError(key)
            return entry["response"]
        response = self.backend(request)
        if self.mode == "record":
            self.store.put(key, request, response, time.time())
        return response


def make_transport(mode: str, fixtures=None, backend=None,
                   model: str | None = None) -> ModelTransport:
    store = TranscriptStore(fixtures) if fixtures is not None else None
    return ModelTransport(mode, store=store, backend=backend, model=model)

"""Completion providers: a live chat-completions client and a fixture store.

The fixture store makes the whole pipeline runnable offline: in record mode
every live response is written to a directory of JSON files keyed by a
stable digest of (prompt, model) plus a sequence number, and in replay mode
those files are served back in recorded order with no network access at all.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

from .errors import ProviderError, SchemaError

logger = logging.getLogger(__name__)

API_KEY_ENV = "CDI_API_KEY"
API_KEY_ENV_FALLBACK = "OPENAI_API_KEY"
BASE_URL_ENV = "CDI_BASE_URL"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


def request_digest(prompt: str, model: str) -> str:
    """Stable hex digest keying fixture files for one (prompt, model) pair."""
    payload = json.dumps({"model": model, "prompt": prompt}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ProviderResponse:
    raw_text: str
    model: str
    request_digest: str


class Provider(Protocol):
    def complete(self, prompt: str, model: str) -> ProviderResponse: ...


class HttpChatProvider:
    """Client for OpenAI-compatible chat-completion endpoints.

    The API key is read from the environment only; the base URL may come
    from a flag or the environment.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        options: dict | None = None,
        session: requests.Session | None = None,
    ):
        self.base_url = (
            base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL
        ).rstrip("/")
        self.api_key = api_key or os.environ.get(API_KEY_ENV) or os.environ.get(
            API_KEY_ENV_FALLBACK
        )
        if not self.api_key:
            raise ProviderError(
                f"no API key: set {API_KEY_ENV} (or {API_KEY_ENV_FALLBACK}) "
                "in the environment"
            )
        self.timeout = timeout
        self.options = dict(options or {})
        self._session = session or requests.Session()

    def complete(self, prompt: str, model: str) -> ProviderResponse:
        body = {
            "model": model,
            "messages": [{"role": "user", "content": prompt}],
            **self.options,
        }
        try:
            resp = self._session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except ProviderError:
            raise
        except Exception as exc:
            raise ProviderError(f"chat completion failed: {exc}") from exc
        if not text:
            raise ProviderError("provider returned an empty completion")
        logger.debug("provider response for model %s:\n%s", model, text)
        return ProviderResponse(
            raw_text=text, model=model, request_digest=request_digest(prompt, model)
        )


class FixtureReplayProvider:
    """Serves recorded responses from a fixture directory, in recorded order.

    Each call for a given (prompt, model) digest consumes the next sequence
    file; running out of fixtures is a provider error.
    """

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)
        if not self.fixture_dir.is_dir():
            raise ProviderError(f"fixture directory not found: {self.fixture_dir}")
        self._queues: dict[str, list[Path]] = {}
        for path in sorted(self.fixture_dir.glob("*.json")):
            digest = path.name.split("-")[0]
            self._queues.setdefault(digest, []).append(path)
        self._positions: dict[str, int] = {}
        self._lock = threading.Lock()

    def complete(self, prompt: str, model: str) -> ProviderResponse:
        digest = request_digest(prompt, model)
        with self._lock:
            queue = self._queues.get(digest, [])
            pos = self._positions.get(digest, 0)
            if pos >= len(queue):
                raise ProviderError(
                    f"no recorded fixture left for digest {digest} in "
                    f"{self.fixture_dir} (served {pos})"
                )
            path = queue[pos]
            self._positions[digest] = pos + 1
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"unreadable fixture {path.name}: {exc}") from exc
        raw_text = doc.get("raw_text")
        if not isinstance(raw_text, str) or not raw_text:
            raise SchemaError(
                f"fixture {path.name} has no raw_text", field="raw_text"
            )
        logger.debug("replayed fixture %s", path.name)
        return ProviderResponse(
            raw_text=raw_text, model=doc.get("model", model), request_digest=digest
        )


class RecordingProvider:
    """Wraps a live provider and appends every response to the fixture store."""

    def __init__(self, inner: Provider, fixture_dir: str | Path):
        self.inner = inner
        self.fixture_dir = Path(fixture_dir)
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def complete(self, prompt: str, model: str) -> ProviderResponse:
        response = self.inner.complete(prompt, model)
        with self._lock:
            seq = len(list(self.fixture_dir.glob(f"{response.request_digest}-*.json")))
            path = self.fixture_dir / f"{response.request_digest}-{seq:04d}.json"
            write_fixture(path, prompt, response)
        return response


def write_fixture(path: Path, prompt: str, response: ProviderResponse) -> None:
    doc = {
        "request_digest": response.request_digest,
        "prompt": prompt,
        "model": response.model,
        "raw_text": response.raw_text,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

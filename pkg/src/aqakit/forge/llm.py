"""Text-LLM clients behind one tiny contract: complete(prompt) -> text.

RealLlmClient talks to a chat-completions style HTTP endpoint; everything
else runs offline. All mocks keep a .calls log so tests can assert both
what was asked and that nothing was asked twice.
"""

from __future__ import annotations

import json
import os
import re
import time
from typing import Callable, Protocol

import requests

from .features import FEATURE_PROMPT_PREFIX, FEATURE_PROMPT_SUFFIX


class LlmClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class RateLimiter:
    """Blocks so at most max_per_minute calls start in any 60 s window.

    Clock and sleep are injectable so tests never actually wait.
    """

    def __init__(self, max_per_minute: int,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        if max_per_minute < 1:
            raise ValueError("max_per_minute must be >= 1")
        self.max_per_minute = max_per_minute
        self._clock = clock
        self._sleep = sleep
        self._stamps: list[float] = []

    def wait(self) -> None:
        now = self._clock()
        self._stamps = [t for t in self._stamps if now - t < 60.0]
        if len(self._stamps) >= self.max_per_minute:
            self._sleep(60.0 - (now - self._stamps[0]))
            now = self._clock()
            self._stamps = [t for t in self._stamps if now - t < 60.0]
        self._stamps.append(now)


class RealLlmClient:
    """HTTP client with an API key from the environment, a rate limit, and
    3 attempts with exponential backoff per request."""

    ATTEMPTS = 3

    def __init__(self, url: str, model: str = "",
                 api_key_env: str = "LLM_API_KEY",
                 max_per_minute: int = 60, timeout_s: float = 60.0,
                 session=None,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        key = os.environ.get(api_key_env)
        if not key:
            raise RuntimeError(
                f"no API key: set the {api_key_env} environment variable")
        self._url = url
        self._model = model
        self._headers = {"Authorization": f"Bearer {key}",
                         "Content-Type": "application/json"}
        self._timeout_s = timeout_s
        self._session = session or requests.Session()
        self._sleep = sleep
        self._limiter = RateLimiter(max_per_minute, sleep=sleep)

    def complete(self, prompt: str) -> str:
        body = {"model": self._model,
                "messages": [{"role": "user", "content": prompt}]}
        last: Exception | None = None
        for attempt in range(self.ATTEMPTS):
            self._limiter.wait()
            try:
                resp = self._session.post(self._url, json=body,
                                          headers=self._headers,
                                          timeout=self._timeout_s)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError,
                    ValueError) as exc:
                last = exc
                if attempt + 1 < self.ATTEMPTS:
                    self._sleep(2.0 ** attempt)
        raise RuntimeError(
            f"LLM request failed after {self.ATTEMPTS} attempts: {last}")


class ReplayLlmClient:
    """Serves recorded prompt -> response fixtures; no network."""

    def __init__(self, responses: dict[str, str],
                 fallback: Callable[[str], str] | None = None) -> None:
        self._responses = dict(responses)
        self._fallback = fallback
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if prompt in self._responses:
            return self._responses[prompt]
        if self._fallback is not None:
            return self._fallback(prompt)
        raise KeyError(f"no recorded response for prompt {prompt[:80]!r}...")


class EchoFeatureClient:
    """Mock for feature-bank generation: the i-th request for a class
    returns "feature-{i} of {class}" (i starts at 1)."""

    def __init__(self) -> None:
        self.calls: list[str] = []
        self._counts: dict[str, int] = {}

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if not (prompt.startswith(FEATURE_PROMPT_PREFIX)
                and prompt.endswith(FEATURE_PROMPT_SUFFIX)):
            raise ValueError(f"not a feature prompt: {prompt[:80]!r}")
        cls = prompt[len(FEATURE_PROMPT_PREFIX):-len(FEATURE_PROMPT_SUFFIX)]
        i = self._counts.get(cls, 0) + 1
        self._counts[cls] = i
        return f"feature-{i} of {cls}"


_EVENT_SEGMENT = re.compile(
    r"^Sound of (.+) \(([^()]*)\)(?:: \[[^\]]*\])?$")


def _parse_meta_tail(meta_text: str) -> tuple[list[tuple[str, str]], str]:
    """(label, feature) pairs and the caption from a serialized meta string."""
    events_part, _, caption = meta_text.partition(". Description: ")
    events_part = events_part.removeprefix("Sound Events: ")
    pairs = []
    for segment in events_part.split("; "):
        match = _EVENT_SEGMENT.match(segment.strip())
        if match:
            pairs.append((match.group(1), match.group(2)))
    return pairs, caption.strip()


class SynthLlmClient:
    """Offline stand-in for open-ended generation: reads the meta block at
    the end of the prompt and emits simple templated QA pairs, one JSON
    object per line. Deterministic given the prompt. Also answers feature
    prompts so a single mock serves the whole pipeline."""

    def __init__(self) -> None:
        self.calls: list[str] = []
        self._echo = EchoFeatureClient()

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        if prompt.startswith(FEATURE_PROMPT_PREFIX):
            return self._echo.complete(prompt)
        meta_text = prompt.split("\n\n")[-1]
        events, caption = _parse_meta_tail(meta_text)
        rows = []
        for label, feature in events:
            answer = f"The {label} sound is {feature[:1].lower()}{feature[1:]}."
            rows.append({"q": f"What does the {label} sound like in this "
                              "audio clip?",
                         "a": answer})
        if caption:
            rows.append({"q": "What scenario could this audio clip depict?",
                         "a": f"A scene where {caption[:1].lower()}{caption[1:]}"})
        if len(events) >= 2:
            label = events[0][0]
            rows.append({"q": f"What exact device produced the {label} "
                              "sound?",
                         "a": "It cannot be determined from the audio what "
                              f"exact device produced the {label} sound."})
        if not rows:
            rows.append({"q": "What can be heard in this audio clip?",
                         "a": "A sound is present, but its source is "
                              "unclear."})
        return "\n".join(json.dumps(r, ensure_ascii=False) for r in rows)

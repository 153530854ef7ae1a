"""Text embedding providers for similarity-based scoring.

All scoring is cosine-based, so providers only need to map text to a
fixed-dimension vector deterministically. The two local providers cover the
offline paths: a hashed bag-of-words for graded similarity and an exact-match
one-hot for verbatim comparisons. The remote provider speaks the usual
embeddings-API shape and is only built when explicitly requested.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from typing import Protocol, runtime_checkable

import numpy as np

__all__ = [
    "EmbeddingProvider",
    "HashedBagOfWordsProvider",
    "ExactMatchProvider",
    "RemoteEmbeddingProvider",
    "cosine",
]

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@runtime_checkable
class EmbeddingProvider(Protocol):
    """text -> fixed-dimension vector; deterministic per text."""

    name: str
    dimension: int
    normalized: bool

    def embed(self, text: str) -> np.ndarray: ...


class HashedBagOfWordsProvider:
    """Lowercased tokens hashed into buckets, counts L2-normalized.

    Dependency-free stand-in for a learned text encoder: texts sharing tokens
    get positive cosine, disjoint texts are (near-)orthogonal up to hash
    collisions.
    """

    def __init__(self, dimension: int = 4096):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.name = "hashed-bow"
        self.dimension = dimension
        self.normalized = True

    def _bucket(self, token: str) -> int:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        v = np.zeros(self.dimension)
        for tok in _tokens(text):
            v[self._bucket(tok)] += 1.0
        n = np.linalg.norm(v)
        if n > 0:
            v /= n
        return v


class ExactMatchProvider:
    """One-hot per distinct string: cosine 1 for equal texts, 0 otherwise.

    Indices are assigned in first-seen order, so runs are deterministic given
    input order.
    """

    def __init__(self, dimension: int = 8192):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.name = "exact-match"
        self.dimension = dimension
        self.normalized = True
        self._index: dict[str, int] = {}

    def embed(self, text: str) -> np.ndarray:
        if text not in self._index:
            if len(self._index) >= self.dimension:
                raise ValueError(
                    f"exact-match provider capacity {self.dimension} exhausted")
            self._index[text] = len(self._index)
        v = np.zeros(self.dimension)
        v[self._index[text]] = 1.0
        return v


class RemoteEmbeddingProvider:
    """Embeddings-API client with retries; built only on explicit request."""

    ATTEMPTS = 3

    def __init__(self, url: str, model: str = "",
                 api_key_env: str = "LLM_API_KEY", dimension: int = 1536,
                 timeout_s: float = 60.0, session=None, sleep=time.sleep):
        key = os.environ.get(api_key_env, "")
        if not key:
            raise RuntimeError(
                f"remote embeddings need an API key in ${api_key_env}")
        if session is None:
            import requests
            session = requests.Session()
        self.name = "remote"
        self.dimension = dimension
        self.normalized = True
        self._url = url
        self._model = model
        self._key = key
        self._timeout = timeout_s
        self._session = session
        self._sleep = sleep

    def embed(self, text: str) -> np.ndarray:
        payload = {"model": self._model, "input": text}
        headers = {"Authorization": f"Bearer {self._key}"}
        last = None
        for attempt in range(self.ATTEMPTS):
            try:
                resp = self._session.post(self._url, json=payload,
                                          headers=headers,
                                          timeout=self._timeout)
                resp.raise_for_status()
                vec = np.asarray(resp.json()["data"][0]["embedding"],
                                 dtype=float)
                if vec.shape != (self.dimension,):
                    raise ValueError(
                        f"expected dimension {self.dimension}, "
                        f"got {vec.shape}")
                return vec
            except Exception as exc:  # noqa: BLE001 - retry any transport error
                last = exc
                if attempt < self.ATTEMPTS - 1:
                    self._sleep(2.0 ** attempt)
        raise RuntimeError(
            f"embedding request failed after {self.ATTEMPTS} attempts: {last}")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero-norm vectors are rejected."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for a zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))

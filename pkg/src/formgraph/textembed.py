"""Text embedding providers.

The default provider hashes character trigrams into a fixed-width term
frequency vector: fully offline and deterministic, which is what the test
suite anchors on. A remote provider speaking an HTTP embeddings endpoint
plugs in behind the same interface for production use.
"""

from __future__ import annotations

import math
import os
from typing import Optional, Protocol

from .errors import ProviderUnavailable

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: str) -> int:
    h = _FNV_OFFSET
    for byte in data.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def l2_normalize(values) -> tuple[float, ...]:
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:
        return tuple(values)
    return tuple(v / norm for v in values)


class TextEmbedProvider(Protocol):
    provider_id: str
    dims: int

    def embed(self, text: str) -> tuple[float, ...]: ...


class NgramProvider:
    """Hashed character trigram term-frequency vectors, L2-normalized.

    Deterministic for a given (dims, text); empty text maps to the zero
    vector. Safe for concurrent use (stateless after construction).
    """

    def __init__(self, dims: int = 256):
        self.dims = dims
        self.provider_id = f"ngram-{dims}"

    def embed(self, text: str) -> tuple[float, ...]:
        normalized = " ".join(text.lower().split())
        if not normalized:
            return (0.0,) * self.dims
        padded = f" {normalized} "
        counts = [0.0] * self.dims
        for i in range(len(padded) - 2):
            counts[_fnv1a(padded[i : i + 3]) % self.dims] += 1.0
        return l2_normalize(counts)


class RemoteProvider:
    """Client for an HTTP embeddings endpoint.

    Expects an OpenAI-style wire format: POST {"model", "input": [text]}
    returning {"data": [{"embedding": [...]}]}. The API key is read from
    the environment when not passed explicitly.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "text-embedding-ada-002",
        dims: int = 1536,
        api_key: Optional[str] = None,
        max_attempts: int = 2,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.dims = dims
        self.api_key = api_key or os.environ.get("FORMGRAPH_EMBED_API_KEY", "")
        self.max_attempts = max_attempts
        self.timeout = timeout
        self.provider_id = f"remote:{model}"

    def embed(self, text: str) -> tuple[float, ...]:
        import requests

        if not text.strip():
            return (0.0,) * self.dims
        last_error: Optional[Exception] = None
        for _ in range(self.max_attempts):
            try:
                response = requests.post(
                    self.endpoint,
                    json={"model": self.model, "input": [text]},
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=self.timeout,
                )
                response.raise_for_status()
                vector = response.json()["data"][0]["embedding"]
                return l2_normalize([float(v) for v in vector])
            except Exception as exc:  # noqa: BLE001 - transport errors vary
                last_error = exc
        raise ProviderUnavailable(
            f"embedding endpoint {self.endpoint} failed: {last_error}",
            attempts=self.max_attempts,
        )


def make_provider(name: str = "ngram", **kwargs) -> TextEmbedProvider:
    if name == "ngram":
        return NgramProvider(**{k: v for k, v in kwargs.items() if k == "dims"})
    if name == "remote":
        return RemoteProvider(**kwargs)
    raise ValueError(f"unknown text embedding provider {name!r}")

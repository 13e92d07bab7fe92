"""Text embeddings: providers, a durable cache, and feature assembly."""

from __future__ import annotations

import hashlib
import logging
import math
import os
import random
import struct
import threading
import time
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

# Dimensions of the embedding models compared in the experiments.
KNOWN_DIMENSIONS = {
    "all-MiniLM-L6-v2": 384,
    "all-mpnet-base-v2": 768,
    "all-roberta-large-v1": 1024,
    "text-embedding-ada-002": 1536,
}
ADA_MAX_TOKENS = 8191


class ProviderError(RuntimeError):
    """An embedding provider failed or misbehaved."""


def approx_tokens(text: str) -> int:
    return math.ceil(len(text.encode("utf-8")) / 4)


def truncate_to_budget(text: str, max_tokens: Optional[int]) -> str:
    """Cut ``text`` at a word boundary so that ``approx_tokens`` fits the budget."""
    if max_tokens is None or approx_tokens(text) <= max_tokens:
        return text
    max_bytes = max_tokens * 4
    cut = text.encode("utf-8")[:max_bytes].decode("utf-8", errors="ignore")
    # drop a partial trailing word
    if len(cut) < len(text) and not text[len(cut)].isspace():
        space = cut.rfind(" ")
        if space > 0:
            cut = cut[:space]
    return cut.rstrip()


def normalize_text(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", text).split())


class EmbeddingProvider:
    """Base class. Subclasses implement ``_embed_batch``."""

    name: str = "provider"
    dimension: int = 0
    max_tokens: Optional[int] = None

    def _embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        raise NotImplementedError

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension))
        prepared = [truncate_to_budget(t, self.max_tokens) for t in texts]
        out = np.asarray(self._embed_batch(prepared), dtype=np.float64)
        if out.shape != (len(texts), self.dimension):
            raise ProviderError(
                f"{self.name}: expected shape {(len(texts), self.dimension)}, got {out.shape}"
            )
        if not np.all(np.isfinite(out)):
            raise ProviderError(f"{self.name}: non-finite embedding values")
        return out


class HashEmbeddingProvider(EmbeddingProvider):
    """Deterministic offline provider: a seeded hash of the text expanded to [-1, 1].

    Used for tests and demos; carries no semantic signal beyond identity.
    """

    def __init__(self, dimension: int = 8, seed: int = 0, name: str = "hash"):
        self.dimension = int(dimension)
        self.seed = int(seed)
        self.name = f"{name}-{self.dimension}-{self.seed}"

    def vector(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.seed}\x00{text}".encode("utf-8")).digest()
        rng = np.random.default_rng(np.frombuffer(digest, dtype=np.uint32))
        return rng.uniform(-1.0, 1.0, size=self.dimension)

    def _embed_batch(self, texts):
        return np.vstack([self.vector(t) for t in texts])


class PrecomputedProvider(EmbeddingProvider):
    """Serves vectors from a table keyed by text (or by any string id)."""

    def __init__(self, table: dict, name: str = "precomputed"):
        if not table:
            raise ValueError("empty embedding table")
        first = next(iter(table.values()))
        self.dimension = len(first)
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        self.name = name

    @classmethod
    def from_npz(cls, path, name: Optional[str] = None):
        """Load an ``.npz`` holding ``keys`` (strings) and ``vectors`` (n x d)."""
        data = np.load(path, allow_pickle=False)
        keys = [str(k) for k in data["keys"]]
        vectors = data["vectors"]
        return cls(dict(zip(keys, vectors)), name=name or f"precomputed:{Path(path).stem}")

    def _embed_batch(self, texts):
        missing = [t for t in texts if t not in self.table]
        if missing:
            raise ProviderError(f"{len(missing)} text(s) missing from {self.name}")
        return np.vstack([self.table[t] for t in texts])


def save_precomputed(path, keys: Sequence[str], vectors) -> None:
    np.savez(path, keys=np.asarray(list(keys), dtype=str), vectors=np.asarray(vectors, dtype=np.float64))


class RemoteProvider(EmbeddingProvider):
    """OpenAI-compatible ``/embeddings`` endpoint.

    URL and key default to the ``EMBED_API_URL`` / ``EMBED_API_KEY``
    environment variables.
    """

    def __init__(
        self,
        model: str = "text-embedding-ada-002",
        dimension: Optional[int] = None,
        url: Optional[str] = None,
        api_key: Optional[str] = None,
        max_tokens: Optional[int] = ADA_MAX_TOKENS,
        attempts: int = 3,
        backoff: float = 1.0,
        timeout: float = 60.0,
        session=None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.model = model
        self.name = f"remote:{model}"
        self.dimension = dimension or KNOWN_DIMENSIONS.get(model, 0)
        if not self.dimension:
            raise ValueError(f"unknown dimension for model {model!r}")
        self.url = url or os.environ.get("EMBED_API_URL")
        self.api_key = api_key if api_key is not None else os.environ.get("EMBED_API_KEY")
        self.max_tokens = max_tokens
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout
        self.sleep = sleep
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def _headers(self):
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
            headers["api-key"] = self.api_key
        return headers

    def _embed_batch(self, texts):
        if not self.url:
            raise ProviderError("EMBED_API_URL is not set")
        payload = {"input": list(texts), "model": self.model}
        last_error = None
        for attempt in range(self.attempts):
            try:
                resp = self.session.post(
                    self.url, json=payload, headers=self._headers(), timeout=self.timeout
                )
                resp.raise_for_status()
                data = resp.json()["data"]
                out = np.zeros((len(texts), self.dimension))
                seen = set()
                for item in data:
                    idx = int(item["index"])
                    if len(item["embedding"]) != self.dimension:
                        raise ProviderError(
                            f"{self.name}: got dimension {len(item['embedding'])}, "
                            f"configured {self.dimension}"
                        )
                    out[idx] = item["embedding"]
                    seen.add(idx)
                if seen != set(range(len(texts))):
                    raise ProviderError(f"{self.name}: response indices do not cover the batch")
                return out
            except ProviderError:
                raise
            except Exception as exc:  # network, HTTP status, malformed JSON
                last_error = exc
                if attempt + 1 < self.attempts:
                    delay = self.backoff * 2 ** attempt * (1 + random.random() * 0.25)
                    logger.warning("%s attempt %d failed (%s); retrying in %.1fs",
                                   self.name, attempt + 1, exc, delay)
                    self.sleep(delay)
        raise ProviderError(f"{self.name} failed after {self.attempts} attempts: {last_error}")


_MAGIC = b"AREMBC1\n"
_RECORD = struct.Struct("<I32sI")  # payload length, key digest, dimension


class EmbeddingCache:
    """Append-only on-disk cache keyed by sha256(provider name, normalized text).

    Each record is ``<u32 length><32-byte key><u32 dim><dim little-endian f64>``.
    A truncated trailing record (e.g. from an interrupted write) is ignored.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._store: dict[bytes, np.ndarray] = {}
        if self.path is not None and self.path.exists():
            self._load()

    @staticmethod
    def key(provider_name: str, text: str) -> bytes:
        return hashlib.sha256(f"{provider_name}\x00{normalize_text(text)}".encode("utf-8")).digest()

    def _load(self):
        raw = self.path.read_bytes()
        if not raw:
            return
        if not raw.startswith(_MAGIC):
            raise ValueError(f"{self.path} is not an embedding cache")
        pos = len(_MAGIC)
        while pos + _RECORD.size <= len(raw):
            length, key, dim = _RECORD.unpack_from(raw, pos)
            end = pos + 4 + length
            if length != 36 + 8 * dim or end > len(raw):
                logger.warning("ignoring truncated cache record at byte %d", pos)
                break
            vec = np.frombuffer(raw, dtype="<f8", count=dim, offset=pos + _RECORD.size).copy()
            self._store[key] = vec
            pos = end

    def get(self, key: bytes) -> Optional[np.ndarray]:
        with self._lock:
            vec = self._store.get(key)
        return None if vec is None else vec.copy()

    def put(self, key: bytes, vector) -> None:
        vec = np.ascontiguousarray(vector, dtype="<f8")
        with self._lock:
            self._store[key] = vec.copy()
            if self.path is None:
                return
            record = _RECORD.pack(36 + 8 * vec.size, key, vec.size) + vec.tobytes()
            new = not self.path.exists() or self.path.stat().st_size == 0
            with self.path.open("ab") as fh:
                if new:
                    fh.write(_MAGIC)
                fh.write(record)

    def __len__(self):
        return len(self._store)

    def __contains__(self, key):
        return key in self._store


def embed(provider: EmbeddingProvider, text: str, cache: Optional[EmbeddingCache] = None) -> np.ndarray:
    if not text.strip():
        raise ValueError("cannot embed empty text")
    return embed_many(provider, [text], cache)[0]


def embed_many(
    provider: EmbeddingProvider,
    texts: Sequence[str],
    cache: Optional[EmbeddingCache] = None,
    batch_size: int = 16,
    parallelism: int = 1,
) -> np.ndarray:
    """Embed texts in order, consulting the cache and batching the misses.

    Row ``i`` of the result always belongs to ``texts[i]`` regardless of
    how misses are grouped into batches.
    """
    out = np.zeros((len(texts), provider.dimension))
    pending: dict[bytes, list[int]] = {}
    for i, text in enumerate(texts):
        key = EmbeddingCache.key(provider.name, text)
        hit = cache.get(key) if cache is not None else None
        if hit is not None:
            out[i] = hit
        else:
            pending.setdefault(key, []).append(i)

    keys = list(pending)
    batches = [keys[i:i + batch_size] for i in range(0, len(keys), batch_size)]

    def run(batch):
        return batch, provider.embed_batch([texts[pending[k][0]] for k in batch])

    if parallelism > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]

    for batch, vectors in results:
        for key, vec in zip(batch, vectors):
            if cache is not None:
                cache.put(key, vec)
            for i in pending[key]:
                out[i] = vec
    return out


def assemble_features(embedding, lex=None) -> np.ndarray:
    """Concatenate an embedding (or a batch) with scaled lexicon features."""
    embedding = np.asarray(embedding, dtype=np.float64)
    if lex is None:
        return embedding.copy()
    return np.concatenate([embedding, np.asarray(lex, dtype=np.float64)], axis=-1)

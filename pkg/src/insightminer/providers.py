"""LLM and embedding backends.

Two LLM providers ship with the package: :class:`HTTPChatProvider` talks to
any OpenAI-compatible ``/chat/completions`` endpoint, and
:class:`ReplayProvider` replays canned responses for offline, deterministic
runs.  Embeddings come from :class:`RemoteEmbedder` (OpenAI-compatible
``/embeddings``) or the offline :class:`HashingEmbedder`.
"""
import abc
import json
import logging
import os
import re
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np
from sklearn.feature_extraction.text import HashingVectorizer

from .exceptions import ProviderError

logger = logging.getLogger(__name__)

ENV_API_KEY = "INSIGHTMINER_LLM_API_KEY"
ENV_ENDPOINT = "INSIGHTMINER_LLM_ENDPOINT"
ENV_MODEL = "INSIGHTMINER_LLM_MODEL"
ENV_EMBED_ENDPOINT = "INSIGHTMINER_EMBED_ENDPOINT"
ENV_EMBED_MODEL = "INSIGHTMINER_EMBED_MODEL"


class LLMProvider(abc.ABC):
    @abc.abstractmethod
    def complete(self, prompt, temperature=1.0, samples=1):
        """Return ``samples`` text completions for ``prompt``."""


class EmbeddingProvider(abc.ABC):
    @abc.abstractmethod
    def embed(self, text):
        """Return a fixed-dimension float vector for ``text``."""

    def embed_many(self, texts):
        return [self.embed(t) for t in texts]


def cosine_similarity(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _post_json(url, payload, api_key=None, timeout=60.0):
    data = json.dumps(payload).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    req = urllib.request.Request(url, data=data, headers=headers, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            body = resp.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        raise ProviderError(f"{url} answered HTTP {exc.code}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise ProviderError(f"cannot reach {url}: {exc}") from exc
    try:
        return json.loads(body)
    except json.JSONDecodeError as exc:
        raise ProviderError(f"{url} returned invalid JSON") from exc


class HTTPChatProvider(LLMProvider):
    """Client for an OpenAI-compatible chat-completion endpoint.

    ``endpoint`` is the full URL of the completions route.  Servers that
    ignore ``n`` are called repeatedly until ``samples`` answers arrive.
    """

    def __init__(self, endpoint=None, model=None, api_key=None, timeout=120.0, max_tokens=None):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
        if not self.endpoint:
            raise ProviderError(f"no LLM endpoint configured (set {ENV_ENDPOINT})")
        self.model = model or os.environ.get(ENV_MODEL, "default")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        self.timeout = timeout
        self.max_tokens = max_tokens

    def complete(self, prompt, temperature=1.0, samples=1):
        out = []
        while len(out) < samples:
            payload = {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": temperature,
                "n": samples - len(out),
            }
            if self.max_tokens:
                payload["max_tokens"] = self.max_tokens
            reply = _post_json(self.endpoint, payload, self.api_key, self.timeout)
            try:
                texts = [c["message"]["content"] for c in reply["choices"]]
            except (KeyError, TypeError) as exc:
                raise ProviderError("malformed chat-completion response") from exc
            if not texts:
                raise ProviderError("chat-completion response has no choices")
            out.extend(texts)
        return out[:samples]


class ReplayProvider(LLMProvider):
    """Replays canned responses, one per :meth:`complete` call, in order.

    Built from a list of strings or a directory of text files consumed in
    sorted filename order.  A file whose name ends in ``.error`` makes that
    call raise :class:`ProviderError`, which lets tests script failures.
    Once the responses run out every call raises :class:`ProviderError`.
    """

    ERROR = object()

    def __init__(self, responses):
        self._responses = list(responses)
        self.calls = []

    @classmethod
    def from_directory(cls, path):
        path = Path(path)
        if not path.is_dir():
            raise ProviderError(f"stub directory {path} does not exist")
        responses = []
        for f in sorted(p for p in path.iterdir() if p.is_file()):
            responses.append(cls.ERROR if f.suffix == ".error" else f.read_text(encoding="utf-8"))
        return cls(responses)

    @property
    def remaining(self):
        return len(self._responses) - len(self.calls)

    def complete(self, prompt, temperature=1.0, samples=1):
        index = len(self.calls)
        self.calls.append(prompt)
        if index >= len(self._responses):
            raise ProviderError("replay provider exhausted")
        response = self._responses[index]
        if response is self.ERROR or isinstance(response, Exception):
            raise ProviderError(f"scripted failure on call {index + 1}")
        return [response]


def _prepare_text(text):
    # split snake_case and camelCase so column names share tokens with prose
    text = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", str(text))
    return re.sub(r"[^0-9A-Za-z]+", " ", text).lower()


class HashingEmbedder(EmbeddingProvider):
    """Offline embedder: hashed, binary bag-of-words vectors with optional IDF.

    Without :meth:`fit` every token has weight 1.  ``fit(corpus)`` learns
    smoothed IDF weights per hash bucket.  Outputs are L2-normalised, so
    the dot product is the cosine similarity.
    """

    def __init__(self, n_features=4096, stop_words="english"):
        self.n_features = n_features
        self.stop_words = stop_words
        self._vectorizer = HashingVectorizer(
            n_features=n_features, alternate_sign=False, norm=None, binary=True,
            preprocessor=_prepare_text, stop_words=stop_words,
        )
        self.idf_ = None

    def fit(self, corpus):
        counts = self._vectorizer.transform(list(corpus))
        n_docs = counts.shape[0]
        df = np.bincount(counts.indices, minlength=self.n_features)
        self.idf_ = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
        return self

    def embed(self, text):
        vec = self._vectorizer.transform([text]).toarray()[0].astype(float)
        if self.idf_ is not None:
            vec *= self.idf_
        norm = np.linalg.norm(vec)
        return vec / norm if norm else vec


class RemoteEmbedder(EmbeddingProvider):
    """Client for an OpenAI-compatible ``/embeddings`` endpoint."""

    def __init__(self, endpoint=None, model=None, api_key=None, timeout=60.0):
        self.endpoint = endpoint or os.environ.get(ENV_EMBED_ENDPOINT)
        if not self.endpoint:
            raise ProviderError(f"no embedding endpoint configured (set {ENV_EMBED_ENDPOINT})")
        self.model = model or os.environ.get(ENV_EMBED_MODEL, "all-MiniLM-L6-v2")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY)
        self.timeout = timeout
        self._cache = {}

    def embed(self, text):
        if text not in self._cache:
            reply = _post_json(self.endpoint, {"model": self.model, "input": [text]}, self.api_key,
                               self.timeout)
            try:
                self._cache[text] = np.asarray(reply["data"][0]["embedding"], dtype=float)
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ProviderError("malformed embedding response") from exc
        return self._cache[text]

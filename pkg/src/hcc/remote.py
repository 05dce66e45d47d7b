"""
Client for a remote completion endpoint.

Protocol: ``POST {base_url}/v1/complete`` with a JSON CompletionRequest and a
bearer token; the reply is a JSON CompletionResponse. Without a base URL the
backend runs in stub mode and answers from a fixed table keyed by the prompt
hash, with no network activity.
"""
import hashlib
import logging
from typing import List, Sequence

import httpx
import numpy as np
from pydantic import ValidationError

from hcc.errors import LexError, RemoteError, RemoteProtocolError, RemoteStatusError, RemoteTimeoutError
from hcc.lexer import tokenize_code
from hcc.schemas.remote import CompletionRequest, CompletionResponse, RemoteBackend
from hcc.vocabulary import Vocabulary


logger = logging.getLogger(__name__)

COMPLETE_PATH = "/v1/complete"

STUB_COMPLETIONS = [
    "return a + b",
    "return None",
    "pass",
    "self . value = value",
    "print ( result )",
    "for item in items :",
    "if x is None :",
    "return [ x for x in xs ]",
]


def stub_completion(prompt: str, max_tokens: int) -> str:
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    canned = STUB_COMPLETIONS[int.from_bytes(digest[:8], "big") % len(STUB_COMPLETIONS)]
    return " ".join(canned.split(" ")[:max_tokens])


class RemoteClient:
    def __init__(self, backend: RemoteBackend, client: httpx.Client | None = None):
        self.backend = backend
        self._client = client

    def _headers(self) -> dict:
        headers = {"content-type": "application/json"}
        if self.backend.api_key:
            headers["authorization"] = f"Bearer {self.backend.api_key}"
        return headers

    def _post(self, request: CompletionRequest) -> httpx.Response:
        url = self.backend.base_url.rstrip("/") + COMPLETE_PATH
        timeout = self.backend.timeout_ms / 1000.0
        body = request.model_dump_json()
        if self._client is not None:
            return self._client.post(url, content=body, headers=self._headers(), timeout=timeout)
        with httpx.Client(timeout=timeout) as client:
            return client.post(url, content=body, headers=self._headers())

    def complete(self, prompt: str, max_tokens: int, temperature: float = 0.0) -> str:
        request = CompletionRequest(prompt=prompt, max_tokens=max_tokens, temperature=temperature)

        if self.backend.mode == "stub":
            logger.debug("stub completion for %d-char prompt", len(prompt))
            return stub_completion(request.prompt, request.max_tokens)

        logger.debug("POST %s%s", self.backend.base_url, COMPLETE_PATH)
        try:
            response = self._post(request)
        except httpx.TimeoutException as e:
            logger.warning("remote backend timed out after %d ms", self.backend.timeout_ms)
            raise RemoteTimeoutError(f"remote backend timed out after {self.backend.timeout_ms} ms") from e
        except httpx.HTTPError as e:
            logger.warning("remote backend request failed: %s", e)
            raise RemoteError(f"remote backend request failed: {e}") from e

        if not response.is_success:
            logger.warning("remote backend returned status %d", response.status_code)
            raise RemoteStatusError(response.status_code, response.text)

        try:
            return CompletionResponse.model_validate_json(response.content).completion
        except ValidationError as e:
            raise RemoteProtocolError(f"invalid completion response: {e.errors()[0]['msg']}") from e


def remote_complete(
        prefix_text: str,
        max_tokens: int,
        temperature: float,
        backend: RemoteBackend,
        client: httpx.Client | None = None,
) -> str:
    return RemoteClient(backend, client).complete(prefix_text, max_tokens, temperature)


class RemoteModel:
    """
    Adapts a RemoteClient to the next-token interface: each prediction is a
    one-token request whose first lexed token becomes a one-hot logit row.
    """
    def __init__(self, client: RemoteClient, vocab: Vocabulary):
        self.client = client
        self.vocab = vocab

    def _prompt(self, prefix: Sequence[int]) -> str:
        return " ".join(self.vocab.decode(prefix))

    def _ids(self, completion: str) -> List[int]:
        try:
            return self.vocab.encode(tokenize_code(completion))
        except LexError as e:
            raise RemoteProtocolError(f"completion does not lex: {e}") from e

    def complete(self, prefix: Sequence[int], max_new: int) -> List[int]:
        return self._ids(self.client.complete(self._prompt(prefix), max_new))[:max_new]

    def next_token_logits(self, prefix: Sequence[int]) -> np.ndarray:
        logits = np.zeros(self.vocab.size)
        ids = self.complete(prefix, 1)
        if ids:
            logits[ids[0]] = 1.0
        return logits

"""JSON-over-HTTP POST with bounded retries, shared by the external planner and realizer clients."""

from __future__ import annotations

import json
import logging
import time
import urllib.error
import urllib.request
from typing import Any

logger = logging.getLogger(__name__)


class TransportError(RuntimeError):
    """Network failure, timeout or server-side (5xx) error. Safe to retry."""

    retryable = True


class ProtocolError(ValueError):
    """The peer answered, but with something that breaks the wire contract."""

    retryable = False


def canonical_json(payload: Any) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _post_once(url: str, body: bytes, timeout: float) -> Any:
    req = urllib.request.Request(
        url, data=body, method="POST", headers={"Content-Type": "application/json; charset=utf-8"}
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            raw = resp.read()
    except urllib.error.HTTPError as exc:
        if exc.code >= 500:
            raise TransportError(f"{url}: HTTP {exc.code}") from exc
        raise ProtocolError(f"{url}: HTTP {exc.code}") from exc
    except (urllib.error.URLError, TimeoutError, ConnectionError, OSError) as exc:
        raise TransportError(f"{url}: {exc}") from exc
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"{url}: response is not JSON") from exc


def post_json(
    url: str,
    payload: Any,
    timeout: float = 10.0,
    retries: int = 2,
    backoff: float = 0.1,
) -> Any:
    """POST ``payload`` and decode the JSON reply.

    ``retries`` counts extra attempts after the first; only
    :class:`TransportError` is retried, with exponential backoff.
    """
    body = payload if isinstance(payload, bytes) else canonical_json(payload)
    attempt = 0
    while True:
        try:
            return _post_once(url, body, timeout)
        except TransportError as exc:
            if attempt >= retries:
                raise
            delay = backoff * (2**attempt)
            logger.warning("attempt %d failed (%s); retrying in %.2fs", attempt + 1, exc, delay)
            time.sleep(delay)
            attempt += 1

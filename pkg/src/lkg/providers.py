"""Pluggable model-provider plumbing shared by extraction, linking, and eval.

The remote mode speaks a chat-completion-style HTTP JSON protocol: the
request carries ``messages``, the reply's assistant content is expected to be
a single JSON value. Malformed content triggers a re-ask with a format
reminder appended; after ``max_retries`` re-asks the call fails with
MalformedOutput. Tests inject a ``transport`` callable instead of hitting the
network.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from lkg.errors import MalformedOutput, ProviderUnavailable

log = logging.getLogger(__name__)

PROVIDER_MODES = ("oracle", "mock", "remote")

FORMAT_REMINDER = (
    "Your previous reply was not valid JSON matching the requested format. "
    "Respond again with only the JSON value, no prose and no code fences."
)

# transport(url, payload, headers, timeout) -> decoded JSON response
Transport = Callable[[str, dict, dict, float], dict]


def default_transport(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    import requests

    try:
        response = requests.post(url, json=payload, headers=headers, timeout=timeout)
        response.raise_for_status()
        return response.json()
    except requests.RequestException as exc:
        raise ProviderUnavailable(f"provider request to {url} failed: {exc}") from exc


@dataclass
class ProviderConfig:
    mode: str = "oracle"
    endpoint: str | None = None
    model_name: str | None = None
    api_key: str | None = None
    max_retries: int = 2
    timeout: float = 30.0
    max_in_flight: int = 4
    transport: Transport | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.mode not in PROVIDER_MODES:
            raise ValueError(f"mode must be one of {PROVIDER_MODES}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.mode == "remote" and not self.endpoint and self.transport is None:
            raise ValueError("remote mode requires an endpoint")


_CODE_FENCE_RE = re.compile(r"^```[a-zA-Z]*\s*|\s*```$")


def _parse_content(content: str) -> Any:
    stripped = _CODE_FENCE_RE.sub("", content.strip()).strip()
    return json.loads(stripped)


def _extract_content(response: dict) -> str:
    try:
        return response["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedOutput(f"provider response missing chat content: {response!r}") from exc


def chat_json(
    provider: ProviderConfig,
    prompt: str,
    validate: Callable[[Any], None] | None = None,
) -> Any:
    """Send one prompt, return the assistant content parsed as JSON.

    Performs at most ``max_retries + 1`` provider calls; each retry re-asks
    with the conversation so far plus a format reminder.
    """
    transport = provider.transport or default_transport
    headers = {"Content-Type": "application/json"}
    if provider.api_key:
        headers["Authorization"] = f"Bearer {provider.api_key}"

    messages: list[dict] = [{"role": "user", "content": prompt}]
    last_error = "no attempts made"
    for attempt in range(provider.max_retries + 1):
        payload: dict = {"messages": messages}
        if provider.model_name:
            payload["model"] = provider.model_name
        response = transport(provider.endpoint or "", payload, headers, provider.timeout)
        content = _extract_content(response)
        try:
            parsed = _parse_content(content)
            if validate is not None:
                validate(parsed)
            return parsed
        except (json.JSONDecodeError, ValueError) as exc:
            last_error = str(exc)
            log.warning("provider reply malformed (attempt %d): %s", attempt + 1, exc)
            messages = messages + [
                {"role": "assistant", "content": content},
                {"role": "user", "content": FORMAT_REMINDER},
            ]
    raise MalformedOutput(f"provider output still malformed after retries: {last_error}")

"""Chat-completion transport with strict byte fidelity plus an offline mock.

Prompts often contain the exact homoglyphs under study, so nothing in this
module may normalize, escape to ASCII, or otherwise rewrite prompt text. The
request body is serialized by hand with ``ensure_ascii=False`` so the wire
payload carries the prompt's own UTF-8 bytes.

Failures are data: a timeout or HTTP error comes back as an
:class:`Exchange` with the matching transport status, never as an exception.
Only misconfiguration (missing credential) raises.
"""

from __future__ import annotations

import enum
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field

import httpx


class TransportStatus(str, enum.Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    HTTP_ERROR = "http_error"
    DECODE_ERROR = "decode_error"


class ConfigError(Exception):
    """Provider misconfiguration, e.g. a credential env var that is unset."""


@dataclass(frozen=True)
class Exchange:
    """One prompt/response round trip, successful or not."""

    prompt: str
    response_text: str
    provider: str
    model_id: str
    latency: float
    transport_status: TransportStatus

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("exchange prompt must be non-empty")
        if self.latency < 0:
            raise ValueError("latency cannot be negative")
        ok = self.transport_status is TransportStatus.OK
        if ok and not self.response_text:
            raise ValueError("a successful exchange must carry response text")
        if not ok and self.response_text:
            raise ValueError("a failed exchange must carry empty response text")

    @property
    def succeeded(self) -> bool:
        return self.transport_status is TransportStatus.OK


def exchange_to_dict(exchange: Exchange) -> dict:
    return {
        "prompt": exchange.prompt,
        "response_text": exchange.response_text,
        "provider": exchange.provider,
        "model_id": exchange.model_id,
        "latency": exchange.latency,
        "transport_status": exchange.transport_status.value,
    }


def exchange_from_dict(obj: dict) -> Exchange:
    return Exchange(
        prompt=obj["prompt"],
        response_text=obj.get("response_text", ""),
        provider=obj["provider"],
        model_id=obj["model_id"],
        latency=float(obj.get("latency", 0.0)),
        transport_status=TransportStatus(obj.get("transport_status", "ok")),
    )


@dataclass(frozen=True)
class ProviderConfig:
    """Where and how to reach one chat-completion provider.

    Credentials are named by environment variable only; the secret itself is
    read at request time and never stored on any object in this package.
    """

    name: str
    endpoint: str
    credential_env: str
    model_id: str
    timeout: float = 30.0
    max_retries: int = 2
    retry_base_delay: float = 1.0
    max_in_flight: int = 1

    def __post_init__(self):
        if not self.name:
            raise ValueError("provider name must be non-empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 0 <= self.max_retries <= 5:
            raise ValueError("max_retries must be between 0 and 5")
        if self.retry_base_delay < 0:
            raise ValueError("retry_base_delay cannot be negative")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")


DEFAULT_PROVIDERS = {
    "chatgpt": ProviderConfig(
        name="chatgpt",
        endpoint="https://api.openai.com/v1/chat/completions",
        credential_env="OPENAI_API_KEY",
        model_id="gpt-4o-mini",
    ),
    "gemini": ProviderConfig(
        name="gemini",
        endpoint=(
            "https://generativelanguage.googleapis.com"
            "/v1beta/openai/chat/completions"
        ),
        credential_env="GEMINI_API_KEY",
        model_id="gemini-1.5-flash",
    ),
}

_ENDPOINT_ENV = "GLYPHKIT_{name}_ENDPOINT"


def resolve_endpoint(config: ProviderConfig) -> str:
    """Endpoint URL, honoring the GLYPHKIT_<NAME>_ENDPOINT override."""
    env_name = _ENDPOINT_ENV.format(name=re.sub(r"\W", "_", config.name.upper()))
    return os.environ.get(env_name, config.endpoint)


def _resolve_credential(config: ProviderConfig) -> str:
    secret = os.environ.get(config.credential_env)
    if not secret:
        raise ConfigError(
            f"provider {config.name!r} needs the {config.credential_env} "
            f"environment variable"
        )
    return secret


def encode_request_body(model_id: str, prompt: str) -> bytes:
    """Chat-completion request body with the prompt's literal UTF-8 bytes."""
    payload = {
        "model": model_id,
        "messages": [{"role": "user", "content": prompt}],
    }
    return json.dumps(payload, ensure_ascii=False).encode("utf-8")


def parse_response_text(body: bytes) -> str | None:
    """Extract choices[0].message.content; None when the shape is wrong."""
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None
    try:
        content = obj["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        return None
    if not isinstance(content, str) or not content:
        return None
    return content


class HttpProvider:
    """Sends prompts to an OpenAI-style chat endpoint.

    Retries apply to timeouts and transport failures only, with delays of
    base, 2*base, 4*base seconds. HTTP error statuses are never retried: the
    request arrived, the answer was no.
    """

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._transport = transport
        self._slots = threading.Semaphore(config.max_in_flight)

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def model_id(self) -> str:
        return self.config.model_id

    def send(self, prompt: str) -> Exchange:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        config = self.config
        secret = _resolve_credential(config)
        url = resolve_endpoint(config)
        body = encode_request_body(config.model_id, prompt)
        headers = {
            "Authorization": f"Bearer {secret}",
            "Content-Type": "application/json; charset=utf-8",
        }

        def failed(status: TransportStatus, started: float) -> Exchange:
            return Exchange(
                prompt=prompt,
                response_text="",
                provider=config.name,
                model_id=config.model_id,
                latency=time.monotonic() - started,
                transport_status=status,
            )

        started = time.monotonic()
        last_failure = TransportStatus.HTTP_ERROR
        for attempt in range(config.max_retries + 1):
            if attempt:
                time.sleep(config.retry_base_delay * 2 ** (attempt - 1))
            try:
                with self._slots:
                    with httpx.Client(
                        transport=self._transport, timeout=config.timeout
                    ) as client:
                        response = client.post(url, content=body, headers=headers)
            except httpx.TimeoutException:
                last_failure = TransportStatus.TIMEOUT
                continue
            except httpx.TransportError:
                last_failure = TransportStatus.HTTP_ERROR
                continue
            if not 200 <= response.status_code < 300:
                return failed(TransportStatus.HTTP_ERROR, started)
            text = parse_response_text(response.content)
            if text is None:
                return failed(TransportStatus.DECODE_ERROR, started)
            return Exchange(
                prompt=prompt,
                response_text=text,
                provider=config.name,
                model_id=config.model_id,
                latency=time.monotonic() - started,
                transport_status=TransportStatus.OK,
            )
        return failed(last_failure, started)


# Script value meaning "pretend this prompt timed out".
MOCK_TIMEOUT = None


@dataclass
class MockProvider:
    """Offline provider for tests and demos.

    ``script`` maps exact prompt strings to canned replies; a value of
    ``None`` simulates a timeout. With ``echo`` the prompt itself comes back,
    which preserves every byte and is handy for fidelity checks. Unscripted
    prompts get ``fallback``.
    """

    script: dict[str, str | None] = field(default_factory=dict)
    echo: bool = False
    fallback: str = "I do not have an answer for that."
    name: str = "mock"
    model_id: str = "mock"

    def send(self, prompt: str) -> Exchange:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        if prompt in self.script:
            reply = self.script[prompt]
            if reply is MOCK_TIMEOUT:
                return Exchange(
                    prompt=prompt,
                    response_text="",
                    provider=self.name,
                    model_id=self.model_id,
                    latency=0.0,
                    transport_status=TransportStatus.TIMEOUT,
                )
        elif self.echo:
            reply = prompt
        else:
            reply = self.fallback
        return Exchange(
            prompt=prompt,
            response_text=reply,
            provider=self.name,
            model_id=self.model_id,
            latency=0.0,
            transport_status=TransportStatus.OK,
        )


def make_mock_provider(
    script: dict[str, str | None] | None = None,
    *,
    echo: bool = False,
    fallback: str = "I do not have an answer for that.",
) -> MockProvider:
    return MockProvider(script=dict(script or {}), echo=echo, fallback=fallback)


def send_prompt(provider, prompt: str, *, transport=None) -> Exchange:
    """Send a prompt through a provider object or a :class:`ProviderConfig`.

    ``transport`` (an httpx transport) only applies when a config is given;
    tests use httpx.MockTransport to capture the wire payload.
    """
    if isinstance(provider, ProviderConfig):
        provider = HttpProvider(provider, transport=transport)
    return provider.send(prompt)

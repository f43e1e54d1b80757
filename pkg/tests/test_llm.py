"""Transport byte fidelity, retry policy, and the offline mock."""

import json

import httpx
import pytest

from glyphkit.llm import (
    DEFAULT_PROVIDERS,
    ConfigError,
    Exchange,
    HttpProvider,
    ProviderConfig,
    TransportStatus,
    encode_request_body,
    exchange_to_dict,
    make_mock_provider,
    parse_response_text,
    send_prompt,
)

# Prompt dense with NFC-unstable and astral-plane characters.
TRICKY = "What is \U0001D7D5? Á Å ﬁ хy ７"


def config(**overrides) -> ProviderConfig:
    fields = dict(
        name="testprov",
        endpoint="https://example.invalid/v1/chat/completions",
        credential_env="TEST_LLM_KEY",
        model_id="test-model",
        timeout=5.0,
        max_retries=2,
        retry_base_delay=0.0,  # no real sleeping in tests
    )
    fields.update(overrides)
    return ProviderConfig(**fields)


def ok_response(text="hello"):
    return httpx.Response(
        200, json={"choices": [{"message": {"role": "assistant", "content": text}}]}
    )


def test_mock_echo():
    provider = make_mock_provider(echo=True)
    exchange = send_prompt(provider, TRICKY)
    assert exchange.response_text == TRICKY
    assert exchange.transport_status is TransportStatus.OK


def test_mock_script_and_fallback():
    provider = make_mock_provider({"What is 8?": "That is the digit 8"})
    assert send_prompt(provider, "What is 8?").response_text == "That is the digit 8"
    fallback = send_prompt(provider, "unscripted")
    assert fallback.response_text == provider.fallback


def test_mock_timeout():
    provider = make_mock_provider({"slow one": None})
    exchange = send_prompt(provider, "slow one")
    assert exchange.transport_status is TransportStatus.TIMEOUT
    assert exchange.response_text == ""


def test_mock_deterministic():
    provider = make_mock_provider({"q": "a"})
    first = send_prompt(provider, "q")
    second = send_prompt(provider, "q")
    assert exchange_to_dict(first) == exchange_to_dict(second)


def test_empty_prompt_rejected():
    with pytest.raises(ValueError):
        send_prompt(make_mock_provider(), "")


def test_exchange_invariant():
    with pytest.raises(ValueError):
        Exchange("p", "", "prov", "m", 0.0, TransportStatus.OK)
    with pytest.raises(ValueError):
        Exchange("p", "text", "prov", "m", 0.0, TransportStatus.TIMEOUT)


def test_wire_bytes_carry_prompt_verbatim(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")
    captured = {}

    def handler(request: httpx.Request) -> httpx.Response:
        captured["body"] = request.content
        return ok_response()

    exchange = send_prompt(
        config(), TRICKY, transport=httpx.MockTransport(handler)
    )
    assert exchange.transport_status is TransportStatus.OK
    # The exact UTF-8 bytes of the prompt appear in the payload, unescaped.
    assert TRICKY.encode("utf-8") in captured["body"]
    decoded = json.loads(captured["body"].decode("utf-8"))
    assert decoded["messages"] == [{"role": "user", "content": TRICKY}]
    assert [ord(c) for c in decoded["messages"][0]["content"]] == [
        ord(c) for c in TRICKY
    ]


def test_response_scalars_survive(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")
    reply = "digit \U0001D7D5 and letter х"
    transport = httpx.MockTransport(lambda request: ok_response(reply))
    exchange = send_prompt(config(), "hi", transport=transport)
    assert [ord(c) for c in exchange.response_text] == [ord(c) for c in reply]


def test_missing_credential_raises(monkeypatch):
    monkeypatch.delenv("TEST_LLM_KEY", raising=False)
    with pytest.raises(ConfigError):
        send_prompt(config(), "hi")


def test_credential_not_on_objects_or_exchanges(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-supersecret")
    transport = httpx.MockTransport(lambda request: ok_response())
    provider = HttpProvider(config(), transport=transport)
    exchange = provider.send("hi")
    assert "sk-supersecret" not in json.dumps(exchange_to_dict(exchange))
    assert "sk-supersecret" not in repr(provider.config)


def test_http_error_no_retry(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500, text="boom")

    exchange = send_prompt(config(), "hi", transport=httpx.MockTransport(handler))
    assert exchange.transport_status is TransportStatus.HTTP_ERROR
    assert exchange.response_text == ""
    assert len(calls) == 1  # a well-formed HTTP refusal is never retried


def test_timeout_retries_then_succeeds(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            raise httpx.ConnectTimeout("slow")
        return ok_response("finally")

    exchange = send_prompt(config(), "hi", transport=httpx.MockTransport(handler))
    assert exchange.response_text == "finally"
    assert len(calls) == 3


def test_timeout_exhausts_retries(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")

    def handler(request):
        raise httpx.ReadTimeout("slow")

    exchange = send_prompt(config(), "hi", transport=httpx.MockTransport(handler))
    assert exchange.transport_status is TransportStatus.TIMEOUT
    assert exchange.response_text == ""


def test_transport_error_retried(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ConnectError("refused")
        return ok_response()

    exchange = send_prompt(config(), "hi", transport=httpx.MockTransport(handler))
    assert exchange.succeeded
    assert len(calls) == 2


def test_malformed_reply_is_decode_error(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")
    transport = httpx.MockTransport(
        lambda request: httpx.Response(200, text="not json at all")
    )
    exchange = send_prompt(config(), "hi", transport=transport)
    assert exchange.transport_status is TransportStatus.DECODE_ERROR


def test_parse_response_shapes():
    good = json.dumps(
        {"choices": [{"message": {"content": "yes"}}]}
    ).encode()
    assert parse_response_text(good) == "yes"
    assert parse_response_text(b"{}") is None
    assert parse_response_text(b'{"choices": []}') is None
    assert parse_response_text(b'{"choices": [{"message": {"content": ""}}]}') is None


def test_endpoint_env_override(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-test")
    monkeypatch.setenv("GLYPHKIT_TESTPROV_ENDPOINT", "https://local.test/chat")
    urls = []

    def handler(request):
        urls.append(str(request.url))
        return ok_response()

    send_prompt(config(), "hi", transport=httpx.MockTransport(handler))
    assert urls == ["https://local.test/chat"]


def test_config_validation():
    with pytest.raises(ValueError):
        config(timeout=0)
    with pytest.raises(ValueError):
        config(max_retries=9)


def test_default_provider_slots():
    assert set(DEFAULT_PROVIDERS) == {"chatgpt", "gemini"}
    for c in DEFAULT_PROVIDERS.values():
        assert c.credential_env
        assert c.endpoint.startswith("https://")


def test_request_body_is_unescaped_utf8():
    body = encode_request_body("m", "\U0001D7D5")
    assert b"\\u" not in body
    assert "\U0001D7D5".encode("utf-8") in body

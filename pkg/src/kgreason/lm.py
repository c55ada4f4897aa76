"""Pluggable language-model clients.

The pipeline only ever talks to the two-method interface below, so tests
run against :class:`MockLMClient`, a deterministic client scripted by a
YAML/JSON file, while deployments point :class:`HTTPLMClient` at a
serving endpoint.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import requests
import yaml

from .errors import LMUnavailable


class LMClient:
    """Interface: deterministic text generation plus sequence scoring."""

    def generate(
        self,
        prompt: str,
        max_tokens: int = 256,
        temperature: float = 0.0,
        num_return: int = 1,
    ) -> list[str]:
        raise NotImplementedError

    def logprob(self, prompt: str, continuation: str) -> float:
        raise NotImplementedError


@dataclass
class MockRule:
    contains: tuple[str, ...]
    responses: tuple[str, ...]
    logprob: float | None = None
    error: str | None = None

    def matches(self, prompt: str) -> bool:
        return all(s in prompt for s in self.contains)


@dataclass
class MockLMClient(LMClient):
    """Substring-scripted client; the first matching rule wins."""

    rules: list[MockRule] = field(default_factory=list)
    default_response: str = ""
    default_logprob: float = -1.0
    call_history: list[dict] = field(default_factory=list)

    def _match(self, prompt: str) -> MockRule | None:
        for rule in self.rules:
            if rule.matches(prompt):
                return rule
        return None

    def generate(self, prompt, max_tokens=256, temperature=0.0, num_return=1):
        self.call_history.append(
            {"op": "generate", "prompt": prompt, "num_return": num_return}
        )
        rule = self._match(prompt)
        if rule is not None and rule.error:
            raise LMUnavailable(rule.error)
        pool = rule.responses if rule is not None and rule.responses else (self.default_response,)
        return [pool[i % len(pool)] for i in range(num_return)]

    def logprob(self, prompt, continuation):
        self.call_history.append(
            {"op": "logprob", "prompt": prompt, "continuation": continuation}
        )
        rule = self._match(prompt)
        if rule is not None and rule.error:
            raise LMUnavailable(rule.error)
        if rule is not None and rule.logprob is not None:
            return rule.logprob
        return self.default_logprob


def load_mock_script(path: str) -> MockLMClient:
    """Build a mock client from a YAML or JSON script file."""
    with open(path, encoding="utf-8") as fh:
        spec = yaml.safe_load(fh)
    if not isinstance(spec, dict):
        raise ValueError("mock script must be a mapping")
    rules = []
    for raw in spec.get("rules", []):
        contains = raw.get("contains", [])
        if isinstance(contains, str):
            contains = [contains]
        responses = raw.get("responses", [])
        if isinstance(responses, str):
            responses = [responses]
        rules.append(
            MockRule(
                contains=tuple(contains),
                responses=tuple(responses),
                logprob=raw.get("logprob"),
                error=raw.get("error"),
            )
        )
    return MockLMClient(
        rules=rules,
        default_response=spec.get("default_response", ""),
        default_logprob=float(spec.get("default_logprob", -1.0)),
    )


class HTTPLMClient(LMClient):
    """JSON-over-HTTP client with bearer auth pulled from the environment."""

    def __init__(
        self,
        base_url: str,
        token_env: str = "LM_API_TOKEN",
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.token_env = token_env
        self.timeout = timeout
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, route: str, payload: dict) -> dict:
        try:
            resp = self._session.post(
                f"{self.base_url}/{route}",
                data=json.dumps(payload),
                headers=self._headers(),
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise LMUnavailable(f"{route}: {exc}") from exc

    def generate(self, prompt, max_tokens=256, temperature=0.0, num_return=1):
        body = self._post(
            "generate",
            {
                "prompt": prompt,
                "max_tokens": max_tokens,
                "temperature": temperature,
                "num_return": num_return,
            },
        )
        outputs = body.get("outputs")
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise LMUnavailable("generate: response missing 'outputs' list")
        return outputs

    def logprob(self, prompt, continuation):
        body = self._post("logprob", {"prompt": prompt, "continuation": continuation})
        value = body.get("logprob")
        if not isinstance(value, (int, float)):
            raise LMUnavailable("logprob: response missing numeric 'logprob'")
        return float(value)

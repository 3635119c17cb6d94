"""Prompt files, prediction stores, and the external completion endpoint client.

The toolkit never trains models; outputs come either from precomputed
prediction files or from a minimal completion endpoint (request carries the
prompt and decoding parameters, reply carries the text). An in-process echo
client stands in for an endpoint in tests and smoke runs.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .errors import GenerationError, ProtocolError


@dataclass(frozen=True)
class PromptTask:
    sample_id: str
    variant: str
    prompt: str


@dataclass(frozen=True)
class GenerationConfig:
    endpoint: str = "echo:"
    protocol: str = "plain"  # "plain" or "openai"
    credentials_env: str = "SPOR_API_TOKEN"
    timeout: float = 30.0
    max_concurrency: int = 4
    attempts: int = 3
    backoff: float = 0.5
    decoding: Mapping[str, object] = field(default_factory=dict)


def write_prompts(path: Path | str, tasks: Sequence[PromptTask]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in tasks:
            fh.write(json.dumps({"sample_id": t.sample_id, "variant": t.variant,
                                 "prompt": t.prompt},
                                sort_keys=True, ensure_ascii=False) + "\n")


def read_prompts(path: Path | str) -> list[PromptTask]:
    tasks = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            tasks.append(PromptTask(rec["sample_id"], rec["variant"], rec["prompt"]))
    return tasks


def load_store(path: Path | str) -> dict[tuple[str, str], str]:
    """Prediction store: line-delimited {sample_id, variant, text} records."""
    store: dict[tuple[str, str], str] = {}
    path = Path(path)
    if not path.exists():
        return store
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            store[(rec["sample_id"], rec.get("variant", "orig"))] = rec["text"]
    return store


class EchoClient:
    """Returns the prompt itself; a deterministic stand-in endpoint."""

    def complete(self, prompt: str) -> str:
        return prompt


class HttpClient:
    def __init__(self, config: GenerationConfig):
        self.config = config
        self.headers = {"Content-Type": "application/json"}
        token = os.environ.get(config.credentials_env, "")
        if token:
            self.headers["Authorization"] = f"Bearer {token}"

    def _payload(self, prompt: str) -> dict:
        if self.config.protocol == "openai":
            return {"prompt": prompt, **dict(self.config.decoding)}
        return {"prompt": prompt, "params": dict(self.config.decoding)}

    def _extract(self, data: object) -> str:
        try:
            if self.config.protocol == "openai":
                return data["choices"][0]["text"]
            return data["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"reply missing generated text: {data!r}") from exc

    def complete(self, prompt: str) -> str:
        last_error: Exception | None = None
        for attempt in range(self.config.attempts):
            if attempt:
                time.sleep(self.config.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(self.config.endpoint, json=self._payload(prompt),
                                     headers=self.headers, timeout=self.config.timeout)
                resp.raise_for_status()
            except requests.RequestException as exc:
                last_error = exc
                continue
            try:
                data = resp.json()
            except ValueError as exc:
                raise ProtocolError(f"endpoint reply is not JSON: {exc}") from exc
            return self._extract(data)
        raise GenerationError(f"endpoint failed after {self.config.attempts} attempts: "
                              f"{last_error}")


def make_client(config: GenerationConfig):
    if config.endpoint.startswith("echo"):
        return EchoClient()
    return HttpClient(config)


def run_generation(config: GenerationConfig, tasks: Sequence[PromptTask],
                   out_path: Path | str) -> dict[tuple[str, str], str]:
    """Produce one output per (sample, variant), resuming from partial stores.

    Results are appended in task order regardless of completion order, so a
    deterministic endpoint yields a byte-stable store. Each record also keeps
    the prompt for audit.
    """
    out_path = Path(out_path)
    existing = load_store(out_path)
    todo = [t for t in tasks if (t.sample_id, t.variant) not in existing]
    if not todo:
        return existing
    client = make_client(config)
    with ThreadPoolExecutor(max_workers=max(1, config.max_concurrency)) as pool:
        futures = [pool.submit(client.complete, t.prompt) for t in todo]
        with out_path.open("a", encoding="utf-8") as fh:
            for task, future in zip(todo, futures):
                try:
                    text = future.result()
                except (GenerationError, ProtocolError):
                    raise
                except Exception as exc:  # worker error surfaced with context
                    raise GenerationError(f"generation failed for {task.sample_id}: {exc}") from exc
                fh.write(json.dumps(
                    {"sample_id": task.sample_id, "variant": task.variant,
                     "text": text, "prompt": task.prompt},
                    sort_keys=True, ensure_ascii=False) + "\n")
                fh.flush()
    return load_store(out_path)

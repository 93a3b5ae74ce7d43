"""TOML-style configuration for CLI and service defaults.

A config file is sections of `key = value` lines:

    [decoding]
    temperature = 0.85
    top_k = 40
    stop = ["\\nApplying "]

    [evaluator]
    novelty_threshold = 0.3
    min_tokens = 30

    [backend]
    kind = "local"
    model_path = "model.bin"

    [server]
    port = 8080
    data_dir = "./data"

Values are parsed as JSON where possible (numbers, booleans, quoted
strings, arrays); anything else is taken as a bare string, so unquoted
paths work. Unknown sections or keys are errors: a typo in a config file
should fail loudly, not silently fall back to a default.
"""

from __future__ import annotations

from typing import Optional

import json

from .backends import BackendDescriptor
from .decoder import DecodingParams
from .evaluator import EvaluationThresholds

KNOWN_KEYS = {
    "decoding": (
        "max_tokens", "temperature", "top_k", "top_p",
        "presence_penalty", "frequency_penalty", "stop", "seed", "n_candidates",
    ),
    "evaluator": (
        "novelty_threshold", "min_tokens", "max_tokens",
        "novelty_weight", "relevance_weight",
    ),
    "backend": (
        "kind", "model_path", "base_url", "model", "credential_env",
        "timeout", "max_retries", "backoff_base", "max_in_flight",
    ),
    "server": ("port", "data_dir"),
}


class ConfigError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    # tolerate a trailing comment after a bare or JSON value
    head = raw.split("#", 1)[0].strip()
    if head != raw:
        try:
            return json.loads(head)
        except json.JSONDecodeError:
            pass
    if not head or head.startswith(("'", '"', "[", "{")):
        raise ValueError(f"cannot parse value {raw!r}")
    return head


def parse_config(text: str) -> dict[str, dict]:
    sections: dict[str, dict] = {}
    current: Optional[str] = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in KNOWN_KEYS:
                raise ConfigError(line_no, f"unknown section [{name}]")
            current = name
            sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(line_no, f"expected 'key = value', got {line!r}")
        if current is None:
            raise ConfigError(line_no, "key outside of any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in KNOWN_KEYS[current]:
            raise ConfigError(line_no, f"unknown key {key!r} in [{current}]")
        try:
            sections[current][key] = _parse_value(value.strip())
        except ValueError as exc:
            raise ConfigError(line_no, str(exc))
    return sections


def load_config(path) -> dict[str, dict]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def decoding_params(config: dict[str, dict], **overrides) -> DecodingParams:
    """Decoding defaults from config, with explicit overrides on top."""
    merged = dict(config.get("decoding", {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if "stop" in merged:
        merged["stop"] = tuple(merged["stop"])
    return DecodingParams(**merged)


def evaluation_thresholds(config: dict[str, dict], **overrides) -> EvaluationThresholds:
    merged = dict(config.get("evaluator", {}))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return EvaluationThresholds(**merged)


def backend_descriptor(config: dict[str, dict]) -> Optional[BackendDescriptor]:
    section = config.get("backend")
    if not section:
        return None
    return BackendDescriptor(**section)

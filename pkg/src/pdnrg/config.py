"""Run configuration: defaults < config file < command-line flags."""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .generation import HISTORY_TOKEN_CAP, KNOWLEDGE_TOKEN_CAP, Variant
from .metrics import ADHERENCE_OVERLAP
from .policy import POLICY_NAMES
from .retrieval import DEFAULT_THRESHOLD, SCORERS

CONFIG_ENV = "PDNRG_CONFIG"
DEFAULT_SEED = 0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RetrievalConfig:
    threshold: float = DEFAULT_THRESHOLD
    scorer: str = "tfidf"
    lowercase: bool = True
    strip_punct: bool = True

    def validate(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"retrieval.threshold must be in [0, 1], got {self.threshold}")
        if self.scorer not in SCORERS:
            raise ConfigError(f"retrieval.scorer must be one of {SCORERS}")


@dataclass(frozen=True)
class PolicyConfig:
    name: str = "kd-da-p"
    seed: int = DEFAULT_SEED
    weights: dict = field(default_factory=dict)
    endpoint: str | None = None

    def validate(self):
        if self.name not in POLICY_NAMES + ("gold",):
            raise ConfigError(f"policy.name must be one of {POLICY_NAMES + ('gold',)}")
        if not isinstance(self.seed, int):
            raise ConfigError("policy.seed must be an integer")


@dataclass(frozen=True)
class GenerationConfig:
    variant: str = Variant.DA_FLAG.value
    include_past_das: bool = False
    history_token_cap: int = HISTORY_TOKEN_CAP
    knowledge_token_cap: int = KNOWLEDGE_TOKEN_CAP
    endpoint: str | None = None
    timeout: float = 10.0
    retries: int = 2
    decoder_params: dict = field(default_factory=dict)

    def validate(self):
        try:
            Variant(self.variant)
        except ValueError:
            raise ConfigError(f"generation.variant must be one of {[v.value for v in Variant]}") from None
        if self.history_token_cap < 1 or self.knowledge_token_cap < 1:
            raise ConfigError("generation token caps must be >= 1")
        if self.retries < 0:
            raise ConfigError("generation.retries must be >= 0")


@dataclass(frozen=True)
class MetricsConfig:
    adherence_overlap: float = ADHERENCE_OVERLAP

    def validate(self):
        if not 0.0 <= self.adherence_overlap <= 1.0:
            raise ConfigError("metrics.adherence_overlap must be in [0, 1]")


@dataclass(frozen=True)
class Config:
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def validate(self) -> "Config":
        for f in fields(self):
            getattr(self, f.name).validate()
        return self

    def override(self, section: str, **values) -> "Config":
        """Copy with non-``None`` values replaced in one section."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        return replace(self, **{section: replace(getattr(self, section), **values)}).validate()


def _section(cls, raw: Any, name: str):
    if not isinstance(raw, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    return cls(**raw)


def config_from_mapping(data: Mapping[str, Any]) -> Config:
    sections = {f.name: f.default_factory for f in fields(Config)}
    unknown = set(data) - set(sections)
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    kwargs = {name: _section(factory().__class__, data[name], name) for name, factory in sections.items() if name in data}
    return Config(**kwargs).validate()


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Load a TOML or JSON config; ``None`` falls back to ``$PDNRG_CONFIG``, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return Config()
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.endswith(".json"):
            data = json.loads(raw.decode("utf-8"))
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_mapping(data)

"""One interface for every reasoning role, answered by an oracle, a seeded
noisy oracle, a remote chat-completion endpoint or recorded exchanges."""

from __future__ import annotations

from .backends import (
    ExchangeRecord,
    Reasoner,
    RemoteClient,
    TranscriptStore,
    invoke,
    noisy_answer,
    oracle_answer,
    prompt_hash,
)
from .config import FAMILIES, VISUAL_ROLES, AdapterConfig, ReasonerRole
from .parsing import parse_response, render_answer
from .prompts import render_prompt
from .roles import RolePlanner, RoleProperty

__all__ = [
    "FAMILIES",
    "VISUAL_ROLES",
    "AdapterConfig",
    "ExchangeRecord",
    "Reasoner",
    "ReasonerRole",
    "RemoteClient",
    "RolePlanner",
    "RoleProperty",
    "TranscriptStore",
    "invoke",
    "noisy_answer",
    "oracle_answer",
    "parse_response",
    "prompt_hash",
    "render_answer",
    "render_prompt",
]

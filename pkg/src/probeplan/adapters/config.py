"""Reasoning roles and adapter configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional


class ReasonerRole(str, Enum):
    DETECTOR = "detector"
    NAMER = "namer"
    PROPERTY_REASONER = "property_reasoner"
    PREDICATE_GEN = "predicate_gen"
    ACTION_GEN = "action_gen"
    INIT_STATE_GEN = "init_state_gen"
    GOAL_STATE_GEN = "goal_state_gen"
    TASK_PLANNER = "task_planner"
    PLAN_VALIDATOR = "plan_validator"


# Roles whose real-world counterpart looks at images.
VISUAL_ROLES = frozenset({ReasonerRole.DETECTOR, ReasonerRole.NAMER, ReasonerRole.PROPERTY_REASONER})

FAMILIES = ("oracle", "noisy", "remote", "replay")


@dataclass(frozen=True)
class AdapterConfig:
    """How every reasoning role is answered.

    ``confusion`` carries the noisy family's knobs: ``probe_accuracy``
    (object name -> probability of the right label), ``swap`` (detector),
    ``drop_suffix`` (namer) and ``plan_fault_rates`` (task planner). ``top_p=None`` picks the
    role-dependent default.
    """

    family: str = "oracle"
    seed: int = 0
    confusion: Optional[dict] = None
    endpoint: Optional[str] = None
    temperature: float = 0.2
    top_p: Optional[float] = None
    transcript_dir: Optional[Path] = None
    model: str = "gpt-4o"
    max_in_flight: int = 4
    timeout: float = 60.0
    visual_roles: frozenset = VISUAL_ROLES
    text_top_p: float = 0.7
    visual_top_p: float = 0.1

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"adapter family must be one of {FAMILIES}, got {self.family!r}")
        if self.family == "remote" and not self.endpoint:
            raise ValueError("the remote family needs an endpoint")
        if self.family == "replay" and self.transcript_dir is None:
            raise ValueError("the replay family needs a transcript_dir")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    def top_p_for(self, role: ReasonerRole) -> float:
        if self.top_p is not None:
            return self.top_p
        return self.visual_top_p if ReasonerRole(role) in self.visual_roles else self.text_top_p

    @classmethod
    def from_env(cls, family: str = "remote", **kw) -> "AdapterConfig":
        """Fill endpoint and model from LLM_ENDPOINT / LLM_MODEL when not given."""
        kw.setdefault("endpoint", os.environ.get("LLM_ENDPOINT"))
        if os.environ.get("LLM_MODEL"):
            kw.setdefault("model", os.environ["LLM_MODEL"])
        if kw.get("transcript_dir") is not None:
            kw["transcript_dir"] = Path(kw["transcript_dir"])
        return cls(family=family, **kw)

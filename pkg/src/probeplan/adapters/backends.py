"""Adapter families: oracle, noisy, remote (chat-completion POST) and replay."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import random
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

import httpx

from ..core import ConstraintSet, PhysicalProperty, render_name
from ..domain import (
    PRIMITIVES,
    describe_goal_state,
    describe_initial_state,
    generate_actions,
    generate_predicates,
)
from ..errors import AdapterFailure, ReplayMiss
from ..execution import classify_errors
from ..planning import REFERENCE_FAULT_RATES, CanonicalPlanner, noisy_plan
from ..probing import NoisyProperty, classify_decision_tree
from ..scene import assign_names, cross_view_match
from .config import AdapterConfig, ReasonerRole
from .parsing import parse_response
from .prompts import check_context, render_prompt

R = ReasonerRole


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ExchangeRecord:
    role: str
    rendered_prompt: str
    raw_response: str
    parsed_ok: bool
    timestamp: str

    @property
    def prompt_hash(self) -> str:
        return prompt_hash(self.rendered_prompt)

    def filename(self) -> str:
        return f"{self.role}-{self.prompt_hash}.json"

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "ExchangeRecord":
        return cls(d["role"], d["rendered_prompt"], d["raw_response"], bool(d["parsed_ok"]), d["timestamp"])


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# --------------------------------------------------------------------------
# Oracle and noisy answers
# --------------------------------------------------------------------------


def oracle_answer(role: ReasonerRole, ctx: Mapping[str, Any]) -> Any:
    role = ReasonerRole(role)
    if role is R.DETECTOR:
        return cross_view_match(ctx["top"], ctx["side"])
    if role is R.NAMER:
        return assign_names(ctx["descriptors"])
    if role is R.PROPERTY_REASONER:
        return classify_decision_tree(ctx["object"].dimension, ctx["triple"])
    if role is R.PREDICATE_GEN:
        return generate_predicates(ctx["objects"])
    if role is R.ACTION_GEN:
        return generate_actions(ctx["predicates"], ctx.get("primitives") or PRIMITIVES,
                                ctx.get("constraints") or ConstraintSet())
    if role is R.INIT_STATE_GEN:
        return describe_initial_state(ctx["objects"], ctx.get("predicates"))
    if role is R.GOAL_STATE_GEN:
        return describe_goal_state(ctx["objects"], ctx["instruction"])
    if role is R.TASK_PLANNER:
        return CanonicalPlanner().plan(ctx["domain"], ctx["instance"])
    if role is R.PLAN_VALIDATOR:
        return classify_errors(ctx["transcript"])
    raise AssertionError(role)


def _role_rng(config: AdapterConfig, role: ReasonerRole, key: str) -> random.Random:
    return random.Random(f"{config.seed}:{role.value}:{key}")


def noisy_answer(role: ReasonerRole, ctx: Mapping[str, Any], config: AdapterConfig) -> Any:
    """Oracle answer perturbed according to ``config.confusion``.

    property_reasoner uses the per-object ``probe_accuracy`` map; detector swaps two view
    matches with probability ``swap``; namer drops ``_N`` suffixes with
    probability ``drop_suffix``; task_planner injects plan faults at the
    ``plan_fault_rates`` schedule (context key ``attempt`` selects the
    entry). Roles without a knob answer like the oracle.
    """
    role = ReasonerRole(role)
    conf = dict(config.confusion or {})
    if role is R.PROPERTY_REASONER:
        obj = ctx["object"]
        adapter = NoisyProperty(conf.get("probe_accuracy", {}), default=float(conf.get("default_accuracy", 1.0)))
        rng = random.Random(f"{config.seed}:{obj.name}")
        return adapter.classify(obj, ctx["action"], ctx["triple"], rng)
    answer = oracle_answer(role, ctx)
    if role is R.DETECTOR and len(answer) >= 2:
        rng = _role_rng(config, role, str(len(answer)))
        if rng.random() < float(conf.get("swap", 0.0)):
            a, b = rng.sample(sorted(answer), 2)
            answer = dict(answer)
            answer[a], answer[b] = answer[b], answer[a]
        return answer
    if role is R.NAMER:
        rng = _role_rng(config, role, ",".join(answer))
        if rng.random() < float(conf.get("drop_suffix", 0.0)):
            return [n.rsplit("_", 1)[0] if n.rsplit("_", 1)[-1].isdigit() else n for n in answer]
        return answer
    if role is R.TASK_PLANNER:
        attempt = int(ctx.get("attempt", 0))
        names = ",".join(o.name for o in ctx["instance"].objects)
        rng = _role_rng(config, role, f"{names}:{attempt}")
        rates = conf.get("plan_fault_rates", REFERENCE_FAULT_RATES)
        result, _ = noisy_plan(ctx["domain"], ctx["instance"], attempt, rng, rates)
        return result
    return answer


# --------------------------------------------------------------------------
# Remote and replay
# --------------------------------------------------------------------------


class TranscriptStore:
    """One JSON file per exchange, named ``<role>-<prompt hash>.json``."""

    def __init__(self, directory: Path) -> None:
        self.directory = Path(directory)
        self._lock = threading.Lock()

    def path(self, role: ReasonerRole, prompt: str) -> Path:
        return self.directory / f"{ReasonerRole(role).value}-{prompt_hash(prompt)}.json"

    def write(self, record: ExchangeRecord) -> Path:
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            p = self.directory / record.filename()
            p.write_text(json.dumps(record.to_json(), indent=2) + "\n", encoding="utf-8")
            return p

    def read(self, role: ReasonerRole, prompt: str) -> ExchangeRecord:
        p = self.path(role, prompt)
        if not p.is_file():
            raise ReplayMiss(f"no recorded {ReasonerRole(role).value} exchange for prompt hash {prompt_hash(prompt)}")
        return ExchangeRecord.from_json(json.loads(p.read_text(encoding="utf-8")))


class RemoteClient:
    """Minimal chat-completion client with a bound on concurrent requests.

    The API key comes from ``LLM_API_KEY``; ``transport`` lets tests plug in
    an ``httpx.MockTransport``.
    """

    def __init__(self, config: AdapterConfig, transport: Optional[httpx.BaseTransport] = None) -> None:
        self.config = config
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        headers = {"Content-Type": "application/json"}
        key = os.environ.get("LLM_API_KEY")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(headers=headers, timeout=config.timeout, transport=transport)

    def complete(self, role: ReasonerRole, prompt: str) -> str:
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "top_p": self.config.top_p_for(role),
        }
        with self._slots:
            try:
                resp = self._http.post(self.config.endpoint, json=body)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                raise AdapterFailure(f"{ReasonerRole(role).value} request failed: {exc}") from exc

    def close(self) -> None:
        self._http.close()


class Reasoner:
    """Answers any role with the configured family and keeps the exchanges."""

    def __init__(self, config: AdapterConfig = AdapterConfig(), *,
                 transport: Optional[httpx.BaseTransport] = None) -> None:
        self.config = config
        self.exchanges: list[ExchangeRecord] = []
        self._lock = threading.Lock()
        self._client: Optional[RemoteClient] = None
        self._transport = transport
        self._store = TranscriptStore(config.transcript_dir) if config.transcript_dir is not None else None

    @property
    def client(self) -> RemoteClient:
        if self._client is None:
            self._client = RemoteClient(self.config, self._transport)
        return self._client

    def _record(self, rec: ExchangeRecord) -> None:
        with self._lock:
            self.exchanges.append(rec)
        if self._store is not None and self.config.family == "remote":
            self._store.write(rec)

    def invoke(self, role: ReasonerRole, context: Mapping[str, Any]) -> Any:
        role = ReasonerRole(role)
        family = self.config.family
        if family == "oracle":
            check_context(role, context)
            return oracle_answer(role, context)
        if family == "noisy":
            check_context(role, context)
            return noisy_answer(role, context, self.config)
        prompt = render_prompt(role, context)
        if family == "replay":
            raw = self._store.read(role, prompt).raw_response
        else:
            raw = self.client.complete(role, prompt)
        try:
            result = parse_response(role, raw, context)
        except AdapterFailure:
            self._record(ExchangeRecord(role.value, prompt, raw, False, _now()))
            raise
        self._record(ExchangeRecord(role.value, prompt, raw, True, _now()))
        return result

    def close(self) -> None:
        if self._client is not None:
            self._client.close()


def invoke(role: ReasonerRole, context: Mapping[str, Any], config: AdapterConfig = AdapterConfig(), *,
           transport: Optional[httpx.BaseTransport] = None) -> Any:
    reasoner = Reasoner(config, transport=transport)
    try:
        return reasoner.invoke(role, context)
    finally:
        reasoner.close()

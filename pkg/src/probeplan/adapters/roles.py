"""Bridges from the role interface to the probing and planning protocols."""

from __future__ import annotations

from .backends import Reasoner
from .config import ReasonerRole


class RoleProperty:
    """``PropertyAdapter`` that asks the property_reasoner role."""

    def __init__(self, reasoner: Reasoner) -> None:
        self.reasoner = reasoner

    def classify(self, obj, action, triple, rng):
        return self.reasoner.invoke(ReasonerRole.PROPERTY_REASONER, {"object": obj, "action": action, "triple": triple})


class RolePlanner:
    """``Planner`` that asks the task_planner role, passing feedback on replans."""

    def __init__(self, reasoner: Reasoner, constraints=None) -> None:
        self.reasoner = reasoner
        self.constraints = constraints
        self.attempt = 0

    def _ask(self, domain, instance, feedback):
        ctx = {"domain": domain, "instance": instance, "feedback": feedback,
               "attempt": self.attempt, "constraints": self.constraints}
        return self.reasoner.invoke(ReasonerRole.TASK_PLANNER, ctx)

    def plan(self, domain, instance):
        self.attempt = 0
        return self._ask(domain, instance, None)

    def replan(self, domain, instance, feedback):
        self.attempt += 1
        return self._ask(domain, instance, feedback)

"""Belief store and intention stack for BDI-style agents.

A belief is a ``(type, content)`` pair; two beliefs with the same type and
content are never stored twice.  Intentions are ``(action, done-condition)``
name pairs held on a stack: on each call of :func:`execute_intentions` the
top intention is popped if its condition holds, otherwise its action runs
once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional

EMPTY = "empty"
POPPED = "pop"
EXECUTED = "exec"


class IntentionError(ValueError):
    """An intention names an action or condition the agent does not have."""


class AgentExecutionError(RuntimeError):
    """An intention's action or condition raised while being evaluated."""

    def __init__(self, agent_id: str, intention: "Intention", cause: BaseException) -> None:
        super().__init__(f"agent {agent_id}: intention {intention.action!r} failed: {cause}")
        self.agent_id = agent_id
        self.intention = intention


@dataclass(frozen=True)
class Belief:
    type: str
    content: Any

    def __post_init__(self) -> None:
        if not isinstance(self.type, str) or not self.type:
            raise ValueError("belief type must be a non-empty string")


class BeliefStore:
    """Ordered, duplicate-free collection of beliefs."""

    def __init__(self) -> None:
        self._beliefs: list[Belief] = []

    def add(self, belief: Belief) -> bool:
        """Store ``belief`` unless an equal one exists; report whether it was added."""
        if belief in self._beliefs:
            return False
        self._beliefs.append(belief)
        return True

    def remove(self, belief: Belief) -> bool:
        try:
            self._beliefs.remove(belief)
        except ValueError:
            return False
        return True

    def update(self, belief_type: str, content: Any) -> None:
        """Replace every belief of ``belief_type`` by a single one holding ``content``."""
        new = Belief(belief_type, content)
        for i, b in enumerate(self._beliefs):
            if b.type == belief_type:
                self._beliefs[i] = new
                self._beliefs[i + 1 :] = [x for x in self._beliefs[i + 1 :] if x.type != belief_type]
                return
        self._beliefs.append(new)

    def of_type(self, belief_type: str) -> list[Belief]:
        return [b for b in self._beliefs if b.type == belief_type]

    def exists(self, belief_type: str) -> bool:
        return any(b.type == belief_type for b in self._beliefs)

    def remove_type(self, belief_type: str) -> int:
        before = len(self._beliefs)
        self._beliefs = [b for b in self._beliefs if b.type != belief_type]
        return before - len(self._beliefs)

    def __len__(self) -> int:
        return len(self._beliefs)

    def __iter__(self) -> Iterator[Belief]:
        return iter(list(self._beliefs))

    def __contains__(self, belief: object) -> bool:
        return belief in self._beliefs


def add_belief(store: BeliefStore, belief: Belief) -> bool:
    return store.add(belief)


def remove_belief(store: BeliefStore, belief: Belief) -> bool:
    return store.remove(belief)


def update_belief(store: BeliefStore, belief_type: str, content: Any) -> None:
    store.update(belief_type, content)


def beliefs_of_type(store: BeliefStore, belief_type: str) -> list[Belief]:
    return store.of_type(belief_type)


@dataclass(frozen=True)
class Intention:
    """An action name and the name of the condition that retires it.

    ``args`` is passed to both the action and the condition, so one pair of
    procedures can serve several concurrent procurements.
    """

    action: str
    done: str
    args: tuple = ()


class IntentionStack:
    def __init__(self) -> None:
        self._stack: list[Intention] = []

    def push(self, intention: Intention) -> None:
        self._stack.append(intention)

    def pop(self) -> Intention:
        return self._stack.pop()

    def remove(self, intention: Intention) -> bool:
        """Drop the topmost intention equal to ``intention``."""
        for i in range(len(self._stack) - 1, -1, -1):
            if self._stack[i] == intention:
                del self._stack[i]
                return True
        return False

    @property
    def top(self) -> Optional[Intention]:
        return self._stack[-1] if self._stack else None

    def __len__(self) -> int:
        return len(self._stack)

    def __iter__(self) -> Iterator[Intention]:
        """Iterate from the top of the stack down."""
        return iter(reversed(self._stack))


IntentionTracer = Callable[[str, Intention, str], None]


class BDIAgent:
    """Base class holding beliefs, intentions and the name registries.

    Subclasses register their procedures and predicates by name; intentions
    may only reference registered names.
    """

    def __init__(self, agent_id: str, tracer: Optional[IntentionTracer] = None) -> None:
        self.id = agent_id
        self.beliefs = BeliefStore()
        self.intentions = IntentionStack()
        self.procedures: dict[str, Callable[..., Any]] = {}
        self.predicates: dict[str, Callable[..., bool]] = {}
        self.intention_tracer = tracer

    def register_procedure(self, name: str, fn: Callable[..., Any]) -> None:
        self.procedures[name] = fn

    def register_predicate(self, name: str, fn: Callable[..., bool]) -> None:
        self.predicates[name] = fn

    def _trace(self, intention: Intention, event: str) -> None:
        if self.intention_tracer is not None:
            self.intention_tracer(self.id, intention, event)


def add_intention(agent: BDIAgent, intention: Intention) -> None:
    if intention.action not in agent.procedures:
        raise IntentionError(f"{agent.id}: unknown action {intention.action!r}")
    if intention.done not in agent.predicates:
        raise IntentionError(f"{agent.id}: unknown done-condition {intention.done!r}")
    agent.intentions.push(intention)
    agent._trace(intention, "push")


def remove_intention(agent: BDIAgent, intention: Intention) -> bool:
    removed = agent.intentions.remove(intention)
    if removed:
        agent._trace(intention, "pop")
    return removed


def execute_intentions(agent: BDIAgent) -> str:
    """Act on the top intention: pop it when done, otherwise run its action once.

    Returns ``EMPTY``, ``POPPED`` or ``EXECUTED``.
    """
    top = agent.intentions.top
    if top is None:
        return EMPTY
    try:
        done = agent.predicates[top.done](*top.args)
    except Exception as exc:
        raise AgentExecutionError(agent.id, top, exc) from exc
    if done:
        agent.intentions.pop()
        agent._trace(top, "pop")
        return POPPED
    try:
        agent.procedures[top.action](*top.args)
    except Exception as exc:
        raise AgentExecutionError(agent.id, top, exc) from exc
    agent._trace(top, "exec")
    return EXECUTED

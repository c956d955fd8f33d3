"""FIPA-ACL style messages, per-agent mailboxes and a run-local post office.

Message construction mirrors the usual ACL helpers: create a message with a
performative and a sender, append ``(key, value)`` fields, then dispatch it
either to explicit receivers or to a whole breed.  Dispatch to an agent that
does not exist is silently skipped (counted in ``PostOffice.skipped``).
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Any, Callable, Iterable, Optional

logger = logging.getLogger(__name__)

_SCALARS = (str, int, float, Decimal)


class MessageError(ValueError):
    """Raised for malformed messages or invalid dispatch requests."""


class Performative(str, Enum):
    CFP = "cfp"
    PROPOSE = "propose"
    REFUSE = "refuse"
    ACCEPT_PROPOSAL = "accept-proposal"
    REJECT_PROPOSAL = "reject-proposal"
    SUCCESS = "success"

    @classmethod
    def parse(cls, value: "Performative | str") -> "Performative":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise MessageError(f"unknown performative: {value!r}") from None


def _check_value(value: Any) -> None:
    if isinstance(value, _SCALARS):
        return
    if isinstance(value, (list, tuple)) and all(isinstance(v, _SCALARS) for v in value):
        return
    raise MessageError(f"unsupported field value: {value!r}")


@dataclass(eq=False)
class Message:
    performative: Performative
    sender: str
    receivers: list[str] = field(default_factory=list)
    fields: list[tuple[str, Any]] = field(default_factory=list)
    sent_tick: Optional[int] = None

    def add_field(self, key: str, value: Any) -> "Message":
        if not isinstance(key, str) or not key:
            raise MessageError("field key must be a non-empty string")
        _check_value(value)
        self.fields.append((key, value))
        return self

    def add_receiver(self, agent_id: str) -> "Message":
        self.receivers.append(agent_id)
        return self

    def get(self, key: str, default: Any = None) -> Any:
        """Return the most recently added value for ``key``."""
        for k, v in reversed(self.fields):
            if k == key:
                return v
        return default

    def __getitem__(self, key: str) -> Any:
        sentinel = object()
        value = self.get(key, sentinel)
        if value is sentinel:
            raise KeyError(key)
        return value


def create_message(performative: "Performative | str", sender: str) -> Message:
    """Build an empty message with its sender fixed."""
    if not sender:
        raise MessageError("sender must be a non-empty agent id")
    return Message(Performative.parse(performative), sender)


def add_field(msg: Message, key: str, value: Any) -> Message:
    return msg.add_field(key, value)


class Mailbox:
    """FIFO incoming queue owned by one agent."""

    __slots__ = ("owner", "queue", "delivered", "popped")

    def __init__(self, owner: str) -> None:
        self.owner = owner
        self.queue: deque[Message] = deque()
        self.delivered = 0
        self.popped = 0

    def deliver(self, msg: Message) -> None:
        self.queue.append(msg)
        self.delivered += 1

    def next_message(self) -> Optional[Message]:
        if not self.queue:
            return None
        self.popped += 1
        return self.queue.popleft()

    def __len__(self) -> int:
        return len(self.queue)

    def __bool__(self) -> bool:
        return bool(self.queue)


def next_message(mailbox: Mailbox) -> Optional[Message]:
    return mailbox.next_message()


def format_dispatch(msg: Message) -> str:
    """One trace line: ``tick,sender,performative,receivers,k=v;k=v``."""
    parts = []
    for key, value in msg.fields:
        if isinstance(value, (list, tuple)):
            value = " ".join(str(v) for v in value)
        parts.append(f"{key}={value}")
    return ",".join(
        [
            str(msg.sent_tick),
            msg.sender,
            msg.performative.value,
            " ".join(msg.receivers),
            ";".join(parts),
        ]
    )


class PostOffice:
    """Mailbox registry and dispatcher for a single simulation run.

    Agents are registered under a breed (``clients`` or ``sellers``); breed
    membership keeps registration order, which is the deterministic id order
    used for broadcasts.
    """

    BREEDS = ("clients", "sellers")

    def __init__(self, tracer: Optional[Callable[[str], None]] = None) -> None:
        self.tick = 0
        self.skipped = 0
        self.dispatched = 0
        # deliveries keyed by (sender breed, receiver breed)
        self.routes: dict[tuple[Optional[str], str], int] = {}
        self._tracer = tracer
        self._mailboxes: dict[str, Mailbox] = {}
        self._breed_of: dict[str, str] = {}
        self._breeds: dict[str, list[str]] = {b: [] for b in self.BREEDS}

    def register(self, agent_id: str, breed: str) -> Mailbox:
        if breed not in self._breeds:
            raise MessageError(f"unknown breed: {breed!r}")
        if agent_id in self._mailboxes:
            raise MessageError(f"agent already registered: {agent_id}")
        box = Mailbox(agent_id)
        self._mailboxes[agent_id] = box
        self._breed_of[agent_id] = breed
        self._breeds[breed].append(agent_id)
        return box

    def unregister(self, agent_id: str) -> None:
        breed = self._breed_of.pop(agent_id, None)
        if breed is None:
            return
        del self._mailboxes[agent_id]
        self._breeds[breed].remove(agent_id)

    def exists(self, agent_id: str) -> bool:
        return agent_id in self._mailboxes

    def mailbox(self, agent_id: str) -> Mailbox:
        return self._mailboxes[agent_id]

    def members(self, breed: str) -> list[str]:
        return list(self._breeds[breed])

    def breed_of(self, agent_id: str) -> Optional[str]:
        return self._breed_of.get(agent_id)

    def send(self, msg: Message) -> int:
        if not msg.receivers:
            raise MessageError("cannot dispatch a message without receivers")
        msg.sent_tick = self.tick
        delivered = 0
        for rid in msg.receivers:
            box = self._mailboxes.get(rid)
            if box is None:
                self.skipped += 1
                logger.debug("skipping nonexistent receiver %s", rid)
                continue
            box.deliver(msg)
            delivered += 1
            route = (self._breed_of.get(msg.sender), self._breed_of[rid])
            self.routes[route] = self.routes.get(route, 0) + 1
        self.dispatched += 1
        if self._tracer is not None:
            self._tracer(format_dispatch(msg))
        return delivered

    def broadcast(self, breed: str, msg: Message) -> int:
        """Deliver to every live member of ``breed`` except the sender."""
        if breed not in self._breeds:
            raise MessageError(f"unknown breed: {breed!r}")
        msg.receivers = [a for a in self._breeds[breed] if a != msg.sender]
        if not msg.receivers:
            msg.sent_tick = self.tick
            return 0
        return self.send(msg)

    def pending(self, agent_ids: Iterable[str]) -> bool:
        return any(self._mailboxes[a] for a in agent_ids if a in self._mailboxes)

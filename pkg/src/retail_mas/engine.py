"""Deterministic tick loop.

Every tick runs five phases in a fixed order:

1. each client, in id order, sells to virtual customers;
2. client mailboxes are swept until quiet (auction replies, success messages);
3. each client, in id order, checks its inventory and opens procurements;
   store-to-store exchanges are swept to quiescence right after each opening,
   so internal trades complete within the tick;
4. each seller, in id order, drains its mailbox;
5. a metrics row is recorded.

One ``random.Random`` (Mersenne Twister) stream, seeded from the config,
feeds every draw in the run in this phase/agent order.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from retail_mas.acl import PostOffice
from retail_mas.agents import Audit, ClientAgent, SellerAgent
from retail_mas.bdi import Intention
from retail_mas.market import MODES, ClientItemRecord, Scenario, SellerItemRecord, format_cents, sample_initial_state
from retail_mas.metrics import MetricsAccumulator, TradeRecord

logger = logging.getLogger(__name__)

SWEEP_LIMIT = 16


class EngineError(RuntimeError):
    """The run aborted; the message names the tick and what went wrong."""


@dataclass
class SimulationConfig:
    scenario: Scenario
    mode: Optional[str] = None
    seed: Optional[int] = None
    max_ticks: Optional[int] = None
    trace_messages: bool = False
    trace_intentions: bool = False
    trace_auctions: bool = False
    # off: stores may only trade among themselves (conservation checks)
    external_trading: bool = True

    def __post_init__(self) -> None:
        self.mode = self.mode or self.scenario.mode
        self.seed = self.scenario.seed if self.seed is None else self.seed
        self.max_ticks = self.scenario.max_ticks if self.max_ticks is None else self.max_ticks
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_ticks < 1:
            raise ValueError("max_ticks must be at least 1")


@dataclass
class SimulationResult:
    config: SimulationConfig
    clients: dict[str, dict[str, ClientItemRecord]]
    sellers: dict[str, dict[str, SellerItemRecord]]
    metrics: MetricsAccumulator
    rows: list[list[str]]
    audit: Audit
    skipped_deliveries: int
    message_trace: list[str] = field(default_factory=list)
    intention_trace: list[str] = field(default_factory=list)
    auction_trace: list[str] = field(default_factory=list)
    client_messages: int = 0

    @property
    def trades(self) -> list[TradeRecord]:
        return self.metrics.trades


class Simulation:
    """One run's agents, mailboxes and accumulators, advanced tick by tick."""

    def __init__(self, config: SimulationConfig) -> None:
        self.config = config
        scenario = config.scenario
        self.rng = random.Random(config.seed)
        self.tick = 0
        self.message_trace: list[str] = []
        self.intention_trace: list[str] = []
        self.auction_trace: list[str] = []
        self.post = PostOffice(tracer=self._trace_message)
        self.audit = Audit()
        self.metrics = MetricsAccumulator(scenario.items)
        self.rows: list[list[str]] = []
        self.sweep_counts: list[int] = []

        client_inv, seller_inv = sample_initial_state(scenario, self.rng)
        self.clients = [
            ClientAgent(
                f"c{n + 1}",
                inv,
                self.post,
                self.rng,
                mode=config.mode,
                sales_max=scenario.sales_max_per_tick,
                max_rounds=scenario.auction_max_rounds,
                on_trade=self.metrics.record,
                audit=self.audit,
                external_trading=config.external_trading,
                intention_tracer=self._trace_intention if config.trace_intentions else None,
                auction_tracer=self._trace_auction if config.trace_auctions else None,
            )
            for n, inv in enumerate(client_inv)
        ]
        self.sellers = [
            SellerAgent(f"s{n + 1}", inv, self.post, self.rng, audit=self.audit) for n, inv in enumerate(seller_inv)
        ]

    def _trace_message(self, line: str) -> None:
        if self.config.trace_messages:
            self.message_trace.append(line)

    def _trace_intention(self, agent_id: str, intention: Intention, event: str) -> None:
        args = " ".join(str(a) for a in intention.args)
        action = f"{intention.action} {args}".strip()
        done = f"{intention.done} {args}".strip()
        self.intention_trace.append(f"{self.tick},{agent_id},{action},{done},{event}")

    def _trace_auction(self, tick, auction_id, item, round_no, event, agent, price) -> None:
        cell = "" if price is None else format_cents(price)
        self.auction_trace.append(f"{tick},{auction_id},{item},{round_no},{event},{agent},{cell}")

    def intra_tick_quiesce(self) -> int:
        """Sweep client mailboxes until no client has anything left to do.

        Each sweep lets every client handle only what was queued when the
        sweep began, so one hop of a conversation costs one sweep.  Returns
        the number of sweeps that did work.
        """
        sweeps = 0
        while True:
            queued = [len(c.mailbox) for c in self.clients]
            work = 0
            for client, n in zip(self.clients, queued):
                work += client.turn(n)
            if not work:
                return sweeps
            sweeps += 1
            if sweeps > SWEEP_LIMIT:
                raise EngineError(f"tick {self.tick}: client exchanges did not quiesce within {SWEEP_LIMIT} sweeps")

    def step(self) -> None:
        self.tick += 1
        self.post.tick = self.tick
        for client in self.clients:
            client.simulate_sales()
        self.sweep_counts.append(self.intra_tick_quiesce())
        for client in self.clients:
            client.reopen_interrupted()
            for item in client.check_inventory():
                client.initiate_procurement(item)
                self.intra_tick_quiesce()
        for seller in self.sellers:
            seller.turn()
        self.rows.append(self.metrics.snapshot(self.tick))

    def run(self) -> SimulationResult:
        self.rows.append(self.metrics.snapshot(0))
        try:
            for _ in range(self.config.max_ticks):
                self.step()
        except EngineError:
            raise
        except Exception as exc:
            raise EngineError(f"tick {self.tick}: {exc}") from exc
        return SimulationResult(
            config=self.config,
            clients={c.id: c.inventory for c in self.clients},
            sellers={s.id: s.pricing for s in self.sellers},
            metrics=self.metrics,
            rows=self.rows,
            audit=self.audit,
            skipped_deliveries=self.post.skipped,
            message_trace=self.message_trace,
            intention_trace=self.intention_trace,
            auction_trace=self.auction_trace,
            client_messages=self.post.routes.get(("clients", "clients"), 0),
        )


def run(config: SimulationConfig) -> SimulationResult:
    return Simulation(config).run()

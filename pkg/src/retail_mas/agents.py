"""Store (client) and provider (seller) agents.

Clients sell to virtual customers, watch their stock, and restock each item
that falls to its minimum: first by polling the other stores (internal
contract net, when allowed), then by a reverse auction among the sellers.
Sellers answer auction cfps with a random price between their floor and the
asked price, and confirm accepted bids with a ``success`` message.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from retail_mas import auction as auc
from retail_mas.acl import Message, Performative, PostOffice, create_message
from retail_mas.bdi import (
    EMPTY,
    EXECUTED,
    BDIAgent,
    Belief,
    Intention,
    IntentionTracer,
    add_intention,
    execute_intentions,
)
from retail_mas.market import ClientItemRecord, SellerItemRecord
from retail_mas.metrics import INTERNAL, TradeRecord

logger = logging.getLogger(__name__)

INTERNAL_PENDING = "internal-pending"
AUCTION = "auction"
RETRY = "retry"
DONE = "done"

RETRY_FACTOR_PCT = 110
RETRY_CAP_FACTOR = 2


class ProtocolError(RuntimeError):
    """A safety assertion failed; the run cannot continue."""


@dataclass
class Audit:
    """Counts invariant checks made during a run and any violations found."""

    checks: int = 0
    violations: list[str] = field(default_factory=list)
    protocol_errors: int = 0

    def check(self, ok: bool, what: str) -> None:
        self.checks += 1
        if not ok:
            self.violations.append(what)

    def protocol_error(self, what: str) -> None:
        self.protocol_errors += 1
        logger.warning("protocol error: %s", what)


@dataclass
class ProcurementState:
    item: str
    phase: str
    start_tick: int
    target_quantity: int
    polled: list[str] = field(default_factory=list)
    auction: Optional[auc.AuctionState] = None
    next_ask: Optional[int] = None
    attempts: int = 0

    def __post_init__(self) -> None:
        if self.target_quantity < 1:
            raise ValueError("target quantity must be at least 1")


def inflate_ask(ask: int, cap: int) -> int:
    """Raise an unanswered ask by 10% (half-up to the cent), never beyond ``cap``."""
    return min(cap, max(ask + 1, (ask * RETRY_FACTOR_PCT + 50) // 100))


class ClientAgent(BDIAgent):
    """A store of the retail chain.

    ``mode`` is ``external-only`` or ``internal-external``.  With
    ``external_trading`` off, a procurement that no store can serve is simply
    dropped and retried when the item is next checked.
    """

    def __init__(
        self,
        agent_id: str,
        inventory: dict[str, ClientItemRecord],
        post: PostOffice,
        rng: random.Random,
        *,
        mode: str = "external-only",
        sales_max: int = 1,
        max_rounds: int = 3,
        on_trade: Optional[Callable[[TradeRecord], None]] = None,
        audit: Optional[Audit] = None,
        external_trading: bool = True,
        intention_tracer: Optional[IntentionTracer] = None,
        auction_tracer: Optional[auc.AuctionTracer] = None,
    ) -> None:
        super().__init__(agent_id, intention_tracer)
        self.inventory = inventory
        self.items = tuple(inventory)
        self.post = post
        self.mailbox = post.register(agent_id, "clients")
        self.rng = rng
        self.mode = mode
        self.sales_max = sales_max
        self.max_rounds = max_rounds
        self.on_trade = on_trade
        self.audit = audit if audit is not None else Audit()
        self.external_trading = external_trading
        self.auction_tracer = auction_tracer
        self.procurements: dict[str, ProcurementState] = {}
        self.auctions: dict[str, auc.AuctionState] = {}
        self.offers: dict[tuple[str, str], tuple[int, int]] = {}
        self.template_buy_price = {i: r.buy_price for i, r in inventory.items()}
        self._auction_seq = 0
        self._evaluated: set[tuple[str, int]] = set()

        self.register_procedure("wait-internal-replies", lambda item: None)
        self.register_procedure("evaluate-internal-proposals", self.evaluate_internal_proposals)
        self.register_procedure("evaluate-auction-round", self.evaluate_auction_round)
        self.register_predicate("internal-replies-in", self._internal_replies_in)
        self.register_predicate("internal-phase-over", self._internal_phase_over)
        self.register_predicate("round-evaluated", lambda aid, rnd: (aid, rnd) in self._evaluated)

    # -- sales and inventory -------------------------------------------------

    def simulate_sales(self) -> None:
        if self.sales_max <= 0:
            return
        randint = self.rng.randint
        for item in self.items:
            rec = self.inventory[item]
            sold = randint(0, self.sales_max)
            rec.stock = rec.stock - sold if sold < rec.stock else 0

    def check_inventory(self) -> list[str]:
        """Items at or below their minimum with no procurement under way."""
        return [
            item
            for item in self.items
            if self.inventory[item].stock <= self.inventory[item].min_stock and item not in self.procurements
        ]

    def initiate_procurement(self, item: str) -> int:
        """Start restocking ``item`` to its maximum; return messages delivered."""
        rec = self.inventory[item]
        quantity = rec.max_stock - rec.stock
        if quantity < 1 or item in self.procurements:
            return 0
        proc = ProcurementState(item, INTERNAL_PENDING, self.post.tick, quantity, next_ask=rec.buy_price)
        self.procurements[item] = proc
        if self.mode != "internal-external":
            return self._open_auction(proc)
        msg = create_message(Performative.CFP, self.id)
        msg.add_field("item", item)
        msg.add_field("quantity", quantity)
        msg.add_field("price", rec.buy_price)
        delivered = self.post.broadcast("clients", msg)
        proc.polled = list(msg.receivers)
        add_intention(self, Intention("evaluate-internal-proposals", "internal-phase-over", (item,)))
        add_intention(self, Intention("wait-internal-replies", "internal-replies-in", (item,)))
        return delivered

    def reopen_interrupted(self) -> None:
        for item in self.items:
            proc = self.procurements.get(item)
            if proc is not None and proc.phase == RETRY:
                self._open_auction(proc)

    # -- internal contract net ----------------------------------------------

    def _internal_replies_in(self, item: str) -> bool:
        proc = self.procurements.get(item)
        if proc is None or proc.phase != INTERNAL_PENDING:
            return True
        answered = {
            b.content[1]
            for t in ("proposal-from-clients", "refusal-from-clients")
            for b in self.beliefs.of_type(t)
            if b.content[0] == item
        }
        return answered >= set(proc.polled)

    def _internal_phase_over(self, item: str) -> bool:
        proc = self.procurements.get(item)
        return proc is None or proc.phase != INTERNAL_PENDING

    def respond_to_client_cfp(self, msg: Message) -> Message:
        """Offer the full requested quantity at our last paid price, or refuse."""
        item = msg.get("item")
        quantity = msg.get("quantity")
        rec = self.inventory.get(item)
        if rec is not None and isinstance(quantity, int) and quantity >= 1 and rec.stock - rec.min_stock >= quantity:
            reply = create_message(Performative.PROPOSE, self.id)
            reply.add_field("item", item)
            reply.add_field("quantity", quantity)
            reply.add_field("price", rec.buy_price)
            self.offers[(msg.sender, item)] = (quantity, rec.buy_price)
        else:
            reply = create_message(Performative.REFUSE, self.id)
            reply.add_field("item", item if isinstance(item, str) else "")
        reply.add_receiver(msg.sender)
        self.post.send(reply)
        return reply

    def evaluate_internal_proposals(self, item: str) -> Optional[str]:
        """Accept the cheapest store offer (earliest on ties); else go to auction.

        Returns the id of the accepted provider, or None.
        """
        proc = self.procurements[item]
        proposals = [b for b in self.beliefs.of_type("proposal-from-clients") if b.content[0] == item]
        for b in self.beliefs.of_type("refusal-from-clients"):
            if b.content[0] == item:
                self.beliefs.remove(b)
        for b in proposals:
            self.beliefs.remove(b)
        if not proposals:
            if self.external_trading:
                self._open_auction(proc)
            else:
                del self.procurements[item]
            return None

        best = min(proposals, key=lambda b: b.content[2])  # min keeps the first of equals
        for b in proposals:
            _, provider, price, quantity = b.content
            if b is best:
                reply = create_message(Performative.ACCEPT_PROPOSAL, self.id)
                reply.add_field("item", item)
                reply.add_field("quantity", quantity)
                reply.add_field("price", price)
            else:
                reply = create_message(Performative.REJECT_PROPOSAL, self.id)
                reply.add_field("item", item)
            reply.add_receiver(provider)
            self.post.send(reply)

        _, provider, price, quantity = best.content
        rec = self.inventory[item]
        rec.stock = min(rec.max_stock, rec.stock + quantity)
        rec.buy_price = price
        self.audit.check(rec.stock <= rec.max_stock, f"{self.id}.{item}: stock above max after restock")
        proc.phase = DONE
        del self.procurements[item]
        self._emit(
            TradeRecord(
                tick=self.post.tick,
                item=item,
                unit_price=price,
                quantity=quantity,
                kind=INTERNAL,
                elapsed_ticks=self.post.tick - proc.start_tick,
                buyer=self.id,
                provider=provider,
            )
        )
        return provider

    def fulfill_internal_sale(self, msg: Message) -> bool:
        """Hand over stock promised in an earlier proposal."""
        item = msg.get("item")
        offer = self.offers.get((msg.sender, item))
        if offer is None or offer != (msg.get("quantity"), msg.get("price")):
            self.audit.protocol_error(f"{self.id}: accept-proposal from {msg.sender} matches no offer")
            return False
        del self.offers[(msg.sender, item)]
        quantity = offer[0]
        rec = self.inventory[item]
        if rec.stock - quantity < rec.min_stock:
            raise ProtocolError(
                f"tick {self.post.tick}: {self.id} would drop {item} below min_stock selling {quantity} to {msg.sender}"
            )
        rec.stock -= quantity
        self.audit.check(rec.stock >= rec.min_stock, f"{self.id}.{item}: stock below min after internal sale")
        return True

    # -- external auction ------------------------------------------------------

    def _open_auction(self, proc: ProcurementState) -> int:
        self._auction_seq += 1
        aid = f"{self.id}-{self._auction_seq}"
        proc.phase = AUCTION
        proc.attempts += 1
        state = auc.open_auction(
            self.post,
            aid,
            self.id,
            proc.item,
            proc.target_quantity,
            proc.next_ask,
            self.max_rounds,
            self.post.tick,
            tracer=self.auction_tracer,
        )
        proc.auction = state
        if state.outcome is not None:
            self._interrupted(proc)
            return 0
        self.auctions[aid] = state
        return len(state.solicited)

    def _interrupted(self, proc: ProcurementState) -> None:
        cap = RETRY_CAP_FACTOR * self.template_buy_price[proc.item]
        proc.next_ask = inflate_ask(proc.next_ask, cap)
        proc.phase = RETRY
        if proc.auction is not None:
            self.auctions.pop(proc.auction.auction_id, None)

    def _on_seller_reply(self, msg: Message) -> None:
        state = self.auctions.get(msg.get("auction"))
        if state is None or state.outcome is not None:
            logger.warning("%s: reply for unknown or closed auction from %s", self.id, msg.sender)
            return
        if state.record_reply(msg, self.post.tick) and state.complete:
            add_intention(self, Intention("evaluate-auction-round", "round-evaluated", (state.auction_id, state.round)))

    def evaluate_auction_round(self, auction_id: str, round_no: int) -> str:
        self._evaluated.add((auction_id, round_no))
        state = self.auctions[auction_id]
        proc = self.procurements[state.item]
        action = auc.collect_round(self.post, state)
        if action == auc.SELECT:
            auc.select_winner(self.post, state)
        elif action == auc.INTERRUPTED:
            self._interrupted(proc)
        return action

    def _on_success(self, msg: Message) -> None:
        state = self.auctions.get(msg.get("auction"))
        if state is None:
            self.audit.protocol_error(f"{self.id}: success for unknown auction from {msg.sender}")
            return
        proc = self.procurements[state.item]
        rec = self.inventory[state.item]
        trade = auc.settle(rec, state, msg, self.post.tick, start_tick=proc.start_tick)
        if trade is None:
            self.audit.protocol_error(f"{self.id}: mismatched success from {msg.sender}")
            return
        self.audit.check(rec.stock <= rec.max_stock, f"{self.id}.{state.item}: stock above max after restock")
        self.beliefs.update(f"best-price:{state.item}", trade.unit_price)
        del self.auctions[state.auction_id]
        del self.procurements[state.item]
        self._evaluated = {k for k in self._evaluated if k[0] != state.auction_id}
        self._emit(trade)

    # -- message loop ------------------------------------------------------------

    def handle(self, msg: Message) -> None:
        perf = msg.performative
        from_client = self.post.breed_of(msg.sender) == "clients"
        if perf is Performative.CFP:
            if from_client:
                self.respond_to_client_cfp(msg)
        elif perf is Performative.PROPOSE:
            if from_client:
                self.beliefs.add(
                    Belief("proposal-from-clients", (msg["item"], msg.sender, msg["price"], msg["quantity"]))
                )
            else:
                self._on_seller_reply(msg)
        elif perf is Performative.REFUSE:
            if from_client:
                self.beliefs.add(Belief("refusal-from-clients", (msg["item"], msg.sender)))
            else:
                self._on_seller_reply(msg)
        elif perf is Performative.ACCEPT_PROPOSAL:
            self.fulfill_internal_sale(msg)
        elif perf is Performative.REJECT_PROPOSAL:
            self.offers.pop((msg.sender, msg.get("item")), None)
        elif perf is Performative.SUCCESS:
            self._on_success(msg)

    def run_intentions(self, limit: int = 1000) -> int:
        """Call ``execute_intentions`` until the stack empties or its top is waiting."""
        events = 0
        for _ in range(limit):
            top = self.intentions.top
            event = execute_intentions(self)
            if event == EMPTY:
                break
            if event == EXECUTED and self.intentions.top is top and not self.predicates[top.done](*top.args):
                break
            events += 1
        else:
            raise ProtocolError(f"{self.id}: intention loop did not settle")
        return events

    def turn(self, max_messages: Optional[int] = None) -> int:
        """Process up to ``max_messages`` queued messages, then run intentions.

        Returns the amount of work done (messages handled plus intention steps).
        """
        n = len(self.mailbox) if max_messages is None else min(max_messages, len(self.mailbox))
        for _ in range(n):
            self.handle(self.mailbox.next_message())
        return n + self.run_intentions()

    def _emit(self, trade: TradeRecord) -> None:
        if self.on_trade is not None:
            self.on_trade(trade)


class SellerAgent:
    """A provider: bids in auctions and ships on acceptance."""

    def __init__(
        self,
        agent_id: str,
        pricing: dict[str, SellerItemRecord],
        post: PostOffice,
        rng: random.Random,
        audit: Optional[Audit] = None,
    ) -> None:
        self.id = agent_id
        self.pricing = pricing
        self.post = post
        self.mailbox = post.register(agent_id, "sellers")
        self.rng = rng
        self.audit = audit if audit is not None else Audit()
        # auction id -> (item, quantity, price) of our latest bid
        self.open_bids: dict[str, tuple[str, int, int]] = {}

    def handle_cfp(self, msg: Message) -> Message:
        """Bid uniformly (whole cents) between our floor and the ask, or refuse."""
        item = msg.get("item")
        ask = msg.get("price")
        aid = msg.get("auction")
        rec = self.pricing.get(item)
        if rec is None or not isinstance(ask, int) or rec.min_price > ask:
            reply = create_message(Performative.REFUSE, self.id)
            self.open_bids.pop(aid, None)
        else:
            # bids never exceed our own price ceiling
            price = self.rng.randint(rec.min_price, min(ask, rec.max_price))
            reply = create_message(Performative.PROPOSE, self.id)
            self.open_bids[aid] = (item, msg.get("quantity"), price)
        reply.add_field("auction", aid)
        reply.add_field("item", item if isinstance(item, str) else "")
        if reply.performative is Performative.PROPOSE:
            reply.add_field("quantity", msg.get("quantity"))
            reply.add_field("price", price)
        reply.add_field("round", msg.get("round"))
        reply.add_receiver(msg.sender)
        self.post.send(reply)
        return reply

    def handle_accept(self, msg: Message) -> Optional[Message]:
        aid = msg.get("auction")
        bid = self.open_bids.get(aid)
        if bid is None or (bid[0], bid[2]) != (msg.get("item"), msg.get("price")):
            self.audit.protocol_error(f"{self.id}: accept-proposal for {aid} matches no bid")
            return None
        del self.open_bids[aid]
        item, quantity, price = bid
        rec = self.pricing[item]
        rec.price = price
        self.audit.check(
            rec.min_price <= rec.price <= rec.max_price, f"{self.id}.{item}: price outside band after update"
        )
        reply = create_message(Performative.SUCCESS, self.id)
        reply.add_field("auction", aid)
        reply.add_field("item", item)
        reply.add_field("quantity", quantity)
        reply.add_field("price", price)
        reply.add_receiver(msg.sender)
        self.post.send(reply)
        return reply

    def handle_reject(self, msg: Message) -> None:
        self.open_bids.pop(msg.get("auction"), None)

    def handle(self, msg: Message) -> None:
        perf = msg.performative
        if perf is Performative.CFP:
            self.handle_cfp(msg)
        elif perf is Performative.ACCEPT_PROPOSAL:
            self.handle_accept(msg)
        elif perf is Performative.REJECT_PROPOSAL:
            self.handle_reject(msg)

    def turn(self) -> int:
        n = 0
        while self.mailbox:
            self.handle(self.mailbox.next_message())
            n += 1
        return n

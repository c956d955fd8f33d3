"""Multi-round reverse auction run by a client against every seller.

Round 1 asks the client's last paid price.  Each later round asks the lowest
bid of the round before.  The auction stops at ``max_rounds`` or as soon as a
round draws a single bid; the lowest final-round bid wins, ties going to the
bid that arrived first.  If nobody bids in round 1 the auction is interrupted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from retail_mas.acl import Message, Performative, PostOffice, create_message
from retail_mas.market import ClientItemRecord
from retail_mas.metrics import EXTERNAL, TradeRecord

logger = logging.getLogger(__name__)

NEW_ROUND = "new-round"
SELECT = "select"
INTERRUPTED = "interrupted"

# tick, auction id, item, round, event, agent, price (cents or None)
AuctionTracer = Callable[[int, str, str, int, str, str, Optional[int]], None]


@dataclass(frozen=True)
class Bid:
    seller: str
    price: int
    arrival: int


@dataclass
class AuctionState:
    auction_id: str
    item: str
    requester: str
    quantity: int
    max_rounds: int
    asked_price: int
    start_tick: int
    round: int = 1
    bids: list[Bid] = field(default_factory=list)
    refusals: set[str] = field(default_factory=set)
    solicited: list[str] = field(default_factory=list)
    asks: list[int] = field(default_factory=list)
    outcome: Optional["AuctionOutcome"] = None
    tracer: Optional[AuctionTracer] = field(default=None, repr=False, compare=False)

    def trace(self, tick: int, event: str, agent: str = "", price: Optional[int] = None) -> None:
        if self.tracer is not None:
            self.tracer(tick, self.auction_id, self.item, self.round, event, agent, price)

    @property
    def complete(self) -> bool:
        """Every solicited seller has answered the current round."""
        return len(self.bids) + len(self.refusals) >= len(self.solicited)

    def record_reply(self, msg: Message, tick: int) -> bool:
        """Register a propose/refuse for the current round; return False if ignored."""
        sender = msg.sender
        if sender not in self.solicited or msg.get("round") != self.round:
            logger.warning("auction %s: ignoring reply from %s", self.auction_id, sender)
            return False
        if sender in self.refusals or any(b.seller == sender for b in self.bids):
            logger.warning("auction %s: duplicate reply from %s", self.auction_id, sender)
            return False
        if msg.performative is Performative.PROPOSE:
            price = msg["price"]
            if not 0 <= price <= self.asked_price:
                logger.warning("auction %s: bid %s above ask from %s", self.auction_id, price, sender)
                return False
            self.bids.append(Bid(sender, price, len(self.bids)))
            self.trace(tick, "bid", sender, price)
        elif msg.performative is Performative.REFUSE:
            self.refusals.add(sender)
            self.trace(tick, "refuse", sender)
        else:
            return False
        return True


@dataclass(frozen=True)
class AuctionOutcome:
    winner: Optional[str]
    price: Optional[int]
    rounds_used: int
    elapsed_ticks: int

    @property
    def interrupted(self) -> bool:
        return self.winner is None


def _broadcast_cfp(post: PostOffice, auction: AuctionState) -> int:
    msg = create_message(Performative.CFP, auction.requester)
    msg.add_field("auction", auction.auction_id)
    msg.add_field("item", auction.item)
    msg.add_field("quantity", auction.quantity)
    msg.add_field("price", auction.asked_price)
    msg.add_field("round", auction.round)
    delivered = post.broadcast("sellers", msg)
    auction.solicited = list(msg.receivers)
    auction.asks.append(auction.asked_price)
    return delivered


def open_auction(
    post: PostOffice,
    auction_id: str,
    requester: str,
    item: str,
    quantity: int,
    initial_ask: int,
    max_rounds: int,
    start_tick: int,
    tracer: Optional[AuctionTracer] = None,
) -> AuctionState:
    """Create the auction and send the round-1 cfp to every seller.

    With no sellers the returned state already carries an interrupted outcome.
    """
    auction = AuctionState(
        auction_id=auction_id,
        item=item,
        requester=requester,
        quantity=quantity,
        max_rounds=max_rounds,
        asked_price=initial_ask,
        start_tick=start_tick,
        tracer=tracer,
    )
    auction.trace(post.tick, "open", requester, initial_ask)
    if _broadcast_cfp(post, auction) == 0:
        auction.outcome = AuctionOutcome(None, None, 0, post.tick - start_tick)
        auction.trace(post.tick, "interrupted", requester)
    return auction


def winning_bid(bids: list[Bid]) -> Bid:
    return min(bids, key=lambda b: (b.price, b.arrival))


def collect_round(post: PostOffice, auction: AuctionState) -> str:
    """Decide what follows a fully answered round; may broadcast the next cfp."""
    tick = post.tick
    if not auction.bids:
        # a later round always draws the previous lowest bidder, so this is round 1
        auction.outcome = AuctionOutcome(None, None, auction.round, tick - auction.start_tick)
        auction.trace(tick, "interrupted", auction.requester)
        return INTERRUPTED
    if len(auction.bids) == 1 or auction.round >= auction.max_rounds:
        return SELECT
    auction.asked_price = min(b.price for b in auction.bids)
    auction.round += 1
    auction.bids = []
    auction.refusals = set()
    auction.trace(tick, "new-round", auction.requester, auction.asked_price)
    _broadcast_cfp(post, auction)
    return NEW_ROUND


def select_winner(post: PostOffice, auction: AuctionState) -> AuctionOutcome:
    """Award the final round and notify every final-round bidder."""
    best = winning_bid(auction.bids)
    for bid in auction.bids:
        if bid is best:
            msg = create_message(Performative.ACCEPT_PROPOSAL, auction.requester)
            msg.add_field("auction", auction.auction_id)
            msg.add_field("item", auction.item)
            msg.add_field("quantity", auction.quantity)
            msg.add_field("price", bid.price)
        else:
            msg = create_message(Performative.REJECT_PROPOSAL, auction.requester)
            msg.add_field("auction", auction.auction_id)
            msg.add_field("item", auction.item)
        msg.add_receiver(bid.seller)
        post.send(msg)
    auction.outcome = AuctionOutcome(best.seller, best.price, auction.round, post.tick - auction.start_tick)
    auction.trace(post.tick, "winner", best.seller, best.price)
    return auction.outcome


def settle(
    record: ClientItemRecord, auction: AuctionState, msg: Message, tick: int, start_tick: Optional[int] = None
) -> Optional[TradeRecord]:
    """Apply a seller's success message to the requester's item record.

    ``start_tick`` is when the whole procurement began (earlier than the
    auction's own start if internal polling or interrupted attempts came
    first).  Returns None, leaving the record untouched, when the message does
    not match the awarded bid.
    """
    outcome = auction.outcome
    if (
        outcome is None
        or outcome.interrupted
        or msg.performative is not Performative.SUCCESS
        or msg.sender != outcome.winner
        or msg.get("auction") != auction.auction_id
        or msg.get("item") != auction.item
        or msg.get("quantity") != auction.quantity
        or msg.get("price") != outcome.price
    ):
        logger.warning("auction %s: mismatched success message from %s", auction.auction_id, msg.sender)
        return None
    record.stock = min(record.max_stock, record.stock + auction.quantity)
    record.buy_price = outcome.price
    begun = auction.start_tick if start_tick is None else start_tick
    return TradeRecord(
        tick=tick,
        item=auction.item,
        unit_price=outcome.price,
        quantity=auction.quantity,
        kind=EXTERNAL,
        elapsed_ticks=tick - begun,
        buyer=auction.requester,
        provider=outcome.winner,
    )

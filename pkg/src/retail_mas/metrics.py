"""Trade records and the run-level price/time/ratio metrics.

``aip`` is the unweighted mean unit price over all trades, ``aitt`` the mean
number of ticks from first consulting a counterparty to the stock update, and
``itr`` the ratio of internal to external trades.  Each returns ``None`` when
undefined (no trades, or no external trades for ``itr``); ``None`` is written
as an empty CSV cell, never as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from retail_mas.market import format_cents

INTERNAL = "internal"
EXTERNAL = "external"

METRICS_HEADER = ("tick", "k", "aip", "aitt", "itr", "internal", "external")
TRADES_HEADER = ("tick", "item", "price", "quantity", "kind", "elapsed_ticks")


@dataclass(frozen=True)
class TradeRecord:
    tick: int
    item: str
    unit_price: int  # cents
    quantity: int
    kind: str
    elapsed_ticks: int
    buyer: str = ""
    provider: str = ""

    def __post_init__(self) -> None:
        if self.unit_price <= 0:
            raise ValueError(f"unit price must be positive, got {self.unit_price}")
        if self.quantity < 1:
            raise ValueError(f"quantity must be >= 1, got {self.quantity}")
        if self.elapsed_ticks < 0:
            raise ValueError(f"elapsed ticks must be >= 0, got {self.elapsed_ticks}")
        if self.kind not in (INTERNAL, EXTERNAL):
            raise ValueError(f"unknown trade kind {self.kind!r}")

    def row(self) -> list[str]:
        return [
            str(self.tick),
            self.item,
            format_cents(self.unit_price),
            str(self.quantity),
            self.kind,
            str(self.elapsed_ticks),
        ]


class MetricsAccumulator:
    """Running totals over every recorded trade."""

    def __init__(self, items: Iterable[str] = ()) -> None:
        self.items = tuple(items)
        self.trades: list[TradeRecord] = []
        self.internal_count = 0
        self.external_count = 0
        self.latest_price: dict[str, int] = {}
        self._price_total = 0
        self._ticks_total = 0

    @property
    def k(self) -> int:
        return len(self.trades)

    def record(self, trade: TradeRecord) -> None:
        self.trades.append(trade)
        if trade.kind == INTERNAL:
            self.internal_count += 1
        else:
            self.external_count += 1
        self._price_total += trade.unit_price
        self._ticks_total += trade.elapsed_ticks
        self.latest_price[trade.item] = trade.unit_price

    def aip(self) -> Optional[float]:
        """Mean unit price in currency units."""
        if not self.trades:
            return None
        return self._price_total / (100 * len(self.trades))

    def aitt(self) -> Optional[float]:
        if not self.trades:
            return None
        return self._ticks_total / len(self.trades)

    def itr(self) -> Optional[float]:
        if self.external_count == 0:
            return None
        return self.internal_count / self.external_count

    def snapshot(self, tick: int) -> list[str]:
        row = [
            str(tick),
            str(self.k),
            _cell(self.aip()),
            _cell(self.aitt()),
            _cell(self.itr()),
            str(self.internal_count),
            str(self.external_count),
        ]
        for item in self.items:
            price = self.latest_price.get(item)
            row.append("" if price is None else format_cents(price))
        return row

    def header(self) -> list[str]:
        return list(METRICS_HEADER) + list(self.items)


def record_trade(acc: MetricsAccumulator, trade: TradeRecord) -> MetricsAccumulator:
    acc.record(trade)
    return acc


def aip(acc: MetricsAccumulator) -> Optional[float]:
    return acc.aip()


def aitt(acc: MetricsAccumulator) -> Optional[float]:
    return acc.aitt()


def itr(acc: MetricsAccumulator) -> Optional[float]:
    return acc.itr()


def snapshot(acc: MetricsAccumulator, tick: int) -> list[str]:
    return acc.snapshot(tick)


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(value)

"""Item records, scenario files and initial-state sampling.

Prices are held as integer cents everywhere inside the simulator.  Scenario
files are JSON documents; prices in them are written as decimal numbers with
at most two fractional digits.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

MODES = ("external-only", "internal-external")

TOP_LEVEL_KEYS = (
    "items",
    "client_templates",
    "seller_templates",
    "clients",
    "sellers",
    "mode",
    "seed",
    "max_ticks",
    "auction_max_rounds",
    "sales_max_per_tick",
)
OPTIONAL_KEYS = ("description",)

CLIENT_FIELDS = ("stock", "min_stock", "max_stock", "buy_price")
SELLER_FIELDS = ("price", "min_price", "max_price")


class ScenarioError(ValueError):
    """Scenario failed to parse or validate; ``diagnostics`` lists every problem."""

    def __init__(self, diagnostics: list[str]) -> None:
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def to_cents(value: Any) -> int:
    """Convert a decimal amount (str, int, float or Decimal) to integer cents."""
    if isinstance(value, bool):
        raise ValueError(f"not a price: {value!r}")
    try:
        d = value if isinstance(value, Decimal) else Decimal(str(value))
    except InvalidOperation:
        raise ValueError(f"not a price: {value!r}") from None
    cents = d * 100
    if cents != cents.to_integral_value():
        raise ValueError(f"price {value} has more than two decimals")
    return int(cents)


def format_cents(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"


def cents_to_json(cents: int) -> float:
    # repr of the nearest double to a 2-decimal value is that value
    return cents / 100


def round_half_up(x: float) -> int:
    return int(Decimal(x).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass
class ClientItemRecord:
    item: str
    stock: int
    min_stock: int
    max_stock: int
    buy_price: int

    def problems(self) -> list[str]:
        out = []
        for name in ("stock", "min_stock", "max_stock"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                out.append(f"{name} must be an integer")
            elif v < 0:
                out.append(f"{name} {v} < 0")
        if out:
            return out
        if self.min_stock > self.max_stock:
            out.append(f"min_stock {self.min_stock} > max_stock {self.max_stock}")
        if self.stock > self.max_stock:
            out.append(f"stock {self.stock} > max_stock {self.max_stock}")
        if self.buy_price <= 0:
            out.append(f"buy_price {format_cents(self.buy_price)} <= 0")
        return out


@dataclass
class SellerItemRecord:
    item: str
    price: int
    min_price: int
    max_price: int

    def problems(self) -> list[str]:
        out = []
        if self.min_price <= 0:
            out.append(f"min_price {format_cents(self.min_price)} <= 0")
        if self.price < self.min_price:
            out.append(f"price {format_cents(self.price)} < min_price {format_cents(self.min_price)}")
        if self.price > self.max_price:
            out.append(f"price {format_cents(self.price)} > max_price {format_cents(self.max_price)}")
        if self.min_price > self.max_price:
            out.append(
                f"min_price {format_cents(self.min_price)} > max_price {format_cents(self.max_price)}"
            )
        return out


ClientTemplate = dict[str, ClientItemRecord]
SellerTemplate = dict[str, SellerItemRecord]


@dataclass
class Scenario:
    items: tuple[str, ...]
    client_templates: list[ClientTemplate]
    seller_templates: list[SellerTemplate]
    clients: int
    sellers: int
    mode: str = "external-only"
    seed: int = 1
    max_ticks: int = 25000
    auction_max_rounds: int = 3
    sales_max_per_tick: int = 1
    # explicit template index per agent; None means sampled by the run's RNG
    client_assignment: Optional[list[int]] = None
    seller_assignment: Optional[list[int]] = None
    description: str = ""

    def problems(self) -> list[str]:
        out = []
        if not self.items:
            out.append("items: catalog is empty")
        if len(set(self.items)) != len(self.items):
            out.append("items: duplicate item ids")
        if not self.client_templates:
            out.append("client_templates: at least one template required")
        if not self.seller_templates:
            out.append("seller_templates: at least one template required")
        catalog = set(self.items)
        for kind, templates in (("client_templates", self.client_templates), ("seller_templates", self.seller_templates)):
            for i, tpl in enumerate(templates):
                if set(tpl) != catalog:
                    missing = sorted(catalog - set(tpl))
                    extra = sorted(set(tpl) - catalog)
                    out.append(f"{kind}[{i}]: item set mismatch (missing {missing}, extra {extra})")
                for item, rec in tpl.items():
                    out.extend(f"{kind}[{i}].{item}: {p}" for p in rec.problems())
        if self.clients < 1:
            out.append(f"clients: count {self.clients} < 1")
        if self.sellers < 1:
            out.append(f"sellers: count {self.sellers} < 1")
        for key, assignment, templates in (
            ("clients", self.client_assignment, self.client_templates),
            ("sellers", self.seller_assignment, self.seller_templates),
        ):
            if assignment is not None:
                bad = [a for a in assignment if not 0 <= a < len(templates)]
                if bad:
                    out.append(f"{key}: template index out of range {bad}")
        if self.mode not in MODES:
            out.append(f"mode: {self.mode!r} not one of {list(MODES)}")
        if self.max_ticks < 1:
            out.append(f"max_ticks: {self.max_ticks} < 1")
        if self.auction_max_rounds < 1:
            out.append(f"auction_max_rounds: {self.auction_max_rounds} < 1")
        if self.sales_max_per_tick < 0:
            out.append(f"sales_max_per_tick: {self.sales_max_per_tick} < 0")
        return out


def perturb_client_template(base: ClientTemplate, items: tuple[str, ...], fraction: float, seed: int) -> ClientTemplate:
    """Scale every field of ``base`` by an independent factor in [1-f, 1+f], then clamp."""
    rng = random.Random(seed)
    out = {}
    for item in items:
        r = base[item]
        max_stock = max(1, round_half_up(r.max_stock * (1 + rng.uniform(-fraction, fraction))))
        min_stock = min(max_stock, max(0, round_half_up(r.min_stock * (1 + rng.uniform(-fraction, fraction)))))
        stock = min(max_stock, max(0, round_half_up(r.stock * (1 + rng.uniform(-fraction, fraction)))))
        buy_price = max(1, round_half_up(r.buy_price * (1 + rng.uniform(-fraction, fraction))))
        out[item] = ClientItemRecord(item, stock, min_stock, max_stock, buy_price)
    return out


def perturb_seller_template(base: SellerTemplate, items: tuple[str, ...], fraction: float, seed: int) -> SellerTemplate:
    rng = random.Random(seed)
    out = {}
    for item in items:
        r = base[item]
        price = round_half_up(r.price * (1 + rng.uniform(-fraction, fraction)))
        min_price = max(1, round_half_up(r.min_price * (1 + rng.uniform(-fraction, fraction))))
        max_price = max(min_price, round_half_up(r.max_price * (1 + rng.uniform(-fraction, fraction))))
        price = min(max_price, max(min_price, price))
        out[item] = SellerItemRecord(item, price, min_price, max_price)
    return out


def _int(value: Any, where: str, diags: list[str]) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, Decimal)) or value != int(value):
        diags.append(f"{where}: expected an integer, got {value!r}")
        return 0
    return int(value)


def _cents(value: Any, where: str, diags: list[str]) -> int:
    try:
        return to_cents(value)
    except ValueError as exc:
        diags.append(f"{where}: {exc}")
        return 0


def _parse_templates(raw: Any, kind: str, items: tuple[str, ...], diags: list[str]) -> list[dict]:
    if not isinstance(raw, list):
        diags.append(f"{kind}: expected a list")
        return []
    parsed: list[Optional[dict]] = []
    field_names = CLIENT_FIELDS if kind == "client_templates" else SELLER_FIELDS
    for i, tpl in enumerate(raw):
        where = f"{kind}[{i}]"
        if not isinstance(tpl, dict):
            diags.append(f"{where}: expected an object")
            parsed.append(None)
            continue
        if "perturb" in tpl:
            params = tpl["perturb"]
            base = params.get("base", 0) if isinstance(params, dict) else None
            if not isinstance(base, int) or not 0 <= base < i or parsed[base] is None:
                diags.append(f"{where}.perturb: base must index an earlier explicit template")
                parsed.append(None)
                continue
            fraction = float(params.get("fraction", 0.1))
            seed = int(params.get("seed", i))
            fn = perturb_client_template if kind == "client_templates" else perturb_seller_template
            try:
                parsed.append(fn(parsed[base], items, fraction, seed))
            except KeyError as exc:
                diags.append(f"{where}.perturb: base template lacks item {exc}")
                parsed.append(None)
            continue
        rows = {}
        for item, row in tpl.items():
            rwhere = f"{where}.{item}"
            if not isinstance(row, dict):
                diags.append(f"{rwhere}: expected an object")
                continue
            unknown = sorted(set(row) - set(field_names))
            missing = [f for f in field_names if f not in row]
            if unknown:
                diags.append(f"{rwhere}: unknown fields {unknown}")
            if missing:
                diags.append(f"{rwhere}: missing fields {missing}")
                continue
            if kind == "client_templates":
                rows[item] = ClientItemRecord(
                    item,
                    _int(row["stock"], f"{rwhere}.stock", diags),
                    _int(row["min_stock"], f"{rwhere}.min_stock", diags),
                    _int(row["max_stock"], f"{rwhere}.max_stock", diags),
                    _cents(row["buy_price"], f"{rwhere}.buy_price", diags),
                )
            else:
                rows[item] = SellerItemRecord(
                    item,
                    _cents(row["price"], f"{rwhere}.price", diags),
                    _cents(row["min_price"], f"{rwhere}.min_price", diags),
                    _cents(row["max_price"], f"{rwhere}.max_price", diags),
                )
        parsed.append(rows)
    return [p if p is not None else {} for p in parsed]


def _parse_count(value: Any, key: str, diags: list[str]) -> tuple[int, Optional[list[int]]]:
    if isinstance(value, list):
        assignment = [_int(v, key, diags) for v in value]
        return len(assignment), assignment
    return _int(value, key, diags), None


def parse_scenario(data: Any) -> Scenario:
    """Validate a decoded scenario document and build a :class:`Scenario`."""
    if not isinstance(data, dict):
        raise ScenarioError(["scenario: top level must be an object"])
    diags: list[str] = []
    missing = [k for k in TOP_LEVEL_KEYS if k not in data]
    unknown = sorted(set(data) - set(TOP_LEVEL_KEYS) - set(OPTIONAL_KEYS))
    if missing:
        diags.append(f"scenario: missing keys {missing}")
    if unknown:
        diags.append(f"scenario: unknown keys {unknown}")
    if diags:
        raise ScenarioError(diags)

    items = data["items"]
    if not isinstance(items, list) or not all(isinstance(x, str) and x for x in items):
        raise ScenarioError(["items: expected a list of non-empty strings"])
    items = tuple(items)
    client_templates = _parse_templates(data["client_templates"], "client_templates", items, diags)
    seller_templates = _parse_templates(data["seller_templates"], "seller_templates", items, diags)
    clients, client_assignment = _parse_count(data["clients"], "clients", diags)
    sellers, seller_assignment = _parse_count(data["sellers"], "sellers", diags)
    scenario = Scenario(
        items=items,
        client_templates=client_templates,
        seller_templates=seller_templates,
        clients=clients,
        sellers=sellers,
        mode=str(data["mode"]),
        seed=_int(data["seed"], "seed", diags),
        max_ticks=_int(data["max_ticks"], "max_ticks", diags),
        auction_max_rounds=_int(data["auction_max_rounds"], "auction_max_rounds", diags),
        sales_max_per_tick=_int(data["sales_max_per_tick"], "sales_max_per_tick", diags),
        client_assignment=client_assignment,
        seller_assignment=seller_assignment,
        description=str(data.get("description", "")),
    )
    diags.extend(scenario.problems())
    if diags:
        raise ScenarioError(diags)
    return scenario


def bundled_scenarios() -> list[str]:
    root = resources.files("retail_mas") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario(name_or_path: Union[str, os.PathLike]) -> Path:
    """Map a file path or a bundled scenario name to a readable path."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    candidate = resources.files("retail_mas") / "scenarios" / f"{Path(name_or_path).name}.json"
    if candidate.is_file():
        return Path(str(candidate))
    raise ScenarioError([f"scenario: no such file or bundled scenario {str(name_or_path)!r}"])


def load_scenario(name_or_path: Union[str, os.PathLike]) -> Scenario:
    path = resolve_scenario(name_or_path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: parse error: {exc}"]) from None
    return parse_scenario(data)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize with every template written out explicitly."""

    def client_row(r: ClientItemRecord) -> dict:
        return {
            "stock": r.stock,
            "min_stock": r.min_stock,
            "max_stock": r.max_stock,
            "buy_price": cents_to_json(r.buy_price),
        }

    def seller_row(r: SellerItemRecord) -> dict:
        return {
            "price": cents_to_json(r.price),
            "min_price": cents_to_json(r.min_price),
            "max_price": cents_to_json(r.max_price),
        }

    data: dict[str, Any] = {}
    if scenario.description:
        data["description"] = scenario.description
    data.update(
        items=list(scenario.items),
        client_templates=[{i: client_row(t[i]) for i in scenario.items} for t in scenario.client_templates],
        seller_templates=[{i: seller_row(t[i]) for i in scenario.items} for t in scenario.seller_templates],
        clients=list(scenario.client_assignment) if scenario.client_assignment is not None else scenario.clients,
        sellers=list(scenario.seller_assignment) if scenario.seller_assignment is not None else scenario.sellers,
        mode=scenario.mode,
        seed=scenario.seed,
        max_ticks=scenario.max_ticks,
        auction_max_rounds=scenario.auction_max_rounds,
        sales_max_per_tick=scenario.sales_max_per_tick,
    )
    return data


def dump_scenario(scenario: Scenario, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


def sample_initial_state(
    scenario: Scenario, rng: random.Random
) -> tuple[list[ClientTemplate], list[SellerTemplate]]:
    """Give each agent an independent copy of a template picked uniformly by ``rng``."""

    def pick(count: int, assignment: Optional[list[int]], templates: list) -> list:
        out = []
        for n in range(count):
            idx = assignment[n] if assignment is not None else rng.randrange(len(templates))
            out.append({item: replace(rec) for item, rec in templates[idx].items()})
        return out

    clients = pick(scenario.clients, scenario.client_assignment, scenario.client_templates)
    sellers = pick(scenario.sellers, scenario.seller_assignment, scenario.seller_templates)
    return clients, sellers


def with_overrides(scenario: Scenario, **overrides: Any) -> Scenario:
    """Copy of ``scenario`` with non-None overrides applied and re-validated."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    out = replace(scenario, **changes)
    problems = out.problems()
    if problems:
        raise ScenarioError(problems)
    return out

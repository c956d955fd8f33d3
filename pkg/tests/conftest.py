import random
from dataclasses import replace

import pytest

from retail_mas.acl import PostOffice
from retail_mas.agents import Audit, ClientAgent, SellerAgent
from retail_mas.market import ClientItemRecord, Scenario, SellerItemRecord, load_scenario

ITEMS = ("pao", "leite 1lt", "bolachas", "cerveja", "fraldas", "peixe", "carne")

# reference client/seller initial-state tables, prices in cents
TABLE1 = {
    "pao": (120, 25, 120, 12),
    "leite 1lt": (100, 10, 100, 54),
    "bolachas": (50, 15, 50, 80),
    "cerveja": (250, 12, 250, 35),
    "fraldas": (15, 5, 15, 170),
    "peixe": (20, 2, 20, 275),
    "carne": (30, 5, 30, 210),
}
TABLE2 = {
    "pao": (12, 10, 15),
    "leite 1lt": (54, 45, 65),
    "bolachas": (70, 50, 80),
    "cerveja": (35, 27, 45),
    "fraldas": (150, 130, 190),
    "peixe": (250, 220, 320),
    "carne": (225, 195, 273),
}


def client_template(**overrides):
    tpl = {item: ClientItemRecord(item, *TABLE1[item]) for item in ITEMS}
    for item, fields in overrides.items():
        tpl[item.replace("_", " ")] = replace(tpl[item.replace("_", " ")], **fields)
    return tpl


def seller_template(**overrides):
    tpl = {item: SellerItemRecord(item, *TABLE2[item]) for item in ITEMS}
    for item, fields in overrides.items():
        tpl[item] = replace(tpl[item], **fields)
    return tpl


def make_scenario(client_templates=None, seller_templates=None, **kw):
    client_templates = client_templates or [client_template()]
    seller_templates = seller_templates or [seller_template()]
    defaults = dict(clients=len(client_templates), sellers=len(seller_templates))
    defaults.update(kw)
    return Scenario(ITEMS, client_templates, seller_templates, **defaults)


class World:
    """A post office plus hand-built agents for protocol-level tests."""

    def __init__(self, seed=0):
        self.post = PostOffice()
        self.rng = random.Random(seed)
        self.audit = Audit()
        self.trades = []

    def client(self, cid, inventory=None, **kw):
        kw.setdefault("sales_max", 0)
        return ClientAgent(
            cid,
            inventory or client_template(),
            self.post,
            self.rng,
            on_trade=self.trades.append,
            audit=self.audit,
            **kw,
        )

    def seller(self, sid, pricing=None):
        return SellerAgent(sid, pricing or seller_template(), self.post, self.rng, audit=self.audit)


@pytest.fixture
def world():
    return World()


@pytest.fixture(scope="session")
def default_scenario():
    return load_scenario("paper-default")


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

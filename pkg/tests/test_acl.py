import pytest
from hypothesis import given
from hypothesis import strategies as st

from retail_mas.acl import (
    Mailbox,
    MessageError,
    Performative,
    PostOffice,
    add_field,
    create_message,
    format_dispatch,
    next_message,
)


def test_create_message_is_empty():
    m = create_message("cfp", "c1")
    assert m.performative is Performative.CFP
    assert m.sender == "c1"
    assert m.receivers == [] and m.fields == [] and m.sent_tick is None


def test_create_message_accepts_enum_member():
    assert create_message(Performative.ACCEPT_PROPOSAL, "c2").sender == "c2"


def test_unknown_performative_rejected():
    with pytest.raises(MessageError, match="haggle"):
        create_message("haggle", "c1")


def test_add_field_appends_and_latest_wins():
    m = create_message("propose", "s1")
    add_field(m, "item", "peixe")
    assert m.fields == [("item", "peixe")]
    add_field(m, "price", 50)
    add_field(m, "price", 40)
    assert m.get("price") == 40
    assert m["item"] == "peixe"
    assert len(m.fields) == 3


def test_add_field_rejects_empty_key_and_nested_values():
    m = create_message("cfp", "c1")
    with pytest.raises(MessageError):
        add_field(m, "", 1)
    with pytest.raises(MessageError):
        add_field(m, "k", {"nested": 1})
    with pytest.raises(MessageError):
        add_field(m, "k", [[1]])
    add_field(m, "k", ["a", 1, 2.5])


@pytest.fixture
def post():
    p = PostOffice()
    for cid in ("c1", "c2", "c3"):
        p.register(cid, "clients")
    for n in range(1, 6):
        p.register(f"s{n}", "sellers")
    return p


def test_send_delivers_and_stamps_tick(post):
    post.tick = 7
    m = create_message("cfp", "c1").add_receiver("c2")
    assert post.send(m) == 1
    assert m.sent_tick == 7
    assert next_message(post.mailbox("c2")) is m


def test_send_skips_missing_receiver(post):
    m = create_message("cfp", "c1").add_receiver("c2").add_receiver("ghost")
    assert post.send(m) == 1
    assert post.skipped == 1
    assert len(post.mailbox("c2")) == 1


def test_send_without_receivers_is_an_error(post):
    with pytest.raises(MessageError):
        post.send(create_message("cfp", "c1"))


def test_send_leaves_other_mailboxes_alone(post):
    post.send(create_message("cfp", "c1").add_receiver("s3"))
    assert [len(post.mailbox(a)) for a in ("c1", "c2", "c3", "s1", "s2", "s4", "s5")] == [0] * 7


def test_broadcast_excludes_sender(post):
    m = create_message("cfp", "c1")
    assert post.broadcast("clients", m) == 2
    assert m.receivers == ["c2", "c3"]
    assert len(post.mailbox("c1")) == 0


def test_broadcast_to_other_breed_reaches_everyone(post):
    m = create_message("cfp", "c1")
    assert post.broadcast("sellers", m) == 5
    assert m.receivers == ["s1", "s2", "s3", "s4", "s5"]


def test_broadcast_from_sole_member_delivers_nothing():
    p = PostOffice()
    p.register("c1", "clients")
    assert p.broadcast("clients", create_message("cfp", "c1")) == 0


def test_unknown_breed_rejected(post):
    with pytest.raises(MessageError):
        post.broadcast("customers", create_message("cfp", "c1"))


def test_mailbox_fifo():
    box = Mailbox("c1")
    msgs = [create_message("cfp", f"c{n}") for n in range(3)]
    for m in msgs:
        box.deliver(m)
    assert next_message(box) is msgs[0]
    assert len(box) == 2
    assert [next_message(box), next_message(box)] == msgs[1:]
    assert next_message(box) is None


def test_trace_line_format():
    p = PostOffice()
    lines = []
    p._tracer = lines.append
    p.register("c1", "clients")
    p.register("s1", "sellers")
    p.register("s2", "sellers")
    p.tick = 3
    m = create_message("cfp", "c1").add_field("item", "pao").add_field("price", 12)
    p.broadcast("sellers", m)
    assert lines == ["3,c1,cfp,s1 s2,item=pao;price=12"]
    assert format_dispatch(m) == lines[0]


@given(st.lists(st.tuples(st.sampled_from(["send", "pop"]), st.integers(0, 3)), max_size=60))
def test_mailbox_conservation_and_order(ops):
    p = PostOffice()
    ids = ["c1", "c2", "c3", "c4"]
    for a in ids:
        p.register(a, "clients")
    sent = {a: [] for a in ids}
    popped = {a: [] for a in ids}
    for n, (op, who) in enumerate(ops):
        target = ids[who]
        if op == "send":
            m = create_message("cfp", "c1" if target != "c1" else "c2").add_field("n", n)
            m.add_receiver(target)
            p.send(m)
            sent[target].append(n)
        else:
            m = next_message(p.mailbox(target))
            if m is not None:
                popped[target].append(m["n"])
        for a in ids:
            box = p.mailbox(a)
            assert box.delivered - box.popped == len(box)
    for a in ids:
        assert popped[a] == sent[a][: len(popped[a])]


@given(st.integers(1, 6), st.integers(0, 5), st.integers(0, 5))
def test_broadcast_receivers_property(n_clients, n_sellers, who):
    p = PostOffice()
    clients = [f"c{n}" for n in range(1, n_clients + 1)]
    for c in clients:
        p.register(c, "clients")
    for n in range(1, n_sellers + 1):
        p.register(f"s{n}", "sellers")
    sender = clients[who % n_clients]
    m = create_message("cfp", sender)
    delivered = p.broadcast("clients", m)
    assert set(m.receivers) == set(clients) - {sender}
    assert delivered == n_clients - 1

import pytest
from hypothesis import given
from hypothesis import strategies as st

from retail_mas.bdi import (
    EMPTY,
    EXECUTED,
    POPPED,
    AgentExecutionError,
    BDIAgent,
    Belief,
    BeliefStore,
    Intention,
    IntentionError,
    add_belief,
    add_intention,
    beliefs_of_type,
    execute_intentions,
    remove_belief,
    remove_intention,
    update_belief,
)


def test_add_belief_dedups_on_type_and_content():
    store = BeliefStore()
    assert add_belief(store, Belief("proposal", ("s1", 170)))
    assert not add_belief(store, Belief("proposal", ("s1", 170)))
    assert len(store) == 1
    assert add_belief(store, Belief("proposal", ("s2", 170)))
    assert len(store) == 2


def test_belief_type_must_be_non_empty():
    with pytest.raises(ValueError):
        Belief("", 1)


def test_remove_belief():
    store = BeliefStore()
    a, b = Belief("proposal", ("s1", 1)), Belief("proposal", ("s2", 1))
    add_belief(store, a)
    add_belief(store, b)
    assert remove_belief(store, a)
    assert list(store) == [b]
    assert not remove_belief(store, a)
    assert list(store) == [b]


def test_update_belief_replaces_collapses_and_upserts():
    store = BeliefStore()
    add_belief(store, Belief("best-price:peixe", 290))
    update_belief(store, "best-price:peixe", 260)
    assert list(store) == [Belief("best-price:peixe", 260)]

    update_belief(store, "best-price:carne", 170)
    assert len(store) == 2

    add_belief(store, Belief("x", 1))
    add_belief(store, Belief("x", 2))
    update_belief(store, "x", 3)
    assert beliefs_of_type(store, "x") == [Belief("x", 3)]


def test_beliefs_of_type_keeps_insertion_order_and_filters():
    store = BeliefStore()
    add_belief(store, Belief("proposal", "s1"))
    add_belief(store, Belief("other", "zz"))
    add_belief(store, Belief("proposal", "s2"))
    assert [b.content for b in beliefs_of_type(store, "proposal")] == ["s1", "s2"]
    assert beliefs_of_type(store, "missing") == []
    assert len(store) == 3


belief_ops = st.lists(
    st.tuples(
        st.sampled_from(["add", "remove", "update"]),
        st.sampled_from(["a", "b", "c"]),
        st.one_of(st.integers(0, 3), st.tuples(st.integers(0, 2), st.integers(0, 2))),
    ),
    max_size=50,
)


@given(belief_ops)
def test_store_never_holds_duplicates(ops):
    store = BeliefStore()
    for op, kind, content in ops:
        if op == "add":
            add_belief(store, Belief(kind, content))
        elif op == "remove":
            remove_belief(store, Belief(kind, content))
        else:
            update_belief(store, kind, content)
        beliefs = list(store)
        assert len(beliefs) == len({(b.type, b.content) for b in beliefs})


@given(belief_ops, st.sampled_from(["a", "b"]), st.integers(0, 3))
def test_update_is_idempotent(ops, kind, content):
    once, twice = BeliefStore(), BeliefStore()
    for store in (once, twice):
        for op, k, c in ops:
            if op == "add":
                add_belief(store, Belief(k, c))
    update_belief(once, kind, content)
    update_belief(twice, kind, content)
    update_belief(twice, kind, content)
    assert list(once) == list(twice)


class Toy(BDIAgent):
    def __init__(self):
        super().__init__("c1")
        self.replied = False
        self.runs = []
        self.register_procedure("wait-replies", lambda: self.runs.append("wait"))
        self.register_procedure("other", lambda: self.runs.append("other"))
        self.register_procedure("boom", lambda: 1 / 0)
        self.register_predicate("all-replied", lambda: self.replied)
        self.register_predicate("false", lambda: False)


def test_intention_stack_is_lifo():
    agent = Toy()
    a, b = Intention("wait-replies", "all-replied"), Intention("other", "false")
    add_intention(agent, a)
    add_intention(agent, b)
    assert agent.intentions.top == b
    assert remove_intention(agent, b)
    assert list(agent.intentions) == [a]


def test_unknown_names_rejected_at_push():
    agent = Toy()
    with pytest.raises(IntentionError):
        add_intention(agent, Intention("no-such-proc", "false"))
    with pytest.raises(IntentionError):
        add_intention(agent, Intention("other", "no-such-pred"))


def test_execute_runs_action_when_not_done():
    agent = Toy()
    add_intention(agent, Intention("wait-replies", "all-replied"))
    assert execute_intentions(agent) == EXECUTED
    assert agent.runs == ["wait"]
    assert len(agent.intentions) == 1


def test_execute_pops_without_running_when_done():
    agent = Toy()
    add_intention(agent, Intention("wait-replies", "all-replied"))
    agent.replied = True
    assert execute_intentions(agent) == POPPED
    assert agent.runs == []
    assert len(agent.intentions) == 0


def test_execute_on_empty_stack():
    assert execute_intentions(Toy()) == EMPTY


def test_failing_action_names_agent_and_intention():
    agent = Toy()
    add_intention(agent, Intention("boom", "false"))
    with pytest.raises(AgentExecutionError, match="c1.*boom"):
        execute_intentions(agent)


def test_trace_events():
    agent = Toy()
    events = []
    agent.intention_tracer = lambda aid, i, ev: events.append((aid, i.action, ev))
    add_intention(agent, Intention("wait-replies", "all-replied"))
    execute_intentions(agent)
    agent.replied = True
    execute_intentions(agent)
    assert events == [("c1", "wait-replies", "push"), ("c1", "wait-replies", "exec"), ("c1", "wait-replies", "pop")]


@given(st.lists(st.booleans(), min_size=1, max_size=10), st.integers(0, 15))
def test_at_most_one_action_per_call(done_flags, calls):
    agent = Toy()
    for n, flag in enumerate(done_flags):
        agent.register_predicate(f"p{n}", lambda flag=flag: flag)
        add_intention(agent, Intention("other", f"p{n}"))
    for _ in range(calls):
        size, runs = len(agent.intentions), len(agent.runs)
        event = execute_intentions(agent)
        assert len(agent.runs) - runs in (0, 1)
        delta = len(agent.intentions) - size
        assert (event, delta) in {(EMPTY, 0), (POPPED, -1), (EXECUTED, 0)}

"""The oracles themselves come first: their small outputs are frozen
here and everything else is checked against them."""

from oracles import (
    enumerate_states,
    on_goal,
    oracle_bfs_plan,
    oracle_state_count,
    state_goal,
)

TABLE = "ctable"


def test_one_block_has_one_configuration():
    assert oracle_state_count(1) == 1


def test_two_blocks_have_three_configurations():
    # both on table, A on B, B on A
    assert oracle_state_count(2) == 3


def test_three_blocks_have_thirteen_configurations():
    assert oracle_state_count(3) == 13


def test_four_blocks_have_seventythree_configurations():
    # 1 + 4*3 + ... known closed-form tally for four blocks
    assert oracle_state_count(4) == 73


def test_plan_length_one_for_single_stack():
    initial = {"A": TABLE, "B": TABLE, "C": TABLE}
    length, steps = oracle_bfs_plan(initial, on_goal("C", "B"))
    assert length == 1
    assert steps == ["stack(C,B)"]


def test_plan_length_two_for_tower():
    initial = {"A": TABLE, "B": TABLE, "C": TABLE}
    goal = lambda s: s.get("A") == "B" and s.get("B") == "C"
    length, _ = oracle_bfs_plan(initial, goal)
    assert length == 2


def test_plan_length_zero_when_satisfied():
    initial = {"A": "B", "B": TABLE}
    assert oracle_bfs_plan(initial, on_goal("A", "B")) == (0, [])


def test_every_three_block_state_reaches_every_other():
    states = enumerate_states(["A", "B", "C"])
    assert len(states) == 13
    for src in states:
        for dst in states:
            assert oracle_bfs_plan(src, state_goal(dst)) is not None

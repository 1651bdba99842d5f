import random
from pathlib import Path

import pytest

from dmapf import formats
from dmapf.encoder import StateError
from dmapf.engine import RunConfig, Session, run
from dmapf.generate import gen_diagonal_setup, random_instance, random_joiners
from dmapf.grid import Coord, GridMap
from dmapf.model import (
    Agent, DmapfInstance, Event, EventSequence, MapfInstance, PlanSet, Traversal, validate_solution,
)

from oracles import joint_bfs

DATA = Path(__file__).resolve().parent.parent / "data"
A, B, C, D = (Coord(0, i) for i in range(4))


def _dyn(base, events=(), **kw):
    return DmapfInstance(base=base, events=EventSequence(tuple(events)), **kw)


# -- static planning --------------------------------------------------------------

def test_corridor_plan():
    s = Session(MapfInstance(GridMap(4, 1), [Agent("a", A, D)]))
    plans = s.solve_mapf()
    assert plans.horizon == 3 and plans["a"].locs == (A, B, C, D)
    assert s.stages[0].outcome == "sat"
    with pytest.raises(StateError):
        s.solve_mapf()


def test_head_on_stops_without_deepening_to_the_cap():
    inst = MapfInstance(GridMap(3, 1), [Agent("a", (0, 0), (0, 2)), Agent("b", (0, 2), (0, 0))])
    s = Session(inst, RunConfig(cap=50))
    assert s.solve_mapf() is None
    rec = s.stages[0]
    assert rec.outcome == "unsat_at_cap" and s.failed
    assert rec.horizon is None and rec.solves < 50


def test_cap_is_respected():
    inst = MapfInstance(GridMap(6, 1), [Agent("a", (0, 0), (0, 5))])
    s = Session(inst, RunConfig(cap=3))
    assert s.solve_mapf() is None
    assert s.stages[0].outcome == "unsat_at_cap" and s.horizon == 3


def test_makespan_bound_acts_as_cap():
    inst = MapfInstance(GridMap(6, 1), [Agent("a", (0, 0), (0, 5))], tau=4)
    assert Session(inst).solve_mapf() is None


@pytest.mark.parametrize("seed", range(6))
def test_minimal_horizon_matches_joint_search(seed):
    base = random_instance(3, 3, 3, 1, seed=seed)
    s = Session(base)
    plans = s.solve_mapf()
    want = joint_bfs(base.grid, base.agents)
    if want is None:
        assert plans is None
    else:
        assert plans.horizon == want
        assert validate_solution(base, plans).ok


def test_timeout_outcome():
    inst = gen_diagonal_setup("12", 12, seed=0)
    s = Session(inst.base, RunConfig(deadline=0.01))
    assert s.solve_mapf() is None
    assert s.stages[0].outcome == "timeout" and s.failed


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(method="magic")
    with pytest.raises(ValueError):
        RunConfig(width=-1)
    with pytest.raises(ValueError):
        RunConfig(deadline=0)


# -- execution ------------------------------------------------------------------

def test_step_execute_fixes_locations():
    base = MapfInstance(GridMap(4, 4), [Agent("a", (0, 0), (0, 3)), Agent("b", (3, 3), (3, 0))])
    s = Session(base)
    with pytest.raises(StateError):
        s.step_execute()
    s.solve_mapf()
    for t in (1, 2, 3):
        assert s.step_execute() == t
    assert len(s.prefix) == 3 * 2
    assert s.history["a"] == (0, list(s.plans["a"].locs))
    with pytest.raises(StateError):
        s.step_execute()


def test_advance_past_horizon_waits_at_goal():
    s = Session(MapfInstance(GridMap(3, 1), [Agent("a", (0, 0), (0, 2))]))
    s.solve_mapf()
    s.advance_to(5)
    assert s.plans.horizon == 5 and s.plans["a"].locs[-3:] == (Coord(0, 2),) * 3
    with pytest.raises(StateError):
        s.advance_to(4)


def test_executed_prefix_survives_repair():
    rng = random.Random(5)
    base = random_instance(6, 6, 4, 4, rng=rng)
    joiners = random_joiners(base, 2, 2, rng)
    inst = _dyn(base, [Event(2, agents_join=tuple(joiners))])
    for method in ("replan", "tunnels_tc"):
        s = run(inst, RunConfig(method=method))
        first = s.solutions[0]
        assert not s.failed
        for tr in first:
            assert s.plans[tr.agent].locs[:3] == tr.locs[:3]
        assert validate_solution(inst, s.plans, history=s.history).ok


def test_adopted_solution_is_validated():
    base = MapfInstance(GridMap(4, 1), [Agent("a", A, D)])
    good = PlanSet({"a": Traversal("a", 0, (A, A, B, C, D), D)}, 4)
    s = Session(base)
    assert s.adopt_solution(good).horizon == 4 and s.stages[0].outcome == "given"
    bad = PlanSet({"a": Traversal("a", 0, (A, C, D), D)}, 2)
    with pytest.raises(ValueError):
        Session(base).adopt_solution(bad)


# -- events ----------------------------------------------------------------------

def test_event_must_match_clock_and_state():
    base = MapfInstance(GridMap(4, 4), [Agent("a", (0, 0), (0, 3))])
    s = Session(base)
    with pytest.raises(StateError):
        s.apply_event(Event(0, obstacles_added={(2, 2)}))
    s.solve_mapf()
    with pytest.raises(ValueError):
        s.apply_event(Event(1, obstacles_added={(2, 2)}))
    with pytest.raises(ValueError):
        s.apply_event(Event(0, agents_leave={"zz"}))
    with pytest.raises(ValueError):
        s.apply_event(Event(0, agents_join=(Agent("a", (3, 3), (3, 0)),)))
    with pytest.raises(ValueError):
        s.apply_event(Event(0, obstacles_removed={(2, 2)}))


def test_leaving_agent_unblocks_the_others():
    grid = GridMap(3, 1)
    base = MapfInstance(grid, [Agent("a", (0, 1), (0, 1)), Agent("b", (0, 0), (0, 0))])
    # c can only reach the far end once a has gone
    inst = _dyn(base, [Event(1, agents_leave={"a"}),
                       Event(2, agents_join=(Agent("c", (0, 2), (0, 1), join=2),))])
    s = run(inst)
    assert not s.failed and s.plans["a"].end == 1 and s.plans["c"].locs[-1] == (0, 1)
    assert validate_solution(inst, s.plans, history=s.history).ok


def test_obstacle_event_reroutes():
    base = MapfInstance(GridMap(3, 3), [Agent("a", (0, 0), (2, 2))])
    s = Session(base)
    s.solve_mapf()
    s.advance_to(1)
    here = s.plans["a"].at(1)
    nxt = s.plans["a"].at(2)
    plans = s.apply_event(Event(1, obstacles_added={nxt}))
    assert plans is not None and nxt not in plans["a"].locs[1:]
    assert plans["a"].at(1) == here
    s.advance_to(2)
    assert s.apply_event(Event(2, obstacles_removed={nxt})) is not None


def test_tunnels_freeze_each_agent_once():
    base = MapfInstance(GridMap(6, 6), [Agent("a", (0, 0), (0, 5)), Agent("b", (5, 0), (5, 5))])
    inst = _dyn(base, [Event(1, agents_join=(Agent("j", (3, 0), (3, 5), join=1),)),
                       Event(2, agents_join=(Agent("k", (2, 5), (2, 0), join=2),))])
    s = run(inst, RunConfig(method="tunnels_tc", width=0))
    assert not s.failed
    assert set(s.frozen) == {"a", "b", "j"}
    assert s.frozen_paths["a"] == s.solutions[0]["a"].path
    assert s.frozen_paths["j"] == s.solutions[1]["j"].path
    for aid, path in s.frozen_paths.items():
        assert set(s.plans[aid].locs) <= set(path)


def test_pocket_fixture_separates_path_methods():
    inst = formats.load_instance(DATA / "pocket_corridor.json")
    outcomes = {}
    for method in ("replan", "revise_augment", "tunnels_tc", "tunnels_tg"):
        s = run(inst, RunConfig(method=method))
        outcomes[method] = (s.stages[-1].outcome, s.stages[-1].horizon)
    assert outcomes == {"replan": ("sat", 8), "revise_augment": ("unsat_at_cap", None),
                        "tunnels_tc": ("sat", 8), "tunnels_tg": ("sat", 8)}


def test_wide_tunnels_match_replanning():
    for seed in range(6):
        rng = random.Random(seed)
        base = random_instance(6, 6, 4, 3, rng=rng)
        inst = _dyn(base, [Event(1, agents_join=tuple(random_joiners(base, 2, 1, rng)))])
        a = run(inst, RunConfig(method="replan"))
        b = run(inst, RunConfig(method="tunnels_tc", width=base.grid.diameter))
        assert a.stages[-1].horizon == b.stages[-1].horizon


def test_setup_stage_counts():
    inst = gen_diagonal_setup("6+1+1+1+1+1", 8, seed=0)
    assert [e.t for e in inst.events] == [1, 2, 3, 4, 5]
    s = run(inst, RunConfig(method="replan"))
    assert not s.failed
    assert len(s.stages) == 6 and [r.k for r in s.stages] == [0, 1, 2, 3, 4, 5]
    assert validate_solution(inst, s.plans, history=s.history).ok


def test_pysat_backend_agrees():
    pytest.importorskip("pysat")
    for seed in range(3):
        base = random_instance(4, 4, 3, 2, seed=seed)
        ours = Session(base).solve_mapf()
        theirs = Session(base, RunConfig(backend="pysat")).solve_mapf()
        assert ours.horizon == theirs.horizon
        assert validate_solution(base, theirs).ok

import json

import pytest
from hypothesis import given, strategies as st

from dmapf import formats
from dmapf.formats import ParseError
from dmapf.generate import gen_diagonal_setup
from dmapf.grid import Coord, GridMap
from dmapf.model import Agent, PlanSet, Traversal

MAP = """type octile
height 3
width 4
map
..@.
.T..
G..O
"""


def test_parse_map_example():
    g = formats.parse_map(MAP)
    assert (g.width, g.height) == (4, 3)
    assert g.blocked == {(0, 2), (1, 1), (2, 3)}


@pytest.mark.parametrize("text,line", [
    ("type octile\nheight 2\nwidth 2\nmap\n..\n", 5),
    ("type octile\nheight 2\nwidth 2\nmap\n..\n.x\n", 6),
    ("type octile\nheight 1\nwidth 3\nmap\n..\n", 5),
    ("type octile\nwidth 3\nmap\n...\n", 3),
])
def test_parse_map_errors_carry_line(text, line):
    with pytest.raises(ParseError) as e:
        formats.parse_map(text)
    assert e.value.line == line


def test_map_without_map_line():
    with pytest.raises(ParseError):
        formats.parse_map("")


blocked_sets = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda wh: st.tuples(st.just(wh), st.sets(st.tuples(st.integers(0, wh[1] - 1), st.integers(0, wh[0] - 1)))))


@given(blocked_sets)
def test_map_round_trip(arg):
    (w, h), blocked = arg
    g = GridMap(w, h, frozenset(Coord(*b) for b in blocked))
    assert formats.parse_map(formats.serialize_map(g)) == g


def test_scen_uses_column_then_row():
    g = formats.parse_map(MAP)
    text = "version 1\n0\tm.map\t4\t3\t1\t2\t3\t0\t4.0\n"
    assert formats.parse_scen(text, g) == [((2, 1), (0, 3))]


def test_scen_skips_obstacle_rows_with_warning():
    g = formats.parse_map(MAP)
    text = "version 1\n0\tm\t4\t3\t2\t0\t0\t0\t1\n0\tm\t4\t3\t0\t0\t1\t0\t1\n"
    warnings = []
    assert formats.parse_scen(text, g, warnings) == [((0, 0), (0, 1))]
    assert len(warnings) == 1 and "line 2" in warnings[0]


def test_scen_errors():
    g = formats.parse_map(MAP)
    with pytest.raises(ParseError) as e:
        formats.parse_scen("version 1\n0\tm\t4\t3\t9\t0\t0\t0\t1\n", g)
    assert e.value.line == 2
    with pytest.raises(ParseError):
        formats.parse_scen("0 m 4 3 a b c d 1\n", g)
    with pytest.raises(ParseError):
        formats.parse_scen("0 m 4\n", g)
    assert formats.parse_scen("", g) == []


def test_scen_round_trip_and_instance():
    g = formats.parse_map(MAP)
    pairs = [(Coord(0, 0), Coord(2, 2)), (Coord(0, 0), Coord(0, 1)), (Coord(1, 0), Coord(0, 1))]
    back = formats.parse_scen(formats.serialize_scen(pairs, g), g)
    assert back == pairs
    inst = formats.instance_from_scen(g, back, 2)
    assert [(a.init, a.goal) for a in inst.agents] == [pairs[0], pairs[2]]
    with pytest.raises(ValueError):
        formats.instance_from_scen(g, back, 3)


def test_instance_round_trip_and_hash():
    inst = gen_diagonal_setup("4+1+1", 6, seed=2)
    d = formats.instance_to_dict(inst)
    back = formats.instance_from_dict(json.loads(json.dumps(d)))
    assert formats.instance_to_dict(back) == d
    assert formats.instance_hash(back) == formats.instance_hash(inst)
    other = formats.instance_from_dict(dict(d, alpha=30))
    assert formats.instance_hash(other) != formats.instance_hash(inst)


def test_instance_with_map_file(tmp_path):
    (tmp_path / "m.map").write_text(MAP)
    data = {"map": "m.map", "agents": [{"id": "a", "init": [0, 0], "goal": [2, 2]}]}
    (tmp_path / "i.json").write_text(json.dumps(data))
    inst = formats.load_instance(tmp_path / "i.json")
    assert inst.grid.blocked == {(0, 2), (1, 1), (2, 3)}


def test_event_list_round_trip_and_errors():
    inst = gen_diagonal_setup("4+2", 6)
    assert formats.events_from_list(formats.events_to_list(inst.events)) == inst.events
    with pytest.raises(ParseError):
        formats.events_from_list([{"joins": []}])
    with pytest.raises(ParseError):
        formats.events_from_list([{"t": 1, "obs_add": [[1]]}])


def test_solution_round_trip():
    inst = gen_diagonal_setup("2", 4)
    plans = PlanSet({a.id: Traversal(a.id, 0, (a.init, a.init), a.goal) for a in inst.base.agents}, 1)
    d = formats.solution_to_dict(plans, inst)
    back = formats.solution_from_dict(json.loads(json.dumps(d)), inst)
    assert back == plans and d["instance_hash"] == formats.instance_hash(inst)


def test_bad_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "map": ,\n}')
    with pytest.raises(ParseError) as e:
        formats.load_json(p)
    assert e.value.line == 2

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from dmapf.solver import SAT, TIMEOUT, UNSAT, CdclSolver, make_solver


def brute_force(n, clauses, assumptions=()):
    for bits in itertools.product([False, True], repeat=n):
        val = lambda x: bits[abs(x) - 1] if x > 0 else not bits[abs(x) - 1]
        if all(val(a) for a in assumptions) and all(any(val(x) for x in c) for c in clauses):
            return True
    return False


def random_cnf(rng, n, m, width=3):
    return [[rng.choice([1, -1]) * v for v in rng.sample(range(1, n + 1), min(width, n))] for _ in range(m)]


def _load(clauses, n, backend="cdcl", seed=0):
    s = make_solver(backend, seed)
    s.new_vars(n)
    for c in clauses:
        s.add_clause(c)
    return s


def test_trivial_cases():
    s = CdclSolver()
    assert s.solve().status == SAT
    x, y = s.new_vars(2)
    s.add_clause([x, y])
    s.add_clause([-x])
    res = s.solve()
    assert res.sat and res.value(y) and not res.value(x)
    s.add_clause([-y])
    assert s.solve().status == UNSAT


def test_empty_clause_and_bad_literal():
    s = CdclSolver()
    s.new_var()
    with pytest.raises(ValueError):
        s.add_clause([2])
    s.add_clause([])
    assert s.solve().status == UNSAT


def test_tautology_is_harmless():
    s = CdclSolver()
    x = s.new_var()
    s.add_clause([x, -x])
    assert s.solve([-x]).sat and s.solve([x]).sat


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 10), st.integers(0, 45), st.integers(0, 2**31))
def test_agrees_with_brute_force(n, m, seed):
    rng = random.Random(seed)
    clauses = random_cnf(rng, n, m)
    s = _load(clauses, n)
    res = s.solve()
    assert res.sat == brute_force(n, clauses)
    if res.sat:
        assert all(any(res.value(x) for x in c) for c in clauses)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 12), st.integers(10, 55), st.integers(0, 2**31))
def test_assumptions_and_cores(n, m, seed):
    rng = random.Random(seed)
    clauses = random_cnf(rng, n, m)
    s = _load(clauses, n)
    assumptions = [rng.choice([1, -1]) * v for v in rng.sample(range(1, n + 1), rng.randint(1, n))]
    res = s.solve(assumptions)
    assert res.sat == brute_force(n, clauses, assumptions)
    if res.sat:
        assert all(res.value(a) for a in assumptions)
    else:
        assert set(res.core) <= set(assumptions)
        assert not brute_force(n, clauses, res.core)


def test_incremental_solves_monotone():
    rng = random.Random(7)
    n = 20
    s = CdclSolver()
    s.new_vars(n)
    was_unsat = False
    for _ in range(120):
        c = random_cnf(rng, n, 1)[0]
        s.add_clause(c)
        res = s.solve()
        if was_unsat:
            assert res.status == UNSAT
        was_unsat = res.status == UNSAT
    assert was_unsat


def test_assumptions_do_not_stick():
    s = CdclSolver()
    x, y = s.new_vars(2)
    s.add_clause([x, y])
    assert s.solve([-x, -y]).status == UNSAT
    assert s.solve([-x]).sat
    assert s.solve().sat


def test_deterministic_for_seed():
    rng = random.Random(3)
    clauses = random_cnf(rng, 40, 160)
    a = _load(clauses, 40, seed=5).solve()
    b = _load(clauses, 40, seed=5).solve()
    assert a.status == b.status and a.model == b.model


def _pigeonhole(holes):
    s = CdclSolver()
    x = {(p, h): s.new_var() for p in range(holes + 1) for h in range(holes)}
    for p in range(holes + 1):
        s.add_clause([x[p, h] for h in range(holes)])
    for h in range(holes):
        for p, q in itertools.combinations(range(holes + 1), 2):
            s.add_clause([-x[p, h], -x[q, h]])
    return s


def test_pigeonhole_unsat():
    assert _pigeonhole(5).solve().status == UNSAT


def test_deadline_gives_timeout():
    import time

    res = _pigeonhole(11).solve(deadline=time.monotonic() + 0.2)
    assert res.status == TIMEOUT


def test_unknown_backend():
    with pytest.raises(ValueError):
        make_solver("minisat-ish")


@settings(max_examples=60, deadline=None)
@given(st.integers(5, 30), st.integers(10, 130), st.integers(0, 2**31))
def test_matches_pysat(n, m, seed):
    pytest.importorskip("pysat")
    rng = random.Random(seed)
    clauses = random_cnf(rng, n, m)
    assumptions = [rng.choice([1, -1]) * v for v in rng.sample(range(1, n + 1), rng.randint(0, 4))]
    ours = _load(clauses, n).solve(assumptions)
    theirs = _load(clauses, n, backend="pysat").solve(assumptions)
    assert ours.status == theirs.status

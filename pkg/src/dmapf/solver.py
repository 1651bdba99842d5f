"""Incremental CDCL SAT solver with assumptions.

Literals use the DIMACS convention externally (``v`` / ``-v`` for variable
``v >= 1``). Internally a literal is ``2*v`` (positive) or ``2*v + 1``
(negative), so negation is ``lit ^ 1`` and every per-literal table is a
flat list.

Clauses added between calls are permanent. Retractable constraints are the
caller's business: guard them with an activation literal and pass it as an
assumption. An UNSAT answer carries the subset of assumptions that was
used to derive the contradiction.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

SAT = "sat"
UNSAT = "unsat"
TIMEOUT = "timeout"

_TRUE, _FALSE, _UNDEF = 1, 0, 2


@dataclass
class SolveResult:
    status: str
    model: Optional[list] = None   # model[v] is the value of variable v (index 0 unused)
    core: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def sat(self) -> bool:
        return self.status == SAT

    def value(self, lit: int) -> bool:
        v = self.model[abs(lit)]
        return v if lit > 0 else not v


def _luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return y ** seq


class CdclSolver:
    """Two-watched-literal CDCL with 1UIP learning, VSIDS, phase saving and Luby restarts."""

    name = "cdcl"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = random.Random(seed)
        self.n_vars = 0
        self._val = [_UNDEF, _UNDEF]
        self._level = [0]
        self._reason = [None]
        self._activity = [0.0]
        self._phase = [1]           # saved literal parity: 1 = negative
        self._seen = [0]
        self._watches = [[], []]    # visited when the literal becomes false
        self._bins = [[], []]       # (implied literal, clause) for binary clauses
        self._heap = []
        self._heap_pos = [-1]
        self._trail = []
        self._trail_lim = []
        self._qhead = 0
        self._clauses = []
        self._learnts = []
        self._lbd = {}
        self._var_inc = 1.0
        self._var_decay = 0.95
        self._ok = True
        self._max_learnts = 4000.0
        self._simp_trail = 0
        self.stats = {"decisions": 0, "propagations": 0, "conflicts": 0, "restarts": 0,
                      "solves": 0, "solve_time": 0.0}

    # -- construction ---------------------------------------------------------

    def new_var(self) -> int:
        self.n_vars += 1
        v = self.n_vars
        self._val += [_UNDEF, _UNDEF]
        self._level.append(0)
        self._reason.append(None)
        self._activity.append(self._rng.random() * 1e-5)
        self._phase.append(1)
        self._seen.append(0)
        self._watches += [[], []]
        self._bins += [[], []]
        self._heap_pos.append(-1)
        self._heap_insert(v)
        return v

    def new_vars(self, n: int) -> list[int]:
        return [self.new_var() for _ in range(n)]

    @property
    def ok(self) -> bool:
        return self._ok

    def num_clauses(self) -> int:
        return len(self._clauses)

    def add_clause(self, lits: Iterable[int]) -> None:
        n = self.n_vars
        internal = set()
        for x in lits:
            v = x if x > 0 else -x
            if x == 0 or v > n:
                raise ValueError(f"literal {x} does not reference an allocated variable (have {n})")
            internal.add(2 * v if x > 0 else 2 * v + 1)
        if self._trail_lim:
            self._cancel_until(0)
        if not self._ok:
            return
        val = self._val
        out = []
        for l in internal:
            if l ^ 1 in internal:
                return
            if val[l] == _TRUE:
                return
            if val[l] == _UNDEF:
                out.append(l)
        if not out:
            self._ok = False
        elif len(out) == 1:
            self._assign(out[0], None)
            if self._propagate() is not None:
                self._ok = False
        else:
            out.sort()
            self._attach(out)
            self._clauses.append(out)

    def _attach(self, c: list) -> None:
        if len(c) == 2:
            self._bins[c[0]].append((c[1], c))
            self._bins[c[1]].append((c[0], c))
        else:
            self._watches[c[0]].append(c)
            self._watches[c[1]].append(c)

    # -- heap over variable activity ------------------------------------------

    def _heap_insert(self, v: int) -> None:
        if self._heap_pos[v] >= 0:
            return
        heap = self._heap
        heap.append(v)
        self._heap_pos[v] = len(heap) - 1
        self._sift_up(len(heap) - 1)

    def _sift_up(self, i: int) -> None:
        heap, pos, act = self._heap, self._heap_pos, self._activity
        v = heap[i]
        a = act[v]
        while i > 0:
            parent = (i - 1) >> 1
            pv = heap[parent]
            if act[pv] >= a:
                break
            heap[i] = pv
            pos[pv] = i
            i = parent
        heap[i] = v
        pos[v] = i

    def _sift_down(self, i: int) -> None:
        heap, pos, act = self._heap, self._heap_pos, self._activity
        n = len(heap)
        v = heap[i]
        a = act[v]
        while True:
            child = 2 * i + 1
            if child >= n:
                break
            if child + 1 < n and act[heap[child + 1]] > act[heap[child]]:
                child += 1
            cv = heap[child]
            if act[cv] <= a:
                break
            heap[i] = cv
            pos[cv] = i
            i = child
        heap[i] = v
        pos[v] = i

    def _heap_pop(self) -> int:
        heap, pos = self._heap, self._heap_pos
        top = heap[0]
        last = heap.pop()
        pos[top] = -1
        if heap:
            heap[0] = last
            pos[last] = 0
            self._sift_down(0)
        return top

    def _bump(self, v: int) -> None:
        act = self._activity
        act[v] += self._var_inc
        if act[v] > 1e100:
            for i in range(1, self.n_vars + 1):
                act[i] *= 1e-100
            self._var_inc *= 1e-100
        if self._heap_pos[v] >= 0:
            self._sift_up(self._heap_pos[v])

    # -- trail -----------------------------------------------------------------

    def _assign(self, lit: int, reason) -> None:
        self._val[lit] = _TRUE
        self._val[lit ^ 1] = _FALSE
        v = lit >> 1
        self._level[v] = len(self._trail_lim)
        self._reason[v] = reason
        self._trail.append(lit)

    def _cancel_until(self, level: int) -> None:
        if len(self._trail_lim) <= level:
            return
        trail, val, phase, reason = self._trail, self._val, self._phase, self._reason
        pos = self._heap_pos
        stop = self._trail_lim[level]
        for i in range(len(trail) - 1, stop - 1, -1):
            lit = trail[i]
            v = lit >> 1
            val[lit] = _UNDEF
            val[lit ^ 1] = _UNDEF
            phase[v] = lit & 1
            reason[v] = None
            if pos[v] < 0:
                self._heap_insert(v)
        del trail[stop:]
        del self._trail_lim[level:]
        self._qhead = stop

    def _propagate(self):
        val = self._val
        trail = self._trail
        level = self._level
        reason = self._reason
        watches = self._watches
        bins = self._bins
        lvl = len(self._trail_lim)
        qhead = self._qhead
        props = 0
        confl = None
        while qhead < len(trail):
            p = trail[qhead]
            qhead += 1
            props += 1
            fl = p ^ 1
            for other, c in bins[fl]:
                x = val[other]
                if x == _UNDEF:
                    val[other] = _TRUE
                    val[other ^ 1] = _FALSE
                    v = other >> 1
                    level[v] = lvl
                    reason[v] = c
                    trail.append(other)
                elif x == _FALSE:
                    confl = c
                    break
            if confl is not None:
                break
            ws = watches[fl]
            if not ws:
                continue
            kept = []
            n = len(ws)
            i = 0
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if val[first] == _TRUE:
                    kept.append(c)
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != _FALSE:
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(c)
                        break
                else:
                    kept.append(c)
                    if val[first] == _FALSE:
                        kept.extend(ws[i:])
                        confl = c
                        break
                    val[first] = _TRUE
                    val[first ^ 1] = _FALSE
                    v = first >> 1
                    level[v] = lvl
                    reason[v] = c
                    trail.append(first)
            watches[fl] = kept
            if confl is not None:
                break
        self._qhead = qhead
        self.stats["propagations"] += props
        return confl

    # -- conflict analysis -----------------------------------------------------

    def _analyze(self, confl):
        seen, level, reason, trail = self._seen, self._level, self._reason, self._trail
        lvl = len(self._trail_lim)
        learnt = [0]
        to_clear = []
        path_c = 0
        p = -1
        idx = len(trail) - 1
        while True:
            pv = p >> 1 if p >= 0 else -1
            for q in confl:
                v = q >> 1
                if v == pv or seen[v] or level[v] == 0:
                    continue
                seen[v] = 1
                to_clear.append(v)
                self._bump(v)
                if level[v] >= lvl:
                    path_c += 1
                else:
                    learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            confl = reason[p >> 1]
            seen[p >> 1] = 0
            path_c -= 1
            if path_c == 0:
                break
        learnt[0] = p ^ 1

        # drop literals implied by the rest of the clause (local minimisation)
        if len(learnt) > 2:
            kept = [learnt[0]]
            for q in learnt[1:]:
                r = reason[q >> 1]
                if r is None:
                    kept.append(q)
                    continue
                qv = q >> 1
                for x in r:
                    xv = x >> 1
                    if xv != qv and not seen[xv] and level[xv] > 0:
                        kept.append(q)
                        break
            learnt = kept
        for v in to_clear:
            seen[v] = 0

        if len(learnt) == 1:
            bt = 0
        else:
            best = 1
            for i in range(2, len(learnt)):
                if level[learnt[i] >> 1] > level[learnt[best] >> 1]:
                    best = i
            learnt[1], learnt[best] = learnt[best], learnt[1]
            bt = level[learnt[1] >> 1]
        lbd = len({level[q >> 1] for q in learnt})
        return learnt, bt, lbd

    def _analyze_final(self, p: int) -> list[int]:
        """Assumption literals responsible for `p` being true (p is the negated assumption)."""
        core = [p ^ 1]
        if not self._trail_lim:
            return core
        seen, reason, level, trail = self._seen, self._reason, self._level, self._trail
        seen[p >> 1] = 1
        for i in range(len(trail) - 1, self._trail_lim[0] - 1, -1):
            x = trail[i] >> 1
            if seen[x]:
                r = reason[x]
                if r is None:
                    if level[x] > 0 and trail[i] != p ^ 1:
                        core.append(trail[i])
                else:
                    for q in r:
                        qv = q >> 1
                        if qv != x and level[qv] > 0:
                            seen[qv] = 1
                seen[x] = 0
        seen[p >> 1] = 0
        return core

    # -- learnt clause database ------------------------------------------------

    def _reduce_db(self) -> None:
        reason, val = self._reason, self._val
        lbd = self._lbd

        def locked(c):
            return reason[c[0] >> 1] is c and val[c[0]] == _TRUE

        cands = [c for c in self._learnts if lbd[id(c)] > 2 and not locked(c)]
        cands.sort(key=lambda c: (lbd[id(c)], len(c)), reverse=True)
        drop = {id(c) for c in cands[: len(cands) // 2]}
        if not drop:
            return
        self._learnts = [c for c in self._learnts if id(c) not in drop]
        for k in drop:
            del lbd[k]
        self._rebuild_watches(drop)

    def _rebuild_watches(self, drop: set) -> None:
        self._watches = [[c for c in ws if id(c) not in drop] for ws in self._watches]
        self._bins = [[(o, c) for (o, c) in bs if id(c) not in drop] for bs in self._bins]

    def _simplify(self) -> None:
        """Remove clauses satisfied at level 0 (e.g. released activation groups)."""
        val = self._val
        drop = set()
        keep_c = []
        for c in self._clauses:
            if any(val[l] == _TRUE and self._level[l >> 1] == 0 for l in c):
                drop.add(id(c))
            else:
                keep_c.append(c)
        keep_l = []
        for c in self._learnts:
            if any(val[l] == _TRUE and self._level[l >> 1] == 0 for l in c):
                drop.add(id(c))
                self._lbd.pop(id(c), None)
            else:
                keep_l.append(c)
        # level-0 reasons are never consulted again
        for lit in self._trail:
            self._reason[lit >> 1] = None
        if drop:
            self._clauses, self._learnts = keep_c, keep_l
            self._rebuild_watches(drop)
        self._simp_trail = len(self._trail)

    # -- search ----------------------------------------------------------------

    def _pick_branch(self) -> int:
        val = self._val
        while self._heap:
            v = self._heap_pop()
            if val[2 * v] == _UNDEF:
                return 2 * v + self._phase[v]
        return -1

    def solve(self, assumptions: Sequence[int] = (), deadline: Optional[float] = None) -> SolveResult:
        """Search for a model under `assumptions`.

        `deadline` is an absolute ``time.monotonic()`` value; passing it
        returns a TIMEOUT result instead of searching further.
        """
        t0 = time.monotonic()
        stats = self.stats
        stats["solves"] += 1
        before = {k: stats[k] for k in ("decisions", "propagations", "conflicts")}
        result = self._search(assumptions, deadline)
        self._cancel_until(0)
        elapsed = time.monotonic() - t0
        stats["solve_time"] += elapsed
        result.stats = {k: stats[k] - before[k] for k in before}
        result.stats["time"] = elapsed
        result.stats["vars"] = self.n_vars
        result.stats["clauses"] = len(self._clauses)
        result.stats["learnts"] = len(self._learnts)
        return result

    def _search(self, assumptions, deadline) -> SolveResult:
        if not self._ok:
            return SolveResult(UNSAT)
        assum = []
        for x in assumptions:
            v = abs(x)
            if x == 0 or v > self.n_vars:
                raise ValueError(f"assumption {x} does not reference an allocated variable")
            assum.append(2 * v if x > 0 else 2 * v + 1)
        self._cancel_until(0)
        if self._propagate() is not None:
            self._ok = False
            return SolveResult(UNSAT)
        if len(self._trail) > self._simp_trail + 200:
            self._simplify()
        self._max_learnts = max(self._max_learnts, len(self._clauses) / 3)

        val = self._val
        stats = self.stats
        restart_no = 0
        budget = _luby(2, restart_no) * 100
        conflicts_here = 0
        n_assum = len(assum)
        while True:
            confl = self._propagate()
            if confl is not None:
                stats["conflicts"] += 1
                conflicts_here += 1
                if not self._trail_lim:
                    self._ok = False
                    return SolveResult(UNSAT)
                learnt, bt, lbd = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._assign(learnt[0], None)
                else:
                    self._attach(learnt)
                    self._learnts.append(learnt)
                    self._lbd[id(learnt)] = lbd
                    self._assign(learnt[0], learnt)
                self._var_inc /= self._var_decay
                if deadline is not None and (stats["conflicts"] & 63) == 0 and time.monotonic() > deadline:
                    return SolveResult(TIMEOUT)
                continue

            if conflicts_here >= budget:
                stats["restarts"] += 1
                restart_no += 1
                budget = _luby(2, restart_no) * 100
                conflicts_here = 0
                self._cancel_until(0)
                continue
            if len(self._learnts) - len(self._trail) > self._max_learnts:
                self._reduce_db()
                self._max_learnts *= 1.1

            nxt = -1
            while len(self._trail_lim) < n_assum:
                p = assum[len(self._trail_lim)]
                if val[p] == _TRUE:
                    self._trail_lim.append(len(self._trail))
                elif val[p] == _FALSE:
                    core = self._analyze_final(p ^ 1)
                    return SolveResult(UNSAT, core=sorted(_external(l) for l in set(core)))
                else:
                    nxt = p
                    break
            if nxt < 0:
                nxt = self._pick_branch()
                if nxt < 0:
                    model = [False] * (self.n_vars + 1)
                    for v in range(1, self.n_vars + 1):
                        model[v] = val[2 * v] == _TRUE
                    return SolveResult(SAT, model=model)
                stats["decisions"] += 1
                if deadline is not None and (stats["decisions"] & 1023) == 0 and time.monotonic() > deadline:
                    return SolveResult(TIMEOUT)
            self._trail_lim.append(len(self._trail))
            self._assign(nxt, None)


def _external(lit: int) -> int:
    return -(lit >> 1) if lit & 1 else lit >> 1


class PysatSolver:
    """Adapter exposing a python-sat backend through the same interface.

    Only used for differential testing; requires the optional ``python-sat``
    package.
    """

    def __init__(self, seed: int = 0, name: str = "cadical153"):
        from pysat.solvers import Solver

        self.name = f"pysat:{name}"
        self.interruptible = not name.startswith("cadical")
        self.seed = seed
        self._s = Solver(name=name)
        self.n_vars = 0
        self._ok = True
        self.stats = {"solves": 0, "solve_time": 0.0}

    @property
    def ok(self) -> bool:
        return self._ok

    def new_var(self) -> int:
        self.n_vars += 1
        return self.n_vars

    def new_vars(self, n: int) -> list[int]:
        return [self.new_var() for _ in range(n)]

    def add_clause(self, lits: Iterable[int]) -> None:
        lits = list(lits)
        for x in lits:
            if x == 0 or abs(x) > self.n_vars:
                raise ValueError(f"literal {x} does not reference an allocated variable (have {self.n_vars})")
        if not lits:
            self._ok = False
        self._s.add_clause(lits)

    def solve(self, assumptions: Sequence[int] = (), deadline: Optional[float] = None) -> SolveResult:
        import threading

        t0 = time.monotonic()
        self.stats["solves"] += 1
        if not self._ok:
            return SolveResult(UNSAT)
        # some backends (CaDiCaL) cannot be interrupted; they ignore the deadline
        limited = deadline is not None and self.interruptible
        timer = None
        if limited:
            timer = threading.Timer(max(0.0, deadline - t0), self._s.interrupt)
            timer.start()
        try:
            if limited:
                ans = self._s.solve_limited(assumptions=list(assumptions), expect_interrupt=True)
            else:
                ans = self._s.solve(assumptions=list(assumptions))
        finally:
            if timer is not None:
                timer.cancel()
                self._s.clear_interrupt()
        elapsed = time.monotonic() - t0
        self.stats["solve_time"] += elapsed
        stats = {"time": elapsed, "vars": self.n_vars}
        if ans is None:
            return SolveResult(TIMEOUT, stats=stats)
        if ans:
            model = [False] * (self.n_vars + 1)
            for x in self._s.get_model() or ():
                if abs(x) <= self.n_vars:
                    model[abs(x)] = x > 0
            return SolveResult(SAT, model=model, stats=stats)
        core = self._s.get_core() or []
        return SolveResult(UNSAT, core=sorted(set(core)), stats=stats)


def make_solver(backend: str = "cdcl", seed: int = 0):
    if backend == "cdcl":
        return CdclSolver(seed=seed)
    if backend.startswith("pysat"):
        _, _, name = backend.partition(":")
        return PysatSolver(seed=seed, name=name or "cadical153")
    raise ValueError(f"unknown solver backend {backend!r}")

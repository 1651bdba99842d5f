"""CNF encodings of cardinality constraints.

Every helper takes ``new_var()`` and ``emit(clause)`` callbacks so the same
code feeds a solver directly or a clause list for inspection.
"""

from __future__ import annotations

from typing import Callable, Sequence

Emit = Callable[[list], None]


def at_most_one(lits: Sequence[int], new_var: Callable[[], int], emit: Emit) -> None:
    """Pairwise for short lists, sequential (ladder) encoding otherwise."""
    n = len(lits)
    if n <= 1:
        return
    if n <= 4:
        for i in range(n):
            for j in range(i + 1, n):
                emit([-lits[i], -lits[j]])
        return
    prev = lits[0]
    for x in lits[1:-1]:
        s = new_var()
        emit([-prev, s])
        emit([-x, s])
        emit([-x, -prev])
        prev = s
    emit([-lits[-1], -prev])


def exactly_k(lits: Sequence[int], k: int, new_var: Callable[[], int], emit: Emit,
              guard: int | None = None) -> None:
    """Exactly `k` of `lits` are true, optionally only when `guard` holds.

    Uses a fully defined unary counter: ``reg[i][j]`` is true iff at least
    ``j`` of the first ``i`` literals are true, for ``j <= k + 1``. The
    definitions are unguarded (they only constrain fresh variables); the
    final bound is guarded.
    """
    g = [] if guard is None else [-guard]
    n = len(lits)
    if k < 0 or k > n:
        emit(g)
        return
    if n == 0:
        return
    top = k + 1
    # reg[j] for the current prefix; True/False are constants
    prev = [True] + [False] * top
    for i, x in enumerate(lits, start=1):
        cur = [True]
        for j in range(1, top + 1):
            if j > i:
                cur.append(False)
                continue
            a, b = prev[j], prev[j - 1]
            # cur_j <-> a or (b and x)
            if a is True or b is False:
                cur.append(a)
                continue
            s = new_var()
            cur.append(s)
            if a is not False:
                emit([-a, s])
                if b is True:
                    emit([-s, a, x])
                else:
                    emit([-s, a, b])
                    emit([-s, a, x])
            else:
                if b is True:
                    emit([-s, x])
                else:
                    emit([-s, b])
                    emit([-s, x])
            if b is True:
                emit([-x, s])
            elif b is not False:
                emit([-b, -x, s])
        prev = cur
    at_least, too_many = prev[k], prev[top]
    if at_least is False:
        emit(g)
    elif at_least is not True:
        emit(g + [at_least])
    if too_many is True:
        emit(g)
    elif too_many is not False:
        emit(g + [-too_many])

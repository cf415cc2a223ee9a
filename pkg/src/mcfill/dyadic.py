"""Schreier sets, the dyadic tree, and certified extraction for the divergence family.

Tree nodes and leaves are bit strings: ``""`` is the root, ``"01"`` is the node
reached by going left then right.  Leaves are strings of a fixed width ``L``.
The tree is identified with the naturals by breadth-first numbering, so the root
is 1, ``"0"`` is 2, ``"1"`` is 3, ``"00"`` is 4 and in general a node ``s`` gets
``2**len(s) + int(s, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import InputError


def schreier_contains(S: Iterable[int]) -> bool:
    S = set(S)
    return not S or len(S) <= min(S)


def schreier_extract(H: Iterable[int]) -> list[int]:
    """The last ``ceil(|H|/2)`` elements of ``H`` in increasing order.

    Any such top half is a Schreier set: its least element has at least
    ``floor(|H|/2)`` elements of ``H`` below it, hence is at least
    ``floor(|H|/2) + 1 >= ceil(|H|/2)``.
    """
    elems = sorted(set(H))
    if any(x < 1 for x in elems):
        raise InputError("schreier elements must be naturals >= 1")
    return elems[len(elems) // 2:]


def check_leaf(x, length: int | None = None) -> None:
    if not isinstance(x, str) or (x and x.strip("01")):
        raise InputError(f"not a bit string: {x!r}")
    if length is not None and len(x) != length:
        raise InputError(f"leaf {x!r} has width {len(x)}, expected {length}")


def bfs_index(node: str) -> int:
    check_leaf(node)
    return (1 << len(node)) + (int(node, 2) if node else 0)


def bfs_node(index: int) -> str:
    if index < 1:
        raise InputError("tree indices start at 1")
    depth = index.bit_length() - 1
    return format(index - (1 << depth), f"0{depth}b") if depth else ""


def meet(s: str, t: str) -> str:
    """Longest common prefix: the infimum of two nodes in the tree order."""
    k = 0
    for a, b in zip(s, t):
        if a != b:
            break
        k += 1
    return s[:k]


def precedes(s: str, t: str) -> bool:
    """Tree order: ``s`` is an initial segment of ``t``."""
    return t.startswith(s)


@dataclass(frozen=True)
class Divergence:
    m: int  # 1-based index of the first disagreement
    v: str  # common prefix of length m - 1


def divergence(x: str, y: str) -> Divergence:
    check_leaf(x)
    check_leaf(y, len(x))
    if x == y:
        raise InputError(f"divergence of a leaf with itself is undefined ({x!r})")
    v = meet(x, y)
    return Divergence(len(v) + 1, v)


def v_set(D: Iterable[str]) -> set[str]:
    """All pairwise divergence nodes of a set of distinct leaves."""
    leaves = list(D)
    if len(set(leaves)) != len(leaves):
        raise InputError("v_set needs pairwise distinct leaves")
    if leaves:
        for x in leaves:
            check_leaf(x, len(leaves[0]))
    # sorted leaves: the meets of neighbours already give every pairwise meet
    leaves.sort()
    return {meet(a, b) for a, b in zip(leaves, leaves[1:])}


def _find_non_meet_closed(C: set[str]) -> tuple[str, str] | None:
    # In lexicographic order the meet of two nodes is the shortest meet of
    # neighbours between them, so checking neighbours suffices.
    items = sorted(C)
    for s, t in zip(items, items[1:]):
        if meet(s, t) not in C:
            return s, t
    return None


def chain_extract(C: Iterable[str]) -> list[str]:
    """A chain of length at least ``floor(log2 |C|) + 1`` inside a meet-closed set.

    Follows the halving argument: take the least node ``t``, split the rest by
    the child of ``t`` they pass through, keep the larger side (the left one on
    ties) and repeat.
    """
    C = set(C)
    if not C:
        raise InputError("chain_extract needs a nonempty set")
    for s in C:
        check_leaf(s)
    bad = _find_non_meet_closed(C)
    if bad is not None:
        s, t = bad
        raise InputError(f"set is not meet-closed: meet({s!r}, {t!r}) = {meet(s, t)!r} missing")
    chain = []
    rest = sorted(C, key=len)
    while rest:
        t = rest[0]
        chain.append(t)
        k = len(t)
        left = [s for s in rest[1:] if s[k] == "0"]
        right = [s for s in rest[1:] if s[k] == "1"]
        rest = left if len(left) >= len(right) else right
    return chain


def dyadicD_contains(D: Iterable[str], length: int | None = None) -> bool:
    D = list(D)
    if length is not None:
        for x in D:
            check_leaf(x, length)
    return schreier_contains(bfs_index(v) for v in v_set(D))


def _lex_least_extending(A: list[str], prefix: str) -> str:
    for a in A:  # A is sorted
        if a.startswith(prefix):
            return a
    raise InputError(f"no leaf extends {prefix!r}")


def dyadicD_extract(A: Iterable[str], length: int | None = None) -> list[str]:
    """A member ``D`` of the divergence family inside ``A`` with ``|D| > log2(|A|-1)/2 + 1``.

    ``U`` is a long chain in ``v(A)``, ``W`` its top half by tree index, and
    ``D`` collects one leaf branching off at each ``w_i`` plus two leaves
    separating at the last one, so that ``v(D) = W``.
    """
    A = sorted(set(A))
    if len(A) < 2:
        raise InputError("dyadicD_extract needs at least two leaves")
    width = len(A[0]) if length is None else length
    for a in A:
        check_leaf(a, width)
    U = chain_extract(v_set(A))
    # along a chain the breadth-first index increases, so the top half is a suffix
    W = U[len(U) // 2:]
    D = []
    for w, nxt in zip(W, W[1:]):
        c = nxt[len(w)]
        D.append(_lex_least_extending(A, w + ("1" if c == "0" else "0")))
    last = W[-1]
    D.append(_lex_least_extending(A, last + "0"))
    D.append(_lex_least_extending(A, last + "1"))
    return D


def extraction_bound_holds(d_size: int, a_size: int) -> bool:
    """Exact test of ``d_size > log2(a_size - 1)/2 + 1``, i.e. ``4**(d_size-1) > a_size - 1``."""
    if d_size < 1:
        return False
    return 4 ** (d_size - 1) > a_size - 1

"""Hereditary families of finite sets.

Every family here is downward closed.  Explicit families store their members in
a trie keyed by sorted elements; rule families evaluate a predicate.  All
searches exploit heredity: a depth-first search only ever extends a set that is
already a member, since no extension of a non-member can be a member.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, Mapping

from . import dyadic
from .errors import InputError, ResourceError
from .measure import order_key
from .verdict import Verdict, WeightedSelection, fmt_q

DEFAULT_MAX_NODES = 2_000_000


def _sorted(F: Iterable) -> list:
    return sorted(F, key=order_key)


class HereditaryFamily:
    """Base class.  Subclasses implement :meth:`_member`."""

    kind = "abstract"
    #: rule guarantees heredity, so a set's own membership settles all its subsets
    hereditary = True

    def contains(self, F: Iterable) -> bool:
        F = frozenset(F)
        for x in F:
            self.check_element(x)
        return self._member(F)

    __contains__ = contains

    def check_element(self, x) -> None:
        """Raise :class:`InputError` when ``x`` is of the wrong ground kind."""

    def _member(self, F: frozenset) -> bool:
        raise NotImplementedError

    def is_empty(self) -> bool:
        return not self._member(frozenset())

    def extract(self, H: Iterable) -> frozenset:
        """A large member inside ``H``; the default is an exact maximum-cardinality search."""
        sel = max_member_weight(self, H)
        return sel.member if sel.member is not None else frozenset()

    def members_within(self, H: Iterable) -> Iterator[frozenset]:
        """Every member contained in ``H`` (depth-first, sorted order)."""
        if self.is_empty():
            return
        elems = _sorted(set(H))

        def walk(i: int, chosen: tuple) -> Iterator[frozenset]:
            yield frozenset(chosen)
            for j in range(i, len(elems)):
                cand = chosen + (elems[j],)
                if self.contains(cand):
                    yield from walk(j + 1, cand)

        yield from walk(0, ())

    def to_json(self) -> dict:
        raise InputError(f"{type(self).__name__} has no file representation")


class ExplicitFamily(HereditaryFamily):
    """Finite family stored as a trie over sorted elements, closed downward at insert."""

    kind = "explicit"

    def __init__(self, generators: Iterable[Iterable] = ()):
        self._root: dict = {}
        self._closure: set[frozenset] = set()
        self._empty = True
        self._generators: list[tuple] = []
        for g in generators:
            self.add(g)

    def add(self, generator: Iterable) -> None:
        g = tuple(_sorted(set(generator)))
        self._generators.append(g)
        self._empty = False
        for r in range(len(g) + 1):
            for sub in itertools.combinations(g, r):
                self._closure.add(frozenset(sub))
                node = self._root
                for x in sub:
                    node = node.setdefault(x, {})

    def _member(self, F: frozenset) -> bool:
        return F in self._closure

    def members(self) -> Iterator[frozenset]:
        if self._empty:
            return

        def walk(node: dict, prefix: tuple) -> Iterator[frozenset]:
            yield frozenset(prefix)
            for x in _sorted(node):
                yield from walk(node[x], prefix + (x,))

        yield from walk(self._root, ())

    def maximal_members(self) -> list[frozenset]:
        gens = {frozenset(g) for g in self._generators}
        return _sorted_sets(g for g in gens if not any(g < h for h in gens))

    def to_json(self) -> dict:
        return {"kind": "explicit", "members": [_sorted(m) for m in self.maximal_members()]}


def _sorted_sets(sets: Iterable[frozenset]) -> list[frozenset]:
    return sorted(sets, key=lambda s: (len(s), [order_key(x) for x in _sorted(s)]))


def build_explicit(members: Iterable[Iterable]) -> ExplicitFamily:
    return ExplicitFamily(members)


class SchreierFamily(HereditaryFamily):
    """``{S : |S| <= min S}`` on the naturals, optionally transferred to other elements.

    With ``order`` given, element ``order[i]`` plays the natural number ``i + 1``.
    """

    kind = "schreier"

    def __init__(self, order: Iterable | None = None):
        self.order = None if order is None else list(order)
        self._rank = None if order is None else {x: i + 1 for i, x in enumerate(self.order)}
        if self._rank is not None and len(self._rank) != len(self.order):
            raise InputError("schreier order lists an element twice")

    def check_element(self, x) -> None:
        if self._rank is None:
            if not isinstance(x, int) or isinstance(x, bool) or x < 1:
                raise InputError(f"schreier family is over naturals >= 1, got {x!r}")
        elif x not in self._rank:
            raise InputError(f"element {x!r} is not in the schreier order")

    def _member(self, F: frozenset) -> bool:
        if self._rank is None:
            return dyadic.schreier_contains(F)
        return dyadic.schreier_contains(self._rank[x] for x in F)

    def extract(self, H: Iterable) -> frozenset:
        H = set(H)
        for x in H:
            self.check_element(x)
        if self._rank is None:
            return frozenset(dyadic.schreier_extract(H))
        top = dyadic.schreier_extract(self._rank[x] for x in H)
        return frozenset(self.order[i - 1] for i in top)

    def to_json(self) -> dict:
        d: dict = {"kind": "schreier"}
        if self.order is not None:
            d["order"] = list(self.order)
        return d


class DyadicDFamily(HereditaryFamily):
    """Finite sets of width-``length`` leaves whose divergence nodes form a Schreier set."""

    kind = "dyadicD"

    def __init__(self, length: int):
        if length < 1:
            raise InputError("leaf length must be >= 1")
        self.length = length

    def check_element(self, x) -> None:
        dyadic.check_leaf(x, self.length)

    def _member(self, F: frozenset) -> bool:
        return dyadic.dyadicD_contains(F, self.length)

    def extract(self, H: Iterable) -> frozenset:
        H = frozenset(H)
        for x in H:
            self.check_element(x)
        if len(H) < 2:
            return H
        return frozenset(dyadic.dyadicD_extract(H, self.length))

    def to_json(self) -> dict:
        return {"kind": "dyadicD", "length": self.length}


class PartitionGenerated(HereditaryFamily):
    """Union of the power sets of the given classes: ``F`` is a member iff it lies in one class.

    The classes need not be disjoint unless ``require_partition`` is set.
    """

    kind = "partition"

    def __init__(self, classes: Iterable[Iterable], require_partition: bool = False):
        self.classes = [frozenset(c) for c in classes]
        self._class_of: dict = {}
        for i, c in enumerate(self.classes):
            for x in c:
                if x in self._class_of:
                    if require_partition:
                        raise InputError(f"element {x!r} lies in two classes")
                    self._class_of[x] = None
                else:
                    self._class_of[x] = i

    def _member(self, F: frozenset) -> bool:
        if not F:
            return True
        return any(F <= c for c in self.classes)

    def extract(self, H: Iterable) -> frozenset:
        H = frozenset(H)
        best = max(self.classes, key=lambda c: len(c & H), default=frozenset())
        return best & H

    def to_json(self) -> dict:
        return {"kind": "partition", "classes": [_sorted(c) for c in self.classes]}


class AllSubsets(HereditaryFamily):
    """Every finite subset (optionally of a fixed ground set)."""

    kind = "all"

    def __init__(self, ground: Iterable | None = None):
        self.ground = None if ground is None else frozenset(ground)

    def _member(self, F: frozenset) -> bool:
        return self.ground is None or F <= self.ground

    def extract(self, H: Iterable) -> frozenset:
        H = frozenset(H)
        return H if self.ground is None else H & self.ground

    def to_json(self) -> dict:
        d: dict = {"kind": "all"}
        if self.ground is not None:
            d["ground"] = _sorted(self.ground)
        return d


class BoundedSize(HereditaryFamily):
    """Subsets with at most ``k`` elements."""

    kind = "bounded"

    def __init__(self, k: int):
        if k < 0:
            raise InputError("size bound must be >= 0")
        self.k = k

    def _member(self, F: frozenset) -> bool:
        return len(F) <= self.k

    def extract(self, H: Iterable) -> frozenset:
        return frozenset(_sorted(set(H))[: self.k])

    def to_json(self) -> dict:
        return {"kind": "bounded", "k": self.k}


class PullbackFamily(HereditaryFamily):
    """Sets on which ``phi`` is one-to-one and whose image lies in ``base``."""

    kind = "pullback"

    def __init__(self, phi: Mapping, base: HereditaryFamily):
        self.phi = dict(phi)
        self.base = base

    def check_element(self, x) -> None:
        if x not in self.phi:
            raise InputError(f"element {x!r} has no class under phi")

    def _member(self, F: frozenset) -> bool:
        image = {self.phi[x] for x in F}
        return len(image) == len(F) and self.base.contains(image)

    def to_json(self) -> dict:
        return {"kind": "pullback", "phi": self.phi, "base": self.base.to_json()}


class CustomFamily(HereditaryFamily):
    """Family given by an arbitrary predicate.

    With ``hereditary=False`` the predicate is not trusted to be downward closed
    and :func:`is_compact_counterexample` checks every subset.
    """

    kind = "custom"

    def __init__(self, predicate: Callable[[frozenset], bool], hereditary: bool = True,
                 name: str = "custom"):
        self.predicate = predicate
        self.hereditary = hereditary
        self.name = name

    def _member(self, F: frozenset) -> bool:
        return bool(self.predicate(F))


def family_from_json(d: Mapping) -> HereditaryFamily:
    kind = d.get("kind")
    if kind == "explicit":
        return ExplicitFamily(d.get("members", []))
    if kind == "schreier":
        return SchreierFamily(d.get("order"))
    if kind == "dyadicD":
        return DyadicDFamily(int(d["length"]))
    if kind == "partition":
        return PartitionGenerated(d["classes"])
    if kind == "all":
        return AllSubsets(d.get("ground"))
    if kind == "bounded":
        return BoundedSize(int(d["k"]))
    if kind == "pullback":
        return PullbackFamily(d["phi"], family_from_json(d["base"]))
    raise InputError(f"unknown family kind {kind!r}")


def contains(family: HereditaryFamily, F: Iterable) -> bool:
    return family.contains(F)


def is_compact_counterexample(family: HereditaryFamily, A: Iterable) -> bool:
    """True iff every subset of the finite set ``A`` is a member."""
    A = frozenset(A)
    if family.hereditary:
        return family.contains(A)
    elems = _sorted(A)
    return all(family.contains(sub) for r in range(len(elems) + 1)
               for sub in itertools.combinations(elems, r))


def max_member_weight(
    family: HereditaryFamily,
    H: Iterable,
    weight: Callable[[Hashable], object] | Mapping | None = None,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    bound: bool = False,
) -> WeightedSelection:
    """Maximize the total weight of a member inside ``H`` by depth-first branch and bound.

    A branch is only extended while the partial set is a member.  ``bound``
    additionally cuts branches whose remaining weight cannot beat the incumbent.
    Exceeding ``max_nodes`` search nodes raises :class:`ResourceError`.
    """
    elems = _sorted(set(H))
    if isinstance(weight, Mapping):
        wmap = weight
        weight = lambda x: wmap.get(x, 0)  # noqa: E731
    ws = [Fraction(1) if weight is None else Fraction(weight(x)) for x in elems]
    if any(w < 0 for w in ws):
        raise InputError("weights must be nonnegative")
    for x in elems:
        family.check_element(x)
    if family.is_empty():
        return WeightedSelection(Fraction(0), None)

    # zero-weight elements never improve the objective
    live = [(x, w) for x, w in zip(elems, ws) if w > 0]
    suffix = [Fraction(0)] * (len(live) + 1)
    for i in range(len(live) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + live[i][1]

    best_val = Fraction(0)
    best_set: tuple = ()
    nodes = 0

    def dfs(i: int, chosen: tuple, val: Fraction) -> None:
        nonlocal nodes, best_val, best_set
        nodes += 1
        if nodes > max_nodes:
            raise ResourceError(f"member search exceeded {max_nodes} nodes (|H| = {len(elems)})")
        if val > best_val:
            best_val, best_set = val, chosen
        if i == len(live):
            return
        if bound and val + suffix[i] <= best_val:
            return
        x, w = live[i]
        cand = chosen + (x,)
        if family._member(frozenset(cand)):
            dfs(i + 1, cand, val + w)
        dfs(i + 1, chosen, val)

    dfs(0, (), Fraction(0))
    return WeightedSelection(best_val, frozenset(best_set))


def is_filling(
    family: HereditaryFamily,
    S: Iterable,
    epsilon,
    max_h: int,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> Verdict:
    """Check the filling property for every ``H`` inside ``S`` with ``|H| <= max_h``.

    The verdict only speaks for that restricted sweep; ``caps`` records it.
    The empty ``H`` is vacuously fine.
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise InputError(f"epsilon must lie in (0, 1], got {eps}")
    elems = _sorted(set(S))
    caps = {"max_h": max_h, "ground_size": len(elems)}
    worst_ratio: Fraction | None = None
    worst: tuple = ()
    worst_member: frozenset = frozenset()
    checked = 0
    for k in range(1, min(max_h, len(elems)) + 1):
        for H in itertools.combinations(elems, k):
            checked += 1
            sel = max_member_weight(family, H, max_nodes=max_nodes, bound=True)
            ratio = sel.value / k
            if worst_ratio is None or ratio < worst_ratio:
                worst_ratio, worst = ratio, H
                worst_member = sel.member if sel.member is not None else frozenset()
            if sel.value < eps * k:
                cert = {
                    "violating_h": list(H),
                    "best_member": _sorted(sel.member or ()),
                    "best_size": int(sel.value),
                }
                caps["subsets_checked"] = checked
                return Verdict("filling", False, eps, ratio, cert, caps)
    caps["subsets_checked"] = checked
    if worst_ratio is None:
        worst_ratio = Fraction(1)
    cert = {"worst_h": list(worst), "best_member": _sorted(worst_member),
            "worst_ratio": fmt_q(worst_ratio)}
    return Verdict("filling", True, eps, worst_ratio, cert, caps)


def replay_filling(verdict: Verdict, family: HereditaryFamily) -> Fraction:
    """Recompute a filling verdict's value from its certificate alone."""
    cert = verdict.certificate
    H = cert["violating_h"] if not verdict.holds else cert["worst_h"]
    member = frozenset(cert["best_member"])
    if not member <= frozenset(H) or not family.contains(member):
        raise InputError("certificate member is not a member inside H")
    if not H:
        return Fraction(1)
    sel = max_member_weight(family, H, bound=True)
    if sel.value != len(member):
        raise InputError("certificate member is not a maximum member of H")
    return Fraction(len(member), len(H))


__all__ = [
    "AllSubsets",
    "BoundedSize",
    "CustomFamily",
    "DyadicDFamily",
    "ExplicitFamily",
    "HereditaryFamily",
    "PartitionGenerated",
    "PullbackFamily",
    "SchreierFamily",
    "build_explicit",
    "contains",
    "family_from_json",
    "is_compact_counterexample",
    "is_filling",
    "max_member_weight",
    "replay_filling",
]

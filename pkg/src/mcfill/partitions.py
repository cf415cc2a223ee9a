"""Set partitions via restricted growth strings.

A restricted growth string ``a`` of length ``n`` has ``a[0] == 0`` and
``a[i] <= 1 + max(a[:i])``; such strings are in bijection with the set
partitions of ``n`` labelled items, so there are Bell(n) of them.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .errors import InputError
from .measure import GroundModel, order_key


@lru_cache(maxsize=None)
def bell(n: int) -> int:
    # Bell triangle
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    a = [0] * n

    def rec(i: int, top: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            yield tuple(a)
            return
        for v in range(top + 2):
            a[i] = v
            yield from rec(i + 1, max(top, v))

    yield from rec(1, 0)


def _build(items: Sequence, rgs: tuple[int, ...]) -> list[frozenset]:
    parts: list[set] = [set() for _ in range(max(rgs, default=-1) + 1)]
    for x, k in zip(items, rgs):
        parts[k].add(x)
    return [frozenset(p) for p in parts]


@lru_cache(maxsize=64)
def _small_partitions(items: tuple) -> tuple[tuple[frozenset, ...], ...]:
    return tuple(tuple(_build(items, rgs)) for rgs in restricted_growth_strings(len(items)))


def set_partitions(items: Sequence) -> Iterator[list[frozenset]]:
    """All partitions of ``items`` into nonempty parts, in restricted-growth order."""
    items = tuple(items)
    if len(items) <= 7:
        try:
            for parts in _small_partitions(items):
                yield list(parts)
            return
        except TypeError:  # unhashable items
            pass
    for rgs in restricted_growth_strings(len(items)):
        yield _build(items, rgs)


def validate_partition(model: GroundModel, parts: Iterable[Iterable]) -> list[frozenset]:
    """Check that ``parts`` are disjoint and cover the model's points; empty parts are kept."""
    out = [frozenset(p) for p in parts]
    seen: set = set()
    for i, p in enumerate(out):
        for x in p:
            model.block_of(x)
            if x in seen:
                raise InputError(f"point {x!r} lies in two parts (second is part {i})")
            seen.add(x)
    missing = model.points - seen
    if missing:
        raise InputError(f"partition misses points {sorted(missing, key=order_key)}")
    return out


def partition_to_json(parts: Sequence[frozenset]) -> list[list]:
    return [sorted(p, key=order_key) for p in parts]

"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction as Q

import pytest

from mcfill.measure import GroundModel


def model(*spec):
    """``model(("1/2", "a"), ("1/2", "b c"))``; points given as a space-separated string."""
    return GroundModel.from_blocks((m, pts.split()) for m, pts in spec)


def uniform(n_blocks, points_per_block):
    """``n_blocks`` blocks of equal measure; block i holds the given point lists."""
    return GroundModel.from_blocks((Q(1, n_blocks), pts) for pts in points_per_block)


def subsets(xs):
    xs = list(xs)
    for r in range(len(xs) + 1):
        yield from (frozenset(c) for c in itertools.combinations(xs, r))


def brute_outer(m, S):
    """min measure over every block union containing S."""
    best = None
    for E in subsets(range(len(m.blocks))):
        covered = set().union(*(m.blocks[i].points for i in E)) if E else set()
        if set(S) <= covered:
            val = sum((m.blocks[i].measure for i in E), Q(0))
            best = val if best is None or val < best else best
    return best


def brute_partitions(items):
    """Set partitions by recursive insertion (independent of restricted growth strings)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in brute_partitions(rest):
        yield [frozenset([first])] + p
        for i in range(len(p)):
            yield p[:i] + [p[i] | {first}] + p[i + 1:]


def brute_mc_value(m, members, parts):
    best = Q(0)
    for F in members:
        met = [p for p in parts if p & F]
        blocks = {m.block_of(x) for p in met for x in p}
        best = max(best, sum((m.blocks[b].measure for b in blocks), Q(0)))
    return best


def brute_mc_threshold(m, members):
    """min over partitions of max over members; members given explicitly."""
    return min(brute_mc_value(m, members, parts) for parts in brute_partitions(m.sorted_points()))


def random_model(rng, n_points, n_blocks, *, zero_ok=True, denoms=(2, 3, 4, 6)):
    q = rng.choice(denoms) * n_blocks
    cuts = sorted(rng.sample(range(1, q), n_blocks - 1)) if n_blocks > 1 else []
    sizes = [b - a for a, b in zip([0] + cuts, cuts + [q])]
    if zero_ok and n_blocks > 1 and rng.random() < 0.2:
        i = rng.randrange(n_blocks)
        j = (i + 1) % n_blocks
        sizes[j] += sizes[i]
        sizes[i] = 0
    pts = [[] for _ in range(n_blocks)]
    for k in range(n_points):
        pts[rng.randrange(n_blocks)].append(f"p{k}")
    return GroundModel.from_blocks((Q(s, q), p) for s, p in zip(sizes, pts))


@pytest.fixture
def rng():
    return random.Random(12345)


# acceptance lines, filled by tests/test_acceptance.py and repeated at the end of the run
ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[n])

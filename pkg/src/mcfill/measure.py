"""Finite block probability models.

A :class:`GroundModel` is a probability space whose sigma-algebra is generated
by a finite partition into *blocks*.  Each block carries a rational measure and
a (possibly empty) set of marked points.  Measurable sets are unions of blocks
and are represented as frozensets of block indices; arbitrary point sets are
frozensets of point ids.  A point set that meets a block only partially is not
measurable, which is what gives the outer measure something to do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import InputError

Point = Hashable
MeasurableSet = frozenset  # of block indices
PointSet = frozenset  # of point ids


@dataclass(frozen=True)
class Block:
    measure: Fraction
    points: frozenset = frozenset()


@dataclass(frozen=True)
class GroundModel:
    """Immutable block model; block ids are positions in ``blocks``."""

    blocks: tuple[Block, ...]
    _where: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        where: dict = {}
        total = Fraction(0)
        for i, b in enumerate(self.blocks):
            if not isinstance(b.measure, Fraction):
                raise InputError(f"block {i}: measure must be a Fraction")
            if b.measure < 0:
                raise InputError(f"block {i}: negative measure {b.measure}")
            total += b.measure
            for p in b.points:
                if p in where:
                    raise InputError(f"point {p!r} appears in blocks {where[p]} and {i}")
                where[p] = i
        if total != 1:
            raise InputError(f"block measures sum to {total}, expected 1")
        object.__setattr__(self, "_where", where)

    @classmethod
    def from_blocks(cls, spec: Iterable[tuple]) -> "GroundModel":
        """Build from ``(measure, points)`` pairs; measures may be str/int/Fraction."""
        return cls(tuple(Block(Fraction(m), frozenset(pts)) for m, pts in spec))

    @property
    def points(self) -> frozenset:
        return frozenset(self._where)

    @property
    def total(self) -> Fraction:
        return sum((b.measure for b in self.blocks), Fraction(0))

    @property
    def all_blocks(self) -> frozenset:
        return frozenset(range(len(self.blocks)))

    def block_of(self, point: Point) -> int:
        try:
            return self._where[point]
        except KeyError:
            raise InputError(f"unknown point id {point!r}") from None

    def sorted_points(self) -> list:
        return sorted(self._where, key=order_key)

    def measure(self, E: Iterable[int]) -> Fraction:
        E = frozenset(E)
        self._check_blocks(E)
        return sum((self.blocks[i].measure for i in E), Fraction(0))

    def _check_blocks(self, E: frozenset) -> None:
        n = len(self.blocks)
        for i in E:
            if not isinstance(i, int) or not 0 <= i < n:
                raise InputError(f"unknown block id {i!r}")


def order_key(x):
    """Total order used everywhere elements need sorting (mixed types allowed)."""
    return (type(x).__name__, x)


def hull(model: GroundModel, S: Iterable[Point]) -> frozenset:
    """Smallest measurable set containing ``S``: the blocks it meets."""
    return frozenset(model.block_of(p) for p in S)


def outer_measure(model: GroundModel, S: Iterable[Point]) -> Fraction:
    return model.measure(hull(model, S))


def is_eta_thick(model: GroundModel, E: Iterable[Iterable[int]], eta) -> bool:
    """True iff the union of the measurable sets in ``E`` misses at most ``eta``."""
    eta = Fraction(eta)
    if eta < 0:
        raise InputError(f"eta must be nonnegative, got {eta}")
    covered: set[int] = set()
    for s in E:
        s = frozenset(s)
        model._check_blocks(s)
        covered |= s
    return model.measure(model.all_blocks - covered) <= eta


def disjointify(model: GroundModel, A: Sequence[Iterable[int]]) -> list[frozenset]:
    """``E_1 = A_1`` and ``E_i = A_i minus the union of earlier A_j``."""
    seen: set[int] = set()
    out = []
    for s in A:
        s = frozenset(s)
        model._check_blocks(s)
        out.append(s - seen)
        seen |= s
    return out


def refine_block(
    model: GroundModel,
    block_id: int,
    piece_count: int,
    point_assignment: Mapping[Point, int] | None = None,
) -> GroundModel:
    """Split one block into ``piece_count`` blocks of equal measure.

    The new pieces occupy ids ``block_id .. block_id + piece_count - 1``; later
    blocks shift up by ``piece_count - 1``.  ``point_assignment`` maps each point
    of the block to a piece index; omitted points go to piece 0.
    """
    if not isinstance(block_id, int) or not 0 <= block_id < len(model.blocks):
        raise InputError(f"unknown block id {block_id!r}")
    if piece_count < 1:
        raise InputError(f"piece_count must be >= 1, got {piece_count}")
    old = model.blocks[block_id]
    point_assignment = dict(point_assignment or {})
    stray = set(point_assignment) - old.points
    if stray:
        raise InputError(f"points {sorted(stray, key=order_key)} are not in block {block_id}")
    buckets: list[set] = [set() for _ in range(piece_count)]
    for p in old.points:
        k = point_assignment.get(p, 0)
        if not isinstance(k, int) or not 0 <= k < piece_count:
            raise InputError(f"point {p!r} assigned to invalid piece {k!r}")
        buckets[k].add(p)
    share = old.measure / piece_count
    pieces = tuple(Block(share, frozenset(b)) for b in buckets)
    return GroundModel(model.blocks[:block_id] + pieces + model.blocks[block_id + 1:])


def equipartition(model: GroundModel, B: Iterable[int], theta) -> list[frozenset]:
    """Carve ``floor(mu(B)/theta)`` disjoint pieces of measure exactly ``theta`` out of ``B``.

    Positive blocks are packed in order of decreasing measure (ties by id).  The
    packing either closes every piece exactly or overshoots, in which case the
    blocks are too coarse and must be refined first.
    """
    theta = Fraction(theta)
    if theta <= 0:
        raise InputError(f"theta must be positive, got {theta}")
    B = frozenset(B)
    model._check_blocks(B)
    order = sorted((i for i in B if model.blocks[i].measure > 0),
                   key=lambda i: (-model.blocks[i].measure, i))
    pieces: list[frozenset] = []
    current: list[int] = []
    acc = Fraction(0)
    for i in order:
        current.append(i)
        acc += model.blocks[i].measure
        if acc == theta:
            pieces.append(frozenset(current))
            current, acc = [], Fraction(0)
        elif acc > theta:
            raise InputError(
                f"block {i} (measure {model.blocks[i].measure}) cannot be packed into "
                f"pieces of measure {theta}; refine_block it so every block of B has "
                f"measure dividing {theta}"
            )
    return pieces

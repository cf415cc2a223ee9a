"""Partitions that make every Riemann sum small for one-to-one maps into a controlled set.

The target space is Euclidean ``R^d``.  The map sends points one-to-one into
a finite set of vectors of norm at most 1, grouped as ``I_1, I_2, ...`` so that
no unit functional exceeds ``epsilon`` in absolute value on more than ``m``
vectors of ``I_m``.  Pulling the grouping back, covering each part by blocks
of measure at most ``epsilon / (2**m * m)`` and splitting along those blocks
gives a partition against which every tagged sum has norm at most
``2 * epsilon``.  The report certifies this exhaustively on the model.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import ceil
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import InputError, ResourceError
from .measure import GroundModel, order_key
from .verdict import fmt_q

Vector = tuple  # of Fractions

DEFAULT_MAX_TAGGED = 1_000_000


def _dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def bessel_count(epsilon: Fraction) -> int:
    """Most orthonormal vectors a unit functional can exceed ``epsilon`` on: the largest k with k*eps^2 < 1."""
    return ceil(1 / (epsilon * epsilon)) - 1


@dataclass(frozen=True)
class OrthoSystem:
    dimension: int
    vectors: tuple[Vector, ...]
    grouping: tuple[tuple[int, ...], ...]  # grouping[m - 1] lists vector indices of I_m

    def __post_init__(self) -> None:
        for i, v in enumerate(self.vectors):
            if len(v) != self.dimension:
                raise InputError(f"vector {i} has dimension {len(v)}, expected {self.dimension}")
            if _dot(v, v) > 1:
                raise InputError(f"vector {i} lies outside the unit ball")
        flat = [i for g in self.grouping for i in g]
        if sorted(flat) != list(range(len(self.vectors))):
            raise InputError("grouping must partition the vector indices")

    @classmethod
    def build(cls, vectors: Iterable[Iterable], grouping: Iterable[Iterable[int]]) -> "OrthoSystem":
        vecs = tuple(tuple(Fraction(c) for c in v) for v in vectors)
        dim = len(vecs[0]) if vecs else 0
        return cls(dim, vecs, tuple(tuple(g) for g in grouping))

    @classmethod
    def standard(cls, d: int, grouping: Iterable[Iterable[int]]) -> "OrthoSystem":
        basis = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
        return cls.build(basis, grouping)

    def is_orthonormal(self, idx: Iterable[int]) -> bool:
        idx = list(idx)
        for a in idx:
            if _dot(self.vectors[a], self.vectors[a]) != 1:
                return False
        return all(_dot(self.vectors[a], self.vectors[b]) == 0 for a, b in itertools.combinations(idx, 2))

    def control_report(self, epsilon: Fraction) -> list[dict]:
        """Why each group satisfies the count bound: its size, or Bessel's inequality."""
        out = []
        b = bessel_count(epsilon)
        for m, g in enumerate(self.grouping, start=1):
            ortho = self.is_orthonormal(g)
            bound = min(len(g), b) if ortho else len(g)
            out.append({"m": m, "size": len(g), "orthonormal": ortho,
                        "bessel_count": b if ortho else None, "count_bound": bound,
                        "ok": bound <= m})
        return out


def sign_functionals(d: int) -> list[tuple[tuple[int, ...], int]]:
    """Unit functionals ``c / sqrt(k)`` with ``c`` in {-1,0,1}^d having ``k`` nonzero entries.

    Includes every basis functional and its negative (``k = 1``).
    """
    out = []
    for c in itertools.product((-1, 0, 1), repeat=d):
        k = sum(1 for x in c if x)
        if k:
            out.append((c, k))
    return out


@dataclass
class UecResult:
    parts: list[tuple[int, int, frozenset]]  # (n, m, points of the refined part)
    covers: dict[tuple[int, int], frozenset]
    report: dict


def uec_partition(model: GroundModel, ortho: OrthoSystem, injection: Mapping[Hashable, int],
                  epsilon, *, max_tagged: int = DEFAULT_MAX_TAGGED) -> UecResult:
    eps = Fraction(epsilon)
    if eps <= 0:
        raise InputError(f"epsilon must be positive, got {eps}")
    points = model.sorted_points()
    if set(injection) != set(points):
        raise InputError("the map must be defined exactly on the model's points")
    if len(set(injection.values())) != len(injection):
        raise InputError("the map into the vector set is not one-to-one")
    for x, i in injection.items():
        if not isinstance(i, int) or not 0 <= i < len(ortho.vectors):
            raise InputError(f"point {x!r} maps to unknown vector {i!r}")
    control = ortho.control_report(eps)
    bad = [c["m"] for c in control if not c["ok"]]
    if bad:
        raise InputError(f"groups {bad} may hold more than m vectors above epsilon")

    group_of = {i: m for m, g in enumerate(ortho.grouping, start=1) for i in g}
    omega: dict[int, list] = {}
    for x in points:
        omega.setdefault(group_of[injection[x]], []).append(x)

    parts: list[tuple[int, int, frozenset]] = []
    covers: dict[tuple[int, int], frozenset] = {}
    for m in sorted(omega):
        cap = eps / (2 ** m * m)
        blocks = sorted({model.block_of(x) for x in omega[m]})
        for n, b in enumerate(blocks, start=1):
            mu = model.blocks[b].measure
            if mu > cap:
                pieces = ceil(mu / cap)
                raise InputError(
                    f"block {b} (measure {mu}) meets part {m} but covers there must have "
                    f"measure <= {cap}; refine_block it into at least {pieces} pieces"
                )
            covers[(n, m)] = frozenset({b})
            parts.append((n, m, frozenset(x for x in omega[m] if model.block_of(x) == b)))

    # every tagged family: each block goes to at most one (n, m) whose cover is that
    # block, tagged by a point of that refined part
    by_block: dict[int, list] = {}
    for n, m, P in parts:
        (b,) = covers[(n, m)]
        for t in sorted(P, key=order_key):
            by_block.setdefault(b, []).append((m, t))
    blocks = sorted(by_block)
    total = 1
    for b in blocks:
        total *= len(by_block[b]) + 1
    if total > max_tagged:
        raise ResourceError(f"{total} tagged families exceed the cap of {max_tagged}")

    grid = sign_functionals(ortho.dimension)
    vec = {x: ortho.vectors[injection[x]] for x in points}
    two_eps_sq = 4 * eps * eps
    max_norm_sq = Fraction(0)
    max_func_sq = Fraction(0)
    worst_count_excess = 0
    violations = 0
    for choice in itertools.product(*[[None] + by_block[b] for b in blocks]):
        terms = [(model.blocks[b].measure, mt) for b, mt in zip(blocks, choice) if mt is not None]
        s = [Fraction(0)] * ortho.dimension
        for mu, (m, t) in terms:
            for j, c in enumerate(vec[t]):
                s[j] += mu * c
        norm_sq = _dot(s, s)
        max_norm_sq = max(max_norm_sq, norm_sq)
        if norm_sq > two_eps_sq:
            violations += 1
        for c, k in grid:
            val = _dot(c, s)
            val_sq = val * val / k
            if val_sq > max_func_sq:
                max_func_sq = val_sq
            if val_sq > two_eps_sq:
                violations += 1
            counts: dict[int, int] = {}
            for mu, (m, t) in terms:
                a = _dot(c, vec[t])
                if a * a > eps * eps * k:
                    counts[m] = counts.get(m, 0) + 1
            for m, cnt in counts.items():
                worst_count_excess = max(worst_count_excess, cnt - m)

    report = {
        "epsilon": fmt_q(eps),
        "bound": fmt_q(2 * eps),
        "tagged_families": total,
        "functional_grid": f"all c/sqrt(k), c in {{-1,0,1}}^{ortho.dimension} with k nonzero entries",
        "functionals": len(grid),
        "max_norm_squared": fmt_q(max_norm_sq),
        "max_functional_squared": fmt_q(max_func_sq),
        "bound_squared": fmt_q(two_eps_sq),
        "control": control,
        "count_bound_ok": worst_count_excess <= 0,
        "violations": violations,
        "certified": violations == 0 and worst_count_excess <= 0,
    }
    return UecResult(parts, covers, report)

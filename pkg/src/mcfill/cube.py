"""Finite cube ``2^kappa`` with coordinates grouped into classes.

Points are bit strings of length ``kappa``; coordinate ``g`` (1-based) is
``x[g - 1]``.  For class ``a`` (1-based, in the given order) ``D_a`` is the set
of points vanishing on the whole class and ``E_a`` is ``D_a`` minus every
earlier ``D_b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InputError, InvariantViolation


@dataclass(frozen=True)
class CubeModel:
    kappa: int
    classes: tuple[frozenset, ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for i, c in enumerate(self.classes, start=1):
            if not c:
                raise InputError(f"class {i} is empty")
            for g in c:
                if not isinstance(g, int) or not 1 <= g <= self.kappa:
                    raise InputError(f"class {i}: coordinate {g!r} outside 1..{self.kappa}")
                if g in seen:
                    raise InputError(f"coordinate {g} lies in two classes")
                seen.add(g)
        if len(seen) != self.kappa:
            raise InputError(f"classes miss coordinates {sorted(set(range(1, self.kappa + 1)) - seen)}")

    @classmethod
    def build(cls, kappa: int, classes: Iterable[Iterable[int]]) -> "CubeModel":
        return cls(kappa, tuple(frozenset(c) for c in classes))

    @classmethod
    def from_json(cls, d: Mapping) -> "CubeModel":
        return cls.build(int(d["kappa"]), d["classes"])

    def to_json(self) -> dict:
        return {"kappa": self.kappa, "classes": [sorted(c) for c in self.classes]}

    def class_of(self, g: int) -> int:
        for i, c in enumerate(self.classes, start=1):
            if g in c:
                return i
        raise InputError(f"coordinate {g} outside 1..{self.kappa}")

    def in_D(self, alpha: int, x: str) -> bool:
        return all(x[g - 1] == "0" for g in self.classes[alpha - 1])

    def in_E(self, alpha: int, x: str) -> bool:
        return self.in_D(alpha, x) and not any(self.in_D(b, x) for b in range(1, alpha))


def _check_cylinder(cube: CubeModel, Z: Mapping[int, int | str]) -> dict[int, str]:
    out = {}
    for g, bit in Z.items():
        g = int(g)
        if not 1 <= g <= cube.kappa:
            raise InputError(f"cylinder fixes coordinate {g} outside 1..{cube.kappa}")
        bit = str(bit)
        if bit not in ("0", "1"):
            raise InputError(f"cylinder value {bit!r} is not a bit")
        out[g] = bit
    return out


def cube_witness(cube: CubeModel, Z: Mapping[int, int | str], beta: int) -> str:
    """A point of the cylinder ``Z`` lying in ``E_beta``.

    ``J`` is the set of classes meeting the fixed coordinates.  A point ``z`` of
    ``Z`` outside every ``D_a`` with ``a`` in ``J`` is found by setting all free
    coordinates to 1 (if that fails, ``Z`` forces some such class to 0 and no
    ``z`` exists).  The witness copies ``z`` on the classes of ``J``, is 0 on
    class ``beta`` and 1 elsewhere.
    """
    Z = _check_cylinder(cube, Z)
    if not 1 <= beta <= len(cube.classes):
        raise InputError(f"class index {beta} outside 1..{len(cube.classes)}")
    J = {cube.class_of(g) for g in Z}
    if beta in J:
        raise InputError(f"class {beta} meets the cylinder's coordinates")
    z = "".join(Z.get(g, "1") for g in range(1, cube.kappa + 1))
    blocked = [a for a in sorted(J) if cube.in_D(a, z)]
    if blocked:
        raise InputError(f"cylinder forces class {blocked[0]} to vanish; no compatible point avoids D")
    bits = []
    for g in range(1, cube.kappa + 1):
        a = cube.class_of(g)
        if a in J:
            bits.append(z[g - 1])
        elif a == beta:
            bits.append("0")
        else:
            bits.append("1")
    x = "".join(bits)
    if any(x[g - 1] != v for g, v in Z.items()):
        raise InvariantViolation("witness leaves the cylinder")
    for a in range(1, len(cube.classes) + 1):
        if a != beta and cube.in_D(a, x):
            raise InvariantViolation(f"witness falls in D_{a}")
    if not cube.in_E(beta, x):
        raise InvariantViolation(f"witness is not in E_{beta}")
    return x

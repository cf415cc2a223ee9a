"""Result objects returned by searches and checkers, plus rational (de)serialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


def fmt_q(x) -> str:
    """Serialize a rational as ``"p/q"`` (always with a denominator)."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_q(s) -> Fraction:
    if isinstance(s, float):
        raise ValueError("floats are not accepted; write rationals as 'p/q' strings")
    return Fraction(s)


@dataclass(frozen=True)
class WeightedSelection:
    """Best member found by a search.  ``member`` is None only for the empty family."""

    value: Fraction
    member: frozenset | None


@dataclass
class Verdict:
    """Outcome of a checker.

    ``value`` is the quantity compared against ``epsilon`` (a minimax value for
    the MC checkers, the worst filling ratio for :func:`is_filling`).  The
    certificate is plain JSON-able data sufficient to recompute ``value``.
    """

    kind: str
    holds: bool
    epsilon: Fraction
    value: Fraction
    certificate: dict[str, Any]
    caps: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "holds": self.holds,
            "epsilon": fmt_q(self.epsilon),
            "value": fmt_q(self.value),
            "certificate": self.certificate,
            "caps": self.caps,
        }

"""Riemann-McShane sums for indicator-valued functions and the MC-integrability decision.

An indicator function model is a finite collection of point sets ``C_l``: the
function takes values in a space normed by functionals ``l`` with
``l(f(t)) = 1`` if ``t`` lies in ``C_l`` and 0 otherwise.  The norm of a Riemann
sum is then the largest measure of the pieces whose tags fall in a single
``C_l``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import InputError, InvariantViolation, ResourceError
from .families import HereditaryFamily, PartitionGenerated, max_member_weight
from .mcfilling import DEFAULT_MAX_POINTS, _check_points
from .measure import GroundModel, hull, order_key, outer_measure
from .partitions import partition_to_json, set_partitions, validate_partition
from .verdict import Verdict, WeightedSelection, fmt_q

TaggedFamily = list  # of (frozenset of block ids, tag point)

DEFAULT_MAX_ASSIGNMENTS = 1_000_000


def _sorted(xs: Iterable) -> list:
    return sorted(xs, key=order_key)


@dataclass
class IndicatorFunctionModel:
    functionals: dict[str, frozenset]
    #: when set, the functionals are exactly the members of this family
    family: HereditaryFamily | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        self.functionals = {str(k): frozenset(v) for k, v in self.functionals.items()}

    def generated_family(self) -> HereditaryFamily:
        """The union of the power sets of the functional sets."""
        if self.family is not None:
            return self.family
        return PartitionGenerated(self.functionals.values())

    def to_json(self) -> dict:
        return {"functionals": {k: _sorted(v) for k, v in self.functionals.items()}}


def indicator_from_json(d: Mapping) -> IndicatorFunctionModel:
    if "functionals" not in d:
        raise InputError("indicator model file needs a 'functionals' object")
    return IndicatorFunctionModel({k: frozenset(v) for k, v in d["functionals"].items()})


def validate_tagged(model: GroundModel, tagged: Iterable) -> list[tuple[frozenset, Hashable]]:
    out = []
    seen: set[int] = set()
    for E, t in tagged:
        E = frozenset(E)
        model._check_blocks(E)
        model.block_of(t)
        if E & seen:
            raise InputError(f"tagged pieces overlap in blocks {sorted(E & seen)}")
        seen |= E
        out.append((E, t))
    return out


def _tag_weights(model: GroundModel, tagged) -> dict:
    w: dict = {}
    for E, t in tagged:
        w[t] = w.get(t, Fraction(0)) + model.measure(E)
    return w


def riemann_norm(model: GroundModel, fm: IndicatorFunctionModel, tagged: Iterable) -> WeightedSelection:
    """Norm of ``sum mu(E_i) f(t_i)``: the best total measure of pieces tagged inside one ``C_l``.

    The returned member is the set of tags counted by a maximizing functional.
    """
    tagged = validate_tagged(model, tagged)
    w = _tag_weights(model, tagged)
    if fm.family is not None:
        sel = max_member_weight(fm.family, w, w)
        return WeightedSelection(sel.value, sel.member if sel.member is not None else frozenset())
    best = WeightedSelection(Fraction(0), frozenset())
    for name in sorted(fm.functionals):
        C = fm.functionals[name]
        hit = frozenset(t for t in w if t in C)
        val = sum((w[t] for t in hit), Fraction(0))
        if val > best.value:
            best = WeightedSelection(val, hit)
    return best


def build_indicator_model(family: HereditaryFamily, points: Iterable) -> IndicatorFunctionModel:
    """The evaluation-functional model: one functional per member ``F``, with set ``F``."""
    funcs = {}
    for F in family.members_within(points):
        funcs["{" + ",".join(str(x) for x in _sorted(F)) + "}"] = F
    return IndicatorFunctionModel(funcs, family)


def c0_model_from_partition(classes: Mapping[Hashable, Iterable] | Sequence[Iterable]
                            ) -> IndicatorFunctionModel:
    """Unit-vector valued model: ``f(t) = e_g`` for ``t`` in class ``g``."""
    if not isinstance(classes, Mapping):
        classes = dict(enumerate(classes))
    seen: set = set()
    funcs = {}
    for g, C in classes.items():
        C = frozenset(C)
        if C & seen:
            raise InputError(f"classes overlap at {_sorted(C & seen)}")
        seen |= C
        funcs[str(g)] = C
    return IndicatorFunctionModel(funcs)


def partition_from_c0_model(fm: IndicatorFunctionModel, points: Iterable | None = None
                            ) -> dict[str, frozenset]:
    seen: set = set()
    for name, C in fm.functionals.items():
        if not C:
            raise InputError(f"class {name} is empty")
        if C & seen:
            raise InputError(f"functional sets overlap at {_sorted(C & seen)}; not a partition")
        seen |= C
    if points is not None and set(points) != seen:
        raise InputError("functional sets do not cover the points")
    return dict(fm.functionals)


# --------------------------------------------------------------------------
# the decision procedure


def _best_tagged_for_partition(model: GroundModel, fm: IndicatorFunctionModel,
                               parts: list[frozenset]) -> tuple[Fraction, list, str | None]:
    """Best fully covering tagged family against one partition with hull covers.

    For a fixed functional, each block is best given to a part whose hull holds
    it and which has a tag in the functional's set; the best functional wins.
    """
    hulls = [hull(model, p) for p in parts]
    region = sorted(frozenset().union(*hulls)) if hulls else []
    best_val, best_name = Fraction(-1), None
    for name in sorted(fm.functionals):
        C = fm.functionals[name]
        good = frozenset().union(*(h for h, p in zip(hulls, parts) if p & C)) if parts else frozenset()
        val = model.measure(good)
        if val > best_val:
            best_val, best_name = val, name
    C = fm.functionals[best_name] if best_name is not None else frozenset()
    groups: dict = {}
    for b in region:
        owners = [m for m, h in enumerate(hulls) if b in h]
        rich = [m for m in owners if parts[m] & C]
        m = (rich or owners)[0]
        t = _sorted(parts[m] & C)[0] if rich else _sorted(parts[m])[0]
        groups.setdefault((m, t), set()).add(b)
    tagged = [(frozenset(bs), t) for (m, t), bs in sorted(groups.items(), key=lambda kv: (kv[0][0], order_key(kv[0][1])))]
    val = riemann_norm(model, fm, tagged).value if tagged else Fraction(0)
    return val, tagged, best_name


def enumerate_tagged_families(model: GroundModel, parts: Sequence[frozenset], *,
                              allow_uncovered: bool = False,
                              max_assignments: int = DEFAULT_MAX_ASSIGNMENTS):
    """Every tagged family respecting ``parts`` with hull covers, in canonical block-assignment form.

    Each positive block of the hull union goes to one (part, tag) with the block
    inside the part's hull and the tag in the part; blocks sharing a pair merge
    into one piece.  With ``allow_uncovered`` blocks may also be left out.
    """
    hulls = [hull(model, p) for p in parts]
    region = sorted(b for b in frozenset().union(*hulls) if model.blocks[b].measure > 0) if hulls else []
    options = []
    total = 1
    for b in region:
        opts = [(m, t) for m, h in enumerate(hulls) if b in h for t in _sorted(parts[m])]
        if allow_uncovered:
            opts.append(None)
        options.append(opts)
        total *= len(opts)
    if total > max_assignments:
        raise ResourceError(f"{total} tagged families exceed the cap of {max_assignments}")
    for choice in itertools.product(*options):
        groups: dict = {}
        for b, c in zip(region, choice):
            if c is not None:
                groups.setdefault(c, set()).add(b)
        yield [(frozenset(bs), t) for (m, t), bs in groups.items()]


def decide_mc_integrability(model: GroundModel, fm: IndicatorFunctionModel, epsilon, *,
                            max_points: int = DEFAULT_MAX_POINTS,
                            require_null: bool = True) -> Verdict:
    """Decide whether some epsilon-large Riemann sum survives every partition.

    ``holds`` means: for every partition of the points, with hull covers, some
    tagged family with pieces inside the covers of their tags' parts has norm
    above ``epsilon``; then the function is not MC-integrable at this epsilon.
    Thickness is handled exactly: adding pieces never lowers the norm, so only
    families covering the whole hull union are searched.  Pointless blocks can
    never carry a tag and are left out of the thickness requirement.

    ``require_null`` enforces that every ``C_l`` has outer measure 0, the
    situation in which the integral, if any, must be 0.
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        raise InputError(f"epsilon must be positive, got {eps}")
    for name, C in fm.functionals.items():
        for x in C:
            model.block_of(x)
        if require_null and outer_measure(model, C) != 0:
            raise InputError(f"functional {name} has outer measure {outer_measure(model, C)}, not 0")
    pts = _check_points(model, max_points)
    best = None
    count = 0
    for idx, parts in enumerate(set_partitions(pts)):
        count += 1
        val, tagged, name = _best_tagged_for_partition(model, fm, parts)
        if best is None or val < best[0]:
            best = (val, idx, parts, tagged, name)
    value, idx, parts, tagged, name = best
    cert = {
        "partition": partition_to_json(parts),
        "partition_index": idx,
        "tagged": [[sorted(E), t] for E, t in tagged],
        "functional": name,
        "value": fmt_q(value),
    }
    caps = {"max_points": max_points, "points": len(pts), "partitions": count,
            "require_null": require_null}
    return Verdict("mc_integrability", value > eps, eps, value, cert, caps)


def replay_decide_certificate(verdict: Verdict, model: GroundModel, fm: IndicatorFunctionModel, *,
                              max_assignments: int = DEFAULT_MAX_ASSIGNMENTS) -> Fraction:
    """Re-derive a decision certificate's value: the tagged family's norm, and that no
    tagged family respecting the partition does better (by enumeration)."""
    cert = verdict.certificate
    parts = validate_partition(model, cert["partition"])
    tagged = validate_tagged(model, [(frozenset(E), t) for E, t in cert["tagged"]])
    hulls = [hull(model, p) for p in parts]
    part_of = {x: i for i, p in enumerate(parts) for x in p}
    for E, t in tagged:
        if not E <= hulls[part_of[t]]:
            raise InputError(f"piece tagged {t!r} leaves the cover of its part")
    claimed = Fraction(cert["value"])
    if riemann_norm(model, fm, tagged).value != claimed:
        raise InputError("tagged family does not evaluate to the claimed value")
    best = max((riemann_norm(model, fm, tf).value
                for tf in enumerate_tagged_families(model, parts, max_assignments=max_assignments)),
               default=Fraction(0))
    if best != claimed:
        raise InputError(f"partition admits a tagged family of norm {best}, claimed {claimed}")
    if (claimed > verdict.epsilon) != verdict.holds:
        raise InputError("claimed value is inconsistent with the verdict")
    return claimed


# --------------------------------------------------------------------------
# signature selection


@dataclass
class GammaSelection:
    signature: frozenset  # part indices met by every class in the chosen group
    B: frozenset
    gamma: Hashable
    member: frozenset
    value: Fraction

    def to_json(self) -> dict:
        return {
            "signature": sorted(self.signature),
            "B": sorted(self.B),
            "gamma": self.gamma,
            "member": _sorted(self.member),
            "value": fmt_q(self.value),
        }


def gamma_select(model: GroundModel, classes: Mapping[Hashable, Iterable],
                 partition: Sequence[Iterable], epsilon) -> GammaSelection:
    """Group classes by the set of parts they meet and pick a heavy group.

    Among signatures whose classes have union of outer measure above
    ``epsilon`` the heaviest is taken (ties: smallest sorted signature).  A
    single class of that group meets every part of the signature, so one point
    per part gives a member whose parts cover the group.
    """
    eps = Fraction(epsilon)
    parts = validate_partition(model, partition)
    classes = {g: frozenset(C) for g, C in classes.items()}
    partition_from_c0_model(IndicatorFunctionModel({str(g): C for g, C in classes.items()}),
                            model.points)
    groups: dict[frozenset, list] = {}
    for g in _sorted(classes):
        sig = frozenset(m for m, p in enumerate(parts) if p & classes[g])
        groups.setdefault(sig, []).append(g)
    scored = []
    for sig, gs in groups.items():
        mass = outer_measure(model, frozenset().union(*(classes[g] for g in gs)))
        if mass > eps:
            scored.append((-mass, sorted(sig), sig))
    if not scored:
        raise InputError(f"hypothesis fails: no signature group has outer measure above {eps}")
    scored.sort()
    sig = scored[0][2]
    gamma = groups[sig][0]
    F = frozenset(_sorted(classes[gamma] & parts[m])[0] for m in sorted(sig))
    met = frozenset().union(*(parts[m] for m in sig)) if sig else frozenset()
    value = outer_measure(model, met)
    if not value > eps:
        raise InvariantViolation("selected parts do not exceed epsilon")
    return GammaSelection(sig, sig, gamma, F, value)

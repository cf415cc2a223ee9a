"""MC-filling checkers, the filling-to-MC-filling pipeline, and the greedy witness engine.

Every checker is an exact minimax: the adversary picks a partition of the
model's points (and measurable covers of the parts), the family player answers
with a member, and the payoff is the (outer) measure of the parts it meets.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import InputError, InvariantViolation, ResourceError
from .families import HereditaryFamily, max_member_weight
from .measure import (
    GroundModel,
    disjointify,
    equipartition,
    hull,
    order_key,
    outer_measure,
    refine_block,
)
from .partitions import bell, partition_to_json, set_partitions, validate_partition
from .verdict import Verdict, WeightedSelection, fmt_q

DEFAULT_MAX_POINTS = 10
DEFAULT_MAX_MEMBERS = 1 << 16


def _sorted(xs: Iterable) -> list:
    return sorted(xs, key=order_key)


# --------------------------------------------------------------------------
# single-partition evaluators


class _BlockWeights:
    """Block measures scaled to integers over a common denominator, summed over block bitmasks.

    Exact, and far cheaper than Fraction sums in the sweeps.  Mask sums come
    from a full table on small models and a memo otherwise.
    """

    def __init__(self, model: GroundModel) -> None:
        self.den = lcm(*(b.measure.denominator for b in model.blocks)) if model.blocks else 1
        self.weights = [int(b.measure * self.den) for b in model.blocks]
        self.bit = {x: 1 << b for x, b in model._where.items()}
        self.rank = {x: i for i, x in enumerate(model.sorted_points())}
        if len(self.weights) <= 12:
            table = [0]
            for w in self.weights:
                table += [t + w for t in table]
            self.mu = table.__getitem__
        else:
            self._memo: dict[int, int] = {0: 0}
            self.mu = self._memo_mu

    def mask(self, points: Iterable) -> int:
        m = 0
        bit = self.bit
        for x in points:
            m |= bit[x]
        return m

    def _memo_mu(self, mask: int) -> int:
        v = self._memo.get(mask)
        if v is None:
            v = self._memo[mask] = sum(w for b, w in enumerate(self.weights) if mask >> b & 1)
        return v


def mc_value(model: GroundModel, family: HereditaryFamily,
             partition: Sequence[Iterable]) -> WeightedSelection:
    """Best outer measure of the union of parts met by a single member.

    By heredity a best member needs at most one point per part, so the search
    branches over parts: skip the part, or add one of its points while the set
    stays a member.  Branches are cut when even meeting every remaining part
    could not beat the incumbent.
    """
    parts = [p for p in validate_partition(model, partition) if p]
    if family.is_empty():
        return WeightedSelection(Fraction(0), None)
    for p in parts:
        for x in p:
            family.check_element(x)
    bw = _BlockWeights(model)
    val, member = _mc_value(family, parts, bw)
    return WeightedSelection(Fraction(val, bw.den), member)


def _mc_value(family, parts, bw: _BlockWeights) -> tuple[int, frozenset]:
    """Integer-scaled core of :func:`mc_value` (value times ``bw.den``)."""
    hulls = [bw.mask(p) for p in parts]
    pts = [sorted(p, key=bw.rank.__getitem__) for p in parts]
    n = len(parts)
    suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] | hulls[i]
    mu = bw.mu
    best_val = 0
    best_set: tuple = ()
    member = family._member

    def dfs(i: int, chosen: tuple, covered: int) -> None:
        nonlocal best_val, best_set
        val = mu(covered)
        if val > best_val:
            best_val, best_set = val, chosen
        if i == n or mu(covered | suffix[i]) <= best_val:
            return
        for x in pts[i]:
            cand = chosen + (x,)
            if member(frozenset(cand)):
                dfs(i + 1, cand, covered | hulls[i])
        dfs(i + 1, chosen, covered)

    dfs(0, (), 0)
    return best_val, frozenset(best_set)


def cover_value(model: GroundModel, members: Sequence[frozenset],
                partition: Sequence[frozenset], covers: Sequence[frozenset]) -> WeightedSelection:
    """Best measure of the union of covers of the parts met, over an explicit member list."""
    for c in covers:
        model._check_blocks(c)
    bw = _BlockWeights(model)
    part_of = {x: i for i, p in enumerate(partition) for x in p}
    masks = [sum(1 << b for b in set(c)) for c in covers]
    val, member = _cover_value(bw, members, part_of, masks)
    return WeightedSelection(Fraction(val, bw.den), member)


def _cover_value(bw: _BlockWeights, members, part_of, masks) -> tuple[int, frozenset | None]:
    best_val, best_member = 0, None
    for F in members:
        region = 0
        for x in F:
            region |= masks[part_of[x]]
        val = bw.mu(region)
        if best_member is None or val > best_val:
            best_val, best_member = val, F
    return best_val, best_member


def _check_eps(epsilon) -> Fraction:
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise InputError(f"epsilon must lie in (0, 1), got {eps}")
    return eps


def _check_points(model: GroundModel, max_points: int) -> list:
    pts = model.sorted_points()
    if len(pts) > max_points:
        raise ResourceError(
            f"{len(pts)} points exceed the partition sweep cap of {max_points} "
            f"(Bell({len(pts)}) = {bell(len(pts))} partitions)"
        )
    return pts


# --------------------------------------------------------------------------
# minimax sweeps


def _sweep_chunk(model, family, chunk):
    best = None
    empty = family.is_empty()
    for x in model.points:
        family.check_element(x)
    bw = _BlockWeights(model)
    for idx, parts in chunk:
        val, member = (0, None) if empty else _mc_value(family, parts, bw)
        if best is None or val < best[0]:
            best = (val, idx, parts, member)
    return (Fraction(best[0], bw.den),) + best[1:]


def check_mc_filling(model: GroundModel, family: HereditaryFamily, epsilon, *,
                     max_points: int = DEFAULT_MAX_POINTS, workers: int = 1) -> Verdict:
    """Decide MC-filling at ``epsilon`` by sweeping every partition of the points.

    ``value`` is the minimax payoff; the property holds iff it exceeds ``epsilon``.
    The certificate names the first partition (in restricted-growth order)
    attaining the minimum, and a best member against it.
    """
    eps = _check_eps(epsilon)
    pts = _check_points(model, max_points)
    indexed = list(enumerate(set_partitions(pts)))
    if workers > 1 and len(indexed) > 1:
        size = -(-len(indexed) // workers)
        chunks = [indexed[i:i + size] for i in range(0, len(indexed), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_chunk, [model] * len(chunks),
                                    [family] * len(chunks), chunks))
        value, idx, parts, member = min(results, key=lambda r: (r[0], r[1]))
    else:
        value, idx, parts, member = _sweep_chunk(model, family, indexed)
    cert = {
        "partition": partition_to_json(parts),
        "partition_index": idx,
        "best_member": None if member is None else _sorted(member),
        "value": fmt_q(value),
    }
    caps = {"max_points": max_points, "points": len(pts), "partitions": len(indexed)}
    return Verdict("mc_filling", value > eps, eps, value, cert, caps)


def check_mc_filling_covers(model: GroundModel, family: HereditaryFamily, epsilon, *,
                            max_points: int = DEFAULT_MAX_POINTS,
                            max_members: int = DEFAULT_MAX_MEMBERS,
                            audit_trials: int = 0, seed: int = 0) -> Verdict:
    """Cover form of the minimax: payoff is the measure of the union of covers of met parts.

    Covers are evaluated at the hulls, the adversary's best choice since larger
    covers only raise the payoff.  Unlike :func:`check_mc_filling` this path
    enumerates the members once and scans them per partition.  With
    ``audit_trials`` > 0, random cover enlargements are checked to never lower
    the payoff; the audit outcome is recorded in ``caps``.
    """
    eps = _check_eps(epsilon)
    pts = _check_points(model, max_points)
    members = []
    for F in family.members_within(pts):
        members.append(F)
        if len(members) > max_members:
            raise ResourceError(f"family has more than {max_members} members on the model")
    rng = random.Random(seed)
    best = None
    audits = 0
    count = 0
    bw = _BlockWeights(model)
    for idx, parts in enumerate(set_partitions(pts)):
        count += 1
        part_of = {x: i for i, p in enumerate(parts) for x in p}
        val, member = _cover_value(bw, members, part_of, [bw.mask(p) for p in parts])
        if audit_trials:
            covers = [hull(model, p) for p in parts]
            audits += _audit_monotonicity(model, members, parts, covers, Fraction(val, bw.den),
                                          rng, audit_trials)
        if best is None or val < best[0]:
            best = (val, idx, parts, member)
    value, idx, parts, member = best
    value = Fraction(value, bw.den)
    cert = {
        "partition": partition_to_json(parts),
        "partition_index": idx,
        "covers": [sorted(hull(model, p)) for p in parts],
        "best_member": None if member is None else _sorted(member),
        "value": fmt_q(value),
    }
    caps = {"max_points": max_points, "points": len(pts), "partitions": count,
            "members": len(members), "cover_audits": audits, "seed": seed}
    return Verdict("mc_filling_covers", value > eps, eps, value, cert, caps)


def _audit_monotonicity(model, members, parts, covers, base_value, rng, trials) -> int:
    blocks = sorted(model.all_blocks)
    for _ in range(trials):
        i = rng.randrange(len(parts))
        extra = {b for b in blocks if rng.random() < 0.5}
        enlarged = list(covers)
        enlarged[i] = covers[i] | extra
        if cover_value(model, members, parts, enlarged).value < base_value:
            raise InvariantViolation(f"enlarging cover {i} lowered the payoff")
    return trials


def mc_filling_threshold(model: GroundModel, family: HereditaryFamily, *,
                         max_points: int = DEFAULT_MAX_POINTS) -> Fraction:
    """Supremum of the epsilons at which the family is MC-filling (the minimax value).

    The family is MC-filling at every epsilon strictly below the returned value
    and at none at or above it.
    """
    pts = _check_points(model, max_points)
    return min(mc_value(model, family, parts).value for parts in set_partitions(pts))


def replay_mc_certificate(verdict: Verdict, model: GroundModel,
                          family: HereditaryFamily) -> Fraction:
    """Recompute the value of an MC-filling verdict from its certificate.

    Raises :class:`InputError` if the certificate does not reproduce the claim.
    """
    cert = verdict.certificate
    parts = validate_partition(model, cert["partition"])
    claimed = Fraction(cert["value"])
    sel = mc_value(model, family, parts)
    if sel.value != claimed:
        raise InputError(f"certificate partition evaluates to {sel.value}, claimed {claimed}")
    if cert.get("best_member") is not None:
        F = frozenset(cert["best_member"])
        if not family.contains(F):
            raise InputError("certificate member is not in the family")
        met = [p for p in parts if p & F]
        if outer_measure(model, frozenset().union(*met) if met else ()) != claimed:
            raise InputError("certificate member does not attain the claimed value")
    if (claimed > verdict.epsilon) != verdict.holds:
        raise InputError("claimed value is inconsistent with the verdict")
    return claimed


# --------------------------------------------------------------------------
# filling => MC-filling


@dataclass
class PipelineResult:
    member: frozenset
    value: Fraction  # measure of the union of covers of parts met by member
    bound: Fraction  # epsilon * (eta - eta1)
    eta: Fraction
    eta1: Fraction
    eta2: Fraction
    eta3: Fraction
    m0: int
    q: int
    theta: Fraction
    p: dict[int, int]  # part index -> number of theta-pieces
    witness_pool: list
    piece_measure: Fraction  # |member| * theta
    filling_check: str
    refined: GroundModel = field(repr=False, default=None)

    @property
    def selection(self) -> WeightedSelection:
        return WeightedSelection(self.value, self.member)

    def to_json(self) -> dict:
        return {
            "member": _sorted(self.member),
            "value": fmt_q(self.value),
            "bound": fmt_q(self.bound),
            "eta": fmt_q(self.eta),
            "eta1": fmt_q(self.eta1),
            "eta2": fmt_q(self.eta2),
            "eta3": fmt_q(self.eta3),
            "m0": self.m0,
            "q": self.q,
            "theta": fmt_q(self.theta),
            "p": {str(k): v for k, v in self.p.items()},
            "witness_pool": self.witness_pool,
            "piece_measure": fmt_q(self.piece_measure),
            "filling_check": self.filling_check,
        }


def _refine_to_theta(model: GroundModel, blocks: Iterable[int], q: int,
                     ) -> tuple[GroundModel, dict[int, list[int]]]:
    """Split each listed block of measure ``k/q`` into ``k`` blocks of measure ``1/q``."""
    new_ids = {b: [b] for b in range(len(model.blocks))}
    for b in sorted(set(blocks), reverse=True):
        beta = model.blocks[b].measure
        k = beta * q
        if k.denominator != 1:
            raise InputError(f"block {b} measure {beta} is not a multiple of 1/{q}")
        k = int(k)
        if k <= 1:
            continue
        pts = _sorted(model.blocks[b].points)
        model = refine_block(model, b, k, {x: i % k for i, x in enumerate(pts)})
        for c in new_ids:
            if c > b:
                new_ids[c] = [i + k - 1 for i in new_ids[c]]
        new_ids[b] = list(range(b, b + k))
    return model, new_ids


def filling_to_mc_pipeline(
    model: GroundModel,
    A: Iterable,
    family: HereditaryFamily,
    epsilon,
    eta1,
    partition: Sequence[Iterable],
    covers: Sequence[Iterable[int]] | None = None,
    *,
    strict_alpha: bool = False,
    verify_filling_max_h: int | None = None,
) -> PipelineResult:
    """Turn a filling family on ``A`` into a member meeting parts of measure > eps*(eta - eta1).

    ``eta`` is the outer measure of ``A``.  The steps: keep the first ``m0`` parts
    capturing ``eta`` up to ``eta2 = eta1/2``; disjointify their covers into
    ``B_m``; approximate each ``mu(B_m)`` from below by ``p_m/q`` within
    ``eta3 = (eta1 - eta2)/(2 m0)``; cut each ``B_m`` into ``p_m`` pieces of
    measure ``1/q``; tag each piece with its own point of ``A`` in the part; ask
    the family for a large member of that witness pool.

    Block measures are rational, so by default ``p_m/q = mu(B_m)`` exactly.
    ``strict_alpha`` instead takes ``p_m/q`` strictly below ``mu(B_m)``, which
    needs roughly ``1/eta3`` points of ``A`` in each part.
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise InputError(f"epsilon must lie in (0, 1], got {eps}")
    A = frozenset(A)
    for x in A:
        model.block_of(x)
    parts = validate_partition(model, partition)
    if not parts:
        raise InputError("partition has no parts")
    if covers is None:
        covers = [hull(model, p) for p in parts]
    else:
        covers = [frozenset(c) for c in covers]
        if len(covers) != len(parts):
            raise InputError("need exactly one cover per part")
        for i, (c, p) in enumerate(zip(covers, parts)):
            model._check_blocks(c)
            if not hull(model, p) <= c:
                raise InputError(f"cover {i} does not contain part {i}")

    eta = outer_measure(model, A)
    eta1 = Fraction(eta1)
    if not 0 < eta1 < eta:
        raise InputError(f"need 0 < eta1 < outer measure of A = {eta}, got eta1 = {eta1}")
    if verify_filling_max_h is not None:
        from .families import is_filling
        v = is_filling(family, A, eps, verify_filling_max_h)
        if not v.holds:
            raise InputError(f"family is not {eps}-filling on A: H = {v.certificate['violating_h']}")
        filling_check = f"verified for |H| <= {verify_filling_max_h}"
    else:
        filling_check = "assumed"
    eta2 = eta1 / 2

    acc: set = set()
    m0 = len(parts)
    for k, p in enumerate(parts, start=1):
        acc |= A & p
        if eta - outer_measure(model, acc) < eta2:
            m0 = k
            break
    # parts missing A contribute nothing to the outer measure of A
    active = [m for m in range(m0) if A & parts[m]]
    B = dict(zip(active, disjointify(model, [covers[m] for m in active])))
    M = [m for m in active if model.measure(B[m]) > 0]
    eta3 = (eta1 - eta2) / (2 * m0)

    used_blocks = sorted(set().union(*(B[m] for m in M))) if M else []
    positive = [b for b in used_blocks if model.blocks[b].measure > 0]
    base = lcm(*(model.blocks[b].measure.denominator for b in positive)) if positive else 1
    if strict_alpha:
        q = base
        while not (Fraction(1, q) < eta3 and all(model.measure(B[m]) * q >= 2 for m in M)):
            q += base
        p = {m: int(model.measure(B[m]) * q) - 1 for m in M}
    else:
        q = base
        p = {m: int(model.measure(B[m]) * q) for m in M}
    theta = Fraction(1, q)
    for m in M:
        alpha = p[m] * theta
        mu_b = model.measure(B[m])
        if not (alpha <= mu_b and alpha > mu_b - eta3 and alpha > 0):
            raise InvariantViolation(f"approximation {alpha} of {mu_b} out of range")

    refined, new_ids = _refine_to_theta(model, positive, q)
    pieces: dict[int, list[frozenset]] = {}
    for m in M:
        Bm = frozenset(i for b in B[m] for i in new_ids[b])
        got = equipartition(refined, Bm, theta)
        pieces[m] = got[: p[m]]

    pool: list = []
    tag_piece: dict = {}
    for m in M:
        avail = _sorted(A & parts[m])
        if len(avail) < p[m]:
            raise InputError(
                f"part {m} holds {len(avail)} points of A but the pipeline needs {p[m]} "
                f"distinct witnesses there"
            )
        for i in range(p[m]):
            pool.append(avail[i])
            tag_piece[avail[i]] = pieces[m][i]

    F = frozenset(family.extract(pool))
    if not F <= frozenset(pool) or not family.contains(F):
        raise InvariantViolation("family extractor returned a non-member")
    if len(F) < eps * len(pool):
        raise InputError(f"filling extraction failed on H = {pool}: best member has {len(F)} elements")

    piece_measure = refined.measure(frozenset().union(*(tag_piece[t] for t in F)) if F else ())
    if piece_measure != len(F) * theta:
        raise InvariantViolation("tagged pieces do not have the expected total measure")
    met = [m for m, part in enumerate(parts) if part & F]
    value = model.measure(frozenset().union(*(covers[m] for m in met)) if met else ())
    bound = eps * (eta - eta1)
    if not (value >= piece_measure > bound):
        raise InvariantViolation(f"pipeline bound failed: value {value}, pieces {piece_measure}, bound {bound}")
    return PipelineResult(F, value, bound, eta, eta1, eta2, eta3, m0, q, theta, p, pool,
                          piece_measure, filling_check, refined)


# --------------------------------------------------------------------------
# greedy witness engine


@dataclass(frozen=True)
class TransversalSystem:
    """Assignment of every point to a class label; the fibers are the classes."""

    phi: Mapping[Hashable, Hashable]

    def fibers(self) -> dict:
        out: dict = {}
        for x, a in self.phi.items():
            out.setdefault(a, set()).add(x)
        return {a: frozenset(s) for a, s in out.items()}

    def validate(self, model: GroundModel, *, full: bool = True) -> None:
        missing = model.points - set(self.phi)
        if missing:
            raise InputError(f"phi is undefined at {_sorted(missing)}")
        extra = set(self.phi) - model.points
        if extra:
            raise InputError(f"phi mentions unknown points {_sorted(extra)}")
        if full:
            positive = {i for i, b in enumerate(model.blocks) if b.measure > 0}
            for a, Z in self.fibers().items():
                if not positive <= hull(model, Z):
                    raise InputError(f"class {a!r} misses a positive block; it is not of full outer measure")


@dataclass
class GreedyResult:
    member: frozenset
    value: Fraction
    n: int
    classes: list  # the chosen D, in selection order
    k: dict  # class label -> least k with enough mass in the first k parts
    parts_used: list[int]

    def to_json(self) -> dict:
        return {
            "member": _sorted(self.member),
            "value": fmt_q(self.value),
            "n": self.n,
            "classes": list(self.classes),
            "k": {str(a): v for a, v in self.k.items()},
            "parts_used": self.parts_used,
        }


def greedy_select(model: GroundModel, ts: TransversalSystem, class_family: HereditaryFamily,
                  partition: Sequence[Iterable], epsilon) -> GreedyResult:
    """Select a member of the pulled-back family meeting parts of outer measure > epsilon.

    ``k(a)`` is the least ``k`` such that class ``a`` already has outer measure
    above ``epsilon`` inside the first ``k`` parts.  For some ``n`` the classes
    with ``k = n`` must contain a class-family member ``D`` of size ``n``; then
    one point per class of ``D`` is picked, each in a fresh part among the first
    ``n``, until the parts met exceed ``epsilon``.
    """
    eps = _check_eps(epsilon)
    parts = validate_partition(model, partition)
    ts.validate(model)
    fibers = ts.fibers()
    labels = _sorted(fibers)

    k_of: dict = {}
    for a in labels:
        acc: set = set()
        for k, part in enumerate(parts, start=1):
            acc |= fibers[a] & part
            if outer_measure(model, acc) > eps:
                k_of[a] = k
                break
        else:
            raise InvariantViolation(f"class {a!r} never exceeds epsilon; not of full outer measure")
    groups: dict[int, list] = {}
    for a in labels:
        groups.setdefault(k_of[a], []).append(a)

    D = None
    n = None
    for cand in sorted(groups):
        P = groups[cand]
        if len(P) < cand:
            continue
        got = _sorted(class_family.extract(P))
        if len(got) < cand:
            sel = max_member_weight(class_family, P)
            got = _sorted(sel.member or ())
        if len(got) >= cand:
            n, D = cand, got[:cand]
            break
    if D is None:
        sizes = {k: len(v) for k, v in sorted(groups.items())}
        raise InputError(f"no n has a class-family member of size n among classes with k = n "
                         f"(class counts by k: {sizes}); the model is too small")
    if not class_family.contains(D):
        raise InvariantViolation("heredity failed: a subset of a member is not a member")

    used: list[int] = []
    F: list = []
    first_n = frozenset().union(*parts[:n]) if n else frozenset()
    for a in D:
        covered = frozenset().union(*(parts[m] for m in used)) if used else frozenset()
        if outer_measure(model, covered) > eps:
            break
        fresh = [m for m in range(n) if m not in used]
        Z = fibers[a]
        gap = outer_measure(model, Z & first_n) - outer_measure(model, Z & covered)
        avail = outer_measure(model, Z & frozenset().union(*(parts[m] for m in fresh)))
        if not (gap > 0 and avail > 0):
            raise InvariantViolation(f"no fresh part meets class {a!r} in positive outer measure")
        m = next(m for m in fresh if Z & parts[m])
        F.append(_sorted(Z & parts[m])[0])
        used.append(m)
    member = frozenset(F)
    met = frozenset().union(*(p for p in parts if p & member))
    value = outer_measure(model, met)
    if not value > eps:
        raise InvariantViolation(f"greedy construction ended at {value} <= {eps}")
    image = [ts.phi[x] for x in member]
    if len(set(image)) != len(member) or not class_family.contains(image):
        raise InvariantViolation("greedy output violates the class constraints")
    return GreedyResult(member, value, n, D, k_of, used)

from fractions import Fraction as Q
import itertools
import random

import pytest

from conftest import brute_partitions, model, random_model, subsets, uniform
from mcfill import InputError
from mcfill.families import AllSubsets, BoundedSize, PartitionGenerated, build_explicit
from mcfill.integration import (
    IndicatorFunctionModel,
    build_indicator_model,
    c0_model_from_partition,
    decide_mc_integrability,
    gamma_select,
    partition_from_c0_model,
    replay_decide_certificate,
    riemann_norm,
)
from mcfill.mcfilling import check_mc_filling, mc_value
from mcfill.measure import hull, outer_measure


def direct_norm(m, functionals, tagged):
    """max over functionals of sum of mu(E_i) * 1_C(t_i), looped."""
    best = Q(0)
    for C in functionals:
        total = Q(0)
        for E, t in tagged:
            if t in C:
                total += sum((m.blocks[b].measure for b in E), Q(0))
        best = max(best, total)
    return best


def all_tagged(m):
    """Every tagged family: a set partition of some blocks into pieces, each with a tag."""
    blocks = list(range(len(m.blocks)))
    pts = m.sorted_points()
    for used in subsets(blocks):
        for pieces in brute_partitions(sorted(used)):
            for tags in itertools.product(pts, repeat=len(pieces)):
                yield list(zip(pieces, tags))


@pytest.fixture
def halves():
    return model(("1/2", "a"), ("1/2", "b"))


class TestRiemann:
    def test_empty(self, halves):
        fm = IndicatorFunctionModel({"F": {"a"}})
        assert riemann_norm(halves, fm, []).value == 0

    def test_full_member(self, halves):
        fm = build_indicator_model(build_explicit([["a", "b"]]), halves.points)
        sel = riemann_norm(halves, fm, [({0}, "a"), ({1}, "b")])
        assert sel.value == 1 and sel.member == {"a", "b"}

    def test_singletons(self, halves):
        tagged = [({0}, "a"), ({1}, "b")]
        fm = build_indicator_model(BoundedSize(1), halves.points)
        assert riemann_norm(halves, fm, tagged).value == Q(1, 2)
        assert direct_norm(halves, [set(), {"a"}, {"b"}], tagged) == Q(1, 2)

    def test_overlapping_pieces_rejected(self, halves):
        fm = IndicatorFunctionModel({"F": {"a"}})
        with pytest.raises(InputError):
            riemann_norm(halves, fm, [({0}, "a"), ({0, 1}, "b")])

    def test_oracle_exhaustive_small(self):
        rng = random.Random(5)
        for _ in range(6):
            m = random_model(rng, 3, rng.randint(2, 4))
            pts = m.sorted_points()
            Cs = [set(rng.sample(pts, rng.randint(0, 3))) for _ in range(3)]
            fm = IndicatorFunctionModel({f"c{i}": C for i, C in enumerate(Cs)})
            fam = build_explicit(Cs)
            fm_fam = build_indicator_model(fam, pts)
            for tagged in all_tagged(m):
                expect = direct_norm(m, Cs, tagged)
                assert riemann_norm(m, fm, tagged).value == expect
                assert riemann_norm(m, fm_fam, tagged).value == expect


class TestIndicatorModels:
    def test_empty_family(self):
        fm = build_indicator_model(build_explicit([[]]), ["a"])
        assert list(fm.functionals.values()) == [frozenset()]

    def test_generated(self):
        fm = build_indicator_model(build_explicit([["a", "b"]]), ["a", "b"])
        assert set(fm.functionals.values()) == {frozenset(), frozenset("a"), frozenset("b"), frozenset("ab")}

    def test_c0_single_class(self):
        fm = c0_model_from_partition([["a", "b", "c"]])
        fam = fm.generated_family()
        assert all(fam.contains(S) for S in subsets("abc"))

    def test_c0_singletons(self):
        fam = c0_model_from_partition([["a"], ["b"]]).generated_family()
        assert fam.contains("a") and not fam.contains("ab")

    def test_round_trip(self):
        classes = {"x": frozenset("ab"), "y": frozenset("c")}
        fm = c0_model_from_partition(classes)
        assert partition_from_c0_model(fm, "abc") == classes
        fam = PartitionGenerated(classes.values())
        assert {frozenset(F) for F in fam.members_within("abc")} == \
            {frozenset(F) for F in fm.generated_family().members_within("abc")}

    def test_not_partition(self):
        with pytest.raises(InputError):
            c0_model_from_partition([["a"], ["a", "b"]])
        with pytest.raises(InputError):
            partition_from_c0_model(IndicatorFunctionModel({"1": "a"}), "ab")


def brute_decide(m, fm, eps):
    """min over partitions of the best norm of any tagged family whose pieces stay in the
    hull of their tag's part (covering or not)."""
    tagged_all = list(all_tagged(m))
    value = None
    for parts in brute_partitions(m.sorted_points()):
        part_hull = {x: hull(m, p) for p in parts for x in p}
        best = max(direct_norm(m, fm.functionals.values(), tf)
                   for tf in tagged_all if all(E <= part_hull[t] for E, t in tf))
        value = best if value is None or best < value else value
    return value


class TestDecide:
    def test_all_empty_functionals(self, halves):
        fm = IndicatorFunctionModel({"F": set(), "G": set()})
        for eps in (Q(1, 100), Q(1, 2)):
            v = decide_mc_integrability(halves, fm, eps)
            assert not v.holds and v.value == 0

    def test_null_precondition(self, halves):
        fm = IndicatorFunctionModel({"F": {"a"}})
        with pytest.raises(InputError, match="outer measure"):
            decide_mc_integrability(halves, fm, Q(1, 2))

    def test_null_functionals_are_integrable(self):
        m = model(("0", "a b"), ("1", "c"))
        fm = IndicatorFunctionModel({"F": {"a", "b"}})
        v = decide_mc_integrability(m, fm, Q(1, 100))
        assert not v.holds and v.value == 0

    def test_two_point_threshold(self, halves):
        fm = build_indicator_model(build_explicit([["a"]]), halves.points)
        v = decide_mc_integrability(halves, fm, Q(1, 2), require_null=False)
        assert v.value == Q(1, 2) == brute_decide(halves, fm, Q(1, 2))
        assert not v.holds
        assert decide_mc_integrability(halves, fm, Q(1, 3), require_null=False).holds
        assert replay_decide_certificate(v, halves, fm) == Q(1, 2)

    def test_agrees_with_mc_filling(self):
        rng = random.Random(13)
        for _ in range(40):
            m = random_model(rng, rng.randint(1, 4), rng.randint(1, 3))
            pts = m.sorted_points()
            fm = IndicatorFunctionModel({f"c{i}": rng.sample(pts, rng.randint(0, len(pts)))
                                         for i in range(rng.randint(1, 3))})
            fam = fm.generated_family()
            for eps in (Q(1, 4), Q(1, 2), Q(3, 4)):
                d = decide_mc_integrability(m, fm, eps, require_null=False)
                c = check_mc_filling(m, fam, eps)
                assert (d.holds, d.value) == (c.holds, c.value)
                assert d.value == brute_decide(m, fm, eps)

    def test_replay_rejects_bad_tagged(self, halves):
        fm = build_indicator_model(build_explicit([["a"]]), halves.points)
        v = decide_mc_integrability(halves, fm, Q(1, 2), require_null=False)
        v.certificate["tagged"] = [[[0, 1], "a"]]
        with pytest.raises(InputError):
            replay_decide_certificate(v, halves, fm)


class TestGamma:
    def test_one_class_everywhere(self):
        m = uniform(2, [["a", "b"], ["c"]])
        r = gamma_select(m, {"g": "abc"}, [["a"], ["b"], ["c"]], Q(1, 2))
        assert r.value == 1 and len(r.member) == 3

    def test_signature_choice(self):
        m = uniform(4, [["a1", "b1"], ["a2"], ["b2"], ["a3"]])
        classes = {"A": {"a1", "a2", "a3"}, "B": {"b1", "b2"}}
        parts = [["a1", "b1"], ["a2"], ["b2"], ["a3"]]
        r = gamma_select(m, classes, parts, Q(1, 2))
        # signatures: A -> {0,1,3} with mass 3/4, B -> {0,2} with mass 1/2
        assert r.gamma == "A" and r.signature == {0, 1, 3}
        assert r.value == Q(3, 4)
        assert mc_value(m, PartitionGenerated(classes.values()), parts).value >= r.value

    def test_hypothesis_fails(self):
        m = uniform(2, [["a"], ["b"]])
        with pytest.raises(InputError, match="hypothesis fails"):
            gamma_select(m, {"x": "a", "y": "b"}, [["a"], ["b"]], Q(1, 2))

    def test_bound_rechecked_random(self):
        rng = random.Random(41)
        done = 0
        while done < 30:
            m = random_model(rng, 5, 3)
            pts = m.sorted_points()
            rng.shuffle(pts)
            cut = rng.randint(1, 4)
            classes = {"g0": pts[:cut], "g1": pts[cut:]}
            parts = rng.choice(list(brute_partitions(m.sorted_points())))
            try:
                r = gamma_select(m, classes, parts, Q(1, 3))
            except InputError:
                continue
            done += 1
            assert r.member <= frozenset(classes[r.gamma])
            met = [x for p in parts if p & r.member for x in p]
            assert outer_measure(m, met) >= r.value > Q(1, 3)

from fractions import Fraction as Q
import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import subsets
from mcfill import InputError, ResourceError
from mcfill.families import (
    AllSubsets,
    BoundedSize,
    CustomFamily,
    DyadicDFamily,
    ExplicitFamily,
    PartitionGenerated,
    PullbackFamily,
    SchreierFamily,
    build_explicit,
    contains,
    family_from_json,
    is_compact_counterexample,
    is_filling,
    max_member_weight,
    replay_filling,
)


def brute_max(family, H, w=None):
    w = w or (lambda x: 1)
    return max((sum((Q(w(x)) for x in S), Q(0)) for S in subsets(H) if family.contains(S)),
               default=Q(0))


class TestExplicit:
    def test_empty_conventions(self):
        assert ExplicitFamily([]).is_empty()
        assert not contains(build_explicit([]), [])
        f = build_explicit([[]])
        assert contains(f, []) and not contains(f, [1])
        assert list(f.members()) == [frozenset()]

    def test_closure(self):
        f = build_explicit([{1, 2}])
        assert set(f.members()) == {frozenset(), frozenset({1}), frozenset({2}), frozenset({1, 2})}
        assert not contains(f, {1, 3})

    def test_generators_exhaustive(self):
        rng = random.Random(3)
        for _ in range(40):
            gens = [rng.sample(range(8), rng.randint(0, 4)) for _ in range(rng.randint(1, 4))]
            f = build_explicit(gens)
            expect = {S for g in gens for S in subsets(g)}
            assert set(f.members()) == expect
            for S in subsets(range(8)):
                if len(S) <= 4:
                    assert contains(f, S) == (S in expect)

    def test_json_round_trip(self):
        f = build_explicit([["a", "b"], ["b", "c"], ["a"]])
        g = family_from_json(f.to_json())
        assert set(g.members()) == set(f.members())
        assert f.to_json()["members"] == [["a", "b"], ["b", "c"]]


class TestRuleFamilies:
    def test_partition_generated(self):
        f = PartitionGenerated([["a"], ["b", "c"]])
        assert contains(f, [])
        assert contains(f, ["b", "c"])
        assert not contains(f, ["a", "b"])

    def test_partition_requires_disjoint_when_asked(self):
        with pytest.raises(InputError):
            PartitionGenerated([["a", "b"], ["b"]], require_partition=True)

    def test_schreier_ground_kind(self):
        f = SchreierFamily()
        with pytest.raises(InputError):
            f.contains(["a"])
        with pytest.raises(InputError):
            f.contains([0])

    def test_schreier_with_order(self):
        f = SchreierFamily(order="abcd")
        assert f.contains("b")
        assert f.contains("bc")
        assert not f.contains("ab")
        assert f.extract("abcd") == {"c", "d"}

    def test_pullback(self):
        phi = {"x1": 1, "x2": 1, "y": 2, "z": 3}
        f = PullbackFamily(phi, SchreierFamily())
        assert f.contains(["y", "z"])
        assert not f.contains(["x1", "x2"])  # phi not one-to-one
        assert not f.contains(["x1", "y"])  # image {1,2} not Schreier

    def test_json_kinds(self):
        assert isinstance(family_from_json({"kind": "schreier"}), SchreierFamily)
        assert family_from_json({"kind": "dyadicD", "length": 16}).length == 16
        assert family_from_json({"kind": "bounded", "k": 2}).contains([1, 2])
        with pytest.raises(InputError):
            family_from_json({"kind": "bogus"})

    @pytest.mark.parametrize("family, ground", [
        (SchreierFamily(), range(1, 9)),
        (PartitionGenerated([[1, 2, 3], [4, 5], [6]]), range(1, 7)),
        (BoundedSize(2), range(5)),
        (DyadicDFamily(3), [format(i, "03b") for i in range(8)]),
    ])
    def test_heredity_exhaustive(self, family, ground):
        for F in subsets(ground):
            if family.contains(F):
                for G in subsets(F):
                    assert family.contains(G)


class TestCompact:
    def test_examples(self):
        s = SchreierFamily()
        assert is_compact_counterexample(s, [])
        assert is_compact_counterexample(s, [2, 3])
        assert not is_compact_counterexample(s, [1, 2, 3])

    def test_non_hereditary_predicate_checks_all_subsets(self):
        # size exactly 0 or 2: {1,2} passes the predicate but {1} does not
        f = CustomFamily(lambda F: len(F) in (0, 2), hereditary=False)
        assert f.contains([1, 2])
        assert not is_compact_counterexample(f, [1, 2])


class TestMaxMemberWeight:
    def test_empty_h(self):
        sel = max_member_weight(SchreierFamily(), [])
        assert sel.value == 0 and sel.member == frozenset()

    def test_all_subsets(self):
        sel = max_member_weight(AllSubsets(), range(5))
        assert sel.value == 5 and sel.member == frozenset(range(5))

    def test_schreier_six(self):
        sel = max_member_weight(SchreierFamily(), range(1, 7))
        assert sel.value == 3
        assert SchreierFamily().contains(sel.member)
        assert brute_max(SchreierFamily(), range(1, 7)) == 3

    def test_empty_family(self):
        sel = max_member_weight(ExplicitFamily(), [1, 2])
        assert sel.value == 0 and sel.member is None

    def test_negative_weight(self):
        with pytest.raises(InputError):
            max_member_weight(AllSubsets(), [1], {1: -1})

    def test_node_cap(self):
        with pytest.raises(ResourceError):
            max_member_weight(AllSubsets(), range(20), max_nodes=1000)

    def test_oracle_equivalence_random(self):
        rng = random.Random(11)
        for _ in range(150):
            n = rng.randint(0, 10)
            H = list(range(1, n + 1))
            kind = rng.randrange(3)
            if kind == 0:
                fam = SchreierFamily()
            elif kind == 1:
                fam = build_explicit([rng.sample(H, rng.randint(0, n)) for _ in range(3)] if H else [[]])
            else:
                fam = PartitionGenerated([rng.sample(H, rng.randint(0, n)) for _ in range(3)])
            w = {x: Q(rng.randint(0, 5), rng.randint(1, 4)) for x in H}
            for bound in (False, True):
                sel = max_member_weight(fam, H, w, bound=bound)
                assert sel.value == brute_max(fam, H, w.get)
                assert fam.contains(sel.member)
                assert sum((w[x] for x in sel.member), Q(0)) == sel.value

    @settings(max_examples=40, deadline=None)
    @given(st.sets(st.integers(1, 14), max_size=12))
    def test_schreier_oracle(self, H):
        assert max_member_weight(SchreierFamily(), H).value == brute_max(SchreierFamily(), H)


class TestIsFilling:
    def test_all_subsets_one_filling(self):
        for max_h in (1, 3, 5):
            assert is_filling(AllSubsets(), range(5), 1, max_h).holds

    def test_singletons(self):
        f = BoundedSize(1)
        v = is_filling(f, [1, 2, 3, 4], Q(1, 4), 4)
        assert v.holds and v.caps["subsets_checked"] == 15
        v = is_filling(f, [1, 2, 3, 4], Q(1, 3), 4)
        assert not v.holds
        assert v.certificate["violating_h"] == [1, 2, 3, 4]
        assert replay_filling(v, f) == v.value == Q(1, 4)

    def test_singletons_oracle(self):
        # filling ratio of size-<=1 sets on H is 1/|H|; smallest at |H| = 4
        ratios = [Q(1, len(H)) for H in subsets([1, 2, 3, 4]) if H]
        assert min(ratios) == Q(1, 4)

    def test_schreier_half_twelve(self):
        v = is_filling(SchreierFamily(), range(1, 13), Q(1, 2), 12)
        assert v.holds
        assert v.caps == {"max_h": 12, "ground_size": 12, "subsets_checked": 4095}
        assert replay_filling(v, SchreierFamily()) == v.value

    def test_epsilon_range(self):
        with pytest.raises(InputError):
            is_filling(AllSubsets(), [1], 0, 1)
        with pytest.raises(InputError):
            is_filling(AllSubsets(), [1], Q(3, 2), 1)

    def test_antitone(self):
        rng = random.Random(5)
        eps_grid = [Q(k, 12) for k in range(1, 13)]
        for _ in range(20):
            fam = build_explicit([rng.sample(range(6), rng.randint(0, 4)) for _ in range(3)])
            for max_h in range(1, 7):
                verdicts = [is_filling(fam, range(6), e, max_h).holds for e in eps_grid]
                # once false, stays false as epsilon grows
                assert verdicts == sorted(verdicts, reverse=True)
                if max_h > 1 and not is_filling(fam, range(6), Q(1, 2), max_h - 1).holds:
                    assert not is_filling(fam, range(6), Q(1, 2), max_h).holds

    def test_replay_detects_tampering(self):
        v = is_filling(BoundedSize(1), [1, 2, 3], Q(1, 2), 3)
        assert not v.holds
        v.certificate["best_member"] = [1, 2]
        with pytest.raises(InputError):
            replay_filling(v, BoundedSize(1))

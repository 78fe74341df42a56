"""Tree combinatorics: partial order, truncations, descendant counts."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bssp.trees import (
    ROOT,
    GeneralRootedTree,
    Vertex,
    delta_n,
    parse_tree,
    relation,
    tq1_truncation,
    truncate,
)

words = st.lists(st.integers(min_value=1, max_value=3), max_size=6).map(tuple)


def naive_descendant_count(tree: GeneralRootedTree, v: int, n: int) -> int:
    """Independent oracle: walk parent chains for every vertex."""
    count = 0
    for u in range(tree.size):
        steps = 0
        node = u
        while node != tree.root and steps < n:
            node = tree.parents[node]
            steps += 1
        if steps == n and node == v:
            count += 1
    return count


class TestRelation:
    def test_root_precedes_everything(self):
        rel = relation(ROOT, Vertex((1, 2)))
        assert rel.comparable and rel.distance == 2 and rel.ancestor == ROOT

    def test_distinct_letters_incomparable(self):
        rel = relation(Vertex((1,)), Vertex((2,)))
        assert not rel.comparable
        assert rel.distance is None

    def test_prefix_case(self):
        rel = relation(Vertex((1,)), Vertex((1, 2)))
        assert rel.comparable and rel.distance == 1 and rel.ancestor == Vertex((1,))

    @given(words, words)
    def test_symmetric_verdict(self, wa, wb):
        a, b = Vertex(wa), Vertex(wb)
        assert relation(a, b).comparable == relation(b, a).comparable

    @given(words, words, words)
    def test_chain_distances_add(self, wa, wmid, wtail):
        a = Vertex(wa)
        b = Vertex(wa + wmid)
        c = Vertex(wa + wmid + wtail)
        ab, bc, ac = relation(a, b), relation(b, c), relation(a, c)
        assert ab.comparable and bc.comparable and ac.comparable
        assert ac.distance == ab.distance + bc.distance


class TestTruncation:
    @pytest.mark.parametrize("q,depth,count", [(2, 1, 3), (2, 2, 7), (3, 2, 13)])
    def test_counts(self, q, depth, count):
        assert truncate(q, depth).size == count

    def test_closed_form_all_small_cases(self):
        for q in range(2, 6):
            for depth in range(0, 9):
                expect = (q ** (depth + 1) - 1) // (q - 1)
                if expect > 10**6:
                    continue
                assert truncate(q, depth).size == expect

    def test_breadth_first_order_and_index(self):
        t = truncate(2, 2)
        assert t.vertices[0] == ROOT
        depths = [v.depth for v in t.vertices]
        assert depths == sorted(depths)
        for v, i in t.index.items():
            assert t.vertices[i] == v

    def test_cap(self):
        with pytest.raises(ValueError, match="cap"):
            truncate(2, 30)

    def test_bad_arity(self):
        with pytest.raises(ValueError):
            truncate(1, 2)

    def test_parent_indices(self):
        t = truncate(3, 3)
        for i, v in enumerate(t.vertices):
            if i == 0:
                assert t.parents[i] == 0
            else:
                assert t.vertices[t.parents[i]] == Vertex(v.word[:-1])


class TestTq1:
    def test_q2_n1(self):
        assert tq1_truncation(2, 1) == (ROOT, Vertex((1,)), Vertex((2,)))

    def test_q2_n2_ray_order(self):
        got = tq1_truncation(2, 2)
        assert got == (ROOT, Vertex((1,)), Vertex((1, 1)), Vertex((2,)), Vertex((2, 2)))

    def test_q3_n1_count(self):
        assert len(tq1_truncation(3, 1)) == 4

    def test_count_formula(self):
        assert len(tq1_truncation(4, 7)) == 1 + 4 * 7


class TestDeltaN:
    def test_full_truncation_equals_power(self):
        tree = GeneralRootedTree.homogeneous(2, 4)
        for n in range(1, 5):
            assert delta_n(tree, n) == 2**n

    def test_star_tree(self):
        tree = GeneralRootedTree.star_rays(2, 5)
        assert delta_n(tree, 3) == 2  # root reaches both rays; ray vertices reach one
        assert delta_n(tree, 1) == 2

    def test_single_path(self):
        assert delta_n(GeneralRootedTree.single_path(6), 1) == 1

    def test_against_naive_oracle(self, rng):
        parents = [0]
        for i in range(1, 40):
            parents.append(int(rng.integers(0, i)))
        tree = GeneralRootedTree(parents)
        for n in range(1, 6):
            naive = max(naive_descendant_count(tree, v, n) for v in range(tree.size))
            assert delta_n(tree, n) == naive

    def test_accepts_truncation(self):
        assert delta_n(truncate(3, 3), 2) == 9


class TestParseTree:
    def test_homogeneous(self):
        tree = parse_tree({"kind": "homogeneous", "q": 2, "depth": 4})
        assert tree.size == 31

    def test_parent_array(self):
        tree = parse_tree({"kind": "parent_array", "parents": [0, 0, 1, 1]})
        assert tree.size == 4 and tree.children[1] == [2, 3]

    def test_tq1(self):
        tree = parse_tree({"kind": "tq1", "q": 3, "n": 10})
        assert tree.size == 31
        assert delta_n(tree, 2) == 3

    def test_rejects_unknown(self):
        with pytest.raises(ValueError, match="kind"):
            parse_tree({"kind": "mystery"})

    def test_rejects_forest(self):
        with pytest.raises(ValueError, match="root"):
            GeneralRootedTree([0, 1, 0])


class TestVertex:
    def test_labels(self):
        assert ROOT.label() == "e"
        assert Vertex((1, 2, 1)).label() == "121"

    def test_rejects_bad_digits(self):
        with pytest.raises(ValueError):
            Vertex((0,))

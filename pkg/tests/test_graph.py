import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rggm.errors import ValidationError
from rggm.graph import (EdgeConfig, Topology, catalog, iter_configs, join,
                        leq, make_complete, make_cycle, make_cycle_free_grid,
                        make_path, make_star, meet, nested_sequence,
                        random_topology)


class TestTopology:
    def test_basic(self):
        top = Topology(3, ((0, 1), (1, 2)))
        assert top.n == 2
        assert top.edge_index(1, 0) == 0
        assert top.edge_index(1, 2) == 1
        assert top.has_edge(2, 1)
        assert not top.has_edge(0, 2)

    def test_edge_arrays(self):
        ei, ej = make_star(4).edge_arrays
        np.testing.assert_array_equal(ei, [0, 0, 0])
        np.testing.assert_array_equal(ej, [1, 2, 3])

    def test_rejects_unsorted(self):
        with pytest.raises(ValidationError):
            Topology(3, ((1, 2), (0, 1)))

    def test_rejects_duplicate(self):
        with pytest.raises(ValidationError):
            Topology(3, ((0, 1), (0, 1)))

    def test_rejects_loop_and_bad_range(self):
        with pytest.raises(ValidationError):
            Topology(3, ((1, 1),))
        with pytest.raises(ValidationError):
            Topology(3, ((0, 3),))
        with pytest.raises(ValidationError):
            Topology(3, ((1, 0),))

    def test_node_cap(self):
        with pytest.raises(ValidationError):
            Topology(5000, ())
        assert Topology(5000, (), max_nodes=8192).m == 5000

    def test_missing_edge_lookup(self):
        with pytest.raises(ValidationError):
            make_path(3).edge_index(0, 2)


class TestEdgeConfig:
    def test_code_roundtrip(self):
        top = make_star(5)
        for code in range(1 << top.n):
            assert EdgeConfig.from_code(top, code).code() == code

    def test_hex_roundtrip(self):
        top = make_path(12)  # 11 edges -> 2 bytes
        rng = np.random.default_rng(0)
        for _ in range(20):
            cfg = EdgeConfig(top, (rng.random(top.n) < 0.5).astype(np.uint8))
            assert EdgeConfig.from_hex(top, cfg.to_hex()) == cfg

    def test_validation(self):
        top = make_path(3)
        with pytest.raises(ValidationError):
            EdgeConfig(top, np.zeros(3, dtype=np.uint8))
        with pytest.raises(ValidationError):
            EdgeConfig(top, np.array([0, 2], dtype=np.uint8))
        with pytest.raises(ValidationError):
            EdgeConfig.from_code(top, 1 << top.n)
        with pytest.raises(ValidationError):
            EdgeConfig.from_hex(top, "zz")
        with pytest.raises(ValidationError):
            EdgeConfig.from_hex(top, "ff")  # bits beyond n=2 set
        with pytest.raises(ValidationError):
            EdgeConfig.from_hex(top, "0101")  # wrong byte count

    def test_count_and_copy(self):
        top = make_path(4)
        cfg = EdgeConfig.from_bits(top, [1, 0, 1])
        assert cfg.count() == 2
        clone = cfg.copy()
        clone.bits[0] = 0
        assert cfg.bits[0] == 1


class TestLattice:
    def test_examples(self):
        top = make_star(4)  # 3 edges
        a = EdgeConfig.from_bits(top, [1, 0, 1])
        b = EdgeConfig.from_bits(top, [0, 1, 1])
        assert join(a, b) == EdgeConfig.from_bits(top, [1, 1, 1])
        assert meet(a, b) == EdgeConfig.from_bits(top, [0, 0, 1])
        assert join(a, a) == a and meet(a, a) == a
        assert join(EdgeConfig.empty(top), b) == b
        assert meet(EdgeConfig.full(top), b) == b
        assert leq(EdgeConfig.empty(top), a)
        assert not leq(a, b) and not leq(b, a)  # incomparable

    def test_topology_mismatch(self):
        a = EdgeConfig.empty(make_path(3))
        b = EdgeConfig.empty(make_star(3))
        with pytest.raises(ValidationError):
            join(a, b)
        with pytest.raises(ValidationError):
            meet(a, b)
        with pytest.raises(ValidationError):
            leq(a, b)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.booleans(), min_size=5, max_size=5),
           st.lists(st.booleans(), min_size=5, max_size=5),
           st.lists(st.booleans(), min_size=5, max_size=5))
    def test_lattice_laws(self, xs, ys, zs):
        top = make_star(6)
        a, b, c = (EdgeConfig.from_bits(top, v) for v in (xs, ys, zs))
        assert join(a, b) == join(b, a)
        assert meet(a, b) == meet(b, a)
        assert join(a, join(b, c)) == join(join(a, b), c)
        assert meet(a, meet(b, c)) == meet(meet(a, b), c)
        assert join(a, meet(a, b)) == a  # absorption
        assert meet(a, join(a, b)) == a
        assert leq(meet(a, b), a)
        assert leq(a, join(a, b))


class TestFamilies:
    def test_path_star_cycle_grid(self):
        assert make_path(4).edges == ((0, 1), (1, 2), (2, 3))
        assert make_star(4).edges == ((0, 1), (0, 2), (0, 3))
        assert make_cycle(4).edges == ((0, 1), (0, 3), (1, 2), (2, 3))
        assert make_complete(3).edges == ((0, 1), (0, 2), (1, 2))
        assert make_cycle_free_grid(6).edges == (
            (0, 1), (0, 2), (2, 3), (2, 4), (4, 5))

    def test_nested_path(self):
        p2, p3 = nested_sequence("path", [2, 3])
        assert p2.edges == ((0, 1),)
        assert p3.edges[: p2.n] == p2.edges

    def test_nested_star_prefixes(self):
        tops = nested_sequence("star", [2, 3, 4])
        for small, big in zip(tops, tops[1:]):
            assert big.edges[: small.n] == small.edges

    def test_nested_grid(self):
        tops = nested_sequence("cycle_free_grid", [2, 4, 6, 9])
        for small, big in zip(tops, tops[1:]):
            assert big.edges[: small.n] == small.edges

    def test_bit_stability_under_embedding(self):
        # bit k refers to the same node pair at every size
        tops = nested_sequence("path", [3, 5, 8])
        for k in range(tops[0].n):
            pairs = {t.edges[k] for t in tops}
            assert len(pairs) == 1

    def test_nested_rejects_nonmonotone(self):
        with pytest.raises(ValidationError):
            nested_sequence("path", [3, 2])
        with pytest.raises(ValidationError):
            nested_sequence("path", [3, 3])
        with pytest.raises(ValidationError):
            nested_sequence("triangle", [2, 3])


def test_random_topology(rng):
    top = random_topology(10, 17, rng)
    assert top.m == 10 and top.n == 17
    assert len(set(top.edges)) == 17
    full = random_topology(6, 15, rng)
    assert full.edges == make_complete(6).edges
    with pytest.raises(ValidationError):
        random_topology(4, 7, rng)


def test_catalog():
    tops = catalog(4)
    assert all(t.n <= 4 for t in tops)
    keys = {(t.m, t.edges) for t in tops}
    assert len(keys) == len(tops)  # K3 == C3 and S2 == P2 deduplicated
    assert make_path(3).edges in {t.edges for t in tops if t.m == 3}
    bigger = catalog(10)
    assert any(t.edges == make_complete(4).edges for t in bigger)


def test_iter_configs():
    top = make_path(4)
    seen = list(iter_configs(top))
    assert len(seen) == 8
    assert seen[5].code() == 5

import math

import numpy as np
import pytest

from rggm import linalg
from rggm.errors import ValidationError
from rggm.graph import EdgeConfig, make_path, make_star, random_topology
from rggm.model_params import ModelParams
from rggm.oracle import (MeasureTable, conditional_from_table, edge_marginals,
                         enumerate_measure, event_probability,
                         mixture_covariance)

# Hand-derived precision determinants on the 3-node path at alpha=beta=1,
# by config code (bit 0 = edge (0,1), bit 1 = edge (1,2)):
#   code 0: |I| = 1
#   code 1: |[[2,-1],[-1,2]]| * 1 = 3
#   code 2: 1 * |[[2,-1],[-1,2]]| = 3
#   code 3: |[[2,-1,0],[-1,3,-1],[0,-1,2]]| = 8
P3_DETS = np.array([1.0, 3.0, 3.0, 8.0])
P3_WEIGHTS = P3_DETS ** -0.5
P3_KAPPA = float(P3_WEIGHTS.sum())
P3_PROBS = P3_WEIGHTS / P3_KAPPA


class TestEnumerate:
    def test_single_edge_graph(self):
        top = make_path(2)
        table = enumerate_measure(top, ModelParams(1.0, 1.0))
        w = np.array([1.0, 3.0 ** -0.5])
        np.testing.assert_allclose(table.probs, w / w.sum(), atol=1e-12)
        assert table.probs[1] == pytest.approx(0.3660254037844386, abs=1e-9)

    def test_path3(self, path3, params11):
        table = enumerate_measure(path3, params11)
        np.testing.assert_allclose(table.probs, P3_PROBS, atol=1e-12)
        assert table.log_kappa == pytest.approx(math.log(P3_KAPPA), abs=1e-12)
        np.testing.assert_allclose(
            table.half_logdets, -0.5 * np.log(P3_DETS), atol=1e-12)
        assert table.probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_beta_zero_uniform(self, path3):
        table = enumerate_measure(path3, ModelParams(1.0, 0.0))
        np.testing.assert_allclose(table.probs, np.full(4, 0.25), atol=1e-14)

    def test_gray_matches_direct(self, rng):
        top = random_topology(6, 9, rng)
        params = ModelParams(0.8, 1.7)
        direct = enumerate_measure(top, params, method="direct")
        gray = enumerate_measure(top, params, method="gray")
        assert np.max(np.abs(direct.half_logdets - gray.half_logdets)) <= 1e-9
        np.testing.assert_allclose(direct.probs, gray.probs, atol=1e-9)

    def test_caps(self, path3, params11):
        with pytest.raises(ValidationError):
            enumerate_measure(random_topology(30, 25, np.random.default_rng(0)),
                              params11)
        with pytest.raises(ValidationError):
            enumerate_measure(path3, params11, memory_limit=16)
        with pytest.raises(ValidationError):
            enumerate_measure(path3, params11, method="magic")

    def test_rows_view(self, path3, params11):
        table = enumerate_measure(path3, params11)
        rows = list(table.rows())
        assert len(rows) == 4
        assert rows[3].config.code() == 3
        assert rows[3].prob == pytest.approx(P3_PROBS[3], abs=1e-12)


class TestEventProbability:
    def test_certain_event(self, path3, params11):
        table = enumerate_measure(path3, params11)
        assert event_probability(table, lambda c: True) == pytest.approx(1.0)

    def test_first_edge_on(self, path3, params11):
        table = enumerate_measure(path3, params11)
        p = event_probability(table, lambda c: c.bits[0] == 1)
        assert p == pytest.approx(P3_PROBS[1] + P3_PROBS[3], abs=1e-12)
        assert p == pytest.approx(0.3711361, abs=1e-6)

    def test_single_row(self, path3, params11):
        table = enumerate_measure(path3, params11)
        p = event_probability(table, lambda c: c.count() == 2)
        assert p == pytest.approx(P3_PROBS[3], abs=1e-12)
        assert p == pytest.approx(0.1409560, abs=1e-6)

    def test_marginals_match_events(self, rng):
        top = random_topology(5, 6, rng)
        table = enumerate_measure(top, ModelParams(1.0, 2.0))
        marg = edge_marginals(table)
        for k in range(top.n):
            assert marg[k] == pytest.approx(
                event_probability(table, lambda c, k=k: c.bits[k] == 1),
                abs=1e-12)


class TestMixtureCovariance:
    def test_beta_zero(self, path3):
        table = enumerate_measure(path3, ModelParams(2.0, 0.0))
        np.testing.assert_allclose(mixture_covariance(table), np.eye(3) / 2.0,
                                   atol=1e-14)

    def test_path3_middle_node(self, path3, params11):
        # independent route: LU inverses of the four precision matrices
        table = enumerate_measure(path3, params11)
        expected = np.zeros((3, 3))
        for code in range(4):
            config = EdgeConfig.from_code(path3, code)
            q = linalg.build_precision(path3, config, params11)
            expected += P3_PROBS[code] * np.linalg.inv(q)
        got = mixture_covariance(table)
        np.testing.assert_allclose(got, expected, atol=1e-12)
        assert got[1, 1] == pytest.approx(0.776069, abs=1e-6)

    def test_two_node(self, params11):
        top = make_path(2)
        table = enumerate_measure(top, params11)
        got = mixture_covariance(table)
        w = np.array([1.0, 3.0 ** -0.5])
        p = w / w.sum()
        assert got[0, 0] == pytest.approx(p[0] * 1.0 + p[1] * (2 / 3), abs=1e-12)
        assert got[0, 0] == pytest.approx(0.877992, abs=1e-6)


class TestConditionalFromTable:
    def test_two_node(self, params11):
        top = make_path(2)
        table = enumerate_measure(top, params11)
        q = conditional_from_table(table, 0, 1, EdgeConfig.empty(top))
        assert q == pytest.approx(0.3660254, abs=1e-7)

    def test_beta_zero(self, path3):
        table = enumerate_measure(path3, ModelParams(1.0, 0.0))
        q = conditional_from_table(table, 1, 2, EdgeConfig.empty(path3))
        assert q == pytest.approx(0.5, abs=1e-14)

    def test_path3(self, path3, params11):
        table = enumerate_measure(path3, params11)
        config = EdgeConfig.from_bits(path3, [1, 0])
        q = conditional_from_table(table, 1, 2, config)
        # row ratio P(1,1)/(P(1,0) + P(1,1)) from the determinant table
        assert q == pytest.approx(P3_PROBS[3] / (P3_PROBS[1] + P3_PROBS[3]),
                                  abs=1e-12)
        assert q == pytest.approx(1.0 / (1.0 + math.sqrt(8 / 3)), abs=1e-12)
        # the conditioned edge's own bit is ignored
        q2 = conditional_from_table(table, 1, 2, EdgeConfig.from_bits(path3, [1, 1]))
        assert q2 == q

    def test_wrong_table(self, path3, params11):
        table = enumerate_measure(path3, params11)
        with pytest.raises(ValidationError):
            conditional_from_table(table, 0, 1, EdgeConfig.empty(make_star(3)))


class TestTableIdentities:
    def test_determinant_update_crosscheck(self, params11):
        # half_logdet(a + e) = half_logdet(a) - log(1 + beta*delta(a))/2
        top = make_path(4)
        table = enumerate_measure(top, params11)
        for code in range(table.n_configs):
            config = table.config(code)
            state = linalg.covariance_state(
                linalg.build_precision(top, config, params11))
            for k in np.flatnonzero(config.bits == 0):
                i, j = top.edges[int(k)]
                d = linalg.delta(state, i, j)
                lhs = table.half_logdets[code | (1 << int(k))]
                rhs = table.half_logdets[code] - 0.5 * math.log1p(d)
                assert abs(lhs - rhs) <= 1e-10

    def test_fkg_lattice_condition_all_pairs(self, path3, params11):
        table = enumerate_measure(path3, params11)
        p = table.probs
        for a in range(4):
            for b in range(4):
                assert p[a | b] * p[a & b] >= p[a] * p[b] - 1e-12

    def test_fkg_witness_determinants(self, path3, params11):
        # |sigma(11)|*|sigma(00)| = 1/8 vs |sigma(10)|*|sigma(01)| = 1/9
        table = enumerate_measure(path3, params11)
        prod_join_meet = math.exp(2 * (table.half_logdets[3]
                                       + table.half_logdets[0]))
        prod_pair = math.exp(2 * (table.half_logdets[1]
                                  + table.half_logdets[2]))
        assert prod_join_meet == pytest.approx(1 / 8, abs=1e-12)
        assert prod_pair == pytest.approx(1 / 9, abs=1e-12)
        assert prod_join_meet >= prod_pair

    @pytest.mark.parametrize("kind,sizes", [("path", [2, 3]), ("star", [3, 5])])
    def test_embedding_relation(self, kind, sizes, params11):
        # the smaller graph's law equals the larger one conditioned on all
        # new edges being absent
        from rggm.graph import nested_sequence
        small, big = nested_sequence(kind, sizes)
        t_small = enumerate_measure(small, params11)
        t_big = enumerate_measure(big, params11)
        n0 = small.n
        codes = np.arange(t_big.n_configs)
        suffix_zero = (codes >> n0) == 0
        cond = t_big.probs[suffix_zero] / t_big.probs[suffix_zero].sum()
        np.testing.assert_allclose(cond, t_small.probs, atol=1e-12)

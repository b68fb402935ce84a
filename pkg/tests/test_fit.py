import math

import numpy as np
import pytest

from rggm import fit, linalg, sampler
from rggm.errors import ValidationError
from rggm.fit import (FitResult, Snapshot, fit_params, gaussian_loglik,
                      logistic_loglik, pseudo_loglik)
from rggm.graph import EdgeConfig, Topology, make_path, random_topology
from rggm.model_params import ModelParams


def _random_snapshots(top, rng, n=20):
    out = []
    for _ in range(n):
        config = EdgeConfig(top, (rng.random(top.n) < 0.5).astype(np.uint8))
        out.append(Snapshot(config, rng.standard_normal(top.m)))
    return out


def _direct_pseudo_loglik(snapshots, alpha, beta):
    """Independent dense route: per-edge logistic terms plus slogdet/quad."""
    total = 0.0
    for s in snapshots:
        top = s.config.topology
        q = linalg.build_precision(top, s.config, ModelParams(alpha, beta))
        sign, logdet = np.linalg.slogdet(q)
        assert sign > 0
        term = 0.5 * logdet - 0.5 * float(s.x @ q @ s.x) \
            - 0.5 * top.m * math.log(2 * math.pi)
        for k, (i, j) in enumerate(top.edges):
            t = 0.5 * beta * (s.x[i] - s.x[j]) ** 2
            log_p1 = -np.logaddexp(0.0, t)
            log_p0 = t - np.logaddexp(0.0, t)
            term += log_p1 if s.config.bits[k] else log_p0
        total += s.weight * term
    return total


class TestSnapshot:
    def test_validation(self, path3):
        with pytest.raises(ValidationError):
            Snapshot(EdgeConfig.empty(path3), np.zeros(2))
        with pytest.raises(ValidationError):
            Snapshot(EdgeConfig.empty(path3), [0.0, float("nan"), 1.0])
        with pytest.raises(ValidationError):
            Snapshot(EdgeConfig.empty(path3), np.zeros(3), weight=0.0)

    def test_mixed_topologies_rejected(self, path3, rng):
        snaps = [Snapshot(EdgeConfig.empty(path3), np.zeros(3)),
                 Snapshot(EdgeConfig.empty(make_path(4)), np.zeros(4))]
        with pytest.raises(ValidationError):
            pseudo_loglik(snaps, 1.0, 1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            pseudo_loglik([], 1.0, 1.0)


class TestPseudoLoglik:
    def test_matches_direct_dense_route(self, rng):
        top = random_topology(7, 12, rng)
        snaps = _random_snapshots(top, rng, n=15)
        for alpha, beta in ((1.0, 1.0), (0.5, 3.0), (2.0, 0.0)):
            fast = pseudo_loglik(snaps, alpha, beta)
            direct = _direct_pseudo_loglik(snaps, alpha, beta)
            assert abs(fast - direct) <= 1e-10 * max(1.0, abs(direct))

    def test_decomposition(self, rng):
        top = random_topology(6, 8, rng)
        snaps = _random_snapshots(top, rng, n=10)
        total = pseudo_loglik(snaps, 1.3, 0.8)
        parts = logistic_loglik(snaps, 0.8) + gaussian_loglik(snaps, 1.3, 0.8)
        assert total == pytest.approx(parts, rel=1e-12)

    def test_beta_zero_empty_config_closed_form(self, rng):
        # n*log(1/2) per snapshot for the edges, iid Gaussian for x
        top = make_path(4)
        alpha = 2.0
        snaps = [Snapshot(EdgeConfig.empty(top), rng.standard_normal(4))
                 for _ in range(6)]
        got = pseudo_loglik(snaps, alpha, 0.0)
        expected = 0.0
        for s in snaps:
            expected += top.n * math.log(0.5)
            expected += (0.5 * top.m * math.log(alpha)
                         - 0.5 * alpha * float(s.x @ s.x)
                         - 0.5 * top.m * math.log(2 * math.pi))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_weight_linearity(self, rng):
        top = make_path(3)
        snaps = _random_snapshots(top, rng, n=5)
        base = pseudo_loglik(snaps, 1.0, 1.0)
        scaled = [Snapshot(s.config, s.x, weight=2.5) for s in snaps]
        assert pseudo_loglik(scaled, 1.0, 1.0) == pytest.approx(2.5 * base,
                                                                rel=1e-12)

    def test_relabeling_invariance(self, rng):
        top = random_topology(5, 7, rng)
        snaps = _random_snapshots(top, rng, n=8)
        perm = rng.permutation(5)
        edges2 = sorted(tuple(sorted((int(perm[i]), int(perm[j]))))
                        for i, j in top.edges)
        top2 = Topology(5, tuple(edges2))
        snaps2 = []
        for s in snaps:
            bits2 = np.zeros(top2.n, dtype=np.uint8)
            for k, (i, j) in enumerate(top.edges):
                bits2[top2.edge_index(int(perm[i]), int(perm[j]))] = s.config.bits[k]
            x2 = np.empty(5)
            x2[perm] = s.x
            snaps2.append(Snapshot(EdgeConfig(top2, bits2), x2))
        assert pseudo_loglik(snaps, 1.0, 2.0) == pytest.approx(
            pseudo_loglik(snaps2, 1.0, 2.0), rel=1e-12)

    def test_domain_validation(self, rng):
        snaps = _random_snapshots(make_path(3), rng, n=2)
        with pytest.raises(ValidationError):
            pseudo_loglik(snaps, 0.0, 1.0)
        with pytest.raises(ValidationError):
            pseudo_loglik(snaps, 1.0, -1.0)


class TestFitParams:
    def test_alpha_recovery_on_empty_configs(self, rng):
        # with no edges the Gaussian part is iid: alpha_hat = 1/mean(x^2)
        top = make_path(20)
        xs = rng.standard_normal((300, 20)) / math.sqrt(2.0)  # alpha = 2
        snaps = [Snapshot(EdgeConfig.empty(top), x) for x in xs]
        res = fit_params(snaps)
        closed_form = 1.0 / float(np.mean(xs**2))
        assert res.alpha_hat == pytest.approx(closed_form, rel=1e-4)
        assert res.alpha_hat == pytest.approx(2.0, rel=0.1)

    def test_beta_zero_data(self, rng):
        top = random_topology(12, 24, rng)
        params = ModelParams(1.0, 0.0)
        settings = sampler.RunSettings(sweeps=50 + 150 * 3, burnin=50, thin=3,
                                       seed=21)
        summary = sampler.run(top, params, settings, kind="coupled",
                              include_x=True, collect=True)
        snaps = [Snapshot(EdgeConfig.from_hex(top, r["config_bits_hex"]),
                          np.asarray(r["x"])) for r in summary.records]
        res = fit_params(snaps)
        assert res.beta_hat <= 0.05

    def test_synthetic_recovery_small(self, rng):
        top = random_topology(10, 20, rng)
        truth = ModelParams(1.0, 1.5)
        settings = sampler.RunSettings(sweeps=200 + 150 * 10, burnin=200,
                                       thin=10, seed=23)
        summary = sampler.run(top, truth, settings, kind="coupled",
                              include_x=True, collect=True)
        snaps = [Snapshot(EdgeConfig.from_hex(top, r["config_bits_hex"]),
                          np.asarray(r["x"])) for r in summary.records]
        res = fit_params(snaps)
        assert res.converged
        assert abs(res.alpha_hat - truth.alpha) <= 3 * res.alpha_se
        assert abs(res.beta_hat - truth.beta) <= 3 * res.beta_se

    def test_never_raises_on_budget_exhaustion(self, rng):
        snaps = _random_snapshots(make_path(4), rng, n=10)
        res = fit_params(snaps, max_cycles=1)
        assert isinstance(res, FitResult)
        assert res.iterations == 1

    def test_bounds_validation(self, rng):
        snaps = _random_snapshots(make_path(3), rng, n=3)
        with pytest.raises(ValidationError):
            fit_params(snaps, bounds=((1.0, 0.5), (0.0, 1.0)))

    def test_result_serializable(self, rng):
        import json
        snaps = _random_snapshots(make_path(3), rng, n=5)
        res = fit_params(snaps, max_cycles=5)
        json.dumps(res.to_dict())

"""MCMC for the joint model and for its edge marginal.

Two chains share one stationary law for the edges:

* the coupled chain alternates "resample every edge given the attributes"
  (independent logistic draws) with "resample the attributes given the
  edges" (one Gaussian draw through a Cholesky solve), rebuilding the
  covariance state per step;
* the edge-only chain is a heat-bath scan over edges using the one-edge
  conditional ``1/(1 + sqrt(1 + beta*delta))``, maintaining the covariance
  and log-determinant incrementally with O(m^2) rank-1 updates per edge
  and a periodic full Cholesky refresh to bound drift.

Runs are reproducible: a 64-bit master seed feeds a splittable generator
and all draws happen in a fixed order.
"""

from __future__ import annotations

import dataclasses
import json
import math
import concurrent.futures
from dataclasses import dataclass, field
from typing import IO, Any

import numpy as np
import scipy.linalg

from . import _kernels, linalg, model
from ._util import worker_count
from .errors import NumericalError, ValidationError
from .graph import EdgeConfig, Topology
from .linalg import CovarianceState
from .model_params import ModelParams

SCAN_KINDS = ("systematic", "random")
CHAIN_KINDS = ("coupled", "edge_only")


@dataclass
class RunSettings:
    """Sweep budget and reproducibility knobs for one chain run.

    ``burnin`` defaults to 10% of ``sweeps``; retained samples are taken
    every ``thin`` sweeps after burn-in.
    """

    sweeps: int
    burnin: int | None = None
    thin: int = 1
    seed: int = 0
    scan: str = "systematic"
    refresh_period: int = linalg.DEFAULT_REFRESH_PERIOD

    def __post_init__(self) -> None:
        if self.sweeps < 1:
            raise ValidationError("sweeps must be positive")
        if self.burnin is None:
            self.burnin = self.sweeps // 10
        if not 0 <= self.burnin < self.sweeps:
            raise ValidationError(
                f"burnin must lie in [0, sweeps), got {self.burnin}"
            )
        if self.thin < 1:
            raise ValidationError("thin must be >= 1")
        if self.scan not in SCAN_KINDS:
            raise ValidationError(f"scan must be one of {SCAN_KINDS}")
        if self.refresh_period < 1:
            raise ValidationError("refresh_period must be >= 1")

    @property
    def retained(self) -> int:
        return (self.sweeps - self.burnin + self.thin - 1) // self.thin

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class ChainState:
    """Mutable state of a single chain: configuration, attributes (coupled
    chain only), maintained covariance, generator, and step counter."""

    config: EdgeConfig
    x: np.ndarray | None
    cov: CovarianceState
    rng: np.random.Generator
    t: int = 0


@dataclass
class SampleSummary:
    """Aggregates of one run: per-edge means with batch-means standard
    errors and effective sample sizes, log-determinant mean, attribute
    variance estimates (coupled chain), and maintenance bookkeeping."""

    kind: str
    settings: RunSettings
    retained: int
    edge_marginals: np.ndarray
    edge_marginal_se: np.ndarray
    ess_per_edge: np.ndarray
    mean_logdet: float
    x_variance_estimates: np.ndarray | None
    n_flips: int
    n_refreshes: int
    backend: str
    records: list[dict] | None = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "settings": self.settings.to_dict(),
            "retained": self.retained,
            "edge_marginals": self.edge_marginals.tolist(),
            "edge_marginal_se": self.edge_marginal_se.tolist(),
            "ess_per_edge": self.ess_per_edge.tolist(),
            "mean_logdet": self.mean_logdet,
            "x_variance_estimates": (
                None if self.x_variance_estimates is None
                else self.x_variance_estimates.tolist()),
            "n_flips": self.n_flips,
            "n_refreshes": self.n_refreshes,
            "backend": self.backend,
        }


def init_chain(topology: Topology, params: ModelParams, seed,
               kind: str = "coupled") -> ChainState:
    """Fresh chain: no edges, attributes i.i.d. N(0, 1/alpha) (coupled
    chain only), covariance state exactly ``I/alpha``."""
    if kind not in CHAIN_KINDS:
        raise ValidationError(f"kind must be one of {CHAIN_KINDS}")
    rng = np.random.default_rng(seed)
    m = topology.m
    cov = CovarianceState(np.ascontiguousarray(np.eye(m) / params.alpha),
                          -m * math.log(params.alpha))
    x = None
    if kind == "coupled":
        x = rng.standard_normal(m) / math.sqrt(params.alpha)
    return ChainState(EdgeConfig.empty(topology), x, cov, rng)


def coupled_step(chain: ChainState, topology: Topology,
                 params: ModelParams) -> ChainState:
    """One alternating update: all edges from their logistic conditionals
    given x, then x from the Gaussian law of the new configuration.  The
    covariance state is rebuilt from a fresh Cholesky (all edges may have
    changed, so rank-1 chaining would not pay)."""
    if chain.x is None:
        raise ValidationError("coupled_step needs a chain with attributes")
    rng = chain.rng
    probs = model.edge_probs_given_x(topology, chain.x, params.beta)
    bits = (rng.random(topology.n) < probs).astype(np.uint8)
    chain.config = EdgeConfig(topology, bits)
    q = linalg.build_precision(topology, chain.config, params)
    try:
        chol = np.linalg.cholesky(q)
    except np.linalg.LinAlgError as exc:  # unreachable for alpha > 0
        raise NumericalError(str(exc)) from None
    z = rng.standard_normal(topology.m)
    chain.x = scipy.linalg.solve_triangular(chol, z, lower=True, trans=1,
                                            check_finite=False)
    chain.cov = linalg.covariance_state_from_cholesky(chol)
    chain.t += 1
    return chain


def edge_sweep(chain: ChainState, topology: Topology, params: ModelParams,
               scan: str = "systematic") -> ChainState:
    """One heat-bath pass over every ambient edge, maintaining sigma and
    the log-determinant incrementally.

    If the removal guard trips mid-sweep (possible only under extreme
    drift), the state is refreshed from scratch and the sweep is redone
    with fresh uniforms; a second failure raises NumericalError.
    """
    if scan not in SCAN_KINDS:
        raise ValidationError(f"scan must be one of {SCAN_KINDS}")
    n = topology.n
    rng = chain.rng
    ei, ej = topology.edge_arrays
    logdet_io = np.empty(1)
    for attempt in (0, 1):
        if scan == "random":
            order = rng.permutation(n).astype(np.int64)
        else:
            order = np.arange(n, dtype=np.int64)
        uniforms = rng.random(n)
        logdet_io[0] = chain.cov.logdet_sigma
        try:
            ops = _kernels.edge_sweep(chain.cov.sigma, chain.config.bits,
                                      ei, ej, params.beta, uniforms, order,
                                      logdet_io)
        except ArithmeticError as exc:
            chain.cov.logdet_sigma = float(logdet_io[0])
            if attempt == 1:
                raise NumericalError(
                    f"removal guard still failing after refresh: {exc}"
                ) from None
            linalg.refresh(chain.cov, topology, chain.config, params)
            continue
        chain.cov.logdet_sigma = float(logdet_io[0])
        chain.cov.flips_since_refresh += ops
        chain.t += 1
        return chain
    raise AssertionError("unreachable")


def _batch_layout(retained: int) -> tuple[int, int]:
    n_batches = max(1, math.isqrt(retained))
    return n_batches, retained // n_batches


def run(topology: Topology, params: ModelParams, settings: RunSettings,
        kind: str = "edge_only", stream: IO[str] | None = None,
        stream_meta: dict | None = None, include_x: bool = False,
        collect: bool = False) -> SampleSummary:
    """Run one chain and aggregate it.

    ``stream`` (a text file object) receives one JSON record per retained
    sweep: step counter, packed configuration hex, log-determinant, and
    the attribute vector when ``include_x`` (coupled chain only).  If
    ``stream_meta`` is given it is written first as a metadata line.
    ``collect=True`` additionally keeps the records in memory on the
    returned summary.
    """
    if kind not in CHAIN_KINDS:
        raise ValidationError(f"kind must be one of {CHAIN_KINDS}")
    if include_x and kind != "coupled":
        raise ValidationError("include_x is only meaningful for the coupled chain")

    chain = init_chain(topology, params, settings.seed, kind)
    n, m = topology.n, topology.m
    retained_total = settings.retained
    n_batches, batch_size = _batch_layout(retained_total)

    edge_sum = np.zeros(n)
    batch_edge_sums = np.zeros((n_batches, n))
    logdet_sum = 0.0
    x_sum = np.zeros(m)
    x2_sum = np.zeros(m)
    n_flips = 0
    n_refreshes = 0
    records: list[dict] | None = [] if collect else None

    if stream is not None and stream_meta is not None:
        stream.write(json.dumps({"meta": stream_meta}) + "\n")

    r = 0
    for _ in range(settings.sweeps):
        if kind == "coupled":
            prev_bits = chain.config.bits
            coupled_step(chain, topology, params)
            n_flips += int(np.sum(prev_bits != chain.config.bits))
        else:
            before = chain.cov.flips_since_refresh
            edge_sweep(chain, topology, params, scan=settings.scan)
            n_flips += chain.cov.flips_since_refresh - before
            if linalg.maybe_refresh(chain.cov, topology, chain.config, params,
                                    settings.refresh_period):
                n_refreshes += 1
        t = chain.t
        if t > settings.burnin and (t - settings.burnin - 1) % settings.thin == 0:
            bits = chain.config.bits
            edge_sum += bits
            if r < n_batches * batch_size:
                batch_edge_sums[r // batch_size] += bits
            logdet_sum += chain.cov.logdet_sigma
            if kind == "coupled":
                x_sum += chain.x
                x2_sum += chain.x ** 2
            if stream is not None or records is not None:
                rec: dict[str, Any] = {
                    "t": t,
                    "config_bits_hex": chain.config.to_hex(),
                    "logdet_sigma": chain.cov.logdet_sigma,
                }
                if include_x:
                    rec["x"] = chain.x.tolist()
                if stream is not None:
                    stream.write(json.dumps(rec) + "\n")
                if records is not None:
                    records.append(rec)
            r += 1

    marginals = edge_sum / retained_total
    if n_batches >= 2:
        batch_means = batch_edge_sums / batch_size
        se = batch_means.std(axis=0, ddof=1) / math.sqrt(n_batches)
    else:
        se = np.full(n, np.nan)
    if retained_total >= 2:
        sample_var = marginals * (1.0 - marginals) * retained_total / (retained_total - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ess = np.where(se > 0, sample_var / se**2, float(retained_total))
        ess = np.minimum(np.nan_to_num(ess, nan=float(retained_total)),
                         retained_total)
    else:
        ess = np.full(n, np.nan)

    x_var = None
    if kind == "coupled" and retained_total >= 2:
        mean = x_sum / retained_total
        x_var = (x2_sum - retained_total * mean**2) / (retained_total - 1)

    return SampleSummary(
        kind=kind,
        settings=settings,
        retained=retained_total,
        edge_marginals=marginals,
        edge_marginal_se=se,
        ess_per_edge=ess,
        mean_logdet=logdet_sum / retained_total,
        x_variance_estimates=x_var,
        n_flips=n_flips,
        n_refreshes=n_refreshes,
        backend=_kernels.get_backend(),
        records=records,
    )


def run_many(topology: Topology, params: ModelParams, settings: RunSettings,
             kind: str, seeds: list[int]) -> list[SampleSummary]:
    """Independent chains, one per seed, executed concurrently (no shared
    mutable state); results come back in seed order."""
    def one(seed: int) -> SampleSummary:
        return run(topology, params, dataclasses.replace(settings, seed=seed),
                   kind=kind)

    with concurrent.futures.ThreadPoolExecutor(worker_count()) as pool:
        return list(pool.map(one, seeds))


def pooled_edge_marginals(summaries: list[SampleSummary]) -> np.ndarray:
    """Retained-count-weighted pooled marginals.  Summation follows the
    input order; reorderings agree up to float addition order."""
    total = sum(s.retained for s in summaries)
    acc = np.zeros_like(summaries[0].edge_marginals)
    for s in summaries:
        acc += s.edge_marginals * (s.retained / total)
    return acc

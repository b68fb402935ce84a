"""Parameter estimation from observed (configuration, attributes) snapshots.

The joint normalizer sums over 2^n configurations and the edge normalizer
needs the same sum, so the exact likelihood is intractable beyond ~24
edges.  We maximize the pseudo-likelihood instead: the sum of the two
tractable conditional log-densities,

    sum_snapshots [ log P(edges | x) + log P(x | edges) ],

which is an estimator choice of this package, not part of the model's
definition.  Snapshots are treated as independent draws; temporal
dependence between consecutive states of the dynamics is ignored at
fitting time (a documented bias caveat -- thin the chain when generating
data).

The Gaussian term is evaluated through the eigenvalues of the active-edge
Laplacian, so one objective evaluation is O(N(m + n)) after an O(N m^3)
precomputation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .graph import EdgeConfig, Topology
from .linalg import build_laplacian
from .model_params import ALPHA_MIN, ModelParams

_LOG_2PI = math.log(2.0 * math.pi)

#: Offset that lets log-space coordinate search reach beta = 0 exactly.
BETA_EPS = 1e-12

DEFAULT_BOUNDS = ((ALPHA_MIN, 1e6), (0.0, 1e6))


@dataclass
class Snapshot:
    """One observation of the network: configuration, attribute vector,
    and an optional positive weight."""

    config: EdgeConfig
    x: np.ndarray
    weight: float = 1.0

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.float64)
        m = self.config.topology.m
        if self.x.shape != (m,):
            raise ValidationError(
                f"attribute vector has shape {self.x.shape}, expected ({m},)")
        if not np.all(np.isfinite(self.x)):
            raise ValidationError("attribute vector has non-finite entries")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise ValidationError(f"weight must be positive, got {self.weight}")


@dataclass
class FitResult:
    """Estimates with observed-information standard errors.

    ``converged`` means both the parameter step and the objective step of
    the final coordinate cycle fell below their tolerances.
    """

    alpha_hat: float
    beta_hat: float
    objective: float
    iterations: int
    converged: bool
    alpha_se: float
    beta_se: float

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "alpha_se": self.alpha_se,
            "beta_se": self.beta_se,
        }


class _SuffStats:
    """Per-dataset sufficient statistics for fast objective evaluation."""

    def __init__(self, snapshots: Sequence[Snapshot]):
        if not snapshots:
            raise ValidationError("need at least one snapshot")
        top = snapshots[0].config.topology
        for s in snapshots:
            if s.config.topology != top:
                raise ValidationError("snapshots mix topologies")
        self.topology = top
        ei, ej = top.edge_arrays
        self.weights = np.array([s.weight for s in snapshots])
        self.bits = np.stack([s.config.bits for s in snapshots]).astype(float)
        xs = np.stack([s.x for s in snapshots])
        self.d2 = (xs[:, ei] - xs[:, ej]) ** 2 if top.n else np.zeros((len(snapshots), 0))
        self.xnorm2 = np.einsum("ij,ij->i", xs, xs)
        self.gapsum = np.einsum("ij,ij->i", self.bits, self.d2)
        self.lam = np.stack([
            np.linalg.eigvalsh(build_laplacian(top, s.config))
            for s in snapshots
        ])

    @property
    def lam_max(self) -> float:
        return float(self.lam.max(initial=0.0))


def _edge_term(stats: _SuffStats, beta: float) -> np.ndarray:
    """Per-snapshot ``log P(edges | x)`` under the logistic conditional
    with exponent ``beta * gap^2 / 2``."""
    t = 0.5 * beta * stats.d2
    return ((1.0 - stats.bits) * t - np.logaddexp(0.0, t)).sum(axis=1)


def _node_term(stats: _SuffStats, alpha: float, beta: float) -> np.ndarray:
    """Per-snapshot Gaussian log-density
    ``0.5 log|Q| - 0.5 x'Qx - (m/2) log(2 pi)`` via Laplacian eigenvalues."""
    m = stats.topology.m
    logdet_q = np.log(alpha + beta * stats.lam).sum(axis=1)
    quad = alpha * stats.xnorm2 + beta * stats.gapsum
    return 0.5 * logdet_q - 0.5 * quad - 0.5 * m * _LOG_2PI


def _objective(stats: _SuffStats, alpha: float, beta: float) -> float:
    """Weighted pseudo-log-likelihood; -inf outside the PD region
    (alpha + beta*lambda must stay positive, which matters only for the
    slightly-negative beta probes of the finite-difference Hessian)."""
    if alpha <= 0:
        return -math.inf
    if stats.lam.size and np.min(alpha + beta * stats.lam) <= 0:
        return -math.inf
    return float(stats.weights @ (_edge_term(stats, beta)
                                  + _node_term(stats, alpha, beta)))


def logistic_loglik(snapshots: Sequence[Snapshot], beta: float) -> float:
    """Edge part alone: the logistic log-likelihood of the configurations
    given the attributes."""
    stats = _SuffStats(snapshots)
    return float(stats.weights @ _edge_term(stats, beta))


def gaussian_loglik(snapshots: Sequence[Snapshot], alpha: float,
                    beta: float) -> float:
    """Attribute part alone: the Gaussian log-likelihood at fixed
    configurations."""
    stats = _SuffStats(snapshots)
    return float(stats.weights @ _node_term(stats, alpha, beta))


def pseudo_loglik(snapshots: Sequence[Snapshot], alpha: float,
                  beta: float) -> float:
    """Sum of the two conditional log-densities over weighted snapshots."""
    params = ModelParams(alpha, beta)  # validates the domain
    stats = _SuffStats(snapshots)
    return _objective(stats, params.alpha, params.beta)


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section maximization on [lo, hi]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    invphi2 = (3.0 - math.sqrt(5.0)) / 2.0
    a, b = lo, hi
    h = b - a
    c = a + invphi2 * h
    d = a + invphi * h
    fc, fd = f(c), f(d)
    while h > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + invphi2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + invphi * h
            fd = f(d)
    x = c if fc >= fd else d
    return (x, fc) if fc >= fd else (x, fd)


def _observed_info_se(stats: _SuffStats, alpha: float,
                      beta: float) -> tuple[float, float]:
    """Standard errors from the finite-difference observed information
    (negative Hessian of the objective), central differences."""
    h_a = 1e-4 * max(1.0, abs(alpha))
    h_a = min(h_a, 0.49 * alpha)
    h_b = 1e-4 * max(1.0, abs(beta))
    if stats.lam_max > 0:
        h_b = min(h_b, 0.49 * (alpha + beta * stats.lam_max) / stats.lam_max)

    def f(a: float, b: float) -> float:
        return _objective(stats, a, b)

    f00 = f(alpha, beta)
    h_aa = (f(alpha + h_a, beta) - 2.0 * f00 + f(alpha - h_a, beta)) / h_a**2
    h_bb = (f(alpha, beta + h_b) - 2.0 * f00 + f(alpha, beta - h_b)) / h_b**2
    h_ab = (f(alpha + h_a, beta + h_b) - f(alpha + h_a, beta - h_b)
            - f(alpha - h_a, beta + h_b) + f(alpha - h_a, beta - h_b)) \
        / (4.0 * h_a * h_b)
    info = -np.array([[h_aa, h_ab], [h_ab, h_bb]])
    if not np.all(np.isfinite(info)):
        return math.nan, math.nan
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        return math.nan, math.nan
    if cov[0, 0] <= 0 or cov[1, 1] <= 0:
        return math.nan, math.nan
    return math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1])


def fit_params(snapshots: Sequence[Snapshot],
               init: tuple[float, float] = (1.0, 1.0),
               bounds: tuple[tuple[float, float], tuple[float, float]] = DEFAULT_BOUNDS,
               max_cycles: int = 200, param_tol: float = 1e-8,
               obj_tol: float = 1e-10) -> FitResult:
    """Maximize the pseudo-log-likelihood by coordinate search with
    golden-section line searches over (log alpha, log(beta + eps)).

    Non-convergence within ``max_cycles`` yields ``converged=False``,
    never an exception.
    """
    stats = _SuffStats(snapshots)
    (a_lo, a_hi), (b_lo, b_hi) = bounds
    if not (ALPHA_MIN <= a_lo < a_hi and 0.0 <= b_lo < b_hi):
        raise ValidationError(f"bad bounds {bounds}")
    lo = np.array([math.log(a_lo), math.log(b_lo + BETA_EPS)])
    hi = np.array([math.log(a_hi), math.log(b_hi + BETA_EPS)])
    u = np.clip(np.array([math.log(max(init[0], a_lo)),
                          math.log(max(init[1], b_lo) + BETA_EPS)]), lo, hi)

    def f_of(u_vec: np.ndarray) -> float:
        return _objective(stats, math.exp(u_vec[0]),
                          math.exp(u_vec[1]) - BETA_EPS)

    fbest = f_of(u)
    converged = False
    cycles = 0
    for cycles in range(1, max_cycles + 1):
        u_prev, f_prev = u.copy(), fbest
        for c in (0, 1):
            def line(v: float, c=c) -> float:
                trial = u.copy()
                trial[c] = v
                return f_of(trial)

            cand, f_cand = _golden_max(line, float(lo[c]), float(hi[c]))
            # Accept only strict improvement: near the optimum the candidate
            # jitters at the objective's rounding floor, and an incumbent
            # that cannot be beaten gives an exact fixed point (zero step).
            if f_cand > fbest:
                u[c] = cand
                fbest = f_cand
        if (np.max(np.abs(u - u_prev)) < param_tol
                and abs(fbest - f_prev) < obj_tol):
            converged = True
            break

    alpha_hat = math.exp(u[0])
    beta_hat = max(0.0, math.exp(u[1]) - BETA_EPS)
    se_a, se_b = _observed_info_se(stats, alpha_hat, beta_hat)
    return FitResult(alpha_hat, beta_hat, fbest, cycles, converged, se_a, se_b)

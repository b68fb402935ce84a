"""Dense symmetric linear algebra for precision matrices of the form
``Q(a) = alpha*I + beta*L(a)`` with ``L(a)`` the Laplacian of the active
edge set.

The central object is :class:`CovarianceState`: the covariance
``sigma = Q(a)^{-1}`` kept explicitly (dense), together with
``log|sigma|`` as a running scalar.  Single edge flips are O(m^2)
rank-1 updates:

    add (i,j):     sigma' = sigma - beta/(1 + beta*delta) * u u^T
    remove (i,j):  sigma' = sigma + beta/(1 - beta*delta') * u u^T

with ``u = sigma[:, i] - sigma[:, j]`` and ``delta = sigma_ii + sigma_jj
- 2 sigma_ij`` the gap variance (conditional variance of X_i - X_j).
The log-determinant moves by -log(1 + beta*delta) on an add and back on
a remove, via the exact identity (1 - beta*delta')(1 + beta*delta) = 1.

Floating-point drift from long flip sequences is bounded by periodic
full Cholesky refreshes (:func:`maybe_refresh`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import NumericalError, ValidationError
from .graph import EdgeConfig, Topology
from .model_params import ModelParams

#: Default number of rank-1 updates between full Cholesky refreshes.
DEFAULT_REFRESH_PERIOD = 64


@dataclass
class CovarianceState:
    """Covariance matrix of the node attributes for one edge configuration,
    with its log-determinant and a flip counter driving periodic refreshes.

    ``sigma`` is dense, float64, C-contiguous and kept exactly symmetric.
    Single-writer: one chain owns one state; frozen states may be shared
    read-only.
    """

    sigma: np.ndarray
    logdet_sigma: float
    flips_since_refresh: int = 0

    def copy(self) -> "CovarianceState":
        return CovarianceState(self.sigma.copy(), self.logdet_sigma,
                               self.flips_since_refresh)


def build_laplacian(topology: Topology, config: EdgeConfig) -> np.ndarray:
    """Graph Laplacian of the active edges, dense m x m."""
    m = topology.m
    ei, ej = topology.edge_arrays
    active = config.bits.astype(bool)
    i, j = ei[active], ej[active]
    lap = np.zeros((m, m))
    deg = np.bincount(i, minlength=m) + np.bincount(j, minlength=m)
    lap[np.arange(m), np.arange(m)] = deg
    lap[i, j] = -1.0
    lap[j, i] = -1.0
    return lap

def build_precision(topology: Topology, config: EdgeConfig,
                    params: ModelParams) -> np.ndarray:
    """Precision matrix ``alpha*I + beta * sum_active (e_i - e_j)(e_i - e_j)^T``.

    Positive definite for every configuration since alpha > 0.
    """
    if config.topology != topology:
        raise ValidationError("configuration does not belong to this topology")
    q = params.beta * build_laplacian(topology, config)
    q[np.arange(topology.m), np.arange(topology.m)] += params.alpha
    return q


def covariance_state(precision: np.ndarray) -> CovarianceState:
    """Invert a positive-definite precision matrix via Cholesky.

    ``logdet_sigma`` is minus the log-determinant of the input, computed
    from the Cholesky diagonal.
    """
    try:
        chol = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"precision matrix is not PD: {exc}") from None
    return covariance_state_from_cholesky(chol)


def covariance_state_from_cholesky(chol: np.ndarray) -> CovarianceState:
    """State from a lower Cholesky factor of the precision matrix (lets
    callers that already factored Q avoid a second factorization)."""
    logdet_sigma = -2.0 * float(np.sum(np.log(np.diagonal(chol))))
    sigma = scipy.linalg.cho_solve((chol, True), np.eye(chol.shape[0]),
                                   check_finite=False)
    sigma = np.ascontiguousarray((sigma + sigma.T) / 2.0)
    return CovarianceState(sigma, logdet_sigma)


def delta(state: CovarianceState, i: int, j: int) -> float:
    """Gap variance ``sigma_ii + sigma_jj - 2 sigma_ij`` of node pair (i, j).

    Strictly positive for any PD covariance.
    """
    if i == j:
        raise ValidationError("gap variance needs two distinct nodes")
    s = state.sigma
    return float(s[i, i] + s[j, j] - 2.0 * s[i, j])


def rank_one_add(state: CovarianceState, i: int, j: int,
                 beta: float) -> CovarianceState:
    """Account for switching edge (i, j) on, in place, in O(m^2).

    The owning configuration must currently have the edge absent.  Returns
    the same state object.
    """
    d = delta(state, i, j)
    _kernels.gap_outer_update(state.sigma, i, j, -(beta / (1.0 + beta * d)))
    state.logdet_sigma -= math.log1p(beta * d)
    state.flips_since_refresh += 1
    return state


def rank_one_remove(state: CovarianceState, i: int, j: int,
                    beta: float) -> CovarianceState:
    """Exact inverse of :func:`rank_one_add`, in place, in O(m^2).

    The identity (1 - beta*delta')(1 + beta*delta) = 1 makes the removal
    denominator positive in exact arithmetic; if accumulated drift pushes
    it below the guard, NumericalError is raised and the caller should do
    a full refresh and retry.
    """
    d1 = delta(state, i, j)
    denom = 1.0 - beta * d1
    if denom <= _kernels.GUARD:
        raise NumericalError(
            f"removal denominator 1 - beta*delta = {denom} at edge ({i}, {j}); "
            "refresh the state and retry"
        )
    _kernels.gap_outer_update(state.sigma, i, j, beta / denom)
    state.logdet_sigma -= math.log(denom)
    state.flips_since_refresh += 1
    return state


def delta_prime_identity_check(delta_before: float, delta_after: float,
                               beta: float) -> float:
    """Residual ``|(1 - beta*delta_after) * (1 + beta*delta_before) - 1|``
    of the gap-variance identity across a single edge addition."""
    return abs((1.0 - beta * delta_after) * (1.0 + beta * delta_before) - 1.0)


def refresh(state: CovarianceState, topology: Topology, config: EdgeConfig,
            params: ModelParams) -> CovarianceState:
    """Rebuild ``sigma`` and the log-determinant from scratch (O(m^3)) and
    reset the flip counter.  In place; returns the same state object."""
    fresh = covariance_state(build_precision(topology, config, params))
    state.sigma[...] = fresh.sigma
    state.logdet_sigma = fresh.logdet_sigma
    state.flips_since_refresh = 0
    return state


def maybe_refresh(state: CovarianceState, topology: Topology,
                  config: EdgeConfig, params: ModelParams,
                  period: int = DEFAULT_REFRESH_PERIOD) -> bool:
    """Refresh when the flip counter has reached ``period``.  Returns True
    if a refresh happened."""
    if state.flips_since_refresh >= period:
        refresh(state, topology, config, params)
        return True
    return False


def telescoping_neg_logdet(topology: Topology, config: EdgeConfig,
                           params: ModelParams) -> tuple[float, np.ndarray]:
    """Build ``-log|sigma(a)|`` by inserting the active edges of ``a`` in
    canonical order, one rank-1 update at a time.

    Returns the total (baseline ``m*log(alpha)`` of the empty
    configuration plus the increments) and the per-edge summands
    ``a_k * log(1 + beta*delta(prefix state))``; every summand is
    nonnegative, which is what makes the running value a sub-martingale
    when the bits are drawn from the model.
    """
    m = topology.m
    state = CovarianceState(np.eye(m) / params.alpha,
                            -m * math.log(params.alpha))
    ei, ej = topology.edge_arrays
    summands = np.zeros(topology.n)
    for k in np.flatnonzero(config.bits):
        d = delta(state, int(ei[k]), int(ej[k]))
        summands[k] = math.log1p(params.beta * d)
        rank_one_add(state, int(ei[k]), int(ej[k]), params.beta)
    return m * math.log(params.alpha) + float(summands.sum()), summands

"""Densities and conditionals of the joint edge/attribute model.

The joint law over an edge configuration ``a`` and node attributes ``x``
has unnormalized log-density ``-H(a, x)/2`` with

    H(a, x) = alpha * sum_i x_i^2 + beta * sum_{(i,j) active} (x_i - x_j)^2
            = x^T Q(a) x.

Both conditionals are simple.  Given ``x`` the edges are independent
with logistic probabilities; exponentiating ``-H/2`` at the two statuses
of one edge gives

    P(a_ij = 1 | x) = 1 / (1 + exp(beta (x_i - x_j)^2 / 2)),

never above 1/2.  Given ``a`` the attributes are centered Gaussian with
covariance ``Q(a)^{-1}``.  The one-edge conditional of the edge marginal
depends on the rest of the configuration only through the gap variance:
``P(edge on | rest) = 1/(1 + sqrt(1 + beta*delta))``.
"""

from __future__ import annotations

import math

import numpy as np

from . import linalg
from .errors import ValidationError
from .graph import EdgeConfig, Topology
from .linalg import CovarianceState
from .model_params import ModelParams

__all__ = [
    "ModelParams",
    "as_node_vector",
    "hamiltonian",
    "log_joint_unnormalized",
    "edge_prob_given_x",
    "edge_probs_given_x",
    "x_given_a_law",
    "one_edge_conditional",
]


def as_node_vector(x, m: int) -> np.ndarray:
    """Validate a node-attribute vector: length m, finite, float64."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (m,):
        raise ValidationError(f"node vector has shape {arr.shape}, expected ({m},)")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("node vector has non-finite entries")
    return arr


def hamiltonian(topology: Topology, config: EdgeConfig, x,
                params: ModelParams) -> float:
    """Quadratic energy ``alpha*|x|^2 + beta * sum_active (x_i - x_j)^2``."""
    arr = as_node_vector(x, topology.m)
    ei, ej = topology.edge_arrays
    gaps = (arr[ei] - arr[ej]) ** 2
    return float(params.alpha * arr @ arr + params.beta * (config.bits * gaps).sum())


def log_joint_unnormalized(topology: Topology, config: EdgeConfig, x,
                           params: ModelParams) -> float:
    """``-H(a, x)/2``; the joint normalizer is intentionally never computed."""
    return -0.5 * hamiltonian(topology, config, x, params)


def edge_prob_given_x(x, i: int, j: int, beta: float) -> float:
    """``P(a_ij = 1 | x) = 1/(1 + exp(beta (x_i - x_j)^2 / 2))``, the
    one-edge conditional of the ``exp(-H/2)`` joint at fixed attributes.

    Computed in log space, so large exponents underflow to exactly 0.0
    instead of overflowing; the value is always in (0, 1/2] for finite
    inputs.
    """
    if i == j:
        raise ValidationError("edge needs two distinct nodes")
    gap = float(x[i]) - float(x[j])
    t = 0.5 * beta * gap * gap  # multiply, not **: squares may hit inf
    return float(np.exp(-np.logaddexp(0.0, t)))


def edge_probs_given_x(topology: Topology, x, beta: float) -> np.ndarray:
    """Vectorized ``P(a_ij = 1 | x)`` over all ambient edges."""
    arr = as_node_vector(x, topology.m)
    ei, ej = topology.edge_arrays
    gap = arr[ei] - arr[ej]
    with np.errstate(over="ignore"):
        t = 0.5 * beta * gap * gap
        return np.exp(-np.logaddexp(0.0, t))


def x_given_a_law(topology: Topology, config: EdgeConfig,
                  params: ModelParams) -> CovarianceState:
    """Law of the attributes given the configuration: centered Gaussian
    with covariance ``Q(a)^{-1}`` (the returned state; mean is zero)."""
    return linalg.covariance_state(
        linalg.build_precision(topology, config, params))


def one_edge_conditional(state: CovarianceState, i: int, j: int, beta: float,
                         config: EdgeConfig | None = None) -> float:
    """Probability that edge (i, j) is on given the status of all other
    edges: ``1/(1 + sqrt(1 + beta*delta_ij))``.

    ``state`` must be the covariance for a configuration with (i, j)
    absent; the conditional depends on the other edges only through the
    gap variance delta_ij.  Pass the owning ``config`` to have that
    precondition checked.
    """
    if config is not None:
        k = config.topology.edge_index(i, j)
        if config.bits[k]:
            raise ValidationError(
                f"edge ({i}, {j}) is present in the conditioning configuration"
            )
    d = linalg.delta(state, i, j)
    return 1.0 / (1.0 + math.sqrt(1.0 + beta * d))

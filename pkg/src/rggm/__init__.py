"""Random Gaussian graphical model: a joint distribution over network
edges and Gaussian node attributes.

Subpackages cover the fixed graph topology and edge-configuration lattice
(:mod:`rggm.graph`), dense incremental linear algebra for the precision
and covariance matrices (:mod:`rggm.linalg`), the model densities and
conditionals (:mod:`rggm.model`), exact small-graph enumeration
(:mod:`rggm.oracle`), two MCMC chains (:mod:`rggm.sampler`), executable
property checks (:mod:`rggm.verify`), pseudo-likelihood parameter fitting
(:mod:`rggm.fit`), and file formats plus the command line
(:mod:`rggm.io`, :mod:`rggm.cli`).
"""

from ._kernels import get_backend
from .errors import NumericalError, RggmError, ValidationError
from .graph import (EdgeConfig, Topology, catalog, join, leq, meet,
                    nested_sequence, random_topology)
from .linalg import (CovarianceState, build_precision, covariance_state,
                     delta, rank_one_add, rank_one_remove)
from .model import (ModelParams, edge_prob_given_x, hamiltonian,
                    log_joint_unnormalized, one_edge_conditional,
                    x_given_a_law)
from .oracle import MeasureTable, enumerate_measure
from .sampler import ChainState, RunSettings, SampleSummary, init_chain, run

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "get_backend",
    "RggmError",
    "ValidationError",
    "NumericalError",
    "Topology",
    "EdgeConfig",
    "join",
    "meet",
    "leq",
    "nested_sequence",
    "random_topology",
    "catalog",
    "CovarianceState",
    "build_precision",
    "covariance_state",
    "delta",
    "rank_one_add",
    "rank_one_remove",
    "ModelParams",
    "hamiltonian",
    "log_joint_unnormalized",
    "edge_prob_given_x",
    "x_given_a_law",
    "one_edge_conditional",
    "MeasureTable",
    "enumerate_measure",
    "ChainState",
    "RunSettings",
    "SampleSummary",
    "init_chain",
    "run",
]

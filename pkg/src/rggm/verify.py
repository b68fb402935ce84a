"""Executable verification of the model's structural identities and
inequalities at desk scale.

Each check runs many instances (random or exhaustive), records the worst
residual or margin together with a witness that can reproduce it, and
returns a machine-readable :class:`CheckReport`.  Identity checks compare
two independent computation routes (incremental update vs fresh
factorization, closed form vs enumeration ratio); inequality checks allow
a -1e-12 rounding margin at equality.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import linalg, model, oracle
from ._util import worker_count
from .errors import ValidationError
from .graph import (EdgeConfig, Topology, catalog, join, nested_sequence,
                    random_topology)
from .model_params import ModelParams

IDENTITY_TOL = 1e-10
FORMULA_TOL = 1e-12
MARGIN_TOL = 1e-12

#: Parameter grid for association checks: decoupled, weak, strong coupling.
FKG_GRID = tuple(ModelParams(a, b) for a in (0.5, 1.0, 2.0)
                 for b in (0.0, 0.5, 1.0, 4.0))


@dataclass
class CheckReport:
    """Outcome of one check.

    ``kind`` is ``residual`` (pass iff worst <= tol) or ``margin``
    (pass iff worst >= -tol).  ``witness`` pins down the worst instance
    with enough detail for :func:`reproduce_residual`.
    """

    name: str
    instances: int
    worst: float
    tol: float
    kind: str
    passed: bool
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "instances": self.instances,
            "worst": self.worst,
            "tol": self.tol,
            "kind": self.kind,
            "passed": self.passed,
            "witness": self.witness,
            "details": self.details,
        }


def _report(name: str, instances: int, worst: float, tol: float, kind: str,
            witness: dict | None, details: dict | None = None) -> CheckReport:
    passed = worst <= tol if kind == "residual" else worst >= -tol
    return CheckReport(name, instances, float(worst), tol, kind, passed,
                       witness, details or {})


def _top_payload(topology: Topology) -> dict:
    return {"m": topology.m, "edges": [list(e) for e in topology.edges]}


def _top_from_payload(payload: dict) -> Topology:
    return Topology(payload["m"], tuple(tuple(e) for e in payload["edges"]))


def _random_config(topology: Topology, rng: np.random.Generator) -> EdgeConfig:
    return EdgeConfig(topology, (rng.random(topology.n) < 0.5).astype(np.uint8))


def _fresh_state(topology: Topology, config: EdgeConfig,
                 params: ModelParams) -> linalg.CovarianceState:
    return linalg.covariance_state(linalg.build_precision(topology, config, params))


# ----------------------------------------------------------------------
# determinant / update identities
# ----------------------------------------------------------------------

def check_lemma1(topology: Topology, params: ModelParams, trials: int = 200,
                 seed: int = 0) -> CheckReport:
    """Single-edge determinant identities, against fresh factorizations:
    ``log|sigma'| - log|sigma| = -log(1 + beta*delta)`` and
    ``(1 - beta*delta')(1 + beta*delta) = 1``."""
    rng = np.random.default_rng(seed)
    worst, witness = -1.0, None
    count = 0
    for _ in range(trials):
        config = _random_config(topology, rng)
        absent = np.flatnonzero(config.bits == 0)
        if absent.size == 0:
            continue
        k = int(rng.choice(absent))
        i, j = topology.edges[k]
        state = _fresh_state(topology, config, params)
        d = linalg.delta(state, i, j)
        added = config.copy()
        added.bits[k] = 1
        state2 = _fresh_state(topology, added, params)
        r_det = abs((state2.logdet_sigma - state.logdet_sigma)
                    + math.log1p(params.beta * d))
        d2 = linalg.delta(state2, i, j)
        r_gap = linalg.delta_prime_identity_check(d, d2, params.beta)
        count += 1
        for label, r in (("determinant_update", r_det), ("gap_identity", r_gap)):
            if r > worst:
                worst = r
                witness = {"check": "lemma1", "identity": label,
                           "topology": _top_payload(topology),
                           "alpha": params.alpha, "beta": params.beta,
                           "config_code": config.code(), "edge": [i, j]}
    return _report("lemma1_determinant_and_gap", count, worst, IDENTITY_TOL,
                   "residual", witness)


def check_lemma2(topology: Topology, params: ModelParams, trials: int = 200,
                 seed: int = 0) -> CheckReport:
    """Rank-1 covariance update vs independent inversion of the augmented
    precision matrix (entrywise), plus the gap-variance update formula for
    random node pairs."""
    rng = np.random.default_rng(seed)
    worst, witness = -1.0, None
    count = 0
    m = topology.m
    for _ in range(trials):
        config = _random_config(topology, rng)
        absent = np.flatnonzero(config.bits == 0)
        if absent.size == 0:
            continue
        kk = int(rng.choice(absent))
        i, j = topology.edges[kk]
        state = _fresh_state(topology, config, params)
        sig = state.sigma.copy()
        d_ij = linalg.delta(state, i, j)
        updated = state.copy()
        linalg.rank_one_add(updated, i, j, params.beta)
        added = config.copy()
        added.bits[kk] = 1
        fresh = _fresh_state(topology, added, params)
        r_sigma = float(np.max(np.abs(updated.sigma - fresh.sigma)))
        # gap update for a random pair (k, l)
        k, l = rng.choice(m, size=2, replace=False)
        k, l = int(k), int(l)
        d_kl = float(sig[k, k] + sig[l, l] - 2.0 * sig[k, l])
        corr = sig[k, i] - sig[k, j] - sig[l, i] + sig[l, j]
        predicted = d_kl - params.beta / (1.0 + params.beta * d_ij) * corr**2
        r_gap = abs(linalg.delta(fresh, k, l) - predicted)
        count += 1
        for label, r in (("sigma_update", r_sigma), ("gap_update", r_gap)):
            if r > worst:
                worst = r
                witness = {"check": "lemma2", "identity": label,
                           "topology": _top_payload(topology),
                           "alpha": params.alpha, "beta": params.beta,
                           "config_code": config.code(), "edge": [i, j],
                           "pair": [k, l]}
    return _report("lemma2_rank_one_update", count, worst, IDENTITY_TOL,
                   "residual", witness)


def check_prop2(topology: Topology, params: ModelParams) -> CheckReport:
    """One-edge conditional, exhaustively: the closed form
    ``1/(1 + sqrt(1 + beta*delta))`` vs the enumeration-table row ratio,
    and the equivalent square-root-ratio form."""
    if topology.n > 12:
        raise ValidationError("exhaustive conditional check capped at 12 edges")
    table = oracle.enumerate_measure(topology, params)
    worst_table, worst_forms = -1.0, -1.0
    witness = None
    count = 0
    for code in range(table.n_configs):
        config = table.config(code)
        state = _fresh_state(topology, config, params)
        for k in np.flatnonzero(config.bits == 0):
            i, j = topology.edges[int(k)]
            p_closed = model.one_edge_conditional(state, i, j, params.beta,
                                                  config=config)
            p_table = oracle.conditional_from_table(table, i, j, config)
            d0 = linalg.delta(state, i, j)
            after = state.copy()
            linalg.rank_one_add(after, i, j, params.beta)
            d1 = linalg.delta(after, i, j)
            p_ratio = math.sqrt(d1) / (math.sqrt(d0) + math.sqrt(d1))
            r_table = abs(p_closed - p_table)
            r_forms = abs(p_closed - p_ratio)
            count += 1
            if r_table > worst_table:
                worst_table = r_table
                witness = {"check": "prop2", "topology": _top_payload(topology),
                           "alpha": params.alpha, "beta": params.beta,
                           "config_code": code, "edge": [i, j]}
            worst_forms = max(worst_forms, r_forms)
    passed_forms = worst_forms <= FORMULA_TOL
    rep = _report("prop2_one_edge_conditional", count, worst_table,
                  IDENTITY_TOL, "residual", witness,
                  {"max_formula_residual": worst_forms,
                   "formula_tol": FORMULA_TOL})
    rep.passed = rep.passed and passed_forms
    return rep


# ----------------------------------------------------------------------
# association / monotonicity
# ----------------------------------------------------------------------

def _increasing_functions(n: int) -> list[tuple[str, Callable[[np.ndarray], np.ndarray]]]:
    """Library of increasing functions of the bit matrix (rows = configs)."""
    funcs: list[tuple[str, Callable[[np.ndarray], np.ndarray]]] = []
    for k in range(n):
        funcs.append((f"edge_{k}", lambda b, k=k: b[:, k].astype(float)))
    funcs.append(("edge_count", lambda b: b.sum(axis=1).astype(float)))
    for c in range(1, n + 1):
        funcs.append((f"count_ge_{c}",
                      lambda b, c=c: (b.sum(axis=1) >= c).astype(float)))
    return funcs


def check_fkg(topology: Topology, grid: Sequence[ModelParams] = FKG_GRID,
              pair_cap: int = 1 << 14, seed: int = 0) -> CheckReport:
    """Lattice condition ``mu(a|b) mu(a&b) >= mu(a) mu(b)`` over config
    pairs (exhaustive when feasible, sampled above ``pair_cap`` pairs) and
    positive association ``E(fg) >= E(f)E(g)`` for a library of increasing
    functions, per parameter-grid point."""
    rng = np.random.default_rng(seed)
    n = topology.n
    total = 1 << n
    worst, witness = math.inf, None
    count = 0
    for params in grid:
        table = oracle.enumerate_measure(topology, params)
        probs = table.probs
        codes = np.arange(total, dtype=np.uint64)
        if total * total <= pair_cap:
            a_codes = np.repeat(codes, total)
            b_codes = np.tile(codes, total)
        else:
            a_codes = rng.integers(0, total, size=pair_cap, dtype=np.uint64)
            b_codes = rng.integers(0, total, size=pair_cap, dtype=np.uint64)
        or_codes = a_codes | b_codes
        and_codes = a_codes & b_codes
        margins = (probs[or_codes] * probs[and_codes]
                   - probs[a_codes] * probs[b_codes])
        count += margins.size
        idx = int(np.argmin(margins))
        if margins[idx] < worst:
            worst = float(margins[idx])
            witness = {"check": "fkg_lattice", "topology": _top_payload(topology),
                       "alpha": params.alpha, "beta": params.beta,
                       "config_code_a": int(a_codes[idx]),
                       "config_code_b": int(b_codes[idx])}
        bits = oracle.bits_of_codes(codes, n)
        values = {name: f(bits) for name, f in _increasing_functions(n)}
        for fname, fv in values.items():
            for gname, gv in values.items():
                margin = float(probs @ (fv * gv) - (probs @ fv) * (probs @ gv))
                count += 1
                if margin < worst:
                    worst = margin
                    witness = {"check": "fkg_association",
                               "topology": _top_payload(topology),
                               "alpha": params.alpha, "beta": params.beta,
                               "f": fname, "g": gname}
    return _report("fkg_positive_association", count, worst, MARGIN_TOL,
                   "margin", witness)


def _event_probs_over_prefix(table: oracle.MeasureTable, n_prefix: int,
                             event: Callable[[np.ndarray], np.ndarray]) -> float:
    """Probability of an event that only reads the first ``n_prefix`` bits."""
    codes = np.arange(table.n_configs, dtype=np.uint64)
    bits = oracle.bits_of_codes(codes, table.topology.n)
    ind = event(bits[:, :n_prefix]).astype(float)
    return float(table.probs @ ind)


def default_increasing_events(n_prefix: int) -> list[tuple[str, Callable]]:
    """Increasing events measurable on the first ``n_prefix`` edges."""
    events: list[tuple[str, Callable]] = []
    for k in range(n_prefix):
        events.append((f"edge_{k}_on", lambda b, k=k: b[:, k] == 1))
    events.append(("any_edge_on", lambda b: b.sum(axis=1) >= 1))
    events.append(("all_edges_on", lambda b: b.sum(axis=1) == b.shape[1]))
    return events


def check_monotone_nested(sequence: Sequence[Topology], params: ModelParams,
                          events: Sequence[tuple[str, Callable]] | None = None
                          ) -> CheckReport:
    """Along a nested family, the probability of any increasing event of
    the smallest edge set is nondecreasing in the family size.  Exact
    (enumeration) as long as every member has at most 24 edges."""
    if len(sequence) < 2:
        raise ValidationError("need at least two nested topologies")
    n0 = sequence[0].n
    for small, big in zip(sequence, sequence[1:]):
        if big.edges[: small.n] != small.edges:
            raise ValidationError("sequence is not nested with prefix edge order")
    if events is None:
        events = default_increasing_events(n0)
    worst, witness = math.inf, None
    count = 0
    trajectories: dict[str, list[float]] = {name: [] for name, _ in events}
    for top in sequence:
        table = oracle.enumerate_measure(top, params)
        for name, ev in events:
            trajectories[name].append(_event_probs_over_prefix(table, n0, ev))
    for name, traj in trajectories.items():
        for step, (lo, hi) in enumerate(zip(traj, traj[1:])):
            margin = hi - lo
            count += 1
            if margin < worst:
                worst = margin
                witness = {"check": "monotone_nested", "event": name,
                           "alpha": params.alpha, "beta": params.beta,
                           "step": step,
                           "topology_small": _top_payload(sequence[step]),
                           "topology_big": _top_payload(sequence[step + 1]),
                           "n_prefix": n0}
    return _report("monotone_nested_events", count, worst, MARGIN_TOL,
                   "margin", witness, {"trajectories": trajectories})


def check_variance_monotone(topology: Topology, params: ModelParams,
                            trials: int = 200, seed: int = 0) -> CheckReport:
    """Extra edges shrink conditional variances: for comparable pairs
    a <= a', every diagonal entry of sigma and every gap variance is at
    least as large under a as under a'."""
    rng = np.random.default_rng(seed)
    worst, witness = math.inf, None
    count = 0
    for _ in range(trials):
        lo = _random_config(topology, rng)
        hi = join(lo, _random_config(topology, rng))
        s_lo = _fresh_state(topology, lo, params).sigma
        s_hi = _fresh_state(topology, hi, params).sigma
        diag_margin = float(np.min(np.diagonal(s_lo) - np.diagonal(s_hi)))
        gap_lo = (np.diagonal(s_lo)[:, None] + np.diagonal(s_lo)[None, :]
                  - 2.0 * s_lo)
        gap_hi = (np.diagonal(s_hi)[:, None] + np.diagonal(s_hi)[None, :]
                  - 2.0 * s_hi)
        off = ~np.eye(topology.m, dtype=bool)
        gap_margin = float(np.min((gap_lo - gap_hi)[off]))
        count += 1
        margin = min(diag_margin, gap_margin)
        if margin < worst:
            worst = margin
            witness = {"check": "variance_monotone",
                       "topology": _top_payload(topology),
                       "alpha": params.alpha, "beta": params.beta,
                       "config_code_lo": lo.code(), "config_code_hi": hi.code()}
    return _report("variance_monotone", count, worst, MARGIN_TOL, "margin",
                   witness)


def check_martingale(topology: Topology, params: ModelParams,
                     trials: int = 200, seed: int = 0) -> CheckReport:
    """Telescoping representation of ``-log|sigma(a)|`` as a sum of
    nonnegative per-edge increments (canonical insertion order), checked
    against a fresh factorization; plus, on enumerable graphs, the
    conditional-expectation sub-martingale inequality from the table."""
    rng = np.random.default_rng(seed)
    worst_res, witness = -1.0, None
    worst_margin = math.inf
    count = 0
    for _ in range(trials):
        config = _random_config(topology, rng)
        total, summands = linalg.telescoping_neg_logdet(topology, config, params)
        fresh = _fresh_state(topology, config, params)
        r = abs(total - (-fresh.logdet_sigma))
        count += 1
        if r > worst_res:
            worst_res = r
            witness = {"check": "martingale_telescoping",
                       "topology": _top_payload(topology),
                       "alpha": params.alpha, "beta": params.beta,
                       "config_code": config.code()}
        worst_margin = min(worst_margin, float(summands.min(initial=math.inf)))

    details: dict[str, Any] = {"min_summand": worst_margin}
    if topology.n <= 6:
        table = oracle.enumerate_measure(topology, params)
        neg_logdet = -2.0 * table.half_logdets  # -log|sigma| by config code
        probs = table.probs
        codes = np.arange(table.n_configs, dtype=np.uint64)
        worst_cond = math.inf
        for k in range(1, topology.n + 1):
            low_mask = np.uint64((1 << (k - 1)) - 1)
            lows = (codes & low_mask).astype(np.int64)
            mass = np.bincount(lows, weights=probs, minlength=1 << (k - 1))
            bit = ((codes >> np.uint64(k - 1)) & np.uint64(1)).astype(bool)
            mass1 = np.bincount(lows[bit], weights=probs[bit],
                                minlength=1 << (k - 1))
            for prefix in range(1 << (k - 1)):
                q = mass1[prefix] / mass[prefix]
                base = float(neg_logdet[prefix])
                up = float(neg_logdet[prefix | (1 << (k - 1))])
                margin = (q * up + (1.0 - q) * base) - base
                count += 1
                if margin < worst_cond:
                    worst_cond = margin
        details["min_conditional_margin"] = worst_cond
        if worst_cond < -MARGIN_TOL:
            worst_res = math.inf  # force failure; margin details carry cause

    rep = _report("martingale_representation", count, worst_res, IDENTITY_TOL,
                  "residual", witness, details)
    rep.passed = rep.passed and worst_margin >= -MARGIN_TOL
    return rep


# ----------------------------------------------------------------------
# witness replay and suite driver
# ----------------------------------------------------------------------

def reproduce_residual(witness: dict) -> float:
    """Recompute the residual or margin of a single witnessed instance."""
    top = _top_from_payload(witness["topology"]) \
        if "topology" in witness else None
    params = ModelParams(witness["alpha"], witness["beta"])
    kind = witness["check"]
    if kind == "lemma1":
        config = EdgeConfig.from_code(top, witness["config_code"])
        i, j = witness["edge"]
        state = _fresh_state(top, config, params)
        d = linalg.delta(state, i, j)
        added = config.copy()
        added.bits[top.edge_index(i, j)] = 1
        state2 = _fresh_state(top, added, params)
        if witness["identity"] == "determinant_update":
            return abs((state2.logdet_sigma - state.logdet_sigma)
                       + math.log1p(params.beta * d))
        return linalg.delta_prime_identity_check(
            d, linalg.delta(state2, i, j), params.beta)
    if kind == "lemma2":
        config = EdgeConfig.from_code(top, witness["config_code"])
        i, j = witness["edge"]
        state = _fresh_state(top, config, params)
        sig = state.sigma.copy()
        d_ij = linalg.delta(state, i, j)
        updated = state.copy()
        linalg.rank_one_add(updated, i, j, params.beta)
        added = config.copy()
        added.bits[top.edge_index(i, j)] = 1
        fresh = _fresh_state(top, added, params)
        if witness["identity"] == "sigma_update":
            return float(np.max(np.abs(updated.sigma - fresh.sigma)))
        k, l = witness["pair"]
        d_kl = float(sig[k, k] + sig[l, l] - 2.0 * sig[k, l])
        corr = sig[k, i] - sig[k, j] - sig[l, i] + sig[l, j]
        predicted = d_kl - params.beta / (1.0 + params.beta * d_ij) * corr**2
        return abs(linalg.delta(fresh, k, l) - predicted)
    if kind == "prop2":
        table = oracle.enumerate_measure(top, params)
        config = EdgeConfig.from_code(top, witness["config_code"])
        i, j = witness["edge"]
        state = _fresh_state(top, config, params)
        p_closed = model.one_edge_conditional(state, i, j, params.beta)
        return abs(p_closed - oracle.conditional_from_table(table, i, j, config))
    if kind == "fkg_lattice":
        table = oracle.enumerate_measure(top, params)
        a = witness["config_code_a"]
        b = witness["config_code_b"]
        return float(table.probs[a | b] * table.probs[a & b]
                     - table.probs[a] * table.probs[b])
    if kind == "fkg_association":
        table = oracle.enumerate_measure(top, params)
        bits = oracle.bits_of_codes(
            np.arange(table.n_configs, dtype=np.uint64), top.n)
        funcs = dict(_increasing_functions(top.n))
        fv = funcs[witness["f"]](bits)
        gv = funcs[witness["g"]](bits)
        p = table.probs
        return float(p @ (fv * gv) - (p @ fv) * (p @ gv))
    if kind == "monotone_nested":
        small = _top_from_payload(witness["topology_small"])
        big = _top_from_payload(witness["topology_big"])
        events = dict(default_increasing_events(witness["n_prefix"]))
        ev = events[witness["event"]]
        lo = _event_probs_over_prefix(
            oracle.enumerate_measure(small, params), witness["n_prefix"], ev)
        hi = _event_probs_over_prefix(
            oracle.enumerate_measure(big, params), witness["n_prefix"], ev)
        return hi - lo
    if kind == "variance_monotone":
        lo = EdgeConfig.from_code(top, witness["config_code_lo"])
        hi = EdgeConfig.from_code(top, witness["config_code_hi"])
        s_lo = _fresh_state(top, lo, params).sigma
        s_hi = _fresh_state(top, hi, params).sigma
        diag_margin = float(np.min(np.diagonal(s_lo) - np.diagonal(s_hi)))
        gap_lo = (np.diagonal(s_lo)[:, None] + np.diagonal(s_lo)[None, :]
                  - 2.0 * s_lo)
        gap_hi = (np.diagonal(s_hi)[:, None] + np.diagonal(s_hi)[None, :]
                  - 2.0 * s_hi)
        off = ~np.eye(top.m, dtype=bool)
        return min(diag_margin, float(np.min((gap_lo - gap_hi)[off])))
    if kind == "martingale_telescoping":
        config = EdgeConfig.from_code(top, witness["config_code"])
        total, _ = linalg.telescoping_neg_logdet(top, config, params)
        fresh = _fresh_state(top, config, params)
        return abs(total - (-fresh.logdet_sigma))
    raise ValidationError(f"unknown witness kind {kind!r}")


SUITE_NAMES = ("lemma1", "lemma2", "prop2", "fkg", "monotone",
               "variance", "martingale")


def run_suite(names: Sequence[str] | None = None, max_edges: int = 6,
              seed: int = 0, trials: int = 200) -> list[CheckReport]:
    """Default suite over the small-graph catalog, run concurrently.

    ``max_edges`` caps the exhaustive parts (enumeration-based checks);
    random-trial checks use graphs of moderate size regardless.
    """
    chosen = tuple(names) if names else SUITE_NAMES
    for name in chosen:
        if name not in SUITE_NAMES:
            raise ValidationError(
                f"unknown check {name!r}; valid: {', '.join(SUITE_NAMES)}")
    rng = np.random.default_rng(seed)
    params = ModelParams(1.0, 1.0)
    jobs: list[tuple[str, Callable[[], CheckReport]]] = []
    if "lemma1" in chosen or "lemma2" in chosen:
        rand_top = random_topology(10, 20, rng)
        if "lemma1" in chosen:
            jobs.append(("lemma1", lambda: check_lemma1(
                rand_top, params, trials=trials, seed=seed + 1)))
        if "lemma2" in chosen:
            jobs.append(("lemma2", lambda: check_lemma2(
                rand_top, params, trials=trials, seed=seed + 2)))
    if "prop2" in chosen:
        for top in catalog(min(max_edges, 12)):
            jobs.append(("prop2", lambda top=top: check_prop2(top, params)))
    if "fkg" in chosen:
        for top in catalog(min(max_edges, 4)):
            jobs.append(("fkg", lambda top=top: check_fkg(top, seed=seed + 3)))
    if "monotone" in chosen:
        for kind in ("path", "star"):
            seq = nested_sequence(kind, list(range(2, max_edges + 2)))
            jobs.append(("monotone", lambda seq=seq: check_monotone_nested(
                seq, params)))
    if "variance" in chosen:
        var_top = random_topology(10, 20, np.random.default_rng(seed + 4))
        jobs.append(("variance", lambda: check_variance_monotone(
            var_top, params, trials=trials, seed=seed + 5)))
    if "martingale" in chosen:
        mart_top = random_topology(8, min(max_edges, 6),
                                   np.random.default_rng(seed + 6))
        jobs.append(("martingale", lambda: check_martingale(
            mart_top, params, trials=trials, seed=seed + 7)))

    with concurrent.futures.ThreadPoolExecutor(worker_count()) as pool:
        futures = [pool.submit(job) for _, job in jobs]
        return [f.result() for f in futures]

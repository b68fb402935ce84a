"""Pure-numpy kernel fallback.

Mirrors the compiled extension operation-for-operation: every floating
point expression here is written so the compiled and pure backends produce
bit-identical results (same multiply/add order, scalar ops through libm).
Keep the two files in sync when touching either.
"""

from __future__ import annotations

import math

import numpy as np

GUARD = 1e-12  # removal-denominator guard shared by both backends


def gap_outer_update(sigma: np.ndarray, i: int, j: int, c: float) -> None:
    """In-place symmetric rank-1 update ``sigma += c * u u^T`` where
    ``u = sigma[:, i] - sigma[:, j]`` (taken before the update)."""
    u = sigma[:, i] - sigma[:, j]
    sigma += c * np.outer(u, u)


def edge_sweep(sigma, bits, ei, ej, beta, uniforms, order, logdet_io):
    """One heat-bath sweep over edges in ``order``.

    For each visited edge: if present, undo it with the exact inverse
    rank-1 update; draw the new status from the one-edge conditional
    1/(1 + sqrt(1 + beta*delta)); re-apply if drawn present.  ``sigma``,
    ``bits`` and ``logdet_io[0]`` are updated in place.

    Returns the number of rank-1 updates applied.  Raises ArithmeticError
    if the removal guard trips (caller refreshes and retries).
    """
    ops = 0
    logdet = float(logdet_io[0])
    for t in range(order.shape[0]):
        k = int(order[t])
        i = int(ei[k])
        j = int(ej[k])
        if bits[k]:
            d1 = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
            denom = 1.0 - beta * d1
            if denom <= GUARD:
                logdet_io[0] = logdet
                raise ArithmeticError(
                    f"removal guard tripped at edge {k}: 1 - beta*delta = {denom}"
                )
            u = sigma[:, i] - sigma[:, j]
            sigma += (beta / denom) * np.outer(u, u)
            logdet -= math.log(denom)
            bits[k] = 0
            ops += 1
        d = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
        q = 1.0 / (1.0 + math.sqrt(1.0 + beta * d))
        if uniforms[t] < q:
            u = sigma[:, i] - sigma[:, j]
            sigma += (-(beta / (1.0 + beta * d))) * np.outer(u, u)
            logdet -= math.log1p(beta * d)
            bits[k] = 1
            ops += 1
    logdet_io[0] = logdet
    return ops


def gray_logdets(sigma, ei, ej, beta, logdet0, out):
    """Fill ``out[code] = logdet_sigma(config(code))`` for all 2^n codes by
    walking configurations in Gray-code order, one rank-1 update per step.

    ``sigma`` must enter as the covariance of the all-zero configuration
    and is clobbered.
    """
    n = int(ei.shape[0])
    total = 1 << n
    bits = np.zeros(n, dtype=np.uint8)
    logdet = float(logdet0)
    out[0] = logdet
    g = 0
    for k in range(1, total):
        b = (k & -k).bit_length() - 1
        i = int(ei[b])
        j = int(ej[b])
        if bits[b]:
            d1 = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
            denom = 1.0 - beta * d1
            if denom <= GUARD:
                raise ArithmeticError(
                    f"removal guard tripped in Gray walk at step {k}"
                )
            u = sigma[:, i] - sigma[:, j]
            sigma += (beta / denom) * np.outer(u, u)
            logdet -= math.log(denom)
            bits[b] = 0
        else:
            d = sigma[i, i] + sigma[j, j] - 2.0 * sigma[i, j]
            u = sigma[:, i] - sigma[:, j]
            sigma += (-(beta / (1.0 + beta * d))) * np.outer(u, u)
            logdet -= math.log1p(beta * d)
            bits[b] = 1
        g ^= 1 << b
        out[g] = logdet

"""Model parameters (split out so the linear-algebra layer can use them
without importing the densities module)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

#: Lower bound enforced on alpha; keeps every precision matrix uniformly PD.
ALPHA_MIN = 1e-8


@dataclass(frozen=True)
class ModelParams:
    """alpha > 0 scales the node-attribute precision; beta >= 0 is the
    edge-coupling strength."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha >= ALPHA_MIN):
            raise ValidationError(
                f"alpha must be a finite value >= {ALPHA_MIN}, got {self.alpha}"
            )
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise ValidationError(f"beta must be finite and >= 0, got {self.beta}")

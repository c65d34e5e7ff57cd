"""Termination rule shared by every solver: mixed absolute/relative residual
tolerance with a hard iteration cap."""

from dataclasses import dataclass

import numpy as np

CONTINUE = "continue"
CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class StoppingConfig:
    tau_a: float = 1e-6
    tau_r: float = 1e-8
    max_iterations: int = 100_000

    def __post_init__(self):
        if self.tau_a < 0 or self.tau_r < 0 or (self.tau_a == 0 and self.tau_r == 0):
            raise ValueError("tolerances must be nonnegative and not both zero")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def should_stop(r, r0_norm, k, cfg):
    """Decide at the loop head: converged beats the iteration cap."""
    if np.linalg.norm(r) <= cfg.tau_a + cfg.tau_r * r0_norm:
        return CONVERGED
    if k >= cfg.max_iterations:
        return MAX_ITERATIONS
    return CONTINUE

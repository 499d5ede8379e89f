"""Per-direction binary linear classifiers trained online.

A regressor keeps a dense weight vector of length d+1 whose final slot
is the bias (equivalent to a constant 1 feature on every example). The
routing margin is the logistic of the raw score, so "margin > 0.5" and
"raw score > 0" agree exactly. Training takes one cross-entropy gradient
step per call: plain SGD touches only the example's support, Nesterov
momentum additionally decays previously touched coordinates (applied
lazily in closed form so the update stays sparse).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .sparse import SparseVector

STEP_SIZE_RANGE = (0.001, 1.0)


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "nag"  # "sgd" or "nag"
    step_size: float = 0.1
    momentum: float = 0.9

    def __post_init__(self):
        if self.kind not in ("sgd", "nag"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if not 0.0 <= self.step_size <= STEP_SIZE_RANGE[1]:
            raise ValueError(f"step_size {self.step_size} outside [0, 1]")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum {self.momentum} outside [0, 1)")

    @property
    def opt_code(self) -> int:
        return 0 if self.kind == "sgd" else 1


class LinearRegressor:
    """One direction classifier; owned by a single node while training."""

    def __init__(self, d: int, weights: np.ndarray | None = None, init_scale: float = 0.0,
                 rng: np.random.Generator | None = None):
        self.d = d
        if weights is not None:
            self.weights = np.ascontiguousarray(weights, dtype=np.float64)
            if len(self.weights) < d + 1:
                raise ValueError("weights must have length >= d+1 (bias slot)")
        elif init_scale > 0.0:
            self.weights = (rng or np.random.default_rng()).uniform(-init_scale, init_scale, d + 1)
        else:
            self.weights = np.zeros(d + 1, dtype=np.float64)
        self.velocity = np.zeros_like(self.weights)
        self._last = np.zeros(len(self.weights), dtype=np.int64)
        self._steps = 0

    def raw_score(self, x: SparseVector) -> float:
        return kernels.dot_bias(x.indices, x.values, self.weights)

    def margin(self, x: SparseVector) -> float:
        """Logistic margin in (0, 1); routing test is margin > 0.5."""
        return kernels.margin(x.indices, x.values, self.weights)

    def loss(self, x: SparseVector, target: int) -> float:
        """Binary cross-entropy of the current margin against target."""
        p = self.margin(x)
        return -(target * math.log(p) + (1 - target) * math.log(1.0 - p))

    def gradient_scale(self, x: SparseVector, target: int) -> float:
        """d(loss)/d(raw score) = margin - target; gradient is this times
        the example extended with the constant bias feature."""
        return self.margin(x) - target

    def train_step(self, x: SparseVector, target: int, cfg: OptimizerConfig) -> None:
        if target not in (0, 1):
            raise ValueError("target must be 0 or 1")
        if cfg.kind == "sgd":
            kernels.sgd_step(self.weights, x.indices, x.values, float(target), cfg.step_size)
        else:
            self._steps = kernels.nag_step(
                self.weights, self.velocity, self._last, self._steps,
                x.indices, x.values, float(target), cfg.step_size, cfg.momentum,
            )

    def finalize(self, cfg: OptimizerConfig) -> None:
        """Flush lazy momentum decay; call when training is done."""
        if cfg.kind == "nag" and self._steps > 0:
            kernels.nag_finalize(self.weights, self.velocity, self._last,
                                 self._steps, cfg.momentum)

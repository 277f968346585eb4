"""Differential privacy for peer-shared model updates.

Updates are clipped to L2 norm Q and perturbed with i.i.d. Gaussian noise
calibrated for (epsilon, delta)-DP:

    sigma = Q * sqrt(2 * ln(1.25 / delta)) / epsilon

Only the peer-evaluation channel sees privatized updates; the aggregation
channel carries the raw update (enforced by the federation orchestrator).
The module also evaluates worst-case error bounds for the downstream
quantities that consume privatized updates: peer feedback, reputation
scores, selection probabilities, and the aggregate-model loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DpParams:
    clip_norm: float = 1.0
    epsilon: float = 1.0
    delta: float = 1e-5

    def __post_init__(self):
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class BoundInputs:
    """Constants entering the error bounds.

    ``lipschitz`` is the accuracy functional's Lipschitz constant (measured
    empirically in practice), ``rs_max`` the score ceiling, ``s_min`` a lower
    bound on a cluster's total reputation mass, ``theta_max`` the largest
    update norm, ``smoothness`` the aggregate loss smoothness constant.
    """

    lipschitz: float = 1.0
    dim: int = 1
    learning_rate: float = 1.0
    n_peers: int = 1
    rs_max: float = 1.0
    s_min: float = 1.0
    cluster_size: int = 1
    theta_max: float = 1.0
    smoothness: float = 1.0

    def __post_init__(self):
        if min(self.lipschitz, self.dim, self.n_peers, self.rs_max,
               self.cluster_size, self.theta_max, self.smoothness) <= 0:
            raise ValueError("bound inputs must be strictly positive")
        if self.learning_rate < 0 or self.s_min < 0:
            raise ValueError("learning_rate and s_min must be non-negative")


def clip(update: np.ndarray, clip_norm: float) -> np.ndarray:
    """Rescale to L2 norm at most clip_norm, preserving direction."""
    if clip_norm <= 0:
        raise ValueError("clip_norm must be positive")
    update = np.asarray(update, dtype=float)
    norm = float(np.linalg.norm(update))
    if norm <= clip_norm:
        return update.copy()
    return update * (clip_norm / norm)


def gaussian_sigma(params: DpParams) -> float:
    """Noise scale of the Gaussian mechanism for these parameters."""
    return (params.clip_norm
            * math.sqrt(2.0 * math.log(1.25 / params.delta))
            / params.epsilon)


def privatize(update: np.ndarray, params: DpParams,
              rng: np.random.Generator, sigma: float | None = None
              ) -> np.ndarray:
    """Clip then add i.i.d. Gaussian noise per coordinate.

    ``sigma`` overrides the calibrated scale (test hook; 0 disables noise).
    """
    clipped = clip(update, params.clip_norm)
    if sigma is None:
        sigma = gaussian_sigma(params)
    if sigma == 0.0:
        return clipped
    return clipped + rng.normal(0.0, sigma, clipped.shape[0])


def feedback_error_bound(b: BoundInputs, p: DpParams) -> float:
    """Expected feedback perturbation: lipschitz * sqrt(dim) * sigma."""
    return b.lipschitz * math.sqrt(b.dim) * gaussian_sigma(p)


def reputation_error_bound(b: BoundInputs, p: DpParams) -> float:
    """Per-round reputation-score error from privatized feedback."""
    return (b.learning_rate * b.n_peers * b.rs_max
            * feedback_error_bound(b, p))


def selection_error_bound(b: BoundInputs, p: DpParams) -> float:
    """Selection-probability error given a reputation-mass floor."""
    if b.s_min == 0:
        raise ValueError("degenerate reputation mass")
    return (reputation_error_bound(b, p) / b.s_min
            * (1.0 + b.cluster_size * b.rs_max / b.s_min))


def loss_increase_bound(b: BoundInputs, p: DpParams) -> float:
    """Aggregate-model loss increase under a smooth cluster loss."""
    shift = b.cluster_size * b.theta_max * selection_error_bound(b, p)
    return 0.5 * b.smoothness * shift ** 2


def estimate_lipschitz(fn, theta: np.ndarray, n_probes: int,
                       probe_sigma: float, rng: np.random.Generator) -> float:
    """Empirical Lipschitz surrogate of a scalar functional around theta.

    Probes with Gaussian perturbations shaped like the privacy noise and
    returns the largest observed |delta fn| / ||delta theta||.
    """
    theta = np.asarray(theta, dtype=float)
    base = fn(theta)
    worst = 0.0
    for _ in range(n_probes):
        step = rng.normal(0.0, probe_sigma, theta.shape[0])
        norm = float(np.linalg.norm(step))
        if norm == 0.0:
            continue
        worst = max(worst, abs(fn(theta + step) - base) / norm)
    return worst

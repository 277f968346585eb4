"""Ramp-up adversaries that corrupt client contributions.

A node behaves honestly for ``t_honest`` rounds, then injects noise whose
magnitude ramps linearly over ``t_ramp`` rounds up to ``eps_max``. The base
attack adds a fixed zero-sum direction scaled by the ramp; stochastic
variants draw from one of several noise families with the ramp value as
scale parameter. The static-bias attack shifts every coordinate by a
constant once the honest phase ends, ignoring the ramp.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

DISTRIBUTIONS = ("ramp", "gaussian", "uniform", "poisson", "laplace",
                 "speckle", "cauchy", "static_bias")
TARGETS = ("model_update", "reputation_message", "both")

SPECKLE_PROBABILITY = 0.05
SPECKLE_SALT_FACTOR = 3.0
CAUCHY_CLIP = 10.0


@dataclass(frozen=True)
class AdversaryProfile:
    t_honest: int = 5
    t_ramp: int = 10
    eps_max: float = 0.2
    distribution: str = "ramp"
    direction: np.ndarray | None = None
    bias: float = 0.1
    target: str = "model_update"

    def __post_init__(self):
        if self.t_honest < 0:
            raise ValueError("t_honest must be non-negative")
        if self.t_ramp < 1:
            raise ValueError("t_ramp must be at least 1")
        if self.eps_max <= 0:
            raise ValueError("eps_max must be positive")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.direction is not None:
            object.__setattr__(
                self, "direction",
                np.asarray(self.direction, dtype=float).ravel())


def noise_scale(t: int, profile: AdversaryProfile) -> float:
    """Ramp value at round t: 0 while honest, then linear up to eps_max."""
    if t < profile.t_honest:
        return 0.0
    return min((t - profile.t_honest) / profile.t_ramp, profile.eps_max)


def assign_directions(n_adversaries: int, dim: int,
                      seed: int) -> list[np.ndarray]:
    """Random near-unit directions whose sum is exactly the zero vector.

    Vectors are centered and then rescaled by a common factor (their mean
    norm), which keeps the zero-sum exact; per-vector norms are ~1 and
    exactly 1 for two adversaries. A single adversary can only satisfy the
    constraint with the zero vector, which is returned with a warning.
    """
    if n_adversaries < 1:
        raise ValueError("need at least one adversary")
    if n_adversaries == 1:
        warnings.warn("single adversary: zero-sum forces a zero direction")
        return [np.zeros(dim)]
    from .seeding import derive_rng
    rng = derive_rng(seed, "adversary-directions")
    raw = rng.normal(size=(n_adversaries, dim))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    centered = raw - raw.mean(axis=0)
    scale = np.linalg.norm(centered, axis=1).mean()
    centered /= scale
    centered -= centered.mean(axis=0)   # squash accumulated rounding
    return [centered[i] for i in range(n_adversaries)]


def sample_noise(distribution: str, scale: float, size: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Additive noise draw for the stochastic families, scale = ramp value."""
    if distribution == "gaussian":
        return rng.normal(0.0, scale, size)
    if distribution == "uniform":
        return rng.uniform(-scale, scale, size)
    if distribution == "poisson":
        return rng.poisson(scale, size).astype(float)
    if distribution == "laplace":
        return rng.laplace(0.0, scale, size)
    if distribution == "cauchy":
        return np.clip(rng.standard_cauchy(size), -CAUCHY_CLIP,
                       CAUCHY_CLIP) * scale
    raise ValueError(f"{distribution!r} has no additive sampler")


def perturb(honest: np.ndarray, t: int, profile: AdversaryProfile,
            rng: np.random.Generator) -> np.ndarray:
    """Corrupted copy of an honest contribution at round t.

    Identity during the honest phase. The ramp attack adds scale * direction;
    speckle zeroes or inflates a random coordinate subset; static_bias adds
    the constant bias to every coordinate once t >= t_honest.
    """
    honest = np.asarray(honest, dtype=float)
    out = honest.copy()
    if profile.distribution == "static_bias":
        if t >= profile.t_honest:
            out += profile.bias
        return out
    scale = noise_scale(t, profile)
    if scale == 0.0:
        return out
    if profile.distribution == "ramp":
        if profile.direction is None:
            raise ValueError("ramp attack requires a direction vector")
        if profile.direction.shape[0] != out.shape[0]:
            raise ValueError("direction dimension mismatch")
        return out + scale * profile.direction
    if profile.distribution == "speckle":
        hit = rng.uniform(size=out.shape[0]) < SPECKLE_PROBABILITY
        salt = rng.uniform(size=out.shape[0]) < 0.5
        out[hit & salt] += SPECKLE_SALT_FACTOR * scale
        out[hit & ~salt] = 0.0
        return out
    return out + sample_noise(profile.distribution, scale, out.shape[0], rng)

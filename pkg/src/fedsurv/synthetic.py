"""Synthetic multi-center survival data.

Each center gets the shared feature block plus a seeded random subset of the
remaining global features. Covariate entries are i.i.d. N(0, 1/p) with p the
center's feature count, so E||x||^2 = 1. Event times follow an exponential
proportional-hazards law; censoring times are uniform on a per-patient range
scaled to hit a target censoring fraction. Missingness is MCAR: a fraction of
columns is selected, each gets an independent uniform missing rate, and cells
are masked independently of all values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import ClientDataset, make_dataset
from .seeding import derive_rng

CENSOR_RATE_TOLERANCE = 0.02


@dataclass(frozen=True)
class GenerationConfig:
    n_centers: int = 10
    patients_per_center: int = 500
    global_features: int = 50
    shared_features: int = 10
    local_feature_count: int = 20
    missing_fraction: float = 0.3
    missing_low: float = 0.3
    missing_high: float = 0.6
    censor_rate: float = 0.4
    true_beta: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.n_centers, self.patients_per_center,
               self.global_features, self.shared_features,
               self.local_feature_count) <= 0:
            raise ValueError("counts must be positive")
        if not (self.shared_features <= self.local_feature_count
                <= self.global_features):
            raise ValueError(
                "need shared_features <= local_feature_count <= global_features")
        if not 0.0 <= self.missing_fraction <= 1.0:
            raise ValueError("missing_fraction must lie in [0, 1]")
        if not 0.0 <= self.missing_low <= self.missing_high <= 1.0:
            raise ValueError("missing range must satisfy 0 <= low <= high <= 1")
        if not 0.0 < self.censor_rate < 1.0:
            raise ValueError("censor_rate must lie in (0, 1)")
        if self.true_beta is not None:
            beta = tuple(float(b) for b in self.true_beta)
            if len(beta) != self.global_features:
                raise ValueError("true_beta length must equal global_features")
            object.__setattr__(self, "true_beta", beta)


@dataclass(frozen=True)
class OutcomeMeta:
    """Tuning record for one center's censoring draw."""

    censor_scale: float
    achieved_censor_rate: float


def global_feature_names(n_features: int) -> tuple[str, ...]:
    width = max(2, len(str(n_features - 1)))
    return tuple(f"f{i:0{width}d}" for i in range(n_features))


def default_true_beta(config: GenerationConfig,
                      shared_scale: float = 1.0,
                      other_scale: float = 0.25) -> tuple[float, ...]:
    """Alternating-sign effects: strong on shared features, weak elsewhere."""
    beta = []
    for i in range(config.global_features):
        scale = shared_scale if i < config.shared_features else other_scale
        beta.append(scale if i % 2 == 0 else -scale)
    return tuple(beta)


def resolve_true_beta(config: GenerationConfig) -> np.ndarray:
    if config.true_beta is not None:
        return np.asarray(config.true_beta, dtype=float)
    return np.asarray(default_true_beta(config))


def _center_features(config: GenerationConfig, center: int) -> tuple[str, ...]:
    names = global_feature_names(config.global_features)
    shared = list(range(config.shared_features))
    pool = np.arange(config.shared_features, config.global_features)
    extra_count = config.local_feature_count - config.shared_features
    rng = derive_rng(config.seed, "features", center)
    extras = sorted(rng.choice(pool, size=extra_count, replace=False))
    return tuple(names[i] for i in shared + [int(e) for e in extras])


def generate_centers(config: GenerationConfig) -> list[ClientDataset]:
    """Draw per-center covariate matrices (outcomes left at zero)."""
    out = []
    for center in range(config.n_centers):
        names = _center_features(config, center)
        p = len(names)
        rng = derive_rng(config.seed, "covariates", center)
        cov = rng.normal(0.0, 1.0 / math.sqrt(p),
                         size=(config.patients_per_center, p))
        out.append(make_dataset(cov, np.zeros(len(cov)),
                                np.zeros(len(cov), dtype=int), names))
    return out


def observe(latent: np.ndarray, censor: np.ndarray
            ) -> tuple[np.ndarray, np.ndarray]:
    """Right-censored observation: min(latent, censor) and the event flag."""
    observed = np.minimum(latent, censor)
    flag = (latent <= censor).astype(int)
    return observed, flag


def generate_outcomes(data: ClientDataset, true_beta, censor_rate: float,
                      seed: int) -> tuple[ClientDataset, OutcomeMeta]:
    """Draw event and censoring times for one center.

    ``true_beta`` must already be aligned to the center's feature columns.
    Latent times are exponential with rate exp(beta . x); censoring times are
    uniform on (0, scale * ln2 / exp(beta . x)) with the scale bisected until
    the realized censoring fraction is within 0.02 of the target.
    """
    beta = np.asarray(true_beta, dtype=float).ravel()
    if beta.shape[0] != data.n_features:
        raise ValueError("true_beta not aligned to center features")
    rng = derive_rng(seed, "outcomes")
    n = data.n_patients
    eta = data.covariates @ beta
    rate = np.exp(eta)
    latent = -np.log(rng.uniform(size=n)) / rate
    censor_base = math.log(2.0) / rate          # per-patient median latent time
    censor_frac = rng.uniform(size=n)

    def realized(scale: float) -> float:
        return float(np.mean(latent > scale * censor_base * censor_frac))

    lo, hi = 1e-9, 1e9
    best_scale, best_rate = 1.0, realized(1.0)
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        r = realized(mid)
        if abs(r - censor_rate) < abs(best_rate - censor_rate):
            best_scale, best_rate = mid, r
        if r > censor_rate:
            lo = mid          # too much censoring: lengthen the window
        else:
            hi = mid
        if abs(r - censor_rate) <= CENSOR_RATE_TOLERANCE / 4:
            break
    if abs(best_rate - censor_rate) > CENSOR_RATE_TOLERANCE:
        raise ValueError(
            f"target censor rate {censor_rate} unreachable; "
            f"achieved {best_rate:.4f}")
    censor = best_scale * censor_base * censor_frac
    observed, flag = observe(latent, censor)
    return (replace(data, event_time=observed, event_flag=flag),
            OutcomeMeta(best_scale, best_rate))


def apply_missingness(data: ClientDataset, fraction: float, low: float,
                      high: float, seed: int
                      ) -> tuple[ClientDataset, dict[str, float]]:
    """Mask cells MCAR; returns the dataset and the drawn per-column rates.

    A fraction of columns (rounded half-up) is chosen uniformly; each gets a
    missing rate drawn Uniform[low, high] and its cells are masked i.i.d.
    """
    if not 0.0 <= fraction <= 1.0 or not 0.0 <= low <= high <= 1.0:
        raise ValueError("invalid missingness parameters")
    rng = derive_rng(seed, "missingness")
    n_cols = math.floor(fraction * data.n_features + 0.5)
    chosen = rng.choice(data.n_features, size=n_cols, replace=False)
    mask = data.missing_mask.copy()
    drawn: dict[str, float] = {}
    for col in sorted(int(c) for c in chosen):
        col_rate = float(rng.uniform(low, high))
        drawn[data.feature_names[col]] = col_rate
        mask[:, col] |= rng.uniform(size=data.n_patients) < col_rate
    cov = data.covariates.copy()
    cov[mask] = np.nan
    return replace(data, covariates=cov, missing_mask=mask), drawn


def completeness_vector(data: ClientDataset,
                        global_feature_list) -> np.ndarray:
    """Fraction of observed values per global feature; 0 for absent ones."""
    out = np.zeros(len(global_feature_list))
    index = {name: j for j, name in enumerate(data.feature_names)}
    for k, name in enumerate(global_feature_list):
        j = index.get(name)
        if j is not None:
            out[k] = 1.0 - float(data.missing_mask[:, j].mean())
    return out


def generate_universe(config: GenerationConfig
                      ) -> tuple[list[ClientDataset], list[dict]]:
    """Full pipeline per center: covariates, outcomes, then missingness."""
    names = global_feature_names(config.global_features)
    beta_global = resolve_true_beta(config)
    beta_by_name = dict(zip(names, beta_global))
    clients = []
    metadata = []
    for center, data in enumerate(generate_centers(config)):
        beta_local = np.array([beta_by_name[n] for n in data.feature_names])
        data, outcome_meta = generate_outcomes(
            data, beta_local, config.censor_rate,
            seed=_center_seed(config.seed, center, "outcome"))
        data, drawn = apply_missingness(
            data, config.missing_fraction, config.missing_low,
            config.missing_high,
            seed=_center_seed(config.seed, center, "missing"))
        clients.append(data)
        metadata.append({
            "center": center,
            "features": list(data.feature_names),
            "censor_scale": outcome_meta.censor_scale,
            "achieved_censor_rate": outcome_meta.achieved_censor_rate,
            "missing_rates": drawn,
        })
    return clients, metadata


def generate_cohort(config: GenerationConfig, n_patients: int,
                    tag: str = "eval") -> ClientDataset:
    """A complete cohort over all global features from the same law."""
    names = global_feature_names(config.global_features)
    p = len(names)
    rng = derive_rng(config.seed, tag, "covariates")
    cov = rng.normal(0.0, 1.0 / math.sqrt(p), size=(n_patients, p))
    data = make_dataset(cov, np.zeros(n_patients),
                        np.zeros(n_patients, dtype=int), names)
    data, _ = generate_outcomes(data, resolve_true_beta(config),
                                config.censor_rate,
                                seed=derive_rng(config.seed, tag, "seed")
                                .integers(2**31))
    return data


def _center_seed(seed: int, center: int, purpose: str) -> int:
    return int(derive_rng(seed, purpose, center).integers(2**31))

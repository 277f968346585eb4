"""Round-based orchestration of reputation-weighted federated training.

Hybrid communication: raw local updates go to the server for aggregation;
privatized copies go to cluster peers for feedback. Per round: participants
are sampled per cluster proportional to reputation, selected clients refit
locally from the cluster model, adversaries corrupt their contributions,
feedback is exchanged on scheduled rounds and reputation updated, and each
cluster model becomes the selection-weighted mean of the selected updates.

Two baselines run through the same loop: plain federated averaging (uniform
weights, no reputation traffic, no peer channel) and a simplified stand-in
for reputation-weighted consensus aggregation, where the server keeps one
beta-opinion per client driven by the sign of that client's leave-one-out
contribution to held-out concordance. The stand-in is labeled a proxy in
all outputs and carries none of the original system's consensus machinery.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .adversary import AdversaryProfile, assign_directions, perturb
from .clustering import (ClientSummary, ClusterAssignment, cluster_clients,
                         subsample_summary)
from .concordance import concordance_index
from .cox import (FitConfig, FitDivergedError, MonotoneLikelihoodError,
                  aligned_coefficients, fit_coxph)
from .datasets import ClientDataset, mean_impute
from .privacy import DpParams, clip, gaussian_sigma
from .reputation import (Feedback, ReputationMatrix, compute_feedback,
                         selection_probabilities, update_scores)
from .seeding import derive_rng
from .synthetic import (GenerationConfig, completeness_vector,
                        generate_cohort, generate_universe,
                        global_feature_names)

logger = logging.getLogger(__name__)

METHODS = ("ours", "fedavg", "tffl_proxy")


@dataclass(frozen=True)
class FederationSettings:
    rounds: int = 100
    n_clusters: int = 2
    concordance_weight: float = 0.1
    reputation_lr: float = 0.1
    update_frequency: int | None = 1
    participation_fraction: float = 0.8
    score_max: float = 10.0
    method: str = "ours"
    data_growth: bool = False
    train_all: bool = False
    recluster_every: int = 0
    validation_fraction: float = 0.2
    eval_patients: int = 2000
    cluster_restarts: int = 12
    cluster_subsample: int = 100
    workers: int = 1
    attack_features: bool = False
    fit: FitConfig = FitConfig(ridge_penalty=1e-3, max_iterations=50)

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.participation_fraction <= 1.0:
            raise ValueError("participation_fraction must lie in (0, 1]")
        if self.update_frequency is not None and self.update_frequency < 1:
            raise ValueError("update_frequency must be >= 1 (or None)")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class PrivacySettings:
    params: DpParams = DpParams()
    enabled: bool = True
    per_peer_noise: bool = False


@dataclass
class ClientContext:
    client_id: int
    raw_data: ClientDataset
    train: ClientDataset
    validation: ClientDataset
    train_order: np.ndarray
    adversary: AdversaryProfile | None
    theta: np.ndarray


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    global_c_index: float
    per_node_reputation: dict[int, float]
    messages_sent: int
    selected_clients: tuple[int, ...]

    def __post_init__(self):
        if not 0.0 <= self.global_c_index <= 1.0:
            raise ValueError("c-index out of [0, 1]")
        if self.messages_sent < 0:
            raise ValueError("negative message count")


@dataclass
class FederationState:
    round: int
    feature_union: tuple[str, ...]
    global_models: dict[int, np.ndarray]
    reputation: ReputationMatrix
    assignment: ClusterAssignment
    clients: list[ClientContext]
    eval_data: ClientDataset
    metrics_log: list[RoundMetrics] = field(default_factory=list)
    reputation_history: list[tuple[int, np.ndarray]] = field(
        default_factory=list)
    per_client_messages: np.ndarray | None = None
    tffl_positive: np.ndarray | None = None
    tffl_negative: np.ndarray | None = None
    channel_audit: list[dict] = field(default_factory=list)
    seed: int = 0


def aggregate_weighted(updates, weights) -> np.ndarray:
    """Weighted mean of aligned update vectors."""
    if len(updates) != len(weights):
        raise ValueError("one weight per update required")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    total = float(weights.sum())
    if total == 0.0:
        raise ValueError("weights must not all be zero")
    stacked = np.vstack(updates)
    return (weights[:, None] * stacked).sum(axis=0) / total


def message_overhead(cluster_sizes, total_time: int, frequency: int | None
                     ) -> int:
    """Total reputation messages: per client (|C|-1) * floor(T / f)."""
    if frequency is None:
        return 0
    if frequency < 1:
        raise ValueError("frequency must be >= 1")
    exchanges = total_time // frequency
    return sum(size * (size - 1) * exchanges for size in cluster_sizes)


def _split_client(data: ClientDataset, validation_fraction: float,
                  seed: int, client_id: int
                  ) -> tuple[ClientDataset, ClientDataset, np.ndarray]:
    rng = derive_rng(seed, "split", client_id)
    order = rng.permutation(data.n_patients)
    n_val = max(1, round(validation_fraction * data.n_patients))
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    train = data.subset(train_idx)
    rng_order = derive_rng(seed, "growth-order", client_id)
    growth_order = rng_order.permutation(train.n_patients)
    return train, data.subset(val_idx), growth_order


def _pilot_theta(ctx: ClientContext, union, fit_config: FitConfig
                 ) -> np.ndarray:
    try:
        model = fit_coxph(ctx.train, config=fit_config)
        return aligned_coefficients(model.coefficients,
                                    ctx.train.feature_names, union)
    except (ValueError, FitDivergedError, MonotoneLikelihoodError) as exc:
        logger.warning("client %d pilot fit failed (%s); starting from zero",
                       ctx.client_id, exc)
        return np.zeros(len(union))


def _build_summaries(clients, union, settings, seed) -> list[ClientSummary]:
    summaries = []
    for ctx in clients:
        completeness = completeness_vector(ctx.raw_data, union)
        risk = ctx.train.covariates @ aligned_coefficients(
            ctx.theta, union, ctx.train.feature_names)
        summaries.append(subsample_summary(
            completeness, risk, ctx.train.event_time, ctx.train.event_flag,
            max_patients=settings.cluster_subsample,
            seed=int(derive_rng(seed, "summary", ctx.client_id)
                     .integers(2**31))))
    return summaries


def initialize(generation: GenerationConfig, settings: FederationSettings,
               privacy: PrivacySettings,
               adversaries: dict[int, AdversaryProfile],
               seed: int) -> FederationState:
    """Set up clients, adversary directions, clustering and flat reputation."""
    datasets, _ = generate_universe(generation)
    union = global_feature_names(generation.global_features)
    n = len(datasets)
    for cid in adversaries:
        if not 0 <= cid < n:
            raise ValueError(f"adversary client {cid} out of range")

    # zero-sum directions for ramp attackers that lack an explicit one
    need_dir = sorted(cid for cid, prof in adversaries.items()
                      if prof.distribution == "ramp" and prof.direction is None)
    if need_dir:
        directions = assign_directions(len(need_dir), len(union), seed)
        for cid, direction in zip(need_dir, directions):
            adversaries[cid] = replace(adversaries[cid], direction=direction)

    clients = []
    for cid, raw in enumerate(datasets):
        imputed = mean_impute(raw)
        train, validation, growth_order = _split_client(
            imputed, settings.validation_fraction, seed, cid)
        clients.append(ClientContext(
            client_id=cid, raw_data=raw, train=train, validation=validation,
            train_order=growth_order, adversary=adversaries.get(cid),
            theta=np.zeros(len(union))))
    for ctx in clients:
        ctx.theta = _pilot_theta(ctx, union, settings.fit)

    summaries = _build_summaries(clients, union, settings, seed)
    assignment = cluster_clients(
        summaries, settings.n_clusters, settings.concordance_weight,
        seed=seed, restarts=settings.cluster_restarts)

    eval_data = generate_cohort(generation, settings.eval_patients)
    state = FederationState(
        round=0,
        feature_union=union,
        global_models={c: np.zeros(len(union))
                       for c in assignment.clusters()},
        reputation=ReputationMatrix(n, score_max=settings.score_max),
        assignment=assignment,
        clients=clients,
        eval_data=eval_data,
        per_client_messages=np.zeros(n, dtype=int),
        tffl_positive=np.zeros(n, dtype=int),
        tffl_negative=np.zeros(n, dtype=int),
        seed=seed,
    )
    state.metrics_log.append(_round_metrics(state, 0, 0, ()))
    state.reputation_history.append((0, state.reputation.values.copy()))
    return state


def _eval_c_index(state: FederationState, coeffs: np.ndarray) -> float:
    scores = state.eval_data.covariates @ coeffs
    return concordance_index(scores, state.eval_data.event_time,
                             state.eval_data.event_flag)


def _round_metrics(state, round_index, messages, selected) -> RoundMetrics:
    clusters = state.assignment.clusters()
    masses, values = [], []
    for c, ids in sorted(clusters.items()):
        model = state.global_models.get(c)
        if model is None:
            continue
        agg = state.reputation.aggregate(ids)
        masses.append(sum(agg.values()))
        values.append(_eval_c_index(state, model))
    if not values:
        raise RuntimeError("no cluster models to evaluate")
    total_mass = sum(masses)
    if total_mass <= 0:
        global_c = float(np.mean(values))
    else:
        global_c = float(sum(m * v for m, v in zip(masses, values))
                         / total_mass)
    return RoundMetrics(
        round=round_index,
        global_c_index=global_c,
        per_node_reputation=state.reputation.aggregate(),
        messages_sent=messages,
        selected_clients=tuple(sorted(selected)),
    )


def _tffl_weight(state: FederationState, cid: int) -> float:
    pos = state.tffl_positive[cid]
    neg = state.tffl_negative[cid]
    return (pos + 1.0) / (pos + neg + 2.0)


def _corrupt_covariates(data: ClientDataset, profile: AdversaryProfile,
                        union, round_index: int,
                        rng: np.random.Generator) -> ClientDataset:
    local_profile = profile
    if profile.distribution == "ramp" and profile.direction is not None:
        local_profile = replace(profile, direction=aligned_coefficients(
            profile.direction, union, data.feature_names))
    rows = [perturb(data.covariates[i], round_index, local_profile, rng)
            for i in range(data.n_patients)]
    return replace(data, covariates=np.vstack(rows))


def _fit_one(ctx: ClientContext, warm_start: np.ndarray, union,
             fraction: float, settings: FederationSettings,
             round_index: int, seed: int) -> np.ndarray:
    count = max(1, math.ceil(fraction * ctx.train.n_patients))
    sub = ctx.train.subset(ctx.train_order[:count])
    if (settings.attack_features and ctx.adversary is not None
            and ctx.adversary.target in ("model_update", "both")):
        sub = _corrupt_covariates(
            sub, ctx.adversary, union, round_index,
            derive_rng(seed, "attack-features", round_index, ctx.client_id))
    init = aligned_coefficients(warm_start, union, sub.feature_names)
    try:
        model = fit_coxph(sub, init=init, config=settings.fit)
    except (ValueError, FitDivergedError, MonotoneLikelihoodError) as exc:
        logger.warning("client %d round %d fit failed (%s); "
                       "keeping previous parameters",
                       ctx.client_id, round_index, exc)
        return ctx.theta.copy()
    return aligned_coefficients(model.coefficients, sub.feature_names, union)


def run_round(state: FederationState, settings: FederationSettings,
              privacy: PrivacySettings) -> FederationState:
    """Advance the federation by one round (mutates and returns state)."""
    r = state.round + 1
    seed = state.seed
    union = state.feature_union
    clusters = state.assignment.clusters()

    # -- participant sampling (probabilities from start-of-round scores) --
    selection_probs: dict[int, dict[int, float]] = {}
    selected: dict[int, list[int]] = {}
    for c, ids in sorted(clusters.items()):
        if settings.method == "ours":
            probs = selection_probabilities(state.reputation, ids)
        else:
            probs = {i: 1.0 / len(ids) for i in ids}
        selection_probs[c] = probs
        count = math.ceil(settings.participation_fraction * len(ids))
        rng = derive_rng(seed, "select", r, c)
        ordered = sorted(ids)
        p = np.array([probs[i] for i in ordered])
        # zero-probability members are unselectable; the draw shrinks to fit
        count = min(count, int(np.count_nonzero(p > 0)))
        pick = rng.choice(ordered, size=count, replace=False, p=p / p.sum())
        selected[c] = sorted(int(i) for i in pick)

    trainers = sorted({cid for ids in selected.values() for cid in ids})
    if settings.train_all:
        trainers = sorted(ctx.client_id for ctx in state.clients)

    # -- local training (deterministic; safe to thread) --
    fraction = r / settings.rounds if settings.data_growth else 1.0
    cluster_of = {cid: c for c, ids in clusters.items() for cid in ids}
    jobs = [(cid, state.clients[cid],
             state.global_models[cluster_of[cid]]) for cid in trainers]
    if settings.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(
                lambda job: _fit_one(job[1], job[2], union, fraction,
                                     settings, r, seed), jobs))
    else:
        results = [_fit_one(ctx, warm, union, fraction, settings, r, seed)
                   for _, ctx, warm in jobs]
    for (cid, ctx, _), theta in zip(jobs, results):
        ctx.theta = theta

    # -- adversarial corruption of the shared update --
    for cid in trainers:
        ctx = state.clients[cid]
        prof = ctx.adversary
        if (prof is not None and not settings.attack_features
                and prof.target in ("model_update", "both")):
            ctx.theta = perturb(ctx.theta, r, prof,
                                derive_rng(seed, "attack", r, cid))

    # -- channel split: raw to server, privatized to peers. Every cluster
    # member shares its current update for evaluation; only this round's
    # trainers have fresh ones, and only selected clients are aggregated.
    server_updates = {cid: state.clients[cid].theta.copy()
                      for cid in trainers}
    peer_updates: dict[int, np.ndarray] = {}
    if settings.method == "ours":
        sharers = sorted(ctx.client_id for ctx in state.clients)
        sigma = gaussian_sigma(privacy.params) if privacy.enabled else 0.0
        for cid in sharers:
            raw = state.clients[cid].theta
            if privacy.enabled:
                clipped = clip(raw, privacy.params.clip_norm)
                noise = derive_rng(seed, "dp", r, cid).normal(
                    0.0, sigma, clipped.shape[0])
                peer_updates[cid] = clipped + noise
                clipped_norm = float(np.linalg.norm(clipped))
                assert clipped_norm <= privacy.params.clip_norm + 1e-9
            else:
                peer_updates[cid] = raw.copy()
                clipped_norm = float(np.linalg.norm(raw))
            server_raw = (np.array_equal(server_updates[cid], raw)
                          if cid in server_updates else None)
            assert server_raw is not False
            state.channel_audit.append({
                "round": r, "client": cid,
                "server_bitwise_raw": server_raw,
                "peer_clipped_norm": clipped_norm,
                "clip_norm": privacy.params.clip_norm,
                "dp_enabled": privacy.enabled,
            })

    # -- feedback exchange and reputation update on scheduled rounds --
    messages = 0
    if (settings.method == "ours" and settings.update_frequency is not None
            and r % settings.update_frequency == 0):
        feedbacks = []
        for c, ids in sorted(clusters.items()):
            sharers = [cid for cid in sorted(ids) if cid in peer_updates]
            for k in sharers:
                for j in sorted(ids):
                    if j == k:
                        continue
                    evaluator = state.clients[j]
                    update_seen = peer_updates[k]
                    if privacy.enabled and privacy.per_peer_noise:
                        clipped = clip(state.clients[k].theta,
                                       privacy.params.clip_norm)
                        update_seen = clipped + derive_rng(
                            seed, "dp", r, k, j).normal(
                            0.0, gaussian_sigma(privacy.params),
                            clipped.shape[0])
                    m = compute_feedback(evaluator.validation,
                                         evaluator.theta, update_seen, union)
                    if m is None:
                        continue
                    prof = evaluator.adversary
                    if (prof is not None
                            and prof.target in ("reputation_message", "both")):
                        m = float(perturb(
                            np.array([m]), r, prof,
                            derive_rng(seed, "attack-message", r, j, k))[0])
                    feedbacks.append(Feedback(j, k, m, r))
            messages += len(ids) * (len(ids) - 1)
            for cid in ids:
                state.per_client_messages[cid] += len(ids) - 1
        state.reputation = update_scores(state.reputation, feedbacks,
                                         settings.reputation_lr)

    # -- aggregation over selected clients --
    for c, ids in sorted(clusters.items()):
        chosen = [cid for cid in selected[c] if cid in server_updates]
        if not chosen:
            logger.warning("cluster %d has no selected updates in round %d; "
                           "carrying model forward", c, r)
            continue
        if settings.method == "ours":
            weights = [selection_probs[c][cid] for cid in chosen]
        elif settings.method == "fedavg":
            weights = [1.0] * len(chosen)
        else:
            weights = [_tffl_weight(state, cid) for cid in chosen]
        try:
            state.global_models[c] = aggregate_weighted(
                [server_updates[cid] for cid in chosen], weights)
        except ValueError:
            state.global_models[c] = aggregate_weighted(
                [server_updates[cid] for cid in chosen],
                [1.0] * len(chosen))

    # -- proxy opinion update from leave-one-out held-out contribution --
    if settings.method == "tffl_proxy":
        for c, ids in sorted(clusters.items()):
            chosen = [cid for cid in selected[c] if cid in server_updates]
            if len(chosen) < 2:
                continue
            with_all = _eval_c_index(state, aggregate_weighted(
                [server_updates[cid] for cid in chosen],
                [1.0] * len(chosen)))
            for cid in chosen:
                rest = [x for x in chosen if x != cid]
                without = _eval_c_index(state, aggregate_weighted(
                    [server_updates[x] for x in rest], [1.0] * len(rest)))
                delta = with_all - without
                if delta > 0:
                    state.tffl_positive[cid] += 1
                elif delta < 0:
                    state.tffl_negative[cid] += 1

    # -- optional periodic re-clustering --
    if settings.recluster_every and r % settings.recluster_every == 0:
        summaries = _build_summaries(state.clients, union, settings, seed)
        state.assignment = cluster_clients(
            summaries, settings.n_clusters, settings.concordance_weight,
            seed=seed, restarts=settings.cluster_restarts)
        for c in state.assignment.clusters():
            state.global_models.setdefault(c, np.zeros(len(union)))

    state.round = r
    all_selected = tuple(sorted(cid for ids in selected.values()
                                for cid in ids))
    state.metrics_log.append(
        _round_metrics(state, r, messages, all_selected))
    state.reputation_history.append((r, state.reputation.values.copy()))
    return state


def run_simulation(generation: GenerationConfig,
                   settings: FederationSettings,
                   privacy: PrivacySettings,
                   adversaries: dict[int, AdversaryProfile],
                   seed: int) -> FederationState:
    """Initialize and execute the configured number of rounds."""
    state = initialize(generation, settings, privacy, dict(adversaries),
                       seed)
    for _ in range(settings.rounds):
        run_round(state, settings, privacy)
    return state


def run_fedavg_baseline(generation, settings, privacy, adversaries,
                        seed) -> FederationState:
    """Same pipeline with uniform weights and no reputation traffic."""
    return run_simulation(generation, replace(settings, method="fedavg"),
                          privacy, adversaries, seed)


def run_tffl_proxy(generation, settings, privacy, adversaries,
                   seed) -> FederationState:
    """Same pipeline with server-side beta-opinion weighting (proxy)."""
    return run_simulation(generation, replace(settings, method="tffl_proxy"),
                          privacy, adversaries, seed)

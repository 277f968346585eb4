"""Peer-driven reputation state and dynamics.

Each client i keeps a score for every peer j. Feedback about a subject k is
the change in an evaluator's validation concordance when the subject's
(privatized) update is blended into the evaluator's own parameters. Scores
move by a learning rate times the reputation-weighted sum of peer feedback
and are clamped to [0, score_max].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .concordance import concordance_index
from .cox import linear_predictor
from .datasets import ClientDataset
from .seeding import derive_rng

logger = logging.getLogger(__name__)

DEFAULT_SCORE_MAX = 10.0
INITIAL_SCORE = 1.0


@dataclass(frozen=True)
class Feedback:
    evaluator: int
    subject: int
    value: float
    round: int = 0

    def __post_init__(self):
        if self.evaluator == self.subject:
            raise ValueError("self-feedback is not defined")
        if not np.isfinite(self.value):
            raise ValueError("feedback value must be finite")


class ReputationMatrix:
    """Pairwise scores; the diagonal is undefined (NaN)."""

    def __init__(self, n_clients: int, round: int = 0,
                 score_max: float = DEFAULT_SCORE_MAX,
                 values: np.ndarray | None = None):
        if n_clients < 1:
            raise ValueError("need at least one client")
        self.n_clients = n_clients
        self.round = round
        self.score_max = score_max
        if values is None:
            values = np.full((n_clients, n_clients), INITIAL_SCORE)
        else:
            values = np.asarray(values, dtype=float).copy()
            if values.shape != (n_clients, n_clients):
                raise ValueError("values shape mismatch")
        np.fill_diagonal(values, np.nan)
        off = ~np.eye(n_clients, dtype=bool)
        if np.any(values[off] < 0) or np.any(values[off] > score_max):
            raise ValueError("scores must lie in [0, score_max]")
        self.values = values

    def get(self, observer: int, subject: int) -> float:
        if observer == subject:
            raise ValueError("diagonal scores do not exist")
        return float(self.values[observer, subject])

    def aggregate(self, ids=None) -> dict[int, float]:
        """Per-node score: mean of the scores observers hold about the node.

        ``ids`` restricts both the observers and the scored nodes (a cluster
        view); a node with no observers keeps the initial score.
        """
        ids = list(range(self.n_clients)) if ids is None else sorted(ids)
        out = {}
        for node in ids:
            obs = [self.values[j, node] for j in ids if j != node]
            out[node] = float(np.mean(obs)) if obs else INITIAL_SCORE
        return out

    def copy(self) -> "ReputationMatrix":
        return ReputationMatrix(self.n_clients, self.round, self.score_max,
                                self.values)


def compute_feedback(evaluator_data: ClientDataset, base_params,
                     subject_update, feature_names) -> float | None:
    """Concordance gain from blending a subject's update into the base model.

    The blend is the unweighted mean of the two aligned coefficient vectors.
    Returns None when the evaluator's validation data admit no permissible
    pairs (feedback absent, not zero).
    """
    base = np.asarray(base_params, dtype=float).ravel()
    subject = np.asarray(subject_update, dtype=float).ravel()
    if base.shape != subject.shape:
        raise ValueError("parameter vectors must share the feature space")
    blend = 0.5 * (base + subject)
    times = evaluator_data.event_time
    events = evaluator_data.event_flag
    try:
        base_ci = concordance_index(
            linear_predictor(base, feature_names, evaluator_data),
            times, events)
        blend_ci = concordance_index(
            linear_predictor(blend, feature_names, evaluator_data),
            times, events)
    except ValueError:
        return None
    return blend_ci - base_ci


def update_scores(matrix: ReputationMatrix, feedbacks: list[Feedback],
                  learning_rate: float) -> ReputationMatrix:
    """One synchronous score update from a batch of peer feedback.

    For observer i and subject k, the increment is the learning rate times
    sum over evaluators j (j != i, j != k) of RS_ij * m_jk. Results clamp to
    [0, score_max]. An empty batch returns an unchanged matrix.
    """
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    n = matrix.n_clients
    fb = np.zeros((n, n))
    for f in feedbacks:
        fb[f.evaluator, f.subject] += f.value
    weights = np.nan_to_num(matrix.values, nan=0.0)
    delta = weights @ fb
    values = np.nan_to_num(matrix.values, nan=0.0) + learning_rate * delta
    values = np.clip(values, 0.0, matrix.score_max)
    return ReputationMatrix(n, matrix.round + 1, matrix.score_max, values)


def selection_probabilities(matrix: ReputationMatrix,
                            cluster) -> dict[int, float]:
    """Within-cluster participation probabilities proportional to reputation.

    Falls back to uniform (with a warning) when every aggregate score is 0.
    """
    ids = sorted(cluster)
    if not ids:
        raise ValueError("cluster must be non-empty")
    agg = matrix.aggregate(ids)
    total = sum(agg.values())
    if total <= 0.0:
        logger.warning("all reputation scores are zero; selecting uniformly")
        return {i: 1.0 / len(ids) for i in ids}
    return {i: agg[i] / total for i in ids}


def stability(matrix: ReputationMatrix) -> float:
    """Population variance of the per-node aggregate scores."""
    agg = matrix.aggregate()
    return float(np.var(list(agg.values())))


@dataclass(frozen=True)
class LemmaTrajectory:
    errors: np.ndarray
    contraction: float
    diverged: bool


def simulate_lemma(n_peers: int, true_reliability: float, noise_std: float,
                   learning_rate: float, rounds: int,
                   seed: int) -> LemmaTrajectory:
    """Error trajectory of the idealized single-score estimation recursion.

    One observer refines its estimate of a peer's true reliability from the
    reports of ``n_peers`` intermediaries whose own scores stay at the
    initial value. Reliable reports are proportional to the remaining
    estimation gap scaled by the true reliability, plus zero-mean noise, so
    the expected error contracts by 1 - lr * n_peers * true_reliability each
    round. Returns |error| per round (rounds + 1 entries, initial included).
    """
    if n_peers < 1 or rounds < 1:
        raise ValueError("n_peers and rounds must be positive")
    rng = derive_rng(seed, "lemma")
    peer_scores = np.full(n_peers, INITIAL_SCORE)
    estimate = INITIAL_SCORE
    errors = np.empty(rounds + 1)
    errors[0] = abs(true_reliability - estimate)
    for t in range(rounds):
        gap = true_reliability - estimate
        noise = (rng.normal(0.0, noise_std, n_peers) if noise_std > 0
                 else np.zeros(n_peers))
        reports = true_reliability * gap + noise
        estimate += learning_rate * float(peer_scores @ reports)
        errors[t + 1] = abs(true_reliability - estimate)
    contraction = 1.0 - learning_rate * float(peer_scores.sum()) \
        * true_reliability
    diverged = bool(errors[-1] > errors[0])
    return LemmaTrajectory(errors, contraction, diverged)

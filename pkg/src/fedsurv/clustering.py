"""Grouping clients by feature completeness and pooled risk concordance.

The objective over an assignment of clients to c clusters is

    sum_clusters sum_members ||B_j - mu_i||_2
      - weight * sum_clusters (# concordant permissible pairs, pooled)

with mu_i the mean completeness vector of the cluster's members (un-squared
Euclidean distances, exactly as displayed). Empty clusters contribute
nothing. The optimizer is a multi-restart local search over single-client
reassignments; centroids are always the member means, so the search space
is the assignment alone and small instances can be checked exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .concordance import count_concordant_pairs
from .seeding import derive_rng


@dataclass(frozen=True)
class ClientSummary:
    """Clustering inputs for one client (risk from a pilot local fit)."""

    completeness: np.ndarray
    risk: np.ndarray
    event_time: np.ndarray
    event_flag: np.ndarray


@dataclass(frozen=True)
class ClusterAssignment:
    assignment: tuple[int, ...]
    centroids: tuple[np.ndarray, ...]
    objective: float

    @property
    def n_clusters(self) -> int:
        return len(self.centroids)

    def members(self, cluster: int) -> list[int]:
        return [i for i, c in enumerate(self.assignment) if c == cluster]

    def clusters(self) -> dict[int, list[int]]:
        return {c: self.members(c) for c in range(self.n_clusters)
                if self.members(c)}


def subsample_summary(completeness, risk, event_time, event_flag,
                      max_patients: int = 100, seed: int = 0
                      ) -> ClientSummary:
    """Cap a client's patient-level arrays for tractable pair counting."""
    risk = np.asarray(risk, dtype=float).ravel()
    n = risk.shape[0]
    if n > max_patients:
        keep = np.sort(derive_rng(seed, "cluster-subsample")
                       .choice(n, size=max_patients, replace=False))
        risk = risk[keep]
        event_time = np.asarray(event_time, dtype=float).ravel()[keep]
        event_flag = np.asarray(event_flag, dtype=int).ravel()[keep]
    return ClientSummary(np.asarray(completeness, dtype=float).ravel(),
                         risk, np.asarray(event_time, dtype=float).ravel(),
                         np.asarray(event_flag, dtype=int).ravel())


def _pooled_concordant(summaries, members) -> int:
    if not members:
        return 0
    risk = np.concatenate([summaries[i].risk for i in members])
    time = np.concatenate([summaries[i].event_time for i in members])
    event = np.concatenate([summaries[i].event_flag for i in members])
    return count_concordant_pairs(risk, time, event)


def _distance_term(b_matrix: np.ndarray, members) -> float:
    if not members:
        return 0.0
    block = b_matrix[members]
    mu = block.mean(axis=0)
    return float(np.linalg.norm(block - mu, axis=1).sum())


def objective_value(summaries, assignment, n_clusters: int,
                    concordance_weight: float) -> float:
    """Evaluate the clustering objective for an explicit assignment."""
    if concordance_weight < 0:
        raise ValueError("concordance_weight must be non-negative")
    assignment = list(assignment)
    b_matrix = np.vstack([s.completeness for s in summaries])
    total = 0.0
    for c in range(n_clusters):
        members = [i for i, a in enumerate(assignment) if a == c]
        total += _distance_term(b_matrix, members)
        total -= concordance_weight * _pooled_concordant(summaries, members)
    return total


class _Objective:
    """Cached evaluator: pairwise concordant counts are precomputed."""

    def __init__(self, summaries, n_clusters, weight):
        self.b = np.vstack([s.completeness for s in summaries])
        self.n = len(summaries)
        self.c = n_clusters
        self.weight = weight
        self.pair = np.zeros((self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                self.pair[i, j] = _pooled_concordant(
                    summaries, [i] if i == j else [i, j])
        # cross-count excludes the within-client parts
        for i in range(self.n):
            for j in range(i + 1, self.n):
                self.pair[i, j] -= self.pair[i, i] + self.pair[j, j]
                self.pair[j, i] = self.pair[i, j]

    def cluster_term(self, members) -> float:
        if not members:
            return 0.0
        idx = np.asarray(members)
        con = self.pair[np.ix_(idx, idx)].sum() / 2.0 \
            + np.diag(self.pair)[idx].sum() / 2.0
        # diag appears once (within-client), off-diag twice in the ix_ sum
        return _distance_term(self.b, members) - self.weight * con

    def value(self, assignment) -> float:
        return sum(self.cluster_term(
            [i for i, a in enumerate(assignment) if a == c])
            for c in range(self.c))


def cluster_clients(summaries, n_clusters: int, concordance_weight: float,
                    seed: int = 0, restarts: int = 12,
                    max_sweeps: int = 100) -> ClusterAssignment:
    """Best local optimum over seeded restarts of single-client moves.

    Deterministic given seed. Ties between equally good clusters resolve to
    the lowest cluster index; the objective never increases within a sweep.
    """
    n = len(summaries)
    if not 1 <= n_clusters <= n:
        raise ValueError(f"cannot split {n} clients into {n_clusters} clusters")
    obj = _Objective(summaries, n_clusters, concordance_weight)
    best_assignment = None
    best_value = np.inf
    for restart in range(restarts):
        rng = derive_rng(seed, "cluster-restart", restart)
        assignment = list(rng.integers(0, n_clusters, size=n))
        if restart == 0:
            assignment = [i % n_clusters for i in range(n)]  # balanced start
        value = obj.value(assignment)
        for _ in range(max_sweeps):
            moved = False
            for client in range(n):
                current = assignment[client]
                candidates = []
                for target in range(n_clusters):
                    assignment[client] = target
                    candidates.append((obj.value(assignment), target))
                assignment[client] = current
                cand_value, cand_target = min(candidates)
                better = cand_value < value
                tie_to_lower = cand_value == value and cand_target < current
                if cand_target != current and (better or tie_to_lower):
                    assignment[client] = cand_target
                    value = cand_value
                    moved = True
            if not moved:
                break
        if value < best_value:
            best_value = value
            best_assignment = tuple(assignment)
    b_matrix = obj.b
    centroids = []
    for c in range(n_clusters):
        members = [i for i, a in enumerate(best_assignment) if a == c]
        centroids.append(b_matrix[members].mean(axis=0) if members
                         else np.zeros(b_matrix.shape[1]))
    return ClusterAssignment(best_assignment, tuple(centroids),
                             float(best_value))


def enumerate_optimum(summaries, n_clusters: int,
                      concordance_weight: float) -> float:
    """Exhaustive minimum of the objective (test oracle; tiny n only)."""
    n = len(summaries)
    if n_clusters ** n > 200_000:
        raise ValueError("instance too large to enumerate")
    obj = _Objective(summaries, n_clusters, concordance_weight)
    best = np.inf
    assignment = [0] * n
    while True:
        best = min(best, obj.value(assignment))
        k = n - 1
        while k >= 0 and assignment[k] == n_clusters - 1:
            assignment[k] = 0
            k -= 1
        if k < 0:
            return float(best)
        assignment[k] += 1

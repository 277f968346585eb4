"""Proportional-hazards estimation on a single center.

Implements the negative log partial likelihood with Breslow handling of
tied event times (tied events share one risk-set denominator), its analytic
gradient and Hessian, a Newton solver with step-halving, and the Breslow
baseline-hazard estimator. Risk sets at time t contain every subject with
observed time >= t.

All quantities are computed from suffix sums over the time-sorted cohort,
with exponentials shifted by the max linear predictor for stability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import ClientDataset

COEFFICIENT_EXPLOSION_NORM = 50.0


class FitDivergedError(RuntimeError):
    pass


class MonotoneLikelihoodError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitConfig:
    """Newton solver controls."""

    max_iterations: int = 100
    gradient_tolerance: float = 1e-9
    step_halving_limit: int = 20
    ridge_penalty: float = 1e-6

    def __post_init__(self):
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.step_halving_limit <= 0:
            raise ValueError("step_halving_limit must be positive")
        if self.ridge_penalty < 0:
            raise ValueError("ridge_penalty must be non-negative")


@dataclass(frozen=True)
class CoxModel:
    """Fitted coefficients plus the Breslow baseline step function."""

    coefficients: np.ndarray
    baseline_hazard: tuple[tuple[float, float], ...]
    feature_names: tuple[str, ...]
    converged: bool = True
    n_iterations: int = 0

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float).ravel()
        if coef.shape[0] != len(self.feature_names):
            raise ValueError("coefficient count differs from feature names")
        times = [t for t, _ in self.baseline_hazard]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("baseline hazard times must be strictly increasing")
        if any(h < 0 for _, h in self.baseline_hazard):
            raise ValueError("baseline hazard increments must be non-negative")
        object.__setattr__(self, "coefficients", coef)


def _check_data(data: ClientDataset, coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.shape[0] != data.n_features:
        raise ValueError(
            f"{coeffs.shape[0]} coefficients for {data.n_features} features")
    if not np.all(np.isfinite(data.covariates)):
        raise ValueError("invalid data")
    if data.n_events == 0:
        raise ValueError("no events")
    return coeffs


class _SortedCohort:
    """Time-ascending view with per-row risk-set suffix sums."""

    def __init__(self, data: ClientDataset):
        order = np.argsort(data.event_time, kind="stable")
        self.x = data.covariates[order]
        self.time = data.event_time[order]
        self.event = data.event_flag[order]
        n = self.time.shape[0]
        is_new = np.empty(n, dtype=bool)
        is_new[0] = True
        is_new[1:] = self.time[1:] != self.time[:-1]
        # first row of each tied-time block; the risk set at that time is
        # the suffix starting there
        self.group_start = np.maximum.accumulate(
            np.where(is_new, np.arange(n), 0))
        self.event_rows = np.flatnonzero(self.event == 1)

    def stats(self, coeffs: np.ndarray, want_derivatives: bool):
        eta = self.x @ coeffs
        shift = float(np.max(eta)) if eta.size else 0.0
        w = np.exp(eta - shift)
        suffix0 = np.cumsum(w[::-1])[::-1]
        ev = self.event_rows
        gs = self.group_start[ev]
        s0 = suffix0[gs]
        nll = float(np.sum(np.log(s0) + shift - eta[ev]))
        if not want_derivatives:
            return nll, None, None
        wx = w[:, None] * self.x
        suffix1 = np.cumsum(wx[::-1], axis=0)[::-1]
        mu = suffix1[gs] / s0[:, None]
        grad = mu.sum(axis=0) - self.x[ev].sum(axis=0)
        # sum over events of S2/S0 without materializing per-row outer
        # products: each subject j enters with weight w_j * (sum of 1/S0
        # over the event times whose risk set contains j)
        contrib = np.zeros(self.time.shape[0])
        np.add.at(contrib, gs, 1.0 / s0)
        a = np.cumsum(contrib)
        term1 = self.x.T @ (self.x * (a * w)[:, None])
        term2 = mu.T @ mu
        return nll, grad, term1 - term2


def neg_log_partial_likelihood(coeffs, data: ClientDataset) -> float:
    """Negative log partial likelihood with Breslow tie handling."""
    coeffs = _check_data(data, coeffs)
    nll, _, _ = _SortedCohort(data).stats(coeffs, want_derivatives=False)
    return nll


def partial_likelihood_gradient(coeffs, data: ClientDataset) -> np.ndarray:
    """Analytic gradient of :func:`neg_log_partial_likelihood`."""
    coeffs = _check_data(data, coeffs)
    _, grad, _ = _SortedCohort(data).stats(coeffs, want_derivatives=True)
    return grad


def breslow_baseline(coeffs, data: ClientDataset) -> tuple[tuple[float, float], ...]:
    """Baseline-hazard increments d_t / sum_{risk set} exp(coeffs . x).

    Returns (time, increment) pairs at each distinct event time; empty when
    the data contain no events.
    """
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.shape[0] != data.n_features:
        raise ValueError(
            f"{coeffs.shape[0]} coefficients for {data.n_features} features")
    if not np.all(np.isfinite(data.covariates)):
        raise ValueError("invalid data")
    if data.n_events == 0:
        return ()
    cohort = _SortedCohort(data)
    eta = cohort.x @ coeffs
    shift = float(np.max(eta))
    w = np.exp(eta - shift)
    suffix0 = np.cumsum(w[::-1])[::-1]
    ev = cohort.event_rows
    times = cohort.time[ev]
    uniq, first, counts = np.unique(times, return_index=True,
                                    return_counts=True)
    s0_true = suffix0[cohort.group_start[ev][first]] * np.exp(shift)
    return tuple((float(t), float(d / s))
                 for t, d, s in zip(uniq, counts, s0_true))


def fit_coxph(data: ClientDataset, init=None,
              config: FitConfig = FitConfig()) -> CoxModel:
    """Newton-Raphson fit of the partial likelihood.

    Accepted steps never increase the (ridge-penalized) objective; steps are
    halved up to ``step_halving_limit`` times when they would. Raises
    MonotoneLikelihoodError when coefficients explode (separable data) and
    FitDivergedError when the objective is not finite.
    """
    beta = (np.zeros(data.n_features) if init is None
            else np.asarray(init, dtype=float).ravel().copy())
    beta = _check_data(data, beta)
    cohort = _SortedCohort(data)
    ridge = config.ridge_penalty

    def objective(b):
        nll, _, _ = cohort.stats(b, want_derivatives=False)
        return nll + 0.5 * ridge * float(b @ b)

    def full(b):
        nll, g, h = cohort.stats(b, want_derivatives=True)
        return (nll + 0.5 * ridge * float(b @ b),
                g + ridge * b,
                h + ridge * np.eye(b.shape[0]))

    f, g, h = full(beta)
    if not np.isfinite(f):
        raise FitDivergedError("fit diverged")
    n_iter = 0
    for _ in range(config.max_iterations):
        if np.max(np.abs(g)) <= config.gradient_tolerance:
            break
        if np.max(np.abs(beta)) > COEFFICIENT_EXPLOSION_NORM:
            raise MonotoneLikelihoodError("monotone likelihood")
        try:
            delta = np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(h, g, rcond=None)[0]
        step = 1.0
        accepted = None
        for _ in range(config.step_halving_limit):
            cand = beta - step * delta
            f_cand = objective(cand)
            if np.isfinite(f_cand) and f_cand <= f:
                accepted = cand
                break
            step *= 0.5
        if accepted is None:
            break
        beta = accepted
        f, g, h = full(beta)
        n_iter += 1
    if np.max(np.abs(beta)) > COEFFICIENT_EXPLOSION_NORM:
        raise MonotoneLikelihoodError("monotone likelihood")
    converged = bool(np.max(np.abs(g)) <= config.gradient_tolerance)
    return CoxModel(
        coefficients=beta,
        baseline_hazard=breslow_baseline(beta, data),
        feature_names=data.feature_names,
        converged=converged,
        n_iterations=n_iter,
    )


def aligned_coefficients(coeffs, coeff_names: tuple[str, ...],
                         target_names: tuple[str, ...]) -> np.ndarray:
    """Project a named coefficient vector onto another feature ordering.

    Features absent from ``coeff_names`` read as 0.
    """
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    index = {name: k for k, name in enumerate(coeff_names)}
    out = np.zeros(len(target_names))
    for k, name in enumerate(target_names):
        j = index.get(name)
        if j is not None:
            out[k] = coeffs[j]
    return out


def linear_predictor(coeffs, coeff_names, data: ClientDataset) -> np.ndarray:
    """Per-patient coeffs . x with name-based feature alignment."""
    aligned = aligned_coefficients(coeffs, tuple(coeff_names),
                                   data.feature_names)
    return data.covariates @ aligned


def risk_scores(model: CoxModel, data: ClientDataset) -> np.ndarray:
    """Linear predictor of a fitted model on (possibly misaligned) data."""
    return linear_predictor(model.coefficients, model.feature_names, data)

"""Concordance index for right-censored risk predictions.

A pair (i, j) is permissible when t_i < t_j and subject i's event was
observed. The index is the fraction of permissible pairs where the
earlier-event subject has the higher risk score; exact score ties count 0.5.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 256


def _validate(scores, times, events):
    scores = np.asarray(scores, dtype=float).ravel()
    times = np.asarray(times, dtype=float).ravel()
    events = np.asarray(events, dtype=int).ravel()
    if not (scores.shape == times.shape == events.shape):
        raise ValueError("scores, times and events must have equal length")
    return scores, times, events


def concordance_index(scores, times, events) -> float:
    """Return the concordance index in [0, 1].

    Raises ValueError("no comparable pairs") when no permissible pair exists.
    """
    scores, times, events = _validate(scores, times, events)
    event_rows = np.flatnonzero(events == 1)
    num = 0.0
    den = 0
    for start in range(0, event_rows.size, _CHUNK):
        rows = event_rows[start:start + _CHUNK]
        later = times[None, :] > times[rows, None]
        den += int(later.sum())
        s_i = scores[rows, None]
        num += float(((scores[None, :] < s_i) & later).sum())
        num += 0.5 * float(((scores[None, :] == s_i) & later).sum())
    if den == 0:
        raise ValueError("no comparable pairs")
    return num / den


def count_concordant_pairs(scores, times, events) -> int:
    """Count permissible pairs whose risk ordering matches the time ordering.

    Strict indicator: ties in score contribute nothing.
    """
    scores, times, events = _validate(scores, times, events)
    event_rows = np.flatnonzero(events == 1)
    total = 0
    for start in range(0, event_rows.size, _CHUNK):
        rows = event_rows[start:start + _CHUNK]
        later = times[None, :] > times[rows, None]
        total += int(((scores[None, :] < scores[rows, None]) & later).sum())
    return total

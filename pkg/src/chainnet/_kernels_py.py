"""Pure-Python / numpy fallback for the cohort-selection kernels.

Scores follow the canonical evaluation order
``(w_price*np + w_lead*nl) + w_rel*rel`` in IEEE double precision; the
compiled lane (`chainnet._kernels`) must produce bit-identical scores so that
exact-tie breaking agrees between backends.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def pick_best(prices, leads, rels, ranks, w_price, w_lead, w_rel):
    """Index of the winning cohort member.

    Highest score wins; exact score ties go to the member with the smallest
    rank. ``ranks`` is any total tie-break order (smaller = preferred).
    """
    n = len(prices)
    if n == 0:
        raise ValueError("empty cohort")
    p_lo = min(prices)
    p_hi = max(prices)
    l_lo = min(leads)
    l_hi = max(leads)
    best = 0
    best_score = -1.0
    best_rank = 0
    for i in range(n):
        np_ = 1.0 if p_hi == p_lo else (p_hi - prices[i]) / (p_hi - p_lo)
        nl_ = 1.0 if l_hi == l_lo else (l_hi - leads[i]) / (l_hi - l_lo)
        score = w_price * np_ + w_lead * nl_ + w_rel * rels[i]
        if i == 0 or score > best_score or (score == best_score and ranks[i] < best_rank):
            best = i
            best_score = score
            best_rank = ranks[i]
    return best


def sweep_pick_best(attrs, combs, w_price, w_lead, w_rel):
    """Winning member position for each cohort row in ``combs``.

    ``attrs`` is an (m, 3) float64 table of (price, lead, reliability);
    ``combs`` holds member indices into it, one cohort per row, members listed
    in ascending tie-break priority. Returns int8 positions.
    """
    attrs = np.asarray(attrs, dtype=np.float64)
    combs = np.asarray(combs)
    p = attrs[:, 0][combs]
    l = attrs[:, 1][combs]
    r = attrs[:, 2][combs]
    p_lo = p.min(axis=1, keepdims=True)
    p_hi = p.max(axis=1, keepdims=True)
    l_lo = l.min(axis=1, keepdims=True)
    l_hi = l.max(axis=1, keepdims=True)
    den_p = p_hi - p_lo
    den_l = l_hi - l_lo
    norm_p = np.where(den_p == 0.0, 1.0, (p_hi - p) / np.where(den_p == 0.0, 1.0, den_p))
    norm_l = np.where(den_l == 0.0, 1.0, (l_hi - l) / np.where(den_l == 0.0, 1.0, den_l))
    scores = w_price * norm_p + w_lead * norm_l + w_rel * r
    # argmax returns the first maximum: smallest member position == best rank
    return np.argmax(scores, axis=1).astype(np.int8)

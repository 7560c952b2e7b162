"""Handover activation probabilities for the RSRP, distance and joint rules.

All functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import pathloss_db, scenario_sigma_sf_db
from .scenario import Scenario, distances
from .sensing import crlb_m2

P_EPS = 1e-300


def q_function(x):
    """Gaussian tail probability ``P[N(0, 1) > x]``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return out if out.ndim else float(out)


def _clamp(p):
    out = np.clip(p, P_EPS, 1.0 - P_EPS)
    return out if np.ndim(out) else float(out)


def p_ho_rsrp(s: Scenario, d_s, d_t, h_av, gamma_db: float | None = None):
    """A3-event probability ``P[P_T - P_S > Gamma]`` under independent shadowing."""
    g = s.gamma_db if gamma_db is None else gamma_db
    margin = g + pathloss_db(s.fc, d_t) - pathloss_db(s.fc, d_s)
    return _clamp(q_function(margin / (np.sqrt(2.0) * scenario_sigma_sf_db(s, h_av))))


def p_ho_dist(s: Scenario, d_s, d_t, d_th: float | None = None):
    """Probability that the sensed distance gap ``d_S - d_T`` exceeds ``d_th``."""
    th = s.d_th if d_th is None else d_th
    spread = np.sqrt(crlb_m2(s, d_t) + crlb_m2(s, d_s))
    return _clamp(q_function((th + np.asarray(d_t) - np.asarray(d_s)) / spread))


def p_ho_joint(p_rsrp, p_dist):
    """Union of two independent events.

    Floored at the larger component so rounding in ``a + b - ab`` never
    breaks ``P_joint >= max(P_rsrp, P_dist)``.
    """
    p_rsrp, p_dist = np.asarray(p_rsrp, dtype=float), np.asarray(p_dist, dtype=float)
    out = np.clip(p_rsrp + p_dist - p_rsrp * p_dist, np.maximum(p_rsrp, p_dist), 1.0)
    return out if out.ndim else float(out)


def effective_rate(p_ho, r_s, r_t):
    return (1.0 - p_ho) * r_s + p_ho * r_t


@dataclass(frozen=True)
class HoProbabilities:
    p_rsrp: np.ndarray
    p_dist: np.ndarray
    p_joint: np.ndarray


def ho_probabilities(s: Scenario, x, y, h_av) -> HoProbabilities:
    d_s, d_t = distances(s, x, y, h_av)
    pr = p_ho_rsrp(s, d_s, d_t, h_av)
    pd = p_ho_dist(s, d_s, d_t)
    return HoProbabilities(pr, pd, p_ho_joint(pr, pd))

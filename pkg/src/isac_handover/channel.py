"""Communication link budget: UMa-AV LoS path loss, shadowing, RSRP and rate."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .scenario import Scenario

# Below this 3D distance the LoS model is outside its intended range.
NLOS_DISTANCE = 100.0


class ModelDomainError(ValueError):
    pass


class NlosRangeWarning(UserWarning):
    """A link shorter than 100 m was evaluated with the LoS path-loss model."""


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


def pathloss_los_db(fc: float, d):
    """UMa-AV LoS path loss in dB, ``28 + 22 log10(d) + 20 log10(fc / 1 GHz)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 1.0):
        raise ModelDomainError(f"path loss needs d >= 1 m, got min {np.min(d):g} m")
    return 28.0 + 22.0 * np.log10(d) + 20.0 * np.log10(fc / 1e9)


def pathloss_db(
    fc: float,
    d,
    nlos_model: Callable[[float, np.ndarray], np.ndarray] | None = None,
):
    """Path loss with an optional replacement model for links under 100 m.

    Without ``nlos_model`` the LoS formula is used everywhere and a
    :class:`NlosRangeWarning` is emitted if any link is shorter than 100 m.
    """
    d = np.asarray(d, dtype=float)
    pl = pathloss_los_db(fc, d)
    short = d < NLOS_DISTANCE
    if np.any(short):
        if nlos_model is None:
            warnings.warn(
                f"{int(np.sum(short))} link(s) below {NLOS_DISTANCE:g} m evaluated with the LoS model",
                NlosRangeWarning,
                stacklevel=2,
            )
        else:
            pl = np.where(short, nlos_model(fc, d), pl)
    return pl


def sigma_sf_db(h_av, a: float = 4.64, b: float = 0.0066):
    """Altitude-dependent shadow-fading standard deviation in dB."""
    return a * np.exp(-b * np.asarray(h_av, dtype=float))


def scenario_sigma_sf_db(s: Scenario, h_av):
    return sigma_sf_db(h_av, s.sf_coeff_a, s.sf_coeff_b)


def rsrp_dbm(s: Scenario, d, shadow_db=0.0):
    """Received power ``P_sum + 20 log10(N_t) - L - eps`` in dBm."""
    return s.p_sum_dbm + 20.0 * np.log10(s.n_t) - pathloss_db(s.fc, d) - shadow_db


def comm_snr(s: Scenario, d, shadow_db=0.0):
    """Linear SNR ``beta_C N_t^2 P_sum / (N sigma^2)`` of the data link."""
    return db2lin(rsrp_dbm(s, d, shadow_db) - 10.0 * np.log10(s.n_subcarriers) - s.noise_dbm)


def comm_rate_bps(s: Scenario, d, shadow_db=0.0):
    """Shannon rate on the ``(1 - rho) B`` communication bandwidth."""
    return (1.0 - s.pilot_ratio) * s.bandwidth_b * np.log2(1.0 + comm_snr(s, d, shadow_db))


@dataclass(frozen=True)
class LinkBudget:
    pathloss_db: np.ndarray
    sigma_sf_db: np.ndarray
    rsrp_mean_dbm: np.ndarray
    snr_comm: np.ndarray
    rate_bps: np.ndarray


def link_budget(s: Scenario, d, h_av, shadow_db=None) -> LinkBudget:
    """Per-position communication budget.

    With ``shadow_db=None`` the mean budget is returned (no shadowing term);
    otherwise SNR and rate use the supplied realization while
    ``rsrp_mean_dbm`` stays the mean.
    """
    eps = 0.0 if shadow_db is None else shadow_db
    pl = pathloss_db(s.fc, d)
    mean = s.p_sum_dbm + 20.0 * np.log10(s.n_t) - pl
    snr = db2lin(mean - eps - 10.0 * np.log10(s.n_subcarriers) - s.noise_dbm)
    rate = (1.0 - s.pilot_ratio) * s.bandwidth_b * np.log2(1.0 + snr)
    return LinkBudget(pl, scenario_sigma_sf_db(s, h_av), mean, snr, rate)

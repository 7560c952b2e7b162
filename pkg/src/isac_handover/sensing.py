"""Monostatic sensing budget and the range CRLB of an OFDM pilot block."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import db2lin, pathloss_db
from .scenario import SPEED_OF_LIGHT, Scenario

GAMMA_FLOOR = 1e-12


class CrlbDegenerateError(ValueError):
    """Fewer than two sensing subcarriers: the delay is not identifiable."""


class GammaClampWarning(UserWarning):
    pass


def sensing_pathloss_db(fc: float, d, rcs: float):
    """Two-way sensing loss ``2L - 10 log10(rcs) + 10 log10(lambda^2 / 4 pi)``."""
    if rcs <= 0:
        raise ValueError(f"rcs must be > 0, got {rcs}")
    lam = SPEED_OF_LIGHT / fc
    return 2.0 * pathloss_db(fc, d) - 10.0 * np.log10(rcs) + 10.0 * np.log10(lam**2 / (4.0 * np.pi))


def gamma_linear(s: Scenario, d, shadow_db=0.0):
    """Average per-subcarrier sensing SNR ``beta_S N_t^2 P_sum / (N sigma^2)``.

    ``s.gamma_override`` wins when set. Values are floored at 1e-12.
    """
    if s.gamma_override is not None:
        g = np.full(np.shape(d), float(s.gamma_override))
        return g if g.ndim else float(g)
    g_db = (
        s.p_sum_dbm
        + 20.0 * np.log10(s.n_t)
        - sensing_pathloss_db(s.fc, d, s.rcs)
        - shadow_db
        - 10.0 * np.log10(s.n_subcarriers)
        - s.noise_dbm
    )
    g = db2lin(g_db)
    if np.any(g < GAMMA_FLOOR):
        warnings.warn(f"sensing SNR below {GAMMA_FLOOR:g}, clamped", GammaClampWarning, stacklevel=2)
        g = np.maximum(g, GAMMA_FLOOR)
    return g if np.ndim(g) else float(g)


def crlb_exact_m2(gamma, delta_f: float, m_symbols: int, rho_n: int):
    """Range CRLB in m^2 for ``rho_n`` contiguous sensing subcarriers.

    ``3 c^2 / (8 pi^2 gamma df^2 M K (K-1) (2K-1))`` with ``K = rho_n``.
    """
    k = int(round(rho_n))
    if k < 2:
        raise CrlbDegenerateError(f"need at least 2 sensing subcarriers, got rho*N = {rho_n}")
    gamma = np.asarray(gamma, dtype=float)
    poly = k * (k - 1) * (2 * k - 1)
    out = 3.0 * SPEED_OF_LIGHT**2 / (8.0 * np.pi**2 * gamma * delta_f**2 * m_symbols * poly)
    return out if out.ndim else float(out)


def crlb_approx_m2(gamma, rho: float, m_symbols: int, n_subcarriers: int, b_s: float):
    """Large-``rho N`` form ``3 c^2 / (16 pi^2 gamma rho M N B_S^2)``."""
    gamma = np.asarray(gamma, dtype=float)
    out = 3.0 * SPEED_OF_LIGHT**2 / (16.0 * np.pi**2 * gamma * rho * m_symbols * n_subcarriers * b_s**2)
    return out if out.ndim else float(out)


def crlb_m2(s: Scenario, d, shadow_db=0.0):
    """CRLB(d) for the scenario's OFDM grid and link budget."""
    return crlb_exact_m2(gamma_linear(s, d, shadow_db), s.delta_f, s.n_symbols, s.rho_n)


@dataclass(frozen=True)
class SensingBudget:
    pathloss_sens_db: np.ndarray
    gamma: np.ndarray
    crlb_m2: np.ndarray

    @property
    def sigma_d(self):
        return np.sqrt(self.crlb_m2)


def sensing_budget(s: Scenario, d, shadow_db=0.0) -> SensingBudget:
    g = gamma_linear(s, d, shadow_db)
    return SensingBudget(
        sensing_pathloss_db(s.fc, d, s.rcs),
        g,
        crlb_exact_m2(g, s.delta_f, s.n_symbols, s.rho_n),
    )


def sample_distance_estimate(d_true, crlb, seed=None, size=None):
    """Draw ``d_hat ~ N(d_true, crlb)``; deterministic for a given seed."""
    if np.any(np.asarray(crlb) < 0):
        raise ValueError("crlb must be non-negative")
    rng = np.random.default_rng(seed)
    return d_true + np.sqrt(crlb) * rng.standard_normal(size)

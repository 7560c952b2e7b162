"""Event-level Monte-Carlo check of the closed-form activation probabilities.

Each trial draws independent shadowing on both links and independent
Gaussian ranging errors, then evaluates the RSRP event, the distance event
and their union on the same draws.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import beta

from . import criteria
from .channel import pathloss_db, scenario_sigma_sf_db
from .scenario import DronePosition, Scenario, distances
from .sensing import crlb_m2

CHUNK = 1 << 16
CRITERIA = ("rsrp", "dist", "joint")


def _seed_words(seed) -> list[int]:
    return list(np.atleast_1d(np.asarray(seed, dtype=np.int64)).tolist())


def draw_margins(s: Scenario, p: DronePosition, trials: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial margins; the RSRP event is ``rsrp > 0``, the distance event ``dist > 0``.

    Trials are generated in fixed-size chunks, each from its own
    ``SeedSequence([*seed, chunk])`` stream, so the result does not depend on
    how chunks are scheduled.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d_s, d_t = (float(v) for v in distances(s, p.x, p.y, p.h_av))
    sf = float(scenario_sigma_sf_db(s, p.h_av))
    sd_s, sd_t = np.sqrt(crlb_m2(s, d_s)), np.sqrt(crlb_m2(s, d_t))
    pl_gap = float(pathloss_db(s.fc, d_s) - pathloss_db(s.fc, d_t))
    words = _seed_words(seed)
    rsrp = np.empty(trials)
    dist = np.empty(trials)
    for c, start in enumerate(range(0, trials, CHUNK)):
        n = min(CHUNK, trials - start)
        rng = np.random.default_rng(np.random.SeedSequence([*words, c]))
        z = rng.standard_normal((4, n))
        eps_s, eps_t = sf * z[0], sf * z[1]
        # P_T - P_S = L(d_S) + eps_S - L(d_T) - eps_T
        rsrp[start:start + n] = pl_gap + eps_s - eps_t - s.gamma_db
        dhat_s, dhat_t = d_s + sd_s * z[2], d_t + sd_t * z[3]
        dist[start:start + n] = dhat_s - dhat_t - s.d_th
    return rsrp, dist


@dataclass(frozen=True)
class TrialBatch:
    point: DronePosition
    trials: int
    seed: tuple
    hits_rsrp: int
    hits_dist: int
    hits_joint: int

    def freq(self, criterion: str) -> float:
        return getattr(self, f"hits_{criterion}") / self.trials


def run_batch(s: Scenario, p: DronePosition, trials: int, seed) -> TrialBatch:
    rsrp, dist = draw_margins(s, p, trials, seed)
    e_r, e_d = rsrp > 0, dist > 0
    return TrialBatch(
        p, trials, tuple(_seed_words(seed)),
        int(e_r.sum()), int(e_d.sum()), int((e_r | e_d).sum()),
    )


def clopper_pearson(k: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    a = 1.0 - confidence
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def analytic(s: Scenario, p: DronePosition) -> dict[str, float]:
    d_s, d_t = distances(s, p.x, p.y, p.h_av)
    pr = float(criteria.p_ho_rsrp(s, d_s, d_t, p.h_av))
    pd = float(criteria.p_ho_dist(s, d_s, d_t))
    return {"rsrp": pr, "dist": pd, "joint": float(criteria.p_ho_joint(pr, pd))}


@dataclass(frozen=True)
class CheckRow:
    point: int
    x: float
    y: float
    h_av: float
    criterion: str
    p_analytic: float
    p_empirical: float
    ci_lo: float
    ci_hi: float
    passed: bool


@dataclass(frozen=True)
class GridReport:
    rows: list[CheckRow]
    required_fraction: float

    @property
    def pass_fraction(self) -> float:
        return sum(r.passed for r in self.rows) / len(self.rows)

    @property
    def passed(self) -> bool:
        return self.pass_fraction >= self.required_fraction

    def failures(self) -> list[CheckRow]:
        return [r for r in self.rows if not r.passed]

    def write_csv(self, fh, header_comment: str | None = None) -> None:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "x", "y", "h_av", "criterion", "p_analytic", "p_empirical", "ci_lo", "ci_hi", "pass"])
        for r in self.rows:
            w.writerow([
                r.point, repr(r.x), repr(r.y), repr(r.h_av), r.criterion,
                repr(r.p_analytic), repr(r.p_empirical), repr(r.ci_lo), repr(r.ci_hi), int(r.passed),
            ])


def default_points(s: Scenario) -> list[DronePosition]:
    """Fifty points spread over the handover region of the reference geometry."""
    xs = np.linspace(-150.0, 350.0, 10)
    ys = (0.0, 200.0, 400.0, 600.0, 800.0)
    hs = [s.altitudes[0], s.h_ref, s.altitudes[-1]]
    return [
        DronePosition(float(x), float(y), float(hs[(i + j) % 3]))
        for j, y in enumerate(ys)
        for i, x in enumerate(xs)
    ]


def validate_grid(
    s: Scenario,
    points: Sequence[DronePosition],
    trials: int = 100_000,
    seed: int = 0,
    confidence: float = 0.99,
    required_fraction: float = 0.99,
    perturb: float = 0.0,
    workers: int = 1,
) -> GridReport:
    """Compare closed forms with empirical frequencies at every point.

    ``perturb`` is added to each analytic probability (fault injection).
    """
    if not points:
        raise ValueError("no points to validate")

    def one(item):
        i, p = item
        batch = run_batch(s, p, trials, [seed, i])
        ref = analytic(s, p)
        out = []
        for c in CRITERIA:
            k = getattr(batch, f"hits_{c}")
            lo, hi = clopper_pearson(k, trials, confidence)
            pa = min(max(ref[c] + perturb, 0.0), 1.0)
            out.append(CheckRow(i, p.x, p.y, p.h_av, c, pa, k / trials, lo, hi, lo <= pa <= hi))
        return out

    items = list(enumerate(points))
    if workers <= 1:
        chunks = [one(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(one, items))
    return GridReport([r for ch in chunks for r in ch], required_fraction)

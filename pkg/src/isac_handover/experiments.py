"""One runner per reproduced figure plus the two validation suites.

Each runner returns ``{filename: Table}``; writing and plotting happen in the
CLI. Tables are plain column lists so CSV output is byte-stable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import montecarlo, oracle, region
from .region import Criterion
from .scenario import Scenario

GAMMA_SWEEP_DB = (0.0, 0.5, 1.0, 2.0)
D_TH_SWEEP_M = (0.0, 25.0, 50.0, 100.0)
RHO_SWEEP = (0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20)
SNR_SWEEP_DB = tuple(float(v) for v in range(-40, 21, 5))
ORACLE_D_M = (150.0, 300.0, 500.0, 700.0)
ORACLE_GAMMA_DB = (-20.0, -10.0, 0.0, 10.0, 20.0)


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    plot: str | None = None  # "heatmap" | "lines" | None

    def write(self, fh, comment: str | None = None) -> None:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return str(v)


@dataclass
class Context:
    scenario: Scenario
    seed: int = 0
    workers: int = 1
    trials: int | None = None
    perturb: float = 0.0


class ValidationFailure(RuntimeError):
    def __init__(self, message: str, tables: dict[str, Table]):
        super().__init__(message)
        self.tables = tables


def fig2_probability_maps(ctx: Context) -> dict[str, Table]:
    s = ctx.scenario
    h = s.h_ref
    xs, ys = s.x_grid(), s.y_grid()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    p = {c: region.probability(s, c, X, Y, h) for c in Criterion}
    maps = Table(["x_m", "y_m", "p_rsrp", "p_dist", "p_joint"], plot="heatmap")
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            maps.rows.append((x, y, p[Criterion.RSRP][i, j], p[Criterion.DIST][i, j], p[Criterion.JOINT][i, j]))
    rows = Table(["criterion", "y_m", "x_lo_m", "x_hi_m", "length_m", "status"])
    union = Table(["criterion", "x_lo_min_m", "x_hi_max_m", "union_length_m", "length_y0_m"])
    for c in Criterion:
        pr = region.plane_regions(s, c, h, ys)
        for r in pr.rows():
            rows.rows.append((c.value, r.y, r.x_lo, r.x_hi, r.length, r.solver_status.value))
        lo, hi = float(np.nanmin(pr.x_lo)), float(np.nanmax(pr.x_hi))
        y0 = region.region_for(s, c, 0.0, h)
        union.rows.append((c.value, lo, hi, hi - lo, y0.length))
    return {"fig2_maps.csv": maps, "fig2_regions.csv": rows, "fig2_union.csv": union}


def fig3_threshold_sweep(ctx: Context) -> dict[str, Table]:
    s = ctx.scenario
    h = s.h_ref
    xs = s.x_grid()
    bounds = Table(["criterion", "gamma_db", "d_th_m", "x_lo_m", "x_hi_m", "length_m", "status"])
    curves = Table(["x_m", "label", "p"], plot="lines")
    cases = [(Criterion.RSRP, s.replace(gamma_db=g)) for g in GAMMA_SWEEP_DB]
    cases += [(Criterion.JOINT, s.replace(d_th=t)) for t in D_TH_SWEEP_M]
    for c, sc in cases:
        r = region.region_for(sc, c, 0.0, h)
        bounds.rows.append((c.value, sc.gamma_db, sc.d_th, r.x_lo, r.x_hi, r.length, r.solver_status.value))
        label = f"{c.value} G={sc.gamma_db:g}dB" if c is Criterion.RSRP else f"{c.value} dth={sc.d_th:g}m"
        for x, p in zip(xs, region.probability(sc, c, xs, 0.0, h)):
            curves.rows.append((x, label, p))
    return {"fig3_boundaries.csv": bounds, "fig3_curves.csv": curves}


def fig4_pilot_sweep(ctx: Context) -> dict[str, Table]:
    s = ctx.scenario
    t = Table(["rho", "rho_n", "L_rsrp_m", "L_dist_m", "L_joint_m"], plot="lines")
    for rho in RHO_SWEEP:
        sc = s.replace(pilot_ratio=rho)
        lengths = [region.region_for(sc, c, 0.0, s.h_ref).length for c in Criterion]
        t.rows.append((rho, sc.rho_n, *lengths))
    return {"fig4_pilot_sweep.csv": t}


def fig5_altitude_lengths(ctx: Context) -> dict[str, Table]:
    s = ctx.scenario
    L = region.altitude_lengths(s, (Criterion.RSRP, Criterion.JOINT), workers=ctx.workers)
    lr, lj = L[Criterion.RSRP], L[Criterion.JOINT]
    t = Table(["h_m", "L_rsrp_m", "L_joint_m", "reduction"], plot="lines")
    for h, a, b in zip(s.altitudes, lr, lj):
        t.rows.append((h, a, b, 1.0 - b / a))
    summary = Table(["reduction_per_altitude", "reduction_grand_mean"])
    summary.rows.append((float(np.mean(1.0 - lj / lr)), float(1.0 - lj.mean() / lr.mean())))
    return {"fig5_altitude_lengths.csv": t, "fig5_summary.csv": summary}


def fig6_snr_improvement(ctx: Context) -> dict[str, Table]:
    s = ctx.scenario
    t = Table(
        ["snr_db", "improvement_joint", "improvement_dist", "mean_ratio_joint", "mean_ratio_dist"],
        plot="lines",
    )
    for snr in SNR_SWEEP_DB:
        g = 10.0 ** (snr / 10.0)
        vals = [
            region.activation_improvement(s, c, gamma_override=g, mode=m)
            for m in ("ratio-of-means", "mean-of-ratios")
            for c in (Criterion.JOINT, Criterion.DIST)
        ]
        t.rows.append((snr, *vals))
    return {"fig6_snr_improvement.csv": t}


def fig7_rate_diff(ctx: Context) -> dict[str, Table]:
    s = ctx.scenario
    xs, ys = s.x_grid(), s.y_grid()
    diff = region.rate_diff_map(s, s.h_ref, xs, ys)
    t = Table(["x_m", "y_m", "rate_diff_bps"], plot="heatmap")
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            t.rows.append((x, y, diff[i, j]))
    k = int(np.argmax(diff))
    summary = Table(["max_rate_diff_bps", "x_at_max_m", "y_at_max_m"])
    summary.rows.append((float(diff.flat[k]), float(xs[k // len(ys)]), float(ys[k % len(ys)])))
    return {"fig7_rate_diff.csv": t, "fig7_summary.csv": summary}


def mc_validate(ctx: Context) -> dict[str, Table]:
    s = ctx.scenario
    rep = montecarlo.validate_grid(
        s, montecarlo.default_points(s), trials=ctx.trials or 100_000,
        seed=ctx.seed, perturb=ctx.perturb, workers=ctx.workers,
    )
    t = Table(["point", "x", "y", "h_av", "criterion", "p_analytic", "p_empirical", "ci_lo", "ci_hi", "pass"])
    for r in rep.rows:
        t.rows.append((r.point, r.x, r.y, r.h_av, r.criterion, r.p_analytic, r.p_empirical, r.ci_lo, r.ci_hi, r.passed))
    tables = {"mc_validate.csv": t}
    if not rep.passed:
        raise ValidationFailure(
            f"{len(rep.failures())} of {len(rep.rows)} checks outside their CI "
            f"(pass fraction {rep.pass_fraction:.4f} < {rep.required_fraction})",
            tables,
        )
    return tables


def crlb_oracle(ctx: Context) -> dict[str, Table]:
    rows = oracle.crlb_efficiency_study(
        ctx.scenario, ORACLE_D_M, ORACLE_GAMMA_DB, trials=ctx.trials or 2000,
        seed=ctx.seed, workers=ctx.workers,
    )
    t = Table(list(oracle.STUDY_COLUMNS), plot=None)
    for r in rows:
        t.rows.append(tuple(getattr(r, c) for c in oracle.STUDY_COLUMNS))
    return {"crlb_oracle.csv": t}


EXPERIMENTS: dict[str, Callable[[Context], dict[str, Table]]] = {
    "fig2-probability-maps": fig2_probability_maps,
    "fig3-threshold-sweep": fig3_threshold_sweep,
    "fig4-pilot-sweep": fig4_pilot_sweep,
    "fig5-altitude-lengths": fig5_altitude_lengths,
    "fig6-snr-improvement": fig6_snr_improvement,
    "fig7-rate-diff": fig7_rate_diff,
    "mc-validate": mc_validate,
    "crlb-oracle": crlb_oracle,
}


def names() -> Sequence[str]:
    return tuple(EXPERIMENTS)

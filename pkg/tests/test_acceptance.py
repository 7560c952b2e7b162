"""One test per acceptance criterion, each printing PASS/FAIL lines at the stated tolerance.

Everything runs at the default 5 m grid. Run with ``pytest tests/test_acceptance.py -s``
to see the lines inline; they are also repeated in the terminal summary.
"""

import math
import time
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np

from isac_handover import cli, criteria, montecarlo, oracle, region, sensing
from isac_handover.region import Criterion
from isac_handover.scenario import SPEED_OF_LIGHT, distances

H = 200.0


def _within(value, target, tol):
    return abs(value - target) <= tol


def test_c1_reduction_headline(s, record):
    t0 = time.perf_counter()
    red = region.reduction_3d(s)
    dt = time.perf_counter() - t0
    ok = record("C1 reduction_3d", 0.672 <= red <= 0.832, f"{red:.4f} in [0.672, 0.832]")
    ok &= record("C1 runtime", dt <= 120.0, f"{dt:.1f} s <= 120 s")
    assert ok


def test_c2_activation_improvement(s, record):
    imp = {
        snr: {c: region.activation_improvement(s, c, gamma_override=10 ** (snr / 10)) for c in (Criterion.JOINT, Criterion.DIST)}
        for snr in range(-40, 21, 5)
    }
    j0, d0 = imp[0][Criterion.JOINT], imp[0][Criterion.DIST]
    alt = {c: region.activation_improvement(s, c, gamma_override=1.0, mode="mean-of-ratios") for c in (Criterion.JOINT, Criterion.DIST)}
    ok = record("C2 joint at 0 dB", 0.66 <= j0 <= 0.86,
                f"{j0:.4f} in [0.66, 0.86] (mean-of-ratios {alt[Criterion.JOINT]:.4f})")
    ok &= record("C2 sensing at 0 dB", 0.62 <= d0 <= 0.82,
                 f"{d0:.4f} in [0.62, 0.82] (mean-of-ratios {alt[Criterion.DIST]:.4f})")
    dominated = all(v[Criterion.JOINT] >= v[Criterion.DIST] for v in imp.values())
    ok &= record("C2 joint >= sensing at every SNR", dominated, f"{len(imp)} SNR points")
    dj = j0 - imp[-30][Criterion.JOINT]
    dd = d0 - imp[-30][Criterion.DIST]
    ok &= record("C2 decline 0 -> -30 dB", dj > 0 and dd > 0 and dj < dd,
                 f"joint drops {dj:.4f}, sensing drops {dd:.4f}")
    assert ok


def test_c3_fig2_regions(s, record):
    ok = True
    unions = {Criterion.RSRP: (-25.0, 465.0), Criterion.DIST: (-65.0, 150.0), Criterion.JOINT: (-115.0, 130.0)}
    for c, (lo_ref, hi_ref) in unions.items():
        lo, hi = region.plane_union_region(s, c, H)
        ok &= record(f"C3 union {c.value}", _within(lo, lo_ref, 25) and _within(hi, hi_ref, 25),
                     f"[{lo:.1f}, {hi:.1f}] vs [{lo_ref:g}, {hi_ref:g}] +-25 m")
    for c, ref in ((Criterion.RSRP, 235.0), (Criterion.DIST, 40.0), (Criterion.JOINT, 60.0)):
        L = region.region_for(s, c, 0.0, H).length
        ok &= record(f"C3 y=0 length {c.value}", _within(L, ref, 25), f"{L:.1f} m vs {ref:g} +-25 m")
    for c in Criterion:
        pr = region.plane_regions(s, c, H)
        ay = np.abs(pr.ys)
        order = np.lexsort((pr.lengths, ay))
        mono = bool(np.all(np.diff(pr.lengths[order]) >= -1e-6))
        ok &= record(f"C3 L non-decreasing in |y| {c.value}", mono, f"{pr.ys.size} rows")
    assert ok


def test_c4_threshold_robustness(s, record):
    lo0 = region.region_for(s.replace(gamma_db=0.0), Criterion.RSRP, 0.0, H).x_lo
    lo2 = region.region_for(s.replace(gamma_db=2.0), Criterion.RSRP, 0.0, H).x_lo
    ok = record("C4 RSRP boundary shift", lo2 - lo0 >= 90.0, f"{lo2 - lo0:.1f} m >= 90 m")
    los = [region.region_for(s.replace(d_th=t), Criterion.JOINT, 0.0, H).x_lo for t in (0.0, 25.0, 50.0, 100.0)]
    spread = max(los) - min(los)
    ok &= record("C4 joint boundary spread", spread <= 20.0,
                 f"{spread:.1f} m <= 20 m (x_lo {', '.join(f'{v:.1f}' for v in los)})")
    assert ok


def test_c5_pilot_ordering(s, record):
    def lengths(rho):
        sc = s.replace(pilot_ratio=rho)
        return {c: region.region_for(sc, c, 0.0, H).length for c in Criterion}

    L6 = lengths(0.06)
    ls, lj, lr = L6[Criterion.DIST], L6[Criterion.JOINT], L6[Criterion.RSRP]
    ok = record("C5 order at rho=0.06", ls > lj > lr, f"sensing {ls:.1f} > joint {lj:.1f} > rsrp {lr:.1f}")
    vals_ok = all(abs(v / r - 1) <= 0.15 for v, r in ((ls, 318.0), (lj, 251.0), (lr, 238.0)))
    ok &= record("C5 values at rho=0.06", vals_ok, "within 15% of 318/251/238 m")
    rhos = (0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20)
    Ls = [lengths(r) for r in rhos]
    ok &= record("C5 joint < rsrp for rho >= 0.08", all(L[Criterion.JOINT] < L[Criterion.RSRP] for L in Ls), f"{len(rhos)} ratios")
    lj_all = [lj] + [L[Criterion.JOINT] for L in Ls]
    ok &= record("C5 joint decreasing in rho", all(np.diff(lj_all) < 0), ", ".join(f"{v:.1f}" for v in lj_all))
    assert ok


def test_c6_rate_difference(s, record):
    diff = region.rate_diff_map(s, H)
    mx = float(diff.max())
    ok = record("C6 max rate gain", abs(mx / 2.67e6 - 1) <= 0.2, f"{mx / 1e6:.3f} Mbit/s vs 2.67 +-20%")
    xs = s.x_grid()
    far = xs[np.abs(xs) >= 900.0]
    edge = region.rate_diff_map(s, H, far, [0.0])
    worst = float(np.max(np.abs(edge)))
    ok &= record("C6 negligible at |x| >= 900 m", worst < 1e4, f"max |diff| {worst:.3g} bit/s < 1e4")
    assert ok


def _crlb_scripted(gamma, delta_f, m, k):
    getcontext().prec = 50
    pi = Decimal("3.14159265358979323846264338327950288419716939937510")
    sum_sq = sum(n * n for n in range(k))
    num = Fraction(SPEED_OF_LIGHT) ** 2 * 6
    den = Fraction(16) * Fraction(gamma) * Fraction(delta_f) ** 2 * m * 6 * sum_sq
    return float(Decimal(num.numerator * den.denominator) / Decimal(num.denominator * den.numerator) / (pi * pi))


def test_c7_crlb_closed_form(record):
    got = sensing.crlb_exact_m2(1.0, 2e5, 64, 10)
    ref = _crlb_scripted(1.0, 2e5, 64, 10)
    rel = abs(got / ref - 1)
    ok = record("C7 exact CRLB", rel <= 1e-12, f"{got!r} vs {ref!r}, rel {rel:.1e}")
    n = 2048
    worst = 0.0
    for k in range(32, n + 1):
        rho = k / n
        ex = sensing.crlb_exact_m2(1.0, 2e5, 64, k)
        ap = sensing.crlb_approx_m2(1.0, rho, 64, n, k * 2e5)
        worst = max(worst, abs(ap / ex - 1))
    ok &= record("C7 approximation for rho N >= 32", worst <= 0.05, f"worst rel error {worst:.4f} <= 0.05")
    assert ok


def test_c8_waveform_oracle(s, record):
    t0 = time.perf_counter()
    (row,) = oracle.crlb_efficiency_study(s, [500.0], [10.0], trials=2000, seed=2026)
    dt = time.perf_counter() - t0
    ok = record("C8 variance / CRLB at 10 dB", 0.8 <= row.ratio <= 2.0, f"{row.ratio:.3f} in [0.8, 2.0]")
    f = oracle.gen_echo(s, 500.0, math.inf, seed=0)
    err = abs(oracle.ml_delay_estimate(f)[0] - f.tau_true)
    ok &= record("C8 noiseless delay", err <= 1e-10, f"|err| {err:.2e} s <= 1e-10")
    ok &= record("C8 runtime", dt <= 300.0, f"{dt:.1f} s <= 300 s")
    assert ok


def test_c9_monte_carlo(s, record):
    pts = montecarlo.default_points(s)
    rep = montecarlo.validate_grid(s, pts, trials=100_000, seed=2026)
    ok = record("C9 closed forms inside 99% CIs", rep.passed,
                f"{rep.pass_fraction:.3f} of {len(rep.rows)} checks over {len(pts)} points")
    bad = montecarlo.validate_grid(s, pts, trials=100_000, seed=2026, perturb=0.05)
    ok &= record("C9 +0.05 perturbation detected", not bad.passed, f"pass fraction drops to {bad.pass_fraction:.3f}")
    assert ok


def test_c10_properties(s, record, tmp_path):
    rng = np.random.default_rng(10)
    x = rng.uniform(-1000, 1000, 20_000)
    y = rng.uniform(-1000, 1000, x.size)
    h = rng.uniform(120, 300, x.size)
    d_s, d_t = distances(s, x, y, h)
    pr = criteria.p_ho_rsrp(s, d_s, d_t, h)
    pd = criteria.p_ho_dist(s, d_s, d_t)
    pj = criteria.p_ho_joint(pr, pd)
    ok = record("C10 joint dominance", bool(np.all(pj >= np.maximum(pr, pd))), f"{x.size} random points")
    ie = float(np.max(np.abs((1 - pj) - (1 - pr) * (1 - pd))))
    ok &= record("C10 inclusion-exclusion", ie <= 1e-12, f"max residual {ie:.1e}")
    z = rng.normal(0, 5, 10_000)
    qs = float(np.max(np.abs(criteria.q_function(z) + criteria.q_function(-z) - 1)))
    ok &= record("C10 Q symmetry", qs <= 1e-15, f"max |Q(x)+Q(-x)-1| {qs:.1e}")

    ys = np.arange(-1000.0, 1001.0, 100.0)
    order_ok = True
    for hh in (120.0, 200.0, 300.0):
        for lvl in (region.LEVEL_LO, region.LEVEL_HI):
            xj, _ = region.solve_boundaries(s, Criterion.JOINT, ys, hh, lvl)
            for c in (Criterion.RSRP, Criterion.DIST):
                xc, _ = region.solve_boundaries(s, c, ys, hh, lvl)
                m = ~np.isnan(xj) & ~np.isnan(xc)
                order_ok &= bool(np.all(xj[m] <= xc[m] + 1e-6))
    ok &= record("C10 boundary ordering", order_ok, "joint boundary <= component boundaries")

    g = np.logspace(-3, 3, 13)
    grid = np.array([[[sensing.crlb_exact_m2(gg, 2e5, m, k) for k in (4, 8, 16, 32)] for m in (16, 32, 64)] for gg in g])
    mono = all(np.all(np.diff(grid, axis=a) < 0) for a in range(3))
    ok &= record("C10 CRLB monotonicity", mono, "decreasing in gamma, M and rho N")

    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.run(["--experiment", "fig3-threshold-sweep", "--out", str(out), "--plots"]) == 0
        assert cli.run(["--experiment", "mc-validate", "--trials", "2000", "--seed", "5", "--out", str(out)]) in (0, 3)
        digests.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok &= record("C10 byte-identical reruns", digests[0] == digests[1], f"{len(digests[0])} files")
    assert ok

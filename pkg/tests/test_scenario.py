import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isac_handover.scenario import (
    DronePosition,
    Scenario,
    ScenarioError,
    check,
    distances,
    load_scenario,
    validate,
)


def test_table_defaults_are_valid(s):
    assert validate(s) == []
    assert s.n_t == 32
    assert s.rho_n == 10
    assert s.t_u == pytest.approx(5e-6)
    assert s.t_symbol == pytest.approx(6.25e-6)
    assert s.altitudes == tuple(float(h) for h in range(120, 301, 20))


def test_midpoint_distance(s):
    d_s, d_t = distances(s, 0.0, 0.0, 200.0)
    # sqrt(1000^2 + 175^2)
    assert d_s == pytest.approx(1015.197025212347635, rel=1e-14)
    assert d_s == d_t


def test_collocation_limit(s):
    for eps in (1.0, 1e-3, 1e-6):
        _, d_t = distances(s, 1000.0, 0.0, 25.0 + eps)
        assert d_t == pytest.approx(eps)


def test_crlb_degenerate_reported(s):
    codes = [c for c, _ in validate(s.replace(pilot_ratio=0.02))]
    assert "crlb-degenerate" in codes


def test_grid_inconsistent_reported(s):
    codes = [c for c, _ in validate(s.replace(delta_f=100e3))]
    assert "grid-inconsistent" in codes


def test_all_problems_reported_at_once(s):
    bad = s.replace(pilot_ratio=0.02, delta_f=100e3, nx=0, h_bs=-1.0)
    codes = {c for c, _ in validate(bad)}
    assert {"crlb-degenerate", "grid-inconsistent", "antenna-count", "non-positive"} <= codes
    with pytest.raises(ScenarioError) as exc:
        check(bad)
    assert len(exc.value.problems) >= 4


coord = st.floats(-1000, 1000, allow_nan=False)
alt = st.floats(30, 400, allow_nan=False)


@given(coord, coord, alt)
def test_distance_symmetries(x, y, h):
    s = Scenario()
    d_s, d_t = distances(s, x, y, h)
    m_s, m_t = distances(s, -x, y, h)
    assert (m_s, m_t) == pytest.approx((d_t, d_s), rel=1e-12)
    assert distances(s, x, -y, h) == pytest.approx((d_s, d_t), rel=1e-15)


@given(coord, alt)
def test_distance_gap_increasing_in_x(y, h):
    s = Scenario()
    xs = np.linspace(-1000, 1000, 401)
    d_s, d_t = distances(s, xs, y, h)
    assert np.all(np.diff(d_s - d_t) > 0)


def test_distances_match_norm(s):
    p = DronePosition(123.0, -45.0, 180.0)
    d_s, d_t = distances(s, p.x, p.y, p.h_av)
    q = np.array([p.x, p.y, p.h_av])
    assert d_s == pytest.approx(np.linalg.norm(q - s.serving_bs))
    assert d_t == pytest.approx(np.linalg.norm(q - s.target_bs))


def test_load_empty_config_gives_defaults(tmp_path):
    cfg = tmp_path / "empty.toml"
    cfg.write_text("")
    assert load_scenario(cfg) == Scenario()


def test_precedence_defaults_file_overrides(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[handover]\ngamma_db = 1.0\nd_th = 25.0\n[grid]\naltitudes = [150, 250]\n")
    s = load_scenario(cfg, ["d_th=75", "ofdm.pilot_ratio=0.1"])
    assert s.gamma_db == 1.0  # file beats default
    assert s.d_th == 75.0  # override beats file
    assert s.pilot_ratio == 0.1
    assert s.altitudes == (150.0, 250.0)
    assert s.n_symbols == 64  # untouched default


@pytest.mark.parametrize("bad", ["nosuchkey=1", "radio.d_th=3", "d_th", "n_symbols=1.5"])
def test_bad_overrides_name_the_key(bad):
    with pytest.raises(ScenarioError) as exc:
        load_scenario(None, [bad])
    key = bad.split("=")[0].split(".")[-1]
    assert key in str(exc.value)


def test_unknown_section_rejected(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[beams]\nwidth = 3\n")
    with pytest.raises(ScenarioError, match="beams"):
        load_scenario(cfg)


def test_gamma_override_parsing():
    assert load_scenario(None, ["gamma_override=1.0"]).gamma_override == 1.0
    assert load_scenario(None, ["gamma_override=none"]).gamma_override is None


def test_digest_is_stable_and_sensitive(s):
    assert s.digest() == Scenario().digest()
    assert s.digest() != s.replace(d_th=51.0).digest()
    assert math.isfinite(float(int(s.digest(), 16)))

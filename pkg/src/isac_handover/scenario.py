"""Two-BS geometry and the simulation parameter set.

The serving BS sits at (-x_BS, 0, h_BS), the target BS at (x_BS, 0, h_BS),
and the drone moves in the plane z = h_AV. Every experiment reads its
parameters (radio, OFDM grid, thresholds, evaluation grids) from a single
:class:`Scenario`.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SPEED_OF_LIGHT = 3e8


class ScenarioError(ValueError):
    """Invalid scenario or configuration.

    ``problems`` holds ``(code, message)`` pairs, one per violated invariant.
    """

    def __init__(self, problems: Sequence[tuple[str, str]]):
        self.problems = list(problems)
        super().__init__("; ".join(f"{code}: {msg}" for code, msg in self.problems))

    @property
    def codes(self) -> list[str]:
        return [code for code, _ in self.problems]


@dataclass(frozen=True)
class Scenario:
    # radio
    fc: float = 2e9
    bandwidth_b: float = 10e6
    p_sum_dbm: float = 42.0
    noise_dbm: float = -100.0
    nx: int = 8
    ny: int = 4
    # geometry
    bs_half_spacing: float = 1000.0
    h_bs: float = 25.0
    # OFDM / sensing
    n_symbols: int = 64
    n_subcarriers: int = 50
    delta_f: float = 200e3
    t_cp: float = 1.25e-6
    pilot_ratio: float = 0.2
    rcs: float = 0.1
    gamma_override: float | None = None
    # handover thresholds
    gamma_db: float = 2.0
    d_th: float = 50.0
    # shadow fading sigma = a * exp(-b * h)
    sf_coeff_a: float = 4.64
    sf_coeff_b: float = 0.0066
    # evaluation grids
    x_step: float = 5.0
    y_min: float = -1000.0
    y_max: float = 1000.0
    y_step: float = 5.0
    altitudes: tuple[float, ...] = field(
        default=tuple(float(h) for h in range(120, 301, 20))
    )
    h_ref: float = 200.0

    @property
    def n_t(self) -> int:
        return self.nx * self.ny

    @property
    def t_u(self) -> float:
        return 1.0 / self.delta_f

    @property
    def t_symbol(self) -> float:
        return self.t_u + self.t_cp

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc

    @property
    def rho_n(self) -> int:
        """Number of sensing subcarriers per symbol, rounded to an integer."""
        return int(round(self.pilot_ratio * self.n_subcarriers))

    @property
    def sensing_bandwidth(self) -> float:
        return self.pilot_ratio * self.bandwidth_b

    @property
    def serving_bs(self) -> np.ndarray:
        return np.array([-self.bs_half_spacing, 0.0, self.h_bs])

    @property
    def target_bs(self) -> np.ndarray:
        return np.array([self.bs_half_spacing, 0.0, self.h_bs])

    def x_grid(self) -> np.ndarray:
        return _arange_inclusive(-self.bs_half_spacing, self.bs_half_spacing, self.x_step)

    def y_grid(self) -> np.ndarray:
        return _arange_inclusive(self.y_min, self.y_max, self.y_step)

    def replace(self, **changes: Any) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["altitudes"] = list(self.altitudes)
        return d

    def digest(self) -> str:
        """Short stable hash of every field, used to stamp output files."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class DronePosition:
    x: float
    y: float
    h_av: float


def _arange_inclusive(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def validate(s: Scenario) -> list[tuple[str, str]]:
    """Return every violated invariant as ``(code, message)``; empty means valid."""
    problems: list[tuple[str, str]] = []
    for name in ("fc", "bandwidth_b", "bs_half_spacing", "h_bs", "delta_f"):
        if not getattr(s, name) > 0:
            problems.append(("non-positive", f"{name} must be > 0, got {getattr(s, name)}"))
    if s.nx < 1 or s.ny < 1:
        problems.append(("antenna-count", f"nx, ny must be >= 1, got {s.nx}x{s.ny}"))
    if s.n_symbols < 1 or s.n_subcarriers < 1:
        problems.append(("ofdm-grid", "n_symbols and n_subcarriers must be >= 1"))
    if not 0 < s.pilot_ratio <= 1:
        problems.append(("pilot-ratio", f"pilot_ratio must lie in (0, 1], got {s.pilot_ratio}"))
    if s.bandwidth_b > 0 and abs(s.n_subcarriers * s.delta_f - s.bandwidth_b) > 1e-9 * s.bandwidth_b:
        problems.append((
            "grid-inconsistent",
            f"n_subcarriers * delta_f = {s.n_subcarriers * s.delta_f:g} Hz != bandwidth_b = {s.bandwidth_b:g} Hz",
        ))
    if s.pilot_ratio * s.n_subcarriers < 2:
        problems.append((
            "crlb-degenerate",
            f"pilot_ratio * n_subcarriers = {s.pilot_ratio * s.n_subcarriers:g} < 2",
        ))
    if s.rcs <= 0:
        problems.append(("non-positive", f"rcs must be > 0, got {s.rcs}"))
    if s.gamma_override is not None and not s.gamma_override > 0:
        problems.append(("non-positive", f"gamma_override must be > 0, got {s.gamma_override}"))
    if s.x_step <= 0 or s.y_step <= 0 or s.y_max < s.y_min:
        problems.append(("eval-grid", "grid steps must be > 0 and y_max >= y_min"))
    if not s.altitudes:
        problems.append(("eval-grid", "altitudes must be non-empty"))
    return problems


def check(s: Scenario) -> Scenario:
    problems = validate(s)
    if problems:
        raise ScenarioError(problems)
    return s


def distances(s: Scenario, x, y, h_av):
    """Euclidean distances (d_S, d_T) from the drone to the serving and target BS.

    Accepts scalars or broadcastable arrays.
    """
    dz2 = (np.asarray(h_av, dtype=float) - s.h_bs) ** 2
    y2 = np.asarray(y, dtype=float) ** 2
    x = np.asarray(x, dtype=float)
    d_s = np.sqrt((x + s.bs_half_spacing) ** 2 + y2 + dz2)
    d_t = np.sqrt((x - s.bs_half_spacing) ** 2 + y2 + dz2)
    return d_s, d_t


# -- configuration files ----------------------------------------------------

# TOML section -> fields it may contain; a flat top-level key is accepted too.
SECTIONS: dict[str, tuple[str, ...]] = {
    "radio": ("fc", "bandwidth_b", "p_sum_dbm", "noise_dbm", "nx", "ny"),
    "geometry": ("bs_half_spacing", "h_bs"),
    "ofdm": ("n_symbols", "n_subcarriers", "delta_f", "t_cp", "pilot_ratio", "rcs", "gamma_override"),
    "handover": ("gamma_db", "d_th"),
    "shadowing": ("sf_coeff_a", "sf_coeff_b"),
    "grid": ("x_step", "y_min", "y_max", "y_step", "altitudes", "h_ref"),
}
_FIELDS = {f.name: f for f in dataclasses.fields(Scenario)}


def _coerce(key: str, value: Any) -> Any:
    default = _FIELDS[key].default
    if key == "altitudes":
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split() if v]
        return tuple(float(v) for v in value)
    if key == "gamma_override":
        if value is None or (isinstance(value, str) and value.lower() in ("", "none", "null")):
            return None
        return float(value)
    if isinstance(default, bool):
        return value in (True, "true", "True", "1", 1)
    if isinstance(default, int):
        f = float(value)
        if f != int(f):
            raise ValueError(f"expected an integer, got {value!r}")
        return int(f)
    return float(value)


def _flatten(raw: Mapping[str, Any]) -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, Mapping):
            allowed = SECTIONS.get(key)
            if allowed is None:
                raise ScenarioError([("unknown-key", f"unknown section [{key}]")])
            for sub, v in value.items():
                if sub not in allowed:
                    raise ScenarioError([("unknown-key", f"unknown key {key}.{sub}")])
                flat[sub] = v
        else:
            flat[key] = value
    return flat


def from_mapping(raw: Mapping[str, Any], base: Scenario | None = None) -> Scenario:
    changes = {}
    for key, value in _flatten(raw).items():
        if key not in _FIELDS:
            raise ScenarioError([("unknown-key", f"unknown scenario key {key!r}")])
        try:
            changes[key] = _coerce(key, value)
        except (TypeError, ValueError) as exc:
            raise ScenarioError([("bad-value", f"{key}: {exc}")]) from None
    return (base or Scenario()).replace(**changes)


def parse_overrides(pairs: Sequence[str]) -> dict[str, str]:
    """Parse ``key=value`` strings; ``section.key=value`` is accepted as well."""
    out: dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ScenarioError([("bad-override", f"expected key=value, got {pair!r}")])
        if "." in key:
            section, _, key = key.partition(".")
            if section not in SECTIONS or key not in SECTIONS[section]:
                raise ScenarioError([("unknown-key", f"unknown key {section}.{key}")])
        out[key] = value.strip()
    return out


def load_scenario(path: str | Path | None = None, overrides: Sequence[str] = ()) -> Scenario:
    """Build a validated scenario: defaults < config file < ``key=value`` overrides."""
    s = Scenario()
    if path is not None:
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ScenarioError([("bad-config", f"{path}: {exc}")]) from None
        s = from_mapping(raw, s)
    if overrides:
        s = from_mapping(parse_overrides(overrides), s)
    return check(s)

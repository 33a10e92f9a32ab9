"""Problem instance definition, validation and config I/O.

All lengths are stored internally as multiples of the carrier wavelength
(lambda = 1 internal unit).  All powers are converted from dBm to linear
(mW) once at load time; solver code never sees dB quantities.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import yaml


class ScenarioError(ValueError):
    """Raised when a config fails to parse or violates an invariant."""


def dbm_to_linear(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class ArrayGeometry:
    """BS array: M horizontal sliding tracks, each a vertical ULA of N antennas."""

    num_tracks: int
    antennas_per_track: int
    span: float             # L, wavelengths
    min_separation: float   # d_min, wavelengths
    max_speed: float = 1.0  # V_max, wavelengths / second

    def __post_init__(self):
        if self.num_tracks < 1:
            raise ScenarioError("geometry.M: must be >= 1")
        if self.antennas_per_track < 1:
            raise ScenarioError("geometry.N: must be >= 1")
        if not self.span > 0:
            raise ScenarioError("geometry.L: must be > 0")
        if not self.min_separation > 0:
            raise ScenarioError("geometry.d_min: must be > 0")
        if self.max_speed < 0:
            raise ScenarioError("geometry.V_max: must be >= 0")
        if (self.num_tracks - 1) * self.min_separation > self.span:
            raise ScenarioError(
                "geometry: infeasible geometry, (M-1)*d_min = %g exceeds L = %g"
                % ((self.num_tracks - 1) * self.min_separation, self.span)
            )

    @property
    def vertical_grid(self) -> np.ndarray:
        """Half-wavelength vertical antenna coordinates on each track."""
        return 0.5 * np.arange(self.antennas_per_track)

    @property
    def num_elements(self) -> int:
        return self.num_tracks * self.antennas_per_track


@dataclass(frozen=True)
class UserSpec:
    """Single-antenna uplink user: physical AoAs, transmit power, path gain."""

    theta: float       # elevation, radians
    phi: float         # azimuth, radians
    power_dbm: float
    beta: float        # large-scale gain, linear

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ScenarioError("user.theta/phi: must be finite")
        if not math.isfinite(self.power_dbm):
            raise ScenarioError("user.power_dbm: must be finite")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ScenarioError("user.beta: must be finite and > 0")

    @property
    def virtual_aoa_h(self) -> float:
        """Horizontal virtual AoA cos(theta)*cos(phi); |.| <= 1 by construction."""
        return math.cos(self.theta) * math.cos(self.phi)

    @property
    def virtual_aoa_v(self) -> float:
        """Vertical virtual AoA sin(theta)."""
        return math.sin(self.theta)

    @property
    def power_linear(self) -> float:
        return dbm_to_linear(self.power_dbm)


@dataclass(frozen=True)
class SolverConfig:
    num_starts: int = 16
    sca_max_iters: int = 100
    sca_rel_tol: float = 1e-5
    ellipsoid_max_iters: int = 500
    ellipsoid_tol: float = 1e-4
    pattern_merge_tol: float = 0.05       # wavelengths, max-norm dedup radius
    concurrent_max_rel_tol: float = 1e-3  # membership slack for the maximizing set
    grid_step: float = 0.01               # wavelengths
    quadrature_samples_per_segment: int = 200
    rng_seed: int = 12345

    def __post_init__(self):
        if self.num_starts < 1:
            raise ScenarioError("solver.num_starts: must be >= 1")
        for name in ("sca_rel_tol", "ellipsoid_tol", "pattern_merge_tol",
                     "concurrent_max_rel_tol", "grid_step"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"solver.{name}: must be > 0")
        if self.quadrature_samples_per_segment < 2:
            raise ScenarioError("solver.quadrature_samples_per_segment: must be >= 2")


@dataclass(frozen=True)
class Scenario:
    """Validated problem instance; immutable, safe to share across workers."""

    geometry: ArrayGeometry
    users: tuple[UserSpec, ...]
    noise_dbm: float
    horizon: float  # T, seconds
    solver: SolverConfig = field(default_factory=SolverConfig)
    wavelength_m: float = 1.0  # display only; internals are in wavelengths

    def __post_init__(self):
        if len(self.users) < 1:
            raise ScenarioError("users: at least one user required")
        if not self.horizon > 0:
            raise ScenarioError("horizon_T: must be > 0")
        if self.solver.grid_step > self.geometry.min_separation:
            raise ScenarioError("solver.grid_step: must be <= geometry.d_min")
        # cache the per-user arrays the solvers consume
        object.__setattr__(self, "_vh", np.array([u.virtual_aoa_h for u in self.users]))
        object.__setattr__(self, "_vv", np.array([u.virtual_aoa_v for u in self.users]))
        object.__setattr__(self, "_beta", np.array([u.beta for u in self.users]))
        noise = dbm_to_linear(self.noise_dbm)
        pnorm = np.array([u.power_linear for u in self.users]) / noise
        if not np.all(pnorm > 0):
            raise ScenarioError("users: all normalized powers must be > 0")
        object.__setattr__(self, "_pnorm", pnorm)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def virtual_aoa_h(self) -> np.ndarray:
        return self._vh

    @property
    def virtual_aoa_v(self) -> np.ndarray:
        return self._vv

    @property
    def betas(self) -> np.ndarray:
        return self._beta

    @property
    def norm_powers(self) -> np.ndarray:
        """P_k / sigma^2, linear."""
        return self._pnorm


def apply_aoa_error(scn: Scenario, error: float) -> Scenario:
    """Copy of the scenario with all physical AoAs shifted by `error` radians.

    Used for robustness sweeps: plan on the perturbed scenario, evaluate on
    the true one.
    """
    users = tuple(
        dataclasses.replace(u, theta=u.theta + error, phi=u.phi + error)
        for u in scn.users
    )
    return dataclasses.replace(scn, users=users)


# ---------------------------------------------------------------------------
# config (de)serialization
# ---------------------------------------------------------------------------

def _user_from_dict(d: dict, idx: int) -> UserSpec:
    try:
        theta = float(d["theta"])
        phi = float(d["phi"])
        power = float(d["power_dbm"])
    except KeyError as e:
        raise ScenarioError(f"users[{idx}]: missing key {e}") from None
    if "beta" in d:
        beta = float(d["beta"])
    elif "path_loss" in d:
        pl = d["path_loss"]
        try:
            beta = float(pl["beta0"]) * float(pl["r"]) ** (-float(pl["alpha0"]))
        except KeyError as e:
            raise ScenarioError(f"users[{idx}].path_loss: missing key {e}") from None
    else:
        raise ScenarioError(f"users[{idx}]: needs either 'beta' or 'path_loss'")
    return UserSpec(theta=theta, phi=phi, power_dbm=power, beta=beta)


def scenario_from_dict(cfg: dict) -> Scenario:
    try:
        g = cfg["geometry"]
        geom = ArrayGeometry(
            num_tracks=int(g["M"]),
            antennas_per_track=int(g["N"]),
            span=float(g["L"]),
            min_separation=float(g["d_min"]),
            max_speed=float(g.get("V_max", 1.0)),
        )
        users = tuple(_user_from_dict(u, i) for i, u in enumerate(cfg["users"]))
        solver = SolverConfig(**cfg.get("solver", {}))
        return Scenario(
            geometry=geom,
            users=users,
            noise_dbm=float(cfg["noise_dbm"]),
            horizon=float(cfg["horizon_T"]),
            solver=solver,
            wavelength_m=float(cfg.get("wavelength_m", 1.0)),
        )
    except ScenarioError:
        raise
    except KeyError as e:
        raise ScenarioError(f"config: missing key {e}") from None
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"config: {e}") from None


def scenario_to_dict(scn: Scenario) -> dict:
    g = scn.geometry
    return {
        "geometry": {
            "M": g.num_tracks,
            "N": g.antennas_per_track,
            "L": g.span,
            "d_min": g.min_separation,
            "V_max": g.max_speed,
        },
        "users": [
            {"theta": u.theta, "phi": u.phi, "power_dbm": u.power_dbm, "beta": u.beta}
            for u in scn.users
        ],
        "noise_dbm": scn.noise_dbm,
        "horizon_T": scn.horizon,
        "solver": dataclasses.asdict(scn.solver),
        "wavelength_m": scn.wavelength_m,
    }


def load_scenario(path) -> Scenario:
    """Load and validate a YAML/JSON scenario config."""
    with open(path, "r") as f:
        try:
            cfg = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ScenarioError(f"config: parse failure: {e}") from None
    if not isinstance(cfg, dict):
        raise ScenarioError("config: top level must be a mapping")
    return scenario_from_dict(cfg)


def save_scenario(scn: Scenario, path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(scenario_to_dict(scn), f, sort_keys=False)

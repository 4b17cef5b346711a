"""Random channel realizations for an RIS-assisted uplink.

Large-scale fading follows ``T0 * (d / d0) ** -alpha`` with ``d0 = 1`` m.
The direct device-AP links are Rayleigh, the device-RIS and RIS-AP links
are Rician with a far-field line-of-sight component built from array
steering vectors (uniform linear array at the AP, uniform planar array at
the RIS, half-wavelength spacing).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

REFERENCE_DISTANCE = 1.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator; ``seed`` may be an int, a tuple of ints or a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, (tuple, list)):
        ss = np.random.SeedSequence([int(s) for s in seed])
    else:
        ss = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Geometry:
    """Positions in meters. Defaults place the AP at (0, 0, 20), the RIS at
    (100, 0, 20) and the devices in a horizontal disk around (100, 20, 0)."""

    ap: tuple = (0.0, 0.0, 20.0)
    ris: tuple = (100.0, 0.0, 20.0)
    device_center: tuple = (100.0, 20.0, 0.0)
    device_radius: float = 20.0
    # array orientation is not fixed by the model; these are defaults
    ap_axis: tuple = (0.0, 1.0, 0.0)
    ris_axes: tuple = ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    ris_rows: int | None = None


@dataclass(frozen=True)
class SystemConfig:
    K: int = 10
    M: int = 10
    N: int = 50
    P: float = 1.0  # 30 dBm
    sigma2: float = 1e-12  # -90 dBm
    T0: float = 1e-3  # -30 dB
    alpha_da: float = 3.8
    alpha_dr: float = 2.5
    alpha_ra: float = 2.2
    rician_beta: float = 3.0
    geometry: Geometry = field(default_factory=Geometry)

    def __post_init__(self):
        for name in ("K", "M", "N"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        for name in ("P", "sigma2", "T0", "alpha_da", "alpha_dr", "alpha_ra"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.rician_beta >= 0:
            raise ValueError(f"rician_beta must be nonnegative, got {self.rician_beta!r}")
        if not self.geometry.device_radius >= 0:
            raise ValueError("device radius must be nonnegative")

    def replace(self, **changes) -> "SystemConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of every link.

    ``h_direct`` is (K, M), ``G`` is (M, N) and ``h_reflect`` is (K, N);
    row ``k`` of ``h_direct``/``h_reflect`` belongs to device ``k``.
    """

    h_direct: np.ndarray
    G: np.ndarray
    h_reflect: np.ndarray
    device_positions: np.ndarray | None = None

    def __post_init__(self):
        K, M = self.h_direct.shape
        if self.G.shape[0] != M or self.h_reflect.shape != (K, self.G.shape[1]):
            raise ValueError(
                f"inconsistent channel shapes: h_direct {self.h_direct.shape}, "
                f"G {self.G.shape}, h_reflect {self.h_reflect.shape}"
            )
        for arr in (self.h_direct, self.G, self.h_reflect):
            if not np.all(np.isfinite(arr)):
                raise ValueError("channel entries must be finite")

    @property
    def K(self) -> int:
        return self.h_direct.shape[0]

    @property
    def M(self) -> int:
        return self.h_direct.shape[1]

    @property
    def N(self) -> int:
        return self.G.shape[1]


def path_loss(d, alpha, T0):
    """Linear power gain ``T0 * (d / d0) ** -alpha`` with ``d0 = 1`` m."""
    d = np.asarray(d, dtype=float)
    if np.any(d < REFERENCE_DISTANCE):
        raise ValueError(f"distance below the {REFERENCE_DISTANCE} m reference distance")
    if alpha < 0 or not T0 > 0:
        raise ValueError("path loss needs alpha >= 0 and T0 > 0")
    out = T0 * (d / REFERENCE_DISTANCE) ** (-float(alpha))
    return float(out) if out.ndim == 0 else out


def complex_normal(rng, shape):
    """i.i.d. CN(0, 1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_rician(rows, cols, beta, los, rng):
    """``sqrt(beta/(1+beta)) * los + sqrt(1/(1+beta)) * nlos`` with CN(0, 1) ``nlos``."""
    if beta < 0:
        raise ValueError(f"Rician factor must be nonnegative, got {beta!r}")
    los = np.asarray(los, dtype=complex)
    if los.shape != (rows, cols):
        raise ValueError(f"LoS matrix has shape {los.shape}, expected {(rows, cols)}")
    nlos = complex_normal(rng, (rows, cols))
    if np.isinf(beta):
        return los.copy()
    return np.sqrt(beta / (1.0 + beta)) * los + np.sqrt(1.0 / (1.0 + beta)) * nlos


def ula_steering(M, axis, direction):
    """Unit-modulus response of an M-element half-wavelength ULA along ``axis``."""
    cos_angle = float(np.dot(axis, direction))
    return np.exp(1j * np.pi * np.arange(M) * cos_angle)


def upa_steering(rows, cols, axes, direction):
    """Response of a ``rows x cols`` half-wavelength UPA, flattened row-major."""
    u = float(np.dot(axes[0], direction))
    w = float(np.dot(axes[1], direction))
    phase = np.pi * (np.arange(rows)[:, None] * w + np.arange(cols)[None, :] * u)
    return np.exp(1j * phase).ravel()


def ris_shape(N, rows=None):
    if rows is None:
        rows = max(r for r in range(1, int(np.sqrt(N)) + 1) if N % r == 0)
    if N % rows:
        raise ValueError(f"{rows} rows do not tile {N} RIS elements")
    return rows, N // rows


def _unit(vec):
    vec = np.asarray(vec, dtype=float)
    return vec / np.linalg.norm(vec)


def sample_devices(geometry: Geometry, K, rng):
    """K positions drawn uniformly from the horizontal device disk."""
    radius = geometry.device_radius * np.sqrt(rng.uniform(size=K))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=K)
    pos = np.tile(np.asarray(geometry.device_center, dtype=float), (K, 1))
    pos[:, 0] += radius * np.cos(angle)
    pos[:, 1] += radius * np.sin(angle)
    return pos


def generate_scenario(config: SystemConfig, seed) -> ChannelRealization:
    rng = make_rng(seed)
    geo = config.geometry
    K, M, N = config.K, config.M, config.N
    ap = np.asarray(geo.ap, dtype=float)
    ris = np.asarray(geo.ris, dtype=float)
    rows, cols = ris_shape(N, geo.ris_rows)
    ris_axes = (_unit(geo.ris_axes[0]), _unit(geo.ris_axes[1]))
    ap_axis = _unit(geo.ap_axis)

    devices = sample_devices(geo, K, rng)

    # device -> AP, Rayleigh; drawn before any N-dependent link so sweeps over N share it
    d_da = np.maximum(np.linalg.norm(devices - ap, axis=1), REFERENCE_DISTANCE)
    h_direct = np.sqrt(path_loss(d_da, config.alpha_da, config.T0))[:, None] * complex_normal(
        rng, (K, M)
    )

    # RIS -> AP
    d_ra = np.linalg.norm(ap - ris)
    g_los = np.outer(
        ula_steering(M, ap_axis, _unit(ris - ap)),
        upa_steering(rows, cols, ris_axes, _unit(ap - ris)).conj(),
    )
    G = np.sqrt(path_loss(d_ra, config.alpha_ra, config.T0)) * sample_rician(
        M, N, config.rician_beta, g_los, rng
    )

    # device -> RIS
    h_reflect = np.empty((K, N), dtype=complex)
    d_dr = np.maximum(np.linalg.norm(devices - ris, axis=1), REFERENCE_DISTANCE)
    for k in range(K):
        los = upa_steering(rows, cols, ris_axes, _unit(devices[k] - ris))[None, :]
        h_reflect[k] = np.sqrt(path_loss(d_dr[k], config.alpha_dr, config.T0)) * sample_rician(
            1, N, config.rician_beta, los, rng
        )[0]

    return ChannelRealization(h_direct, G, h_reflect, devices)


_CONFIG_KEYS = {
    "k", "m", "n", "power_dbm", "noise_dbm", "t0_db", "alpha_da", "alpha_dr", "alpha_ra",
    "rician_beta", "positions", "radius", "seed", "ap_axis", "ris_axes", "ris_rows",
}


def config_from_dict(raw: dict) -> tuple[SystemConfig, int | None]:
    """Build a config from scenario keys; dB/dBm fields are converted to linear."""
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    defaults = SystemConfig()
    geo_defaults = Geometry()
    positions = raw.get("positions") or {}
    geo_kwargs = {}
    for key, attr in (("ap", "ap"), ("ris", "ris"), ("devices", "device_center")):
        if key in positions:
            geo_kwargs[attr] = tuple(float(c) for c in positions[key])
    if "radius" in raw:
        geo_kwargs["device_radius"] = float(raw["radius"])
    if "ap_axis" in raw:
        geo_kwargs["ap_axis"] = tuple(float(c) for c in raw["ap_axis"])
    if "ris_axes" in raw:
        geo_kwargs["ris_axes"] = tuple(tuple(float(c) for c in ax) for ax in raw["ris_axes"])
    if "ris_rows" in raw:
        geo_kwargs["ris_rows"] = int(raw["ris_rows"])
    geometry = Geometry(**{**geo_defaults.__dict__, **geo_kwargs})

    config = SystemConfig(
        K=int(raw.get("k", defaults.K)),
        M=int(raw.get("m", defaults.M)),
        N=int(raw.get("n", defaults.N)),
        P=float(dbm_to_watts(raw["power_dbm"])) if "power_dbm" in raw else defaults.P,
        sigma2=float(dbm_to_watts(raw["noise_dbm"])) if "noise_dbm" in raw else defaults.sigma2,
        T0=float(db_to_linear(raw["t0_db"])) if "t0_db" in raw else defaults.T0,
        alpha_da=float(raw.get("alpha_da", defaults.alpha_da)),
        alpha_dr=float(raw.get("alpha_dr", defaults.alpha_dr)),
        alpha_ra=float(raw.get("alpha_ra", defaults.alpha_ra)),
        rician_beta=float(raw.get("rician_beta", defaults.rician_beta)),
        geometry=geometry,
    )
    seed = raw.get("seed")
    return config, None if seed is None else int(seed)


def load_config(path) -> tuple[SystemConfig, int | None]:
    """Read a scenario from a YAML key-value file."""
    with open(Path(path)) as fh:
        raw = yaml.safe_load(fh) or {}
    return config_from_dict(raw)

"""Domain types and channel generation for two-phase AF relaying AirComp.

Channel orientation: ``H`` has shape ``(M, K)`` with ``H[m, k]`` the gain from
WD ``k`` to relay ``m``; column ``H[:, k]`` is the stacked vector ``h_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigError",
    "SystemConfig",
    "ChannelGeometry",
    "ChannelRealization",
    "TransmitDesign",
    "MseBreakdown",
    "FeasibilityReport",
    "validate_config",
    "dbm_to_watts",
    "db_to_linear",
    "draw_channels",
    "check_feasibility",
    "FEASIBILITY_RTOL",
]

FEASIBILITY_RTOL = 1e-9


class ConfigError(ValueError):
    """Raised for invalid system configurations or geometries."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _per(value, n: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(n, float(arr[0]))
    if arr.shape != (n,):
        raise ConfigError(f"{name} must be a scalar or have length {n}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SystemConfig:
    """Problem dimensions, budgets (Watts) and noise powers (Watts).

    Scalars passed for per-WD or per-relay quantities are broadcast.
    """

    num_wds: int
    num_relays: int
    message_variance: np.ndarray
    wd_power_budget: np.ndarray
    relay_power_budget: np.ndarray
    relay_noise_power: np.ndarray
    fc_noise_power: float

    @classmethod
    def build(cls, num_wds, num_relays, *, message_variance=1.0, wd_power_budget,
              relay_power_budget, relay_noise_power, fc_noise_power) -> "SystemConfig":
        K, M = int(num_wds), int(num_relays)
        if K < 1 or M < 1:
            raise ConfigError(f"need at least one WD and one relay, got K={K}, M={M}")
        return cls(
            num_wds=K,
            num_relays=M,
            message_variance=_frozen(_per(message_variance, K, "message_variance")),
            wd_power_budget=_frozen(_per(wd_power_budget, K, "wd_power_budget")),
            relay_power_budget=_frozen(_per(relay_power_budget, M, "relay_power_budget")),
            relay_noise_power=_frozen(_per(relay_noise_power, M, "relay_noise_power")),
            fc_noise_power=float(fc_noise_power),
        )


@dataclass(frozen=True)
class ChannelGeometry:
    """Large-scale path-loss parameters.

    ``wd_relay_distance`` is stored as a ``(K, M)`` matrix of meters (WD-major,
    as in the path-loss formula ``d_{k,m}``).
    """

    wd_relay_distance: np.ndarray
    relay_fc_distance: np.ndarray
    reference_pathloss: float
    pathloss_exponent: float

    @classmethod
    def build(cls, num_wds, num_relays, *, wd_relay_distance, relay_fc_distance,
              reference_pathloss, pathloss_exponent) -> "ChannelGeometry":
        K, M = int(num_wds), int(num_relays)
        d = np.asarray(wd_relay_distance, dtype=float)
        if d.ndim == 0 or d.size == 1:
            d = np.full((K, M), float(d.reshape(-1)[0]))
        if d.shape != (K, M):
            raise ConfigError(f"wd_relay_distance must be scalar or shape {(K, M)}, got {d.shape}")
        return cls(
            wd_relay_distance=_frozen(d),
            relay_fc_distance=_frozen(_per(relay_fc_distance, M, "relay_fc_distance")),
            reference_pathloss=float(reference_pathloss),
            pathloss_exponent=float(pathloss_exponent),
        )

    def wd_relay_pathloss(self) -> np.ndarray:
        """Mean power gains ``Omega0 * d^-kappa`` as an ``(M, K)`` matrix."""
        return (self.reference_pathloss * self.wd_relay_distance ** -self.pathloss_exponent).T

    def relay_fc_pathloss(self) -> np.ndarray:
        return self.reference_pathloss * self.relay_fc_distance ** -self.pathloss_exponent


@dataclass(frozen=True)
class ChannelRealization:
    wd_relay_gains: np.ndarray  # (M, K) complex
    relay_fc_gains: np.ndarray  # (M,) complex

    def __post_init__(self):
        H = np.asarray(self.wd_relay_gains, dtype=complex)
        g = np.asarray(self.relay_fc_gains, dtype=complex).reshape(-1)
        if H.ndim != 2 or H.shape[0] != g.size:
            raise ValueError(f"gain shapes mismatch: H {H.shape}, g {g.shape}")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(g))):
            raise ValueError("channel gains must be finite")
        object.__setattr__(self, "wd_relay_gains", _frozen(H, complex))
        object.__setattr__(self, "relay_fc_gains", _frozen(g, complex))

    @property
    def num_relays(self) -> int:
        return self.wd_relay_gains.shape[0]

    @property
    def num_wds(self) -> int:
        return self.wd_relay_gains.shape[1]


@dataclass(frozen=True)
class TransmitDesign:
    """Candidate solution: WD coefficients, relay coefficients, de-noising factor."""

    wd_coeffs: np.ndarray
    relay_coeffs: np.ndarray
    denoise: float

    def __post_init__(self):
        a = np.asarray(self.wd_coeffs, dtype=complex).reshape(-1)
        b = np.asarray(self.relay_coeffs, dtype=complex).reshape(-1)
        eta = float(self.denoise)
        if not (np.isfinite(eta) and eta > 0):
            raise ValueError(f"de-noising factor must be finite and positive, got {eta}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("transmit coefficients must be finite")
        object.__setattr__(self, "wd_coeffs", _frozen(a, complex))
        object.__setattr__(self, "relay_coeffs", _frozen(b, complex))
        object.__setattr__(self, "denoise", eta)

    def replace(self, **changes) -> "TransmitDesign":
        fields_ = {"wd_coeffs": self.wd_coeffs, "relay_coeffs": self.relay_coeffs,
                   "denoise": self.denoise}
        fields_.update(changes)
        return TransmitDesign(**fields_)


@dataclass(frozen=True)
class MseBreakdown:
    misalignment: float
    noise_induced: float
    num_wds: int
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total",
                           (self.misalignment + self.noise_induced) / self.num_wds ** 2)

    @property
    def unscaled(self) -> float:
        """Objective without the ``1/K^2`` factor."""
        return self.misalignment + self.noise_induced


@dataclass(frozen=True)
class FeasibilityReport:
    wd_slack: np.ndarray
    relay_slack: np.ndarray
    wd_budget: np.ndarray
    relay_budget: np.ndarray
    rtol: float = FEASIBILITY_RTOL

    @property
    def feasible(self) -> bool:
        return bool(np.all(self.wd_slack >= -self.rtol * self.wd_budget)
                    and np.all(self.relay_slack >= -self.rtol * self.relay_budget))


def validate_config(cfg: SystemConfig, geom: ChannelGeometry | None = None) -> SystemConfig:
    """Check every invariant of ``cfg`` (and ``geom`` if given); return ``cfg``."""
    K, M = cfg.num_wds, cfg.num_relays
    if K < 1 or M < 1:
        raise ConfigError(f"need at least one WD and one relay, got K={K}, M={M}")
    for name, arr, n in [
        ("message_variance", cfg.message_variance, K),
        ("wd_power_budget", cfg.wd_power_budget, K),
        ("relay_power_budget", cfg.relay_power_budget, M),
        ("relay_noise_power", cfg.relay_noise_power, M),
    ]:
        arr = np.asarray(arr)
        if arr.shape != (n,):
            raise ConfigError(f"{name} has shape {arr.shape}, expected ({n},)")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ConfigError(f"{name} must be finite and strictly positive")
    if not (np.isfinite(cfg.fc_noise_power) and cfg.fc_noise_power > 0):
        raise ConfigError("fc_noise_power must be finite and strictly positive")
    if geom is not None:
        if geom.wd_relay_distance.shape != (K, M):
            raise ConfigError(f"wd_relay_distance has shape {geom.wd_relay_distance.shape}, "
                              f"expected {(K, M)}")
        if geom.relay_fc_distance.shape != (M,):
            raise ConfigError(f"relay_fc_distance has shape {geom.relay_fc_distance.shape}, "
                              f"expected ({M},)")
        if np.any(geom.wd_relay_distance < 1) or np.any(geom.relay_fc_distance < 1):
            raise ConfigError("distances must be at least the 1 m reference distance")
        if not 0 < geom.reference_pathloss <= 1:
            raise ConfigError("reference_pathloss must lie in (0, 1]")
        if not geom.pathloss_exponent > 0:
            raise ConfigError("pathloss_exponent must be positive")
    return cfg


def dbm_to_watts(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    # CN(0, 1): independent real/imag parts with variance 1/2 each, drawn
    # interleaved so that a leading-axis prefix of the shape is a prefix of the stream
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    ri = rng.standard_normal(shape + (2,))
    return (ri[..., 0] + 1j * ri[..., 1]) / np.sqrt(2.0)


def draw_channels(cfg: SystemConfig, geom: ChannelGeometry,
                  rng: np.random.Generator | int) -> ChannelRealization:
    """Draw one distance-dependent Rayleigh realization.

    Relay-to-FC fading is drawn first, then WD fading one WD at a time, so
    realizations for a smaller ``K`` under the same seed are a prefix of
    those for a larger ``K``.
    """
    rng = np.random.default_rng(rng)
    g0 = _cn(rng, cfg.num_relays)
    h0 = _cn(rng, (cfg.num_wds, cfg.num_relays)).T
    H = np.sqrt(geom.wd_relay_pathloss()) * h0
    g = np.sqrt(geom.relay_fc_pathloss()) * g0
    return ChannelRealization(H, g)


def relay_received_power(cfg: SystemConfig, chan: ChannelRealization, alpha) -> np.ndarray:
    """Per-relay received power ``sum_k |a_k|^2 |h_mk|^2 d_k^2 + s_m^2``."""
    alpha = np.asarray(alpha)
    H2 = np.abs(chan.wd_relay_gains) ** 2
    return H2 @ (np.abs(alpha) ** 2 * cfg.message_variance) + cfg.relay_noise_power


def check_feasibility(cfg: SystemConfig, chan: ChannelRealization,
                      design: TransmitDesign) -> FeasibilityReport:
    """Slack of each WD and relay power constraint; never raises on infeasibility."""
    alpha, beta = design.wd_coeffs, design.relay_coeffs
    if alpha.shape != (cfg.num_wds,) or beta.shape != (cfg.num_relays,):
        raise ValueError("design dimensions do not match the configuration")
    wd_slack = cfg.wd_power_budget - np.abs(alpha) ** 2 * cfg.message_variance
    relay_slack = cfg.relay_power_budget - np.abs(beta) ** 2 * relay_received_power(cfg, chan, alpha)
    return FeasibilityReport(wd_slack, relay_slack, np.asarray(cfg.wd_power_budget),
                             np.asarray(cfg.relay_power_budget))

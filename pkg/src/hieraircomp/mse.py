"""Analytic MSE of the AF-relayed AirComp estimate and a signal-level estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, MseBreakdown, SystemConfig, TransmitDesign, _cn

__all__ = ["ObjectiveValue", "composite_gain", "evaluate_mse", "objective",
           "empirical_mse", "EmpiricalMse"]


@dataclass(frozen=True)
class ObjectiveValue:
    unscaled: float
    mse: float


def composite_gain(chan: ChannelRealization, beta) -> np.ndarray:
    """End-to-end WD->relays->FC gain per WD, ``sum_m h_mk g_m b_m``."""
    return (chan.relay_fc_gains * np.asarray(beta)) @ chan.wd_relay_gains


def evaluate_mse(cfg: SystemConfig, chan: ChannelRealization,
                 design: TransmitDesign) -> MseBreakdown:
    eta = design.denoise
    if not eta > 0:
        raise ValueError("de-noising factor must be positive")
    alpha, beta = design.wd_coeffs, design.relay_coeffs
    c = composite_gain(chan, beta)
    misalignment = float(np.sum(np.abs(alpha * c / eta - 1.0) ** 2 * cfg.message_variance))
    relay_noise = np.sum(np.abs(beta * chan.relay_fc_gains) ** 2 * cfg.relay_noise_power)
    noise_induced = float((relay_noise + cfg.fc_noise_power) / eta ** 2)
    return MseBreakdown(misalignment, noise_induced, cfg.num_wds)


def objective(cfg: SystemConfig, chan: ChannelRealization, design: TransmitDesign) -> ObjectiveValue:
    b = evaluate_mse(cfg, chan, design)
    return ObjectiveValue(b.unscaled, b.total)


@dataclass(frozen=True)
class EmpiricalMse:
    mean: float
    stderr: float
    num_trials: int


def empirical_mse(cfg: SystemConfig, chan: ChannelRealization, design: TransmitDesign,
                  num_trials: int, rng, batch: int = 100_000) -> EmpiricalMse:
    """Monte Carlo estimate of ``E|x_hat - x_bar|^2`` by simulating the two slots.

    Messages are circular complex Gaussian with the configured variances; only
    second moments matter for the estimate.
    """
    if num_trials < 1:
        raise ValueError("num_trials must be >= 1")
    rng = np.random.default_rng(rng)
    K, M = cfg.num_wds, cfg.num_relays
    H, g = chan.wd_relay_gains, chan.relay_fc_gains
    alpha, beta, eta = design.wd_coeffs, design.relay_coeffs, design.denoise
    sd_x = np.sqrt(cfg.message_variance)
    sd_z = np.sqrt(cfg.relay_noise_power)
    sd_z0 = np.sqrt(cfg.fc_noise_power)

    total = 0.0
    total_sq = 0.0
    done = 0
    while done < num_trials:
        n = min(batch, num_trials - done)
        x = _cn(rng, (n, K)) * sd_x
        z = _cn(rng, (n, M)) * sd_z
        z0 = _cn(rng, n) * sd_z0
        r = (x * alpha) @ H.T + z           # relay receptions
        y = (r * beta) @ g + z0             # FC reception
        err = np.abs(y / (K * eta) - x.mean(axis=1)) ** 2
        total += err.sum()
        total_sq += (err ** 2).sum()
        done += n
    mean = total / num_trials
    var = max(total_sq / num_trials - mean ** 2, 0.0)
    stderr = np.sqrt(var / max(num_trials - 1, 1))
    return EmpiricalMse(float(mean), float(stderr), num_trials)

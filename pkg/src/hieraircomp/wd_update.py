"""Exact WD-coefficient update for fixed relay coefficients and de-noising factor.

Phases cancel the composite channel; magnitudes follow the regularized
channel-inversion rule, with relay-power multipliers found by projected
gradient ascent on the (concave) dual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .model import ChannelRealization, SystemConfig
from .mse import composite_gain

__all__ = ["DualState", "KktResiduals", "composite_channels", "align_phases",
           "wd_magnitudes", "relay_headroom", "kkt_residuals", "solve_wd_block"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KktResiduals:
    """Scaled KKT residuals of the WD magnitude problem.

    ``primal`` is relative to each constraint's right-hand side; ``slackness``
    is relative to the objective at zero power; ``stationarity`` is relative
    to the linear term of each WD's cost.
    """

    primal: float
    dual: float
    slackness: float
    stationarity: float

    @property
    def worst(self) -> float:
        return max(self.primal, self.dual, self.slackness, self.stationarity)


@dataclass(frozen=True)
class DualState:
    """Relay-constraint multipliers; WD box multipliers are implied by the clip."""

    mu: np.ndarray
    converged: bool = True
    iterations: int = 0
    kkt: KktResiduals | None = None

    @classmethod
    def zeros(cls, num_relays: int) -> "DualState":
        return cls(np.zeros(num_relays))


def composite_channels(chan: ChannelRealization, beta) -> np.ndarray:
    return composite_gain(chan, beta)


def align_phases(c) -> np.ndarray:
    """Phases in (-pi, pi] that make ``exp(1j*theta) * c`` real nonnegative."""
    theta = -np.angle(np.asarray(c, dtype=complex))
    theta = np.where(theta <= -np.pi, np.pi, theta)
    return theta + 0.0  # no negative zeros


def relay_headroom(cfg: SystemConfig, beta) -> np.ndarray:
    """Right-hand side ``P_Rm/|b_m|^2 - s_m^2`` of each relay constraint (inf if b_m = 0)."""
    b2 = np.abs(np.asarray(beta)) ** 2
    with np.errstate(divide="ignore"):
        cap = np.where(b2 > 0, cfg.relay_power_budget / np.where(b2 > 0, b2, 1.0), np.inf)
    return cap - cfg.relay_noise_power


def _amp_cap(cfg: SystemConfig) -> np.ndarray:
    return np.sqrt(cfg.wd_power_budget / cfg.message_variance)


def _inversion(a, reg, cap):
    denom = a ** 2 + reg
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(a > 0, a / np.where(denom > 0, denom, 1.0), 0.0)
    return np.minimum(inv, cap)


def wd_magnitudes(cfg: SystemConfig, chan: ChannelRealization, beta, eta: float, mu) -> np.ndarray:
    """Regularized composite-channel inversion, clipped at each WD's power cap.

    A WD whose composite channel vanishes gets zero amplitude.
    """
    a = np.abs(composite_channels(chan, beta)) / eta
    reg = (np.abs(chan.wd_relay_gains) ** 2).T @ np.asarray(mu, dtype=float)
    return _inversion(a, reg, _amp_cap(cfg))


def kkt_residuals(cfg: SystemConfig, chan: ChannelRealization, beta, eta: float,
                  amp, mu) -> KktResiduals:
    amp = np.asarray(amp, dtype=float)
    mu = np.asarray(mu, dtype=float)
    d2 = cfg.message_variance
    H2 = np.abs(chan.wd_relay_gains) ** 2
    a = np.abs(composite_channels(chan, beta)) / eta
    cap = _amp_cap(cfg)
    rhs = relay_headroom(cfg, beta)
    load = H2 @ (amp ** 2 * d2)
    finite = np.isfinite(rhs)
    cap = np.where(np.any(H2[finite & (rhs <= 0)] > 0, axis=0), 0.0, cap)

    primal_relay = np.max(np.where(finite, np.maximum(load - rhs, 0) / np.where(finite & (rhs > 0), rhs, 1), 0),
                          initial=0.0)
    cap_scale = np.where(cap > 0, cap, 1.0)
    primal_wd = np.max(np.maximum(amp - cap, 0) / cap_scale, initial=0.0)
    primal_nonneg = np.max(np.maximum(-amp, 0) / cap_scale, initial=0.0)
    dual = np.max(np.maximum(-mu, 0), initial=0.0)

    f0 = float(np.sum(d2))
    slack = np.where(finite, load - rhs, 0.0)
    slackness = np.max(np.abs(mu * slack), initial=0.0) / f0

    reg = H2.T @ mu
    grad = 2 * amp * (a ** 2 + reg) * d2 - 2 * a * d2
    at_cap = amp >= cap * (1 - 1e-8)  # overshoot rescaling may leave ~1e-11 below
    lam = np.where(at_cap, np.maximum(-grad, 0), 0.0)
    r = grad + lam
    scale = np.where(a > 0, 2 * a * d2, 1.0)
    stationarity = np.max(np.abs(r) / scale, initial=0.0)
    return KktResiduals(float(max(primal_relay, primal_wd, primal_nonneg)), float(dual),
                        float(slackness), float(stationarity))


def solve_wd_block(cfg: SystemConfig, chan: ChannelRealization, beta, eta: float, *,
                   tol: float = 1e-10, max_iter: int = 10_000):
    """Optimal WD coefficients for fixed ``beta`` and ``eta``.

    Returns ``(alpha, DualState)``. Multipliers are found by projected
    gradient ascent on the dual, with Barzilai-Borwein trial steps and
    Armijo backtracking, in variables normalized by each constraint's
    right-hand side. ``DualState.converged`` is False if ``max_iter`` is hit;
    the best iterate is still returned.
    """
    beta = np.asarray(beta, dtype=complex)
    if not eta > 0:
        raise ValueError("de-noising factor must be positive")
    M = cfg.num_relays
    c = composite_channels(chan, beta)
    phase = np.exp(1j * align_phases(c))
    H2 = np.abs(chan.wd_relay_gains) ** 2
    d2 = cfg.message_variance
    a = np.abs(c) / eta
    cap = _amp_cap(cfg)
    rhs = relay_headroom(cfg, beta)
    active = np.isfinite(rhs)
    if np.any(rhs[active] < 0):
        raise ValueError("relay coefficients violate their power budget even with silent WDs")
    f0 = float(np.sum(d2))

    amp = _inversion(a, 0.0, cap)
    if np.all((H2 @ (amp ** 2 * d2))[active] <= rhs[active]):
        mu = np.zeros(M)
        kkt = kkt_residuals(cfg, chan, beta, eta, amp, mu)
        return amp * phase, DualState(mu, True, 0, kkt)

    # a relay with no headroom left silences every WD it hears
    idx = np.flatnonzero(active)
    tight = rhs[idx] <= 0
    cap = np.where(np.any(H2[idx[tight]] > 0, axis=0), 0.0, cap)
    idx = idx[~tight]
    r_act = rhs[idx]
    H2a = H2[idx]

    # optimize nu_m = mu_m * rhs_m / f0 so every coordinate is dimensionless
    def mu_of(nu):
        mu = np.zeros(M)
        mu[idx] = nu * f0 / r_act
        return mu

    def dual_eval(nu):
        mu = mu_of(nu)
        reg = H2.T @ mu
        amp = _inversion(a, reg, cap)
        ld = H2a @ (amp ** 2 * d2)
        val = (np.sum(((amp * a - 1) ** 2 + amp ** 2 * reg) * d2) - mu[idx] @ r_act) / f0
        return val, ld / r_act - 1.0, amp

    nu = np.zeros(idx.size)
    val, grad, amp = dual_eval(nu)
    step = 1.0
    converged = idx.size == 0 or np.max(grad, initial=0.0) <= tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        while True:
            nu_new = np.maximum(nu + step * grad, 0.0)
            d = nu_new - nu
            val_new, grad_new, amp_new = dual_eval(nu_new)
            # slack of a few ulps: near the optimum dual gains drop below rounding
            if val_new >= val + 1e-4 * (grad @ d) - 1e-13 * abs(val) or step < 1e-30:
                break
            step *= 0.5
        s, y = d, grad_new - grad
        sy = -(s @ y)
        step = (s @ s) / sy if sy > 0 else min(step * 4, 1e12)
        nu, val, grad, amp = nu_new, val_new, grad_new, amp_new
        viol = np.max(np.maximum(grad, 0.0), initial=0.0)
        slack = np.max(nu * np.abs(grad), initial=0.0)
        if max(viol, slack) <= tol:
            converged = True
        elif not np.any(d):
            break

    if not converged:
        log.warning("WD dual ascent stopped after %d iterations without meeting tol=%g", it, tol)

    # pull any residual overshoot back inside the relay constraints
    ld = H2a @ (amp ** 2 * d2)
    over = ld > r_act
    if np.any(over):
        amp = amp * np.sqrt(np.min(r_act[over] / ld[over]))

    mu = mu_of(nu)
    kkt = kkt_residuals(cfg, chan, beta, eta, amp, mu)
    return amp * phase, DualState(mu, bool(converged), it, kkt)

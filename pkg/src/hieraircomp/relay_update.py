"""Relay-coefficient update for fixed WD coefficients and de-noising factor.

The relay subproblem is a convex quadratic over per-relay disks. Working in
``u = g * beta`` keeps the constraints as disks (radius ``|g_m| sqrt(Pbar_m)``)
and removes the relay-to-FC fading from the Hessian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import ChannelRealization, SystemConfig, relay_received_power

__all__ = ["RelayBlockResult", "relay_budget_caps", "mmse_candidate", "project_relay",
           "relay_objective", "solve_relay_block"]


@dataclass(frozen=True)
class RelayBlockResult:
    beta: np.ndarray
    objective: float
    converged: bool
    iterations: int
    source: str  # "candidate", "refined" or "incoming"


def relay_budget_caps(cfg: SystemConfig, chan: ChannelRealization, alpha) -> np.ndarray:
    """Largest feasible ``|beta_m|^2`` given the WD coefficients."""
    return cfg.relay_power_budget / relay_received_power(cfg, chan, alpha)


def _normal_equations(cfg, chan, alpha, uncorrected=False):
    """Hessian-like matrix ``Q`` and right side ``w`` with the objective
    ``u^H Q u / eta^2 - 2 Re(w^T u) / eta + const`` in ``u = g * beta``."""
    H = chan.wd_relay_gains
    p = np.abs(alpha) ** 2 * cfg.message_variance
    if uncorrected:
        Q = (H * p) @ H.conj().T
    else:
        Q = (H.conj() * p) @ H.T
    Q = Q + np.diag(cfg.relay_noise_power)
    w = H @ (np.asarray(alpha) * cfg.message_variance)
    return Q, w


def mmse_candidate(cfg: SystemConfig, chan: ChannelRealization, alpha, eta: float, *,
                   uncorrected: bool = False) -> np.ndarray:
    """Unconstrained minimizer of the relay subproblem.

    ``uncorrected`` uses ``sum |a|^2 d^2 h h^H`` in place of its complex
    conjugate; the two agree only when that matrix is real (e.g. one relay).
    """
    if not eta > 0:
        raise ValueError("de-noising factor must be positive")
    Q, w = _normal_equations(cfg, chan, alpha, uncorrected)
    u = eta * cho_solve(cho_factor(Q), w.conj())
    g = chan.relay_fc_gains
    return np.where(g != 0, u / np.where(g != 0, g, 1.0), 0.0)


def project_relay(beta_hat, caps, *, uncorrected: bool = False) -> np.ndarray:
    """Clip each ``|beta_m|`` to ``sqrt(caps_m)``, keeping its phase.

    ``uncorrected`` normalizes clipped entries by the whole vector norm
    instead; that point is generally not on the feasible boundary.
    """
    beta_hat = np.asarray(beta_hat, dtype=complex)
    r = np.sqrt(np.asarray(caps, dtype=float))
    mag = np.abs(beta_hat)
    over = mag > r
    if uncorrected:
        norm = np.linalg.norm(beta_hat)
        return np.where(over, r * beta_hat / (norm if norm > 0 else 1.0), beta_hat)
    return np.where(over, r * beta_hat / np.where(over, mag, 1.0), beta_hat)


def relay_objective(cfg: SystemConfig, chan: ChannelRealization, alpha, eta: float, beta) -> float:
    """Unscaled MSE objective as a function of the relay coefficients."""
    c = (chan.relay_fc_gains * beta) @ chan.wd_relay_gains
    mis = np.sum(np.abs(np.asarray(alpha) * c / eta - 1) ** 2 * cfg.message_variance)
    noise = np.sum(np.abs(beta * chan.relay_fc_gains) ** 2 * cfg.relay_noise_power)
    return float(mis + (noise + cfg.fc_noise_power) / eta ** 2)


def _clip(u, radius):
    mag = np.abs(u)
    return np.where(mag > radius, u * (radius / np.where(mag > 0, mag, 1.0)), u)


def _spg(Q, w, eta, radius, u0, tol, max_iter):
    """Projected gradient with Barzilai-Borwein steps and Armijo backtracking."""
    def f(u):
        return float(np.real(u.conj() @ Q @ u) / eta ** 2 - 2 * np.real(w @ u) / eta)

    def grad(u):
        return 2 * (Q @ u / eta ** 2 - w.conj() / eta)

    lip = 2 * np.linalg.eigvalsh(Q)[-1] / eta ** 2
    scale = max(np.max(radius[np.isfinite(radius)], initial=0.0),
                np.linalg.norm(u0), 1e-300)
    u = _clip(u0, radius)
    fu, gu = f(u), grad(u)
    step = 1.0 / lip
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(_clip(u - gu / lip, radius) - u) <= tol * scale:
            return u, True, it - 1
        while True:
            u_new = _clip(u - step * gu, radius)
            d = u_new - u
            f_new = f(u_new)
            if f_new <= fu + 1e-4 * np.real(np.vdot(gu, d)) or step < 1e-3 / lip:
                break
            step *= 0.5
        g_new = grad(u_new)
        sy = np.real(np.vdot(d, g_new - gu))
        step = np.real(np.vdot(d, d)) / sy if sy > 0 else 1.0 / lip
        u, fu, gu = u_new, f_new, g_new
    return u, False, it


def solve_relay_block(cfg: SystemConfig, chan: ChannelRealization, alpha, eta: float,
                      beta_init=None, *, tol: float = 1e-10,
                      max_iter: int = 20_000) -> RelayBlockResult:
    """Best relay coefficients for fixed ``alpha`` and ``eta``.

    Starts from the projected MMSE candidate and refines it with projected
    gradient; returns whichever of candidate, refinement and (feasible)
    ``beta_init`` has the lowest objective. Relays with ``g_m = 0`` are off.
    """
    alpha = np.asarray(alpha, dtype=complex)
    g = chan.relay_fc_gains
    caps = relay_budget_caps(cfg, chan, alpha)
    cand = project_relay(mmse_candidate(cfg, chan, alpha, eta), caps)
    Q, w = _normal_equations(cfg, chan, alpha)
    radius = np.abs(g) * np.sqrt(caps)
    u, converged, iters = _spg(Q, w, eta, radius, g * cand, tol, max_iter)
    refined = np.where(g != 0, u / np.where(g != 0, g, 1.0), 0.0)
    # keep the refinement exactly inside the disks after the division by g
    refined = project_relay(refined, caps)

    options = [("candidate", cand), ("refined", refined)]
    if beta_init is not None:
        beta_init = np.asarray(beta_init, dtype=complex)
        if np.all(np.abs(beta_init) ** 2 <= caps):
            options.append(("incoming", beta_init))
    scored = [(relay_objective(cfg, chan, alpha, eta, b), i, name, b)
              for i, (name, b) in enumerate(options)]
    obj, _, source, beta = min(scored, key=lambda t: (t[0], t[1]))
    return RelayBlockResult(beta, obj, converged, iters, source)

"""Independent reference solvers for the three block subproblems.

Nothing here calls into the closed-form updates it is meant to check; the
only shared code is the objective/composite-gain evaluation in ``mse``.
Keep instances tiny (K <= 5, M <= 3): these are plain first-order methods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, nnls

from .model import ChannelRealization, SystemConfig, TransmitDesign
from .mse import composite_gain, evaluate_mse

__all__ = ["OracleResult", "pg_solve_wd", "pg_solve_relay", "fd_gradient",
           "grid_search_scalar_eta", "wd_magnitude_objective"]


@dataclass(frozen=True)
class OracleResult:
    x: np.ndarray
    objective: float
    converged: bool
    iterations: int
    gap: float = float("nan")


def wd_magnitude_objective(cfg: SystemConfig, chan: ChannelRealization, beta, eta, amp) -> float:
    """Misalignment cost of real WD amplitudes with phases cancelling the composite channel."""
    c = composite_gain(chan, beta)
    alpha = np.asarray(amp) * np.exp(-1j * np.angle(c))
    design = TransmitDesign(alpha, beta, eta)
    return evaluate_mse(cfg, chan, design).misalignment


def _project_feasible(y, box_hi, ell_w, ell_b):
    """Euclidean projection onto ``{0 <= x <= box_hi, ell_w @ x**2 <= ell_b}``.

    Solved through the projection's own Lagrangian dual: for multipliers
    ``nu >= 0`` the minimizer is ``clip(y / (1 + 2 ell_w.T @ nu), 0, box_hi)``
    and the concave dual is maximized with L-BFGS-B. The result is then
    shrunk onto any ellipsoid it still overshoots by rounding.
    """
    x = np.clip(y, 0.0, box_hi)
    if len(ell_b) == 0 or np.all(ell_w @ x ** 2 <= ell_b):
        return x

    def x_of(nu):
        return np.clip(y / (1 + 2 * (ell_w.T @ nu)), 0.0, box_hi)

    def neg_dual(nu):
        xn = x_of(nu)
        viol = ell_w @ xn ** 2 - ell_b
        return -(0.5 * np.sum((xn - y) ** 2) + nu @ viol), -viol

    res = minimize(neg_dual, np.zeros(len(ell_b)), jac=True, method="L-BFGS-B",
                   bounds=[(0, None)] * len(ell_b),
                   options={"ftol": 0.0, "gtol": 1e-15, "maxiter": 10_000})
    x = x_of(res.x)
    load = ell_w @ x ** 2
    over = np.max(load / ell_b)
    return x / np.sqrt(over) if over > 1 else x


def pg_solve_wd(cfg: SystemConfig, chan: ChannelRealization, beta, eta: float,
                tol: float = 1e-9, max_iter: int = 50_000) -> OracleResult:
    """Projected gradient on the WD amplitude problem.

    Feasible set: ``0 <= x_k <= sqrt(P_k)/delta_k`` and, for each relay with
    ``beta_m != 0``, ``sum_k x_k^2 |h_mk|^2 delta_k^2 <= P_Rm/|beta_m|^2 - sigma_m^2``.
    ``gap`` is a duality-gap bound from multipliers fitted to the final point.
    """
    beta = np.asarray(beta, dtype=complex)
    d2 = cfg.message_variance
    a = np.abs(composite_gain(chan, beta)) / eta
    hi = np.sqrt(cfg.wd_power_budget / d2)
    H2 = np.abs(chan.wd_relay_gains) ** 2
    b2 = np.abs(beta) ** 2
    on = b2 > 0
    ell_w = (H2[on] * d2).reshape(-1, len(a))
    ell_b = cfg.relay_power_budget[on] / b2[on] - cfg.relay_noise_power[on]
    if np.any(ell_b < 0):
        raise ValueError("relay coefficients violate their power budget even with silent WDs")

    def f(x):
        return float(np.sum((x * a - 1) ** 2 * d2))

    def grad(x):
        return 2 * (x * a - 1) * a * d2

    def proj(x):
        return _project_feasible(x, hi, ell_w, ell_b)

    def duality_gap(x):
        # nonnegative multipliers fitted to the stationarity conditions of the
        # (nearly) tight constraints; any such fit gives a valid lower bound
        n_rel = len(ell_b)
        tight_rel = [i for i in range(n_rel) if ell_w[i] @ x ** 2 >= ell_b[i] * (1 - 1e-6)]
        tight_box = np.flatnonzero(x >= hi * (1 - 1e-8))
        cols = [2 * ell_w[i] * x for i in tight_rel] + [np.eye(len(x))[k] for k in tight_box]
        mu, box = np.zeros(n_rel), np.zeros(len(x))
        if cols:
            lam, _ = nnls(np.column_stack(cols), -grad(x))
            mu[tight_rel] = lam[:len(tight_rel)]
            box[tight_box] = lam[len(tight_rel):]
        # Lagrangian over x >= 0 with the box kept as a linear penalty is separable
        curv = a ** 2 * d2 + ell_w.T @ mu
        lin = -a * d2 + box / 2
        xs = np.where(curv > 0, np.maximum(-lin / np.where(curv > 0, curv, 1.0), 0.0), 0.0)
        dual = np.sum(curv * xs ** 2 + 2 * lin * xs) + np.sum(d2) - mu @ ell_b - box @ hi
        return float(f(x) - dual)

    f0 = float(np.sum(d2))
    lip = 2 * max(np.max(a ** 2 * d2), 1e-300)
    x = np.zeros_like(a)
    fx = f(x)
    step = 1.0 / lip
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gx = grad(x)
        if np.linalg.norm(proj(x - gx / lip) - x) * lip <= tol * max(1.0, f0):
            converged = True
            break
        # a slightly inexact projection can stall the gradient test; the gap bound cannot
        if it % 25 == 0 and duality_gap(x) <= tol * f0:
            converged = True
            break
        while True:
            x_new = proj(x - step * gx)
            d = x_new - x
            f_new = f(x_new)
            if f_new <= fx + gx @ d + (d @ d) / (2 * step) + 1e-15 * abs(fx) or step < 1e-20:
                break
            step *= 0.5
        x, fx = x_new, f_new
        step = min(step * 2, 1e6 / lip)
    return OracleResult(x, f(x), converged, it, duality_gap(x))


def pg_solve_relay(cfg: SystemConfig, chan: ChannelRealization, alpha, eta: float,
                   tol: float = 1e-9, max_iter: int = 200_000) -> OracleResult:
    """Projected gradient on the relay subproblem over the per-relay disks.

    Objective from ``evaluate_mse``; gradient from direct differentiation of
    the per-WD error terms. Always returns a feasible point.
    """
    alpha = np.asarray(alpha, dtype=complex)
    H, g = chan.wd_relay_gains, chan.relay_fc_gains
    d2 = cfg.message_variance
    load = (np.abs(H) ** 2) @ (np.abs(alpha) ** 2 * d2) + cfg.relay_noise_power
    radius = np.sqrt(cfg.relay_power_budget / load)

    def f(beta):
        return evaluate_mse(cfg, chan, TransmitDesign(alpha, beta, eta)).unscaled

    def grad(beta):
        # d f / d conj(beta_m), doubled for the real-parameter gradient
        err = alpha * ((g * beta) @ H) / eta - 1
        coef = np.conj(alpha * g[:, None] * H / eta)          # (M, K)
        wirt = coef @ (err * d2) + beta * np.abs(g) ** 2 * cfg.relay_noise_power / eta ** 2
        return 2 * wirt

    def proj(beta):
        mag = np.abs(beta)
        return np.where(mag > radius, beta * radius / np.where(mag > 0, mag, 1.0), beta)

    # Lipschitz bound of the real gradient
    A = (np.conj(H) * np.abs(alpha) ** 2 * d2) @ H.T
    A = np.conj(g)[:, None] * A * g[None, :] + np.diag(np.abs(g) ** 2 * cfg.relay_noise_power)
    lip = 2 * np.max(np.linalg.eigvalsh(A)) / eta ** 2
    scale = max(np.max(radius), 1e-300)

    beta = np.zeros(len(g), dtype=complex)
    fb, gb = f(beta), grad(beta)
    step = 1.0 / lip
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(proj(beta - gb / lip) - beta) <= tol * scale:
            converged = True
            break
        while True:
            b_new = proj(beta - step * gb)
            d = b_new - beta
            f_new = f(b_new)
            if f_new <= fb + 1e-4 * np.real(np.vdot(gb, d)) + 1e-15 * abs(fb) or step < 1e-3 / lip:
                break
            step *= 0.5
        g_new = grad(b_new)
        sy = np.real(np.vdot(d, g_new - gb))
        step = np.real(np.vdot(d, d)) / sy if sy > 0 else 1.0 / lip
        beta, fb, gb = b_new, f_new, g_new
    return OracleResult(beta, fb, converged, it)


def fd_gradient(fun, x, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient over the real parameterization of ``x``.

    For complex ``x`` the result is ``df/dRe + 1j * df/dIm`` per entry.
    """
    x = np.asarray(x)
    is_complex = np.iscomplexobj(x)
    flat = x.astype(complex if is_complex else float).ravel()
    out = np.zeros(flat.shape, dtype=complex if is_complex else float)
    dirs = (1.0, 1j) if is_complex else (1.0,)
    for i in range(flat.size):
        for unit in dirs:
            e = np.zeros_like(flat)
            e[i] = unit * step
            d = (fun((flat + e).reshape(x.shape)) - fun((flat - e).reshape(x.shape))) / (2 * step)
            out[i] += d if unit == 1.0 else 1j * d
    return out.reshape(x.shape)


def grid_search_scalar_eta(cfg: SystemConfig, chan: ChannelRealization, alpha, beta,
                           eta_range: tuple[float, float], points: int = 10_000):
    """Exhaustive search of the de-noising factor on a log-spaced grid.

    Returns ``(best_eta, grid)``.
    """
    lo, hi = eta_range
    if not (0 < lo < hi) or points < 3:
        raise ValueError("need 0 < lo < hi and at least 3 points")
    grid = np.geomspace(lo, hi, points)
    vals = [evaluate_mse(cfg, chan, TransmitDesign(alpha, beta, e)).unscaled for e in grid]
    return float(grid[int(np.argmin(vals))]), grid

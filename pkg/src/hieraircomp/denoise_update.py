"""Closed-form de-noising factor for fixed WD and relay coefficients."""

from __future__ import annotations

import numpy as np

from .model import ChannelRealization, SystemConfig
from .mse import composite_gain

__all__ = ["DegenerateDesignError", "solve_eta", "eta_terms"]


class DegenerateDesignError(ArithmeticError):
    """No aligned signal energy reaches the fusion center."""


def eta_terms(cfg: SystemConfig, chan: ChannelRealization, alpha, beta, *,
              uncorrected: bool = False) -> tuple[float, complex]:
    """Return ``(S, D)``: received signal-plus-noise power and the cross term.

    The objective in ``t = 1/eta`` is ``S t^2 - 2 Re(D) t + sum(d^2)``.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    p = np.abs(alpha) ** 2 * cfg.message_variance
    c = composite_gain(chan, beta)
    if uncorrected:
        c_sig = (chan.relay_fc_gains * beta) @ chan.wd_relay_gains.conj()
    else:
        c_sig = c
    relay_noise = np.sum(np.abs(beta * chan.relay_fc_gains) ** 2 * cfg.relay_noise_power)
    S = float(p @ np.abs(c_sig) ** 2 + relay_noise + cfg.fc_noise_power)
    D = complex(np.sum(alpha * cfg.message_variance * c))
    return S, D


def solve_eta(cfg: SystemConfig, chan: ChannelRealization, alpha, beta, *,
              uncorrected: bool = False, rtol: float = 1e-14) -> float:
    """Optimal positive de-noising factor ``S / Re(D)``.

    Only ``Re(D)`` enters the objective for real ``eta``, so no phase
    alignment is required beforehand. Raises ``DegenerateDesignError`` if
    ``Re(D)`` is not safely positive.
    """
    S, D = eta_terms(cfg, chan, alpha, beta, uncorrected=uncorrected)
    scale = np.sqrt(max(S - cfg.fc_noise_power, 0.0) * float(np.sum(cfg.message_variance)))
    if not D.real > rtol * scale or D.real <= 0:
        raise DegenerateDesignError(
            f"degenerate design: no aligned signal energy (Re(D)={D.real:.3e})")
    return S / D.real

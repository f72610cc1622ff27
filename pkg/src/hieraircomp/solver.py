"""Alternating optimization over (alpha, beta, eta) and the full-power benchmarks."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .denoise_update import DegenerateDesignError, solve_eta
from .model import ChannelRealization, MseBreakdown, SystemConfig, TransmitDesign
from .mse import composite_gain, evaluate_mse
from .relay_update import mmse_candidate, relay_budget_caps, solve_relay_block
from .wd_update import DualState, align_phases, solve_wd_block

__all__ = ["Scheme", "SolverOptions", "SolveTrace", "initialize", "solve"]

log = logging.getLogger(__name__)


class Scheme(str, enum.Enum):
    PROPOSED = "proposed"
    FULL_BOTH = "full-both"
    FULL_WD = "full-wd"
    FULL_RELAY = "full-relay"

    @property
    def full_power_wds(self) -> bool:
        return self in (Scheme.FULL_BOTH, Scheme.FULL_WD)

    @property
    def full_power_relays(self) -> bool:
        return self in (Scheme.FULL_BOTH, Scheme.FULL_RELAY)


@dataclass(frozen=True)
class SolverOptions:
    epsilon: float = 1e-4
    max_outer_iters: int = 200
    scheme: Scheme = Scheme.PROPOSED

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        object.__setattr__(self, "scheme", Scheme(self.scheme))


@dataclass
class SolveTrace:
    history: list[MseBreakdown]
    converged: bool
    iterations: int
    design: TransmitDesign
    dual: DualState
    scheme: Scheme = Scheme.PROPOSED
    message: str = ""
    blocks: list[dict] = field(default_factory=list)

    @property
    def final(self) -> MseBreakdown:
        return self.history[-1]

    @property
    def mse(self) -> float:
        return self.history[-1].total

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
            "history": [
                {"iteration": n, "mse": b.total, "misalignment": b.misalignment,
                 "noise_induced": b.noise_induced}
                for n, b in enumerate(self.history)
            ],
            "design": {
                "wd_coeffs": [[z.real, z.imag] for z in self.design.wd_coeffs],
                "relay_coeffs": [[z.real, z.imag] for z in self.design.relay_coeffs],
                "denoise": self.design.denoise,
            },
            "dual_mu": list(map(float, self.dual.mu)),
        }


def _unit_phase(z):
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0)


def _full_power_wds(cfg: SystemConfig) -> np.ndarray:
    return np.sqrt(cfg.wd_power_budget / cfg.message_variance)


def initialize(cfg: SystemConfig, chan: ChannelRealization,
               scheme: Scheme = Scheme.PROPOSED) -> TransmitDesign:
    """Full power everywhere, relay phases cancelling the relay-to-FC channels.

    A common WD phase rotation then makes the aligned signal term real
    positive (the objective and every power constraint are invariant to it)
    so the initial de-noising factor is well defined.
    """
    alpha = _full_power_wds(cfg).astype(complex)
    g = chan.relay_fc_gains
    caps = relay_budget_caps(cfg, chan, alpha)
    beta = np.where(g != 0, np.sqrt(caps) * _unit_phase(g.conj()), 0.0)
    D = np.sum(alpha * cfg.message_variance * composite_gain(chan, beta))
    if D != 0:
        alpha = alpha * np.conj(D) / abs(D)
    eta = solve_eta(cfg, chan, alpha, beta)
    return TransmitDesign(alpha, beta, eta)


def _update_wds(cfg, chan, design: TransmitDesign, scheme: Scheme):
    beta, eta = design.relay_coeffs, design.denoise
    if scheme.full_power_wds:
        theta = align_phases(composite_gain(chan, beta))
        return _full_power_wds(cfg) * np.exp(1j * theta), None
    return solve_wd_block(cfg, chan, beta, eta)


def _update_relays(cfg, chan, design: TransmitDesign, scheme: Scheme):
    alpha, eta = design.wd_coeffs, design.denoise
    if scheme.full_power_relays:
        caps = relay_budget_caps(cfg, chan, alpha)
        beta_hat = mmse_candidate(cfg, chan, alpha, eta)
        g = chan.relay_fc_gains
        # a zero candidate carries no phase; fall back to cancelling g_m
        phase = np.where(beta_hat != 0, _unit_phase(beta_hat), _unit_phase(g.conj()))
        return np.where(g != 0, np.sqrt(caps) * phase, 0.0)
    return solve_relay_block(cfg, chan, alpha, eta, beta_init=design.relay_coeffs).beta


def solve(cfg: SystemConfig, chan: ChannelRealization,
          opts: SolverOptions | None = None) -> SolveTrace:
    """Run the alternating optimization for one channel realization.

    Each outer iteration updates alpha, then beta, then eta. The loop stops
    once the relative MSE improvement of an iteration is at most
    ``opts.epsilon`` (converged) or after ``opts.max_outer_iters``.
    For the proposed scheme a block result that would raise the objective
    (possible only at solver-tolerance level) is discarded.
    """
    opts = opts or SolverOptions()
    scheme = opts.scheme
    dual = DualState.zeros(cfg.num_relays)
    try:
        design = initialize(cfg, chan, scheme)
    except DegenerateDesignError as exc:
        # no usable initial point; report the zero-signal design
        design = TransmitDesign(np.zeros(cfg.num_wds), np.zeros(cfg.num_relays), 1.0)
        return SolveTrace([evaluate_mse(cfg, chan, design)], False, 0, design, dual,
                          scheme, str(exc))

    history = [evaluate_mse(cfg, chan, design)]
    converged = False
    message = "max_outer_iters reached"
    guarded = scheme is Scheme.PROPOSED

    def accept(candidate: TransmitDesign) -> TransmitDesign:
        nonlocal design
        if not guarded or evaluate_mse(cfg, chan, candidate).unscaled <= \
                evaluate_mse(cfg, chan, design).unscaled:
            design = candidate
        return design

    n = 0
    for n in range(1, opts.max_outer_iters + 1):
        alpha, new_dual = _update_wds(cfg, chan, design, scheme)
        if new_dual is not None:
            dual = new_dual
        accept(design.replace(wd_coeffs=alpha))
        accept(design.replace(relay_coeffs=_update_relays(cfg, chan, design, scheme)))
        try:
            eta = solve_eta(cfg, chan, design.wd_coeffs, design.relay_coeffs)
        except DegenerateDesignError as exc:
            history.append(evaluate_mse(cfg, chan, design))
            message = str(exc)
            log.warning("solve stopped at iteration %d: %s", n, exc)
            break
        accept(design.replace(denoise=eta))
        history.append(evaluate_mse(cfg, chan, design))
        prev, cur = history[-2].total, history[-1].total
        if not (prev - cur) / prev > opts.epsilon:
            converged = True
            message = "relative improvement below epsilon"
            break

    return SolveTrace(history, converged, n, design, dual, scheme, message)

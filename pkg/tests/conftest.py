import numpy as np
import pytest

from hieraircomp.model import ChannelRealization, SystemConfig
from hieraircomp.wd_update import wd_magnitudes


def cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_instance(seed, max_wds=5, max_relays=3, num_wds=None, num_relays=None):
    """Unit-scale instance: budgets and noise comparable to channel gains."""
    rng = np.random.default_rng(seed)
    K = int(num_wds or rng.integers(1, max_wds + 1))
    M = int(num_relays or rng.integers(1, max_relays + 1))
    cfg = SystemConfig.build(
        K, M,
        message_variance=rng.uniform(0.5, 2, K),
        wd_power_budget=rng.uniform(0.2, 2, K),
        relay_power_budget=rng.uniform(0.2, 2, M),
        relay_noise_power=rng.uniform(0.05, 0.5, M),
        fc_noise_power=rng.uniform(0.05, 0.5),
    )
    chan = ChannelRealization(cn(rng, (M, K)), cn(rng, M))
    return cfg, chan, rng


def binding_relays(cfg, chan, rng, eta):
    """Relay coefficients whose power constraints cut into the unconstrained WD optimum.

    Relay ``m`` gets headroom ``f_m`` times the load the unconstrained WD
    amplitudes would put on it, with ``f_m`` in (0.2, 1.2), so most
    constraints bind and a few stay slack.
    """
    beta = cn(rng, cfg.num_relays)
    beta = beta / np.abs(beta)
    amp0 = wd_magnitudes(cfg, chan, beta, eta, np.zeros(cfg.num_relays))
    load0 = np.abs(chan.wd_relay_gains) ** 2 @ (amp0 ** 2 * cfg.message_variance)
    f = rng.uniform(0.2, 1.2, cfg.num_relays)
    return beta * np.sqrt(cfg.relay_power_budget / (cfg.relay_noise_power + f * load0))


def feasible_alpha(cfg, rng, scale=1.0):
    """Random-phase WD coefficients at 30-100% of their amplitude caps, times ``scale``."""
    cap = np.sqrt(cfg.wd_power_budget / cfg.message_variance)
    phase = np.exp(2j * np.pi * rng.uniform(size=cfg.num_wds))
    return scale * cap * rng.uniform(0.3, 1.0, cfg.num_wds) * phase


@pytest.fixture
def scalar_cfg():
    """K=1, M=1 with unit everything except noise 0.1 and relay budget 2."""
    return SystemConfig.build(1, 1, wd_power_budget=1.0, relay_power_budget=2.0,
                              relay_noise_power=0.1, fc_noise_power=0.1)


@pytest.fixture
def unit_chan():
    return ChannelRealization(np.ones((1, 1), complex), np.ones(1, complex))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one summary line per acceptance criterion."""
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

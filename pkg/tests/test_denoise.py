import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hieraircomp.denoise_update import DegenerateDesignError, eta_terms, solve_eta
from hieraircomp.model import ChannelRealization, SystemConfig, TransmitDesign
from hieraircomp.mse import evaluate_mse
from hieraircomp.oracle import fd_gradient, grid_search_scalar_eta

from conftest import cn, feasible_alpha, random_instance


def mse_at(cfg, chan, alpha, beta, eta):
    return evaluate_mse(cfg, chan, TransmitDesign(alpha, beta, eta)).unscaled


def test_scalar_example(scalar_cfg, unit_chan):
    # (1 * (1 + 0.1) * 1 + 0.1) / 1
    assert solve_eta(scalar_cfg, unit_chan, [1.0], [1.0]) == pytest.approx(1.2)


def test_noiseless_inversion(unit_chan):
    cfg = SystemConfig.build(1, 1, wd_power_budget=1, relay_power_budget=1,
                             relay_noise_power=1e-300, fc_noise_power=1e-300)
    eta = solve_eta(cfg, unit_chan, [1.0], [1.0])
    assert eta == pytest.approx(1.0)
    assert evaluate_mse(cfg, unit_chan, TransmitDesign([1.0], [1.0], eta)).misalignment < 1e-20


def test_silent_design_is_degenerate():
    cfg, chan, rng = random_instance(0, num_wds=3, num_relays=2)
    with pytest.raises(DegenerateDesignError, match="degenerate"):
        solve_eta(cfg, chan, np.zeros(3), cn(rng, 2))
    with pytest.raises(DegenerateDesignError):
        solve_eta(cfg, chan, feasible_alpha(cfg, rng), np.zeros(2))


def test_anti_aligned_design_is_degenerate(scalar_cfg, unit_chan):
    with pytest.raises(DegenerateDesignError):
        solve_eta(scalar_cfg, unit_chan, [-1.0], [1.0])


def test_only_real_part_of_cross_term_matters():
    cfg, chan, rng = random_instance(1, num_wds=4, num_relays=2)
    alpha, beta = feasible_alpha(cfg, rng), cn(rng, 2)
    S, D = eta_terms(cfg, chan, alpha, beta)
    if D.real <= 0:
        alpha = -alpha
        S, D = eta_terms(cfg, chan, alpha, beta)
    assert abs(D.imag) > 0  # not pre-aligned
    eta = solve_eta(cfg, chan, alpha, beta)
    t = 1 / eta
    assert mse_at(cfg, chan, alpha, beta, eta) == pytest.approx(
        S * t ** 2 - 2 * D.real * t + cfg.message_variance.sum(), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_stationary_and_descending(seed):
    cfg, chan, rng = random_instance(seed)
    alpha, beta = feasible_alpha(cfg, rng), cn(rng, cfg.num_relays)
    if eta_terms(cfg, chan, alpha, beta)[1].real <= 0:
        alpha = -alpha
    eta = solve_eta(cfg, chan, alpha, beta)
    assert eta > 0
    val = mse_at(cfg, chan, alpha, beta, eta)
    deriv = fd_gradient(lambda e: mse_at(cfg, chan, alpha, beta, float(e[0])),
                        np.array([eta]), step=1e-6 * eta)[0]
    assert abs(deriv) <= 1e-6 * val / eta
    for other in (0.5 * eta, 0.99 * eta, 1.01 * eta, 2 * eta, float(rng.uniform(0.01, 10))):
        assert val <= mse_at(cfg, chan, alpha, beta, other) + 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_grid_search_agrees(seed):
    cfg, chan, rng = random_instance(40 + seed)
    alpha, beta = feasible_alpha(cfg, rng), cn(rng, cfg.num_relays)
    if eta_terms(cfg, chan, alpha, beta)[1].real <= 0:
        alpha = -alpha
    eta = solve_eta(cfg, chan, alpha, beta)
    best, grid = grid_search_scalar_eta(cfg, chan, alpha, beta, (eta / 10, eta * 10), 10_000)
    ratio = grid[1] / grid[0]
    assert 1 / ratio <= best / eta <= ratio


def test_literal_noise_term_is_not_stationary():
    # the literal aggregated-signal power uses conj(h), which differs from the
    # composite gain as soon as there are two complex relay paths
    cfg, chan, rng = random_instance(7, num_wds=4, num_relays=3)
    alpha, beta = feasible_alpha(cfg, rng), cn(rng, 3)
    if eta_terms(cfg, chan, alpha, beta)[1].real <= 0:
        alpha = -alpha
    fixed = solve_eta(cfg, chan, alpha, beta)
    literal = solve_eta(cfg, chan, alpha, beta, uncorrected=True)
    assert abs(literal - fixed) > 1e-3 * fixed
    assert mse_at(cfg, chan, alpha, beta, fixed) < mse_at(cfg, chan, alpha, beta, literal)


def test_literal_matches_for_real_single_path(scalar_cfg):
    chan = ChannelRealization(np.array([[0.7]]), np.array([1.3]))
    assert solve_eta(scalar_cfg, chan, [0.9], [0.4], uncorrected=True) == pytest.approx(
        solve_eta(scalar_cfg, chan, [0.9], [0.4]), rel=1e-14)

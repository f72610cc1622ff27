import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hieraircomp.model import ChannelRealization, SystemConfig, TransmitDesign, check_feasibility
from hieraircomp.mse import evaluate_mse
from hieraircomp.oracle import pg_solve_wd, wd_magnitude_objective
from hieraircomp.wd_update import (align_phases, composite_channels, kkt_residuals,
                                   relay_headroom, solve_wd_block, wd_magnitudes)

from conftest import binding_relays, cn, random_instance


def scalar_setup(P=100.0, c=2.0):
    cfg = SystemConfig.build(1, 1, wd_power_budget=P, relay_power_budget=1.0,
                             relay_noise_power=1e-3, fc_noise_power=1.0)
    chan = ChannelRealization(np.array([[c]]), np.ones(1))
    return cfg, chan


class TestPhases:
    def test_composite_examples(self):
        assert composite_channels(ChannelRealization(np.ones((1, 1)), np.ones(1)), [1.0])[0] == 1
        c = composite_channels(ChannelRealization(np.array([[1.0], [1j]]), np.ones(2)), np.ones(2))
        assert c[0] == pytest.approx(1 + 1j)

    @pytest.mark.parametrize("c, theta", [(1j, -np.pi / 2), (1 + 1j, -np.pi / 4), (-1.0, np.pi),
                                          (-1 - 0j, np.pi), (0.0, 0.0), (2.0, 0.0)])
    def test_examples(self, c, theta):
        assert align_phases([c])[0] == pytest.approx(theta, abs=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(re=st.floats(-1e3, 1e3), im=st.floats(-1e3, 1e3))
    def test_rotation_makes_real_nonnegative(self, re, im):
        c = complex(re, im)
        theta = align_phases([c])[0]
        assert -np.pi < theta <= np.pi
        z = np.exp(1j * theta) * c
        assert z.real >= 0 and abs(z.imag) <= 1e-12 * max(abs(c), 1.0)


class TestMagnitudes:
    def test_channel_inversion(self):
        cfg, chan = scalar_setup()
        assert wd_magnitudes(cfg, chan, [1.0], 1.0, [0.0])[0] == pytest.approx(0.5)

    def test_clip_to_budget(self):
        cfg, chan = scalar_setup(P=0.04)
        assert wd_magnitudes(cfg, chan, [1.0], 1.0, [0.0])[0] == pytest.approx(0.2)

    def test_regularized(self):
        cfg, chan = scalar_setup()
        # a/(a^2 + mu |h|^2) with a = 2, |h|^2 = 4, mu = 0.25
        assert wd_magnitudes(cfg, chan, [1.0], 1.0, [0.25])[0] == pytest.approx(2 / 5)

    def test_dead_composite_channel_is_silent(self):
        cfg, chan = scalar_setup(c=0.0)
        assert wd_magnitudes(cfg, chan, [1.0], 1.0, [0.0])[0] == 0.0

    def test_eta_scaling(self):
        cfg, chan = scalar_setup()
        # a = |c|/eta = 1 at eta = 2, so the inverse is 1
        assert wd_magnitudes(cfg, chan, [1.0], 2.0, [0.0])[0] == pytest.approx(1.0)


class TestBlock:
    def test_fast_path_when_relays_slack(self):
        cfg, chan, rng = random_instance(1, num_wds=4, num_relays=2)
        beta = 1e-3 * cn(rng, 2)
        alpha, dual = solve_wd_block(cfg, chan, beta, 1.0)
        assert np.all(dual.mu == 0) and dual.iterations == 0
        np.testing.assert_allclose(np.abs(alpha), wd_magnitudes(cfg, chan, beta, 1.0, np.zeros(2)))

    def test_silent_relay_constraint_is_inactive(self):
        cfg, chan, rng = random_instance(2, num_wds=3, num_relays=2)
        beta = np.array([0.0, 1.0]) * binding_relays(cfg, chan, rng, 1.0)
        assert relay_headroom(cfg, beta)[0] == np.inf
        alpha, dual = solve_wd_block(cfg, chan, beta, 1.0)
        assert dual.mu[0] == 0.0
        assert check_feasibility(cfg, chan, TransmitDesign(alpha, beta, 1.0)).feasible

    def test_exhausted_relay_silences_its_wds(self):
        cfg = SystemConfig.build(2, 2, wd_power_budget=1, relay_power_budget=1,
                                 relay_noise_power=0.25, fc_noise_power=0.1)
        H = np.array([[1.0, 0.0], [0.5, 1.0]])
        chan = ChannelRealization(H, np.ones(2))
        beta = np.array([2.0, 0.3])  # relay 0 is saturated by its own noise
        alpha, _ = solve_wd_block(cfg, chan, beta, 1.0)
        assert alpha[0] == 0
        assert abs(alpha[1]) > 0

    def test_overloaded_relay_rejected(self):
        cfg, chan, _ = random_instance(3, num_wds=2, num_relays=1)
        beta = np.array([10.0 * np.sqrt(cfg.relay_power_budget[0] / cfg.relay_noise_power[0])])
        with pytest.raises(ValueError, match="power budget"):
            solve_wd_block(cfg, chan, beta, 1.0)

    def test_two_wd_tight_relay_matches_oracle(self):
        cfg = SystemConfig.build(2, 1, message_variance=[1.0, 2.0], wd_power_budget=[1.0, 1.5],
                                 relay_power_budget=1.0, relay_noise_power=0.1, fc_noise_power=0.1)
        chan = ChannelRealization(np.array([[0.8 + 0.3j, -0.4 + 0.9j]]), np.array([0.7 - 0.2j]))
        beta, eta = np.array([0.9]), 0.5
        alpha, dual = solve_wd_block(cfg, chan, beta, eta)
        assert dual.mu[0] > 0  # the relay constraint binds
        ref = pg_solve_wd(cfg, chan, beta, eta, tol=1e-11)
        assert ref.converged
        np.testing.assert_allclose(np.abs(alpha), ref.x, rtol=1e-6, atol=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_objective_matches_oracle(self, seed):
        cfg, chan, rng = random_instance(100 + seed, num_wds=4, num_relays=3)
        eta = float(rng.uniform(0.5, 2))
        beta = binding_relays(cfg, chan, rng, eta)
        alpha, _ = solve_wd_block(cfg, chan, beta, eta)
        ref = pg_solve_wd(cfg, chan, beta, eta, tol=1e-11)
        assert ref.converged
        mine = wd_magnitude_objective(cfg, chan, beta, eta, np.abs(alpha))
        scale = max(ref.objective, 1e-4 * cfg.message_variance.sum())
        assert abs(mine - ref.objective) <= 1e-6 * scale


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_block_properties(seed):
    cfg, chan, rng = random_instance(seed)
    eta = float(rng.uniform(0.3, 3))
    beta = binding_relays(cfg, chan, rng, eta)
    alpha, dual = solve_wd_block(cfg, chan, beta, eta)
    design = TransmitDesign(alpha, beta, eta)

    # certificate and feasibility
    assert dual.converged
    assert dual.kkt.worst <= 1e-6
    assert np.all(dual.mu >= 0)
    assert check_feasibility(cfg, chan, design).feasible

    # phases cancel the composite channel
    c = composite_channels(chan, beta)
    prod = alpha * c
    assert np.all(prod.real >= 0)
    np.testing.assert_allclose(prod.imag, 0, atol=1e-12 * max(1.0, np.max(np.abs(prod))))

    # magnitudes are the regularized inversion at the returned multipliers
    np.testing.assert_allclose(np.abs(alpha), wd_magnitudes(cfg, chan, beta, eta, dual.mu),
                               rtol=1e-8, atol=1e-12)

    # block descent from a feasible incoming point: a random alpha shrunk into
    # the WD boxes, then into the relay constraints
    u = cn(rng, cfg.num_wds)
    incoming = u / np.max(np.abs(u)) * np.sqrt(cfg.wd_power_budget / cfg.message_variance)
    load = np.abs(chan.wd_relay_gains) ** 2 @ (np.abs(incoming) ** 2 * cfg.message_variance)
    incoming = incoming * min(1.0, np.min(np.sqrt(relay_headroom(cfg, beta) / load)))
    before = TransmitDesign(incoming, beta, eta)
    assert check_feasibility(cfg, chan, before).feasible
    assert evaluate_mse(cfg, chan, design).unscaled <= evaluate_mse(cfg, chan, before).unscaled + 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_no_single_phase_change_helps(seed):
    cfg, chan, rng = random_instance(seed)
    eta = float(rng.uniform(0.3, 3))
    beta = binding_relays(cfg, chan, rng, eta)
    alpha, _ = solve_wd_block(cfg, chan, beta, eta)
    base = evaluate_mse(cfg, chan, TransmitDesign(alpha, beta, eta)).unscaled
    for k in range(cfg.num_wds):
        for phi in np.linspace(-np.pi, np.pi, 64, endpoint=False):
            trial = alpha.copy()
            trial[k] = abs(alpha[k]) * np.exp(1j * phi)
            val = evaluate_mse(cfg, chan, TransmitDesign(trial, beta, eta)).unscaled
            assert val >= base - 1e-12 * max(base, 1.0)


def test_kkt_residuals_flag_suboptimal_point():
    cfg, chan, rng = random_instance(4, num_wds=4, num_relays=2)
    eta = 1.0
    beta = binding_relays(cfg, chan, rng, eta)
    alpha, dual = solve_wd_block(cfg, chan, beta, eta)
    bad = kkt_residuals(cfg, chan, beta, eta, 0.5 * np.abs(alpha), dual.mu)
    assert bad.worst > 1e-3

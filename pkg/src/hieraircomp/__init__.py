"""Joint transmit, relay-gain and receiver design for two-hop analog averaging over the air."""

from .config import ConfigTemplate, load_config, reference_defaults
from .denoise_update import DegenerateDesignError, solve_eta
from .harness import ExperimentResult, SweepSpec, export, run_sweep
from .model import (ChannelGeometry, ChannelRealization, ConfigError, MseBreakdown,
                    SystemConfig, TransmitDesign, check_feasibility, dbm_to_watts,
                    draw_channels, validate_config)
from .mse import empirical_mse, evaluate_mse
from .relay_update import mmse_candidate, project_relay, relay_budget_caps, solve_relay_block
from .solver import Scheme, SolverOptions, SolveTrace, initialize, solve
from .wd_update import align_phases, composite_channels, solve_wd_block, wd_magnitudes

__version__ = "0.1.0"

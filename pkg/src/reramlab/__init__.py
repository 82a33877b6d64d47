"""Stochastic behavioral ReRAM simulator and stateful-logic Monte Carlo lab."""

from .device import (DeviceParams, DeviceState, IntegratorConfig, StepReport,
                     current, leakage_derivative, lrs_fraction, resistance,
                     state_derivative, step, window_off, window_on)
from .errors import (ConfigError, ContractError, MetricError, NumericInputError,
                     ReramLabError, TopologyError)
from .gates import (CorrectnessResult, GateSpec, GateTrialResult, StableTimeStats,
                    correctness_study, felix_or_gate, gate_spec, imply_gate,
                    logic_value, magic_nor_gate, run_gate, stable_time_study,
                    tmsl_nor_gate)
from .network import (Memristor, Netlist, Resistor, TransientTrace, VSource,
                      run_transient, solve_dc)
from .replays import (average_deviation, extract_thresholds, fit_decay_tau,
                      histogram, replay_dynamics, replay_leakage,
                      replay_leakage_series, replay_ron_roff, replay_thresholds,
                      simulate_waveform, worst_deviation)
from .sampling import (DistributionSpec, ParamDistributions, PRESETS,
                       SamplingPolicy, default_distributions, fixed_distributions,
                       nominal_params, sample, sec2b_distributions)
from .waveform import (Segment, Waveform, dynamics_protocol, forming_sweep,
                       hold, leakage_protocol, pulse, ron_roff_protocol)

__version__ = "0.1.0"

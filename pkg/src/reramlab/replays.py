"""Characterization experiment replays and analysis primitives.

Each replay drives a single device with the corresponding stimulus
protocol, reads resistance during the sub-threshold measurement pulses
(averaged over the second half of the pulse, mimicking a settled
instrument read), and returns the per-cycle readings plus summary
statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .device import (DeviceParams, DeviceState, IntegratorConfig, current,
                     lrs_fraction, resistance, step)
from .errors import ConfigError, ContractError, MetricError
from .sampling import ParamDistributions, SamplingPolicy, default_distributions
from .waveform import (MEASURE_PULSE, RESET_PULSE, SET_PULSE, Segment, Waveform,
                       forming_sweep, hold, pulse)

_READ_SUBDIVISIONS = 8


@dataclass
class ProbeReading:
    t: float          # effective read instant (midpoint of the averaged window)
    ohms: float


def _run_segment(state: DeviceState, seg: Segment, p: DeviceParams,
                 cfg: IntegratorConfig, t0: float,
                 n_sub: int = 1) -> tuple[DeviceState, list[tuple[float, float]]]:
    """Advance through one segment; returns (state, [(t, R)] at sub starts)."""
    samples = []
    h = seg.duration / n_sub
    for k in range(n_sub):
        t_loc = k * h
        samples.append((t0 + t_loc, resistance(state.w, p)))
        v = seg.value_at(t_loc + 0.5 * h) if seg.kind in ("ramp", "sine") else seg.value_at(t_loc)
        state, _ = step(state, v, h, p, cfg) if v != 0.0 or state.theta != 0.0 else (state, None)
    return state, samples


def _read_probe(state: DeviceState, p: DeviceParams, cfg: IntegratorConfig,
                t0: float) -> tuple[DeviceState, ProbeReading]:
    """50 mV measurement pulse; resistance averaged over its second half."""
    seg = pulse(*MEASURE_PULSE)
    state, samples = _run_segment(state, seg, p, cfg, t0, _READ_SUBDIVISIONS)
    half = samples[_READ_SUBDIVISIONS // 2:]
    ohms = float(np.mean([r for _, r in half]))
    t_eff = float(np.mean([t for t, _ in half]))
    return state, ProbeReading(t_eff, ohms)


def _apply(state: DeviceState, amplitude: float, duration: float,
           p: DeviceParams, cfg: IntegratorConfig) -> DeviceState:
    state, _ = step(state, amplitude, duration, p, cfg)
    return state


@dataclass
class RonRoffResult:
    ron_samples: np.ndarray
    roff_samples: np.ndarray
    programmed_ron: np.ndarray     # per-cycle sampled r_on parameters
    programmed_roff: np.ndarray

    @property
    def ron_mean(self) -> float:
        return float(np.mean(self.ron_samples))

    @property
    def ron_sigma(self) -> float:
        return float(np.std(self.ron_samples))

    @property
    def roff_mean(self) -> float:
        return float(np.mean(self.roff_samples))

    @property
    def roff_sigma(self) -> float:
        return float(np.std(self.roff_samples))


def replay_ron_roff(n_cycles: int = 100, dists: ParamDistributions | None = None,
                    seed: int = 0, gap: float = 100e-6,
                    cfg: IntegratorConfig | None = None) -> RonRoffResult:
    """LRS/HRS cycling: SET, read, RESET, read with fresh per-cycle params."""
    if n_cycles < 2:
        raise ConfigError("n_cycles must be >= 2")
    dists = dists or default_distributions()
    policy = SamplingPolicy(mode="per_cycle", base_seed=seed)
    cfg = cfg or IntegratorConfig()
    from .sampling import sample
    ron, roff, prog_on, prog_off = [], [], [], []
    for cycle in range(n_cycles):
        p = sample(dists, policy, trial=cycle, device=0)
        state = DeviceState(w=p.w_off)
        state = _apply(state, *SET_PULSE, p, cfg)
        if gap > 0:
            state = _apply(state, 0.0, gap, p, cfg)
        state, read_on = _read_probe(state, p, cfg, 0.0)
        if gap > 0:
            state = _apply(state, 0.0, gap, p, cfg)
        state = _apply(state, *RESET_PULSE, p, cfg)
        if gap > 0:
            state = _apply(state, 0.0, gap, p, cfg)
        state, read_off = _read_probe(state, p, cfg, 0.0)
        ron.append(read_on.ohms)
        roff.append(read_off.ohms)
        prog_on.append(p.r_on)
        prog_off.append(p.r_off)
    return RonRoffResult(np.array(ron), np.array(roff),
                         np.array(prog_on), np.array(prog_off))


@dataclass
class DynamicsResult:
    staircase: np.ndarray          # (n_runs, 8) resistance after each SET pulse
    reset_t: np.ndarray            # time axis within the RESET pulse
    reset_traces: np.ndarray       # (n_runs, len(reset_t)) resistance during RESET
    set_change: np.ndarray         # reading 3 minus reading 1, per run

    @property
    def staircase_avg(self) -> np.ndarray:
        return self.staircase.mean(axis=0)

    @property
    def reset_trace_avg(self) -> np.ndarray:
        return self.reset_traces.mean(axis=0)


def replay_dynamics(n_runs: int = 100, dists: ParamDistributions | None = None,
                    seed: int = 0, gap: float = 100e-6,
                    cfg: IntegratorConfig | None = None,
                    reset_points: int = 100) -> DynamicsResult:
    """State-change experiment: eight short SET pulses with reads, then RESET."""
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    dists = dists or default_distributions()
    policy = SamplingPolicy(mode="per_cycle", base_seed=seed)
    cfg = cfg or IntegratorConfig()
    from .sampling import sample
    stair = np.zeros((n_runs, 8))
    reset_amp, reset_dur = -1.0, 2e-3
    reset_t = (np.arange(reset_points) + 0.5) * (reset_dur / reset_points)
    traces = np.zeros((n_runs, reset_points))
    for run in range(n_runs):
        p = sample(dists, policy, trial=run, device=0)
        state = DeviceState(w=p.w_off)
        for k in range(8):
            state = _apply(state, 500e-3, 100e-6, p, cfg)
            if gap > 0:
                state = _apply(state, 0.0, gap, p, cfg)
            state, reading = _read_probe(state, p, cfg, 0.0)
            stair[run, k] = reading.ohms
            if gap > 0:
                state = _apply(state, 0.0, gap, p, cfg)
        h = reset_dur / reset_points
        for j in range(reset_points):
            traces[run, j] = resistance(state.w, p)
            state = _apply(state, reset_amp, h, p, cfg)
    change = stair[:, 2] - stair[:, 0]
    return DynamicsResult(stair, reset_t, traces, change)


@dataclass
class LeakageResult:
    pre_readings: list[ProbeReading]    # probe train after RESET
    post_readings: list[ProbeReading]   # probe train after SET
    w_after_set: float
    theta_after_set: float
    params: DeviceParams

    def post_times(self) -> np.ndarray:
        t0 = self.post_readings[0].t
        return np.array([r.t - t0 for r in self.post_readings])

    def post_ohms(self) -> np.ndarray:
        return np.array([r.ohms for r in self.post_readings])

    def closed_form_ohms(self) -> np.ndarray:
        """Hold-band drift solution evaluated at the probe read instants.

        From the state at the first read, w(dt) = w0 + theta0*tau*(1-exp(-dt/tau)).
        """
        p = self.params
        w0 = p.r_on  # placeholder overwritten below; kept explicit for clarity
        r0 = self.post_readings[0].ohms
        w0 = (r0 - p.r_on) / (p.r_off - p.r_on) * (p.w_off - p.w_on) + p.w_on
        dt0 = self.post_readings[0].t  # time from SET end to first read
        theta0 = self.theta_after_set * math.exp(-dt0 / p.tau_l)
        dts = self.post_times()
        w = w0 + theta0 * p.tau_l * (1.0 - np.exp(-dts / p.tau_l))
        w = np.clip(w, p.w_on, p.w_off)
        return p.r_on + (p.r_off - p.r_on) * (w - p.w_on) / (p.w_off - p.w_on)


def replay_leakage(n_probe: int = 100, interval: float = 1.0,
                   dists: ParamDistributions | None = None, seed: int = 0,
                   cfg: IntegratorConfig | None = None,
                   cycle: int = 0) -> LeakageResult:
    """Retention experiment: RESET, probe train, SET, probe train."""
    if n_probe < 2:
        raise ConfigError("n_probe must be >= 2")
    dists = dists or default_distributions()
    policy = SamplingPolicy(mode="per_cycle", base_seed=seed)
    cfg = cfg or IntegratorConfig()
    from .sampling import sample
    p = sample(dists, policy, trial=cycle, device=0)
    state = DeviceState(w=p.w_off)
    state = _apply(state, *RESET_PULSE, p, cfg)
    gap = interval - MEASURE_PULSE[1]

    def probe_train(state: DeviceState, t0: float) -> tuple[DeviceState, list[ProbeReading]]:
        readings = []
        t = t0
        for _ in range(n_probe):
            state, reading = _read_probe(state, p, cfg, t)
            readings.append(reading)
            state = _apply(state, 0.0, gap, p, cfg)
            t += interval
        return state, readings

    state, pre = probe_train(state, 0.0)
    state = _apply(state, *SET_PULSE, p, cfg)
    w_set, theta_set = state.w, state.theta
    state, post = probe_train(state, 0.0)
    return LeakageResult(pre, post, w_set, theta_set, p)


def replay_leakage_series(n_pulses: int = 3, n_probe: int = 30,
                          interval: float = 1.0,
                          dists: ParamDistributions | None = None,
                          seed: int = 0,
                          cfg: IntegratorConfig | None = None) -> list[np.ndarray]:
    """Consecutive SET pulses with probe windows between; one resistance
    series per window."""
    dists = dists or default_distributions()
    policy = SamplingPolicy(mode="per_cycle", base_seed=seed)
    cfg = cfg or IntegratorConfig()
    from .sampling import sample
    p = sample(dists, policy, trial=0, device=0)
    state = DeviceState(w=p.w_off)
    state = _apply(state, *RESET_PULSE, p, cfg)
    gap = interval - MEASURE_PULSE[1]
    windows = []
    for _ in range(n_pulses):
        state = _apply(state, *SET_PULSE, p, cfg)
        series = []
        for _ in range(n_probe):
            state, reading = _read_probe(state, p, cfg, 0.0)
            series.append(reading.ohms)
            state = _apply(state, 0.0, gap, p, cfg)
        windows.append(np.array(series))
    return windows


def fit_decay_tau(times: np.ndarray, values: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of a + b*exp(-t/tau); returns (a, b, tau)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 3:
        raise MetricError("need at least 3 points to fit a decay")
    a0 = float(values[-1])
    b0 = float(values[0] - values[-1])
    span = float(times[-1] - times[0])
    tau0 = span / 5.0 if span > 0 else 1.0

    def model(t, a, b, tau):
        return a + b * np.exp(-t / tau)

    popt, _ = curve_fit(model, times, values, p0=[a0, b0 if b0 != 0 else 1.0, tau0],
                        maxfev=20000)
    return float(popt[0]), float(popt[1]), float(popt[2])


# ---------------------------------------------------------------------------
# Threshold extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdResult:
    v_plus: float | None
    v_minus: float | None

    @property
    def detected(self) -> bool:
        return self.v_plus is not None or self.v_minus is not None


def extract_thresholds(v: np.ndarray, i: np.ndarray, sample_dt: float,
                       delta_i: float = 2.0, smooth: int = 5) -> ThresholdResult:
    """First sample per polarity whose current slope magnitude exceeds delta_i.

    The slope is a central finite difference over the sampled trace,
    smoothed with a short moving-average window; ``smooth=1`` gives the raw
    per-sample difference.
    """
    v = np.asarray(v, dtype=float)
    i = np.asarray(i, dtype=float)
    if v.shape != i.shape or v.size < 3:
        raise ContractError("need equal-length v/i traces with >= 3 samples")
    if sample_dt <= 0:
        raise ContractError("sample_dt must be positive")
    slope = np.zeros_like(i)
    slope[1:-1] = (i[2:] - i[:-2]) / (2.0 * sample_dt)
    slope[0], slope[-1] = slope[1], slope[-2]
    if smooth > 1:
        kernel = np.ones(smooth) / smooth
        slope = np.convolve(slope, kernel, mode="same")
    exceeded = np.abs(slope) > delta_i
    v_plus = v_minus = None
    for k in np.flatnonzero(exceeded):
        if v[k] > 0 and v_plus is None:
            v_plus = float(v[k])
        elif v[k] < 0 and v_minus is None:
            v_minus = float(v[k])
        if v_plus is not None and v_minus is not None:
            break
    return ThresholdResult(v_plus, v_minus)


def replay_thresholds(dists: ParamDistributions | None = None, seed: int = 0,
                      amplitude: float = 1.0, n_cycles: int = 20,
                      frequency: float = 100.0, sample_dt: float = 5e-6,
                      delta_i: float = 2.0, i_limit: float = 100e-6,
                      cfg: IntegratorConfig | None = None,
                      ) -> tuple[ThresholdResult, np.ndarray, np.ndarray]:
    """Sine-sweep an already-formed device and extract threshold voltages.

    Filament creation itself is not modeled; the sweep serves threshold
    extraction only. Returns (thresholds, v trace, i trace).
    """
    dists = dists or default_distributions()
    policy = SamplingPolicy(mode="per_cycle", base_seed=seed)
    cfg = cfg or IntegratorConfig()
    from .sampling import sample
    p = sample(dists, policy, trial=0, device=0)
    wf = forming_sweep(amplitude, n_cycles, frequency, sample_dt)
    seg = wf.segments[0]
    n = int(round(seg.duration / sample_dt))
    state = DeviceState(w=p.w_off)
    vs = np.zeros(n)
    cs = np.zeros(n)
    for k in range(n):
        v = seg.value_at((k + 0.5) * sample_dt)
        vs[k] = v
        cs[k] = current(v, state.w, p, i_limit)
        state, _ = step(state, v, sample_dt, p, cfg)
    thr = extract_thresholds(vs, cs, sample_dt, delta_i=delta_i)
    return thr, vs, cs


@dataclass
class DeviceTrace:
    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    w: np.ndarray
    theta: np.ndarray
    ohms: np.ndarray
    final_state: DeviceState


def simulate_waveform(wf: Waveform, state: DeviceState, p: DeviceParams,
                      cfg: IntegratorConfig | None = None,
                      i_limit: float | None = None) -> DeviceTrace:
    """Drive one device with a waveform, recording at sample_dt resolution."""
    cfg = cfg or IntegratorConfig()
    state = state.copy()
    ts, vs, cs, ws, thetas, ohms = [], [], [], [], [], []
    t0 = 0.0
    for seg in wf.segments:
        n_sub = max(1, int(round(seg.duration / wf.sample_dt)))
        h = seg.duration / n_sub
        for k in range(n_sub):
            t_loc = k * h
            v = seg.value_at(t_loc + 0.5 * h if seg.kind in ("ramp", "sine") else t_loc)
            ts.append(t0 + t_loc)
            vs.append(v)
            cs.append(current(v, state.w, p, i_limit))
            ws.append(state.w)
            thetas.append(state.theta)
            ohms.append(resistance(state.w, p))
            state, _ = step(state, v, h, p, cfg)
        t0 += seg.duration
    ts.append(t0)
    vs.append(0.0)
    cs.append(0.0)
    ws.append(state.w)
    thetas.append(state.theta)
    ohms.append(resistance(state.w, p))
    return DeviceTrace(np.array(ts), np.array(vs), np.array(cs), np.array(ws),
                       np.array(thetas), np.array(ohms), state)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def average_deviation(model: np.ndarray, measured: np.ndarray) -> float:
    """Mean relative deviation (1/N) * sum(|model_i - measured_i| / measured_i)."""
    model = np.asarray(model, dtype=float)
    measured = np.asarray(measured, dtype=float)
    if model.shape != measured.shape or model.size < 1:
        raise MetricError("series must be the same nonzero length")
    if np.any(measured == 0.0):
        raise MetricError("metric undefined: measured series contains zeros")
    return float(np.mean(np.abs(model - measured) / measured))


def worst_deviation(model: np.ndarray, measured: np.ndarray) -> float:
    model = np.asarray(model, dtype=float)
    measured = np.asarray(measured, dtype=float)
    if np.any(measured == 0.0):
        raise MetricError("metric undefined: measured series contains zeros")
    return float(np.max(np.abs(model - measured) / measured))


@dataclass
class HistogramResult:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    sigma: float


def histogram(samples: np.ndarray, n_bins: int | None = None,
              bin_width: float | None = None) -> HistogramResult:
    """Counts plus a maximum-likelihood gaussian fit (sample mean/sigma)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise MetricError("histogram of empty input is undefined")
    mean = float(np.mean(samples))
    sigma = float(np.std(samples))
    lo, hi = float(np.min(samples)), float(np.max(samples))
    if lo == hi:
        edges = np.array([lo, hi if hi > lo else lo + 1.0])
        counts = np.array([samples.size])
        return HistogramResult(edges, counts, mean, sigma)
    if bin_width is not None:
        if bin_width <= 0:
            raise MetricError("bin_width must be positive")
        n_bins = max(1, int(math.ceil((hi - lo) / bin_width)))
        edges = lo + bin_width * np.arange(n_bins + 1)
    else:
        n_bins = n_bins or min(50, max(5, int(math.sqrt(samples.size))))
        edges = np.linspace(lo, hi, n_bins + 1)
    counts, edges = np.histogram(samples, bins=edges)
    return HistogramResult(edges, counts, mean, sigma)

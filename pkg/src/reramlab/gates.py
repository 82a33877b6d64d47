"""Stateful logic gates and Monte Carlo studies of their reliability.

Four gate families are modeled, each as a small star network driven by
constant sources for one operation time T:

* ``IMPLY``: two memristors share a node loaded by R_G; the q device is
  conditionally SET and holds the output.
* ``MAGIC_NOR``: parallel inputs from V0 to a node, output (reverse
  polarity) from the node to ground, initialized LRS and selectively RESET.
* ``FELIX_OR``: V0 feeds the output device, inputs pull the shared node to
  ground; output initialized HRS and SET unless both inputs are open.
* ``TMSL_NOR``: inputs tie the shared node to V_cond, R_G pulls it toward
  V_set, output (node to ground) initialized HRS and SET only for '00'.

Logic mapping: '0' is HRS, '1' is LRS; the normalized state
``s = (w_off - w) / (w_off - w_on)`` is thresholded at 0.5.

Studies run on a vectorized engine that advances all trials in lockstep;
it reproduces the scalar network/device path (tested for agreement) but
evaluates the single unknown node of these star topologies in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams, DeviceState, IntegratorConfig
from .errors import ConfigError, ContractError
from .network import Memristor, Netlist, Resistor, VSource, run_transient
from .sampling import (ParamDistributions, SamplingPolicy, default_distributions,
                       fixed_distributions, nominal_params, sample)

FAMILIES = ("IMPLY", "MAGIC_NOR", "FELIX_OR", "TMSL_NOR")

_PARAM_NAMES = ("r_off", "r_on", "v_off", "v_on", "k_off", "k_on", "alpha_off",
                "alpha_on", "a_off", "a_on", "w_c", "w_off", "w_on",
                "theta_off", "theta_on", "tau_l")

INPUT_CASES = ("00", "01", "10", "11")

DEFAULT_TRIALS = 1000
DEFAULT_HORIZON = 200.0
_THETA_SUBSTEP_FRACTION = 1e-3


def logic_value(s: float) -> int:
    """Threshold the normalized state at 0.5 (0.5 itself reads as '1')."""
    if not (0.0 <= s <= 1.0):
        raise ContractError(f"normalized state {s} outside [0, 1]")
    return 1 if s >= 0.5 else 0


@dataclass(frozen=True)
class GateSpec:
    """One gate design: topology, drive levels, timing, and init rules."""

    family: str
    T: float
    voltages: dict[str, float]
    r_g: float | None
    netlist: Netlist
    device_ids: tuple[str, ...]      # inputs first, output last
    out_id: str
    out_init: str                    # "lrs" | "hrs" | "bit" (IMPLY: q holds input b)
    truth: tuple[int, int, int, int]  # expected output for 00, 01, 10, 11

    def expected(self, bits: str) -> int:
        return self.truth[INPUT_CASES.index(bits)]

    def validate(self, dists: ParamDistributions | None = None) -> "GateSpec":
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.T <= 0:
            raise ConfigError("operation time T must be positive")
        self.netlist.validate()
        if self.family == "IMPLY":
            p = nominal_params(dists)
            v_set, v_cond = self.voltages["v_set"], self.voltages["v_cond"]
            if not (v_set > p.v_off and v_set > v_cond):
                raise ConfigError("IMPLY needs V_set > v_off and V_set > V_cond")
            if not (p.r_on < self.r_g < p.r_off):
                raise ConfigError("IMPLY needs r_on < R_G < r_off")
        return self


def imply_gate(T: float = 50e-6, v_set: float = 0.6, v_cond: float = 0.4,
               r_g: float = 40e3) -> GateSpec:
    net = Netlist((
        VSource("vcond", "p_top", "0", v_cond),
        VSource("vset", "q_top", "0", v_set),
        Memristor("p", "p_top", "n", +1),
        Memristor("q", "q_top", "n", +1),
        Resistor(r_g, "n", "0"),
    ))
    return GateSpec("IMPLY", T, {"v_set": v_set, "v_cond": v_cond}, r_g, net,
                    ("p", "q"), "q", "bit",
                    (1, 1, 0, 1)).validate()


def magic_nor_gate(T: float = 10e-3, v0: float = 1.0) -> GateSpec:
    # Output reversed: the node voltage drives it toward RESET. Inputs see
    # SET polarity from V0, which is exactly the published hazard for
    # inputs holding '0'.
    net = Netlist((
        VSource("v0", "top", "0", v0),
        Memristor("in1", "top", "n", +1),
        Memristor("in2", "top", "n", +1),
        Memristor("out", "n", "0", -1),
    ))
    return GateSpec("MAGIC_NOR", T, {"v0": v0}, None, net,
                    ("in1", "in2", "out"), "out", "lrs",
                    (1, 0, 0, 0)).validate()


def felix_or_gate(T: float = 10e-3, v0: float = 1.0) -> GateSpec:
    # Same structure as MAGIC with ground and V0 swapped; output starts HRS.
    net = Netlist((
        VSource("v0", "top", "0", v0),
        Memristor("out", "top", "n", +1),
        Memristor("in1", "n", "0", +1),
        Memristor("in2", "n", "0", +1),
    ))
    return GateSpec("FELIX_OR", T, {"v0": v0}, None, net,
                    ("in1", "in2", "out"), "out", "hrs",
                    (0, 1, 1, 1)).validate()


def tmsl_nor_gate(T: float = 100e-6, v_set: float = 1.0, v_cond: float = 0.5,
                  r_g: float = 40e3) -> GateSpec:
    # Inputs hang between the shared node and V_cond (RESET-safe for both
    # logic values); R_G pulls the node toward V_set, which SETs the output
    # only when neither input loads the node.
    net = Netlist((
        VSource("vcond", "vc", "0", v_cond),
        VSource("vset", "vs", "0", v_set),
        Memristor("in1", "vc", "n", +1),
        Memristor("in2", "vc", "n", +1),
        Memristor("out", "n", "0", +1),
        Resistor(r_g, "n", "vs"),
    ))
    return GateSpec("TMSL_NOR", T, {"v_set": v_set, "v_cond": v_cond}, r_g, net,
                    ("in1", "in2", "out"), "out", "hrs",
                    (1, 0, 0, 0)).validate()


_BUILDERS = {
    "IMPLY": imply_gate,
    "MAGIC_NOR": magic_nor_gate,
    "FELIX_OR": felix_or_gate,
    "TMSL_NOR": tmsl_nor_gate,
}


def gate_spec(family: str, **kwargs) -> GateSpec:
    try:
        builder = _BUILDERS[family.upper()]
    except KeyError:
        raise ConfigError(f"unknown gate family {family!r}; "
                          f"choose from {sorted(_BUILDERS)}") from None
    return builder(**kwargs)


def default_dt(spec: GateSpec) -> float:
    return min(100e-9, spec.T / 50.0)


def _init_w(spec: GateSpec, bits: str, params: dict[str, DeviceParams]) -> dict[str, float]:
    w0: dict[str, float] = {}
    for dev, bit in zip(spec.device_ids[:2], bits):
        p = params[dev]
        w0[dev] = p.w_on if bit == "1" else p.w_off
    p_out = params[spec.out_id]
    if spec.out_init == "lrs":
        w0[spec.out_id] = p_out.w_on
    elif spec.out_init == "hrs":
        w0[spec.out_id] = p_out.w_off
    else:  # IMPLY: q carries the second operand
        w0[spec.out_id] = p_out.w_on if bits[1] == "1" else p_out.w_off
    return w0


# ---------------------------------------------------------------------------
# Vectorized star-network engine
# ---------------------------------------------------------------------------

class _StarTopology:
    """Closed-form nodal solve for nets with one unknown node.

    All four gate netlists reduce to a star: every element connects the
    single unknown node to ground or to a source-driven node, so
    V_n = sum(G_i * V_i) / sum(G_i) is the exact nodal solution.
    """

    def __init__(self, spec: GateSpec):
        net = spec.netlist
        known: dict[str, str | float] = {net.ground: 0.0}
        for src in net.sources():
            if src.minus != net.ground:
                raise ContractError("star engine expects ground-referenced sources")
            known[src.plus] = src.id
        unknown = [n for n in net.node_names() if n not in known]
        if len(unknown) != 1:
            raise ContractError(f"expected one unknown node, found {unknown}")
        self.node = unknown[0]
        self.spec = spec
        self.mem_branches: list[tuple[int, str | float, int]] = []
        self.res_branches: list[tuple[float, str | float]] = []
        dev_index = {d: i for i, d in enumerate(spec.device_ids)}
        for el in net.elements:
            if isinstance(el, VSource):
                continue
            other = el.plus if el.minus == self.node else el.minus
            if self.node not in (el.plus, el.minus) or other not in known:
                raise ContractError("element does not fit the star topology")
            # orientation: +1 when the element's plus terminal is off-node
            sign = 1 if el.plus == other else -1
            if isinstance(el, Resistor):
                self.res_branches.append((el.ohms, known[other]))
            else:
                self.mem_branches.append((dev_index[el.id], known[other], sign))

    def node_voltage(self, g_dev: np.ndarray, src_vals: dict[str, float]) -> np.ndarray:
        """g_dev: (n_trials, n_dev) conductances -> (n_trials,) node voltage."""
        num = np.zeros(g_dev.shape[0])
        den = np.zeros(g_dev.shape[0])
        for idx, known, _sign in self.mem_branches:
            v_other = src_vals[known] if isinstance(known, str) else known
            num += g_dev[:, idx] * v_other
            den += g_dev[:, idx]
        for ohms, known in self.res_branches:
            v_other = src_vals[known] if isinstance(known, str) else known
            num += v_other / ohms
            den += 1.0 / ohms
        return num / den

    def device_voltages(self, v_node: np.ndarray, src_vals: dict[str, float],
                        n_dev: int) -> np.ndarray:
        """(n_trials, n_dev) terminal voltages v(plus) - v(minus)."""
        v = np.zeros((v_node.size, n_dev))
        for idx, known, sign in self.mem_branches:
            v_other = src_vals[known] if isinstance(known, str) else known
            v[:, idx] = sign * (v_other - v_node)
        return v


@dataclass
class _Batch:
    """Per-trial parameter and state arrays for one (gate, input) case."""

    params: dict[str, np.ndarray]   # name -> (n, n_dev)
    w: np.ndarray                   # (n, n_dev)
    theta: np.ndarray               # (n, n_dev)
    polarity: np.ndarray            # (n_dev,)


def _sample_batch(spec: GateSpec, bits: str, trials: range,
                  dists: ParamDistributions, policy: SamplingPolicy,
                  leakage: bool) -> _Batch:
    n = len(trials)
    n_dev = len(spec.device_ids)
    arrs = {name: np.zeros((n, n_dev)) for name in _PARAM_NAMES}
    w = np.zeros((n, n_dev))
    for row, trial in enumerate(trials):
        pset = {dev: sample(dists, policy, trial, di)
                for di, dev in enumerate(spec.device_ids)}
        if not leakage:
            pset = {dev: _no_leak(p) for dev, p in pset.items()}
        w0 = _init_w(spec, bits, pset)
        for di, dev in enumerate(spec.device_ids):
            p = pset[dev]
            for name in _PARAM_NAMES:
                arrs[name][row, di] = getattr(p, name)
            w[row, di] = w0[dev]
    polarity = np.array([_polarity_of(spec, dev) for dev in spec.device_ids])
    return _Batch(arrs, w, np.zeros((n, n_dev)), polarity)


def _no_leak(p: DeviceParams) -> DeviceParams:
    return DeviceParams(**{**{k: getattr(p, k) for k in _PARAM_NAMES},
                           "theta_off": 0.0, "theta_on": 0.0})


def _polarity_of(spec: GateSpec, dev: str) -> int:
    for el in spec.netlist.memristors():
        if el.id == dev:
            return el.polarity
    raise ContractError(f"device {dev!r} not in netlist")


def _branch_rates(v_eff: np.ndarray, w: np.ndarray, theta: np.ndarray,
                  p: dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (dw/dt, dtheta/dt); mirrors device.state/leakage_derivative."""
    set_mask = v_eff > p["v_off"]
    reset_mask = v_eff < p["v_on"]
    f_off = np.exp(-np.exp((w - p["a_off"]) / p["w_c"]))
    f_on = np.exp(-np.exp((-w - p["a_on"]) / p["w_c"]))
    set_base = np.where(set_mask, v_eff / p["v_off"] - 1.0, 0.0)
    reset_base = np.where(reset_mask, v_eff / p["v_on"] - 1.0, 0.0)
    set_mag = p["k_off"] * set_base ** p["alpha_off"] * f_off
    reset_mag = -p["k_on"] * reset_base ** p["alpha_on"] * f_on
    dw = np.where(set_mask, -set_mag, np.where(reset_mask, reset_mag, theta))
    source = np.where(set_mask, p["theta_off"] * set_mag,
                      np.where(reset_mask, p["theta_on"] * reset_mag, 0.0))
    dtheta = -theta / p["tau_l"] + source
    return dw, dtheta


def _advance(batch: _Batch, v_dev: np.ndarray, dt: float, max_dw: float) -> None:
    """Euler-substep all trials by dt at frozen terminal voltages."""
    p = batch.params
    v_eff = v_dev * batch.polarity
    tau_cap = float(np.min(p["tau_l"])) * _THETA_SUBSTEP_FRACTION
    remaining = dt
    while remaining > 0.0:
        dw, dtheta = _branch_rates(v_eff, batch.w, batch.theta, p)
        eff = np.where(((batch.w <= p["w_on"]) & (dw < 0))
                       | ((batch.w >= p["w_off"]) & (dw > 0)), 0.0, dw)
        h = remaining
        peak = float(np.max(np.abs(eff)))
        if peak > 0.0:
            h = min(h, max_dw / peak)
        if np.any(batch.theta != 0.0) or np.any(dtheta != 0.0):
            h = min(h, tau_cap)
        batch.w += h * dw
        np.clip(batch.w, p["w_on"], p["w_off"], out=batch.w)
        batch.theta += h * dtheta
        remaining -= h


def _run_operation(spec: GateSpec, batch: _Batch, topo: _StarTopology,
                   dt: float, max_dw_fraction: float) -> None:
    src_vals = {src.id: float(src.value) for src in spec.netlist.sources()}
    n_dev = len(spec.device_ids)
    max_dw = max_dw_fraction * float(np.min(batch.params["w_off"] - batch.params["w_on"]))
    n_steps = max(1, int(round(spec.T / dt)))
    h = spec.T / n_steps
    for _ in range(n_steps):
        g = 1.0 / _resistances(batch)
        v_node = topo.node_voltage(g, src_vals)
        v_dev = topo.device_voltages(v_node, src_vals, n_dev)
        _advance(batch, v_dev, h, max_dw)


def _resistances(batch: _Batch) -> np.ndarray:
    p = batch.params
    return p["r_on"] + (p["r_off"] - p["r_on"]) * (batch.w - p["w_on"]) / (p["w_off"] - p["w_on"])


def _lrs_fraction(batch: _Batch) -> np.ndarray:
    p = batch.params
    return (p["w_off"] - batch.w) / (p["w_off"] - p["w_on"])


def _drift_flip_times(batch: _Batch, out_idx: int, horizon: float) -> np.ndarray:
    """Stimulus-free evolution of the output device until threshold crossing.

    With sources at 0 V every node floats at 0 V, so each device follows
    the hold-branch dynamics independently; only the output decides flips.
    """
    p = {k: v[:, out_idx] for k, v in batch.params.items()}
    w = batch.w[:, out_idx].copy()
    theta = batch.theta[:, out_idx].copy()
    w_mid = 0.5 * (p["w_off"] + p["w_on"])
    start_side = np.sign(w - w_mid)
    flip = np.full(w.size, np.inf)
    h = float(np.min(p["tau_l"])) * _THETA_SUBSTEP_FRACTION
    t = 0.0
    while t < horizon:
        h_step = min(h, horizon - t)
        w_new = w + h_step * theta
        np.clip(w_new, p["w_on"], p["w_off"], out=w_new)
        theta = theta + h_step * (-theta / p["tau_l"])
        crossed = (np.isinf(flip) & (np.sign(w_new - w_mid) != start_side)
                   & (start_side != 0))
        if np.any(crossed):
            # linear interpolation inside the substep
            frac = np.zeros(w.size)
            delta = w_new - w
            nz = crossed & (delta != 0)
            frac[nz] = (w_mid[nz] - w[nz]) / delta[nz]
            flip[crossed] = t + np.clip(frac[crossed], 0.0, 1.0) * h_step
        w = w_new
        t += h_step
        # Future drift is bounded by |theta| * tau_l; stop when no
        # unflipped trial can still reach the threshold.
        pending = np.isinf(flip) & (start_side != 0)
        if not np.any(np.abs(theta[pending]) * p["tau_l"][pending]
                      >= np.abs(w_mid[pending] - w[pending])):
            break
    return flip


# ---------------------------------------------------------------------------
# Public study API
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateTrialResult:
    input: str
    params: dict[str, DeviceParams]
    final_states: dict[str, DeviceState]
    final_s: float
    verdict: int
    expected: int
    correct: bool
    flip_time: float | None = None


@dataclass
class CaseResult:
    input: str
    n_trials: int
    p_correct: float
    final_s: np.ndarray
    correct: np.ndarray


@dataclass
class CorrectnessResult:
    family: str
    n_trials: int
    cases: dict[str, CaseResult]

    @property
    def overall(self) -> float:
        return sum(c.p_correct for c in self.cases.values()) / len(self.cases)


@dataclass
class StableTimeStats:
    family: str
    input: str
    horizon: float
    n_initially_correct: int
    flip_times: np.ndarray          # finite flip times, sorted
    t_90: float
    t_99: float
    t_avg: float
    t_med: float

    @property
    def no_flips(self) -> bool:
        return self.flip_times.size == 0


def _study_case(spec: GateSpec, bits: str, trials: range,
                dists: ParamDistributions, policy: SamplingPolicy,
                leakage: bool, dt: float, max_dw_fraction: float,
                drift_horizon: float | None) -> tuple[_Batch, np.ndarray, np.ndarray]:
    topo = _StarTopology(spec)
    batch = _sample_batch(spec, bits, trials, dists, policy, leakage)
    _run_operation(spec, batch, topo, dt, max_dw_fraction)
    out_idx = spec.device_ids.index(spec.out_id)
    s_out = _lrs_fraction(batch)[:, out_idx]
    verdict = (s_out >= 0.5).astype(int)
    flips = np.full(s_out.size, np.inf)
    if drift_horizon is not None:
        flips = _drift_flip_times(batch, out_idx, drift_horizon)
    return batch, s_out, flips


def _case_worker(args) -> tuple[np.ndarray, np.ndarray]:
    (spec, bits, start, stop, dists, policy, leakage, dt,
     max_dw_fraction, drift_horizon) = args
    _, s_out, flips = _study_case(spec, bits, range(start, stop), dists, policy,
                                  leakage, dt, max_dw_fraction, drift_horizon)
    return s_out, flips


def _run_case(spec: GateSpec, bits: str, n_trials: int,
              dists: ParamDistributions, policy: SamplingPolicy, leakage: bool,
              dt: float, max_dw_fraction: float, drift_horizon: float | None,
              jobs: int) -> tuple[np.ndarray, np.ndarray]:
    if jobs <= 1 or n_trials < 2 * jobs:
        _, s_out, flips = _study_case(spec, bits, range(n_trials), dists, policy,
                                      leakage, dt, max_dw_fraction, drift_horizon)
        return s_out, flips
    import multiprocessing as mp
    bounds = np.linspace(0, n_trials, jobs + 1).astype(int)
    tasks = [(spec, bits, int(a), int(b), dists, policy, leakage, dt,
              max_dw_fraction, drift_horizon)
             for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with mp.get_context("spawn").Pool(jobs) as pool:
        parts = pool.map(_case_worker, tasks)
    # chunks are keyed by absolute trial index, so concatenation in task
    # order is bit-identical to a single-process run
    s_out = np.concatenate([p[0] for p in parts])
    flips = np.concatenate([p[1] for p in parts])
    return s_out, flips


def run_gate(spec: GateSpec, bits: str, dists: ParamDistributions | None = None,
             policy: SamplingPolicy | None = None, trial: int = 0,
             leakage: bool = True, dt: float | None = None,
             max_dw_fraction: float = 1.0 / 200.0) -> GateTrialResult:
    """Simulate one gate operation and read the verdict at t = T."""
    if bits not in INPUT_CASES:
        raise ConfigError(f"input must be one of {INPUT_CASES}, got {bits!r}")
    dists = dists or default_distributions()
    policy = policy or SamplingPolicy()
    dt = dt or default_dt(spec)
    batch, s_out, _ = _study_case(spec, bits, range(trial, trial + 1), dists,
                                  policy, leakage, dt, max_dw_fraction, None)
    params = {}
    states = {}
    for di, dev in enumerate(spec.device_ids):
        params[dev] = DeviceParams(**{name: float(batch.params[name][0, di])
                                      for name in _PARAM_NAMES})
        states[dev] = DeviceState(w=float(batch.w[0, di]),
                                  theta=float(batch.theta[0, di]),
                                  polarity=int(batch.polarity[di]))
    s = float(s_out[0])
    verdict = logic_value(min(max(s, 0.0), 1.0))
    expected = spec.expected(bits)
    return GateTrialResult(bits, params, states, s, verdict, expected,
                           verdict == expected)


def correctness_study(spec: GateSpec, n_trials: int = DEFAULT_TRIALS,
                      dists: ParamDistributions | None = None,
                      seed: int = 0, variation: bool = True, leakage: bool = True,
                      dt: float | None = None,
                      max_dw_fraction: float = 1.0 / 200.0,
                      jobs: int = 1) -> CorrectnessResult:
    """Monte Carlo correctness probabilities for all four input cases.

    The overall probability is the unweighted mean over the input cases.
    """
    if n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    dists = dists or default_distributions()
    if not variation:
        dists = fixed_distributions(dists)
    policy = SamplingPolicy(mode="both", base_seed=seed)
    dt = dt or default_dt(spec)
    cases: dict[str, CaseResult] = {}
    for bits in INPUT_CASES:
        s_out, _ = _run_case(spec, bits, n_trials, dists, policy, leakage, dt,
                             max_dw_fraction, None, jobs)
        correct = (s_out >= 0.5).astype(int) == spec.expected(bits)
        cases[bits] = CaseResult(bits, n_trials, float(np.mean(correct)),
                                  s_out, correct)
    return CorrectnessResult(spec.family, n_trials, cases)


def stable_time_study(spec: GateSpec, bits: str, n_trials: int = DEFAULT_TRIALS,
                      dists: ParamDistributions | None = None, seed: int = 0,
                      horizon: float = DEFAULT_HORIZON, variation: bool = True,
                      leakage: bool = True, dt: float | None = None,
                      max_dw_fraction: float = 1.0 / 200.0,
                      jobs: int = 1) -> StableTimeStats:
    """Post-operation retention: drive sources to 0 V and record bit flips.

    Only initially-correct outputs enter the statistics; t_90/t_99 are the
    spans within which at least 90%/99% of them are still correct, and
    t_avg/t_med are computed over the trials that flipped (never-flipped
    trials carry no finite flip time).
    """
    if bits not in INPUT_CASES:
        raise ConfigError(f"input must be one of {INPUT_CASES}, got {bits!r}")
    dists = dists or default_distributions()
    if not variation:
        dists = fixed_distributions(dists)
    policy = SamplingPolicy(mode="both", base_seed=seed)
    dt = dt or default_dt(spec)
    s_out, flips = _run_case(spec, bits, n_trials, dists, policy, leakage, dt,
                             max_dw_fraction, horizon, jobs)
    expected = spec.expected(bits)
    initially_correct = (s_out >= 0.5).astype(int) == expected
    flips = flips[initially_correct]
    finite = np.sort(flips[np.isfinite(flips)])
    n_corr = int(np.sum(initially_correct))
    t_90 = _stable_quantile(finite, n_corr, 0.90, horizon)
    t_99 = _stable_quantile(finite, n_corr, 0.99, horizon)
    t_avg = float(np.mean(finite)) if finite.size else math.inf
    t_med = float(np.median(finite)) if finite.size else math.inf
    return StableTimeStats(spec.family, bits, horizon, n_corr, finite,
                           t_90, t_99, t_avg, t_med)


def _stable_quantile(finite_flips: np.ndarray, n_correct: int, still: float,
                     horizon: float) -> float:
    """Largest time by which at least ``still`` of the outputs hold."""
    if n_correct == 0:
        return horizon
    allowed = int(math.floor((1.0 - still) * n_correct))
    if finite_flips.size <= allowed:
        return horizon
    return float(finite_flips[allowed])

"""Command-line front end.

One JSON config file captures a whole run (model preset, distribution
overrides, integrator settings, trial counts, output directory); flags
override file values. All randomness flows from the single seed, so any
command repeated with the same seed and config produces byte-identical
summary outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import gates, replays
from .device import DeviceState, IntegratorConfig
from .errors import ReramLabError
from .sampling import (DistributionSpec, ParamDistributions, PRESETS,
                       SamplingPolicy, nominal_params, sample)
from .waveform import Waveform, ron_roff_protocol

_GATE_NAMES = {"IMPLY": "IMPLY", "MAGIC": "MAGIC_NOR",
               "FELIX": "FELIX_OR", "TMSL": "TMSL_NOR"}

CONFIG_DEFAULTS = {
    "preset": "believer-default",
    "distributions": {},
    "uniform_halfwidth_sigmas": None,
    "integrator": {"max_dw_fraction": 1.0 / 200.0, "scheme": "euler"},
    "seed": 0,
    "trials": 1000,
    "jobs": 1,
    "horizon": 200.0,
    "out": "out",
    "label": None,
    "i_limit": None,
    "gate": {},
    "experiment": {},
    "waveform": None,
}


def _load_config(path: str | None) -> dict:
    cfg = json.loads(json.dumps(CONFIG_DEFAULTS))  # deep copy
    if path:
        with open(path) as fh:
            user = json.load(fh)
        unknown = set(user) - set(CONFIG_DEFAULTS)
        if unknown:
            raise ReramLabError(f"unknown config keys: {sorted(unknown)}")
        for key, value in user.items():
            if isinstance(cfg.get(key), dict) and isinstance(value, dict) and key != "distributions":
                cfg[key].update(value)
            else:
                cfg[key] = value
    return cfg


def _resolve_dists(cfg: dict) -> ParamDistributions:
    preset = cfg["preset"]
    if preset not in PRESETS:
        raise ReramLabError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    dists = PRESETS[preset]()
    overrides = {
        name: DistributionSpec(kind=spec["kind"], mean=float(spec["mean"]),
                               sigma=float(spec.get("sigma", 0.0)))
        for name, spec in cfg["distributions"].items()
    }
    if overrides:
        dists = dists.with_overrides(overrides)
    if cfg["uniform_halfwidth_sigmas"] is not None:
        dists = ParamDistributions(dists.specs, float(cfg["uniform_halfwidth_sigmas"])).validate()
    return dists


def _integrator(cfg: dict) -> IntegratorConfig:
    return IntegratorConfig(
        max_dw_fraction=float(cfg["integrator"]["max_dw_fraction"]),
        scheme=cfg["integrator"]["scheme"]).validate()


def _out_dir(cfg: dict, command: str) -> Path:
    label = cfg["label"] or time.strftime("%Y%m%dT%H%M%S")
    path = Path(cfg["out"]) / command / label
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_manifest(outdir: Path, cfg: dict, command: str) -> None:
    resolved = dict(cfg)
    resolved["command"] = command
    resolved["label"] = cfg["label"]
    _write_json(outdir / "manifest.json", resolved)


def _write_histogram(path: Path, hist: replays.HistogramResult) -> None:
    with open(path, "w") as fh:
        fh.write("bin_low,bin_high,count\n")
        for lo, hi, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            fh.write(f"{lo!r},{hi!r},{int(count)}\n")


def _csv_row(values) -> str:
    return ",".join(repr(float(v)) if isinstance(v, (int, float, np.floating))
                    else str(v) for v in values) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_device(cfg: dict) -> Path:
    outdir = _out_dir(cfg, "device")
    dists = _resolve_dists(cfg)
    icfg = _integrator(cfg)
    if cfg["waveform"] is not None:
        wf = Waveform.from_dict(cfg["waveform"])
    else:
        wf = ron_roff_protocol()
        cfg = dict(cfg)
        cfg["waveform"] = wf.to_dict()
    policy = SamplingPolicy(mode="per_cycle", base_seed=int(cfg["seed"]))
    p = sample(dists, policy, trial=0, device=0)
    trace = replays.simulate_waveform(wf, DeviceState(w=p.w_off), p, icfg,
                                      cfg["i_limit"])
    with open(outdir / "trace.csv", "w") as fh:
        fh.write("t,v,i,w,theta,R\n")
        for k in range(trace.t.size):
            fh.write(_csv_row([trace.t[k], trace.v[k], trace.i[k],
                               trace.w[k], trace.theta[k], trace.ohms[k]]))
    _write_json(outdir / "summary.json", {
        "duration": wf.duration,
        "final_w": trace.final_state.w,
        "final_theta": trace.final_state.theta,
        "final_R": float(trace.ohms[-1]),
        "min_R": float(np.min(trace.ohms)),
        "max_R": float(np.max(trace.ohms)),
    })
    _write_manifest(outdir, cfg, "device")
    return outdir


def cmd_experiment(name: str, cfg: dict) -> Path:
    outdir = _out_dir(cfg, f"experiment-{name}")
    dists = _resolve_dists(cfg)
    icfg = _integrator(cfg)
    seed = int(cfg["seed"])
    exp = cfg["experiment"]

    if name == "ron-roff":
        result = replays.replay_ron_roff(
            n_cycles=int(exp.get("n_cycles", 100)), dists=dists, seed=seed,
            gap=float(exp.get("gap", 100e-6)), cfg=icfg)
        with open(outdir / "cycles.csv", "w") as fh:
            fh.write("cycle,ron_read,roff_read,ron_programmed,roff_programmed\n")
            for k in range(result.ron_samples.size):
                fh.write(_csv_row([k, result.ron_samples[k], result.roff_samples[k],
                                   result.programmed_ron[k], result.programmed_roff[k]]))
        _write_histogram(outdir / "ron_hist.csv", replays.histogram(result.ron_samples))
        _write_histogram(outdir / "roff_hist.csv", replays.histogram(result.roff_samples))
        _write_json(outdir / "summary.json", {
            "ron_mean": result.ron_mean, "ron_sigma": result.ron_sigma,
            "roff_mean": result.roff_mean, "roff_sigma": result.roff_sigma,
            "n_cycles": int(result.ron_samples.size),
        })
    elif name == "dynamics":
        result = replays.replay_dynamics(
            n_runs=int(exp.get("n_runs", 100)), dists=dists, seed=seed,
            gap=float(exp.get("gap", 100e-6)), cfg=icfg)
        with open(outdir / "staircase.csv", "w") as fh:
            fh.write("run," + ",".join(f"r{k + 1}" for k in range(8)) + "\n")
            for run in range(result.staircase.shape[0]):
                fh.write(_csv_row([run] + list(result.staircase[run])))
        with open(outdir / "reset_trace.csv", "w") as fh:
            fh.write("t,R_avg\n")
            avg = result.reset_trace_avg
            for k in range(result.reset_t.size):
                fh.write(_csv_row([result.reset_t[k], avg[k]]))
        _write_histogram(outdir / "set_change_hist.csv",
                         replays.histogram(result.set_change))
        _write_json(outdir / "summary.json", {
            "staircase_avg": [float(x) for x in result.staircase_avg],
            "set_change_mean": float(np.mean(result.set_change)),
            "set_change_min": float(np.min(result.set_change)),
            "set_change_max": float(np.max(result.set_change)),
            "n_runs": int(result.staircase.shape[0]),
        })
    elif name == "leakage":
        if exp.get("series"):
            windows = replays.replay_leakage_series(
                n_pulses=int(exp.get("n_pulses", 3)),
                n_probe=int(exp.get("n_probe", 30)),
                interval=float(exp.get("interval", 1.0)),
                dists=dists, seed=seed, cfg=icfg)
            with open(outdir / "series.csv", "w") as fh:
                fh.write("pulse,probe,R\n")
                for pk, series in enumerate(windows):
                    for j, r in enumerate(series):
                        fh.write(_csv_row([pk, j, r]))
            drifts = [float(s[-1] - s[0]) for s in windows]
            _write_json(outdir / "summary.json", {"window_drift": drifts})
        else:
            result = replays.replay_leakage(
                n_probe=int(exp.get("n_probe", 100)),
                interval=float(exp.get("interval", 1.0)),
                dists=dists, seed=seed, cfg=icfg)
            times = result.post_times()
            ohms = result.post_ohms()
            closed = result.closed_form_ohms()
            with open(outdir / "probes.csv", "w") as fh:
                fh.write("t,R_pre,R_post,R_closed_form\n")
                pre = [r.ohms for r in result.pre_readings]
                for k in range(times.size):
                    fh.write(_csv_row([times[k], pre[k], ohms[k], closed[k]]))
            a, b, tau = replays.fit_decay_tau(times, ohms)
            _write_json(outdir / "summary.json", {
                "fitted_tau": tau,
                "fitted_floor": a,
                "fitted_amplitude": b,
                "avg_deviation_vs_closed_form": replays.average_deviation(closed, ohms),
                "worst_deviation_vs_closed_form": replays.worst_deviation(closed, ohms),
            })
    elif name == "thresholds":
        thr, vs, cs = replays.replay_thresholds(
            dists=dists, seed=seed,
            amplitude=float(exp.get("amplitude", 1.0)),
            n_cycles=int(exp.get("n_cycles", 20)),
            delta_i=float(exp.get("delta_i", 2.0)),
            i_limit=cfg["i_limit"] if cfg["i_limit"] is not None else 100e-6,
            cfg=icfg)
        with open(outdir / "sweep.csv", "w") as fh:
            fh.write("sample,v,i\n")
            for k in range(vs.size):
                fh.write(_csv_row([k, vs[k], cs[k]]))
        _write_json(outdir / "summary.json", {
            "detected": thr.detected,
            "v_th_plus": thr.v_plus,
            "v_th_minus": thr.v_minus,
        })
    else:
        raise ReramLabError(f"unknown experiment {name!r}")
    _write_manifest(outdir, cfg, f"experiment-{name}")
    return outdir


def cmd_gate(family: str, study: str, cfg: dict) -> Path:
    outdir = _out_dir(cfg, f"gate-{family}-{study}")
    dists = _resolve_dists(cfg)
    gate_kwargs = dict(cfg["gate"])
    input_bits = gate_kwargs.pop("input", "00")
    spec = gates.gate_spec(_GATE_NAMES[family], **gate_kwargs)
    seed, trials, jobs = int(cfg["seed"]), int(cfg["trials"]), int(cfg["jobs"])
    max_dw = float(cfg["integrator"]["max_dw_fraction"])

    if study == "correctness":
        result = gates.correctness_study(spec, trials, dists, seed=seed,
                                         max_dw_fraction=max_dw, jobs=jobs)
        with open(outdir / "trials.csv", "w") as fh:
            fh.write("trial,input,verdict,final_state,flip_time\n")
            for bits, case in result.cases.items():
                for k in range(case.n_trials):
                    verdict = "correct" if case.correct[k] else "incorrect"
                    fh.write(f"{k},{bits},{verdict},{case.final_s[k]!r},\n")
        for bits, case in result.cases.items():
            _write_histogram(outdir / f"state_hist_{bits}.csv",
                             replays.histogram(case.final_s, n_bins=40))
        _write_json(outdir / "summary.json", {
            "family": family,
            "n_trials": trials,
            "p_correct": {bits: case.p_correct for bits, case in result.cases.items()},
            "overall": result.overall,
        })
    elif study == "stable-time":
        horizon = float(cfg["horizon"])
        stats_by_input = {}
        rows = []
        for bits in gates.INPUT_CASES:
            st = gates.stable_time_study(spec, bits, trials, dists, seed=seed,
                                         horizon=horizon, max_dw_fraction=max_dw,
                                         jobs=jobs)
            stats_by_input[bits] = st
            for k, ft in enumerate(st.flip_times):
                rows.append((k, bits, "flipped", float(ft)))
        with open(outdir / "trials.csv", "w") as fh:
            fh.write("trial,input,verdict,final_state,flip_time\n")
            for k, bits, verdict, ft in rows:
                fh.write(f"{k},{bits},{verdict},,{ft!r}\n")
        all_flips = np.concatenate([st.flip_times for st in stats_by_input.values()]) \
            if any(st.flip_times.size for st in stats_by_input.values()) else np.array([])
        if all_flips.size:
            _write_histogram(outdir / "flip_time_hist.csv",
                             replays.histogram(all_flips, n_bins=40))
        summary = {"family": family, "horizon": horizon, "n_trials": trials,
                   "inputs": {}}
        for bits, st in stats_by_input.items():
            summary["inputs"][bits] = {
                "n_initially_correct": st.n_initially_correct,
                "n_flipped": int(st.flip_times.size),
                "no_flips": st.no_flips,
                "t_90": st.t_90, "t_99": st.t_99,
                "t_avg": None if not st.flip_times.size else st.t_avg,
                "t_med": None if not st.flip_times.size else st.t_med,
            }
        _write_json(outdir / "summary.json", summary)
    else:
        raise ReramLabError(f"unknown study {study!r}")
    _write_manifest(outdir, cfg, f"gate-{family}-{study}")
    return outdir


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reramlab",
        description="Stochastic ReRAM device simulator and logic-gate Monte Carlo lab")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="base seed for all randomness")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials per input case")
    parser.add_argument("--jobs", type=int, help="worker processes for trial batches")
    parser.add_argument("--out", help="output root directory")
    parser.add_argument("--preset", help="distribution preset name")
    parser.add_argument("--horizon", type=float, help="stable-time horizon (s)")
    parser.add_argument("--label", help="run label (default: timestamp)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("device", help="single-device transient from the config waveform")

    p_exp = sub.add_parser("experiment", help="characterization replays")
    p_exp.add_argument("name", choices=["ron-roff", "dynamics", "leakage", "thresholds"])

    p_gate = sub.add_parser("gate", help="logic-gate Monte Carlo studies")
    p_gate.add_argument("family", choices=sorted(_GATE_NAMES))
    p_gate.add_argument("study", choices=["correctness", "stable-time"])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        for key in ("seed", "trials", "jobs", "out", "preset", "horizon", "label"):
            value = getattr(args, key)
            if value is not None:
                cfg[key] = value
        if args.command == "device":
            outdir = cmd_device(cfg)
        elif args.command == "experiment":
            outdir = cmd_experiment(args.name, cfg)
        else:
            outdir = cmd_gate(args.family, args.study, cfg)
    except (ReramLabError, OSError, json.JSONDecodeError) as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    print(outdir)
    return 0


if __name__ == "__main__":
    sys.exit(main())

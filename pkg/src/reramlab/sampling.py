"""Distribution specs and reproducible sampling of device parameters.

Every draw comes from a counter-based Philox stream keyed by
``(base_seed, trial, device, parameter)``, so results do not depend on
sampling order, thread scheduling, or how many other parameters exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams
from .errors import ConfigError

_KEY_SALT = 0x9E3779B97F4A7C15  # fixed second key word; distinguishes this stream family

# Draw order is irrelevant to reproducibility (per-parameter streams) but
# parameter ids must stay stable across releases.
_PARAM_IDS = {
    "r_off": 0, "r_on": 1, "v_off": 2, "v_on": 3, "k_off": 4, "k_on": 5,
    "alpha_off": 6, "alpha_on": 7, "a_off": 8, "a_on": 9, "w_c": 10,
    "w_off": 11, "w_on": 12, "theta_off": 13, "theta_on": 14, "tau_l": 15,
}

_MAX_REDRAWS = 100

# Per-parameter validity predicates used for truncation redraws.
_VALIDITY = {
    "r_off": lambda x: x > 0,
    "r_on": lambda x: x > 0,
    "v_off": lambda x: x > 0,
    "v_on": lambda x: x < 0,
}


@dataclass(frozen=True)
class DistributionSpec:
    """One parameter's distribution: fixed, gaussian, or uniform.

    For ``uniform``, ``sigma`` is the standard-deviation-style spread; the
    support half-width is ``halfwidth_sigmas * sigma`` (3 by default, so the
    support reproduces a measured 3-sigma variation interval).
    """

    kind: str
    mean: float
    sigma: float = 0.0

    def validate(self, name: str) -> "DistributionSpec":
        if self.kind not in ("fixed", "gaussian", "uniform"):
            raise ConfigError(f"{name}: unknown distribution kind {self.kind!r}")
        if self.sigma < 0:
            raise ConfigError(f"{name}: sigma must be >= 0")
        if not math.isfinite(self.mean) or not math.isfinite(self.sigma):
            raise ConfigError(f"{name}: mean/sigma must be finite")
        return self


@dataclass(frozen=True)
class ParamDistributions:
    """A DistributionSpec per device parameter plus the uniform half-width rule."""

    specs: dict[str, DistributionSpec]
    uniform_halfwidth_sigmas: float = 3.0

    def validate(self) -> "ParamDistributions":
        missing = set(_PARAM_IDS) - set(self.specs)
        extra = set(self.specs) - set(_PARAM_IDS)
        if missing or extra:
            raise ConfigError(f"bad parameter set: missing={sorted(missing)} extra={sorted(extra)}")
        if self.uniform_halfwidth_sigmas <= 0:
            raise ConfigError("uniform_halfwidth_sigmas must be positive")
        for name, spec in self.specs.items():
            spec.validate(name)
            if spec.kind == "uniform":
                lo, hi = self.uniform_support(name)
                pred = _VALIDITY.get(name)
                if pred is not None and not (pred(lo) or pred(hi)):
                    raise ConfigError(f"{name}: uniform support [{lo}, {hi}] has no valid values")
        return self

    def uniform_support(self, name: str) -> tuple[float, float]:
        spec = self.specs[name]
        half = self.uniform_halfwidth_sigmas * spec.sigma
        return spec.mean - half, spec.mean + half

    def with_overrides(self, overrides: dict[str, DistributionSpec]) -> "ParamDistributions":
        merged = dict(self.specs)
        merged.update(overrides)
        return ParamDistributions(merged, self.uniform_halfwidth_sigmas).validate()


@dataclass(frozen=True)
class SamplingPolicy:
    """How draws are keyed: per cycle, per device, or both."""

    mode: str = "both"
    base_seed: int = 0

    def validate(self) -> "SamplingPolicy":
        if self.mode not in ("per_cycle", "per_device", "both"):
            raise ConfigError(f"unknown sampling mode {self.mode!r}")
        return self

    def effective_key(self, trial: int, device: int) -> tuple[int, int]:
        if self.mode == "per_cycle":
            return trial, 0
        if self.mode == "per_device":
            return 0, device
        return trial, device


def default_distributions() -> ParamDistributions:
    """Fitted distribution set for the modeled device family."""
    specs = {
        "r_off": DistributionSpec("gaussian", 545.54e3, 77.095e3),
        "r_on": DistributionSpec("gaussian", 4.92e3, 858.8),
        "v_off": DistributionSpec("uniform", 370.2e-3, 37.7e-3),
        "v_on": DistributionSpec("uniform", -373.8e-3, 41.1e-3),
        "k_off": DistributionSpec("uniform", 780e-6, 174.2e-6),
        "k_on": DistributionSpec("uniform", -4.67e-6, 0.747e-6),
        "alpha_off": DistributionSpec("fixed", 3.0),
        "alpha_on": DistributionSpec("fixed", 3.0),
        "a_off": DistributionSpec("fixed", 1.3e-9),
        "a_on": DistributionSpec("fixed", 1.8e-9),
        "w_c": DistributionSpec("fixed", 980e-12),
        "w_off": DistributionSpec("fixed", 3e-9),
        "w_on": DistributionSpec("fixed", 0.0),
        "theta_off": DistributionSpec("fixed", 0.0173),
        "theta_on": DistributionSpec("fixed", 0.0),
        "tau_l": DistributionSpec("fixed", 10.3),
    }
    return ParamDistributions(specs).validate()


def sec2b_distributions() -> ParamDistributions:
    """Alternative LRS/HRS statistics from the raw characterization runs."""
    return default_distributions().with_overrides({
        "r_off": DistributionSpec("gaussian", 545.52e3, 77.095e3),
        "r_on": DistributionSpec("gaussian", 4.64e3, 427.9),
    })


PRESETS = {
    "believer-default": default_distributions,
    "believer-sec2b": sec2b_distributions,
}


def nominal_params(dists: ParamDistributions | None = None) -> DeviceParams:
    """DeviceParams at distribution means (variation switched off)."""
    if dists is None:
        dists = default_distributions()
    return DeviceParams(**{name: spec.mean for name, spec in dists.specs.items()}).validate()


def fixed_distributions(dists: ParamDistributions | None = None) -> ParamDistributions:
    """Degenerate copy of ``dists`` with every parameter pinned to its mean."""
    if dists is None:
        dists = default_distributions()
    specs = {name: DistributionSpec("fixed", spec.mean) for name, spec in dists.specs.items()}
    return ParamDistributions(specs).validate()


def _stream(base_seed: int, trial: int, device: int, param_id: int) -> np.random.Generator:
    key = np.array([base_seed & 0xFFFFFFFFFFFFFFFF, _KEY_SALT], dtype=np.uint64)
    counter = np.array([0, param_id, device, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def _draw_one(name: str, spec: DistributionSpec, dists: ParamDistributions,
              gen: np.random.Generator) -> float:
    pred = _VALIDITY.get(name)
    if spec.kind == "fixed" or spec.sigma == 0.0:
        value = spec.mean
        if pred is not None and not pred(value):
            raise ConfigError(f"{name}: fixed value {value} violates its sign constraint")
        return value
    if spec.kind == "gaussian":
        for _ in range(_MAX_REDRAWS):
            value = gen.normal(spec.mean, spec.sigma)
            if abs(value - spec.mean) > 4.0 * spec.sigma:
                continue  # reject far tail draws
            if pred is None or pred(value):
                return value
        raise ConfigError(f"{name}: could not draw a valid gaussian value in "
                          f"{_MAX_REDRAWS} attempts (empty truncation region?)")
    lo, hi = dists.uniform_support(name)
    for _ in range(_MAX_REDRAWS):
        value = gen.uniform(lo, hi)
        if pred is None or pred(value):
            return value
    raise ConfigError(f"{name}: could not draw a valid uniform value in "
                      f"{_MAX_REDRAWS} attempts from [{lo}, {hi}]")


def sample(dists: ParamDistributions, policy: SamplingPolicy,
           trial: int = 0, device: int = 0) -> DeviceParams:
    """Draw one DeviceParams; bit-identical for identical (spec, seed, trial, device)."""
    dists.validate()
    policy.validate()
    t_eff, d_eff = policy.effective_key(trial, device)
    values: dict[str, float] = {}
    for name, spec in dists.specs.items():
        gen = _stream(policy.base_seed, t_eff, d_eff, _PARAM_IDS[name])
        values[name] = _draw_one(name, spec, dists, gen)
    # Ordering constraint: redraw r_off above the sampled r_on.
    if values["r_off"] <= values["r_on"]:
        gen = _stream(policy.base_seed, t_eff, d_eff, _PARAM_IDS["r_off"])
        spec = dists.specs["r_off"]
        ok = False
        for _ in range(_MAX_REDRAWS):
            values["r_off"] = _draw_one("r_off", spec, dists, gen)
            if values["r_off"] > values["r_on"]:
                ok = True
                break
        if not ok:
            raise ConfigError("r_off: could not draw a value above r_on "
                              f"(r_on={values['r_on']})")
    return DeviceParams(**values).validate()

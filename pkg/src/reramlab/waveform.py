"""Piecewise voltage stimuli: pulse trains, holds, ramps, sine sweeps."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .errors import ConfigError, ContractError

_KINDS = ("pulse", "ramp", "sine", "hold")


@dataclass(frozen=True)
class Segment:
    """One stimulus piece.

    * ``pulse``: constant ``amplitude`` for ``duration``.
    * ``hold``: 0 V for ``duration`` (amplitude ignored).
    * ``ramp``: linear from ``amplitude_start`` to ``amplitude``.
    * ``sine``: ``A(t) * sin(2*pi*frequency*t)`` with ``A(t)`` either the
      fixed ``amplitude`` or growing linearly from 0 to ``amplitude`` when
      ``grow_envelope`` is set (forming-style sweep).
    """

    kind: str
    duration: float
    amplitude: float = 0.0
    amplitude_start: float = 0.0
    frequency: float = 0.0
    grow_envelope: bool = False

    def validate(self) -> "Segment":
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown segment kind {self.kind!r}")
        if not (self.duration > 0) or not math.isfinite(self.duration):
            raise ConfigError(f"segment duration must be positive, got {self.duration!r}")
        if self.kind == "sine" and self.frequency <= 0:
            raise ConfigError("sine segment needs frequency > 0")
        return self

    def value_at(self, t_local: float) -> float:
        if self.kind == "hold":
            return 0.0
        if self.kind == "pulse":
            return self.amplitude
        if self.kind == "ramp":
            frac = t_local / self.duration
            return self.amplitude_start + (self.amplitude - self.amplitude_start) * frac
        amp = self.amplitude
        if self.grow_envelope:
            amp *= t_local / self.duration
        return amp * math.sin(2.0 * math.pi * self.frequency * t_local)


@dataclass(frozen=True)
class Waveform:
    segments: tuple[Segment, ...]
    sample_dt: float

    def validate(self) -> "Waveform":
        if not self.segments:
            raise ConfigError("waveform needs at least one segment")
        for seg in self.segments:
            seg.validate()
        shortest = min(seg.duration for seg in self.segments)
        if not (0 < self.sample_dt <= shortest / 4.0):
            raise ConfigError(f"sample_dt must be in (0, {shortest / 4.0}] "
                              f"(shortest segment / 4), got {self.sample_dt}")
        return self

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)

    def _starts(self) -> list[float]:
        starts, t = [], 0.0
        for seg in self.segments:
            starts.append(t)
            t += seg.duration
        return starts

    def voltage_at(self, t: float) -> float:
        total = self.duration
        if not (0.0 <= t <= total):
            raise ContractError(f"t={t} outside [0, {total}]")
        starts = self._starts()
        idx = bisect.bisect_right(starts, t) - 1
        seg = self.segments[idx]
        t_local = min(t - starts[idx], seg.duration)
        return seg.value_at(t_local)

    def to_dict(self) -> dict:
        return {
            "sample_dt": self.sample_dt,
            "segments": [
                {k: v for k, v in (
                    ("kind", s.kind), ("duration", s.duration),
                    ("amplitude", s.amplitude), ("amplitude_start", s.amplitude_start),
                    ("frequency", s.frequency), ("grow_envelope", s.grow_envelope))
                 if not (k in ("amplitude", "amplitude_start", "frequency") and v == 0.0)
                 and not (k == "grow_envelope" and v is False)}
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Waveform":
        try:
            segs = tuple(Segment(**seg) for seg in data["segments"])
            return cls(segments=segs, sample_dt=float(data["sample_dt"])).validate()
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad waveform block: {exc}") from exc


def pulse(amplitude: float, duration: float) -> Segment:
    return Segment("pulse", duration, amplitude)


def hold(duration: float) -> Segment:
    return Segment("hold", duration)


# Characterization protocol constants (volts / seconds).
SET_PULSE = (500e-3, 1e-3)
RESET_PULSE = (-1.0, 1e-3)
MEASURE_PULSE = (50e-3, 200e-6)
DEFAULT_GAP = 100e-6


def ron_roff_protocol(gap: float = DEFAULT_GAP, sample_dt: float = 10e-6) -> Waveform:
    """SET, read, RESET, read: one LRS/HRS cycling round.

    A configurable 0 V hold separates programming and measurement pulses so
    drift during the gaps is simulated rather than hidden. ``gap=0`` omits
    the holds.
    """
    g = [hold(gap)] if gap > 0 else []
    segs = ([pulse(*SET_PULSE)] + g + [pulse(*MEASURE_PULSE)] + g
            + [pulse(*RESET_PULSE)] + g + [pulse(*MEASURE_PULSE)])
    return Waveform(tuple(segs), sample_dt).validate()


def dynamics_protocol(gap: float = DEFAULT_GAP, sample_dt: float = 10e-6) -> Waveform:
    """Eight SET/read pairs followed by a long RESET and a final read."""
    g = [hold(gap)] if gap > 0 else []
    segs: list[Segment] = []
    for _ in range(8):
        segs += [pulse(500e-3, 100e-6)] + g + [pulse(*MEASURE_PULSE)] + g
    segs += [pulse(-1.0, 2e-3)] + g + [pulse(*MEASURE_PULSE)]
    return Waveform(tuple(segs), sample_dt).validate()


def leakage_protocol(n_probe: int = 100, interval: float = 1.0,
                     sample_dt: float = 50e-6) -> Waveform:
    """RESET, probe train, SET, probe train; probes at fixed intervals."""
    if n_probe < 1:
        raise ConfigError("n_probe must be >= 1")
    if interval <= MEASURE_PULSE[1]:
        raise ConfigError("interval must exceed the measurement pulse width")
    gap = interval - MEASURE_PULSE[1]
    probes: list[Segment] = []
    for _ in range(n_probe):
        probes += [pulse(*MEASURE_PULSE), hold(gap)]
    segs = [pulse(*RESET_PULSE)] + probes + [pulse(*SET_PULSE)] + probes
    return Waveform(tuple(segs), sample_dt).validate()


def forming_sweep(amplitude: float = 1.0, n_cycles: int = 20,
                  frequency: float = 100.0, sample_dt: float = 5e-6) -> Waveform:
    """Sine sweep with linearly growing envelope, as used for forming."""
    seg = Segment("sine", duration=n_cycles / frequency, amplitude=amplitude,
                  frequency=frequency, grow_envelope=True)
    return Waveform((seg,), sample_dt).validate()

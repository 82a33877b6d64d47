"""Transient simulation of small resistive networks with memristors.

At every instant the voltage-current law makes each memristor an ordinary
resistor, so one linear nodal solve per timestep is exact; device states
are advanced afterwards with the solved terminal voltages (explicit
coupling, resistances frozen within a step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams, DeviceState, IntegratorConfig, current, resistance, step
from .errors import ContractError, NumericInputError, TopologyError
from .waveform import Waveform


@dataclass(frozen=True)
class Memristor:
    id: str
    plus: str
    minus: str
    polarity: int = 1


@dataclass(frozen=True)
class Resistor:
    ohms: float
    plus: str
    minus: str


@dataclass(frozen=True)
class VSource:
    id: str
    plus: str
    minus: str
    value: float | Waveform = 0.0


@dataclass(frozen=True)
class Netlist:
    elements: tuple
    ground: str = "0"

    def validate(self) -> "Netlist":
        nodes = self.node_names()
        if self.ground not in nodes:
            raise TopologyError(f"ground node {self.ground!r} not referenced by any element")
        # Connectivity: every node must reach ground through some element.
        adj: dict[str, set[str]] = {n: set() for n in nodes}
        for el in self.elements:
            adj[el.plus].add(el.minus)
            adj[el.minus].add(el.plus)
        seen = {self.ground}
        stack = [self.ground]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        floating = set(nodes) - seen
        if floating:
            raise TopologyError(f"nodes not connected to ground: {sorted(floating)}")
        # Voltage-source loops make the source currents indeterminate: in
        # any connected component of the source-only graph, #edges must
        # stay below #nodes (i.e., the sources form a forest).
        sources = [el for el in self.elements if isinstance(el, VSource)]
        src_adj: dict[str, list[str]] = {}
        for el in sources:
            src_adj.setdefault(el.plus, []).append(el.minus)
            src_adj.setdefault(el.minus, []).append(el.plus)
        comp_seen: set[str] = set()
        for start in src_adj:
            if start in comp_seen:
                continue
            comp, stack = set(), [start]
            while stack:
                node = stack.pop()
                if node in comp:
                    continue
                comp.add(node)
                stack.extend(src_adj[node])
            comp_seen |= comp
            n_edges = sum(1 for el in sources if el.plus in comp and el.minus in comp)
            if n_edges >= len(comp):
                raise TopologyError("voltage-source loop detected")
        ids = [el.id for el in self.elements if isinstance(el, (Memristor, VSource))]
        if len(ids) != len(set(ids)):
            raise TopologyError("duplicate element ids")
        return self

    def node_names(self) -> list[str]:
        names: list[str] = []
        for el in self.elements:
            for n in (el.plus, el.minus):
                if n not in names:
                    names.append(n)
        return names

    def memristors(self) -> list[Memristor]:
        return [el for el in self.elements if isinstance(el, Memristor)]

    def sources(self) -> list[VSource]:
        return [el for el in self.elements if isinstance(el, VSource)]


def gauss_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense Gaussian elimination with partial pivoting.

    Kept hand-rolled on purpose: the independent library solver serves as
    the cross-check oracle in the test suite, not the implementation.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = b.size
    scale = max(np.max(np.abs(a)), 1.0)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < 1e-12 * scale:
            raise TopologyError("singular system (floating subnetwork?)")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            m = a[i, k] / a[k, k]
            if m != 0.0:
                a[i, k:] -= m * a[k, k:]
                b[i] -= m * b[k]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


class _MnaSystem:
    """Assembles the modified nodal equations for one netlist."""

    def __init__(self, netlist: Netlist):
        netlist.validate()
        self.netlist = netlist
        self.unknown_nodes = [n for n in netlist.node_names() if n != netlist.ground]
        self.node_index = {n: i for i, n in enumerate(self.unknown_nodes)}
        self.src_list = netlist.sources()
        self.n = len(self.unknown_nodes)
        self.m = len(self.src_list)

    def assemble(self, resistances: dict[str, float],
                 source_values: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
        size = self.n + self.m
        a = np.zeros((size, size))
        z = np.zeros(size)
        for el in self.netlist.elements:
            if isinstance(el, Resistor):
                r = el.ohms
            elif isinstance(el, Memristor):
                r = resistances[el.id]
            else:
                continue
            if not (r > 0) or not math.isfinite(r):
                raise ContractError(f"resistance must be positive and finite, got {r}")
            g = 1.0 / r
            ip = self.node_index.get(el.plus)
            im = self.node_index.get(el.minus)
            if ip is not None:
                a[ip, ip] += g
            if im is not None:
                a[im, im] += g
            if ip is not None and im is not None:
                a[ip, im] -= g
                a[im, ip] -= g
        for j, src in enumerate(self.src_list):
            row = self.n + j
            ip = self.node_index.get(src.plus)
            im = self.node_index.get(src.minus)
            if ip is not None:
                a[ip, row] += 1.0
                a[row, ip] += 1.0
            if im is not None:
                a[im, row] -= 1.0
                a[row, im] -= 1.0
            z[row] = source_values[src.id]
        return a, z

    def solve_raw(self, resistances: dict[str, float],
                  source_values: dict[str, float]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, z = self.assemble(resistances, source_values)
        return gauss_solve(a, z), a, z

    def solve(self, resistances: dict[str, float],
              source_values: dict[str, float]) -> dict[str, float]:
        x, _, _ = self.solve_raw(resistances, source_values)
        volts = {self.netlist.ground: 0.0}
        volts.update({n: x[i] for n, i in self.node_index.items()})
        return volts


def solve_dc(netlist: Netlist, resistances: dict[str, float],
             source_values: dict[str, float]) -> dict[str, float]:
    """Node voltages of the linear resistive network (exact, one solve)."""
    return _MnaSystem(netlist).solve(resistances, source_values)


@dataclass
class TransientTrace:
    t: np.ndarray
    nodes: dict[str, np.ndarray]
    devices: dict[str, dict[str, np.ndarray]]
    final_states: dict[str, DeviceState]
    max_kcl_residual: float = 0.0

    def to_csv(self, fh) -> None:
        dev_ids = sorted(self.devices)
        node_names = sorted(self.nodes)
        cols = ["t"] + [f"node:{n}" for n in node_names]
        for d in dev_ids:
            cols += [f"dev:{d}:{q}" for q in ("v", "i", "w", "theta", "R")]
        fh.write(",".join(cols) + "\n")
        for k in range(self.t.size):
            row = [repr(float(self.t[k]))]
            row += [repr(float(self.nodes[n][k])) for n in node_names]
            for d in dev_ids:
                dd = self.devices[d]
                row += [repr(float(dd[q][k])) for q in ("v", "i", "w", "theta", "R")]
            fh.write(",".join(row) + "\n")


def _source_value(src: VSource, t: float) -> float:
    if isinstance(src.value, Waveform):
        if t <= src.value.duration:
            return src.value.voltage_at(t)
        return 0.0
    return float(src.value)


def run_transient(netlist: Netlist, states: dict[str, DeviceState],
                  params: dict[str, DeviceParams], duration: float, dt: float,
                  cfg: IntegratorConfig | None = None,
                  i_limit: float | None = None,
                  check_kcl: bool = False) -> TransientTrace:
    """Explicit transient loop: solve, record, step devices, repeat.

    Devices all see voltages from the same solve, so their update order
    within a timestep cannot affect results.
    """
    if cfg is None:
        cfg = IntegratorConfig()
    if duration < 0 or not math.isfinite(duration):
        raise NumericInputError(f"bad duration {duration!r}")
    if duration > 0 and (dt <= 0 or not math.isfinite(dt)):
        raise NumericInputError(f"dt must be positive, got {dt!r}")
    sys_ = _MnaSystem(netlist)
    mems = netlist.memristors()
    for mem in mems:
        if mem.id not in states or mem.id not in params:
            raise ContractError(f"no state/params for memristor {mem.id!r}")

    states = {k: s.copy() for k, s in states.items()}
    if duration == 0:
        return TransientTrace(np.empty(0), {n: np.empty(0) for n in netlist.node_names()},
                              {m.id: {q: np.empty(0) for q in ("v", "i", "w", "theta", "R")}
                               for m in mems},
                              states)

    n_steps = max(1, int(round(duration / dt)))
    times = np.linspace(0.0, duration, n_steps + 1)
    node_names = netlist.node_names()
    rec_nodes = {n: np.zeros(n_steps + 1) for n in node_names}
    rec_dev = {m.id: {q: np.zeros(n_steps + 1) for q in ("v", "i", "w", "theta", "R")}
               for m in mems}
    max_resid = 0.0

    for k, t in enumerate(times):
        res = {m.id: resistance(states[m.id].w, params[m.id]) for m in mems}
        srcs = {s.id: _source_value(s, t) for s in netlist.sources()}
        x, a, z = sys_.solve_raw(res, srcs)
        volts = {netlist.ground: 0.0}
        volts.update({n: x[i] for n, i in sys_.node_index.items()})
        if check_kcl:
            resid = float(np.max(np.abs(a @ x - z))) if x.size else 0.0
            scale = max(abs(_branch_current_scale(netlist, volts, res)), 1e-30)
            max_resid = max(max_resid, resid / scale)
        for n in node_names:
            rec_nodes[n][k] = volts[n]
        for m in mems:
            v = volts[m.plus] - volts[m.minus]
            st = states[m.id]
            rec_dev[m.id]["v"][k] = v
            rec_dev[m.id]["i"][k] = current(v, st.w, params[m.id], i_limit)
            rec_dev[m.id]["w"][k] = st.w
            rec_dev[m.id]["theta"][k] = st.theta
            rec_dev[m.id]["R"][k] = res[m.id]
        if k < n_steps:
            h = times[k + 1] - t
            for m in mems:
                v = volts[m.plus] - volts[m.minus]
                states[m.id], _ = step(states[m.id], v, h, params[m.id], cfg)

    return TransientTrace(times, rec_nodes, rec_dev, states, max_resid)


def _branch_current_scale(netlist: Netlist, volts: dict[str, float],
                          res: dict[str, float]) -> float:
    biggest = 0.0
    for el in netlist.elements:
        if isinstance(el, Resistor):
            biggest = max(biggest, abs(volts[el.plus] - volts[el.minus]) / el.ohms)
        elif isinstance(el, Memristor):
            biggest = max(biggest, abs(volts[el.plus] - volts[el.minus]) / res[el.id])
    return biggest

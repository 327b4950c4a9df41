"""Event-driven timing simulation of NOR / C-element netlists.

Output transitions are scheduled through the separation-dependent delay
families, so a second input transition arriving while an output event
is pending revises that event: the delay is referenced to the first
transition of the pair, and the revised crossing can move either way.
Input reversal before the output fires cancels the pending event
outright; glitch shaping is out of scope.
"""

from __future__ import annotations

import heapq
import math
import time as _time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .gates import CGateParams, DelayQuery, NorGateParams, cgate_delay, nor_delay

GATE_KINDS = ("nor2", "cgate", "input_source")

# scheduling below this slack of the causal bound is a model error, but
# an ulp of drift from reassembling the same sum is not
_CAUSALITY_SLACK = 1e-18

_STIMULUS_GAP_FLOOR = 1e-12


class NetlistError(ValueError):
    """Structural problem in a netlist; lists every violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class CausalityError(RuntimeError):
    """A computed output time precedes its triggering input plus delta_min."""


class LivelockError(RuntimeError):
    """Event count exceeded the configured cap."""


@dataclass(frozen=True)
class SimEvent:
    time: float
    net: str
    value: int
    seq: int


@dataclass(frozen=True)
class StimulusSpec:
    """Pulse-train description for one input source."""
    mu: float
    sigma: float
    n_transitions: int
    seed: int


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str
    inputs: Tuple[str, ...]
    output: str
    params_ref: str = ""


@dataclass
class Netlist:
    gates: Tuple[Gate, ...]
    nets: Dict[str, int]
    stimuli: Dict[str, StimulusSpec] = field(default_factory=dict)


@dataclass
class SimStats:
    events: int
    transitions: Dict[str, int]
    wall_clock_s: float


@dataclass
class SimResult:
    trace: Dict[str, List[Tuple[float, int]]]
    changes: Tuple[Tuple[float, str, int], ...]
    stats: SimStats


# 64-bit generator with a documented, platform-independent stream:
# xoshiro256** seeded through splitmix64.

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int):
    while True:
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """Deterministic 64-bit RNG; identical streams on every platform."""

    def __init__(self, seed: int):
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ValueError(f"seed must be an integer, got {seed!r}")
        gen = _splitmix64(seed & _MASK64)
        self._s = [next(gen) for _ in range(4)]
        if not any(self._s):
            self._s[0] = 1
        self._gauss_spare: Optional[float] = None

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        """Uniform on (0, 1]; never zero, so log() is always safe."""
        return ((self.next_u64() >> 11) + 1) * 2.0 ** -53

    def gauss(self) -> float:
        if self._gauss_spare is not None:
            z = self._gauss_spare
            self._gauss_spare = None
            return z
        radius = math.sqrt(-2.0 * math.log(self.uniform()))
        theta = 2.0 * math.pi * self.uniform()
        self._gauss_spare = radius * math.sin(theta)
        return radius * math.cos(theta)


def generate_stimulus(mu: float, sigma: float, n: int, seed: int,
                      net: str = "input", start_value: int = 0) -> List[SimEvent]:
    """Alternating pulse train with Normal(mu, sigma) gaps.

    Gaps are truncated below at 1 ps; with sigma = 0 the transitions
    land on exact multiples of mu.  Deterministic for a fixed seed.
    """
    if not (isinstance(mu, (int, float)) and math.isfinite(mu) and mu > 0.0):
        raise ValueError(f"mu must be a positive time, got {mu!r}")
    if not (isinstance(sigma, (int, float)) and math.isfinite(sigma)
            and sigma >= 0.0):
        raise ValueError(f"sigma must be non-negative, got {sigma!r}")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive count, got {n!r}")
    rng = Xoshiro256StarStar(seed)
    events = []
    t = 0.0
    value = start_value
    for i in range(n):
        if sigma == 0.0:
            t = (i + 1) * mu
        else:
            t += max(mu + sigma * rng.gauss(), _STIMULUS_GAP_FLOOR)
        value = 1 - value
        events.append(SimEvent(time=t, net=net, value=value, seq=i))
    return events


def _is_net_name(name) -> bool:
    return isinstance(name, str) and name != "" and not any(
        ch.isspace() for ch in name)


def validate_netlist(nl: Netlist) -> None:
    """Structural checks; raises NetlistError listing every violation."""
    problems: List[str] = []
    seen_ids = set()
    drivers: Dict[str, str] = {}
    for g in nl.gates:
        if not isinstance(g.id, str) or not g.id:
            problems.append(f"gate id {g.id!r} is not a usable identifier")
            continue
        if g.id in seen_ids:
            problems.append(f"duplicate gate id {g.id!r}")
        seen_ids.add(g.id)
        if g.kind not in GATE_KINDS:
            problems.append(f"gate {g.id}: unknown kind {g.kind!r}")
            continue
        if not _is_net_name(g.output):
            problems.append(f"gate {g.id}: bad output net {g.output!r}")
        elif g.output not in nl.nets:
            problems.append(f"gate {g.id}: output net {g.output!r} not declared")
        if g.output in drivers:
            problems.append(f"net {g.output!r} driven by both "
                            f"{drivers[g.output]!r} and {g.id!r}")
        else:
            drivers[g.output] = g.id
        if g.kind == "input_source":
            if g.inputs:
                problems.append(f"source {g.id} must not have inputs")
        else:
            if len(g.inputs) != 2:
                problems.append(f"gate {g.id} needs exactly two inputs")
            else:
                for net in g.inputs:
                    if not _is_net_name(net):
                        problems.append(f"gate {g.id}: bad input net {net!r}")
                    elif net not in nl.nets:
                        problems.append(f"gate {g.id}: input net {net!r} "
                                        f"not declared")
            if not g.params_ref:
                problems.append(f"gate {g.id} has no parameter reference")
    for net, value in nl.nets.items():
        if not _is_net_name(net):
            problems.append(f"bad net name {net!r}")
        if value not in (0, 1):
            problems.append(f"net {net!r}: initial value must be 0 or 1, "
                            f"got {value!r}")
        if net not in drivers:
            problems.append(f"net {net!r} has no driver")
    for g in nl.gates:
        # initial output must agree with the steady response to the
        # initial inputs; the C element is checked at run time because
        # its polarity lives in the parameter set
        if g.kind == "nor2" and len(g.inputs) == 2 \
                and all(n in nl.nets for n in (*g.inputs, g.output)):
            a0, b0 = nl.nets[g.inputs[0]], nl.nets[g.inputs[1]]
            want = 0 if (a0 or b0) else 1
            if nl.nets[g.output] != want:
                problems.append(f"gate {g.id}: initial output "
                                f"{nl.nets[g.output]} inconsistent with "
                                f"initial inputs ({a0}, {b0})")
    for src, spec in nl.stimuli.items():
        if src not in seen_ids:
            problems.append(f"stimulus for unknown source {src!r}")
        elif next(g.kind for g in nl.gates if g.id == src) != "input_source":
            problems.append(f"stimulus target {src!r} is not a source")
        if not (isinstance(spec, StimulusSpec) and spec.mu > 0.0
                and spec.sigma >= 0.0 and spec.n_transitions >= 1):
            problems.append(f"stimulus for {src!r} is malformed: {spec!r}")
    if problems:
        raise NetlistError(problems)


class _NetState:
    __slots__ = ("value", "last_rise", "last_fall")

    def __init__(self, value: int):
        self.value = value
        self.last_rise = -math.inf
        self.last_fall = -math.inf


class _GateRun:
    __slots__ = ("gate", "params", "pending_seq", "pending_time",
                 "pending_value")

    def __init__(self, gate: Gate, params):
        self.gate = gate
        self.params = params
        self.pending_seq = -1
        self.pending_time = 0.0
        self.pending_value = 0


def run(nl: Netlist, library: Dict[str, object], t_end: Optional[float] = None,
        max_events: int = 10_000_000) -> SimResult:
    """Process the netlist's events in (time, seq) order.

    Returns the per-net transition trace and run statistics.  The event
    loop is serial by contract; determinism over (netlist, seeds) is
    part of the interface.
    """
    validate_netlist(nl)
    started = _time.perf_counter()

    nets = {name: _NetState(v) for name, v in nl.nets.items()}
    gates: Dict[str, _GateRun] = {}
    fanout: Dict[str, List[str]] = {name: [] for name in nl.nets}
    problems = []
    for g in nl.gates:
        if g.kind == "input_source":
            continue
        params = library.get(g.params_ref)
        want = NorGateParams if g.kind == "nor2" else CGateParams
        if not isinstance(params, want):
            problems.append(f"gate {g.id}: parameter set {g.params_ref!r} "
                            f"missing or not a {want.__name__}")
            continue
        if g.kind == "cgate":
            a0, b0 = nl.nets[g.inputs[0]], nl.nets[g.inputs[1]]
            if a0 == b0:
                expect = (1 - a0) if params.inverted else a0
                if nl.nets[g.output] != expect:
                    problems.append(f"gate {g.id}: initial output "
                                    f"inconsistent with agreeing inputs")
        gates[g.id] = _GateRun(g, params)
        for net in g.inputs:
            fanout[net].append(g.id)
    if problems:
        raise NetlistError(problems)

    heap: List[Tuple[float, int, str, str, int]] = []
    seq = 0
    for g in nl.gates:
        if g.kind != "input_source" or g.id not in nl.stimuli:
            continue
        spec = nl.stimuli[g.id]
        train = generate_stimulus(spec.mu, spec.sigma, spec.n_transitions,
                                  spec.seed, net=g.output,
                                  start_value=nl.nets[g.output])
        for ev in train:
            heapq.heappush(heap, (ev.time, seq, "", ev.net, ev.value))
            seq += 1

    trace: Dict[str, List[Tuple[float, int]]] = {name: [] for name in nl.nets}
    changes: List[Tuple[float, str, int]] = []
    transitions = {name: 0 for name in nl.nets}
    processed = 0
    popped = 0

    def cancel(gr: _GateRun) -> None:
        gr.pending_seq = -1

    def revise(gr: _GateRun, now: float) -> None:
        nonlocal seq
        g = gr.gate
        p = gr.params
        a = nets[g.inputs[0]]
        b = nets[g.inputs[1]]
        out = nets[g.output]
        if g.kind == "nor2":
            target = 0 if (a.value or b.value) else 1
        else:
            if a.value != b.value:
                cancel(gr)
                return
            target = (1 - a.value) if p.inverted else a.value
        if target == out.value:
            cancel(gr)
            return
        if g.kind == "nor2":
            if target == 0:
                t_a = a.last_rise if a.value else math.inf
                t_b = b.last_rise if b.value else math.inf
                ref = min(t_a, t_b)
                direction = "falling"
            else:
                t_a = a.last_fall
                t_b = b.last_fall
                ref = max(t_a, t_b)
                direction = "rising"
            delta = 0.0 if t_a == t_b else t_b - t_a
            if not math.isfinite(ref):
                ref = now  # input held since the start of time
            t_new = ref + nor_delay(p, DelayQuery(direction, delta))
        else:
            if a.value:
                t_a, t_b = a.last_rise, b.last_rise
            else:
                t_a, t_b = a.last_fall, b.last_fall
            delta = 0.0 if t_a == t_b else t_b - t_a
            direction = "rising" if target == 1 else "falling"
            t_new = now + cgate_delay(p, DelayQuery(direction, delta))
        if gr.pending_seq >= 0 and gr.pending_value == target \
                and gr.pending_time == t_new:
            return
        if t_new < now - _CAUSALITY_SLACK:
            raise CausalityError(
                f"gate {g.id}: output scheduled at {t_new:.6g} s, before "
                f"the input event at {now:.6g} s")
        floor = now + p.delta_min
        if t_new < floor:
            # a revision (third transition while the output is mid
            # flight) can pull the analytic crossing inside the
            # interconnect transport window; the wire still imposes
            # delta_min from the event that revealed the change
            t_new = floor
        heapq.heappush(heap, (t_new, seq, g.id, g.output, target))
        gr.pending_seq = seq
        gr.pending_time = t_new
        gr.pending_value = target
        seq += 1

    while heap:
        popped += 1
        if popped > max_events:
            raise LivelockError(
                f"event count exceeded the cap of {max_events}; the netlist "
                f"is livelocked or the cap is too small for this workload")
        t, s, gate_id, net, value = heapq.heappop(heap)
        if t_end is not None and t > t_end:
            break
        if gate_id:
            gr = gates[gate_id]
            if gr.pending_seq != s:
                continue  # superseded or cancelled
            gr.pending_seq = -1
        st = nets[net]
        st.value = value
        if value:
            st.last_rise = t
        else:
            st.last_fall = t
        trace[net].append((t, value))
        changes.append((t, net, value))
        transitions[net] += 1
        processed += 1
        for gid in fanout[net]:
            revise(gates[gid], t)

    stats = SimStats(events=processed, transitions=transitions,
                     wall_clock_s=_time.perf_counter() - started)
    return SimResult(trace=trace, changes=tuple(changes), stats=stats)


def build_cross_coupled_chain(n_stages: int, params_ref: str = "nor",
                              mu: float = 5e-11, sigma: float = 3e-11,
                              n_transitions: int = 0,
                              seed: int = 1) -> Netlist:
    """Two rails of cross-coupled NOR gates, driven by sources i1/i2.

    Each stage's gates take the previous stage's same-rail output first
    and the opposite-rail output second; with n_transitions = 0 the
    sources stay quiet.
    """
    if not isinstance(n_stages, int) or isinstance(n_stages, bool) \
            or n_stages < 1:
        raise ValueError(f"n_stages must be a positive count, got {n_stages!r}")
    nets: Dict[str, int] = {"i1": 0, "i2": 0}
    gates: List[Gate] = [
        Gate(id="src_a", kind="input_source", inputs=(), output="i1"),
        Gate(id="src_b", kind="input_source", inputs=(), output="i2"),
    ]
    prev_top, prev_bot = "i1", "i2"
    value = 0
    for stage in range(1, n_stages + 1):
        top, bot = f"t{stage}", f"b{stage}"
        value = 1 - value  # NOR flips the steady level every stage
        nets[top] = value
        nets[bot] = value
        gates.append(Gate(id=f"g_{top}", kind="nor2",
                          inputs=(prev_top, prev_bot), output=top,
                          params_ref=params_ref))
        gates.append(Gate(id=f"g_{bot}", kind="nor2",
                          inputs=(prev_bot, prev_top), output=bot,
                          params_ref=params_ref))
        prev_top, prev_bot = top, bot
    stimuli = {}
    if n_transitions:
        stimuli["src_a"] = StimulusSpec(mu, sigma, n_transitions, seed)
        stimuli["src_b"] = StimulusSpec(mu, sigma, n_transitions, seed + 1)
    return Netlist(gates=tuple(gates), nets=nets, stimuli=stimuli)

"""Document formats: JSON parameters, measured delays and netlists,
delay-curve CSV, and VCD traces.

Numeric fields carry SI unit suffixes in their names (_ohm, _ohm_s,
_f, _s) so a document is unambiguous without a units legend.  All
emitters are deterministic byte for byte for fixed inputs, and
`atomic_write` never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from io import StringIO
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

from .characterize import MeasuredDelays
from .gates import CGateParams, NorGateParams
from .sim import Gate, Netlist, SimStats, StimulusSpec

GateParams = Union[NorGateParams, CGateParams]

FIXTURE_DIR_ENV = "MISDELAY_FIXTURES"

CURVE_FAMILIES = ("down_plus", "down_minus", "up_plus", "up_minus")
CURVE_SOURCES = ("closed_form", "trajectory_oracle", "ode_oracle")

# document key -> dataclass attribute
_NOR_FIELDS = (
    ("r_n_a_ohm", "r_n_a"),
    ("r_n_b_ohm", "r_n_b"),
    ("r_ohm", "r"),
    ("alpha1_ohm_s", "alpha1"),
    ("alpha2_ohm_s", "alpha2"),
    ("c_load_f", "c_load"),
    ("r5_ohm", "r5"),
    ("delta_min_s", "delta_min"),
)

_CGATE_FIELDS = (
    ("r_n_ohm", "r_n"),
    ("r_p_ohm", "r_p"),
    ("alpha1_ohm_s", "alpha1"),
    ("alpha2_ohm_s", "alpha2"),
    ("alpha3_ohm_s", "alpha3"),
    ("alpha4_ohm_s", "alpha4"),
    ("c_load_f", "c_load"),
    ("r5_ohm", "r5"),
    ("delta_min_s", "delta_min"),
)

_MEASURED_FIELDS = (
    ("d_down_minus_inf_s", "d_down_minus_inf"),
    ("d_down_zero_s", "d_down_zero"),
    ("d_down_inf_s", "d_down_inf"),
    ("d_up_minus_inf_s", "d_up_minus_inf"),
    ("d_up_zero_s", "d_up_zero"),
    ("d_up_inf_s", "d_up_inf"),
)

_METADATA_STRINGS = ("label", "technology")


class SchemaError(ValueError):
    """A document does not match its schema; `path` names the spot."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _reject_nonfinite(token: str) -> float:
    raise SchemaError("", f"non-finite number {token} is not allowed")


def _load_document(text: str) -> dict:
    try:
        doc = json.loads(text, parse_constant=_reject_nonfinite)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("", "top level must be an object")
    return doc


def _number(obj: dict, key: str, path: str) -> float:
    if key not in obj:
        raise SchemaError(_join(path, key), "missing required field")
    val = obj.pop(key)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(_join(path, key), "expected a number")
    return float(val)


def _integer(obj: dict, key: str, path: str) -> int:
    if key not in obj:
        raise SchemaError(_join(path, key), "missing required field")
    val = obj.pop(key)
    if isinstance(val, bool) or not isinstance(val, int):
        raise SchemaError(_join(path, key), "expected an integer")
    return val


def _string(obj: dict, key: str, path: str) -> str:
    if key not in obj:
        raise SchemaError(_join(path, key), "missing required field")
    val = obj.pop(key)
    if not isinstance(val, str):
        raise SchemaError(_join(path, key), "expected a string")
    return val


def _no_leftovers(obj: dict, path: str, strict: bool) -> None:
    if strict and obj:
        raise SchemaError(_join(path, sorted(obj)[0]), "unknown field")


# -- gate parameter documents -------------------------------------------

def _metadata_from_doc(meta: object, path: str, strict: bool) -> Dict[str, object]:
    if not isinstance(meta, dict):
        raise SchemaError(path, "expected an object")
    meta = dict(meta)
    out: Dict[str, object] = {}
    for key in _METADATA_STRINGS:
        if key in meta:
            out[key] = _string(meta, key, path)
    if "wire_length_um" in meta:
        out["wire_length_um"] = _number(meta, "wire_length_um", path)
    _no_leftovers(meta, path, strict)
    return out


def _params_from_doc(doc: dict, path: str, strict: bool) -> GateParams:
    doc = dict(doc)
    kind = _string(doc, "kind", path)
    if kind == "nor2":
        field_map, cls = _NOR_FIELDS, NorGateParams
    elif kind == "cgate":
        field_map, cls = _CGATE_FIELDS, CGateParams
    else:
        raise SchemaError(_join(path, "kind"),
                          f"expected 'nor2' or 'cgate', got {kind!r}")
    fields = {attr: _number(doc, key, path) for key, attr in field_map}
    if cls is CGateParams and "inverted" in doc:
        val = doc.pop("inverted")
        if not isinstance(val, bool):
            raise SchemaError(_join(path, "inverted"), "expected a boolean")
        fields["inverted"] = val
    if "metadata" in doc:
        _metadata_from_doc(doc.pop("metadata"), _join(path, "metadata"), strict)
    _no_leftovers(doc, path, strict)
    return cls(**fields)


def _params_to_doc(params: GateParams,
                   metadata: Mapping[str, object] = None) -> Dict[str, object]:
    doc: Dict[str, object] = {}
    if isinstance(params, NorGateParams):
        doc["kind"] = "nor2"
        field_map = _NOR_FIELDS
    elif isinstance(params, CGateParams):
        doc["kind"] = "cgate"
        field_map = _CGATE_FIELDS
    else:
        raise TypeError(f"expected gate params, got {type(params).__name__}")
    for key, attr in field_map:
        doc[key] = getattr(params, attr)
    if isinstance(params, CGateParams) and params.inverted:
        doc["inverted"] = True
    if metadata is not None:
        doc["metadata"] = _metadata_from_doc(dict(metadata), "metadata",
                                             strict=True)
    return doc


def parse_params(text: str, strict: bool = True) -> GateParams:
    """Parse a parameter document into NorGateParams or CGateParams.

    With strict=True (default) unknown fields anywhere in the document
    are rejected; parameter invariant violations surface as ParamError
    from the dataclass constructors.
    """
    return _params_from_doc(_load_document(text), "", strict)


def serialize_params(params: GateParams,
                     metadata: Mapping[str, object] = None) -> str:
    return json.dumps(_params_to_doc(params, metadata), indent=2) + "\n"


# -- measured-delay documents --------------------------------------------

def parse_measured(text: str, c_chosen: float, delta_min: float = 0.0,
                   strict: bool = True) -> MeasuredDelays:
    """Parse the six extremal delays of a measured-delay document.

    The chosen load capacitance and transport delay are not part of
    the document; they travel as CLI flags and are supplied here.
    """
    doc = _load_document(text)
    fields = {attr: _number(doc, key, "") for key, attr in _MEASURED_FIELDS}
    _no_leftovers(doc, "", strict)
    return MeasuredDelays(delta_min=delta_min, c_chosen=c_chosen, **fields)


def serialize_measured(m: MeasuredDelays) -> str:
    doc = {key: getattr(m, attr) for key, attr in _MEASURED_FIELDS}
    return json.dumps(doc, indent=2) + "\n"


# -- netlist documents ----------------------------------------------------

def parse_netlist(text: str, strict: bool = True
                  ) -> Tuple[Netlist, Dict[str, GateParams]]:
    """Parse a netlist document; returns (netlist, parameter library)."""
    doc = dict(_load_document(text))

    if "gates" not in doc:
        raise SchemaError("gates", "missing required field")
    raw_gates = doc.pop("gates")
    if not isinstance(raw_gates, list):
        raise SchemaError("gates", "expected an array")
    gates = []
    for i, entry in enumerate(raw_gates):
        path = f"gates[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(path, "expected an object")
        entry = dict(entry)
        gid = _string(entry, "id", path)
        kind = _string(entry, "kind", path)
        inputs: Tuple[str, ...] = ()
        if "inputs" in entry:
            raw_in = entry.pop("inputs")
            if (not isinstance(raw_in, list)
                    or not all(isinstance(x, str) for x in raw_in)):
                raise SchemaError(_join(path, "inputs"),
                                  "expected an array of net names")
            inputs = tuple(raw_in)
        output = _string(entry, "output", path)
        ref = _string(entry, "params_ref", path) if "params_ref" in entry else ""
        _no_leftovers(entry, path, strict)
        gates.append(Gate(id=gid, kind=kind, inputs=inputs, output=output,
                          params_ref=ref))

    if "nets" not in doc:
        raise SchemaError("nets", "missing required field")
    raw_nets = doc.pop("nets")
    if not isinstance(raw_nets, dict):
        raise SchemaError("nets", "expected an object")
    nets: Dict[str, int] = {}
    for name, val in raw_nets.items():
        if isinstance(val, bool) or not isinstance(val, int) or val not in (0, 1):
            raise SchemaError(_join("nets", name), "expected 0 or 1")
        nets[name] = val

    stimuli: Dict[str, StimulusSpec] = {}
    if "stimuli" in doc:
        raw_st = doc.pop("stimuli")
        if not isinstance(raw_st, dict):
            raise SchemaError("stimuli", "expected an object")
        for sid, spec in raw_st.items():
            spath = _join("stimuli", sid)
            if not isinstance(spec, dict):
                raise SchemaError(spath, "expected an object")
            spec = dict(spec)
            mu = _number(spec, "mu_s", spath)
            sigma = _number(spec, "sigma_s", spath)
            n_tr = _integer(spec, "n_transitions", spath)
            seed = _integer(spec, "seed", spath)
            _no_leftovers(spec, spath, strict)
            stimuli[sid] = StimulusSpec(mu=mu, sigma=sigma,
                                        n_transitions=n_tr, seed=seed)

    library: Dict[str, GateParams] = {}
    if "params" in doc:
        raw_lib = doc.pop("params")
        if not isinstance(raw_lib, dict):
            raise SchemaError("params", "expected an object")
        for ref, entry in raw_lib.items():
            lpath = _join("params", ref)
            if not isinstance(entry, dict):
                raise SchemaError(lpath, "expected an object")
            library[ref] = _params_from_doc(entry, lpath, strict)

    _no_leftovers(doc, "", strict)

    for i, g in enumerate(gates):
        if g.kind in ("nor2", "cgate") and g.params_ref not in library:
            raise SchemaError(f"gates[{i}].params_ref",
                              f"no entry {g.params_ref!r} in params")
    return Netlist(gates=tuple(gates), nets=nets, stimuli=stimuli), library


def serialize_netlist(nl: Netlist, library: Mapping[str, GateParams]) -> str:
    gates = []
    for g in nl.gates:
        entry: Dict[str, object] = {"id": g.id, "kind": g.kind}
        if g.inputs:
            entry["inputs"] = list(g.inputs)
        entry["output"] = g.output
        if g.params_ref:
            entry["params_ref"] = g.params_ref
        gates.append(entry)
    doc: Dict[str, object] = {
        "gates": gates,
        "nets": {name: nl.nets[name] for name in sorted(nl.nets)},
    }
    if nl.stimuli:
        doc["stimuli"] = {
            sid: {"mu_s": s.mu, "sigma_s": s.sigma,
                  "n_transitions": s.n_transitions, "seed": s.seed}
            for sid, s in sorted(nl.stimuli.items())
        }
    if library:
        doc["params"] = {ref: _params_to_doc(library[ref])
                         for ref in sorted(library)}
    return json.dumps(doc, indent=2) + "\n"


# -- delay-curve CSV -------------------------------------------------------

def write_curve_csv(rows: Iterable[Tuple[float, float, str, str]]) -> str:
    """Render delay-curve rows (delta, delay, family, source) as CSV.

    Enforces the curve invariants: known family and source labels, no
    NaN cells, strictly increasing delta within each (family, source)
    series.
    """
    out = StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("delta_s", "delay_s", "family", "source"))
    last: Dict[Tuple[str, str], float] = {}
    for i, (delta, delay, family, source) in enumerate(rows):
        if family not in CURVE_FAMILIES:
            raise ValueError(f"row {i}: unknown family {family!r}")
        if source not in CURVE_SOURCES:
            raise ValueError(f"row {i}: unknown source {source!r}")
        if math.isnan(delta) or math.isnan(delay):
            raise ValueError(f"row {i}: NaN cell")
        key = (family, source)
        if key in last and delta <= last[key]:
            raise ValueError(
                f"row {i}: delta not increasing within {family}/{source}")
        last[key] = delta
        writer.writerow((repr(delta), repr(delay), family, source))
    return out.getvalue()


# -- VCD traces ------------------------------------------------------------

def _vcd_id(i: int) -> str:
    # identifier codes over the printable range '!'..'~', base 94
    chars = []
    while True:
        chars.append(chr(33 + i % 94))
        i //= 94
        if i == 0:
            return "".join(chars)


def write_vcd(trace: Mapping[str, Sequence[Tuple[float, int]]],
              initial: Mapping[str, int]) -> str:
    """Render per-net value changes as a VCD document.

    `initial` maps every net to its value at time zero; `trace` holds
    time-ordered (time, value) changes per net.  The timescale is 1 fs
    so sub-picosecond delays stay representable; change times are
    rounded to the nearest femtosecond.
    """
    unknown = sorted(set(trace) - set(initial))
    if unknown:
        raise ValueError(f"trace nets missing from the net map: {unknown}")
    nets = sorted(initial)
    codes = {net: _vcd_id(i) for i, net in enumerate(nets)}

    lines = ["$timescale 1 fs $end", "$scope module top $end"]
    for net in nets:
        lines.append(f"$var wire 1 {codes[net]} {net} $end")
    lines.append("$upscope $end")
    lines.append("$enddefinitions $end")
    lines.append("$dumpvars")
    for net in nets:
        value = initial[net]
        if value not in (0, 1):
            raise ValueError(f"net {net!r}: initial value must be 0 or 1")
        lines.append(f"{value}{codes[net]}")
    lines.append("$end")

    order = {net: i for i, net in enumerate(nets)}
    merged = []
    for net in nets:
        prev = -math.inf
        for t, value in trace.get(net, ()):
            if value not in (0, 1):
                raise ValueError(f"net {net!r}: change value must be 0 or 1")
            if t < prev:
                raise ValueError(f"net {net!r}: trace not time-ordered")
            prev = t
            merged.append((round(t * 1e15), order[net], value))
    merged.sort(key=lambda item: (item[0], item[1]))

    current_fs = None
    for fs, idx, value in merged:
        if fs != current_fs:
            lines.append(f"#{fs}")
            current_fs = fs
        lines.append(f"{value}{codes[nets[idx]]}")
    return "\n".join(lines) + "\n"


# -- stats reports ----------------------------------------------------------

def serialize_stats(stats: SimStats) -> str:
    doc = {
        "events": stats.events,
        "transitions": {net: stats.transitions[net]
                        for net in sorted(stats.transitions)},
        "wall_clock_s": stats.wall_clock_s,
    }
    return json.dumps(doc, indent=2) + "\n"


# -- file plumbing -----------------------------------------------------------

def atomic_write(path: Union[str, os.PathLike], text: str) -> None:
    """Write text to path via a same-directory temp file and rename.

    A failure mid-write leaves the target untouched; readers never see
    a partial document.
    """
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory,
                               prefix=os.path.basename(path) + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def fixture_dir() -> Path:
    """Directory of bundled parameter fixtures.

    The MISDELAY_FIXTURES environment variable overrides the packaged
    directory.
    """
    override = os.environ.get(FIXTURE_DIR_ENV)
    if override:
        return Path(override)
    return Path(__file__).with_name("fixtures")


def list_fixtures() -> List[str]:
    return sorted(p.stem for p in fixture_dir().glob("*.json"))


def load_fixture(name: str) -> GateParams:
    path = fixture_dir() / f"{name}.json"
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KeyError(f"no fixture named {name!r} in {fixture_dir()}") from None
    return parse_params(text)

"""Declarative study definitions, the analysis pipeline, and report I/O.

A scenario file picks one benchmark case, the farm's reactive-control mode,
whether frequency support is active, optional parameter overrides, and a
disturbance script.  ``run_scenario`` drives power flow, assembly,
linearization and modal analysis, annotating any failure with the pipeline
stage that raised it.  ``run_sensitivity_sweep`` repeats the analysis over a
droop-gain grid.  Reports and sweeps export as CSV or as structured text
that parses back into an equal object, so archived results can be diffed
and reloaded faithfully.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__
from .dfig import DroopParams
from .modal import Mode, analyze_modes, dominant_modes, linearize
from .powerflow import solve_power_flow
from .system import assemble
from .timedomain import Event, Trace, cycles, simulate
from .twoarea import CASES, build_two_area

BASE_CASES = CASES
CONTROL_MODES = ("voltage", "reactive_power")
DEFAULT_SUPPORT_KP = 20.0
DEFAULT_SUPPORT_KIN = 0.0
DEFAULT_GAIN_GRID = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0)
POWER_FLOW_TOL = 1e-12
CONTROL_MODE_FLAG_THRESHOLD = 0.05

_MODE_CLASSES = ("inter_area", "local", "converter_control", "other")


class ScenarioError(ValueError):
    """A scenario file or object violates the schema."""


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class Override:
    """One parameter patch: set ``field`` of device ``device`` to ``value``."""

    device: str
    field: str
    value: float


@dataclass(frozen=True)
class Scenario:
    """Fully resolved study definition.

    ``droop.enabled`` always mirrors ``frequency_support``; case A carries
    no wind farm so the support and farm fields must stay at their
    defaults there.
    """

    base_case: str
    name: str = ""
    description: str = ""
    control_mode: str = "voltage"
    frequency_support: bool = False
    droop: DroopParams = field(default_factory=DroopParams)
    wind_mva: float | None = None
    k_pss: float = 10.0
    overrides: tuple[Override, ...] = ()
    events: tuple[Event, ...] = ()
    sha256: str = ""

    def __post_init__(self):
        if self.base_case not in BASE_CASES:
            raise ScenarioError(f"base_case: expected one of {BASE_CASES}, "
                                f"got {self.base_case!r}")
        if self.control_mode not in CONTROL_MODES:
            raise ScenarioError(f"control_mode: expected one of "
                                f"{CONTROL_MODES}, got {self.control_mode!r}")
        if self.base_case == "A":
            if self.frequency_support or self.droop.enabled:
                raise ScenarioError(
                    "frequency_support: case A has no wind farm to provide "
                    "support")
            if self.wind_mva is not None:
                raise ScenarioError("wind_mva: case A has no wind farm")
        if self.droop.enabled != self.frequency_support:
            raise ScenarioError(
                "droop.enabled must match frequency_support "
                f"({self.droop.enabled} vs {self.frequency_support})")
        if self.wind_mva is not None and self.wind_mva <= 0.0:
            raise ScenarioError("wind_mva: must be positive")
        if self.k_pss < 0.0:
            raise ScenarioError("k_pss: must be non-negative")
        if not self.sha256:
            object.__setattr__(self, "sha256", _canonical_hash(self))

    def to_dict(self) -> dict:
        """JSON-ready form mirroring the file schema."""
        out: dict = {"base_case": self.base_case}
        if self.name:
            out["name"] = self.name
        if self.description:
            out["description"] = self.description
        if self.base_case != "A":
            out["control_mode"] = self.control_mode
            out["frequency_support"] = self.frequency_support
            if self.frequency_support:
                out["droop"] = {
                    "kp": self.droop.kp,
                    "kin": self.droop.kin,
                    "rocof_filter_time": self.droop.rocof_filter_time,
                }
            if self.wind_mva is not None:
                out["wind_mva"] = self.wind_mva
        if self.k_pss != 10.0:
            out["k_pss"] = self.k_pss
        if self.overrides:
            out["overrides"] = [dataclasses.asdict(o) for o in self.overrides]
        if self.events:
            out["events"] = [_event_to_dict(e) for e in self.events]
        return out


def _canonical_hash(scenario: Scenario) -> str:
    text = json.dumps(scenario.to_dict(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _event_to_dict(ev: Event) -> dict:
    out: dict = {"kind": ev.kind, "t_start": ev.t_start}
    if ev.bus is not None:
        out["bus"] = ev.bus
    if ev.branch is not None:
        out["branch"] = ev.branch
    if ev.duration is not None:
        out["duration"] = ev.duration
    if ev.kind == "three_phase_fault":
        out["admittance"] = ev.admittance
    if ev.kind == "load_step":
        out["scale"] = ev.scale
    return out


def make_scenario(base_case: str, control_mode: str = "voltage",
                  frequency_support: bool = False, kp: float | None = None,
                  kin: float | None = None, **kwargs) -> Scenario:
    """Scenario with the support-gain defaults resolved.

    When support is on and a gain is unspecified it falls back to
    K_p = 20, K_in = 0 (proportional-only support).
    """
    if frequency_support:
        droop = DroopParams(
            kp=DEFAULT_SUPPORT_KP if kp is None else kp,
            kin=DEFAULT_SUPPORT_KIN if kin is None else kin,
            enabled=True,
        )
    else:
        droop = DroopParams()
    return Scenario(base_case=base_case, control_mode=control_mode,
                    frequency_support=frequency_support, droop=droop,
                    **kwargs)


# --------------------------------------------------------------------------
# strict file schema


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ScenarioError(f"{path}: {message}")


def _check_keys(obj: dict, allowed: dict, path: str) -> None:
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ScenarioError(f"{where}: unknown key")
    for key, required in allowed.items():
        if required and key not in obj:
            where = f"{path}.{key}" if path else key
            raise ScenarioError(f"{where}: missing required key")


def _number(obj: dict, key: str, path: str) -> float | None:
    if key not in obj:
        return None
    val = obj[key]
    _require(isinstance(val, (int, float)) and not isinstance(val, bool),
             f"{path}{key}", "must be a number")
    return float(val)


def _parse_event(obj: dict, path: str) -> Event:
    _require(isinstance(obj, dict), path, "must be an object")
    _check_keys(obj, {"kind": True, "t_start": True, "bus": False,
                      "branch": False, "duration": False,
                      "duration_cycles": False, "admittance": False,
                      "scale": False}, path)
    _require(isinstance(obj["kind"], str), f"{path}.kind", "must be a string")
    if "duration" in obj and "duration_cycles" in obj:
        raise ScenarioError(f"{path}.duration_cycles: give either duration "
                            "or duration_cycles, not both")
    duration = _number(obj, "duration", f"{path}.")
    n_cycles = _number(obj, "duration_cycles", f"{path}.")
    if n_cycles is not None:
        duration = cycles(n_cycles)
    bus = obj.get("bus")
    if bus is not None:
        _require(isinstance(bus, int) and not isinstance(bus, bool),
                 f"{path}.bus", "must be an integer bus id")
    branch = obj.get("branch")
    if branch is not None:
        _require(isinstance(branch, str), f"{path}.branch",
                 "must be a branch name")
    kwargs = {}
    if "admittance" in obj:
        kwargs["admittance"] = _number(obj, "admittance", f"{path}.")
    if "scale" in obj:
        kwargs["scale"] = _number(obj, "scale", f"{path}.")
    try:
        return Event(kind=obj["kind"], t_start=_number(obj, "t_start",
                                                       f"{path}."),
                     bus=bus, branch=branch, duration=duration, **kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def parse_scenario(obj: dict, name_hint: str = "",
                   sha256: str = "") -> Scenario:
    """Validate a scenario mapping and resolve defaults.

    Unknown keys are rejected with their full path.  Case A admits no
    farm-related keys at all.
    """
    _require(isinstance(obj, dict), "scenario", "must be a JSON object")
    _check_keys(obj, {"base_case": True, "name": False, "description": False,
                      "control_mode": False, "frequency_support": False,
                      "droop": False, "wind_mva": False, "k_pss": False,
                      "overrides": False, "events": False}, "")
    base_case = obj["base_case"]
    _require(base_case in BASE_CASES, "base_case",
             f"expected one of {BASE_CASES}, got {base_case!r}")

    if base_case == "A":
        for key in ("control_mode", "frequency_support", "droop", "wind_mva"):
            _require(key not in obj, key,
                     "case A has no wind farm; this key does not apply")

    support = obj.get("frequency_support", False)
    _require(isinstance(support, bool), "frequency_support",
             "must be true or false")
    droop_obj = obj.get("droop")
    if droop_obj is not None:
        _require(isinstance(droop_obj, dict), "droop", "must be an object")
        _require(support, "droop",
                 "droop gains apply only when frequency_support is true")
        _check_keys(droop_obj, {"kp": False, "kin": False,
                                "rocof_filter_time": False}, "droop")
    if support:
        droop_obj = droop_obj or {}
        kp = _number(droop_obj, "kp", "droop.")
        kin = _number(droop_obj, "kin", "droop.")
        rocof = _number(droop_obj, "rocof_filter_time", "droop.")
        try:
            droop = DroopParams(
                kp=DEFAULT_SUPPORT_KP if kp is None else kp,
                kin=DEFAULT_SUPPORT_KIN if kin is None else kin,
                rocof_filter_time=0.1 if rocof is None else rocof,
                enabled=True,
            )
        except Exception as exc:
            raise ScenarioError(f"droop: {exc}") from exc
    else:
        droop = DroopParams()

    overrides = []
    for i, entry in enumerate(obj.get("overrides", [])):
        path = f"overrides[{i}]"
        _require(isinstance(entry, dict), path, "must be an object")
        _check_keys(entry, {"device": True, "field": True, "value": True},
                    path)
        _require(isinstance(entry["device"], str), f"{path}.device",
                 "must be a device id")
        _require(isinstance(entry["field"], str), f"{path}.field",
                 "must be a parameter name")
        overrides.append(Override(device=entry["device"],
                                  field=entry["field"],
                                  value=_number(entry, "value", f"{path}.")))

    events = tuple(_parse_event(e, f"events[{i}]")
                   for i, e in enumerate(obj.get("events", [])))

    name = obj.get("name", name_hint)
    _require(isinstance(name, str), "name", "must be a string")
    description = obj.get("description", "")
    _require(isinstance(description, str), "description", "must be a string")

    kwargs: dict = {}
    if "wind_mva" in obj:
        kwargs["wind_mva"] = _number(obj, "wind_mva", "")
    if "k_pss" in obj:
        kwargs["k_pss"] = _number(obj, "k_pss", "")
    return Scenario(base_case=base_case, name=name, description=description,
                    control_mode=obj.get("control_mode", "voltage"),
                    frequency_support=support, droop=droop,
                    overrides=tuple(overrides), events=events,
                    sha256=sha256, **kwargs)


def load_scenario(path) -> Scenario:
    """Read and validate one scenario file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") \
            from exc
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return parse_scenario(obj, name_hint=path.stem,
                          sha256=hashlib.sha256(raw).hexdigest())


def packaged_scenario_names() -> list[str]:
    """Names of the scenario files shipped with the package."""
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir()
                  if p.name.endswith(".json"))


def load_packaged_scenario(name: str) -> Scenario:
    """One of the canned studies by name (see packaged_scenario_names)."""
    root = resources.files(__package__) / "scenarios"
    entry = root / f"{name}.json"
    if not entry.is_file():
        raise ScenarioError(
            f"no packaged scenario {name!r}; available: "
            f"{', '.join(packaged_scenario_names())}")
    raw = entry.read_bytes()
    return parse_scenario(json.loads(raw), name_hint=name,
                          sha256=hashlib.sha256(raw).hexdigest())


def resolve_scenario(ref: str) -> Scenario:
    """A scenario from a file path or a packaged name."""
    if Path(ref).is_file():
        return load_scenario(ref)
    return load_packaged_scenario(ref)


# --------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class ModeSummary:
    """Row of a report: one mode reduced to its table quantities."""

    classification: str
    real: float
    imag: float
    damping: float
    frequency_hz: float
    ccbg_pi: float


@dataclass(frozen=True)
class PowerFlowSummary:
    iterations: int
    max_mismatch: float
    slack_bus: int
    slack_p_mw: float
    total_load_mw: float
    n_bus: int


@dataclass(frozen=True)
class Report:
    """Modal table for one scenario plus the operating-point summary."""

    scenario_name: str
    base_case: str
    dominant: tuple[ModeSummary, ...]   # one per class, sorted by class name
    modes: tuple[ModeSummary, ...]      # least-damped first
    power_flow: PowerFlowSummary
    n_states: int
    scenario_sha256: str
    version: str


@dataclass(frozen=True)
class SweepCell:
    kp: float
    kin: float
    dominant: tuple[ModeSummary, ...]
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    scenario_name: str
    kp_values: tuple[float, ...]
    kin_values: tuple[float, ...]
    cells: tuple[SweepCell, ...]        # K_in outer, K_p fastest
    scenario_sha256: str
    version: str


def _summarize(mode: Mode) -> ModeSummary:
    return ModeSummary(
        classification=mode.classification,
        real=float(mode.eigenvalue.real),
        imag=float(abs(mode.eigenvalue.imag)),
        damping=float(mode.damping),
        frequency_hz=float(mode.frequency_hz),
        ccbg_pi=float(mode.ccbg_pi),
    )


def _dominant_rows(modes: list[Mode]) -> tuple[ModeSummary, ...]:
    best = dominant_modes(modes)
    return tuple(_summarize(best[c]) for c in sorted(best))


def build_scenario_system(scenario: Scenario):
    """Network and devices for a scenario, overrides applied."""
    net, devices = build_two_area(
        scenario.base_case, droop=scenario.droop,
        wind_mva=scenario.wind_mva, control_mode=scenario.control_mode,
        k_pss=scenario.k_pss)
    for ov in scenario.overrides:
        hits = [i for i, d in enumerate(devices) if d.device_id == ov.device]
        if not hits:
            known = ", ".join(d.device_id for d in devices)
            raise ScenarioError(f"override device {ov.device!r} not in "
                                f"scenario (devices: {known})")
        i = hits[0]
        dev = devices[i]
        if not hasattr(dev.params, ov.field):
            raise ScenarioError(f"override field {ov.field!r} is not a "
                                f"parameter of {ov.device}")
        params = dataclasses.replace(dev.params, **{ov.field: ov.value})
        devices[i] = type(dev)(dev.device_id, dev.bus_id, params)
    return net, devices


def _stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, str(exc)) from exc


def run_scenario(scenario: Scenario) -> Report:
    """Power flow, assembly, linearization and modal workup in one pass."""
    net, devices = _stage("build", build_scenario_system, scenario)
    pf = _stage("powerflow", solve_power_flow, net, tol=POWER_FLOW_TOL)
    system = _stage("assemble", assemble, net, devices, pf)
    a = _stage("linearize", linearize, system)
    modes = _stage("modal", analyze_modes, a)

    slack = next(b.id for b in net.buses if b.kind == "slack")
    pos = pf.bus_ids.index(slack)
    pf_summary = PowerFlowSummary(
        iterations=pf.iterations,
        max_mismatch=float(pf.mismatch),
        slack_bus=slack,
        slack_p_mw=float(pf.p_gen[pos] * net.base_mva),
        total_load_mw=float(sum(pf.p_load) * net.base_mva),
        n_bus=net.n_bus,
    )
    return Report(
        scenario_name=scenario.name or scenario.base_case,
        base_case=scenario.base_case,
        dominant=_dominant_rows(modes),
        modes=tuple(_summarize(m) for m in modes),
        power_flow=pf_summary,
        n_states=system.n_states,
        scenario_sha256=scenario.sha256,
        version=__version__,
    )


def simulate_scenario(scenario: Scenario, t_end: float = 25.0,
                      dt_max: float = 1e-3) -> Trace:
    """Time-domain run of the scenario's event script."""
    net, devices = _stage("build", build_scenario_system, scenario)
    pf = _stage("powerflow", solve_power_flow, net, tol=POWER_FLOW_TOL)
    system = _stage("assemble", assemble, net, devices, pf)
    return _stage("simulate", simulate, system, events=list(scenario.events),
                  t_end=t_end, dt_max=dt_max)


def _with_gains(scenario: Scenario, kp: float, kin: float) -> Scenario:
    droop = DroopParams(kp=kp, kin=kin,
                        rocof_filter_time=scenario.droop.rocof_filter_time,
                        enabled=True)
    return dataclasses.replace(scenario, frequency_support=True, droop=droop,
                               sha256="")


def run_sensitivity_sweep(scenario: Scenario, kp_values=None, kin_values=None,
                          threads: int = 1) -> SweepResult:
    """Dominant modes over a droop-gain grid.

    Every (K_in, K_p) cell re-runs the whole pipeline with support enabled
    at those gains.  A failing cell records its error and the sweep
    continues.  ``threads`` > 1 runs cells concurrently.
    """
    if scenario.base_case == "A":
        raise PipelineError("build", "sweep needs a wind farm; case A has "
                            "none")
    kp_values = tuple(DEFAULT_GAIN_GRID if kp_values is None else kp_values)
    kin_values = tuple(DEFAULT_GAIN_GRID if kin_values is None else kin_values)

    grid = [(kp, kin) for kin in kin_values for kp in kp_values]

    def cell(args):
        kp, kin = args
        try:
            report = run_scenario(_with_gains(scenario, kp, kin))
            return SweepCell(kp=kp, kin=kin, dominant=report.dominant)
        except Exception as exc:
            return SweepCell(kp=kp, kin=kin, dominant=(), error=str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = tuple(pool.map(cell, grid))
    else:
        cells = tuple(cell(g) for g in grid)
    return SweepResult(
        scenario_name=scenario.name or scenario.base_case,
        kp_values=kp_values, kin_values=kin_values, cells=cells,
        scenario_sha256=scenario.sha256, version=__version__,
    )


@dataclass(frozen=True)
class ControlModeComparison:
    """Same study under both reactive-channel modes, with damping deltas."""

    voltage: Report
    reactive_power: Report
    damping_delta: tuple[tuple[str, float], ...]
    flagged: tuple[str, ...]            # classes where |delta| > threshold


def compare_control_modes(scenario: Scenario) -> ControlModeComparison:
    """Run a scenario under voltage and reactive-power control and diff
    the dominant damping ratios, flagging classes that moved by more than
    CONTROL_MODE_FLAG_THRESHOLD."""
    if scenario.base_case == "A":
        raise PipelineError("build", "case A has no converter control mode "
                            "to compare")
    rv = run_scenario(dataclasses.replace(scenario, control_mode="voltage",
                                          sha256=""))
    rq = run_scenario(dataclasses.replace(scenario,
                                          control_mode="reactive_power",
                                          sha256=""))
    zv = {m.classification: m.damping for m in rv.dominant}
    zq = {m.classification: m.damping for m in rq.dominant}
    deltas = tuple((c, zv[c] - zq[c]) for c in sorted(zv) if c in zq)
    flagged = tuple(c for c, d in deltas
                    if abs(d) > CONTROL_MODE_FLAG_THRESHOLD)
    return ControlModeComparison(voltage=rv, reactive_power=rq,
                                 damping_delta=deltas, flagged=flagged)


# --------------------------------------------------------------------------
# export / parse


def report_to_text(report: Report) -> str:
    """Structured-text form: JSON that parse_report restores exactly."""
    return json.dumps(dataclasses.asdict(report), sort_keys=True, indent=2) \
        + "\n"


def parse_report(text: str) -> Report:
    obj = json.loads(text)
    return Report(
        scenario_name=obj["scenario_name"],
        base_case=obj["base_case"],
        dominant=tuple(ModeSummary(**m) for m in obj["dominant"]),
        modes=tuple(ModeSummary(**m) for m in obj["modes"]),
        power_flow=PowerFlowSummary(**obj["power_flow"]),
        n_states=obj["n_states"],
        scenario_sha256=obj["scenario_sha256"],
        version=obj["version"],
    )


def report_to_csv(report: Report) -> str:
    """Mode table as CSV.

    Columns: classification, re, im, damping, frequency_hz, ccbg_pi,
    dominant (1 when the row is its class's dominant mode).
    """
    dominant = set(report.dominant)
    lines = ["classification,re,im,damping,frequency_hz,ccbg_pi,dominant"]
    for m in report.modes:
        lines.append(
            f"{m.classification},{m.real!r},{m.imag!r},{m.damping!r},"
            f"{m.frequency_hz!r},{m.ccbg_pi!r},{int(m in dominant)}")
    return "\n".join(lines) + "\n"


def sweep_to_text(sweep: SweepResult) -> str:
    """Structured-text form: JSON that parse_sweep restores exactly."""
    return json.dumps(dataclasses.asdict(sweep), sort_keys=True, indent=2) \
        + "\n"


def parse_sweep(text: str) -> SweepResult:
    obj = json.loads(text)
    cells = tuple(
        SweepCell(kp=c["kp"], kin=c["kin"],
                  dominant=tuple(ModeSummary(**m) for m in c["dominant"]),
                  error=c["error"])
        for c in obj["cells"])
    return SweepResult(
        scenario_name=obj["scenario_name"],
        kp_values=tuple(obj["kp_values"]),
        kin_values=tuple(obj["kin_values"]),
        cells=cells,
        scenario_sha256=obj["scenario_sha256"],
        version=obj["version"],
    )


def sweep_to_csv(sweep: SweepResult) -> str:
    """One row per grid cell.

    Columns: kp, kin, then re/im/damping/frequency_hz/ccbg_pi for the
    dominant mode of each class (inter_area, local, converter_control,
    other; blank when the class is absent), then an error column.
    """
    header = ["kp", "kin"]
    for cls in _MODE_CLASSES:
        header += [f"{cls}_{q}" for q in
                   ("re", "im", "damping", "frequency_hz", "ccbg_pi")]
    header.append("error")
    lines = [",".join(header)]
    for cell in sweep.cells:
        by_class = {m.classification: m for m in cell.dominant}
        row = [repr(cell.kp), repr(cell.kin)]
        for cls in _MODE_CLASSES:
            m = by_class.get(cls)
            if m is None:
                row += [""] * 5
            else:
                row += [repr(m.real), repr(m.imag), repr(m.damping),
                        repr(m.frequency_hz), repr(m.ccbg_pi)]
        row.append(cell.error.replace(",", ";"))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def export_report(obj, fmt: str, out_dir, stem: str | None = None
                  ) -> list[Path]:
    """Write a report or sweep to disk; returns the paths written.

    ``fmt`` is "csv" or "structured_text"; identical inputs produce
    identical bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, Report):
        stem = stem or f"report_{obj.scenario_name}"
        renders = {"csv": report_to_csv, "structured_text": report_to_text}
        ext = {"csv": ".csv", "structured_text": ".json"}
    elif isinstance(obj, SweepResult):
        stem = stem or f"sweep_{obj.scenario_name}"
        renders = {"csv": sweep_to_csv, "structured_text": sweep_to_text}
        ext = {"csv": ".csv", "structured_text": ".json"}
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")
    if fmt not in renders:
        raise ValueError(f"format must be csv or structured_text, got "
                         f"{fmt!r}")
    path = out_dir / f"{stem}{ext[fmt]}"
    path.write_text(renders[fmt](obj))
    return [path]

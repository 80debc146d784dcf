"""Config parsing, command surface, and trace/report export.

Config files are sectioned key=value text with '#' comments:

    [params] [controller] [compensator] [reference] [load] [vdc]
    [events] [engine]

Unknown keys and duplicate keys are rejected with their line number.
Events are numbered keys ``e0 = <time> <kind> <args...>`` so several can
share one instant.  Every run echoes its fully-resolved configuration to
``effective_config.cfg`` so results are reproducible from the output
directory alone.
"""

from __future__ import annotations

import argparse
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .compensator import BandPassConfig
from .controller import ControllerConfig
from .engine import Event, Scenario, Trace, run
from .errors import AbortedRun, ConfigError, InvalidWindow, NotReached
from .model import InverterParams, LoadEntry, LoadProgram, ReferenceProgram
from .region import max_required_acceleration, min_vdc, min_vdc_discrete, paper_margin_vdc

SECTIONS = ("params", "controller", "compensator", "reference", "load",
            "vdc", "events", "engine")

_KEYS = {
    "params": ("l_f", "c_f", "v_dc_nominal", "f_n", "v_n_rms"),
    "controller": ("lambda", "eta", "f_bound", "h", "t_di", "mode"),
    "compensator": ("omega0", "zeta", "sat_limit", "bpf_input"),
    "reference": ("amplitude", "frequency", "phase"),
    "load": ("kind", "r", "s_active", "s_reactive"),
    "vdc": ("v0",),
    "engine": ("duration", "substeps_per_tick", "decimation", "settle_time",
               "max_steps"),
}

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORTED = 2


def _parse_sections(text: str):
    """Split config text into {section: {key: (value, line)}}."""
    sections = {}
    current = None
    seen_keys = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            current = sections.setdefault(name, {})
            seen_keys = {}
            continue
        if current is None:
            raise ConfigError("content before any [section] header", lineno)
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen_keys:
            raise ConfigError(
                f"duplicate key {key!r} (first defined at line {seen_keys[key]})",
                lineno)
        seen_keys[key] = lineno
        current[key] = (value, lineno)
    return sections


def _float(section, key, default=None):
    if key not in section:
        return default
    value, lineno = section[key]
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key!r} is not a number: {value!r}", lineno)


def _int(section, key, default=None):
    v = _float(section, key, default)
    if v is None:
        return None
    return int(v)


def _str(section, key, default=None):
    if key not in section:
        return default
    return section[key][0]


def _check_keys(name, section):
    allowed = _KEYS[name]
    for key, (_, lineno) in section.items():
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in [{name}] "
                f"(allowed: {', '.join(allowed)})", lineno)


def _parse_event_line(key, value, lineno, params: InverterParams):
    parts = value.split()
    if len(parts) < 2:
        raise ConfigError(f"event {key!r} needs <time> <kind> [args]", lineno)
    try:
        t = float(parts[0])
    except ValueError:
        raise ConfigError(f"event time is not a number: {parts[0]!r}", lineno)
    kind = parts[1]
    args = parts[2:]
    try:
        if kind in ("vdc_set", "ref_scale", "ref_phase"):
            if len(args) != 1:
                raise ConfigError(f"{kind} takes one numeric argument", lineno)
            return Event(t, kind, float(args[0]))
        if kind == "mode_set":
            if len(args) != 1:
                raise ConfigError("mode_set takes one mode name", lineno)
            return Event(t, kind, args[0])
        if kind == "load_set":
            if not args:
                raise ConfigError("load_set needs a load kind", lineno)
            lk = args[0]
            if lk == "none":
                return Event(t, kind, LoadEntry())
            if lk == "resistive":
                return Event(t, kind, LoadEntry(kind="resistive", r=float(args[1])))
            if lk == "phasor_sink":
                return Event(t, kind, LoadEntry(kind="phasor_sink",
                                                p_w=float(args[1]),
                                                q_var=float(args[2])))
            raise ConfigError(f"unknown load kind {lk!r}", lineno)
    except (ValueError, IndexError):
        raise ConfigError(f"bad arguments for {kind}: {' '.join(args)!r}", lineno)
    raise ConfigError(f"unknown event kind {kind!r}", lineno)


def parse_config(source) -> Scenario:
    """Build a validated Scenario from config text, a path, or a preset name."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        path = Path(source)
        if not path.exists():
            preset = preset_path(str(source))
            if preset is None:
                raise ConfigError(f"config file not found: {source}")
            path = preset
        text = path.read_text()
    else:
        text = source
    raw = _parse_sections(text)
    for name, section in raw.items():
        if name != "events":
            _check_keys(name, section)

    p = raw.get("params", {})
    params = _wrap(lambda: InverterParams(
        l_f=_float(p, "l_f", 0.3e-3),
        c_f=_float(p, "c_f", 330e-6),
        v_dc_nominal=_float(p, "v_dc_nominal", 290.0),
        f_n=_float(p, "f_n", 50.0),
        v_n_rms=_float(p, "v_n_rms", 110.0)), p)

    c = raw.get("controller", {})
    controller = _wrap(lambda: ControllerConfig(
        lambda_=_float(c, "lambda", 4480.0),
        eta=_float(c, "eta", 1.0e7),
        f_bound=_float(c, "f_bound", 0.0),
        h=_float(c, "h", 20000.0),
        t_di=_float(c, "t_di", 10e-6),
        mode=_str(c, "mode", "smc")), c)

    k = raw.get("compensator", {})
    bandpass = _wrap(lambda: BandPassConfig(
        omega0=_float(k, "omega0", 2.0 * math.pi * params.f_n),
        zeta=_float(k, "zeta", 2.0),
        sample_time=controller.t_di), k)
    sat_limit = _float(k, "sat_limit", 4.0 * controller.h)
    bpf_input = _str(k, "bpf_input", "s_used")

    r = raw.get("reference", {})
    reference = _wrap(lambda: ReferenceProgram(
        amplitude=_float(r, "amplitude", params.v_n_peak),
        frequency=_float(r, "frequency", params.f_n),
        phase=_float(r, "phase", 0.0)), r)

    ld = raw.get("load", {})
    kind = _str(ld, "kind", "none")
    base = _wrap(lambda: LoadEntry(
        kind=kind,
        r=_float(ld, "r", 0.0),
        p_w=_float(ld, "s_active", 0.0),
        q_var=_float(ld, "s_reactive", 0.0)), ld)
    load = LoadProgram(base=base, v_n_rms=params.v_n_rms,
                       omega_n=params.omega_n, phase0=reference.phase)

    v = raw.get("vdc", {})
    vdc0 = _float(v, "v0", params.v_dc_nominal)

    e = raw.get("engine", {})
    duration = _float(e, "duration", 0.4)

    events = []
    for key, (value, lineno) in raw.get("events", {}).items():
        if not (key.startswith("e") and key[1:].isdigit()):
            raise ConfigError(
                f"event keys must look like e0, e1, ... got {key!r}", lineno)
        event = _parse_event_line(key, value, lineno, params)
        if event.time > duration:
            raise ConfigError(
                f"event {key} at t={event.time!r} lies outside "
                f"[0, duration={duration!r}]", lineno)
        events.append(event)
    events.sort(key=lambda e: e.time)
    scenario = _wrap(lambda: Scenario(
        params=params, controller=controller, bandpass=bandpass,
        sat_limit=sat_limit, bpf_input=bpf_input, reference=reference,
        load=load, vdc0=vdc0, events=tuple(events),
        duration=duration,
        substeps_per_tick=_int(e, "substeps_per_tick", 10),
        decimation=_int(e, "decimation", 1),
        settle_time=_float(e, "settle_time", 0.02),
        max_steps=_float(e, "max_steps", 5e7)), e)
    return scenario


def _wrap(builder, section):
    """Re-raise validation errors with the section's first line number."""
    try:
        return builder()
    except ConfigError as exc:
        if exc.line is None and section:
            first = min(line for _, line in section.values())
            raise ConfigError(str(exc), first) from None
        raise


def dump_effective(scenario: Scenario) -> str:
    """Serialize a Scenario back to config text (full float precision)."""
    sc = scenario
    lines = ["# effective configuration (all defaults resolved)"]
    lines += ["[params]"]
    for key, val in (("l_f", sc.params.l_f), ("c_f", sc.params.c_f),
                     ("v_dc_nominal", sc.params.v_dc_nominal),
                     ("f_n", sc.params.f_n), ("v_n_rms", sc.params.v_n_rms)):
        lines.append(f"{key} = {val!r}")
    lines += ["", "[controller]"]
    for key, val in (("lambda", sc.controller.lambda_), ("eta", sc.controller.eta),
                     ("f_bound", sc.controller.f_bound), ("h", sc.controller.h),
                     ("t_di", sc.controller.t_di)):
        lines.append(f"{key} = {val!r}")
    lines.append(f"mode = {sc.controller.mode}")
    lines += ["", "[compensator]"]
    lines.append(f"omega0 = {sc.bandpass.omega0!r}")
    lines.append(f"zeta = {sc.bandpass.zeta!r}")
    lines.append(f"sat_limit = {sc.sat_limit!r}")
    lines.append(f"bpf_input = {sc.bpf_input}")
    lines += ["", "[reference]"]
    lines.append(f"amplitude = {sc.reference.amplitude!r}")
    lines.append(f"frequency = {sc.reference.frequency!r}")
    lines.append(f"phase = {sc.reference.phase!r}")
    lines += ["", "[load]"]
    lines.append(f"kind = {sc.load.base.kind}")
    lines.append(f"r = {sc.load.base.r!r}")
    lines.append(f"s_active = {sc.load.base.p_w!r}")
    lines.append(f"s_reactive = {sc.load.base.q_var!r}")
    lines += ["", "[vdc]"]
    lines.append(f"v0 = {sc.vdc0!r}")
    lines += ["", "[events]"]
    for i, ev in enumerate(sc.events):
        if ev.kind == "load_set":
            entry = ev.value
            if entry.kind == "none":
                args = "none"
            elif entry.kind == "resistive":
                args = f"resistive {entry.r!r}"
            else:
                args = f"phasor_sink {entry.p_w!r} {entry.q_var!r}"
        elif ev.kind == "mode_set":
            args = str(ev.value)
        else:
            args = repr(float(ev.value))
        lines.append(f"e{i} = {ev.time!r} {ev.kind} {args}")
    lines += ["", "[engine]"]
    lines.append(f"duration = {sc.duration!r}")
    lines.append(f"substeps_per_tick = {sc.substeps_per_tick}")
    lines.append(f"decimation = {sc.decimation}")
    lines.append(f"settle_time = {sc.settle_time!r}")
    lines.append(f"max_steps = {sc.max_steps!r}")
    return "\n".join(lines) + "\n"


def preset_path(name: str):
    """Path of a bundled preset config, or None."""
    if not name.replace("_", "").isalnum():
        return None
    candidate = resources.files("ssmclab") / "figures" / f"{name}.cfg"
    return Path(str(candidate)) if candidate.is_file() else None


def preset_names():
    root = resources.files("ssmclab") / "figures"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


# ---------------------------------------------------------------------------
# Metrics


def _steady_windows(scenario: Scenario):
    """Integer-period analysis windows between events, after settling."""
    bounds = sorted({0.0, scenario.duration} |
                    {ev.time for ev in scenario.events})
    period = 1.0 / scenario.params.f_n
    windows = []
    for t0, t1 in zip(bounds, bounds[1:]):
        start = t0 + scenario.settle_time
        n_per = math.floor((t1 - start) / period + 1e-9)
        if n_per >= 1:
            windows.append((t0, analysis.MetricWindow(start, start + n_per * period)))
    return windows


def standard_metrics(trace: Trace):
    """Rows of (name, window_start, window_end, value, unit).

    Windows are labeled by ordinal (@w0, @w1, ...) so sweep summaries
    line up column-wise; the vdc_level row maps each window back to the
    dc-link level it ran at.
    """
    sc = trace.scenario
    rows = []
    for k, (t_event, w) in enumerate(_steady_windows(sc)):
        sl = trace.window_slice(w.t_start, w.t_end)
        if sl.stop <= sl.start:
            continue
        label = f"@w{k}"
        rows.append((f"vdc_level{label}", w.t_start, w.t_end,
                     float(trace.col("v_dc")[sl][0]), "V"))
        rows.append((f"error_envelope{label}", w.t_start, w.t_end,
                     analysis.error_envelope(trace, w), "V"))
        err = trace.col("u_o")[sl] - trace.col("x_d")[sl]
        rows.append((f"fundamental_error{label}", w.t_start, w.t_end,
                     analysis.fundamental_component(err, sc.params.f_n,
                                                    trace.sample_rate), "V"))
        rows.append((f"asymmetry_index{label}", w.t_start, w.t_end,
                     analysis.asymmetry_index(trace, w), "-"))
        ok = trace.col("region_ok")[sl]
        rows.append((f"region_ok_fraction{label}", w.t_start, w.t_end,
                     float(np.mean(ok)), "-"))
        rows.append((f"max_abs_s_used{label}", w.t_start, w.t_end,
                     float(np.max(np.abs(trace.col("s_used")[sl]))), "V/s"))
    for ev in sorted(scenario_events_unique(sc)):
        try:
            h_eff = analysis.chatter_band(trace)
            rt = analysis.reaching_time(trace, ev, h_eff)
        except (NotReached, InvalidWindow):
            rt = float("nan")
        rows.append((f"reaching_time@{ev:g}s", ev, trace.col("time")[-1], rt, "s"))
    return rows


def scenario_events_unique(scenario: Scenario):
    return sorted({ev.time for ev in scenario.events})


def write_metrics_csv(path, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write("name,window_start,window_end,value,unit\n")
        for name, t0, t1, value, unit in rows:
            fh.write(f"{name},{float(t0)!r},{float(t1)!r},{float(value)!r},{unit}\n")


# ---------------------------------------------------------------------------
# Commands


def cmd_run(config, out_dir, quiet=False, backend=None) -> int:
    out = Path(out_dir)
    try:
        scenario = parse_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    (out / "effective_config.cfg").write_text(dump_effective(scenario))
    status = EXIT_OK
    try:
        trace = run(scenario, backend=backend)
    except AbortedRun as exc:
        trace = exc.trace
        status = EXIT_ABORTED
        if not quiet:
            print(f"run aborted: {exc}", file=sys.stderr)
    trace.to_csv(out / "trace.csv", decimation=scenario.decimation)
    try:
        write_metrics_csv(out / "metrics.csv", standard_metrics(trace))
    except (InvalidWindow, ValueError):
        write_metrics_csv(out / "metrics.csv", [])
    if not quiet:
        print(f"{len(trace)} records -> {out / 'trace.csv'}")
    return status


def cmd_sweep(config, axis, values, out_dir, quiet=False, backend=None) -> int:
    out = Path(out_dir)
    try:
        scenario = parse_config(config)  # validate the base config up front
        base_text = dump_effective(scenario)
        axis_section, _, axis_key = axis.partition(".")
        if axis_section not in SECTIONS or not axis_key:
            raise ConfigError(f"axis must be <section>.<key>, got {axis!r}")
        if axis_key not in _KEYS.get(axis_section, ()):
            raise ConfigError(f"unknown sweep key {axis!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    worst = EXIT_OK
    for value in values:
        cell = out / f"{axis_key}={value:g}"
        text = _override_key(base_text, axis_section, axis_key, value)
        status = cmd_run(text, cell, quiet=True, backend=backend)
        worst = max(worst, status)
        row = {"value": value, "exit_status": status}
        metrics_file = cell / "metrics.csv"
        if metrics_file.exists():
            for line in metrics_file.read_text().splitlines()[1:]:
                name, _, _, val, _ = line.split(",")
                row[name] = float(val)
        summary_rows.append(row)
        if not quiet:
            print(f"{axis}={value:g}: exit {status}")
    keys = sorted({k for row in summary_rows for k in row} - {"value", "exit_status"})
    with open(out / "summary.csv", "w", newline="\n") as fh:
        fh.write(",".join([axis, "exit_status"] + keys) + "\n")
        for row in summary_rows:
            cells = [repr(float(row["value"])), str(row["exit_status"])]
            cells += [repr(row[k]) if k in row else "nan" for k in keys]
            fh.write(",".join(cells) + "\n")
    return worst


def _override_key(config_text, section, key, value):
    """Replace one key inside one section of serialized config text."""
    lines = config_text.splitlines()
    current = None
    replaced = False
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
        elif current == section and stripped.split("=", 1)[0].strip() == key:
            lines[i] = f"{key} = {value!r}"
            replaced = True
    if not replaced:
        raise ConfigError(f"key {key!r} not present in section [{section}]")
    return "\n".join(lines) + "\n"


def cmd_min_vdc(config, quiet=False) -> int:
    try:
        sc = parse_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    lhs_max = max_required_acceleration(sc.params, sc.reference, sc.load)
    static = min_vdc(sc.params, sc.reference, sc.load,
                     sc.controller.f_bound, sc.controller.eta)
    discrete = min_vdc_discrete(sc.params, sc.reference, sc.load, sc.controller)
    recipe = paper_margin_vdc(sc.params)
    print(f"peak required acceleration : {lhs_max:.6e} V/s^2")
    print(f"static dc-link floor       : {static:.3f} V")
    print(f"discrete dc-link floor     : {discrete:.3f} V  "
          f"(includes 2*lambda*t_di chatter allowance)")
    print(f"headroom recipe (Vn+20)*sqrt2 : {recipe:.3f} V")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ssmclab",
        description="Sliding-mode grid-forming inverter simulation lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--config", required=True,
                       help="config file path or bundled preset name")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--quiet", action="store_true")
    p_run.add_argument("--backend", choices=("numba", "python"), default=None)

    p_sweep = sub.add_parser("sweep", help="run one scenario per axis value")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--axis", required=True,
                         help="swept key as <section>.<key>, e.g. vdc.v0")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated numeric values")
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.add_argument("--backend", choices=("numba", "python"), default=None)

    p_min = sub.add_parser("min-vdc", help="print the precision-region floor")
    p_min.add_argument("--config", required=True)
    p_min.add_argument("--quiet", action="store_true")

    sub.add_parser("version", help="print the package version")

    args = parser.parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "run":
        return cmd_run(args.config, args.out, quiet=args.quiet,
                       backend=args.backend)
    if args.command == "sweep":
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            print(f"bad --values list: {args.values!r}", file=sys.stderr)
            return EXIT_CONFIG
        if not values:
            print("empty --values list", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_sweep(args.config, args.axis, values, args.out,
                         quiet=args.quiet, backend=args.backend)
    if args.command == "min-vdc":
        return cmd_min_vdc(args.config, quiet=args.quiet)
    return EXIT_CONFIG  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())

"""Run configuration: flat key-value config files with [model], [protocol],
[run] and [sweep] sections, parsed into a validated RunConfig."""

from __future__ import annotations

import configparser
import difflib
import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ParseError, ValidationError
from .models import REGISTRY, get_model

SCENARIOS = ("on_patch_start", "offset_start")
DISTANCE_MODES = ("raw", "phase_aligned")

_MODEL_KEYS = ("name", "omega0", "k_l", "cos_xi", "x", "z")
_PROTOCOL_KEYS = ("scan", "start", "end", "duration", "velocity")
_RUN_KEYS = ("dt", "sample_interval", "scenario", "c0", "distance_mode",
             "out_dir", "seed")
_SWEEP_KEYS = ("velocities", "workers")
_SECTIONS = {
    "model": _MODEL_KEYS,
    "protocol": _PROTOCOL_KEYS,
    "run": _RUN_KEYS,
    "sweep": _SWEEP_KEYS,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated configuration of one scenario run or sweep."""

    model_name: str = "tripod"
    model_params: dict = field(default_factory=dict)
    scan: str = "z"
    start: float = 0.0
    end: float = 40.0
    velocity: float = 1e-3
    dt: float = 0.01
    sample_interval: float = 1.0
    scenario: str = "on_patch_start"
    c0: tuple = (0j, 1 + 0j)
    distance_mode: str = "raw"
    out_dir: str = "runs"
    seed: int = 0
    velocities: Optional[tuple] = None
    workers: int = 0

    @property
    def duration(self) -> float:
        return (self.end - self.start) / self.velocity

    def with_velocity(self, velocity: float) -> "RunConfig":
        return replace(self, velocity=velocity)


def _key_line(text: str, key: str) -> Optional[int]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(key) and stripped[len(key):].lstrip()[:1] in ("=", ":"):
            return lineno
    return None


def _section_line(text: str, section: str) -> Optional[int]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip().startswith(f"[{section}]"):
            return lineno
    return None


def _suggest(word: str, candidates) -> str:
    close = difflib.get_close_matches(word, candidates, n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _convert(section: str, key: str, raw: str):
    try:
        if key in ("name", "scan", "scenario", "distance_mode", "out_dir"):
            return raw.strip()
        if key in ("seed", "workers"):
            return int(raw)
        if key == "c0":
            return tuple(complex(part.strip().replace(" ", "")) for part in raw.split(","))
        if key == "velocities":
            return tuple(float(part) for part in raw.split(","))
        return float(raw)
    except ValueError as exc:
        raise ValidationError(f"[{section}] {key}: cannot parse {raw!r} ({exc})") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; unknown keys and sections are rejected
    with a suggestion when a close match exists."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_file(io.StringIO(text))
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if getattr(exc, "errors", None) else None
        raise ParseError(str(exc).replace("\n", " "), line) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(exc.message, exc.lineno) from None
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None

    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ParseError(
                f"unknown section [{section}]{_suggest(section, _SECTIONS)}",
                _section_line(text, section))
        known = _SECTIONS[section]
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ParseError(
                    f"unknown key {key!r} in [{section}]{_suggest(key, known)}",
                    _key_line(text, key))
            values[section][key] = _convert(section, key, raw)
    return validate_config(values)


def validate_config(values: dict) -> RunConfig:
    """Apply defaults and cross-field validation to parsed section values."""
    model = dict(values.get("model", {}))
    protocol = dict(values.get("protocol", {}))
    run = dict(values.get("run", {}))
    sweep = dict(values.get("sweep", {}))

    name = model.pop("name", "tripod")
    if name not in REGISTRY:
        raise ValidationError(
            f"[model] name: unknown model {name!r}{_suggest(name, REGISTRY)}")
    spec = get_model(name)
    params = dict(spec.param_defaults)
    params.update(model)

    scan = protocol.get("scan", "z")
    if scan not in spec.scan_coordinates:
        raise ValidationError(
            f"[protocol] scan: {scan!r} is not a scan coordinate of {name} "
            f"(choose from {spec.scan_coordinates})")
    velocity = protocol.get("velocity", 1e-3)
    if velocity == 0:
        raise ValidationError("[protocol] velocity: must be nonzero")
    start = protocol.get("start", 0.0)
    if "end" in protocol and "duration" in protocol:
        raise ValidationError("[protocol] give either end or duration, not both")
    if "duration" in protocol:
        if protocol["duration"] <= 0:
            raise ValidationError("[protocol] duration: must be positive")
        end = start + velocity * protocol["duration"]
    else:
        end = protocol.get("end", 40.0)
    if (end - start) * velocity <= 0:
        raise ValidationError(
            f"[protocol] velocity {velocity} cannot reach end {end} from start {start}")

    dt = run.get("dt", 0.01)
    omega0 = params.get("omega0", 1.0)
    if dt <= 0 or dt * omega0 > 0.05:
        raise ValidationError(
            f"[run] dt: dt*omega0 = {dt * omega0:.3f} violates the bound 0.05")
    sample_interval = run.get("sample_interval", 1.0)
    stride = sample_interval / dt
    if sample_interval <= 0 or abs(stride - round(stride)) > 1e-9:
        raise ValidationError(
            "[run] sample_interval: must be a positive integer multiple of dt")
    scenario = run.get("scenario", "on_patch_start")
    if scenario not in SCENARIOS:
        raise ValidationError(
            f"[run] scenario: {scenario!r} not in {SCENARIOS}{_suggest(scenario, SCENARIOS)}")
    distance_mode = run.get("distance_mode", "raw")
    if distance_mode not in DISTANCE_MODES:
        raise ValidationError(
            f"[run] distance_mode: {distance_mode!r} not in {DISTANCE_MODES}")
    c0 = run.get("c0", (0j,) * (spec.degeneracy - 1) + (1 + 0j,))
    if len(c0) != spec.degeneracy:
        raise ValidationError(
            f"[run] c0: {name} has a {spec.degeneracy}-fold degenerate level, "
            f"got {len(c0)} coefficients")
    if np.linalg.norm(np.asarray(c0)) < 1e-12:
        raise ValidationError("[run] c0: coefficient vector is zero")
    seed = run.get("seed", 0)
    if seed < 0:
        raise ValidationError("[run] seed: must be nonnegative")

    velocities = sweep.get("velocities")
    if velocities is not None:
        if len(velocities) < 3:
            raise ValidationError("[sweep] velocities: need at least 3 for a scaling fit")
        if any(v <= 0 for v in velocities):
            raise ValidationError("[sweep] velocities: must be positive")
    workers = sweep.get("workers", 0)
    if workers < 0:
        raise ValidationError("[sweep] workers: must be nonnegative")

    return RunConfig(
        model_name=name,
        model_params=params,
        scan=scan,
        start=start,
        end=end,
        velocity=velocity,
        dt=dt,
        sample_interval=sample_interval,
        scenario=scenario,
        c0=tuple(complex(c) for c in c0),
        distance_mode=distance_mode,
        out_dir=run.get("out_dir", "runs"),
        seed=seed,
        velocities=velocities,
        workers=workers,
    )

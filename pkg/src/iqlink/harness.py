"""Experiment configuration, deterministic seeding and parallel sweeps.

An experiment is one parameter sweep over a :class:`ScenarioTemplate`.  For
every sweep point and trial a seed is derived from ``(master_seed,
sweep_index, trial_index)``; the trial draws one scenario with full TX+RX
imbalance and evaluates every requested (mode, receiver) pair on it, so all
curves of a figure share channels and imbalance draws.  Trial results land in
pre-allocated slots and are reduced in index order, which makes the table
independent of the thread count.

Config files are INI text with three sections::

    [experiment]
    name = fig4
    preset = basic            ; or "massive"
    metric = sinr             ; or "ser"
    receivers = lmmse, augmented_lmmse
    modes = none, tx, rx, txrx
    trials = 2000
    seed = 1

    [scenario]                ; overrides of the preset fields
    snr_db = 20

    [sweep]
    parameter = sir_db
    values = -40, -30, -20
"""

from __future__ import annotations

import configparser
import csv
import enum
import hashlib
import io
import json
import math
import os
import re
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import MAX_CONDITION, SerResult, ser_trial, summarise_sinr, trial_sinr
from .combiners import CombinerKind, SingularCovarianceError, compute_weights
from .core import ImbalanceMode, effective_channels
from .scenarios import ScenarioTemplate
from .signal import covariance

__all__ = [
    "Metric",
    "ConfigError",
    "ResultsIOError",
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "RESULT_COLUMNS",
    "RESULTS_JSON_SCHEMA",
    "THREADS_ENV",
    "derive_trial_seed",
    "parse_config",
    "format_config",
    "load_config",
    "load_preset",
    "preset_names",
    "run_sweep",
    "emit_results",
    "read_results",
]

THREADS_ENV = "IQLINK_THREADS"

_SIG_DIGITS = 6
_MAX_REDRAWS = 100


class Metric(enum.Enum):
    SINR = "sinr"
    SER = "ser"

    @property
    def column_label(self) -> str:
        return "sinr_db" if self is Metric.SINR else "ser"


DEFAULT_TRIALS = {Metric.SINR: 2000, Metric.SER: 20000}

PRESETS = {"basic": ScenarioTemplate, "massive": ScenarioTemplate.massive_mimo}


class ConfigError(ValueError):
    """Malformed experiment configuration.

    ``line`` (1-based) and ``field`` locate the problem when known.
    """

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.message = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class ResultsIOError(OSError):
    pass


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------


def derive_trial_seed(master_seed: int, sweep_index: int, trial_index: int) -> int:
    """64-bit trial seed, bit-exact on every platform.

    The three inputs are packed as little-endian unsigned 64-bit integers and
    hashed with BLAKE2b (8-byte digest, no key); the digest read as a
    little-endian integer is the seed.
    """
    for name, v in (("master_seed", master_seed), ("sweep_index", sweep_index), ("trial_index", trial_index)):
        if not 0 <= int(v) < 2**64:
            raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {v}")
    digest = hashlib.blake2b(
        struct.pack("<3Q", int(master_seed), int(sweep_index), int(trial_index)), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_INT_FIELDS = {"n_rx", "n_users", "n_users_cp", "n_tx", "n_streams", "n_interferers", "n_interferers_cp", "interferer_antennas"}
_OPTIONAL_FIELDS = {"n_interferers_cp", "sir_cp_db"}
_BOOL_FIELDS = {"irr_fixed", "mirror_aliasing"}
_FLOAT_FIELDS = {"snr_db", "sir_db", "sir_cp_db", "irr_min_db", "noise_power"}
SWEEPABLE = tuple(sorted(_INT_FIELDS | _FLOAT_FIELDS))

_MODE_ALIASES = {
    "none": ImbalanceMode.NONE,
    "ideal": ImbalanceMode.NONE,
    "tx": ImbalanceMode.TX_ONLY,
    "txonly": ImbalanceMode.TX_ONLY,
    "rx": ImbalanceMode.RX_ONLY,
    "rxonly": ImbalanceMode.RX_ONLY,
    "txrx": ImbalanceMode.TX_RX,
}
_KIND_ALIASES = {
    "lmmse": CombinerKind.LMMSE,
    "wiener": CombinerKind.LMMSE,
    "augmented_lmmse": CombinerKind.AUGMENTED_LMMSE,
    "augmentedlmmse": CombinerKind.AUGMENTED_LMMSE,
    "augmented": CombinerKind.AUGMENTED_LMMSE,
    "mrc": CombinerKind.MRC,
}


def _parse_mode(text):
    if isinstance(text, ImbalanceMode):
        return text
    key = str(text).strip().lower().replace("_", "").replace("+", "").replace("-", "")
    if key not in _MODE_ALIASES:
        raise ValueError(f"unknown imbalance mode '{text}' (use none, tx, rx, txrx)")
    return _MODE_ALIASES[key]


def _parse_kind(text):
    if isinstance(text, CombinerKind):
        return text
    key = str(text).strip().lower().replace("-", "_")
    if key not in _KIND_ALIASES:
        key = key.replace("_", "")
    if key not in _KIND_ALIASES:
        raise ValueError(f"unknown receiver '{text}' (use lmmse, augmented_lmmse, mrc)")
    return _KIND_ALIASES[key]


def _coerce_field(name: str, value):
    """Convert ``value`` (text or number) to the type of template field ``name``."""
    if isinstance(value, str):
        text = value.strip()
        if name in _OPTIONAL_FIELDS and text.lower() in ("", "none"):
            return None
        if name in _BOOL_FIELDS:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"expected a boolean, got '{text}'")
        if name == "mode":
            return _parse_mode(text)
        value = float(text)
    if value is None and name in _OPTIONAL_FIELDS:
        return None
    if name in _BOOL_FIELDS:
        return bool(value)
    if name in _INT_FIELDS:
        f = float(value)
        if not f.is_integer():
            raise ValueError(f"expected an integer, got {value}")
        return int(f)
    if name in _FLOAT_FIELDS:
        f = float(value)
        if not math.isfinite(f):
            raise ValueError(f"expected a finite number, got {value}")
        return f
    if name == "mode":
        return _parse_mode(value)
    raise ValueError(f"unknown scenario field '{name}'")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: template, swept field, receivers, modes, trial budget, seed.

    ``template.mode`` is ignored; each trial evaluates every entry of
    ``modes`` on a common full-imbalance draw.  With mirror aliasing a sweep
    of ``n_users`` also moves ``n_users_cp``.
    """

    sweep_param: str
    sweep_values: tuple
    template: ScenarioTemplate = field(default_factory=ScenarioTemplate)
    preset: str = "basic"
    receivers: tuple = (CombinerKind.LMMSE, CombinerKind.AUGMENTED_LMMSE)
    modes: tuple = tuple(ImbalanceMode)
    metric: Metric = Metric.SINR
    n_trials: Optional[int] = None
    master_seed: int = 0
    n_symbols: int = 100
    db_average: bool = False
    mrc_multistream: bool = False
    name: str = "experiment"

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "metric", Metric(self.metric))
        set_(self, "receivers", tuple(_parse_kind(k) for k in self.receivers))
        set_(self, "modes", tuple(_parse_mode(m) for m in self.modes))
        if self.n_trials is None:
            set_(self, "n_trials", DEFAULT_TRIALS[self.metric])
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset '{self.preset}' (use {', '.join(PRESETS)})", field="preset")
        if self.sweep_param not in SWEEPABLE:
            raise ConfigError(
                f"unknown sweep parameter '{self.sweep_param}' (choose from {', '.join(SWEEPABLE)})",
                field="parameter",
            )
        try:
            values = tuple(_coerce_field(self.sweep_param, v) for v in self.sweep_values)
        except ValueError as exc:
            raise ConfigError(str(exc), field="values") from None
        set_(self, "sweep_values", values)
        if not values:
            raise ConfigError("sweep needs at least one value", field="values")
        if not self.receivers:
            raise ConfigError("at least one receiver is required", field="receivers")
        if not self.modes:
            raise ConfigError("at least one imbalance mode is required", field="modes")
        if len(set(self.receivers)) != len(self.receivers) or len(set(self.modes)) != len(self.modes):
            raise ConfigError("receivers and modes must not repeat")
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.n_trials}", field="trials")
        if self.n_symbols < 1:
            raise ConfigError("symbols must be >= 1", field="symbols")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("seed must be a non-negative 64-bit integer", field="seed")
        # every sweep point must yield a valid template
        for v in values:
            try:
                t = self.template_at(v)
            except ValueError as exc:
                raise ConfigError(f"{self.sweep_param}={v}: {exc}", field="values") from None
            if CombinerKind.MRC in self.receivers and t.n_streams > 1 and not self.mrc_multistream:
                raise ConfigError(
                    "MRC with more than one stream per user maps the user-level matched filter "
                    "to streams through the precoder; set mrc_multistream = true to accept this",
                    field="receivers",
                )

    def template_at(self, value) -> ScenarioTemplate:
        """Template for one sweep point, forced to full TX+RX imbalance."""
        changes = {self.sweep_param: value, "mode": ImbalanceMode.TX_RX}
        if self.sweep_param == "n_users" and self.template.mirror_aliasing:
            changes["n_users_cp"] = value
        return replace(self.template, **changes)

    def with_overrides(self, n_trials: Optional[int] = None, master_seed: Optional[int] = None) -> "ExperimentConfig":
        changes = {}
        if n_trials is not None:
            changes["n_trials"] = n_trials
        if master_seed is not None:
            changes["master_seed"] = master_seed
        return replace(self, **changes)


def _line_map(text: str) -> dict:
    """``(section, key) -> line number`` for error reporting."""
    where = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            where[(section, None)] = i
            continue
        m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), i)
    return where


def _split_list(text: str) -> list:
    return [t for t in (p.strip() for p in re.split(r"[,\s]+", text)) if t]


_EXPERIMENT_KEYS = {
    "name", "preset", "metric", "receivers", "modes", "trials", "seed",
    "symbols", "db_average", "mrc_multistream",
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text into an :class:`ExperimentConfig`; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if getattr(exc, "errors", None) else None
        raise ConfigError("expected key = value", line=line) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key in [{exc.section}]", line=exc.lineno, field=exc.option) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    lines = _line_map(text)

    def err(msg, section, key=None):
        return ConfigError(msg, line=lines.get((section, key), lines.get((section, None))), field=key)

    unknown = set(cp.sections()) - {"experiment", "scenario", "sweep"}
    if unknown:
        name = sorted(unknown)[0]
        raise err(f"unknown section [{name}]", name.lower())
    for sec in ("experiment", "sweep"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing section [{sec}]")
    exp = cp["experiment"]
    for key in exp:
        if key not in _EXPERIMENT_KEYS:
            raise err(f"unknown key (expected one of {', '.join(sorted(_EXPERIMENT_KEYS))})", "experiment", key)

    kwargs = {}
    current = "preset"
    try:
        kwargs["name"] = exp.get("name", "experiment")
        kwargs["preset"] = exp.get("preset", "basic").strip().lower()
        if kwargs["preset"] not in PRESETS:
            raise ValueError(f"unknown preset '{kwargs['preset']}'")
        current = "metric"
        kwargs["metric"] = Metric(exp.get("metric", "sinr").strip().lower())
        current = "receivers"
        if "receivers" in exp:
            kwargs["receivers"] = tuple(_parse_kind(k) for k in _split_list(exp["receivers"]))
        current = "modes"
        if "modes" in exp:
            kwargs["modes"] = tuple(_parse_mode(m) for m in _split_list(exp["modes"]))
        for key, target, conv in (
            ("trials", "n_trials", int),
            ("seed", "master_seed", int),
            ("symbols", "n_symbols", int),
        ):
            current = key
            if key in exp:
                kwargs[target] = conv(exp[key])
        for key in ("db_average", "mrc_multistream"):
            current = key
            if key in exp:
                kwargs[key] = exp.getboolean(key)
    except ValueError as exc:
        raise err(str(exc), "experiment", current) from None

    base = PRESETS[kwargs["preset"]]()
    overrides = {}
    if cp.has_section("scenario"):
        names = set(ScenarioTemplate.field_names())
        for key, raw in cp["scenario"].items():
            if key not in names:
                raise err(f"unknown scenario field (known: {', '.join(sorted(names))})", "scenario", key)
            try:
                overrides[key] = _coerce_field(key, raw)
            except ValueError as exc:
                raise err(str(exc), "scenario", key) from None
    try:
        template = replace(base, **overrides)
    except ValueError as exc:
        raise err(str(exc), "scenario") from None

    sweep = cp["sweep"]
    for key in sweep:
        if key not in ("parameter", "values"):
            raise err("unknown key (expected parameter, values)", "sweep", key)
    if "parameter" not in sweep:
        raise err("missing key", "sweep", "parameter")
    if "values" not in sweep:
        raise err("missing key", "sweep", "values")
    param = sweep["parameter"].strip()
    if param not in SWEEPABLE:
        raise err(f"unknown sweep parameter '{param}' (choose from {', '.join(SWEEPABLE)})", "sweep", "parameter")
    try:
        values = tuple(_parse_range(v, param) for v in _split_list(sweep["values"]))
        values = tuple(x for group in values for x in group)
    except ValueError as exc:
        raise err(str(exc), "sweep", "values") from None

    try:
        return ExperimentConfig(sweep_param=param, sweep_values=values, template=template, **kwargs)
    except ConfigError as exc:
        section = "sweep" if exc.field in ("parameter", "values") else "experiment"
        raise err(exc.message, section, exc.field) from None


def _parse_range(token: str, param: str) -> tuple:
    """``a`` or ``a:b`` or ``a:b:step`` (inclusive) into a tuple of values."""
    if ":" not in token:
        return (_coerce_field(param, token),)
    parts = token.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad range '{token}' (use start:stop or start:stop:step)")
    start, stop = float(parts[0]), float(parts[1])
    step = float(parts[2]) if len(parts) == 3 else 1.0
    if step <= 0 or stop < start:
        raise ValueError(f"bad range '{token}'")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(_coerce_field(param, start + i * step) for i in range(count))


def _fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(config: ExperimentConfig) -> str:
    """Render ``config`` as INI text; ``parse_config`` inverts it exactly."""
    out = ["[experiment]"]
    out.append(f"name = {config.name}")
    out.append(f"preset = {config.preset}")
    out.append(f"metric = {config.metric.value}")
    out.append("receivers = " + ", ".join(k.value for k in config.receivers))
    out.append("modes = " + ", ".join(m.value for m in config.modes))
    out.append(f"trials = {config.n_trials}")
    out.append(f"seed = {config.master_seed}")
    out.append(f"symbols = {config.n_symbols}")
    out.append(f"db_average = {_fmt_value(config.db_average)}")
    out.append(f"mrc_multistream = {_fmt_value(config.mrc_multistream)}")
    out.append("")
    out.append("[scenario]")
    base = PRESETS[config.preset]()
    for name in ScenarioTemplate.field_names():
        v = getattr(config.template, name)
        if v != getattr(base, name):
            out.append(f"{name} = {_fmt_value(v)}")
    out.append("")
    out.append("[sweep]")
    out.append(f"parameter = {config.sweep_param}")
    out.append("values = " + ", ".join(_fmt_value(v) for v in config.sweep_values))
    return "\n".join(out) + "\n"


def load_config(path) -> ExperimentConfig:
    """Read a config file; a bare name like ``fig4`` resolves to a bundled preset."""
    p = Path(path)
    if not p.exists() and str(path) in preset_names():
        return load_preset(str(path))
    if not p.exists() and p.suffix == ".cfg" and p.stem in preset_names() and p.parent == Path("."):
        return load_preset(p.stem)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror or exc}") from None
    return parse_config(text)


def _preset_dir():
    from importlib import resources

    return resources.files("iqlink") / "presets"


def preset_names() -> list:
    return sorted(p.name[:-4] for p in _preset_dir().iterdir() if p.name.endswith(".cfg"))


def load_preset(name: str) -> ExperimentConfig:
    """Bundled figure configuration, e.g. ``load_preset("fig4")``."""
    name = name[:-4] if name.endswith(".cfg") else name
    res = _preset_dir() / f"{name}.cfg"
    if not res.is_file():
        raise ConfigError(f"no bundled preset '{name}' (have {', '.join(preset_names())})")
    return parse_config(res.read_text())


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

RESULT_COLUMNS = (
    "sweep_param", "sweep_value", "receiver", "mode", "metric",
    "mean", "stderr", "n_trials", "rejected", "elapsed",
)

RESULTS_JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "iqlink sweep results",
    "type": "object",
    "required": ["columns", "rows"],
    "properties": {
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": list(RESULT_COLUMNS),
                "additionalProperties": False,
                "properties": {
                    "sweep_param": {"type": "string"},
                    "sweep_value": {"type": "number"},
                    "receiver": {"enum": [k.value for k in CombinerKind]},
                    "mode": {"enum": [m.value for m in ImbalanceMode]},
                    "metric": {"enum": [m.column_label for m in Metric]},
                    "mean": {"type": ["number", "null"]},
                    "stderr": {"type": ["number", "null"]},
                    "n_trials": {"type": "integer", "minimum": 1},
                    "rejected": {"type": "integer", "minimum": 0},
                    "elapsed": {"type": "number", "minimum": 0},
                },
            },
        },
    },
}


def _sig(x: float) -> float:
    return float(f"{x:.{_SIG_DIGITS}g}")


@dataclass(frozen=True)
class ResultRow:
    """One (sweep value, receiver, mode) cell.

    ``mean``/``stderr`` are in dB for SINR and a plain fraction for SER.
    ``elapsed`` is the time spent on the cell's sweep point summed over
    trials; it is excluded from equality so reruns compare equal.
    """

    sweep_param: str
    sweep_value: float
    receiver: CombinerKind
    mode: ImbalanceMode
    metric: Metric
    mean: float
    stderr: float
    n_trials: int
    rejected: int = 0
    elapsed: float = field(default=0.0, compare=False)

    def rounded(self) -> "ResultRow":
        """Copy with floats cut to the significant digits used on output."""
        return replace(
            self,
            sweep_value=_sig(self.sweep_value),
            mean=_sig(self.mean),
            stderr=_sig(self.stderr),
            elapsed=_sig(self.elapsed),
        )

    def as_record(self) -> dict:
        return {
            "sweep_param": self.sweep_param,
            "sweep_value": self.sweep_value,
            "receiver": self.receiver.value,
            "mode": self.mode.value,
            "metric": self.metric.column_label,
            "mean": self.mean,
            "stderr": self.stderr,
            "n_trials": self.n_trials,
            "rejected": self.rejected,
            "elapsed": self.elapsed,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ResultRow":
        metric = {m.column_label: m for m in Metric}[rec["metric"]]

        def num(v):
            return float("nan") if v is None or v == "" else float(v)

        return cls(
            sweep_param=rec["sweep_param"],
            sweep_value=float(rec["sweep_value"]),
            receiver=CombinerKind(rec["receiver"]),
            mode=ImbalanceMode(rec["mode"]),
            metric=metric,
            mean=num(rec["mean"]),
            stderr=num(rec["stderr"]),
            n_trials=int(rec["n_trials"]),
            rejected=int(rec["rejected"]),
            elapsed=float(rec["elapsed"]),
        )


@dataclass(frozen=True)
class ResultTable:
    rows: tuple = ()

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def rounded(self) -> "ResultTable":
        return ResultTable(tuple(r.rounded() for r in self.rows))

    def select(self, receiver=None, mode=None) -> list:
        """Rows of one curve, in sweep order."""
        out = []
        for r in self.rows:
            if receiver is not None and r.receiver is not _parse_kind(receiver):
                continue
            if mode is not None and r.mode is not _parse_mode(mode):
                continue
            out.append(r)
        return out

    def curve(self, receiver, mode) -> tuple:
        """``(sweep_values, means)`` arrays for one (receiver, mode) pair."""
        rows = self.select(receiver, mode)
        return np.array([r.sweep_value for r in rows]), np.array([r.mean for r in rows])


def _cell(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    if isinstance(x, float):
        return f"{x:.{_SIG_DIGITS}g}"
    return str(x)


def _json_num(x: float):
    return None if math.isnan(x) else _sig(x)


def emit_results(table: ResultTable, out, fmt: str = "csv") -> None:
    """Write ``table`` as CSV or JSON to a path or an open text stream.

    Floats carry six significant digits; NaN becomes an empty CSV cell or
    JSON ``null``.  A CSV header is written even for an empty table.
    """
    fmt = fmt.lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format '{fmt}' (use csv or json)")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in table.rows:
            rec = row.as_record()
            w.writerow([_cell(rec[c]) for c in RESULT_COLUMNS])
        text = buf.getvalue()
    else:
        rows = []
        for row in table.rows:
            rec = row.as_record()
            for c in ("sweep_value", "mean", "stderr", "elapsed"):
                rec[c] = _json_num(rec[c])
            rows.append(rec)
        text = json.dumps({"columns": list(RESULT_COLUMNS), "rows": rows}, indent=2) + "\n"
    if hasattr(out, "write"):
        out.write(text)
        return
    path = Path(out)
    try:
        path.write_text(text)
    except OSError as exc:
        raise ResultsIOError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from exc


def read_results(src, fmt: Optional[str] = None) -> ResultTable:
    """Inverse of :func:`emit_results`; ``fmt`` defaults from the file suffix."""
    if hasattr(src, "read"):
        text = src.read()
    else:
        path = Path(src)
        fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
        try:
            text = path.read_text()
        except OSError as exc:
            raise ResultsIOError(exc.errno, f"cannot read results from {path}: {exc.strerror}") from exc
    fmt = (fmt or "csv").lower()
    if fmt == "json":
        recs = json.loads(text)["rows"]
    else:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        recs = list(reader)
    return ResultTable(tuple(ResultRow.from_record(r) for r in recs))


# ---------------------------------------------------------------------------
# Sweep execution
# ---------------------------------------------------------------------------


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"{THREADS_ENV} must be an integer, got '{env}'") from None
        else:
            threads = 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def _sinr_trial(template, kinds, modes, seed):
    """Per-stream linear SINR, shape ``(modes, kinds, S)``, plus rejections."""
    rng = np.random.default_rng(seed)
    rejected = 0
    while True:
        scn = template.draw(rng)
        try:
            return trial_sinr(scn, kinds, modes, MAX_CONDITION), rejected
        except SingularCovarianceError:
            rejected += 1
            if rejected > _MAX_REDRAWS:
                raise


def _ser_trial(template, kinds, modes, seed, n_symbols):
    """Symbol errors, shape ``(modes, kinds)``, symbols per cell, rejections."""
    rng = np.random.default_rng(seed)
    rejected = 0
    while True:
        scn = template.draw(rng)
        try:
            per_mode = []
            for mode in modes:
                s = scn.with_mode(mode)
                ch = effective_channels(s)
                cov = covariance(s, ch)
                per_mode.append([compute_weights(k, s, cov, ch, MAX_CONDITION) for k in kinds])
            break
        except SingularCovarianceError:
            rejected += 1
            if rejected > _MAX_REDRAWS:
                raise
    errors = np.empty((len(modes), len(kinds)), dtype=np.int64)
    for i, mode in enumerate(modes):
        s = scn.with_mode(mode)
        errors[i] = ser_trial(s, per_mode[i], rng, n_symbols, 16, effective_channels(s))
    return errors, scn.n_streams * n_symbols, rejected


def run_sweep(config: ExperimentConfig, threads: Optional[int] = None) -> ResultTable:
    """Run every (sweep value, trial) and reduce into a :class:`ResultTable`.

    ``threads`` defaults to the ``IQLINK_THREADS`` environment variable, else
    1.  The table is identical for any thread count.
    """
    threads = _resolve_threads(threads)
    kinds = config.receivers
    modes = config.modes
    n_trials = config.n_trials
    templates = [config.template_at(v) for v in config.sweep_values]

    def task(idx):
        si, ti = idx
        seed = derive_trial_seed(config.master_seed, si, ti)
        t0 = time.perf_counter()
        if config.metric is Metric.SINR:
            out = _sinr_trial(templates[si], kinds, modes, seed)
        else:
            out = _ser_trial(templates[si], kinds, modes, seed, config.n_symbols)
        return out, time.perf_counter() - t0

    jobs = [(si, ti) for si in range(len(templates)) for ti in range(n_trials)]
    slots = [[None] * n_trials for _ in templates]
    if threads == 1:
        results = map(task, jobs)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        results = pool.map(task, jobs, chunksize=1)
    try:
        for (si, ti), res in zip(jobs, results):
            slots[si][ti] = res
    finally:
        if threads > 1:
            pool.shutdown(wait=True, cancel_futures=True)

    rows = []
    for si, value in enumerate(config.sweep_values):
        elapsed = float(sum(res[1] for res in slots[si]))
        if config.metric is Metric.SINR:
            vals = np.stack([res[0][0] for res in slots[si]])  # (trials, modes, kinds, S)
            rejected = sum(res[0][1] for res in slots[si])
            for i, mode in enumerate(modes):
                for j, kind in enumerate(kinds):
                    _, mean, se, _ = summarise_sinr(vals[:, i, j, :], config.db_average)
                    rows.append(ResultRow(config.sweep_param, float(value), kind, mode, config.metric,
                                          mean, se, n_trials, rejected, elapsed))
        else:
            errs = np.stack([res[0][0] for res in slots[si]])  # (trials, modes, kinds)
            per_trial = slots[si][0][0][1]
            rejected = sum(res[0][2] for res in slots[si])
            for i, mode in enumerate(modes):
                for j, kind in enumerate(kinds):
                    acc = SerResult()
                    for e in errs[:, i, j]:
                        acc.add(int(e), per_trial)
                    rows.append(ResultRow(config.sweep_param, float(value), kind, mode, config.metric,
                                          acc.ser, acc.stderr, n_trials, rejected, elapsed))
    return ResultTable(tuple(rows))

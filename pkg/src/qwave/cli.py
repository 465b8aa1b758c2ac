"""Batch front-end: parse run configurations, execute protocols, write reports.

Reports serialize to a canonical JSON form (sorted keys, floats printed
with 17 significant digits) so identical configurations produce
byte-identical files. CSV output flattens the same content to one row per
named quantity. Exit codes: 0 success, 2 configuration error, 3 protocol
error, 4 I/O error. Set QWAVE_LOG=debug|info|warning for logging.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import click
import numpy as np

from . import protocols
from .errors import ConfigError, SimulationError
from .protocols import ExperimentReport

logger = logging.getLogger("qwave")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROTOCOL = 3
EXIT_IO = 4


# ---------------------------------------------------------------------------
# experiment registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # "float" | "int" | "complex" | "choice" | "float_list"
    required: bool = True
    default: object = None
    choices: tuple[str, ...] = ()
    help: str = ""

    def parse(self, raw):
        try:
            if self.kind == "float":
                return float(raw)
            if self.kind == "int":
                value = int(raw)
                return value
            if self.kind == "complex":
                z = complex(str(raw).replace(" ", ""))
                return z
            if self.kind == "choice":
                value = str(raw).lower()
                if value not in self.choices:
                    raise ValueError(f"must be one of {self.choices}")
                return value
            if self.kind == "float_list":
                if isinstance(raw, (list, tuple)):
                    return [float(x) for x in raw]
                return [float(x) for x in str(raw).split(",") if x.strip()]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"parameter {self.name!r}: {exc}") from exc
        raise ConfigError(f"parameter {self.name!r}: unknown kind {self.kind!r}")

    def schema(self) -> dict:
        entry = {"type": self.kind, "required": self.required}
        if not self.required:
            entry["default"] = self.default
        if self.choices:
            entry["choices"] = list(self.choices)
        return entry


@dataclass(frozen=True)
class ExperimentDef:
    name: str
    runner: Callable[..., ExperimentReport]
    params: tuple[ParamSpec, ...]
    uses_shots: bool
    uses_seed: bool
    description: str
    topic: str

    def run(self, params: dict, shots: int, seed: int) -> ExperimentReport:
        kwargs = dict(params)
        if self.uses_shots:
            kwargs["shots"] = shots
        if self.uses_seed:
            kwargs["seed"] = seed
        return self.runner(**kwargs)


EXPERIMENTS: dict[str, ExperimentDef] = {}


def _register(defn: ExperimentDef) -> None:
    EXPERIMENTS[defn.name] = defn


_register(ExperimentDef(
    name="photon-swap",
    runner=protocols.photon_swap_experiment,
    params=(ParamSpec("phi", "float", help="relative phase of the split photon"),),
    uses_shots=True,
    uses_seed=True,
    description="Swap a split single photon onto two remote two-level atoms "
                "and read the phase out of transverse-basis coincidences.",
    topic="single-particle entanglement correlations",
))
_register(ExperimentDef(
    name="rabi",
    runner=protocols.rabi_rotation,
    params=(
        ParamSpec("alpha", "complex", help="coherent drive amplitude"),
        ParamSpec("cutoff", "int", help="field occupation cutoff"),
        ParamSpec("times", "float_list", required=False, default=None,
                  help="comma-separated times; defaults to a quarter-period grid"),
        ParamSpec("tail_bound", "float", required=False, default=1e-7,
                  help="allowed occupation tail above the cutoff"),
    ),
    uses_shots=False,
    uses_seed=False,
    description="Coherent-field-driven rotation of a two-level system vs the "
                "classical rotation formula.",
    topic="coherent-state phase reference",
))
_register(ExperimentDef(
    name="bell-chain",
    runner=protocols.bell_chain,
    params=(ParamSpec("n", "int", help="half the number of chained relations"),),
    uses_shots=True,
    uses_seed=True,
    description="Chained singlet anti-correlations against exhaustively "
                "enumerated deterministic local assignments.",
    topic="nonlocal correlations without local causes",
))
_register(ExperimentDef(
    name="aux-phase",
    runner=protocols.aux_particle_phase,
    params=(
        ParamSpec("phi", "float", help="phase of the test particle"),
        ParamSpec("statistics", "choice", choices=("boson", "fermion"),
                  help="particle statistics"),
    ),
    uses_shots=True,
    uses_seed=True,
    description="Phase readout from local correlations given an auxiliary "
                "identical particle with known phase.",
    topic="auxiliary-particle phase estimation",
))
_register(ExperimentDef(
    name="fermion-nogo",
    runner=protocols.fermion_nogo,
    params=(),
    uses_shots=False,
    uses_seed=True,
    description="Quadrature commutators, the fermion-pair loophole and the "
                "signaling cost of pretending fermionic quadratures are local.",
    topic="fermionic phase obstruction",
))
_register(ExperimentDef(
    name="coherent-factorization",
    runner=protocols.coherent_factorization,
    params=(
        ParamSpec("alpha", "complex", help="delocalized-mode amplitude"),
        ParamSpec("cutoff", "int", help="per-mode occupation cutoff"),
        ParamSpec("tail_bound", "float", required=False, default=1e-8,
                  help="allowed occupation tail above the cutoff"),
    ),
    uses_shots=False,
    uses_seed=False,
    description="A delocalized-mode coherent state equals a product of local "
                "coherent states: entanglement-free phase reference.",
    topic="coherent-state phase reference",
))
_register(ExperimentDef(
    name="collective-chain",
    runner=protocols.collective_chain,
    params=(ParamSpec("phi", "float", help="phase of the split electron"),),
    uses_shots=True,
    uses_seed=True,
    description="Pair-annihilation and post-selection chain transferring a "
                "split electron's phase to a positron and then to photons "
                "with a known phase.",
    topic="collective measurements and post-selection",
))
_register(ExperimentDef(
    name="gauge-check",
    runner=protocols.ab_gauge_check,
    params=(
        ParamSpec("phi", "float", help="phase of the test particle"),
        ParamSpec("kick", "float", help="phase kick applied at site B"),
    ),
    uses_shots=True,
    uses_seed=True,
    description="Correlations are unchanged when a potential pulse kicks "
                "every charge at one site; kicking the test particle alone "
                "shifts the effective phase.",
    topic="gauge invariance of phase correlations",
))


def list_experiments() -> list[dict]:
    """Machine-readable catalog of the registered experiments."""
    catalog = []
    for name in sorted(EXPERIMENTS):
        defn = EXPERIMENTS[name]
        catalog.append({
            "name": defn.name,
            "description": defn.description,
            "topic": defn.topic,
            "uses_shots": defn.uses_shots,
            "uses_seed": defn.uses_seed,
            "params": {p.name: p.schema() for p in defn.params},
        })
    return catalog


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """One experiment invocation: raw parameters plus shots, seed and output."""

    experiment: str
    params: dict = field(default_factory=dict)
    shots: int = 0
    seed: int | None = None
    output_path: str | None = None
    format: str = "json"

    def resolve(self) -> tuple[ExperimentDef, dict]:
        """Validate against the registry and parse parameter types."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; "
                f"known: {sorted(EXPERIMENTS)}"
            )
        defn = EXPERIMENTS[self.experiment]
        schema = {p.name: p for p in defn.params}
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ConfigError(
                f"experiment {self.experiment!r} does not take parameters "
                f"{unknown}; schema: {sorted(schema)}"
            )
        parsed = {}
        for pname, pspec in schema.items():
            if pname in self.params and self.params[pname] is not None:
                parsed[pname] = pspec.parse(self.params[pname])
            elif pspec.required:
                raise ConfigError(
                    f"experiment {self.experiment!r} requires parameter {pname!r}"
                )
            elif pspec.default is not None:
                parsed[pname] = pspec.default
        if self.seed is None:
            raise ConfigError("seed is required (no wall-clock default)")
        if self.shots is None or self.shots < 0:
            raise ConfigError("shots must be >= 0")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        return defn, parsed


def run(config: RunConfig) -> int:
    """Execute one configuration; returns the process exit code."""
    try:
        defn, params = config.resolve()
    except ConfigError as exc:
        _emit_error("ConfigError", EXIT_CONFIG, str(exc))
        return EXIT_CONFIG
    logger.info("running %s params=%s shots=%s seed=%s",
                config.experiment, params, config.shots, config.seed)
    try:
        report = defn.run(params, config.shots, config.seed)
    except (SimulationError, ValueError) as exc:
        _emit_error(type(exc).__name__, EXIT_PROTOCOL, str(exc))
        return EXIT_PROTOCOL
    report.seed = config.seed
    if config.format == "csv":
        text = render_csv(report)
    else:
        text = canonical_json(report.to_dict()) + "\n"
    try:
        if config.output_path:
            with open(config.output_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        _emit_error("IoError", EXIT_IO, str(exc))
        return EXIT_IO
    return EXIT_OK


def _emit_error(err_type: str, code: int, message: str) -> None:
    sys.stderr.write(
        canonical_json({"error": {"type": err_type, "code": code,
                                  "message": message}}) + "\n"
    )


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------

def _format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("reports must not contain NaN or infinities")
    return f"{x:.17g}"


def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits.

    Accepts numpy scalars alongside native Python types; everything else
    is rejected rather than guessed at.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            rendered = canonical_json(obj[key], indent + 1)
            items.append(f"{inner}{json.dumps(str(key))}: {rendered}")
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + canonical_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render_csv(report: ExperimentReport) -> str:
    """One row per named quantity: kind,name,value,count."""
    rows = ["kind,name,value,count"]
    rows.append(f"meta,experiment,{report.experiment},")
    rows.append(f"meta,seed,{report.seed},")
    rows.append(f"meta,shots,{report.shots},")
    rows.append(f"meta,pass,{str(report.passed).lower()},")
    for name in sorted(report.params):
        value = report.params[name]
        if isinstance(value, float):
            value = _format_float(value)
        elif isinstance(value, list):
            value = '"' + ";".join(_format_float(float(v)) for v in value) + '"'
        rows.append(f"param,{name},{value},")
    for name in sorted(report.analytic):
        rows.append(f"analytic,{name},{_format_float(report.analytic[name])},")
    for name in sorted(report.empirical):
        stat = report.empirical[name]
        rows.append(
            f"empirical,{name},{_format_float(stat.value)},{stat.count}"
        )
    for name, gap in sorted(report.discrepancies.items()):
        rows.append(f"discrepancy,{name},{_format_float(gap)},")
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _configure_logging() -> None:
    level = os.environ.get("QWAVE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")


@click.group()
def main():
    """Exact simulator of split-particle nonlocality experiments."""
    _configure_logging()


@main.command(name="run")
@click.argument("experiment")
@click.option("--phi", default=None, help="relative phase (radians)")
@click.option("--n", default=None, help="chain length parameter")
@click.option("--alpha", default=None, help="coherent amplitude (complex ok)")
@click.option("--cutoff", default=None, help="bosonic occupation cutoff")
@click.option("--kick", default=None, help="phase kick (radians)")
@click.option("--statistics", default=None, help="boson or fermion")
@click.option("--times", default=None, help="comma-separated times")
@click.option("--tail-bound", "tail_bound", default=None,
              help="allowed coherent tail mass")
@click.option("--shots", default=0, type=int, show_default=True,
              help="number of sampled shots (0 = analytic only)")
@click.option("--seed", default=None, type=int, help="experiment seed (required)")
@click.option("--out", "out", default=None, help="output file (default stdout)")
@click.option("--format", "fmt", default="json",
              type=click.Choice(["json", "csv"]), show_default=True)
def run_command(experiment, shots, seed, out, fmt, **raw_params):
    """Run one experiment and write its report."""
    params = {k: v for k, v in raw_params.items() if v is not None}
    config = RunConfig(
        experiment=experiment,
        params=params,
        shots=shots,
        seed=seed,
        output_path=out,
        format=fmt,
    )
    sys.exit(run(config))


@main.command(name="list")
def list_command():
    """Print the machine-readable experiment catalog."""
    sys.stdout.write(canonical_json(list_experiments()) + "\n")


@main.command(name="batch")
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--jobs", default=1, type=int, show_default=True,
              help="parallel runs")
def batch_command(config_file, jobs):
    """Run every configuration in a JSON array file."""
    try:
        with open(config_file, "r", encoding="utf-8") as fh:
            entries = json.load(fh)
        if not isinstance(entries, list):
            raise ValueError("batch file must hold a JSON array")
    except (OSError, ValueError) as exc:
        _emit_error("ConfigError", EXIT_CONFIG, f"bad batch file: {exc}")
        sys.exit(EXIT_CONFIG)

    configs = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "experiment" not in entry:
            _emit_error("ConfigError", EXIT_CONFIG,
                        f"batch entry {i} must be an object with 'experiment'")
            sys.exit(EXIT_CONFIG)
        configs.append(RunConfig(
            experiment=entry["experiment"],
            params=entry.get("params", {}),
            shots=entry.get("shots", 0),
            seed=entry.get("seed"),
            output_path=entry.get("out"),
            format=entry.get("format", "json"),
        ))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            codes = list(pool.map(run, configs))
    else:
        codes = [run(c) for c in configs]
    for config, code in zip(configs, codes):
        status = "ok" if code == EXIT_OK else f"failed({code})"
        click.echo(f"{config.experiment}: {status}", err=True)
    failures = [c for c in codes if c != EXIT_OK]
    sys.exit(failures[0] if failures else EXIT_OK)


if __name__ == "__main__":
    main()

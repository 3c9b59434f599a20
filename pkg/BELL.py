"""
Program name: BELL.py
Description: BELLsim command-line front end. Sweeps the Bell-inequality
             engine over gain, efficiency and noise and writes each figure's
             data as CSV with '#'-prefixed metadata.
             Architecture: Async command modules, sqlite-backed sweep cache,
             optional process-pool parallelism.
Author: pwnedByJT
Updated: October 18, 2026
"""

import argparse
import asyncio
import importlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Any, Callable, Sequence

import aiosqlite
from dotenv import dotenv_values, load_dotenv

# Ensure repo root is on sys.path so 'engine' and 'commands' packages resolve
# when running as `python BELL.py` from any directory.
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from engine.bell import SettingsQuad
from engine.errors import BellSimError, BghzTruncationError, ContractViolation
from engine.fock import warm_transforms
from engine.sweep import run_sweep

load_dotenv()

# --- CONFIGURATION ---
class Config:
    BASE_DIR = os.path.dirname(os.path.abspath(__file__))
    VERSION = "1.0.0"
    RESULTS_DB = os.getenv("BELLSIM_RESULTS_DB", os.path.join(BASE_DIR, "sweep_results.db"))
    DEFAULT_JOBS = int(os.getenv("BELLSIM_JOBS", "1"))

    CHSH_CUTOFF_B = 100
    CSV_DIGITS = 17

    COMMAND_MODULES = (
        "commands.chsh_cmd",
        "commands.sector_cmd",
        "commands.robustness_cmd",
        "commands.ch_cmd",
        "commands.mermin_cmd",
        "commands.norm_demo_cmd",
    )


# --- SWEEP CONFIG ---
KINDS = ("sign", "normalized", "standard", "projector", "rate")
INEQUALITIES = ("chsh", "mermin")

# fields that only change how a sweep runs, never its numbers
_RUN_FIELDS = ("command", "out", "jobs", "db", "use_cache", "quiet")


@dataclass(frozen=True)
class SweepConfig:
    command: str
    gamma_min: float = 0.05
    gamma_max: float = 2.5
    gamma_step: float = 0.05
    cutoff: int | None = None
    cutoff_b: int = Config.CHSH_CUTOFF_B
    eta: float = 1.0
    q: float = 1.0
    noise_gamma: float | None = None
    kind: str = "sign"
    inequality: str = "chsh"
    settings: tuple[float, float, float, float] | None = None
    n_max: int = 100
    blocks: int = 12
    out: str | None = None
    jobs: int = Config.DEFAULT_JOBS
    db: str = Config.RESULTS_DB
    use_cache: bool = True
    quiet: bool = False

    def __post_init__(self):
        if not self.gamma_step > 0:
            raise ContractViolation(f"gamma-step must be positive, got {self.gamma_step}")
        if self.gamma_min < 0 or self.gamma_max < self.gamma_min:
            raise ContractViolation(f"Need 0 <= gamma-min <= gamma-max, got [{self.gamma_min}, {self.gamma_max}]")
        for name in ("cutoff", "cutoff_b", "n_max", "blocks"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ContractViolation(f"{name.replace('_', '-')} must be >= 1, got {value}")
        if not 0.0 <= self.eta <= 1.0:
            raise ContractViolation(f"eta must lie in [0, 1], got {self.eta}")
        if not 0.0 <= self.q <= 1.0:
            raise ContractViolation(f"q must lie in [0, 1], got {self.q}")
        if self.noise_gamma is not None and self.noise_gamma < 0:
            raise ContractViolation(f"noise-gamma must be >= 0, got {self.noise_gamma}")
        if self.kind not in KINDS:
            raise ContractViolation(f"Unknown kind '{self.kind}'. Supported: {', '.join(KINDS)}")
        if self.inequality not in INEQUALITIES:
            raise ContractViolation(f"Unknown inequality '{self.inequality}'. Supported: {', '.join(INEQUALITIES)}")
        if self.jobs < 1:
            raise ContractViolation(f"jobs must be >= 1, got {self.jobs}")

    @property
    def quad(self) -> SettingsQuad:
        return SettingsQuad.from_angles(*self.settings) if self.settings else SettingsQuad()

    def parameters(self) -> dict[str, Any]:
        """Value-affecting parameters, in field order."""
        return {k: v for k, v in asdict(self).items() if k not in _RUN_FIELDS}

    def cache_key(self) -> str:
        return json.dumps({"version": Config.VERSION, **self.parameters()}, sort_keys=True)


def _parse_settings(text: str) -> tuple[float, float, float, float]:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != 4:
        raise ContractViolation(f"settings needs four angles θ,θ′,φ,φ′ in radians, got '{text}'")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ContractViolation(f"settings angles must be numbers, got '{text}'")


_FIELD_TYPES: dict[str, type] = {
    "gamma_min": float, "gamma_max": float, "gamma_step": float,
    "cutoff": int, "cutoff_b": int, "n_max": int, "blocks": int, "jobs": int,
    "eta": float, "q": float, "noise_gamma": float,
}


def _truthy(raw: str) -> bool:
    return raw.strip().lower() in ("1", "true", "yes", "on")


def _coerce(name: str, raw: Any) -> Any:
    if raw is None or not isinstance(raw, str):
        return raw
    if name == "settings":
        return _parse_settings(raw)
    if name in ("use_cache", "quiet"):
        return _truthy(raw)
    if name in _FIELD_TYPES:
        try:
            return _FIELD_TYPES[name](raw)
        except ValueError:
            raise ContractViolation(f"Config value for '{name}' is not a number: '{raw}'")
    return raw.strip()


def read_config_file(path: str) -> dict[str, Any]:
    """KEY=value file; keys are the upper-cased flag names (GAMMA_MIN, CUTOFF, NO_CACHE, ...)."""
    if not os.path.isfile(path):
        raise ContractViolation(f"Config file not found: {path}")
    known = {f.name for f in fields(SweepConfig)} - {"command"}
    values = {}
    for key, raw in dotenv_values(path).items():
        name = key.strip().lower().replace("-", "_")
        if raw is None:
            raise ContractViolation(f"Config key '{key}' in {path} has no value")
        if name == "no_cache":
            values["use_cache"] = not _truthy(raw or "")
            continue
        if name not in known:
            raise ContractViolation(f"Unknown config key '{key}' in {path}")
        values[name] = _coerce(name, raw)
    return values


def build_config(command_name: str, defaults: dict[str, Any], flags: dict[str, Any],
                 config_path: str | None = None) -> SweepConfig:
    """Command defaults < config file < command-line flags."""
    merged: dict[str, Any] = dict(defaults)
    if config_path:
        merged.update(read_config_file(config_path))
    merged.update({k: _coerce(k, v) for k, v in flags.items() if v is not None})
    return SweepConfig(command=command_name, **merged)


# --- DATABASE ENGINE ---
class DatabaseEngine:
    def __init__(self, db_path):
        self.db_path = db_path

    async def initialize(self):
        async with aiosqlite.connect(self.db_path) as db:
            await db.execute('''CREATE TABLE IF NOT EXISTS sweep_points
                                (id INTEGER PRIMARY KEY AUTOINCREMENT, command TEXT NOT NULL,
                                config_key TEXT NOT NULL, point TEXT NOT NULL, payload TEXT NOT NULL,
                                created_at DATETIME DEFAULT CURRENT_TIMESTAMP)''')
            await db.execute('CREATE INDEX IF NOT EXISTS idx_sweep_lookup ON sweep_points(command, config_key, point)')
            await db.commit()

    async def record_point(self, command: str, config_key: str, point: str, values: Any):
        async with aiosqlite.connect(self.db_path) as db:
            await db.execute("INSERT INTO sweep_points (command, config_key, point, payload) VALUES (?, ?, ?, ?)",
                             (command, config_key, point, json.dumps(values)))
            await db.commit()

    async def get_points(self, command: str, config_key: str) -> dict[str, Any]:
        """point label -> payload; the newest row wins if a point was stored twice."""
        async with aiosqlite.connect(self.db_path) as db:
            db.row_factory = aiosqlite.Row
            async with db.execute(
                "SELECT point, payload FROM sweep_points WHERE command = ? AND config_key = ? ORDER BY id",
                (command, config_key)
            ) as cursor:
                rows = await cursor.fetchall()
                return {r['point']: json.loads(r['payload']) for r in rows}


# --- CSV FACTORY ---
class CsvFactory:
    @staticmethod
    def cell(value: Any) -> str:
        if isinstance(value, bool):
            return str(value).lower()
        if isinstance(value, int):
            return str(value)
        if isinstance(value, float):
            return format(value, f".{Config.CSV_DIGITS}g")
        return str(value)

    @staticmethod
    def render(table, config: SweepConfig) -> str:
        lines = [f"# BELLsim {Config.VERSION}", f"# command={config.command}"]
        for key, value in config.parameters().items():
            if key == "settings" and value is not None:
                value = ";".join(CsvFactory.cell(float(a)) for a in value)
            lines.append(f"# {key}={'none' if value is None else CsvFactory.cell(value)}")
        for key, value in table.meta.items():
            lines.append(f"# {key}={CsvFactory.cell(value)}")
        lines.append(",".join(table.columns))
        for row in table.rows:
            lines.append(",".join(CsvFactory.cell(v) for v in row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
        """Inverse of render: (header metadata, columns, rows of raw cells)."""
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                if value:
                    meta[key] = value
            elif line:
                body.append(line.split(","))
        return meta, (body[0] if body else []), body[1:]


# --- APPLICATION ---
def _point_label(point: Any) -> str:
    return format(point, ".17g") if isinstance(point, float) else str(point)


class App:
    def __init__(self):
        self.commands: dict[str, Any] = {}
        self.db: DatabaseEngine | None = None
        self.quiet = False

    def log(self, tag: str, message: str) -> None:
        if not self.quiet or tag == "ERROR":
            print(f"[{tag}] {message}", file=sys.stderr)

    async def add_command(self, command) -> None:
        self.commands[command.name] = command

    async def setup_hook(self) -> None:
        for module_name in Config.COMMAND_MODULES:
            module = importlib.import_module(module_name)
            await module.setup(self)

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--gamma-min", type=float)
        common.add_argument("--gamma-max", type=float)
        common.add_argument("--gamma-step", type=float)
        common.add_argument("--cutoff", type=int, help="photon-number cutoff per beam")
        common.add_argument("--cutoff-b", type=int, help="second cutoff for nonvacuum-curve")
        common.add_argument("--eta", type=float, help="detector efficiency")
        common.add_argument("--q", type=float, help="signal fraction of the white-noise mixture")
        common.add_argument("--noise-gamma", type=float, help="gain of the noise states (default: signal gain)")
        common.add_argument("--kind", choices=KINDS)
        common.add_argument("--inequality", choices=INEQUALITIES)
        common.add_argument("--settings", help="θ,θ′,φ,φ′ in radians")
        common.add_argument("--n-max", type=int)
        common.add_argument("--blocks", type=int)
        common.add_argument("--out", metavar="PATH")
        common.add_argument("--jobs", type=int, metavar="N")
        common.add_argument("--config", metavar="PATH")
        common.add_argument("--db", metavar="PATH")
        common.add_argument("--no-cache", dest="use_cache", action="store_false", default=None)
        common.add_argument("--quiet", action="store_true", default=None)

        parser = argparse.ArgumentParser(prog="BELL.py", description="BELLsim: Bell-inequality sweeps for bright squeezed light.")
        sub = parser.add_subparsers(dest="command", required=True)
        for name, command in self.commands.items():
            sub.add_parser(name, parents=[common], help=command.description, description=command.description)
        return parser

    async def sweep(self, config: SweepConfig, fn: Callable[[Any], Any], points: Sequence[Any],
                    warm_cutoff: int | None = None) -> list:
        """Cached, optionally parallel map of `fn` over `points`, returned in point order."""
        key = config.cache_key()
        labels = [_point_label(p) for p in points]
        stored = await self.db.get_points(config.command, key) if self.db else {}
        results = {label: stored[label] for label in labels if label in stored}
        missing = [p for p, label in zip(points, labels) if label not in results]

        self.log("SWEEP", f"{config.command}: {len(points)} points, {len(points) - len(missing)} cached, jobs={config.jobs}")
        if missing and config.jobs > 1 and warm_cutoff:
            built = warm_transforms(warm_cutoff, config.quad.all_settings())
            self.log("CACHE", f"warmed {built} transforms up to n={warm_cutoff}")

        computed = await run_sweep(fn, missing, config.jobs)
        for point, values in zip(missing, computed):
            label = _point_label(point)
            results[label] = values
            if self.db:
                await self.db.record_point(config.command, key, label, values)
        return [results[label] for label in labels]

    async def main(self, argv: Sequence[str]) -> int:
        await self.setup_hook()
        parser = self.build_parser()
        try:
            ns = parser.parse_args(list(argv))
        except SystemExit as exc:
            return int(exc.code or 0)

        command = self.commands[ns.command]
        flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
        try:
            config = build_config(command.name, command.defaults, flags, ns.config)
            self.quiet = config.quiet
            if config.use_cache:
                self.db = DatabaseEngine(config.db)
                await self.db.initialize()

            table = await command.run(config)
            text = CsvFactory.render(table, config)
            if config.out:
                with open(config.out, "w", encoding="utf-8", newline="") as f:
                    f.write(text)
                self.log("DONE", f"{command.name}: {len(table.rows)} rows -> {config.out}")
            else:
                sys.stdout.write(text)
        except BghzTruncationError as e:
            self.log("ERROR", f"{command.name}: {e.message}")
            return 3
        except BellSimError as e:
            self.log("ERROR", f"{command.name}: {e.message}")
            return 2
        return 0

    def run(self, argv: Sequence[str]) -> int:
        return asyncio.run(self.main(argv))


if __name__ == "__main__":
    sys.exit(App().run(sys.argv[1:]))

"""
tests/test_commands.py
Config layer, DatabaseEngine, CSV output and end-to-end CLI runs for BELLsim.
Every CLI run writes into tmp_path; nothing touches the default results DB.
"""

import json
import math
import os

import pytest

from BELL import (
    App,
    Config,
    CsvFactory,
    DatabaseEngine,
    SweepConfig,
    build_config,
    read_config_file,
)
from commands.base import Table, gamma_grid
from engine.errors import ContractViolation


# ---------------------------------------------------------------------------
# HELPERS
# ---------------------------------------------------------------------------

def run_cli(*argv: str) -> int:
    return App().run(list(argv))


def read_csv(path) -> tuple[dict, list, list]:
    with open(path, encoding="utf-8") as f:
        return CsvFactory.parse(f.read())


# ===========================================================================
# CONFIG
# ===========================================================================

class TestConfig:
    def test_paths_are_absolute(self):
        assert os.path.isabs(Config.BASE_DIR)

    def test_command_modules_are_importable_names(self):
        assert all(name.startswith("commands.") for name in Config.COMMAND_MODULES)

    def test_csv_precision(self):
        assert Config.CSV_DIGITS == 17


class TestSweepConfig:
    @pytest.mark.parametrize("overrides", [
        {"gamma_step": 0.0},
        {"gamma_min": 1.0, "gamma_max": 0.5},
        {"eta": 1.5},
        {"q": -0.1},
        {"cutoff": 0},
        {"kind": "bogus"},
        {"inequality": "ch"},
        {"jobs": 0},
    ])
    def test_invalid_values_raise(self, overrides):
        with pytest.raises(ContractViolation):
            SweepConfig(command="chsh-curve", **overrides)

    def test_cache_key_ignores_run_fields(self, tmp_path):
        a = SweepConfig(command="chsh-curve", cutoff=20, jobs=1, out=None)
        b = SweepConfig(command="chsh-curve", cutoff=20, jobs=4, out=str(tmp_path / "x.csv"), quiet=True)
        assert a.cache_key() == b.cache_key()

    def test_cache_key_tracks_values(self):
        a = SweepConfig(command="chsh-curve", cutoff=20)
        b = SweepConfig(command="chsh-curve", cutoff=21)
        assert a.cache_key() != b.cache_key()

    def test_cache_key_carries_version(self):
        key = json.loads(SweepConfig(command="chsh-curve").cache_key())
        assert key["version"] == Config.VERSION

    def test_default_quad(self):
        quad = SweepConfig(command="chsh-curve").quad
        assert quad.phi.theta == pytest.approx(math.pi / 8)

    def test_gamma_grid_is_inclusive(self):
        config = SweepConfig(command="chsh-curve", gamma_min=0.1, gamma_max=0.3, gamma_step=0.1)
        assert gamma_grid(config) == [0.1, 0.2, 0.3]


class TestConfigFile:
    def test_reads_known_keys(self, tmp_path):
        path = tmp_path / "sweep.env"
        path.write_text("CUTOFF=20\nGAMMA_MAX=0.3\nSETTINGS=0,0.7,0.3,-0.3\nNO_CACHE=1\n")
        values = read_config_file(str(path))
        assert values["cutoff"] == 20
        assert values["gamma_max"] == 0.3
        assert values["settings"] == (0.0, 0.7, 0.3, -0.3)
        assert values["use_cache"] is False

    def test_unknown_key_raises(self, tmp_path):
        path = tmp_path / "sweep.env"
        path.write_text("CUTOF=20\n")
        with pytest.raises(ContractViolation):
            read_config_file(str(path))

    def test_key_without_value_raises(self, tmp_path):
        path = tmp_path / "sweep.env"
        path.write_text("GAMMA_MIN\nCUTOFF=20\n")
        with pytest.raises(ContractViolation):
            read_config_file(str(path))

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(ContractViolation):
            read_config_file(str(tmp_path / "nope.env"))

    def test_precedence_defaults_file_flags(self, tmp_path):
        path = tmp_path / "sweep.env"
        path.write_text("CUTOFF=20\nGAMMA_MAX=0.3\n")
        config = build_config("chsh-curve", {"cutoff": 150, "gamma_min": 0.2},
                              {"cutoff": 10, "eta": None}, str(path))
        assert config.cutoff == 10
        assert config.gamma_max == 0.3
        assert config.gamma_min == 0.2
        assert config.eta == 1.0

    def test_bad_settings_raise(self):
        with pytest.raises(ContractViolation):
            build_config("chsh-curve", {}, {"settings": "0,1,2"})


# ===========================================================================
# DATABASE ENGINE: temp file, each method opens its own connection
# ===========================================================================

class TestDatabaseEngine:

    @pytest.fixture
    def db_path(self, tmp_path):
        return str(tmp_path / "sweeps.db")

    async def test_initialize_creates_table_and_index(self, db_path):
        import aiosqlite
        db = DatabaseEngine(db_path)
        await db.initialize()
        async with aiosqlite.connect(db_path) as conn:
            async with conn.execute(
                "SELECT name FROM sqlite_master WHERE name IN ('sweep_points', 'idx_sweep_lookup')"
            ) as cur:
                names = {row[0] for row in await cur.fetchall()}
        assert names == {"sweep_points", "idx_sweep_lookup"}

    async def test_record_and_get_points(self, db_path):
        db = DatabaseEngine(db_path)
        await db.initialize()
        await db.record_point("chsh-curve", "k1", "0.5", [0.5, 2.1, 1.9, 0.6])
        points = await db.get_points("chsh-curve", "k1")
        assert points == {"0.5": [0.5, 2.1, 1.9, 0.6]}

    async def test_points_are_scoped_by_key(self, db_path):
        db = DatabaseEngine(db_path)
        await db.initialize()
        await db.record_point("chsh-curve", "k1", "0.5", [1.0])
        assert await db.get_points("chsh-curve", "k2") == {}
        assert await db.get_points("ch-curve", "k1") == {}

    async def test_newest_row_wins(self, db_path):
        db = DatabaseEngine(db_path)
        await db.initialize()
        await db.record_point("chsh-curve", "k1", "0.5", [1.0])
        await db.record_point("chsh-curve", "k1", "0.5", [2.0])
        assert (await db.get_points("chsh-curve", "k1"))["0.5"] == [2.0]

    async def test_non_finite_payloads_survive(self, db_path):
        db = DatabaseEngine(db_path)
        await db.initialize()
        await db.record_point("critical-noise", "k1", "1.5", [1.5, 0.7, math.nan])
        stored = (await db.get_points("critical-noise", "k1"))["1.5"]
        assert stored[1] == 0.7
        assert math.isnan(stored[2])


# ===========================================================================
# CSV
# ===========================================================================

class TestCsvFactory:
    def test_float_cells_use_seventeen_digits(self):
        assert CsvFactory.cell(0.1) == "0.10000000000000001"
        assert CsvFactory.cell(3) == "3"
        assert CsvFactory.cell(math.inf) == "inf"

    def test_render_then_parse(self):
        config = SweepConfig(command="chsh-curve", cutoff=20)
        table = Table(["gamma", "lhs_sign"], [[0.5, 2.25]], {"tail_max": 0.0})
        meta, columns, rows = CsvFactory.parse(CsvFactory.render(table, config))
        assert meta["command"] == "chsh-curve"
        assert meta["cutoff"] == "20"
        assert meta["settings"] == "none"
        assert meta["tail_max"] == "0"
        assert "jobs" not in meta
        assert columns == ["gamma", "lhs_sign"]
        assert rows == [["0.5", "2.25"]]


# ===========================================================================
# CLI: end-to-end runs into tmp_path
# ===========================================================================

class TestCli:
    async def test_setup_hook_registers_every_command(self):
        app = App()
        await app.setup_hook()
        assert set(app.commands) == {
            "chsh-curve", "nonvacuum-curve", "per-sector", "block-average",
            "critical-efficiency", "critical-noise", "ch-curve", "mermin-curve", "norm-demo",
        }

    def test_norm_demo(self, tmp_path):
        out = tmp_path / "norm.csv"
        assert run_cli("norm-demo", "--out", str(out), "--no-cache", "--quiet") == 0
        meta, columns, rows = read_csv(out)
        assert meta["state"] == "|3_H,0_V>"
        assert columns[-1] == "norm"
        norms = [float(r[-1]) for r in rows]
        assert norms[0] == pytest.approx(1.0, abs=1e-12)
        assert norms[1] == pytest.approx(1.25, abs=1e-9)
        assert norms[2] == pytest.approx(1.0, abs=1e-9)

    def test_chsh_curve_small_sweep(self, tmp_path):
        out = tmp_path / "chsh.csv"
        code = run_cli("chsh-curve", "--gamma-min", "0.5", "--gamma-max", "0.6", "--gamma-step", "0.1",
                       "--cutoff", "20", "--eta", "0.95", "--out", str(out), "--no-cache", "--quiet")
        assert code == 0
        meta, columns, rows = read_csv(out)
        assert columns == ["gamma", "lhs_sign", "lhs_normalized", "vacuum_term"]
        assert [float(r[0]) for r in rows] == [0.5, 0.6]
        assert meta["cutoff"] == "20"
        assert meta["eta"] == "0.94999999999999996"
        assert "gamma_tr_sign" not in meta

    def test_output_is_deterministic(self, tmp_path):
        args = ("per-sector", "--n-max", "3", "--no-cache", "--quiet")
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(*args, "--out", str(first)) == 0
        assert run_cli(*args, "--out", str(second)) == 0
        assert first.read_text() == second.read_text()

    def test_per_sector_singlet_row(self, tmp_path):
        out = tmp_path / "sectors.csv"
        assert run_cli("per-sector", "--n-max", "3", "--out", str(out), "--no-cache", "--quiet") == 0
        _, columns, rows = read_csv(out)
        assert columns == ["n", "chsh_sign", "chsh_normalized", "ch_sign", "parity"]
        assert [r[0] for r in rows] == ["1", "2", "3"]
        assert float(rows[0][1]) == pytest.approx(2 * math.sqrt(2), abs=1e-10)
        assert float(rows[0][1]) == pytest.approx(float(rows[0][2]), abs=1e-12)
        assert [r[4] for r in rows] == ["odd", "even", "odd"]

    def test_cached_rerun_matches(self, tmp_path):
        db = tmp_path / "cache.db"
        args = ("ch-curve", "--gamma-min", "0.2", "--gamma-max", "0.3", "--gamma-step", "0.1",
                "--cutoff", "15", "--eta", "0.9", "--db", str(db), "--quiet")
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(*args, "--out", str(first)) == 0
        assert db.exists()
        assert run_cli(*args, "--out", str(second)) == 0
        assert first.read_text() == second.read_text()

    def test_config_file_feeds_the_run(self, tmp_path):
        config = tmp_path / "sweep.env"
        config.write_text("GAMMA_MIN=0.2\nGAMMA_MAX=0.2\nCUTOFF=10\nETA=0.9\n")
        out = tmp_path / "ch.csv"
        assert run_cli("ch-curve", "--config", str(config), "--cutoff", "12",
                       "--out", str(out), "--no-cache", "--quiet") == 0
        meta, _, rows = read_csv(out)
        assert meta["cutoff"] == "12"
        assert len(rows) == 1

    def test_contract_violation_exit_code(self, tmp_path, capsys):
        code = run_cli("chsh-curve", "--eta", "2", "--out", str(tmp_path / "x.csv"), "--no-cache")
        assert code == 2
        assert "[ERROR]" in capsys.readouterr().err
        assert not (tmp_path / "x.csv").exists()

    def test_unknown_config_key_exit_code(self, tmp_path):
        config = tmp_path / "sweep.env"
        config.write_text("GAMA=1\n")
        assert run_cli("chsh-curve", "--config", str(config), "--no-cache") == 2

    def test_config_key_without_value_exit_code(self, tmp_path):
        config = tmp_path / "sweep.env"
        config.write_text("GAMMA_MIN\n")
        assert run_cli("chsh-curve", "--config", str(config), "--no-cache", "--quiet") == 2

    def test_bad_flag_value_exit_code(self):
        assert run_cli("chsh-curve", "--kind", "bogus") == 2

    def test_bghz_leakage_exit_code(self, tmp_path):
        code = run_cli("mermin-curve", "--gamma-min", "0.5", "--gamma-max", "0.5", "--cutoff", "3",
                       "--out", str(tmp_path / "m.csv"), "--no-cache", "--quiet")
        assert code == 3

    def test_mermin_curve_small_gain(self, tmp_path):
        out = tmp_path / "mermin.csv"
        assert run_cli("mermin-curve", "--gamma-min", "0.05", "--gamma-max", "0.05",
                       "--out", str(out), "--no-cache", "--quiet") == 0
        meta, _, rows = read_csv(out)
        assert float(rows[0][1]) > 2.0
        assert float(meta["leakage_max"]) < 1e-8

    def test_nonvacuum_curve_columns(self, tmp_path):
        from engine.bell import asymptotic_bound
        out = tmp_path / "nv.csv"
        assert run_cli("nonvacuum-curve", "--gamma-min", "0.5", "--gamma-max", "0.5", "--cutoff", "20",
                       "--cutoff-b", "10", "--out", str(out), "--no-cache", "--quiet") == 0
        meta, columns, rows = read_csv(out)
        assert columns == ["gamma", "lhs_nv_cutoff_20", "lhs_nv_cutoff_10", "asymptotic_bound"]
        assert meta["cutoff_b"] == "10"
        assert float(rows[0][3]) == pytest.approx(asymptotic_bound(0.5), abs=1e-15)

    def test_block_average_single_block(self, tmp_path):
        from engine.bell import block_average
        out = tmp_path / "blocks.csv"
        assert run_cli("block-average", "--blocks", "1", "--out", str(out), "--no-cache", "--quiet") == 0
        _, columns, rows = read_csv(out)
        assert columns == ["N", "gamma_1", "gamma_2", "gamma_3", "gamma_inf"]
        assert rows[0][0] == "1"
        assert float(rows[0][4]) == pytest.approx(block_average(1, math.inf), abs=1e-15)

    def test_critical_noise_single_point(self, tmp_path):
        out = tmp_path / "noise.csv"
        assert run_cli("critical-noise", "--gamma-min", "0.1", "--gamma-max", "0.1", "--cutoff", "20",
                       "--out", str(out), "--no-cache", "--quiet") == 0
        _, columns, rows = read_csv(out)
        assert columns == ["gamma", "q_c_sign", "q_c_normalized"]
        assert 0.0 <= float(rows[0][1]) <= 1.0

    def test_critical_efficiency_single_point(self, tmp_path):
        out = tmp_path / "eff.csv"
        assert run_cli("critical-efficiency", "--gamma-min", "0.5", "--gamma-max", "0.5", "--cutoff", "30",
                       "--out", str(out), "--no-cache", "--quiet") == 0
        meta, columns, rows = read_csv(out)
        assert columns == ["gamma", "eta_c_sign", "eta_c_normalized"]
        assert meta["inequality"] == "chsh"
        assert 0.0 < float(rows[0][1]) < 1.0
